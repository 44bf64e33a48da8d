#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace kernforge {

// Id -> byte string table consumed by the constraint engine and the decode
// harness. Tokens with empty bytes are special (BOS/EOS); only eos_id may
// ever be emitted among them.
struct TokenTable {
    std::vector<std::string> tokens;
    int eos_id = -1;

    std::size_t size() const { return tokens.size(); }
};

}  // namespace kernforge
