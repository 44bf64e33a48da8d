#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kernforge/vocabulary.hpp"

namespace kftest {

// Directory holding tests/data, baked in at configure time.
std::string data_dir();

// (file name, bytes) for every *.krn file under tests/data/<sub>, sorted by name.
std::vector<std::pair<std::string, std::string>> load_dir(const std::string& sub);

// A 64-token vocabulary for exhaustive engine checks. Ids 0 and 1 are the
// BOS/EOS specials; the rest mix single bytes with multi-byte tokens, some
// of which span a field separator or a record end.
kernforge::TokenTable toy_vocab();

}  // namespace kftest
