#pragma once

#include <string>
#include <string_view>

namespace kernforge {

// Strict validation: rejects overlong forms, surrogates and code points past U+10FFFF.
bool is_valid_utf8(std::string_view bytes);

// Decodes to code points; each byte of an invalid sequence becomes its own code point.
std::u32string decode_utf8_lenient(std::string_view bytes);

}  // namespace kernforge
