#pragma once

// Independent reference implementations used to check the library. None of
// these call into the code they are meant to check.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kernforge/rational.hpp"

namespace kftest {

// Full-matrix edit distance over code point sequences.
std::size_t dp_levenshtein(const std::u32string& a, const std::u32string& b);

// 1/d + 1/(2d) + ... + 1/(2^dots d), with the breve handled as d = 1/2.
kernforge::Rational duration_sum(int digits_value, int dots);

// Rebuilds a token by scanning a fixed class table: one output slot per
// class, each filled by repeatedly taking the lowest-ranked remaining
// character of that class.
std::string rank_table_sort(std::string_view token);

// Smallest p with tokens[n-3p..n) periodic in p, by direct comparison of
// the three trailing windows. 0 when none.
std::size_t brute_period(std::span<const int> tokens);

// Adjacent byte-pair counts over a corpus, skipping any pair that touches
// space, TAB or LF.
std::map<std::pair<std::string, std::string>, long long> brute_pair_counts(const std::vector<std::string>& words);

// Membership in the language the constraint engine is meant to accept:
// parseable, all spines terminated, LF-terminated, only **kern spines, no
// comments, and every cell in canonical spelling.
bool in_language(std::string_view text);

// True when some byte suffix turns `text` into a member of the language.
// Bounded search: finish the open cell from a fixed suffix list, pad the
// record with candidate cells, then append one all-"*-" record.
bool has_completion(std::string_view text);

}  // namespace kftest
