#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kernforge/vocabulary.hpp"

namespace kernforge::bpe {

inline constexpr int kBosId = 0;
inline constexpr int kEosId = 1;
inline constexpr int kFirstByteId = 2;
inline constexpr std::size_t kBaseSize = 2 + 256;
inline constexpr std::size_t kDefaultVocabSize = 3000;

// Space, TAB and LF never take part in a merge.
constexpr bool is_boundary(unsigned char b) { return b == ' ' || b == '\t' || b == '\n'; }

class BpeVocab {
public:
    // Specials and the 256 byte tokens, no merges.
    explicit BpeVocab(std::size_t vocab_size = kDefaultVocabSize);

    std::size_t size() const { return tokens_.size(); }
    std::size_t vocab_size() const { return vocab_size_; }
    const std::string& token_bytes(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::pair<int, int>>& merges() const { return merges_; }
    static int byte_id(unsigned char b) { return kFirstByteId + b; }

    // Appends a merge; the new token id is size() before the call.
    int add_merge(int left, int right);

    std::vector<int> encode(std::string_view text) const;
    // Specials decode to nothing. Throws UnknownId.
    std::string decode(std::span<const int> ids) const;

    TokenTable token_table() const;

    std::string to_json() const;
    static BpeVocab from_json(std::string_view json);

    bool operator==(const BpeVocab&) const = default;

private:
    void encode_word(std::string_view word, std::vector<int>& out) const;

    std::size_t vocab_size_;
    std::vector<std::string> tokens_;
    std::vector<std::pair<int, int>> merges_;
    std::map<std::pair<int, int>, int> merge_rank_;
};

// Greedy most-frequent-pair training over words delimited by boundary
// bytes. Ties break on (left bytes, right bytes) ascending. Throws
// EmptyCorpus when the corpus holds no bytes.
BpeVocab train(std::span<const std::string> corpus, std::size_t vocab_size = kDefaultVocabSize);

// Per-document encoding across workers; serial variant kept as reference.
std::vector<std::vector<int>> encode_batch(const BpeVocab& vocab, std::span<const std::string> docs);
std::vector<std::vector<int>> encode_batch_serial(const BpeVocab& vocab, std::span<const std::string> docs);

}  // namespace kernforge::bpe
