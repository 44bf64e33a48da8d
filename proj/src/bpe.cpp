#include "kernforge/bpe.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "kernforge/error.hpp"
#include "kernforge/parallel.hpp"

namespace kernforge::bpe {

namespace {

// Token bytes are stored in JSON as Latin-1 code points so arbitrary bytes survive.
std::string bytes_to_json_string(std::string_view bytes) {
    std::string out;
    for (unsigned char b : bytes) {
        if (b < 0x80) {
            out.push_back(static_cast<char>(b));
        } else {
            out.push_back(static_cast<char>(0xC0 | (b >> 6)));
            out.push_back(static_cast<char>(0x80 | (b & 0x3F)));
        }
    }
    return out;
}

std::string json_string_to_bytes(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto b = static_cast<unsigned char>(s[i]);
        if (b < 0x80) {
            out.push_back(static_cast<char>(b));
        } else if ((b == 0xC2 || b == 0xC3) && i + 1 < s.size()) {
            auto c = static_cast<unsigned char>(s[++i]);
            out.push_back(static_cast<char>(((b & 0x03) << 6) | (c & 0x3F)));
        } else {
            throw KernError(ErrorCode::BadVocab, "token string outside Latin-1 range");
        }
    }
    return out;
}

struct PairHash {
    std::size_t operator()(const std::pair<int, int>& p) const noexcept {
        return std::hash<long long>()((static_cast<long long>(p.first) << 32) ^ static_cast<unsigned>(p.second));
    }
};

class Trainer {
public:
    Trainer(BpeVocab& vocab, std::span<const std::string> corpus) : vocab_(vocab), queue_(Order{&vocab}) {
        std::unordered_map<std::string, std::int64_t> freq;
        for (const std::string& doc : corpus) {
            std::size_t start = 0;
            for (std::size_t i = 0; i <= doc.size(); ++i) {
                if (i == doc.size() || is_boundary(static_cast<unsigned char>(doc[i]))) {
                    if (i > start) ++freq[doc.substr(start, i - start)];
                    start = i + 1;
                }
            }
        }
        std::vector<std::pair<std::string, std::int64_t>> sorted(freq.begin(), freq.end());
        std::sort(sorted.begin(), sorted.end());
        for (auto& [word, n] : sorted) {
            std::vector<int> symbols;
            for (unsigned char b : word) symbols.push_back(BpeVocab::byte_id(b));
            words_.push_back(std::move(symbols));
            counts_.push_back(n);
        }
        for (std::size_t w = 0; w < words_.size(); ++w) add_word(w, +1);
    }

    void run(std::size_t vocab_size) {
        while (vocab_.size() < vocab_size && !queue_.empty()) {
            auto [count, pair] = *queue_.begin();
            if (count <= 0) break;
            int id = vocab_.add_merge(pair.first, pair.second);
            std::vector<std::size_t> affected(where_[pair].begin(), where_[pair].end());
            for (std::size_t w : affected) {
                add_word(w, -1);
                merge_word(words_[w], pair, id);
                add_word(w, +1);
            }
        }
    }

private:
    struct Order {
        const BpeVocab* vocab;
        bool operator()(const std::pair<std::int64_t, std::pair<int, int>>& a,
                        const std::pair<std::int64_t, std::pair<int, int>>& b) const {
            if (a.first != b.first) return a.first > b.first;
            const std::string& al = vocab->token_bytes(a.second.first);
            const std::string& bl = vocab->token_bytes(b.second.first);
            if (al != bl) return al < bl;
            return vocab->token_bytes(a.second.second) < vocab->token_bytes(b.second.second);
        }
    };

    void adjust(const std::pair<int, int>& pair, std::int64_t delta) {
        std::int64_t& c = pair_counts_[pair];
        if (c > 0) queue_.erase({c, pair});
        c += delta;
        if (c > 0) queue_.insert({c, pair});
    }

    void add_word(std::size_t w, int sign) {
        const std::vector<int>& s = words_[w];
        for (std::size_t i = 0; i + 1 < s.size(); ++i) {
            std::pair<int, int> p{s[i], s[i + 1]};
            adjust(p, sign * counts_[w]);
            if (sign > 0) {
                where_[p].insert(w);
            } else {
                where_[p].erase(w);
            }
        }
    }

    static void merge_word(std::vector<int>& s, const std::pair<int, int>& pair, int id) {
        std::vector<int> out;
        out.reserve(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i + 1 < s.size() && s[i] == pair.first && s[i + 1] == pair.second) {
                out.push_back(id);
                ++i;
            } else {
                out.push_back(s[i]);
            }
        }
        s = std::move(out);
    }

    BpeVocab& vocab_;
    std::vector<std::vector<int>> words_;
    std::vector<std::int64_t> counts_;
    std::unordered_map<std::pair<int, int>, std::int64_t, PairHash> pair_counts_;
    std::unordered_map<std::pair<int, int>, std::set<std::size_t>, PairHash> where_;
    std::set<std::pair<std::int64_t, std::pair<int, int>>, Order> queue_;
};

}  // namespace

BpeVocab::BpeVocab(std::size_t vocab_size) : vocab_size_(vocab_size) {
    tokens_.reserve(std::max(vocab_size, kBaseSize));
    tokens_.emplace_back();  // BOS
    tokens_.emplace_back();  // EOS
    for (int b = 0; b < 256; ++b) tokens_.emplace_back(1, static_cast<char>(b));
}

int BpeVocab::add_merge(int left, int right) {
    int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token_bytes(left) + token_bytes(right));
    merges_.emplace_back(left, right);
    merge_rank_.emplace(std::make_pair(left, right), static_cast<int>(merges_.size() - 1));
    return id;
}

void BpeVocab::encode_word(std::string_view word, std::vector<int>& out) const {
    std::vector<int> s;
    s.reserve(word.size());
    for (unsigned char b : word) s.push_back(byte_id(b));
    while (s.size() > 1) {
        int best_rank = -1;
        std::pair<int, int> best;
        for (std::size_t i = 0; i + 1 < s.size(); ++i) {
            auto it = merge_rank_.find({s[i], s[i + 1]});
            if (it != merge_rank_.end() && (best_rank < 0 || it->second < best_rank)) {
                best_rank = it->second;
                best = it->first;
            }
        }
        if (best_rank < 0) break;
        const int id = static_cast<int>(kBaseSize) + best_rank;
        std::vector<int> next;
        next.reserve(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i + 1 < s.size() && s[i] == best.first && s[i + 1] == best.second) {
                next.push_back(id);
                ++i;
            } else {
                next.push_back(s[i]);
            }
        }
        s = std::move(next);
    }
    out.insert(out.end(), s.begin(), s.end());
}

std::vector<int> BpeVocab::encode(std::string_view text) const {
    std::vector<int> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || is_boundary(static_cast<unsigned char>(text[i]))) {
            if (i > start) encode_word(text.substr(start, i - start), out);
            if (i < text.size()) out.push_back(byte_id(static_cast<unsigned char>(text[i])));
            start = i + 1;
        }
    }
    return out;
}

std::string BpeVocab::decode(std::span<const int> ids) const {
    std::string out;
    for (int id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
            throw KernError(ErrorCode::UnknownId, "unknown token id " + std::to_string(id));
        }
        out += tokens_[static_cast<std::size_t>(id)];
    }
    return out;
}

TokenTable BpeVocab::token_table() const { return TokenTable{tokens_, kEosId}; }

std::string BpeVocab::to_json() const {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["vocab_size"] = vocab_size_;
    j["special"] = {{"bos", kBosId}, {"eos", kEosId}};
    auto merges = nlohmann::ordered_json::array();
    for (const auto& [l, r] : merges_) {
        merges.push_back({l, r});
    }
    j["merges"] = std::move(merges);
    auto tokens = nlohmann::ordered_json::array();
    tokens.push_back("<bos>");
    tokens.push_back("<eos>");
    for (std::size_t i = kBaseSize - 256; i < tokens_.size(); ++i) tokens.push_back(bytes_to_json_string(tokens_[i]));
    j["tokens"] = std::move(tokens);
    return j.dump(1) + "\n";
}

BpeVocab BpeVocab::from_json(std::string_view json) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
        throw KernError(ErrorCode::BadVocab, std::string("vocab is not JSON: ") + e.what());
    }
    try {
        if (j.at("version").get<int>() != 1) throw KernError(ErrorCode::BadVocab, "unsupported vocab version");
        BpeVocab vocab(j.at("vocab_size").get<std::size_t>());
        for (const auto& m : j.at("merges")) {
            int l = m.at(0).get<int>();
            int r = m.at(1).get<int>();
            auto known = [&](int id) { return id >= kFirstByteId && static_cast<std::size_t>(id) < vocab.size(); };
            if (!known(l) || !known(r)) throw KernError(ErrorCode::BadVocab, "merge refers to unknown token");
            vocab.add_merge(l, r);
        }
        const auto& tokens = j.at("tokens");
        if (tokens.size() != vocab.tokens_.size()) throw KernError(ErrorCode::BadVocab, "token table size mismatch");
        for (std::size_t i = kFirstByteId; i < tokens.size(); ++i) {
            if (json_string_to_bytes(tokens[i].get<std::string>()) != vocab.tokens_[i]) {
                throw KernError(ErrorCode::BadVocab, "token table disagrees with merges at id " + std::to_string(i));
            }
        }
        return vocab;
    } catch (const nlohmann::json::exception& e) {
        throw KernError(ErrorCode::BadVocab, std::string("malformed vocab: ") + e.what());
    }
}

BpeVocab train(std::span<const std::string> corpus, std::size_t vocab_size) {
    bool any = std::any_of(corpus.begin(), corpus.end(), [](const std::string& s) { return !s.empty(); });
    if (!any) throw KernError(ErrorCode::EmptyCorpus, "training corpus is empty");
    BpeVocab vocab(vocab_size);
    Trainer(vocab, corpus).run(vocab_size);
    return vocab;
}

std::vector<std::vector<int>> encode_batch(const BpeVocab& vocab, std::span<const std::string> docs) {
    return parallel_map<std::vector<int>>(docs.size(), [&](std::size_t i) { return vocab.encode(docs[i]); });
}

std::vector<std::vector<int>> encode_batch_serial(const BpeVocab& vocab, std::span<const std::string> docs) {
    std::vector<std::vector<int>> out;
    out.reserve(docs.size());
    for (const std::string& d : docs) out.push_back(vocab.encode(d));
    return out;
}

}  // namespace kernforge::bpe
