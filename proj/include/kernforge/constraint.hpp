#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "kernforge/vocabulary.hpp"

namespace kernforge::constraint {

enum class Phase : std::uint8_t { Header, Body, Terminated };
enum class RecordClass : std::uint8_t { None, Exclusive, Interp, Barline, Data };

// Position inside the current cell. The data-token states follow the
// canonical component order, so the recognizer only admits normal-form
// tokens.
enum class CellState : std::uint8_t {
    Start,  // no byte of the current cell yet
    // exclusive interpretation "**kern", by bytes matched
    Ex1, Ex2, Ex3, Ex4, Ex5, Ex6,
    // tandem / manipulator cells
    Star, Caret, Vee, Dash, Plus, Ex, Opaque,
    Barline,
    Null,
    // data token stages
    NoteBegin, Digits, Dots, Grace, Pitch, Rest, Accidental, Tie, SlurClose, Articulation, Beam, Stem, SlurOpen,
};

// Decoder-side validity state. Plain value type: copy it to branch.
struct DecodeState {
    Phase phase = Phase::Header;
    RecordClass record = RecordClass::None;
    CellState cell = CellState::Start;
    std::uint8_t aux1 = 0;  // stage counter (digits, dots, letters, ...)
    std::uint8_t aux2 = 0;  // stage payload (letter, accidental, rank, zero flag)
    std::uint8_t merge_run = 0;  // trailing *v cells, capped at 2
    bool has_manip = false;
    bool has_tandem = false;
    std::uint16_t active_spines = 0;
    std::uint16_t fields_in_record = 0;
    std::uint16_t next_width = 0;

    bool terminated() const { return phase == Phase::Terminated; }
    bool operator==(const DecodeState&) const = default;
};

struct DecodeStateHash {
    std::size_t operator()(const DecodeState& s) const noexcept;
};

class TokenMask {
public:
    TokenMask() = default;
    explicit TokenMask(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

    std::size_t size() const { return size_; }
    bool allowed(std::size_t id) const { return (words_[id / 64] >> (id % 64)) & 1U; }
    void set(std::size_t id) { words_[id / 64] |= std::uint64_t{1} << (id % 64); }
    std::size_t count() const;
    std::vector<int> allowed_ids() const;
    // Id of the k-th allowed token in ascending order, -1 past the end.
    int nth_allowed(std::size_t k) const;
    const std::vector<std::uint64_t>& words() const { return words_; }

    bool operator==(const TokenMask&) const = default;

private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

// Byte-level step. Returns nullopt when the byte leaves the grammar.
std::optional<DecodeState> step(const DecodeState& s, unsigned char byte);

// Feeds bytes one at a time; nullopt on the first byte that leaves the grammar.
std::optional<DecodeState> feed(const DecodeState& s, std::string_view bytes);

// True when some byte continuation reaches a complete, fully terminated
// document. Global record rules (*v pairing, manipulators vs. tandems) are
// what make a locally well-formed state dead.
bool is_live(const DecodeState& s);

class ConstraintEngine {
public:
    explicit ConstraintEngine(TokenTable vocab);
    ~ConstraintEngine();
    ConstraintEngine(const ConstraintEngine&) = delete;
    ConstraintEngine& operator=(const ConstraintEngine&) = delete;

    const TokenTable& vocabulary() const { return vocab_; }
    DecodeState init_state() const { return DecodeState{}; }

    // Throws IllegalAdvance if any prefix of the bytes leaves the grammar
    // or the result is not live.
    DecodeState advance(const DecodeState& s, std::string_view bytes) const;
    DecodeState advance_token(const DecodeState& s, int id) const;

    // Memoized per state and parallel over the vocabulary.
    TokenMask compute_mask(const DecodeState& s) const;
    // Reference: single-threaded, uncached.
    TokenMask compute_mask_serial(const DecodeState& s) const;
    // Parallel over the vocabulary, uncached.
    TokenMask compute_mask_parallel(const DecodeState& s) const;

    bool token_allowed(const DecodeState& s, int id) const;
    std::size_t cached_states() const;

private:
    struct Cache;

    TokenTable vocab_;
    std::unique_ptr<Cache> cache_;
    bool compact_keys_ = false;
};

}  // namespace kernforge::constraint
