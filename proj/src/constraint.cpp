#include "kernforge/constraint.hpp"

#include <algorithm>
#include <bit>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "kernforge/error.hpp"

namespace kernforge::constraint {

namespace {

using C = CellState;

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_pitch_letter(unsigned char c) { return (c >= 'a' && c <= 'g') || (c >= 'A' && c <= 'G'); }
bool is_graphic(unsigned char c) { return c > 0x20 && c < 0x7F; }

int articulation_rank(unsigned char c) {
    switch (c) {
        case '\'': return 0;
        case '`': return 1;
        case '~': return 2;
        case '^': return 3;
        case ';': return 4;
        default: return -1;
    }
}

int beam_rank(unsigned char c) {
    switch (c) {
        case 'L': return 0;
        case 'J': return 1;
        case 'K': return 2;
        case 'k': return 3;
        default: return -1;
    }
}

// Position of a completed-note stage in the canonical component order.
int post_pitch_order(CellState c) {
    switch (c) {
        case C::Pitch:
        case C::Rest: return 0;
        case C::Accidental: return 1;
        case C::Tie: return 2;
        case C::SlurClose: return 3;
        case C::Articulation: return 4;
        case C::Beam: return 5;
        case C::Stem: return 6;
        case C::SlurOpen: return 7;
        default: return -1;
    }
}

bool note_complete(CellState c) { return post_pitch_order(c) >= 0; }

bool cell_complete(CellState c) {
    switch (c) {
        case C::Ex6:
        case C::Star:
        case C::Caret:
        case C::Vee:
        case C::Dash:
        case C::Opaque:
        case C::Barline:
        case C::Null: return true;
        default: return note_complete(c);
    }
}

bool enter(DecodeState& s, CellState c, std::uint8_t aux1 = 0, std::uint8_t aux2 = 0) {
    s.cell = c;
    s.aux1 = aux1;
    s.aux2 = aux2;
    return true;
}

// First byte of a data token: duration digit or grace marker.
bool begin_note(DecodeState& s, unsigned char c) {
    if (is_digit(c)) return enter(s, C::Digits, 1, c == '0');
    if (c == 'q') return enter(s, C::Grace, 1);
    if (c == 'Q') return enter(s, C::Grace, 3);
    return false;
}

bool note_step(DecodeState& s, unsigned char c) {
    switch (s.cell) {
        case C::NoteBegin: return begin_note(s, c);
        case C::Digits:
            if (is_digit(c)) {
                if (s.aux2 || s.aux1 >= 3) return false;
                ++s.aux1;
                return true;
            }
            if (c == '.') return enter(s, C::Dots, 1);
            [[fallthrough]];
        case C::Dots:
            if (s.cell == C::Dots && c == '.') {
                if (s.aux1 >= 3) return false;
                ++s.aux1;
                return true;
            }
            if (c == 'q') return enter(s, C::Grace, 1);
            if (c == 'Q') return enter(s, C::Grace, 3);
            if (is_pitch_letter(c)) return enter(s, C::Pitch, 1, c);
            if (c == 'r') return enter(s, C::Rest, 1);
            return false;
        case C::Grace:
            if (c == 'q' && s.aux1 == 1) return enter(s, C::Grace, 2);
            if (is_pitch_letter(c)) return enter(s, C::Pitch, 1, c);
            return false;
        default: break;
    }
    if (!note_complete(s.cell)) return false;

    const int order = post_pitch_order(s.cell);
    if (s.cell == C::Pitch && c == s.aux2) {
        if (s.aux1 >= 5) return false;
        ++s.aux1;
        return true;
    }
    if (s.cell == C::Rest && c == 'r') {
        if (s.aux1 >= 2) return false;
        ++s.aux1;
        return true;
    }
    if (c == '#' || c == '-' || c == 'n') {
        if (s.cell == C::Accidental) {
            if (c != s.aux2 || s.aux1 >= 2) return false;
            ++s.aux1;
            return true;
        }
        if (s.cell != C::Pitch) return false;
        return enter(s, C::Accidental, 1, c);
    }
    if (c == '[' || c == '_' || c == ']') {
        if (s.cell != C::Pitch && s.cell != C::Accidental) return false;
        return enter(s, C::Tie);
    }
    if (c == ')') {
        if (order > 3) return false;
        return enter(s, C::SlurClose);
    }
    if (int r = articulation_rank(c); r >= 0) {
        if (s.cell == C::Articulation) {
            if (r < s.aux2) return false;
            s.aux2 = static_cast<std::uint8_t>(r);
            return true;
        }
        if (order > 4) return false;
        return enter(s, C::Articulation, 0, static_cast<std::uint8_t>(r));
    }
    if (int r = beam_rank(c); r >= 0) {
        if (s.cell == C::Beam) {
            if (r < s.aux2) return false;
            s.aux2 = static_cast<std::uint8_t>(r);
            return true;
        }
        if (order > 5) return false;
        return enter(s, C::Beam, 0, static_cast<std::uint8_t>(r));
    }
    if (c == '/' || c == '\\') {
        if (order > 5) return false;
        return enter(s, C::Stem);
    }
    if (c == '(') return enter(s, C::SlurOpen);
    return false;
}

bool cell_byte(DecodeState& s, unsigned char c) {
    switch (s.cell) {
        case C::Ex1: return c == '*' && enter(s, C::Ex2);
        case C::Ex2: return c == 'k' && enter(s, C::Ex3);
        case C::Ex3: return c == 'e' && enter(s, C::Ex4);
        case C::Ex4: return c == 'r' && enter(s, C::Ex5);
        case C::Ex5: return c == 'n' && enter(s, C::Ex6);
        case C::Ex6: return false;
        case C::Star:
            if (!is_graphic(c) || c == '*') return false;
            switch (c) {
                case '^': return enter(s, C::Caret);
                case 'v': return enter(s, C::Vee);
                case '-': return enter(s, C::Dash);
                case '+': return enter(s, C::Plus);
                case 'x': return enter(s, C::Ex);
                default: return enter(s, C::Opaque);
            }
        case C::Caret:
        case C::Vee:
        case C::Dash:
        case C::Plus:
        case C::Ex:
        case C::Opaque: return (is_graphic(c) || c == ' ') && enter(s, C::Opaque);
        case C::Barline: return is_graphic(c);
        case C::Null: return false;
        default: break;
    }
    if (c == ' ') return note_complete(s.cell) && enter(s, C::NoteBegin);
    return note_step(s, c);
}

// First byte of a cell; the record class is fixed by the record's first cell.
bool start_cell(DecodeState& s, unsigned char c) {
    if (s.record == RecordClass::None) {
        if (s.phase == Phase::Header) {
            if (c != '*') return false;
            s.record = RecordClass::Exclusive;
        } else if (c == '*') {
            s.record = RecordClass::Interp;
        } else if (c == '=') {
            s.record = RecordClass::Barline;
        } else if (is_digit(c) || c == '.' || c == 'q' || c == 'Q') {
            s.record = RecordClass::Data;
        } else {
            return false;
        }
    }
    ++s.fields_in_record;
    switch (s.record) {
        case RecordClass::Exclusive:
            s.active_spines = s.fields_in_record;
            return c == '*' && enter(s, C::Ex1);
        case RecordClass::Interp: return c == '*' && enter(s, C::Star);
        case RecordClass::Barline: return c == '=' && enter(s, C::Barline);
        case RecordClass::Data:
            if (c == '.') return enter(s, C::Null);
            return begin_note(s, c);
        case RecordClass::None: break;
    }
    return false;
}

// Applies the finished cell to the record bookkeeping.
bool finish_cell(DecodeState& s) {
    if (!cell_complete(s.cell)) return false;
    if (s.record != RecordClass::Interp) return true;
    if (s.cell == C::Vee) {
        s.has_manip = true;
        s.merge_run = static_cast<std::uint8_t>(s.merge_run < 2 ? s.merge_run + 1 : 2);
        return true;
    }
    if (s.merge_run == 1) return false;
    if (s.merge_run == 2) ++s.next_width;
    s.merge_run = 0;
    switch (s.cell) {
        case C::Star: ++s.next_width; break;
        case C::Caret:
            s.has_manip = true;
            s.next_width += 2;
            break;
        case C::Dash: s.has_manip = true; break;
        default:
            s.has_tandem = true;
            ++s.next_width;
            break;
    }
    return !(s.has_manip && s.has_tandem);
}

bool close_record(DecodeState& s) {
    if (s.record == RecordClass::Exclusive) {
        s.phase = Phase::Body;
    } else if (s.record == RecordClass::Interp) {
        if (s.merge_run == 1) return false;
        if (s.merge_run == 2) ++s.next_width;
        if (s.has_manip) s.active_spines = s.next_width;
        if (s.active_spines == 0) s.phase = Phase::Terminated;
    }
    s.record = RecordClass::None;
    s.cell = C::Start;
    s.aux1 = s.aux2 = 0;
    s.merge_run = 0;
    s.has_manip = s.has_tandem = false;
    s.fields_in_record = 0;
    s.next_width = 0;
    return true;
}

}  // namespace

std::size_t DecodeStateHash::operator()(const DecodeState& s) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(s.phase);
    auto mix = [&](std::uint64_t v) { h = (h ^ v) * 0x100000001b3ULL + (h >> 29); };
    mix(static_cast<std::uint64_t>(s.record));
    mix(static_cast<std::uint64_t>(s.cell));
    mix(s.aux1);
    mix(s.aux2);
    mix(s.merge_run);
    mix(static_cast<std::uint64_t>(s.has_manip) | (static_cast<std::uint64_t>(s.has_tandem) << 1));
    mix(s.active_spines);
    mix(s.fields_in_record);
    mix(s.next_width);
    return static_cast<std::size_t>(h);
}

std::size_t TokenMask::count() const {
    std::size_t n = 0;
    for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

std::vector<int> TokenMask::allowed_ids() const {
    std::vector<int> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
        std::uint64_t bits = words_[w];
        while (bits) {
            out.push_back(static_cast<int>(w * 64 + static_cast<std::size_t>(std::countr_zero(bits))));
            bits &= bits - 1;
        }
    }
    return out;
}

int TokenMask::nth_allowed(std::size_t k) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
        std::uint64_t bits = words_[w];
        auto n = static_cast<std::size_t>(std::popcount(bits));
        if (k >= n) {
            k -= n;
            continue;
        }
        for (; k > 0; --k) bits &= bits - 1;
        return static_cast<int>(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
    }
    return -1;
}

std::optional<DecodeState> step(const DecodeState& in, unsigned char c) {
    if (in.phase == Phase::Terminated) return std::nullopt;
    DecodeState s = in;
    if (c == '\t') {
        if (s.cell == C::Start || !finish_cell(s)) return std::nullopt;
        if (s.record != RecordClass::Exclusive && s.fields_in_record >= s.active_spines) return std::nullopt;
        enter(s, C::Start);
        return s;
    }
    if (c == '\n') {
        if (s.cell == C::Start || !finish_cell(s)) return std::nullopt;
        if (s.record != RecordClass::Exclusive && s.fields_in_record != s.active_spines) return std::nullopt;
        if (!close_record(s)) return std::nullopt;
        return s;
    }
    bool ok = s.cell == C::Start ? start_cell(s, c) : cell_byte(s, c);
    if (!ok) return std::nullopt;
    return s;
}

std::optional<DecodeState> feed(const DecodeState& s, std::string_view bytes) {
    std::optional<DecodeState> cur = s;
    for (char c : bytes) {
        cur = step(*cur, static_cast<unsigned char>(c));
        if (!cur) return std::nullopt;
    }
    return cur;
}

bool is_live(const DecodeState& s) {
    if (s.phase == Phase::Terminated || s.record != RecordClass::Interp) return true;

    // Cells still to come after the current one.
    const int current = s.cell == C::Start ? s.fields_in_record + 1 : s.fields_in_record;
    const int remaining = static_cast<int>(s.active_spines) - current;

    const bool null_ok = s.merge_run != 1;
    const bool manip_ok = !s.has_tandem && s.merge_run != 1;
    const bool merge_ok = !s.has_tandem && (s.merge_run >= 1 || remaining >= 1);
    const bool tandem_ok = !s.has_manip;

    switch (s.cell) {
        case C::Start:
        case C::Star: return null_ok || manip_ok || merge_ok || tandem_ok;
        case C::Caret:
        case C::Dash: return manip_ok || tandem_ok;
        case C::Vee: return merge_ok || tandem_ok;
        default: return tandem_ok;
    }
}

// When no multi-byte token carries TAB or LF, a token can consume at most one
// field separator, so only the remaining-field gap up to 2 influences any
// verdict. Collapsing the counters keeps the memo table small.
static DecodeState mask_key(const DecodeState& s) {
    if (s.phase != Phase::Body) return s;
    DecodeState k = s;
    const int gap = std::min(static_cast<int>(s.active_spines) - static_cast<int>(s.fields_in_record), 2);
    k.fields_in_record = static_cast<std::uint16_t>(std::min<int>(s.fields_in_record, 1));
    k.active_spines = static_cast<std::uint16_t>(k.fields_in_record + gap);
    k.next_width = static_cast<std::uint16_t>(std::min<int>(s.next_width, 1));
    return k;
}

struct ConstraintEngine::Cache {
    mutable std::shared_mutex mutex;
    std::unordered_map<DecodeState, TokenMask, DecodeStateHash> masks;
};

ConstraintEngine::ConstraintEngine(TokenTable vocab) : vocab_(std::move(vocab)), cache_(std::make_unique<Cache>()) {
    compact_keys_ = std::none_of(vocab_.tokens.begin(), vocab_.tokens.end(), [](const std::string& t) {
        return t.size() > 1 && t.find_first_of("\t\n") != std::string::npos;
    });
}

ConstraintEngine::~ConstraintEngine() = default;

bool ConstraintEngine::token_allowed(const DecodeState& s, int id) const {
    const std::string& bytes = vocab_.tokens[static_cast<std::size_t>(id)];
    if (bytes.empty()) return id == vocab_.eos_id && s.terminated();
    auto next = feed(s, bytes);
    return next && is_live(*next);
}

DecodeState ConstraintEngine::advance(const DecodeState& s, std::string_view bytes) const {
    if (bytes.empty()) throw KernError(ErrorCode::IllegalAdvance, "empty advance");
    auto next = feed(s, bytes);
    if (!next || !is_live(*next)) {
        throw KernError(ErrorCode::IllegalAdvance, "token '" + std::string(bytes) + "' is masked in this state");
    }
    return *next;
}

DecodeState ConstraintEngine::advance_token(const DecodeState& s, int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_.size()) {
        throw KernError(ErrorCode::IllegalAdvance, "token id out of range");
    }
    if (id == vocab_.eos_id) {
        if (!s.terminated()) throw KernError(ErrorCode::IllegalAdvance, "end of sequence before all spines terminated");
        return s;
    }
    return advance(s, vocab_.tokens[static_cast<std::size_t>(id)]);
}

TokenMask ConstraintEngine::compute_mask_serial(const DecodeState& s) const {
    TokenMask mask(vocab_.size());
    for (std::size_t id = 0; id < vocab_.size(); ++id) {
        if (token_allowed(s, static_cast<int>(id))) mask.set(id);
    }
    return mask;
}

TokenMask ConstraintEngine::compute_mask_parallel(const DecodeState& s) const {
    const auto n = static_cast<long long>(vocab_.size());
    std::vector<unsigned char> verdict(vocab_.size(), 0);
#pragma omp parallel for schedule(static) if (n >= 1024)
    for (long long id = 0; id < n; ++id) {
        verdict[static_cast<std::size_t>(id)] = token_allowed(s, static_cast<int>(id)) ? 1 : 0;
    }
    TokenMask mask(vocab_.size());
    for (std::size_t id = 0; id < verdict.size(); ++id) {
        if (verdict[id]) mask.set(id);
    }
    return mask;
}

TokenMask ConstraintEngine::compute_mask(const DecodeState& s) const {
    const DecodeState key = compact_keys_ ? mask_key(s) : s;
    {
        std::shared_lock lock(cache_->mutex);
        auto it = cache_->masks.find(key);
        if (it != cache_->masks.end()) return it->second;
    }
    TokenMask mask = compute_mask_parallel(key);
    std::unique_lock lock(cache_->mutex);
    cache_->masks.emplace(key, mask);
    return mask;
}

std::size_t ConstraintEngine::cached_states() const {
    std::shared_lock lock(cache_->mutex);
    return cache_->masks.size();
}

}  // namespace kernforge::constraint
