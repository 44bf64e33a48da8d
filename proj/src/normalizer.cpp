#include "kernforge/normalizer.hpp"

#include <algorithm>
#include <array>
#include <climits>
#include <numeric>

namespace kernforge::normalize {

namespace {

enum Pass : std::size_t {
    kStripSpines,
    kStripComments,
    kStripGraceRests,
    kStripResidue,
    kDedupeMeters,
    kRepairAccidentals,
    kZeroLengthTies,
    kSortTokens,
    kSortChords,
    kRepadNulls,
    kPruneNullInterps,
    kPassCount,
};

using PassSet = std::array<bool, kPassCount>;

struct Note {
    NoteToken tok;
    std::string text;
};

struct WorkCell {
    std::string text;
    std::vector<Note> notes;
    bool kern_data = false;
};

struct Row {
    RecordKind kind;
    std::vector<std::string> spines;
    std::vector<WorkCell> cells;
    std::size_t line;
    bool global;
};

std::vector<Row> to_rows(const KernDocument& doc) {
    std::vector<Row> rows;
    rows.reserve(doc.records.size());
    for (const Record& rec : doc.records) {
        Row row{rec.kind, rec.spines, {}, rec.line, rec.is_global_comment()};
        for (std::size_t i = 0; i < rec.cells.size(); ++i) {
            WorkCell cell;
            cell.text = rec.cells[i].text;
            cell.kern_data = rec.kind == RecordKind::Data && rec.spines[i] == "**kern";
            if (cell.kern_data && !rec.cells[i].is_null()) {
                std::size_t start = 0;
                for (const NoteToken& tok : rec.cells[i].notes) {
                    std::size_t end = cell.text.find(' ', start);
                    if (end == std::string::npos) end = cell.text.size();
                    cell.notes.push_back(Note{tok, cell.text.substr(start, end - start)});
                    start = end + 1;
                }
            }
            row.cells.push_back(std::move(cell));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void rebuild_text(WorkCell& cell) {
    if (!cell.kern_data) return;
    if (cell.notes.empty()) {
        cell.text = ".";
        return;
    }
    cell.text.clear();
    for (std::size_t i = 0; i < cell.notes.size(); ++i) {
        if (i > 0) cell.text.push_back(' ');
        cell.text += cell.notes[i].text;
    }
}

template <class F>
std::size_t for_each_note(std::vector<Row>& rows, F&& f) {
    std::size_t edits = 0;
    for (Row& row : rows) {
        for (WorkCell& cell : row.cells) {
            if (!cell.kern_data) continue;
            bool changed = false;
            for (Note& n : cell.notes) {
                if (f(n, row.line)) {
                    ++edits;
                    changed = true;
                }
            }
            if (changed) rebuild_text(cell);
        }
    }
    return edits;
}

bool is_known_component(char c) {
    return (c >= '0' && c <= '9') || c == '.' || c == 'q' || c == 'Q' || (c >= 'a' && c <= 'g') ||
           (c >= 'A' && c <= 'G') || c == 'r' || c == '#' || c == '-' || c == 'n' || c == '[' || c == '_' ||
           c == ']' || c == '(' || c == ')' || c == '\'' || c == '`' || c == '~' || c == '^' || c == ';' ||
           c == 'L' || c == 'J' || c == 'K' || c == 'k' || c == '/' || c == '\\';
}

[[noreturn]] void conflict(std::string_view pass, std::size_t line, const std::string& why) {
    throw KernError(ErrorCode::NormalizationConflict, std::string(pass) + ": " + why, line);
}

std::size_t strip_spines(std::vector<Row>& rows) {
    std::size_t removed = 0;
    bool any_kern = false;
    std::vector<Row> out;
    for (Row& row : rows) {
        if (row.global) {
            out.push_back(std::move(row));
            continue;
        }
        Row kept{row.kind, {}, {}, row.line, false};
        for (std::size_t i = 0; i < row.cells.size(); ++i) {
            if (row.spines[i] == "**kern") {
                kept.spines.push_back(row.spines[i]);
                kept.cells.push_back(std::move(row.cells[i]));
            } else if (row.kind == RecordKind::ExclusiveInterp) {
                ++removed;
            }
        }
        if (row.kind == RecordKind::ExclusiveInterp && !kept.cells.empty()) any_kern = true;
        if (!kept.cells.empty()) out.push_back(std::move(kept));
    }
    if (!any_kern) throw KernError(ErrorCode::EmptyDocument, "no **kern spine to keep");
    rows = std::move(out);
    return removed;
}

std::size_t strip_comments(std::vector<Row>& rows) {
    auto it = std::remove_if(rows.begin(), rows.end(), [](const Row& r) { return r.kind == RecordKind::Comment; });
    std::size_t n = static_cast<std::size_t>(rows.end() - it);
    rows.erase(it, rows.end());
    return n;
}

std::size_t strip_grace_rests(std::vector<Row>& rows) {
    std::size_t edits = 0;
    for (Row& row : rows) {
        for (WorkCell& cell : row.cells) {
            if (!cell.kern_data) continue;
            auto it = std::remove_if(cell.notes.begin(), cell.notes.end(),
                                     [](const Note& n) { return n.tok.is_rest() && n.tok.is_grace(); });
            std::size_t n = static_cast<std::size_t>(cell.notes.end() - it);
            if (n == 0) continue;
            cell.notes.erase(it, cell.notes.end());
            edits += n;
            rebuild_text(cell);
        }
    }
    return edits;
}

std::string equivalent_meter(std::string_view met) {
    if (met == "*met(c)") return "*M4/4";
    if (met == "*met(c|)") return "*M2/2";
    return {};
}

std::size_t dedupe_meters(std::vector<Row>& rows) {
    std::size_t edits = 0;
    for (std::size_t begin = 0; begin < rows.size();) {
        if (rows[begin].kind != RecordKind::TandemInterp) {
            ++begin;
            continue;
        }
        std::size_t end = begin;
        while (end < rows.size() && rows[end].kind == RecordKind::TandemInterp) ++end;
        for (std::size_t r = begin; r < end; ++r) {
            for (std::size_t col = 0; col < rows[r].cells.size(); ++col) {
                std::string eq = equivalent_meter(rows[r].cells[col].text);
                if (eq.empty()) continue;
                bool present = false;
                for (std::size_t k = begin; k < end && !present; ++k) {
                    present = rows[k].cells[col].text == eq;
                }
                if (present) {
                    rows[r].cells[col].text = "*";
                    ++edits;
                }
            }
        }
        begin = end;
    }
    return edits;
}

// Erases one occurrence of c from s, returns the index it was at.
std::size_t erase_one(std::string& s, char c) {
    std::size_t pos = s.find(c);
    if (pos != std::string::npos) s.erase(pos, 1);
    return pos;
}

std::size_t sort_chords_pass(std::vector<Row>& rows) {
    std::size_t edits = 0;
    for (Row& row : rows) {
        for (WorkCell& cell : row.cells) {
            if (!cell.kern_data || cell.notes.size() < 2) continue;
            std::vector<NoteToken> toks;
            for (const Note& n : cell.notes) toks.push_back(n.tok);
            std::vector<std::size_t> order(cell.notes.size());
            std::iota(order.begin(), order.end(), 0);
            std::vector<int> keys;
            for (const NoteToken& t : toks) {
                try {
                    keys.push_back(t.is_rest() ? INT_MIN : pitch_of(t).semitone);
                } catch (const KernError& e) {
                    conflict("sort_chords", row.line, e.what());
                }
            }
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
            if (std::is_sorted(order.begin(), order.end())) continue;
            std::vector<Note> sorted;
            for (std::size_t i : order) sorted.push_back(std::move(cell.notes[i]));
            cell.notes = std::move(sorted);
            rebuild_text(cell);
            ++edits;
        }
    }
    return edits;
}

std::size_t repad_nulls(std::vector<Row>& rows) {
    auto it = std::remove_if(rows.begin(), rows.end(), [](const Row& r) {
        return r.kind == RecordKind::Data &&
               std::all_of(r.cells.begin(), r.cells.end(), [](const WorkCell& c) { return c.text == "."; });
    });
    std::size_t n = static_cast<std::size_t>(rows.end() - it);
    rows.erase(it, rows.end());
    return n;
}

std::size_t prune_null_interps(std::vector<Row>& rows) {
    auto it = std::remove_if(rows.begin(), rows.end(), [](const Row& r) {
        return (r.kind == RecordKind::TandemInterp || r.kind == RecordKind::SpineManipulator) &&
               std::all_of(r.cells.begin(), r.cells.end(), [](const WorkCell& c) { return c.text == "*"; });
    });
    std::size_t n = static_cast<std::size_t>(rows.end() - it);
    rows.erase(it, rows.end());
    return n;
}

std::pair<KernDocument, NormalizationTrace> run_passes(const KernDocument& doc, const PassSet& enabled) {
    std::vector<Row> rows = to_rows(doc);
    NormalizationTrace trace;
    auto record = [&](Pass p, std::size_t n) { trace.passes.emplace_back(std::string(kPasses[p]), n); };

    for (std::size_t p = 0; p < kPassCount; ++p) {
        if (!enabled[p]) continue;
        switch (static_cast<Pass>(p)) {
            case kStripSpines: record(kStripSpines, strip_spines(rows)); break;
            case kStripComments: record(kStripComments, strip_comments(rows)); break;
            case kStripGraceRests: record(kStripGraceRests, strip_grace_rests(rows)); break;
            case kStripResidue:
                record(kStripResidue, for_each_note(rows, [](Note& n, std::size_t) {
                           if (n.tok.unknown_trailing.empty()) return false;
                           n.tok.unknown_trailing.clear();
                           std::erase_if(n.text, [](char c) { return !is_known_component(c); });
                           return true;
                       }));
                break;
            case kDedupeMeters: record(kDedupeMeters, dedupe_meters(rows)); break;
            case kRepairAccidentals:
                record(kRepairAccidentals, for_each_note(rows, [](Note& n, std::size_t line) {
                           NoteToken fixed;
                           try {
                               fixed = repair_accidentals(n.tok);
                           } catch (const KernError& e) {
                               conflict(kPasses[kRepairAccidentals], line, e.what());
                           }
                               if (fixed.accidentals == n.tok.accidentals) return false;
                               std::size_t pos = n.text.find_first_of("#-n");
                               std::erase_if(n.text, [](char c) { return c == '#' || c == '-' || c == 'n'; });
                               n.text.insert(pos, fixed.accidentals);
                               n.tok = std::move(fixed);
                               return true;
                           }));
                break;
            case kZeroLengthTies:
                record(kZeroLengthTies, for_each_note(rows, [](Note& n, std::size_t) {
                           bool changed = false;
                           while (n.tok.ties.find('[') != std::string::npos && n.tok.ties.find(']') != std::string::npos) {
                               erase_one(n.tok.ties, '[');
                               erase_one(n.tok.ties, ']');
                               erase_one(n.text, '[');
                               erase_one(n.text, ']');
                               changed = true;
                           }
                           return changed;
                       }));
                break;
            case kSortTokens:
                record(kSortTokens, for_each_note(rows, [](Note& n, std::size_t) {
                           n.tok = sort_token(n.tok);
                           std::string canonical = token_text(n.tok);
                           if (canonical == n.text) return false;
                           n.text = std::move(canonical);
                           return true;
                       }));
                break;
            case kSortChords: record(kSortChords, sort_chords_pass(rows)); break;
            case kRepadNulls: record(kRepadNulls, repad_nulls(rows)); break;
            case kPruneNullInterps: record(kPruneNullInterps, prune_null_interps(rows)); break;
            case kPassCount: break;
        }
    }

    std::string text;
    for (const Row& row : rows) {
        for (std::size_t i = 0; i < row.cells.size(); ++i) {
            if (i > 0) text.push_back('\t');
            text += row.cells[i].text;
        }
        text.push_back('\n');
    }
    try {
        return {parse_document(text, doc.source_name), std::move(trace)};
    } catch (const KernError& e) {
        conflict("reparse", e.line(), e.what());
    }
}

PassSet only(std::initializer_list<Pass> passes) {
    PassSet set{};
    for (Pass p : passes) set[p] = true;
    return set;
}

}  // namespace

std::size_t NormalizationTrace::count(std::string_view pass) const {
    for (const auto& [name, n] : passes) {
        if (name == pass) return n;
    }
    return 0;
}

std::size_t NormalizationTrace::total() const {
    std::size_t t = 0;
    for (const auto& p : passes) t += p.second;
    return t;
}

int component_rank(char c) {
    static constexpr std::string_view order = "qQ#-n[_]'`~^;LJKk/\\";
    std::size_t pos = order.find(c);
    return pos == std::string_view::npos ? static_cast<int>(order.size()) : static_cast<int>(pos);
}

NoteToken sort_token(const NoteToken& tok) {
    NoteToken out = tok;
    auto by_rank = [](char a, char b) { return component_rank(a) < component_rank(b); };
    for (std::string* s : {&out.grace, &out.accidentals, &out.ties, &out.articulations, &out.beams, &out.stems}) {
        std::stable_sort(s->begin(), s->end(), by_rank);
    }
    std::sort(out.slurs.begin(), out.slurs.end(), [](char a, char b) { return a == ')' && b == '('; });
    return out;
}

std::string token_text(const NoteToken& tok) {
    std::string s = tok.duration_digits;
    s.append(static_cast<std::size_t>(tok.dots), '.');
    s += tok.grace;
    s += tok.pitch_letters;
    s.append(static_cast<std::size_t>(tok.rest), 'r');
    s += tok.accidentals;
    s += tok.ties;
    for (char c : tok.slurs) {
        if (c == ')') s.push_back(c);
    }
    s += tok.articulations;
    s += tok.beams;
    s += tok.stems;
    for (char c : tok.slurs) {
        if (c == '(') s.push_back(c);
    }
    s += tok.unknown_trailing;
    return s;
}

std::vector<NoteToken> sort_chord(std::vector<NoteToken> notes) {
    std::stable_sort(notes.begin(), notes.end(), [](const NoteToken& a, const NoteToken& b) {
        int ka = a.is_rest() ? INT_MIN : pitch_of(a).semitone;
        int kb = b.is_rest() ? INT_MIN : pitch_of(b).semitone;
        return ka < kb;
    });
    return notes;
}

NoteToken repair_accidentals(const NoteToken& tok) {
    const std::string& acc = tok.accidentals;
    bool sharp = acc.find('#') != std::string::npos;
    bool flat = acc.find('-') != std::string::npos;
    bool natural = acc.find('n') != std::string::npos;
    if (sharp && flat) {
        throw KernError(ErrorCode::NormalizationConflict, "sharp and flat on one note '" + acc + "'");
    }
    if (!(natural && (sharp || flat))) return tok;
    // Last maximal run of one accidental character wins.
    std::size_t start = acc.size() - 1;
    while (start > 0 && acc[start - 1] == acc.back()) --start;
    NoteToken out = tok;
    out.accidentals = acc.substr(start);
    return out;
}

KernDocument strip_nonkern_spines(const KernDocument& doc) {
    return run_passes(doc, only({kStripSpines, kPruneNullInterps})).first;
}

KernDocument strip_nonvisual(const KernDocument& doc) {
    return run_passes(doc, only({kStripComments, kStripGraceRests, kDedupeMeters, kZeroLengthTies, kRepadNulls,
                                 kPruneNullInterps}))
        .first;
}

std::pair<KernDocument, NormalizationTrace> normalize_document(const KernDocument& doc) {
    PassSet all;
    all.fill(true);
    return run_passes(doc, all);
}

}  // namespace kernforge::normalize
