#include "kernforge/kern.hpp"

#include <cctype>

#include "kernforge/utf8.hpp"

namespace kernforge {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotUtf8: return "NotUtf8";
        case ErrorCode::RecordWidthMismatch: return "RecordWidthMismatch";
        case ErrorCode::MixedRecordKind: return "MixedRecordKind";
        case ErrorCode::UnknownExclusiveInterp: return "UnknownExclusiveInterp";
        case ErrorCode::LexError: return "LexError";
        case ErrorCode::NoDuration: return "NoDuration";
        case ErrorCode::MixedCasePitch: return "MixedCasePitch";
        case ErrorCode::NoTimeSignature: return "NoTimeSignature";
        case ErrorCode::NormalizationConflict: return "NormalizationConflict";
        case ErrorCode::EmptyDocument: return "EmptyDocument";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::UnknownId: return "UnknownId";
        case ErrorCode::IllegalAdvance: return "IllegalAdvance";
        case ErrorCode::EmptyReference: return "EmptyReference";
        case ErrorCode::Overflow: return "Overflow";
        case ErrorCode::BadVocab: return "BadVocab";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

std::string_view to_string(RecordKind kind) {
    switch (kind) {
        case RecordKind::ExclusiveInterp: return "ExclusiveInterp";
        case RecordKind::TandemInterp: return "TandemInterp";
        case RecordKind::SpineManipulator: return "SpineManipulator";
        case RecordKind::Barline: return "Barline";
        case RecordKind::Data: return "Data";
        case RecordKind::Comment: return "Comment";
    }
    return "Unknown";
}

namespace {

bool is_pitch_letter(char c) { return (c >= 'a' && c <= 'g') || (c >= 'A' && c <= 'G'); }

[[noreturn]] void lex_fail(std::string_view text, const std::string& why) {
    throw KernError(ErrorCode::LexError, "cannot lex token '" + std::string(text) + "': " + why);
}

bool valid_exclusive_name(std::string_view cell) {
    if (cell.size() < 3 || cell.substr(0, 2) != "**") return false;
    for (char c : cell.substr(2)) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    }
    return true;
}

enum class CellClass { Exclusive, Interp, Barline, Comment, Data };

CellClass classify(std::string_view cell) {
    if (cell.starts_with("**")) return CellClass::Exclusive;
    if (cell.starts_with('*')) return CellClass::Interp;
    if (cell.starts_with('=')) return CellClass::Barline;
    if (cell.starts_with('!')) return CellClass::Comment;
    return CellClass::Data;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

bool is_manipulator_cell(std::string_view cell) { return cell == "*^" || cell == "*v" || cell == "*-"; }

NoteToken lex_token(std::string_view text) {
    if (text.empty()) lex_fail(text, "empty token");
    NoteToken tok;
    char prev = 0;
    for (char c : text) {
        if (c >= '0' && c <= '9') {
            if (!tok.duration_digits.empty() && !(prev >= '0' && prev <= '9')) lex_fail(text, "split duration");
            tok.duration_digits.push_back(c);
        } else if (c == '.') {
            ++tok.dots;
        } else if (c == 'q' || c == 'Q') {
            tok.grace.push_back(c);
        } else if (is_pitch_letter(c)) {
            if (!tok.pitch_letters.empty()) {
                if (!is_pitch_letter(prev)) lex_fail(text, "split pitch");
                if (std::tolower(static_cast<unsigned char>(c)) !=
                    std::tolower(static_cast<unsigned char>(tok.pitch_letters.front())))
                    lex_fail(text, "more than one pitch name");
            }
            tok.pitch_letters.push_back(c);
        } else if (c == 'r') {
            if (tok.rest > 0 && prev != 'r') lex_fail(text, "split rest");
            ++tok.rest;
        } else if (c == '#' || c == '-' || c == 'n') {
            tok.accidentals.push_back(c);
        } else if (c == '[' || c == '_' || c == ']') {
            tok.ties.push_back(c);
        } else if (c == '(' || c == ')') {
            tok.slurs.push_back(c);
        } else if (c == '\'' || c == '`' || c == '~' || c == '^' || c == ';') {
            tok.articulations.push_back(c);
        } else if (c == 'L' || c == 'J' || c == 'K' || c == 'k') {
            tok.beams.push_back(c);
        } else if (c == '/' || c == '\\') {
            tok.stems.push_back(c);
        } else if (c == ' ' || c == '\t' || c == '\n') {
            lex_fail(text, "whitespace inside token");
        } else {
            tok.unknown_trailing.push_back(c);
        }
        prev = c;
    }
    if (tok.pitch_letters.empty() == (tok.rest == 0)) lex_fail(text, "needs exactly one of pitch or rest");
    if (!tok.has_duration() && !tok.is_grace()) lex_fail(text, "missing duration");
    if (tok.is_rest() && (!tok.accidentals.empty() || !tok.ties.empty())) lex_fail(text, "rest with accidental or tie");
    return tok;
}

std::vector<NoteToken> lex_data_cell(std::string_view text) {
    if (text == ".") return {};
    std::vector<NoteToken> notes;
    for (std::string_view part : split(text, ' ')) {
        if (part == ".") lex_fail(text, "null token inside chord");
        notes.push_back(lex_token(part));
    }
    return notes;
}

std::vector<std::vector<std::size_t>> spine_successors(const Record& r) {
    std::vector<std::vector<std::size_t>> out;
    if (r.kind != RecordKind::SpineManipulator) {
        for (std::size_t i = 0; i < r.cells.size(); ++i) out.push_back({i});
        return out;
    }
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
        const std::string& c = r.cells[i].text;
        if (c == "*^") {
            out.push_back({i});
            out.push_back({i});
        } else if (c == "*v") {
            std::vector<std::size_t> group;
            while (i < r.cells.size() && r.cells[i].text == "*v") group.push_back(i++);
            --i;
            out.push_back(std::move(group));
        } else if (c != "*-") {
            out.push_back({i});
        }
    }
    return out;
}

KernDocument parse_document(std::string_view text, std::string source_name) {
    if (!is_valid_utf8(text)) throw KernError(ErrorCode::NotUtf8, "input is not valid UTF-8");
    KernDocument doc;
    doc.source_name = std::move(source_name);
    if (text.empty()) return doc;

    doc.final_newline = text.back() == '\n';
    std::string_view body = doc.final_newline ? text.substr(0, text.size() - 1) : text;
    std::vector<std::string_view> lines = split(body, '\n');

    std::vector<std::string> columns;
    bool started = false;
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const std::size_t line_no = li + 1;
        std::string_view line = lines[li];
        if (line.empty()) throw KernError(ErrorCode::RecordWidthMismatch, "empty record", line_no);

        Record rec;
        rec.line = line_no;
        if (line.starts_with("!!")) {
            rec.kind = RecordKind::Comment;
            rec.cells.push_back(Cell{std::string(line), {}});
            doc.records.push_back(std::move(rec));
            continue;
        }

        std::vector<std::string_view> parts = split(line, '\t');
        for (std::string_view p : parts) {
            if (p.empty()) throw KernError(ErrorCode::LexError, "empty field", line_no);
        }

        if (columns.empty()) {
            if (started) {
                throw KernError(ErrorCode::RecordWidthMismatch,
                                "record after all spines were terminated", line_no);
            }
            for (std::string_view p : parts) {
                if (classify(p) != CellClass::Exclusive) {
                    throw KernError(ErrorCode::RecordWidthMismatch,
                                    "record before any exclusive interpretation", line_no);
                }
                if (!valid_exclusive_name(p)) {
                    throw KernError(ErrorCode::UnknownExclusiveInterp,
                                    "bad exclusive interpretation '" + std::string(p) + "'", line_no);
                }
            }
            rec.kind = RecordKind::ExclusiveInterp;
            for (std::string_view p : parts) {
                rec.cells.push_back(Cell{std::string(p), {}});
                columns.emplace_back(p);
            }
            rec.spines = columns;
            started = true;
            doc.records.push_back(std::move(rec));
            continue;
        }

        if (parts.size() != columns.size()) {
            throw KernError(ErrorCode::RecordWidthMismatch,
                            std::to_string(parts.size()) + " fields but " + std::to_string(columns.size()) +
                                " active spines",
                            line_no);
        }

        CellClass cls = classify(parts.front());
        for (std::string_view p : parts) {
            if (classify(p) != cls) throw KernError(ErrorCode::MixedRecordKind, "mixed record kinds", line_no);
        }
        rec.spines = columns;
        switch (cls) {
            case CellClass::Exclusive:
                throw KernError(ErrorCode::MixedRecordKind,
                                "exclusive interpretation inside document body", line_no);
            case CellClass::Barline: rec.kind = RecordKind::Barline; break;
            case CellClass::Comment: rec.kind = RecordKind::Comment; break;
            case CellClass::Data: rec.kind = RecordKind::Data; break;
            case CellClass::Interp: {
                bool manip = false;
                bool tandem = false;
                for (std::string_view p : parts) {
                    if (p == "*+" || p == "*x") {
                        throw KernError(ErrorCode::LexError,
                                        "unsupported spine manipulator '" + std::string(p) + "'", line_no);
                    }
                    if (is_manipulator_cell(p)) {
                        manip = true;
                    } else if (p != "*") {
                        tandem = true;
                    }
                }
                if (manip && tandem) {
                    throw KernError(ErrorCode::MixedRecordKind,
                                    "spine manipulators mixed with tandem interpretations", line_no);
                }
                rec.kind = manip ? RecordKind::SpineManipulator : RecordKind::TandemInterp;
                break;
            }
        }

        for (std::size_t i = 0; i < parts.size(); ++i) {
            Cell cell{std::string(parts[i]), {}};
            if (rec.kind == RecordKind::Data && columns[i] == "**kern") {
                try {
                    cell.notes = lex_data_cell(parts[i]);
                } catch (const KernError& e) {
                    throw KernError(ErrorCode::LexError, e.what(), line_no);
                }
            }
            rec.cells.push_back(std::move(cell));
        }

        if (rec.kind == RecordKind::SpineManipulator) {
            // A *v run must hold at least two cells and merge spines of one type.
            for (std::size_t i = 0; i < parts.size();) {
                if (parts[i] != "*v") {
                    ++i;
                    continue;
                }
                std::size_t j = i;
                while (j < parts.size() && parts[j] == "*v") ++j;
                if (j - i < 2) throw KernError(ErrorCode::LexError, "lone *v merge", line_no);
                for (std::size_t k = i; k < j; ++k) {
                    if (columns[k] != columns[i]) {
                        throw KernError(ErrorCode::LexError, "merge across spine types", line_no);
                    }
                }
                i = j;
            }
            std::vector<std::string> next;
            for (const auto& sources : spine_successors(rec)) next.push_back(columns[sources.front()]);
            columns = std::move(next);
        }
        doc.records.push_back(std::move(rec));
    }
    doc.open_spines = columns.size();
    return doc;
}

std::string serialize_document(const KernDocument& doc) {
    std::string out;
    for (std::size_t r = 0; r < doc.records.size(); ++r) {
        const Record& rec = doc.records[r];
        for (std::size_t i = 0; i < rec.cells.size(); ++i) {
            if (i > 0) out.push_back('\t');
            out += rec.cells[i].text;
        }
        if (r + 1 < doc.records.size() || doc.final_newline) out.push_back('\n');
    }
    return out;
}

Rational token_duration(const NoteToken& tok) {
    if (!tok.has_duration()) throw KernError(ErrorCode::NoDuration, "token has no duration");
    if (tok.duration_digits.size() > 9) throw KernError(ErrorCode::Overflow, "duration numeral too long");
    const std::int64_t d = std::stoll(tok.duration_digits);
    Rational base;
    if (d == 0) {
        // "0" breve, "00" longa, "000" maxima
        base = Rational(std::int64_t{1} << tok.duration_digits.size());
    } else {
        base = Rational(1, d);
    }
    if (tok.dots > 30) throw KernError(ErrorCode::Overflow, "too many augmentation dots");
    // 2 - 2^-dots
    Rational factor = Rational(2) - Rational(1, std::int64_t{1} << tok.dots);
    return base * factor;
}

Pitch pitch_of(const NoteToken& tok) {
    if (tok.pitch_letters.empty()) throw KernError(ErrorCode::LexError, "token has no pitch");
    const std::string& letters = tok.pitch_letters;
    const bool lower = std::islower(static_cast<unsigned char>(letters.front()));
    for (char c : letters) {
        if (static_cast<bool>(std::islower(static_cast<unsigned char>(c))) != lower) {
            throw KernError(ErrorCode::MixedCasePitch, "mixed-case pitch '" + letters + "'");
        }
    }
    static constexpr int steps[7] = {9, 11, 0, 2, 4, 5, 7};  // a b c d e f g
    const int step = steps[std::tolower(static_cast<unsigned char>(letters.front())) - 'a'];
    const int extra = static_cast<int>(letters.size()) - 1;
    int semitone = lower ? 60 + 12 * extra + step : 48 - 12 * extra + step;
    for (char c : tok.accidentals) {
        if (c == '#') ++semitone;
        if (c == '-') --semitone;
    }
    return Pitch{semitone, letters + tok.accidentals};
}

}  // namespace kernforge
