#include "kernforge/filter.hpp"

#include <algorithm>
#include <optional>
#include <regex>
#include <tuple>

#include "kernforge/utf8.hpp"

namespace kernforge::filter {

namespace {

void reject(FilterReport& report, std::string_view rule, std::size_t line, std::string message) {
    report.accepted = false;
    report.reasons.push_back(Reason{std::string(rule), line, std::move(message)});
}

bool printable_ascii(std::string_view s, bool allow_space) {
    return std::all_of(s.begin(), s.end(), [&](char c) {
        return (c > 0x20 && c < 0x7F) || (allow_space && c == ' ');
    });
}

std::optional<Rational> parse_meter(std::string_view cell) {
    static const std::regex meter(R"(\*M([0-9]{1,4})/([0-9]{1,4}))");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(cell.begin(), cell.end(), m, meter)) return std::nullopt;
    std::int64_t n = std::stoll(m[1].str());
    std::int64_t d = std::stoll(m[2].str());
    if (n == 0 || d == 0) return std::nullopt;
    return Rational(n, d);
}

Rational cell_duration(const Cell& cell) {
    if (cell.notes.empty()) return Rational(0);
    const NoteToken& first = cell.notes.front();
    if (first.is_grace()) return Rational(0);
    return token_duration(first);
}

std::size_t count(std::string_view s, char c) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), c)); }

template <class F>
void for_each_kern_token(const KernDocument& doc, F&& f) {
    for (const Record& rec : doc.records) {
        if (rec.kind != RecordKind::Data) continue;
        for (std::size_t i = 0; i < rec.cells.size(); ++i) {
            if (rec.spines[i] != "**kern") continue;
            for (const NoteToken& tok : rec.cells[i].notes) f(rec, tok);
        }
    }
}

void check_artifacts(const KernDocument& doc, FilterReport& report) {
    bool any_kern = false;
    for (const Record& rec : doc.records) {
        if (rec.kind == RecordKind::ExclusiveInterp) {
            any_kern = std::find(rec.spines.begin(), rec.spines.end(), "**kern") != rec.spines.end();
        }
        if (rec.kind == RecordKind::TandemInterp || rec.kind == RecordKind::SpineManipulator ||
            rec.kind == RecordKind::Barline) {
            for (std::size_t i = 0; i < rec.cells.size(); ++i) {
                if (rec.spines[i] != "**kern") continue;
                const std::string& t = rec.cells[i].text;
                bool ok = rec.kind == RecordKind::Barline ? printable_ascii(t, false)
                                                          : printable_ascii(t.substr(0, 2), false) &&
                                                                printable_ascii(t, true);
                if (!ok) reject(report, kConversionArtifact, rec.line, "non-ASCII or control bytes in '" + t + "'");
            }
        }
    }
    if (!any_kern) reject(report, kConversionArtifact, 0, "no **kern spine");
    for_each_kern_token(doc, [&](const Record& rec, const NoteToken& tok) {
        for (std::string& why : token_artifacts(tok)) reject(report, kConversionArtifact, rec.line, std::move(why));
    });
}

void check_clefs(const KernDocument& doc, FilterReport& report) {
    std::vector<bool> has_clef;
    for (const Record& rec : doc.records) {
        if (rec.is_global_comment()) continue;
        switch (rec.kind) {
            case RecordKind::ExclusiveInterp: has_clef.assign(rec.cells.size(), false); break;
            case RecordKind::TandemInterp:
                for (std::size_t i = 0; i < rec.cells.size(); ++i) {
                    if (rec.cells[i].text.starts_with("*clef")) has_clef[i] = true;
                }
                break;
            case RecordKind::SpineManipulator: {
                std::vector<bool> next;
                for (const auto& src : spine_successors(rec)) {
                    bool any = false;
                    for (std::size_t s : src) any = any || has_clef[s];
                    next.push_back(any);
                }
                has_clef = std::move(next);
                break;
            }
            case RecordKind::Data:
                for (std::size_t i = 0; i < rec.cells.size(); ++i) {
                    if (rec.spines[i] == "**kern" && !has_clef[i]) {
                        reject(report, kMissingClef, rec.line,
                               "**kern spine " + std::to_string(i + 1) + " has data before any *clef");
                        return;
                    }
                }
                break;
            default: break;
        }
    }
}

void check_accidentals(const KernDocument& doc, FilterReport& report) {
    for_each_kern_token(doc, [&](const Record& rec, const NoteToken& tok) {
        const std::string& acc = tok.accidentals;
        if (count(acc, '#') > 0 && count(acc, '-') > 0) {
            reject(report, kAccidentalRun, rec.line, "sharp and flat on one note '" + tok.pitch_letters + acc + "'");
        } else if (count(acc, '#') > 2 || count(acc, '-') > 2 || count(acc, 'n') > 2) {
            reject(report, kAccidentalRun, rec.line, "more than two accidentals '" + tok.pitch_letters + acc + "'");
        }
    });
}

void check_octaves(const KernDocument& doc, FilterReport& report) {
    for_each_kern_token(doc, [&](const Record& rec, const NoteToken& tok) {
        if (tok.pitch_letters.empty()) return;
        try {
            pitch_of(tok);
        } catch (const KernError& e) {
            reject(report, kCorruptedOctave, rec.line, e.what());
        }
    });
}

void check_chords(const KernDocument& doc, FilterReport& report) {
    for (const Record& rec : doc.records) {
        if (rec.kind != RecordKind::Data) continue;
        for (std::size_t i = 0; i < rec.cells.size(); ++i) {
            const auto& notes = rec.cells[i].notes;
            if (rec.spines[i] != "**kern" || notes.size() < 2) continue;
            std::optional<Rational> first;
            for (const NoteToken& n : notes) {
                if (n.is_grace() || !n.has_duration()) continue;
                Rational d = token_duration(n);
                if (!first) {
                    first = d;
                } else if (*first != d) {
                    reject(report, kMeasureMath, rec.line, "chord notes disagree on duration in '" + rec.cells[i].text + "'");
                    break;
                }
            }
        }
    }
}

}  // namespace

std::vector<std::string> token_artifacts(const NoteToken& tok) {
    std::vector<std::string> out;
    const std::string& d = tok.duration_digits;
    if (tok.unknown_trailing.size() > 2) out.push_back("unknown token residue '" + tok.unknown_trailing + "'");
    if (d.size() > 1 && d.front() == '0') out.push_back("unsupported duration '" + d + "'");
    if (d.size() > 3) out.push_back("duration numeral too long '" + d + "'");
    if (tok.dots > 3) out.push_back("more than three augmentation dots");
    if (tok.dots > 0 && d.empty()) out.push_back("augmentation dot without duration");
    if (!(tok.grace.empty() || tok.grace == "q" || tok.grace == "qq" || tok.grace == "Q")) {
        out.push_back("malformed grace marker '" + tok.grace + "'");
    }
    if (tok.pitch_letters.size() > 5) out.push_back("pitch outside notated range '" + tok.pitch_letters + "'");
    if (tok.rest > 2) out.push_back("malformed rest");
    std::size_t zero_length = std::min(count(tok.ties, '['), count(tok.ties, ']'));
    if (tok.ties.size() - 2 * zero_length > 1) out.push_back("conflicting ties '" + tok.ties + "'");
    if (tok.stems.size() > 1) out.push_back("conflicting stems '" + tok.stems + "'");
    return out;
}

std::vector<MeasureMismatch> check_measures(const KernDocument& doc) {
    struct Voice {
        Rational sum;
        std::optional<Rational> meter;
        bool kern = false;
    };
    std::vector<Voice> voices;
    std::vector<MeasureMismatch> out;
    std::size_t measure = 0;
    bool has_data = false;

    // Short measures wait here until later data shows they were not the last one.
    std::vector<MeasureMismatch> pending_short;

    auto close_measure = [&](std::size_t line) {
        if (has_data) {
            out.insert(out.end(), pending_short.begin(), pending_short.end());
            pending_short.clear();
            for (std::size_t v = 0; v < voices.size(); ++v) {
                const Voice& voice = voices[v];
                if (!voice.kern || !voice.meter) continue;
                const Rational& expected = *voice.meter;
                if (voice.sum == expected) continue;
                MeasureMismatch m{measure, v, expected, voice.sum, line};
                if (voice.sum > expected) {
                    out.push_back(m);
                } else if (measure != 0) {
                    pending_short.push_back(m);
                }
            }
        }
        for (Voice& v : voices) v.sum = Rational(0);
        has_data = false;
    };

    for (const Record& rec : doc.records) {
        if (rec.is_global_comment()) continue;
        switch (rec.kind) {
            case RecordKind::ExclusiveInterp:
                voices.clear();
                for (const std::string& s : rec.spines) voices.push_back(Voice{Rational(0), std::nullopt, s == "**kern"});
                break;
            case RecordKind::TandemInterp:
                for (std::size_t i = 0; i < rec.cells.size(); ++i) {
                    if (auto m = parse_meter(rec.cells[i].text)) voices[i].meter = m;
                }
                break;
            case RecordKind::SpineManipulator: {
                std::vector<Voice> next;
                for (const auto& src : spine_successors(rec)) {
                    Voice v = voices[src.front()];
                    for (std::size_t s : src) v.sum = std::min(v.sum, voices[s].sum);
                    next.push_back(v);
                }
                voices = std::move(next);
                break;
            }
            case RecordKind::Data:
                for (std::size_t i = 0; i < rec.cells.size(); ++i) {
                    if (!voices[i].kern || rec.cells[i].is_null()) continue;
                    if (!voices[i].meter) {
                        throw KernError(ErrorCode::NoTimeSignature, "data with no *M time signature in effect", rec.line);
                    }
                    voices[i].sum += cell_duration(rec.cells[i]);
                    has_data = true;
                }
                break;
            case RecordKind::Barline:
                close_measure(rec.line);
                ++measure;
                break;
            case RecordKind::Comment: break;
        }
    }
    close_measure(doc.records.empty() ? 0 : doc.records.back().line);
    std::sort(out.begin(), out.end(), [](const MeasureMismatch& a, const MeasureMismatch& b) {
        return std::tie(a.measure_index, a.voice) < std::tie(b.measure_index, b.voice);
    });
    return out;
}

FilterReport structural_check(std::string_view bytes) {
    FilterReport report;
    if (!is_valid_utf8(bytes)) {
        reject(report, kBrokenUtf8, 0, "input is not valid UTF-8");
        return report;
    }
    KernDocument doc;
    try {
        doc = parse_document(bytes);
    } catch (const KernError& e) {
        reject(report, kConversionArtifact, e.line(), std::string(to_string(e.code())) + ": " + e.what());
        return report;
    }
    if (doc.records.empty() || doc.open_spines > 0) {
        reject(report, kMissingTerminator, 0, std::to_string(doc.open_spines) + " spines never reach *-");
    }
    return report;
}

FilterReport filter_file(std::string_view bytes) {
    FilterReport report = structural_check(bytes);
    if (!report.accepted && report.reasons.front().rule != kMissingTerminator) return report;

    if (bytes.find('\r') != std::string_view::npos) {
        reject(report, kConversionArtifact, 0, "carriage return in input");
    }
    KernDocument doc = parse_document(bytes);
    check_artifacts(doc, report);
    check_clefs(doc, report);
    check_accidentals(doc, report);
    check_octaves(doc, report);
    try {
        for (const MeasureMismatch& m : check_measures(doc)) {
            reject(report, kMeasureMath, m.line,
                   "measure " + std::to_string(m.measure_index) + " voice " + std::to_string(m.voice + 1) + ": expected " +
                       m.expected.str() + ", got " + m.actual.str());
        }
        check_chords(doc, report);
    } catch (const KernError& e) {
        reject(report, kMeasureMath, e.line(), std::string(to_string(e.code())) + ": " + e.what());
    }

    // Rule order in the report follows the chain order.
    static constexpr std::string_view order[] = {kBrokenUtf8,   kConversionArtifact, kMissingTerminator, kMissingClef,
                                                 kAccidentalRun, kCorruptedOctave,    kMeasureMath};
    auto rank = [](const Reason& r) {
        return static_cast<std::size_t>(std::find(std::begin(order), std::end(order), r.rule) - std::begin(order));
    };
    std::stable_sort(report.reasons.begin(), report.reasons.end(),
                     [&](const Reason& a, const Reason& b) { return rank(a) < rank(b); });
    return report;
}

}  // namespace kernforge::filter
