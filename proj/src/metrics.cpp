#include "kernforge/metrics.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "kernforge/error.hpp"
#include "kernforge/parallel.hpp"
#include "kernforge/utf8.hpp"

namespace kernforge::metrics {

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Note: return "note";
        case EventKind::Rest: return "rest";
        case EventKind::Barline: return "barline";
        case EventKind::Clef: return "clef";
        case EventKind::TimeSig: return "timesig";
        case EventKind::KeySig: return "keysig";
    }
    return "?";
}

double CerCounts::value() const {
    if (reference_length == 0) return 0.0;
    return static_cast<double>(distance) / static_cast<double>(reference_length);
}

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

CerCounts cer_counts(std::string_view reference, std::string_view prediction) {
    std::u32string ref = decode_utf8_lenient(reference);
    std::u32string pred = decode_utf8_lenient(prediction);
    if (ref.empty() && !pred.empty()) {
        throw KernError(ErrorCode::EmptyReference, "character error rate undefined for an empty reference");
    }
    return CerCounts{levenshtein(ref, pred), ref.size()};
}

double cer(std::string_view reference, std::string_view prediction) {
    return cer_counts(reference, prediction).value();
}

namespace {

std::string strip_digits(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c < '0' || c > '9') out.push_back(c);
    }
    return out.empty() ? std::string("=") : out;
}

std::string note_attrs(const NoteToken& tok, const Rational& dur) {
    std::string attrs;
    if (tok.is_grace()) attrs += "grace:";
    if (tok.is_rest()) return attrs + dur.str();
    std::string ties = tok.ties;
    std::sort(ties.begin(), ties.end());
    attrs += tok.pitch_letters + tok.accidentals + "/" + dur.str();
    if (!ties.empty()) attrs += "/" + ties;
    return attrs;
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

}  // namespace

std::vector<SymbolEvent> extract_events(const KernDocument& doc) {
    std::vector<SymbolEvent> events;
    std::vector<Rational> offset;
    std::size_t measure = 0;
    bool measure_has_data = false;

    for (const Record& rec : doc.records) {
        if (rec.kind == RecordKind::ExclusiveInterp) {
            offset.assign(rec.cells.size(), Rational(0));
            continue;
        }
        if (rec.kind == RecordKind::Comment) continue;
        if (offset.size() != rec.cells.size()) offset.resize(rec.cells.size(), Rational(0));

        switch (rec.kind) {
            case RecordKind::Barline:
                ++measure;
                measure_has_data = false;
                std::fill(offset.begin(), offset.end(), Rational(0));
                events.push_back({measure, Rational(0), EventKind::Barline, strip_digits(rec.cells.front().text)});
                break;
            case RecordKind::TandemInterp:
                for (std::size_t i = 0; i < rec.cells.size(); ++i) {
                    if (rec.spines[i] != "**kern") continue;
                    const std::string& t = rec.cells[i].text;
                    EventKind kind;
                    if (starts_with(t, "*clef")) {
                        kind = EventKind::Clef;
                    } else if (starts_with(t, "*M") && t.size() > 2 && t[2] >= '0' && t[2] <= '9') {
                        kind = EventKind::TimeSig;
                    } else if (starts_with(t, "*k[")) {
                        kind = EventKind::KeySig;
                    } else {
                        continue;
                    }
                    events.push_back({measure_has_data ? measure + 1 : measure, Rational(0), kind, t.substr(1)});
                }
                break;
            case RecordKind::SpineManipulator: {
                std::vector<Rational> next;
                for (const auto& sources : spine_successors(rec)) {
                    Rational v = offset[sources.front()];
                    for (std::size_t s : sources) v = std::max(v, offset[s]);
                    next.push_back(v);
                }
                offset = std::move(next);
                break;
            }
            case RecordKind::Data:
                for (std::size_t i = 0; i < rec.cells.size(); ++i) {
                    const Cell& cell = rec.cells[i];
                    if (rec.spines[i] != "**kern" || cell.is_null() || cell.notes.empty()) continue;
                    measure_has_data = true;
                    Rational step(0);
                    for (std::size_t n = 0; n < cell.notes.size(); ++n) {
                        const NoteToken& tok = cell.notes[n];
                        Rational dur = tok.has_duration() ? token_duration(tok) : Rational(0);
                        if (n == 0 && !tok.is_grace()) step = dur;
                        events.push_back({measure, offset[i], tok.is_rest() ? EventKind::Rest : EventKind::Note,
                                          note_attrs(tok, dur)});
                    }
                    offset[i] += step;
                }
                break;
            default: break;
        }
    }
    return events;
}

Rational OmrNed::exact() const {
    const std::size_t total = 2 * matched + inserted + deleted;
    if (total == 0) return Rational(0);
    return Rational(static_cast<std::int64_t>(inserted + deleted), static_cast<std::int64_t>(total));
}

OmrNed omr_ned(std::span<const SymbolEvent> reference, std::span<const SymbolEvent> prediction) {
    std::map<SymbolEvent, std::size_t> pool;
    for (const SymbolEvent& e : reference) ++pool[e];
    OmrNed out;
    for (const SymbolEvent& e : prediction) {
        auto it = pool.find(e);
        if (it != pool.end() && it->second > 0) {
            --it->second;
            ++out.matched;
        }
    }
    out.deleted = reference.size() - out.matched;
    out.inserted = prediction.size() - out.matched;
    return out;
}

OmrNed omr_ned(const KernDocument& reference, const KernDocument& prediction) {
    auto ref = extract_events(reference);
    auto pred = extract_events(prediction);
    return omr_ned(ref, pred);
}

MetricReport score(std::string_view reference, std::string_view prediction) {
    MetricReport report;
    report.cer = cer(reference, prediction);
    auto ref = extract_events(parse_document(reference));
    std::vector<SymbolEvent> pred;
    try {
        pred = extract_events(parse_document(prediction));
    } catch (const KernError&) {
        report.prediction_parsed = false;
    }
    report.omr = omr_ned(ref, pred);
    return report;
}

std::vector<MetricReport> score_batch(std::span<const TextPair> pairs) {
    return parallel_map<MetricReport>(pairs.size(), [&](std::size_t i) {
        return score(pairs[i].first, pairs[i].second);
    });
}

std::vector<MetricReport> score_batch_serial(std::span<const TextPair> pairs) {
    std::vector<MetricReport> out;
    out.reserve(pairs.size());
    for (const auto& [ref, pred] : pairs) out.push_back(score(ref, pred));
    return out;
}

}  // namespace kernforge::metrics
