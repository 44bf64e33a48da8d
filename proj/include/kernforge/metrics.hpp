#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kernforge/kern.hpp"
#include "kernforge/rational.hpp"

namespace kernforge::metrics {

enum class EventKind { Note, Rest, Barline, Clef, TimeSig, KeySig };

std::string_view to_string(EventKind kind);

struct SymbolEvent {
    std::size_t measure_index = 0;
    Rational offset;  // whole notes from the start of the measure
    EventKind kind = EventKind::Note;
    std::string attrs;

    auto operator<=>(const SymbolEvent&) const = default;
    bool operator==(const SymbolEvent&) const = default;
};

struct CerCounts {
    std::size_t distance = 0;
    std::size_t reference_length = 0;

    double value() const;
};

// Character-level Levenshtein over code points. Throws EmptyReference when
// the reference is empty and the prediction is not.
CerCounts cer_counts(std::string_view reference, std::string_view prediction);
double cer(std::string_view reference, std::string_view prediction);

// Plain two-row edit distance over arbitrary sequences of code points.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

// Measures are counted by barline ordinal. Tandem clef, meter and key
// events land at offset 0 of the measure they first affect.
std::vector<SymbolEvent> extract_events(const KernDocument& doc);

struct OmrNed {
    std::size_t matched = 0;
    std::size_t inserted = 0;
    std::size_t deleted = 0;

    // (inserted + deleted) / (|reference| + |prediction|), 0 when both are empty.
    Rational exact() const;
    double value() const { return exact().to_double(); }
};

// Exact-key multiset matching; unmatched events cost one each.
OmrNed omr_ned(std::span<const SymbolEvent> reference, std::span<const SymbolEvent> prediction);
OmrNed omr_ned(const KernDocument& reference, const KernDocument& prediction);

struct MetricReport {
    double cer = 0.0;
    OmrNed omr;
    bool prediction_parsed = true;
};

// A prediction that does not parse contributes no events; the reference
// must parse.
MetricReport score(std::string_view reference, std::string_view prediction);

using TextPair = std::pair<std::string, std::string>;

std::vector<MetricReport> score_batch(std::span<const TextPair> pairs);
std::vector<MetricReport> score_batch_serial(std::span<const TextPair> pairs);

}  // namespace kernforge::metrics
