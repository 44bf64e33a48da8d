#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "kernforge/kern.hpp"
#include "kernforge/rational.hpp"

namespace kernforge::filter {

// Rule identifiers, in the order the chain evaluates them.
inline constexpr std::string_view kBrokenUtf8 = "broken utf-8";
inline constexpr std::string_view kConversionArtifact = "severe conversion artifact";
inline constexpr std::string_view kMissingTerminator = "missing spine terminator";
inline constexpr std::string_view kMissingClef = "missing clef";
inline constexpr std::string_view kAccidentalRun = "impossible accidental run";
inline constexpr std::string_view kCorruptedOctave = "corrupted octave spelling";
inline constexpr std::string_view kMeasureMath = "invalid measure mathematics";

struct Reason {
    std::string rule;
    std::size_t line = 0;
    std::string message;

    bool operator==(const Reason&) const = default;
};

struct FilterReport {
    bool accepted = true;
    std::vector<Reason> reasons;

    bool operator==(const FilterReport&) const = default;
};

struct MeasureMismatch {
    std::size_t measure_index = 0;
    std::size_t voice = 0;
    Rational expected;
    Rational actual;
    std::size_t line = 0;

    bool operator==(const MeasureMismatch&) const = default;
};

// Runs the full rule chain. Never throws on bad input.
FilterReport filter_file(std::string_view bytes);

// Rules that the constraint engine guarantees: UTF-8, parseability (which
// includes record width) and spine termination. Clef and measure rules are
// deliberately left out.
FilterReport structural_check(std::string_view bytes);

// Sums durations per voice between barlines and compares them to the
// active *M signature. The first and the final measure may be short.
// Throws NoTimeSignature when data appears with no signature in effect.
std::vector<MeasureMismatch> check_measures(const KernDocument& doc);

// Problems in a single lexed token that the normalizer cannot repair.
// Empty result means the token can be brought to canonical form.
std::vector<std::string> token_artifacts(const NoteToken& tok);

}  // namespace kernforge::filter
