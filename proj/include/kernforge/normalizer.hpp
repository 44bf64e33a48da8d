#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kernforge/kern.hpp"

namespace kernforge::normalize {

// Pass identifiers in execution order. The list is a reconstruction: it
// fixes one deterministic, idempotent ordering that reproduces every
// documented raw -> normal example.
inline constexpr std::string_view kPasses[] = {
    "strip_nonkern_spines",    "strip_comments",        "strip_grace_rests",
    "strip_token_residue",     "dedupe_time_signatures", "repair_accidentals",
    "remove_zero_length_ties", "sort_token_components", "sort_chords",
    "repad_nulls",             "prune_null_interpretations",
};

struct NormalizationTrace {
    std::vector<std::pair<std::string, std::size_t>> passes;

    std::size_t count(std::string_view pass) const;
    std::size_t total() const;
    bool operator==(const NormalizationTrace&) const = default;
};

// Canonical rank of a component character within its class, used by
// sort_token. Characters outside every class rank last.
int component_rank(char c);

// Sorts the characters of every component class into canonical rank order.
NoteToken sort_token(const NoteToken& tok);

// Renders a token with components in canonical order: duration, dots,
// grace, pitch or rest, accidental, tie, slur-close, articulations, beams,
// stem, slur-open, then any residue.
std::string token_text(const NoteToken& tok);

// Ascending pitch; stable for enharmonic or equal pitches. Rests sort first.
std::vector<NoteToken> sort_chord(std::vector<NoteToken> notes);

// When a sharp/flat group and a natural group conflict, the last-written
// group wins. Throws NormalizationConflict for sharp+flat mixtures.
NoteToken repair_accidentals(const NoteToken& tok);

KernDocument strip_nonkern_spines(const KernDocument& doc);
KernDocument strip_nonvisual(const KernDocument& doc);

std::pair<KernDocument, NormalizationTrace> normalize_document(const KernDocument& doc);

}  // namespace kernforge::normalize
