#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "kernforge/error.hpp"
#include "kernforge/rational.hpp"

namespace kernforge {

enum class RecordKind { ExclusiveInterp, TandemInterp, SpineManipulator, Barline, Data, Comment };

std::string_view to_string(RecordKind kind);

// A single **kern data token decomposed into its components. Each string
// field keeps its characters in written order so that the normalizer can
// see (and repair) conflicting or unsorted input.
struct NoteToken {
    std::string duration_digits;  // "" when absent, "0" breve
    int dots = 0;
    std::string grace;            // q, qq or Q
    std::string pitch_letters;    // one letter repeated; case encodes octave
    int rest = 0;                 // number of 'r'
    std::string accidentals;      // '#', '-', 'n'
    std::string ties;             // '[', '_', ']'
    std::string slurs;            // '(', ')'
    std::string articulations;    // ' ` ~ ^ ;
    std::string beams;            // L J K k
    std::string stems;            // / and backslash
    std::string unknown_trailing; // anything else, verbatim

    bool is_rest() const { return rest > 0; }
    bool is_grace() const { return !grace.empty(); }
    bool has_duration() const { return !duration_digits.empty(); }

    bool operator==(const NoteToken&) const = default;
};

struct Pitch {
    int semitone = 0;   // middle C = 60
    std::string spelling;

    bool operator==(const Pitch&) const = default;
};

struct Cell {
    std::string text;
    std::vector<NoteToken> notes;  // lexed chord for **kern data cells, empty otherwise

    bool is_null() const { return text == "."; }
    bool operator==(const Cell&) const = default;
};

struct Record {
    RecordKind kind = RecordKind::Data;
    std::vector<Cell> cells;
    // Exclusive interpretation of each column at this record. Empty for
    // global ("!!") comments, which span the whole line.
    std::vector<std::string> spines;
    std::size_t line = 0;

    bool is_global_comment() const { return kind == RecordKind::Comment && spines.empty(); }
    bool operator==(const Record&) const = default;
};

struct KernDocument {
    std::vector<Record> records;
    std::string source_name;
    bool final_newline = true;
    std::size_t open_spines = 0;  // spines still active after the last record

    bool operator==(const KernDocument&) const = default;
};

// Lexes one chord member (no spaces). Throws LexError.
NoteToken lex_token(std::string_view text);

// Lexes a **kern data cell: "." or space-separated notes. Throws LexError.
std::vector<NoteToken> lex_data_cell(std::string_view text);

KernDocument parse_document(std::string_view text, std::string source_name = {});
std::string serialize_document(const KernDocument& doc);

// Fraction of a whole note: (1/d)(2 - 2^-dots); "0" is a breve.
Rational token_duration(const NoteToken& tok);

Pitch pitch_of(const NoteToken& tok);

// For record r, successors[i] lists the columns of r that feed column i of
// the next record. Identity for everything except manipulator records.
std::vector<std::vector<std::size_t>> spine_successors(const Record& r);

bool is_manipulator_cell(std::string_view cell);

}  // namespace kernforge
