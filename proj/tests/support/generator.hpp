#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace kftest {

struct GenOptions {
    int max_kern_spines = 3;
    int max_measures = 4;
    bool raw = true;  // unsorted components, unsorted chords, comments, extra spines, *met, ...
};

// Random **kern document that the filter accepts. With `raw` set the text
// carries the kinds of encoding variation the normalizer removes.
std::string random_document(std::mt19937_64& rng, const GenOptions& opt = {});

}  // namespace kftest
