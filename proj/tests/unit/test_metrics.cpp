#include <doctest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "generator.hpp"
#include "kernforge/error.hpp"
#include "kernforge/filter.hpp"
#include "kernforge/kern.hpp"
#include "kernforge/metrics.hpp"
#include "kernforge/normalizer.hpp"
#include "kernforge/utf8.hpp"
#include "oracles.hpp"

using namespace kernforge;
using namespace kernforge::metrics;

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
    static const std::vector<std::string> alphabet = {"a", "b", "c", "4", " ", "\t", "\n", "é", "♯", "𝄞"};
    std::string s;
    const auto n = std::uniform_int_distribution<std::size_t>(0, max_len)(rng);
    for (std::size_t i = 0; i < n; ++i) s += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
    return s;
}

std::vector<SymbolEvent> notes_only(const std::vector<SymbolEvent>& ev) {
    std::vector<SymbolEvent> out;
    std::copy_if(ev.begin(), ev.end(), std::back_inserter(out), [](const SymbolEvent& e) { return e.kind == EventKind::Note; });
    return out;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("cer examples") {
    CHECK(cer("abc", "abc") == 0.0);
    CHECK(cer("abc", "") == 1.0);
    CHECK(cer("4c 4e", "4c 4f") == doctest::Approx(0.2));
    CHECK(cer_counts("4c 4e", "4c 4f").distance == 1);
    CHECK(cer("", "") == 0.0);
    try {
        cer("", "x");
        FAIL("expected EmptyReference");
    } catch (const KernError& e) {
        CHECK(e.code() == ErrorCode::EmptyReference);
    }
    // Code points, not bytes.
    CHECK(cer_counts("é", "e").distance == 1);
}

TEST_CASE("cer agrees with the full-matrix oracle") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        std::string a = random_text(rng, 30);
        std::string b = random_text(rng, 30);
        if (a.empty()) a = "x";
        auto c = cer_counts(a, b);
        auto ua = decode_utf8_lenient(a);
        auto ub = decode_utf8_lenient(b);
        CHECK(c.distance == kftest::dp_levenshtein(ua, ub));
        CHECK(c.reference_length == ua.size());
        CHECK(levenshtein(ua, ub) == levenshtein(ub, ua));
    }
}

TEST_CASE("events follow cumulative offsets") {
    auto ev = notes_only(extract_events(parse_document("**kern\n*M2/4\n=1\n4c\n4d\n==\n*-\n")));
    REQUIRE(ev.size() == 2);
    CHECK(ev[0].offset == Rational(0));
    CHECK(ev[1].offset == Rational(1, 4));
    CHECK(ev[0].measure_index == ev[1].measure_index);

    auto chord = notes_only(extract_events(parse_document("**kern\n4c 4e\n*-\n")));
    REQUIRE(chord.size() == 2);
    CHECK(chord[0].offset == chord[1].offset);
    CHECK(chord[0].attrs != chord[1].attrs);

    auto nulls = extract_events(parse_document("**kern\t**kern\n4c\t2e\n4d\t.\n*-\t*-\n"));
    CHECK(notes_only(nulls).size() == 3);
}

TEST_CASE("split voices accumulate independently") {
    const std::string text = "**kern\n*clefG2\n*M2/4\n=1\n*^\n4c\t2e\n4d\t.\n*v\t*v\n=2\n2c\n==\n*-\n";
    auto doc = parse_document(text);
    auto ev = notes_only(extract_events(doc));
    REQUIRE(ev.size() == 4);
    // Each sub-voice fills the 2/4 measure on its own.
    Rational voice0, voice1;
    for (const auto& e : ev) {
        if (e.measure_index != ev.front().measure_index) continue;
        if (e.attrs.starts_with("e")) voice1 = e.offset + Rational(1, 2);
        if (e.attrs.starts_with("d")) voice0 = e.offset + Rational(1, 4);
    }
    CHECK(voice0 == Rational(1, 2));
    CHECK(voice1 == Rational(1, 2));
    CHECK(filter::check_measures(doc).empty());
    CHECK(ev.back().measure_index == ev.front().measure_index + 1);
    CHECK(ev.back().offset == Rational(0));
}

TEST_CASE("metadata lands at offset zero") {
    auto ev = extract_events(parse_document("**kern\n*clefG2\n*k[f#]\n*M3/4\n=1\n2.c\n==\n*-\n"));
    std::size_t meta = 0;
    for (const auto& e : ev) {
        if (e.kind == EventKind::Clef || e.kind == EventKind::KeySig || e.kind == EventKind::TimeSig) {
            ++meta;
            CHECK(e.offset == Rational(0));
            CHECK(!e.attrs.empty());
        }
    }
    CHECK(meta == 3);
}

TEST_CASE("two by two matching example") {
    std::vector<SymbolEvent> ref = {{0, Rational(0), EventKind::Note, "c/4"}, {0, Rational(1, 4), EventKind::Note, "d/4"}};
    std::vector<SymbolEvent> pred = {{0, Rational(0), EventKind::Note, "c/4"}, {0, Rational(1, 4), EventKind::Note, "e/4"}};
    auto r = omr_ned(ref, pred);
    CHECK(r.matched == 1);
    CHECK(r.inserted == 1);
    CHECK(r.deleted == 1);
    CHECK(r.exact() == Rational(1, 2));
    std::vector<SymbolEvent> none;
    CHECK(omr_ned(none, none).exact() == Rational(0));
    CHECK(omr_ned(ref, none).exact() == Rational(1));
    // Position gating: same symbol, different offset, no match.
    std::vector<SymbolEvent> shifted = {{0, Rational(1, 8), EventKind::Note, "c/4"}};
    std::vector<SymbolEvent> one = {ref[0]};
    CHECK(omr_ned(one, shifted).matched == 0);
}

TEST_CASE("identity, emptiness, symmetry and bounds on generated documents") {
    std::mt19937_64 rng(13);
    const KernDocument empty;
    std::vector<KernDocument> docs;
    for (int i = 0; i < 120; ++i) docs.push_back(parse_document(kftest::random_document(rng)));
    for (const auto& d : docs) {
        CHECK(omr_ned(d, d).exact() == Rational(0));
        CHECK(omr_ned(d, empty).exact() == Rational(1));
        auto [norm, trace] = normalize::normalize_document(d);
        (void)trace;
        auto ne = omr_ned(norm, normalize::normalize_document(norm).first);
        CHECK(ne.exact() == Rational(0));
    }
    for (int i = 0; i < 1000; ++i) {
        const auto& a = docs[static_cast<std::size_t>(i) % docs.size()];
        const auto& b = docs[static_cast<std::size_t>(i * 7 + 3) % docs.size()];
        auto ab = omr_ned(a, b);
        auto ba = omr_ned(b, a);
        CHECK(ab.exact() == ba.exact());
        CHECK(ab.inserted == ba.deleted);
        CHECK(ab.exact() >= Rational(0));
        CHECK(ab.exact() <= Rational(1));
    }
}

TEST_CASE("sorting passes leave the event set unchanged") {
    const std::string raw = "**kern\n*clefG2\n*M4/4\n=1\n8fJ[ 8c\n8f]L\n2.g 2.e\n==\n*-\n";
    auto doc = parse_document(raw);
    CHECK(omr_ned(doc, normalize::normalize_document(doc).first).exact() == Rational(0));
}

TEST_CASE("score and batch scoring") {
    const std::string a = "**kern\n*clefG2\n*M2/4\n=1\n4c\n4d\n==\n*-\n";
    const std::string b = "**kern\n*clefG2\n*M2/4\n=1\n4c\n4e\n==\n*-\n";
    auto same = score(a, a);
    CHECK(same.cer == 0.0);
    CHECK(same.omr.value() == 0.0);
    auto broken = score(a, "**kern\t**kern\n4c\n");
    CHECK_FALSE(broken.prediction_parsed);
    CHECK(broken.omr.exact() == Rational(1));

    std::vector<TextPair> pairs = {{a, a}, {a, b}, {b, a}, {a, "garbage"}};
    std::mt19937_64 rng(2);
    for (int i = 0; i < 40; ++i) pairs.emplace_back(kftest::random_document(rng), kftest::random_document(rng));
    auto par = score_batch(pairs);
    auto ser = score_batch_serial(pairs);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
        CHECK(par[i].cer == ser[i].cer);
        CHECK(par[i].omr.exact() == ser[i].omr.exact());
    }
    CHECK(par[1].omr.exact() == par[2].omr.exact());
}

}  // TEST_SUITE
