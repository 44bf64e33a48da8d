#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "generator.hpp"
#include "kernforge/bpe.hpp"
#include "kernforge/constraint.hpp"
#include "kernforge/error.hpp"
#include "kernforge/kern.hpp"
#include "kernforge/normalizer.hpp"
#include "oracles.hpp"

using namespace kernforge;
using namespace kernforge::constraint;

namespace {

int id_of(const TokenTable& t, std::string_view bytes) {
    for (std::size_t i = 2; i < t.size(); ++i) {
        if (t.tokens[i] == bytes) return static_cast<int>(i);
    }
    FAIL("token not in vocabulary: " << std::string(bytes));
    return -1;
}

bool oracle_allows(const std::string& text, const std::string& bytes, bool eos) {
    if (eos) return kftest::in_language(text);
    if (bytes.empty()) return false;
    return kftest::has_completion(text + bytes);
}

std::string normalized(std::string_view raw) {
    return serialize_document(normalize::normalize_document(parse_document(raw)).first);
}

}  // namespace

TEST_SUITE("constraint_engine") {

TEST_CASE("initial mask") {
    ConstraintEngine eng(kftest::toy_vocab());
    const auto& t = eng.vocabulary();
    auto m = eng.compute_mask(eng.init_state());
    CHECK(m.allowed(id_of(t, "**kern")));
    CHECK(m.allowed(id_of(t, "**")));
    CHECK(m.allowed(id_of(t, "*")));
    CHECK_FALSE(m.allowed(id_of(t, "4c")));
    CHECK_FALSE(m.allowed(id_of(t, "\t")));
    CHECK_FALSE(m.allowed(id_of(t, "\n")));
    CHECK_FALSE(m.allowed(t.eos_id));
    CHECK_FALSE(m.allowed(0));
}

TEST_CASE("record width bookkeeping") {
    ConstraintEngine eng(kftest::toy_vocab());
    const auto& t = eng.vocabulary();
    DecodeState s = eng.advance(eng.init_state(), "**kern\t**kern\n*clefG2\t*clefG2\n");
    CHECK(s.active_spines == 2);
    CHECK(s.fields_in_record == 0);

    DecodeState one = eng.advance(s, "4c");
    auto m1 = eng.compute_mask(one);
    CHECK(m1.allowed(id_of(t, "\t")));
    CHECK_FALSE(m1.allowed(id_of(t, "\n")));

    DecodeState two = eng.advance(one, "\t4c");
    CHECK(two.fields_in_record == 2);
    auto m2 = eng.compute_mask(two);
    CHECK_FALSE(m2.allowed(id_of(t, "\t")));
    CHECK(m2.allowed(id_of(t, "\n")));
    DecodeState next = eng.advance(two, "\n");
    CHECK(next.fields_in_record == 0);
    CHECK(next.active_spines == 2);

    CHECK(eng.advance(s, "*^\t*\n").active_spines == 3);
    CHECK(eng.advance(s, "*v\t*v\n").active_spines == 1);
    CHECK(eng.advance(eng.advance(s, "*^\t*\n"), "*\t*v\t*v\n").active_spines == 2);

    // The merged width agrees with the parser on the emitted text.
    const std::string text = "**kern\t**kern\n*clefG2\t*clefG2\n*v\t*v\n4c\n*-\n";
    DecodeState end = eng.advance(eng.init_state(), text);
    CHECK(end.terminated());
    CHECK(parse_document(text).open_spines == 0);
}

TEST_CASE("incomplete cell blocks the separator") {
    ConstraintEngine eng(kftest::toy_vocab());
    const auto& t = eng.vocabulary();
    DecodeState s = eng.advance(eng.init_state(), "**kern\t**kern\n*\t*\n4");
    auto m = eng.compute_mask(s);
    CHECK_FALSE(m.allowed(id_of(t, "\t")));
    CHECK_FALSE(m.allowed(id_of(t, "\n")));
    CHECK(m.allowed(id_of(t, "c")));
    CHECK(m.allowed(id_of(t, "r")));
    // Cross-check against every two-byte continuation in the oracle.
    const std::string text = "**kern\t**kern\n*\t*\n4";
    CHECK_FALSE(kftest::has_completion(text + "\t"));
    CHECK(kftest::has_completion(text + "c\t"));
}

TEST_CASE("terminated documents allow only end of sequence") {
    ConstraintEngine eng(kftest::toy_vocab());
    DecodeState s = eng.advance(eng.init_state(), "**kern\n4c\n*-\n");
    CHECK(s.terminated());
    auto m = eng.compute_mask(s);
    CHECK(m.count() == 1);
    CHECK(m.allowed(eng.vocabulary().eos_id));
}

TEST_CASE("illegal advance") {
    ConstraintEngine eng(kftest::toy_vocab());
    try {
        eng.advance(eng.init_state(), "4c");
        FAIL("expected IllegalAdvance");
    } catch (const KernError& e) {
        CHECK(e.code() == ErrorCode::IllegalAdvance);
    }
    DecodeState s = eng.advance(eng.init_state(), "**kern\n");
    CHECK_THROWS_AS(eng.advance(s, "*+\n"), KernError);
    CHECK_THROWS_AS(eng.advance(s, "!! comment"), KernError);
    CHECK_THROWS_AS(eng.advance(s, "4c\t"), KernError);
    CHECK_THROWS_AS(eng.advance(s, "*v\n"), KernError);  // a lone merge cannot close
    CHECK_THROWS_AS(eng.advance(s, "8fJ["), KernError);  // non-canonical order
}

TEST_CASE("mask is pure and serial, parallel and cached masks agree") {
    std::mt19937_64 rng(1);
    auto corpus = kftest::load_dir("corpus");
    std::vector<std::string> docs;
    for (const auto& [n, b] : corpus) docs.push_back(normalized(b));
    auto vocab = bpe::train(docs, 600);
    ConstraintEngine eng(vocab.token_table());
    ConstraintEngine toy(kftest::toy_vocab());
    for (ConstraintEngine* e : {&eng, &toy}) {
        DecodeState s = e->init_state();
        for (int step = 0; step < 300; ++step) {
            const DecodeState before = s;
            auto cached = e->compute_mask(s);
            CHECK(s == before);
            CHECK(cached == e->compute_mask_serial(s));
            CHECK(cached == e->compute_mask_parallel(s));
            CHECK(cached == e->compute_mask(s));
            for (std::size_t id = 0; id < cached.size(); id += 7) {
                CHECK(cached.allowed(id) == e->token_allowed(s, static_cast<int>(id)));
            }
            auto ids = cached.allowed_ids();
            REQUIRE(!ids.empty());
            int id = ids[std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(rng)];
            if (id == e->vocabulary().eos_id) break;
            s = e->advance_token(s, id);
        }
    }
}

TEST_CASE("mask decisions match the completion oracle on random prefixes") {
    ConstraintEngine eng(kftest::toy_vocab());
    const auto& t = eng.vocabulary();
    std::mt19937_64 rng(7);
    std::size_t checked = 0;
    for (int walk = 0; walk < 30; ++walk) {
        DecodeState s = eng.init_state();
        std::string text;
        for (int depth = 0; depth < 12; ++depth) {
            auto m = eng.compute_mask(s);
            for (std::size_t id = 1; id < t.size(); ++id) {
                const bool eos = static_cast<int>(id) == t.eos_id;
                CAPTURE(text);
                CAPTURE(t.tokens[id]);
                CHECK(m.allowed(id) == oracle_allows(text, t.tokens[id], eos));
                ++checked;
            }
            auto ids = m.allowed_ids();
            if (ids.empty()) break;
            int id = ids[std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(rng)];
            if (id == t.eos_id) break;
            text += t.tokens[static_cast<std::size_t>(id)];
            s = eng.advance_token(s, id);
        }
    }
    CHECK(checked > 10000);
}

TEST_CASE("normalized documents replay without a blocked token") {
    std::vector<std::string> docs;
    for (const auto& [n, b] : kftest::load_dir("corpus")) docs.push_back(normalized(b));
    std::mt19937_64 rng(9);
    for (int i = 0; i < 100; ++i) docs.push_back(normalized(kftest::random_document(rng)));
    auto vocab = bpe::train(docs, 800);
    ConstraintEngine eng(vocab.token_table());
    for (const auto& doc : docs) {
        CAPTURE(doc);
        DecodeState s = eng.init_state();
        bool ok = true;
        for (int id : vocab.encode(doc)) {
            if (!eng.compute_mask(s).allowed(static_cast<std::size_t>(id))) {
                ok = false;
                break;
            }
            s = eng.advance_token(s, id);
        }
        CHECK(ok);
        CHECK(s.terminated());
        CHECK(eng.compute_mask(s).allowed(bpe::kEosId));
    }
}

}  // TEST_SUITE
