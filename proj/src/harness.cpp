#include "kernforge/harness.hpp"

#include "kernforge/filter.hpp"

namespace kernforge::harness {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t step, std::uint64_t id) {
    return splitmix64(splitmix64(splitmix64(seed) ^ step) ^ id);
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

}  // namespace

std::string_view to_string(AdversarialRule rule) {
    switch (rule) {
        case AdversarialRule::AlwaysTab: return "always-tab";
        case AdversarialRule::AlwaysLf: return "always-lf";
        case AdversarialRule::AlwaysSplit: return "always-split";
        case AdversarialRule::LongestFirst: return "longest-first";
    }
    return "?";
}

std::optional<AdversarialRule> parse_rule(std::string_view name) {
    for (auto r : {AdversarialRule::AlwaysTab, AdversarialRule::AlwaysLf, AdversarialRule::AlwaysSplit,
                   AdversarialRule::LongestFirst}) {
        if (to_string(r) == name) return r;
    }
    return std::nullopt;
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::Eos: return "eos";
        case Termination::MaxLength: return "max_length";
        case Termination::Stalled: return "stalled";
    }
    return "?";
}

LogitSource LogitSource::uniform(std::uint64_t seed) {
    LogitSource s;
    s.mode_ = SourceMode::Uniform;
    s.seed_ = seed;
    return s;
}

LogitSource LogitSource::adversarial(AdversarialRule rule, std::uint64_t seed) {
    LogitSource s;
    s.mode_ = SourceMode::Adversarial;
    s.rule_ = rule;
    s.seed_ = seed;
    return s;
}

LogitSource LogitSource::replay(std::vector<int> ids) {
    LogitSource s;
    s.mode_ = SourceMode::Replay;
    s.ids_ = std::move(ids);
    return s;
}

double LogitSource::logit(std::size_t step, int id, std::string_view bytes, int eos_id) const {
    switch (mode_) {
        case SourceMode::Uniform: return unit(counter_hash(seed_, step, static_cast<std::uint64_t>(id)));
        case SourceMode::Replay: {
            int expected = step < ids_.size() ? ids_[step] : eos_id;
            return id == expected ? 1.0 : 0.0;
        }
        case SourceMode::Adversarial: break;
    }
    double base = 0.5 * unit(counter_hash(seed_, step, static_cast<std::uint64_t>(id)));
    switch (rule_) {
        case AdversarialRule::AlwaysTab: return base + (bytes == "\t" ? 10.0 : 0.0);
        case AdversarialRule::AlwaysLf: return base + (bytes == "\n" ? 10.0 : 0.0);
        case AdversarialRule::AlwaysSplit:
            if (bytes.find("*^") != std::string_view::npos) return base + 10.0;
            if (bytes == "*" || bytes == "^") return base + 5.0;
            return base;
        case AdversarialRule::LongestFirst: return base + static_cast<double>(bytes.size());
    }
    return base;
}

int LogitSource::pick(std::size_t step, const constraint::TokenMask& mask, const TokenTable& vocab) const {
    if (mode_ == SourceMode::Uniform) {
        const std::size_t n = mask.count();
        if (n == 0) return -1;
        return mask.nth_allowed(counter_hash(seed_, step, ~0ULL) % n);
    }
    if (mode_ == SourceMode::Replay) {
        int expected = step < ids_.size() ? ids_[step] : vocab.eos_id;
        if (expected >= 0 && static_cast<std::size_t>(expected) < mask.size() &&
            mask.allowed(static_cast<std::size_t>(expected))) {
            return expected;
        }
    }
    int best = -1;
    double best_logit = 0.0;
    for (int id : mask.allowed_ids()) {
        double l = logit(step, id, vocab.tokens[static_cast<std::size_t>(id)], vocab.eos_id);
        if (best < 0 || l > best_logit) {
            best = id;
            best_logit = l;
        }
    }
    return best;
}

DecodeRun run_decode(const LogitSource& source, const constraint::ConstraintEngine& engine, bool constrained,
                     std::size_t max_length) {
    const TokenTable& vocab = engine.vocabulary();
    constraint::TokenMask open(vocab.size());
    for (std::size_t id = 0; id < vocab.size(); ++id) {
        if (!vocab.tokens[id].empty() || static_cast<int>(id) == vocab.eos_id) open.set(id);
    }

    DecodeRun run;
    constraint::DecodeState state = engine.init_state();
    while (run.tokens.size() < max_length) {
        const std::size_t step = run.tokens.size();
        constraint::TokenMask mask = constrained ? engine.compute_mask(state) : open;
        if (source.mode() == SourceMode::Replay) {
            int expected = step < source.sequence().size() ? source.sequence()[step] : vocab.eos_id;
            if (expected < 0 || static_cast<std::size_t>(expected) >= mask.size() ||
                !mask.allowed(static_cast<std::size_t>(expected))) {
                ++run.blocked_steps;
            }
        }
        int id = source.pick(step, mask, vocab);
        if (id < 0) {
            run.terminated_by = Termination::Stalled;
            break;
        }
        run.tokens.push_back(id);
        if (id == vocab.eos_id) {
            run.terminated_by = Termination::Eos;
            break;
        }
        run.text += vocab.tokens[static_cast<std::size_t>(id)];
        if (constrained) state = engine.advance_token(state, id);
    }
    run.valid = filter::structural_check(run.text).accepted;
    return run;
}

std::size_t repeated_window(std::span<const int> tokens) {
    const std::size_t n = tokens.size();
    for (std::size_t p = 1; 3 * p <= n; ++p) {
        bool periodic = true;
        for (std::size_t i = n - 3 * p; i + p < n && periodic; ++i) periodic = tokens[i] == tokens[i + p];
        if (periodic) return p;
    }
    return 0;
}

LoopSummary loop_stats(std::span<const DecodeRun> runs, std::span<const std::size_t> target_lengths) {
    LoopSummary s;
    s.runs = runs.size();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const DecodeRun& r = runs[i];
        if (r.terminated_by == Termination::Eos) ++s.eos_runs;
        if (i < target_lengths.size() && r.length() > 4 * target_lengths[i]) ++s.long_runs;
        s.max_window = std::max(s.max_window, repeated_window(r.tokens));
    }
    if (s.runs > 0) s.long_fraction = static_cast<double>(s.long_runs) / static_cast<double>(s.runs);
    return s;
}

}  // namespace kernforge::harness
