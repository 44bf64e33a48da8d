#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kernforge/constraint.hpp"
#include "kernforge/vocabulary.hpp"

namespace kernforge::harness {

inline constexpr std::size_t kDefaultMaxLength = 2048;

enum class SourceMode { Uniform, Adversarial, Replay };

// Each rule pushes on one global-state check of the engine.
enum class AdversarialRule { AlwaysTab, AlwaysLf, AlwaysSplit, LongestFirst };

std::string_view to_string(AdversarialRule rule);
std::optional<AdversarialRule> parse_rule(std::string_view name);

// Deterministic stand-in for a model's logits.
class LogitSource {
public:
    static LogitSource uniform(std::uint64_t seed);
    static LogitSource adversarial(AdversarialRule rule, std::uint64_t seed = 0);
    static LogitSource replay(std::vector<int> ids);

    SourceMode mode() const { return mode_; }
    AdversarialRule rule() const { return rule_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<int>& sequence() const { return ids_; }

    // Logit of token `id` (bytes `bytes`) at decode step `step`, in [0, 1)
    // for the uniform source.
    double logit(std::size_t step, int id, std::string_view bytes, int eos_id) const;

    // Greedy pick among the ids allowed by `mask`, lowest id on ties.
    // The uniform source draws its winner directly: the argmax of i.i.d.
    // uniform logits is a uniform pick over the candidates, and drawing it
    // avoids scoring every allowed id.
    int pick(std::size_t step, const constraint::TokenMask& mask, const TokenTable& vocab) const;

private:
    SourceMode mode_ = SourceMode::Uniform;
    AdversarialRule rule_ = AdversarialRule::AlwaysTab;
    std::uint64_t seed_ = 0;
    std::vector<int> ids_;
};

enum class Termination { Eos, MaxLength, Stalled };

std::string_view to_string(Termination t);

struct DecodeRun {
    std::vector<int> tokens;  // EOS included when emitted
    std::string text;
    Termination terminated_by = Termination::MaxLength;
    bool valid = false;  // structural check on the emitted text
    // Replay only: steps at which the replayed token was not allowed.
    std::size_t blocked_steps = 0;

    std::size_t length() const { return tokens.size(); }
};

// Greedy decode. Constrained runs take the argmax over mask-allowed ids;
// unconstrained runs over every id except the non-EOS specials.
DecodeRun run_decode(const LogitSource& source, const constraint::ConstraintEngine& engine, bool constrained,
                     std::size_t max_length = kDefaultMaxLength);

struct LoopSummary {
    std::size_t runs = 0;
    std::size_t eos_runs = 0;
    std::size_t long_runs = 0;  // length > 4x target
    double long_fraction = 0.0;
    std::size_t max_window = 0;  // largest detected repetition period
};

// Smallest period p such that the last 3p tokens repeat with period p;
// 0 when no such period exists.
std::size_t repeated_window(std::span<const int> tokens);

// target_lengths[i] pairs with runs[i]; missing targets count as not long.
LoopSummary loop_stats(std::span<const DecodeRun> runs, std::span<const std::size_t> target_lengths);

}  // namespace kernforge::harness
