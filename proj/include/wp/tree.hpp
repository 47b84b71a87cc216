#pragma once

#include <cstdint>
#include <vector>

#include "wp/dist.hpp"
#include "wp/rng.hpp"
#include "wp/rule.hpp"

namespace wp {

// Message history along one directed edge, entries for rounds 0..t.
using Story = std::vector<std::uint8_t>;

// Encode a story as digits base |Sigma| (entry 0 is the lowest digit).
std::uint64_t encode_story(const Story& s, int sigma);
Story decode_story(std::uint64_t code, int length, int sigma);

// Root-to-parent story on a Po(d) Galton-Watson tree initialised i.i.d. q0.
// The tree is truncated at depth t, which is exact: entry s only depends on
// the depth-s subtree. Throws resource_error past node_budget nodes.
Story sample_story(const UpdateRule& rule, double d, const Dist& q0, int t, Rng& rng,
                   std::int64_t node_budget = 10'000'000);
Story sample_story(const UpdateRule& rule, double d, const Dist& q0, int t, std::uint64_t seed);

// Max over i <= t of TV between the empirical law of story entry i over
// `samples` sampled stories and the exact iterate Phi^i(q0).
double marginal_check(const UpdateRule& rule, double d, const Dist& q0, int t,
                      std::int64_t samples, std::uint64_t seed, int threads = 1);

struct SupportResult {
    std::vector<Story> stories;  // sorted by encoded value
    bool exact = true;
};

// Achievable stories W_t for initial law q (any positive mean degree; the
// support does not depend on d > 0). Level DP over multisets of W_{t-1}
// elements with per-element multiplicity capped at C, which is lossless for
// capped per-time counts. Exact mode requires |Sigma|^{t+1} <= 4096.
SupportResult story_support(const UpdateRule& rule, const Dist& q, int t);

// Monte Carlo fallback: a subset of the support, flagged approximate.
SupportResult story_support_mc(const UpdateRule& rule, double d, const Dist& q, int t,
                               std::int64_t samples, std::uint64_t seed);

struct ChangePair {
    std::uint8_t from = 0;
    std::uint8_t to = 0;
    bool operator==(const ChangePair&) const = default;
    auto operator<=>(const ChangePair&) const = default;
};

struct PotentialChanges {
    std::vector<ChangePair> pairs;  // sorted; from != to throughout
    bool stabilized = false;
    int t_reached = 0;
};

// All (w_{t-1}, w_t) pairs with w in W_t, t <= t_max, old != new. Runs the
// last-two-entry projection of the support dynamics, which determines the
// pair sets exactly, and reports whether they provably stopped growing.
PotentialChanges potential_changes(const UpdateRule& rule, double d, const Dist& q, int t_max);

}  // namespace wp
