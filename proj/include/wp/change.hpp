#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wp/dist.hpp"
#include "wp/rng.hpp"
#include "wp/rule.hpp"
#include "wp/tree.hpp"

namespace wp {

// One offspring group emitted by a change step: `count` children whose
// downward change is `pair` and whose upward message is `chi`.
struct ChangeChild {
    ChangePair pair;
    std::uint8_t chi = 0;
    std::int64_t count = 0;
};

// Children produced at a vertex whose received multiset is `counts` (its
// in-messages from below, excluding the parent) when the parent's message
// flips change.from -> change.to. Deterministic; used by the sampler and
// directly testable.
std::vector<ChangeChild> change_children_for_counts(const UpdateRule& rule,
                                                    std::span<const std::int64_t> counts,
                                                    ChangePair change);

// One step of the change branching process: rejection-sample the in-messages
// Po(d*p) conditioned on producing `chi` upward, then collect the half-edges
// whose outgoing message differs under the parent's old/new message.
std::vector<ChangeChild> sample_change_step(const UpdateRule& rule, double d, const Dist& p,
                                            ChangePair change, int chi, Rng& rng,
                                            std::int64_t max_attempts = 1'000'000);

struct TransitionMatrix {
    std::vector<std::string> type_names;
    std::size_t dim = 0;
    std::vector<double> mean;    // row-major; mean[child*dim + parent]
    std::vector<double> se;      // standard error per entry
    std::int64_t trials_per_type = 0;
    std::vector<std::uint8_t> infeasible;  // per parent type: conditioning never accepted

    double at(std::size_t child, std::size_t parent) const { return mean[child * dim + parent]; }
    double se_at(std::size_t child, std::size_t parent) const { return se[child * dim + parent]; }
};

// The implemented Markov type is (change pair, upward message chi): the
// offspring law depends on chi through the conditioning. The paper-style
// |Sigma|^2 matrix is produced alongside by averaging chi out against the
// one-step image of p.
struct TypedMatrices {
    std::vector<ChangePair> change_pairs;      // potential changes, sorted
    std::vector<ChangeChild> full_types;       // (pair, chi) grid, count unused
    TransitionMatrix full;                     // dim = |pairs| * |Sigma|
    TransitionMatrix aggregated;               // dim = |Sigma|^2, all ordered pairs
};

TypedMatrices estimate_transition_matrix(const UpdateRule& rule, double d, const Dist& p,
                                         std::int64_t trials, std::uint64_t seed, int threads = 1);

enum class Verdict { subcritical, critical_band, supercritical };

struct SubcriticalityReport {
    double rho = 0.0;
    std::vector<double> alpha;  // positive Perron vector, L1-normalized
    double gamma = 0.0;         // 1 - rho
    double ci_lo = 0.0, ci_hi = 0.0;
    Verdict verdict = Verdict::critical_band;
    double residual = 0.0;
    int iterations = 0;
};

// Power iteration on entries+epsilon (strictly positive, so the Perron pair
// exists and is unique). The CI comes from re-running on the entrywise
// +-1.96*se matrices; spectral radius is monotone in nonnegative entries.
SubcriticalityReport spectral_radius(const TransitionMatrix& t, double epsilon = 1e-9,
                                     double margin = 0.02);

struct ChangeTreeStats {
    std::int64_t trials = 0;
    int max_gen = 0;
    std::vector<double> extinct_by_gen;   // fraction of trials with empty generation g
    std::vector<double> mean_population;  // average node count per generation
    std::map<std::int64_t, std::int64_t> size_histogram;
    std::map<int, std::int64_t> depth_histogram;
    std::int64_t censored = 0;  // trials stopped by max_gen or max_size
};

// Runs the change branching process with root upward message chi ~ p.
ChangeTreeStats simulate_change_tree(const UpdateRule& rule, double d, const Dist& p,
                                     ChangePair change, int max_gen, std::int64_t max_size,
                                     std::int64_t trials, std::uint64_t seed, int threads = 1);

}  // namespace wp
