#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "wp/dist.hpp"
#include "wp/graph.hpp"
#include "wp/rule.hpp"
#include "wp/tree.hpp"

namespace wp {

// A half-edge holds its in-story and derived out-story as encoded codes
// (entry 0 is the lowest base-|Sigma| digit; length t0+1).
struct HalfEdge {
    std::uint64_t in_code = 0;
    std::uint64_t out_code = 0;
};

struct HalfEdgeEnsemble {
    std::int64_t n = 0;
    int t0 = 0;
    double d = 0.0;
    int sigma = 0;
    std::vector<std::vector<HalfEdge>> vertex;

    std::int64_t total_half_edges() const {
        std::int64_t m = 0;
        for (const auto& v : vertex) m += static_cast<std::int64_t>(v.size());
        return m;
    }
};

// Per vertex independently: Po(d) half-edges, i.i.d. in-stories from the tree
// law, i.i.d. time-0 out-messages from q0; then the out-stories at times
// 1..t0 are derived from the sibling in-stories by the update rule.
HalfEdgeEnsemble generate_ensemble(const UpdateRule& rule, double d, const Dist& q0, int t0,
                                   std::int64_t n, std::uint64_t seed, int threads = 1);

// Re-derive the out-stories from the stored in-stories; true iff every stored
// entry matches (time 0 is free, times >= 1 are determined).
bool out_stories_consistent(const UpdateRule& rule, const HalfEdgeEnsemble& ens);

using StoryPair = std::pair<std::uint64_t, std::uint64_t>;  // (in_code, out_code)

struct StoryStats {
    std::map<StoryPair, std::int64_t> counts;
    std::int64_t total = 0;
    int t0 = 0;
    int sigma = 0;
};

StoryStats story_statistics(const HalfEdgeEnsemble& ens);

// The statistics-match event: every off-diagonal pair count equals its dual,
// every diagonal count is even.
bool statistics_match(const StoryStats& stats);

struct MatchReport {
    bool a_holds = false;
    double max_additive_dev = 0.0;  // max |count - dn*q| / sqrt(n)
    double min_ratio = 1.0, max_ratio = 1.0;
};

MatchReport match_and_deviations(const StoryStats& stats,
                                 const std::map<StoryPair, double>& expected, std::int64_t n,
                                 double d);

struct StoryDist {
    int t = 0;
    int sigma = 0;
    std::map<std::uint64_t, double> prob;  // support story code -> probability
};

// Exact tree story law by level DP: child-story counts are independent
// Poisson, and capping per-story counts at C is lossless for the capped
// per-time counts the rule reads. Guard: (C+1)^{|W_{t-1}|} <= 10^7 per level.
StoryDist story_distribution_exact(const UpdateRule& rule, double d, const Dist& q0, int t);

// Marginal of the story law on entry i (exact).
Dist story_dist_marginal(const StoryDist& sd, int entry);

struct ClassLine {
    int t = 0;
    std::int64_t s = 0, q = 0, r = 0;
};

struct ClassReport {
    std::vector<ClassLine> per_t;  // t = 0..t0
    std::int64_t r_before = 0;     // |R_{<t0}|, includes the t=-1 convention class
    double exponent = 0.0;         // (|Q_{t0}| - 2|R_{<t0}|)/4
};

ClassReport qr_classes(const UpdateRule& rule, double d, const Dist& q0, int t0);

struct MatchProbEstimate {
    double p_hat = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  // 95% Wilson interval
    std::int64_t trials = 0, successes = 0;
};

MatchProbEstimate estimate_match_probability(const UpdateRule& rule, double d, const Dist& q0,
                                             int t0, std::int64_t n, std::int64_t trials,
                                             std::uint64_t seed, int threads = 1);

// Whole-ensemble rejection until the statistics match.
HalfEdgeEnsemble generate_conditioned_ensemble(const UpdateRule& rule, double d, const Dist& q0,
                                               int t0, std::int64_t n, std::uint64_t seed,
                                               std::int64_t max_regen = 1'000'000);

struct MatchedGraph {
    MessagedGraph g;  // msg holds the time-t0 messages
    std::vector<std::vector<std::uint8_t>> stories;  // stories[r][slot], r = 0..t0
    int t0 = 0;
};

// Uniform consistent matching: a uniform bijection between each dual class
// pair and a uniform perfect matching inside each diagonal class, resampled
// wholesale until the graph is simple.
MatchedGraph sample_matching(const HalfEdgeEnsemble& ens, std::uint64_t seed,
                             int max_attempts = 1000);

// Strip to time-0 messages, run t0 rounds, compare every story entry.
bool verify_wp_consistency(const MatchedGraph& mg, const UpdateRule& rule);

struct PairComparison {
    std::uint64_t in_code = 0, out_code = 0;
    std::int64_t g_count = 0, he_count = 0;
    double expected = 0.0;  // q * d * n
};

struct ModelComparison {
    std::int64_t n = 0;
    int t0 = 0;
    double d = 0.0;
    int sigma = 0;
    std::vector<PairComparison> pairs;
    bool expected_exact = true;
    double l1_discrepancy = 0.0;      // sum |g - he| / (d n)
    double g_max_abs_dev = 0.0;       // max |count - expected| over pairs, graph model
    double he_max_abs_dev = 0.0;
    double k0 = 0.0;                  // 11 ln ln n / ln ln ln n
    std::int64_t g_high_degree = 0, he_high_degree = 0;
    double incomp_l1 = 0.0;           // in-compilation histogram L1 / n, degrees <= k0
    int g_rounds = 0;
    bool g_fixed_point = false;
    bool he_a_holds = false;
};

// Generate both models at the same scale and compare their story-pair
// statistics and in-compilation histograms. Uses the unconditioned ensemble
// and reports the match-event status.
ModelComparison compare_models(const UpdateRule& rule, double d, const Dist& q0, int t0,
                               std::int64_t n, std::uint64_t seed, int threads = 1);

}  // namespace wp
