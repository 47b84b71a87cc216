#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wp/dist.hpp"
#include "wp/graph.hpp"
#include "wp/rule.hpp"

namespace wp {

enum class StopCondition { exhaustion, expansion, explosion };

struct CascadeReport {
    std::vector<std::int64_t> component_sizes;  // marked directed edges per component
    std::int64_t duplicates = 0;
    std::int64_t freaks = 0;
    StopCondition stop = StopCondition::exhaustion;
    std::int64_t total_marked = 0;  // marked directed edges
    std::int64_t spurious = 0;
    std::vector<std::int64_t> change_counts;  // per ordered symbol pair, from*|Sigma|+to
    double k0 = 0.0;
};

// The set of directed edges whose message differs between round t0 and the
// fixed point, grouped into connected components of the underlying graph.
CascadeReport track_cascades(const StoryGraph& sg, int t0);

// Marking process on a completed run. Initial marks are the half-edges whose
// message changes t0 -> t0+1; popping a marked half-edge reveals its partner
// vertex, which is standard (mark its out-edges that change after t0),
// a duplicate (already touched) or a freak (degree > k0); snags mark all
// their half-edges as spurious. Stops on exhaustion, expansion of some change
// type past delta0^{3/5} * alpha_type * n, or explosion of the spurious count
// past delta0^{2/3} * n. alpha is indexed by ordered symbol pairs, L1 = 1.
// If marked_out is given it receives the per-slot marked mask.
CascadeReport run_marking_on(const StoryGraph& sg, const UpdateRule& rule, int t0, double delta0,
                             std::span<const double> alpha,
                             std::vector<std::uint8_t>* marked_out = nullptr);

// Convenience wrapper: initialise messages on g from q0, run to the fixed
// point, then apply the marking process.
CascadeReport run_marking(MessagedGraph g, const UpdateRule& rule, const Dist& q0, int t0,
                          double delta0, std::span<const double> alpha, std::uint64_t seed);

// k0 threshold used by the marking process: 11 ln ln n / ln ln ln n, clamped
// below at 20 since the asymptotic formula degenerates at practical n.
double marking_degree_threshold(std::int64_t n);

}  // namespace wp
