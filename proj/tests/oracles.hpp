// Test-only oracles, independent of the library implementation paths they
// check: scalar root finding for fixed-point equations, the closed-form
// k-core threshold, exact conditional enumeration for the change process,
// and brute-force tree enumeration for story supports.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "wp/dist.hpp"

#include "wp/poisson.hpp"
#include "wp/rule.hpp"
#include "wp/tree.hpp"

namespace oracle {

// Bisection root of a continuous f with f(lo), f(hi) of opposite signs.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double tol = 1e-13) {
    double flo = f(lo);
    for (int i = 0; i < 200 && hi - lo > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Largest root in (0,1] of p = Pr(Po(d p) >= k-1), the k-core message
// fixed-point equation started from p = 1.
inline double kcore_fixed_point(int k, double d, double tol = 1e-13) {
    auto g = [&](double p) { return wp::poisson_upper_tail(k - 1, d * p) - p; };
    // Scan down from 1 for the first sign change: the iteration from delta_1
    // converges to the largest fixed point.
    double hi = 1.0;
    double lo = hi;
    const double step = 1e-3;
    while (lo > step) {
        lo -= step;
        if ((g(lo) > 0) != (g(hi) > 0)) return bisect(g, lo, hi, tol);
    }
    return 0.0;
}

// k-core emergence threshold min_{x>0} x / Pr(Po(x) >= k-1) by ternary search.
inline double kcore_threshold(int k, double x_lo = 1e-3, double x_hi = 30.0) {
    auto f = [&](double x) { return x / wp::poisson_upper_tail(k - 1, x); };
    for (int i = 0; i < 300; ++i) {
        const double m1 = x_lo + (x_hi - x_lo) / 3.0;
        const double m2 = x_hi - (x_hi - x_lo) / 3.0;
        if (f(m1) < f(m2))
            x_hi = m2;
        else
            x_lo = m1;
    }
    return f(0.5 * (x_lo + x_hi));
}

// Chi-square critical values at p = 0.001 for df = 1..10.
inline double chisq_crit_001(int df) {
    static const double crit[] = {0,     10.828, 13.816, 16.266, 18.467, 20.515,
                                  22.458, 24.322, 26.124, 27.877, 29.588};
    return crit[df];
}

// Exact expected offspring counts for the change process by capped-count
// enumeration: per-symbol buckets 0..C+1 where the last bucket is ">= C+1"
// (all rule evaluations agree within it), with conditional Poisson weights
// and the exact conditional mean multiplier for the tail bucket.
struct ChangeOracleEntry {
    wp::ChangePair pair;
    int chi;
    double mean;
};

inline std::vector<ChangeOracleEntry> change_step_expectations(const wp::UpdateRule& rule,
                                                               double d,
                                                               std::span<const double> p,
                                                               wp::ChangePair change, int chi) {
    const int k = rule.alphabet().size();
    const int cap = rule.cap();
    const int top = cap + 1;  // bucket value meaning ">= cap+1"

    std::vector<std::vector<double>> weight(static_cast<std::size_t>(k));
    std::vector<std::vector<double>> mult(static_cast<std::size_t>(k));
    for (int s = 0; s < k; ++s) {
        const double mean = d * p[static_cast<std::size_t>(s)];
        auto& w = weight[static_cast<std::size_t>(s)];
        auto& m = mult[static_cast<std::size_t>(s)];
        w.resize(static_cast<std::size_t>(top) + 1);
        m.resize(static_cast<std::size_t>(top) + 1);
        for (int c = 0; c <= cap; ++c) {
            w[static_cast<std::size_t>(c)] = wp::poisson_pmf(c, mean);
            m[static_cast<std::size_t>(c)] = c;
        }
        w[static_cast<std::size_t>(top)] = wp::poisson_upper_tail(top, mean);
        // E[X | X >= top] = mean * Pr(X >= top - 1) / Pr(X >= top)
        m[static_cast<std::size_t>(top)] =
            w[static_cast<std::size_t>(top)] > 0.0
                ? mean * wp::poisson_upper_tail(top - 1, mean) / w[static_cast<std::size_t>(top)]
                : 0.0;
    }

    std::map<std::pair<std::pair<int, int>, int>, double> acc;  // ((from,to),chi') -> weight*mult
    double accept = 0.0;
    std::vector<int> bucket(static_cast<std::size_t>(k), 0);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k));
    while (true) {
        double w = 1.0;
        for (int s = 0; s < k; ++s)
            w *= weight[static_cast<std::size_t>(s)][static_cast<std::size_t>(bucket[s])];
        if (w > 0.0) {
            for (int s = 0; s < k; ++s) counts[static_cast<std::size_t>(s)] = bucket[s];
            if (rule.eval_counts(counts) == chi) {
                accept += w;
                for (int s = 0; s < k; ++s) {
                    if (bucket[s] == 0) continue;
                    auto view = counts;
                    --view[static_cast<std::size_t>(s)];
                    ++view[static_cast<std::size_t>(change.from)];
                    const int out_old = rule.eval_counts(view);
                    --view[static_cast<std::size_t>(change.from)];
                    ++view[static_cast<std::size_t>(change.to)];
                    const int out_new = rule.eval_counts(view);
                    if (out_old != out_new)
                        acc[{{out_old, out_new}, s}] +=
                            w * mult[static_cast<std::size_t>(s)]
                                    [static_cast<std::size_t>(bucket[s])];
                }
            }
        }
        int s = 0;
        while (s < k && bucket[static_cast<std::size_t>(s)] == top) bucket[s++] = 0;
        if (s == k) break;
        ++bucket[static_cast<std::size_t>(s)];
    }

    std::vector<ChangeOracleEntry> out;
    for (const auto& [key, v] : acc)
        out.push_back(ChangeOracleEntry{
            wp::ChangePair{static_cast<std::uint8_t>(key.first.first),
                           static_cast<std::uint8_t>(key.first.second)},
            key.second, v / accept});
    return out;
}

// Brute force: every story realizable by running message passing on any
// rooted tree with at most max_nodes nodes (root included) and any
// initialization over the support of q0.
inline std::set<std::uint64_t> brute_force_support(const wp::UpdateRule& rule, const wp::Dist& q0,
                                                   int t, int max_nodes) {
    const int k = rule.alphabet().size();
    std::vector<int> support;
    for (int j = 0; j < k; ++j)
        if (q0[j] > 0.0) support.push_back(j);

    std::set<std::uint64_t> stories;

    // Enumerate rooted trees as parent arrays: node 0 is the root, node i has
    // parent[i] < i. Depth capped at t (deeper nodes cannot matter).
    std::vector<int> parent{-1};
    std::function<void(int)> recurse_trees = [&](int nodes) {
        // For this tree shape, enumerate all initial up-messages.
        std::vector<int> depth(static_cast<std::size_t>(nodes), 0);
        for (int i = 1; i < nodes; ++i)
            depth[static_cast<std::size_t>(i)] = depth[static_cast<std::size_t>(parent[i])] + 1;

        std::vector<int> init(static_cast<std::size_t>(nodes), 0);
        std::function<void(int)> recurse_init = [&](int node) {
            if (node == nodes) {
                // story[i][s]: message node -> its parent after s rounds
                std::vector<std::vector<int>> story(
                    static_cast<std::size_t>(nodes),
                    std::vector<int>(static_cast<std::size_t>(t) + 1));
                for (int i = 0; i < nodes; ++i)
                    story[static_cast<std::size_t>(i)][0] =
                        support[static_cast<std::size_t>(init[i])];
                for (int s = 1; s <= t; ++s) {
                    for (int i = 0; i < nodes; ++i) {
                        std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
                        for (int c = 1; c < nodes; ++c)
                            if (parent[c] == i)
                                ++counts[static_cast<std::size_t>(
                                    story[static_cast<std::size_t>(c)]
                                         [static_cast<std::size_t>(s - 1)])];
                        story[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)] =
                            rule.eval_counts(counts);
                    }
                }
                wp::Story root(static_cast<std::size_t>(t) + 1);
                for (int s = 0; s <= t; ++s)
                    root[static_cast<std::size_t>(s)] =
                        static_cast<std::uint8_t>(story[0][static_cast<std::size_t>(s)]);
                stories.insert(wp::encode_story(root, k));
                return;
            }
            for (std::size_t j = 0; j < support.size(); ++j) {
                init[static_cast<std::size_t>(node)] = static_cast<int>(j);
                recurse_init(node + 1);
            }
        };
        recurse_init(0);

        if (nodes == max_nodes) return;
        for (int par = 0; par < nodes; ++par) {
            if (depth[static_cast<std::size_t>(par)] >= t) continue;
            parent.push_back(par);
            recurse_trees(nodes + 1);
            parent.pop_back();
        }
    };
    recurse_trees(1);
    return stories;
}

}  // namespace oracle
