#include "wp/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "wp/errors.hpp"

namespace wp {

namespace {

struct UnionFind {
    std::vector<std::int64_t> parent;
    explicit UnionFind(std::int64_t n) : parent(static_cast<std::size_t>(n)) {
        for (std::int64_t i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
    }
    std::int64_t find(std::int64_t x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(std::int64_t a, std::int64_t b) {
        parent[static_cast<std::size_t>(find(a))] = find(b);
    }
};

std::vector<std::int64_t> component_sizes(const MessagedGraph& g,
                                          const std::vector<std::uint8_t>& marked_slot) {
    UnionFind uf(g.n);
    for (std::int64_t e = 0; e < g.num_directed(); ++e) {
        if (marked_slot[static_cast<std::size_t>(e)])
            uf.unite(g.tail[static_cast<std::size_t>(e)], g.nbr[static_cast<std::size_t>(e)]);
    }
    std::map<std::int64_t, std::int64_t> by_root;
    for (std::int64_t e = 0; e < g.num_directed(); ++e) {
        if (marked_slot[static_cast<std::size_t>(e)])
            ++by_root[uf.find(g.tail[static_cast<std::size_t>(e)])];
    }
    std::vector<std::int64_t> sizes;
    for (const auto& [root, size] : by_root) sizes.push_back(size);
    std::sort(sizes.rbegin(), sizes.rend());
    return sizes;
}

}  // namespace

double marking_degree_threshold(std::int64_t n) {
    if (n < 16) return 20.0;
    const double lln = std::log(std::log(static_cast<double>(n)));
    const double llln = std::log(lln);
    if (llln <= 0.0) return 20.0;
    return std::max(11.0 * lln / llln, 20.0);
}

CascadeReport track_cascades(const StoryGraph& sg, int t0) {
    if (!sg.at_fixed_point()) throw state_error("run was not recorded through its fixed point");
    if (t0 > sg.horizon() || t0 < 0) throw input_error("t0 outside recorded horizon");

    const auto& at_t0 = sg.snapshots[static_cast<std::size_t>(t0)];
    const auto& final = sg.snapshots.back();
    std::vector<std::uint8_t> changed(at_t0.size(), 0);
    CascadeReport report;
    for (std::size_t e = 0; e < at_t0.size(); ++e) {
        if (at_t0[e] != final[e]) {
            changed[e] = 1;
            ++report.total_marked;
        }
    }
    report.component_sizes = component_sizes(sg.g, changed);
    report.stop = StopCondition::exhaustion;
    return report;
}

CascadeReport run_marking_on(const StoryGraph& sg, const UpdateRule& rule, int t0, double delta0,
                             std::span<const double> alpha,
                             std::vector<std::uint8_t>* marked_out) {
    if (!sg.at_fixed_point()) throw state_error("run was not recorded through its fixed point");
    if (t0 < 0 || t0 > sg.horizon()) throw input_error("t0 outside recorded horizon");
    if (!(delta0 > 0.0 && delta0 < 1.0)) throw input_error("delta0 must lie in (0,1)");
    const int k = rule.alphabet().size();
    if (static_cast<int>(alpha.size()) != k * k)
        throw input_error("alpha must have |Sigma|^2 entries");
    double alpha_sum = 0.0;
    for (double a : alpha) {
        if (!(a > 0.0)) throw input_error("alpha must be strictly positive");
        alpha_sum += a;
    }
    if (std::abs(alpha_sum - 1.0) > 1e-6) throw input_error("alpha must be L1-normalized");

    const MessagedGraph& g = sg.g;
    const std::int64_t m2 = g.num_directed();
    const double n = static_cast<double>(g.n);
    const double k0 = marking_degree_threshold(g.n);
    const double expansion_scale = std::pow(delta0, 0.6) * n;
    const double explosion_cap = std::pow(delta0, 2.0 / 3.0) * n;

    auto snap = [&](int r) -> const std::vector<std::uint8_t>& {
        return sg.snapshots[static_cast<std::size_t>(std::min(r, sg.horizon()))];
    };

    // For each slot: does its message ever differ from its round-t0 value,
    // and if so what is the first differing value.
    std::vector<std::uint8_t> ever_changes(static_cast<std::size_t>(m2), 0);
    std::vector<std::uint8_t> first_new(static_cast<std::size_t>(m2), 0);
    for (std::int64_t e = 0; e < m2; ++e) {
        const std::uint8_t base = snap(t0)[static_cast<std::size_t>(e)];
        for (int r = t0 + 1; r <= sg.horizon(); ++r) {
            const std::uint8_t v = snap(r)[static_cast<std::size_t>(e)];
            if (v != base) {
                ever_changes[static_cast<std::size_t>(e)] = 1;
                first_new[static_cast<std::size_t>(e)] = v;
                break;
            }
        }
    }

    CascadeReport report;
    report.k0 = k0;
    report.change_counts.assign(static_cast<std::size_t>(k) * k, 0);
    std::vector<std::uint8_t> marked(static_cast<std::size_t>(m2), 0);
    std::vector<std::uint8_t> touched(static_cast<std::size_t>(g.n), 0);
    std::vector<std::int64_t> queue;

    bool stopped = false;
    auto check_stops = [&]() {
        if (report.spurious >= explosion_cap && report.spurious > 0) {
            report.stop = StopCondition::explosion;
            return true;
        }
        for (int a = 0; a < k && !stopped; ++a) {
            for (int b = 0; b < k; ++b) {
                const std::size_t t = static_cast<std::size_t>(a) * k + b;
                if (static_cast<double>(report.change_counts[t]) >= expansion_scale * alpha[t] &&
                    report.change_counts[t] > 0) {
                    report.stop = StopCondition::expansion;
                    return true;
                }
            }
        }
        return false;
    };

    auto mark = [&](std::int64_t e, bool is_spurious) {
        if (marked[static_cast<std::size_t>(e)]) return;
        marked[static_cast<std::size_t>(e)] = 1;
        ++report.total_marked;
        if (is_spurious) ++report.spurious;
        if (ever_changes[static_cast<std::size_t>(e)]) {
            const std::uint8_t from = snap(t0)[static_cast<std::size_t>(e)];
            const std::uint8_t to = first_new[static_cast<std::size_t>(e)];
            ++report.change_counts[static_cast<std::size_t>(from) * k + to];
        }
        queue.push_back(e);
    };

    // Initial marks: out-messages that change from round t0 to t0+1.
    for (std::int64_t e = 0; e < m2 && !stopped; ++e) {
        if (snap(t0)[static_cast<std::size_t>(e)] != snap(t0 + 1)[static_cast<std::size_t>(e)]) {
            touched[g.tail[static_cast<std::size_t>(e)]] = 1;
            mark(e, false);
            stopped = check_stops();
        }
    }

    for (std::size_t head = 0; head < queue.size() && !stopped; ++head) {
        const std::int64_t e = queue[head];
        const std::uint32_t v = g.nbr[static_cast<std::size_t>(e)];
        if (touched[v]) {
            ++report.duplicates;
            for (std::int64_t f = g.offsets[v]; f < g.offsets[static_cast<std::size_t>(v) + 1] &&
                                                !stopped;
                 ++f) {
                mark(f, true);
                stopped = check_stops();
            }
            continue;
        }
        touched[v] = 1;
        if (static_cast<double>(g.degree(v)) > k0) {
            ++report.freaks;
            for (std::int64_t f = g.offsets[v]; f < g.offsets[static_cast<std::size_t>(v) + 1] &&
                                                !stopped;
                 ++f) {
                mark(f, true);
                stopped = check_stops();
            }
            continue;
        }
        // Standard vertex: mark the remaining half-edges whose out-message
        // changes after t0 in the actual run.
        const std::int64_t back = g.rev[static_cast<std::size_t>(e)];
        for (std::int64_t f = g.offsets[v]; f < g.offsets[static_cast<std::size_t>(v) + 1] &&
                                            !stopped;
             ++f) {
            if (f == back) continue;
            if (ever_changes[static_cast<std::size_t>(f)]) {
                mark(f, false);
                stopped = check_stops();
            }
        }
    }

    if (!stopped) report.stop = StopCondition::exhaustion;
    report.component_sizes = component_sizes(g, marked);
    if (marked_out) *marked_out = std::move(marked);
    return report;
}

CascadeReport run_marking(MessagedGraph g, const UpdateRule& rule, const Dist& q0, int t0,
                          double delta0, std::span<const double> alpha, std::uint64_t seed) {
    init_messages(g, q0, seed);
    const StoryGraph sg = wp_run_with_stories(std::move(g), rule, t0 + 1000);
    if (!sg.at_fixed_point())
        throw state_error("message passing did not reach a fixed point within t0 + 1000 rounds");
    return run_marking_on(sg, rule, t0, delta0, alpha);
}

}  // namespace wp
