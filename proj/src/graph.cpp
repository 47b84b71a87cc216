#include "wp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "wp/errors.hpp"
#include "wp/parallel.hpp"
#include "wp/rng.hpp"

namespace wp {

namespace {

MessagedGraph build_csr(std::int64_t n,
                        const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                        std::vector<std::pair<std::int64_t, std::int64_t>>* slots = nullptr) {
    MessagedGraph g;
    g.n = n;
    g.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& [u, v] : edges) {
        ++g.offsets[static_cast<std::size_t>(u) + 1];
        ++g.offsets[static_cast<std::size_t>(v) + 1];
    }
    for (std::int64_t i = 0; i < n; ++i)
        g.offsets[static_cast<std::size_t>(i) + 1] += g.offsets[static_cast<std::size_t>(i)];

    const std::size_t m2 = edges.size() * 2;
    g.nbr.resize(m2);
    g.tail.resize(m2);
    g.rev.resize(m2);
    std::vector<std::int64_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
    if (slots) slots->clear();
    for (const auto& [u, v] : edges) {
        const std::int64_t su = cursor[u]++;
        const std::int64_t sv = cursor[v]++;
        g.nbr[static_cast<std::size_t>(su)] = v;
        g.nbr[static_cast<std::size_t>(sv)] = u;
        g.tail[static_cast<std::size_t>(su)] = u;
        g.tail[static_cast<std::size_t>(sv)] = v;
        g.rev[static_cast<std::size_t>(su)] = sv;
        g.rev[static_cast<std::size_t>(sv)] = su;
        if (slots) slots->emplace_back(su, sv);
    }
    return g;
}

std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

MessagedGraph gen_gnp(std::int64_t n, double d, std::uint64_t seed) {
    if (n < 1) throw input_error("gen_gnp: n must be >= 1");
    if (d < 0.0 || d > static_cast<double>(n)) throw input_error("gen_gnp: requires 0 <= d <= n");
    const double p = d / static_cast<double>(n);
    const std::int64_t total = n * (n - 1) / 2;

    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    if (p > 0.0 && total > 0) {
        edges.reserve(static_cast<std::size_t>(static_cast<double>(total) * p * 1.2) + 16);
        Rng rng(derive_seed(seed, stream::edges, 0));
        const double log1mp = p < 1.0 ? std::log1p(-p) : 0.0;
        std::int64_t idx = -1;
        while (true) {
            if (p >= 1.0) {
                ++idx;
            } else {
                const double u = rng.next_unit_pos();
                const double skip = std::floor(std::log(u) / log1mp);
                idx += 1 + (skip >= static_cast<double>(total) ? total
                                                               : static_cast<std::int64_t>(skip));
            }
            if (idx >= total) break;
            // Row u owns pairs [S(u), S(u+1)) where S(u) = u(2n-1-u)/2.
            const double b = 2.0 * static_cast<double>(n) - 1.0;
            std::int64_t u =
                static_cast<std::int64_t>((b - std::sqrt(b * b - 8.0 * static_cast<double>(idx))) / 2.0);
            u = std::max<std::int64_t>(0, u - 2);
            auto row_start = [n](std::int64_t r) { return r * (2 * n - 1 - r) / 2; };
            while (u + 1 < n && row_start(u + 1) <= idx) ++u;
            const std::int64_t v = u + 1 + (idx - row_start(u));
            edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
        }
    }
    return build_csr(n, edges);
}

MessagedGraph graph_from_edges(std::int64_t n,
                               const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                               std::vector<std::pair<std::int64_t, std::int64_t>>* slots) {
    std::unordered_set<std::uint64_t> seen;
    for (const auto& [u, v] : edges) {
        if (u >= n || v >= n) throw input_error("edge endpoint out of range");
        if (u == v) throw input_error("loop edge");
        const std::uint64_t key = (static_cast<std::uint64_t>(std::min(u, v)) << 32) | std::max(u, v);
        if (!seen.insert(key).second) throw input_error("duplicate edge");
    }
    return build_csr(n, edges, slots);
}

void init_messages(MessagedGraph& g, const Dist& q0, std::uint64_t seed) {
    Rng rng(derive_seed(seed, stream::messages, 0));
    g.msg.resize(g.nbr.size());
    for (auto& m : g.msg) m = static_cast<std::uint8_t>(rng.sample(q0.weights()));
    g.round = 0;
}

namespace {

// One synchronous round: new_buf from old_buf. Per vertex the incoming counts
// are accumulated once and each outgoing slot subtracts the message that came
// back along it. Returns the number of changed directed edges.
std::int64_t wp_round(const MessagedGraph& g, const UpdateRule& rule,
                      const std::vector<std::uint8_t>& old_buf, std::vector<std::uint8_t>& new_buf,
                      int threads) {
    const int k = rule.alphabet().size();
    const int cap = rule.cap();
    std::vector<std::int64_t> chunk_changes(static_cast<std::size_t>(std::max(threads, 1)), 0);

    parallel_chunks(0, g.n, threads, [&](int chunk, std::int64_t lo, std::int64_t hi) {
        std::vector<int> counts(static_cast<std::size_t>(k));
        std::vector<int> reduced(static_cast<std::size_t>(k));
        std::int64_t changed = 0;
        for (std::int64_t v = lo; v < hi; ++v) {
            const std::int64_t b = g.offsets[static_cast<std::size_t>(v)];
            const std::int64_t e = g.offsets[static_cast<std::size_t>(v) + 1];
            if (b == e) continue;
            std::fill(counts.begin(), counts.end(), 0);
            for (std::int64_t f = b; f < e; ++f)
                ++counts[old_buf[static_cast<std::size_t>(g.rev[static_cast<std::size_t>(f)])]];
            for (std::int64_t f = b; f < e; ++f) {
                for (int s = 0; s < k; ++s)
                    reduced[static_cast<std::size_t>(s)] =
                        std::min(counts[static_cast<std::size_t>(s)], cap);
                const int back =
                    old_buf[static_cast<std::size_t>(g.rev[static_cast<std::size_t>(f)])];
                reduced[static_cast<std::size_t>(back)] =
                    std::min(counts[static_cast<std::size_t>(back)] - 1, cap);
                const std::uint8_t out = static_cast<std::uint8_t>(rule.eval_capped(reduced));
                new_buf[static_cast<std::size_t>(f)] = out;
                if (out != old_buf[static_cast<std::size_t>(f)]) ++changed;
            }
        }
        chunk_changes[static_cast<std::size_t>(chunk)] += changed;
    });

    std::int64_t total = 0;
    for (std::int64_t c : chunk_changes) total += c;
    return total;
}

RunStats run_core(MessagedGraph& g, const UpdateRule& rule, int t_max, int threads,
                  std::vector<std::vector<std::uint8_t>>* snapshots) {
    if (t_max < 0) throw input_error("t_max must be nonnegative");
    if (!g.messaged()) throw state_error("messages not initialized");
    if (rule.alphabet().size() < 1) throw input_error("bad rule");

    RunStats stats;
    if (snapshots) snapshots->push_back(g.msg);
    if (g.num_directed() == 0) {
        stats.reached_fixed_point = true;
        return stats;
    }

    struct Candidate {
        int period;
        std::vector<std::uint8_t> state;
        int countdown;
    };
    std::deque<std::pair<std::uint64_t, int>> recent;  // (hash, round), window of 64
    std::vector<Candidate> candidates;
    recent.emplace_back(fnv1a(g.msg), 0);

    std::vector<std::uint8_t> next(g.msg.size());
    for (int r = 1; r <= t_max; ++r) {
        const std::int64_t changed = wp_round(g, rule, g.msg, next, threads);
        g.msg.swap(next);
        g.round += 1;
        stats.rounds = r;
        stats.changes_per_round.push_back(changed);
        if (snapshots) snapshots->push_back(g.msg);
        if (changed == 0) {
            stats.reached_fixed_point = true;
            break;
        }

        // Cycle check: confirm a hash repeat by direct comparison one full
        // period later.
        for (auto it = candidates.begin(); it != candidates.end();) {
            if (--it->countdown == 0) {
                if (it->state == g.msg) {
                    stats.cycle_period = it->period;
                    return stats;
                }
                it = candidates.erase(it);
            } else {
                ++it;
            }
        }
        const std::uint64_t h = fnv1a(g.msg);
        for (const auto& [ph, pr] : recent) {
            if (ph == h && candidates.empty()) {
                candidates.push_back(Candidate{r - pr, g.msg, r - pr});
                break;
            }
        }
        recent.emplace_back(h, r);
        if (recent.size() > 64) recent.pop_front();
    }
    return stats;
}

}  // namespace

RunStats wp_run(MessagedGraph& g, const UpdateRule& rule, int t_max, int threads) {
    return run_core(g, rule, t_max, threads, nullptr);
}

StoryGraph wp_run_with_stories(MessagedGraph g, const UpdateRule& rule, int t_max, int threads) {
    StoryGraph sg;
    sg.stats = run_core(g, rule, t_max, threads, &sg.snapshots);
    sg.g = std::move(g);
    return sg;
}

std::int64_t changes_between(const StoryGraph& sg, int s, int t) {
    if (s < 0 || t < 0 || s > sg.horizon() || t > sg.horizon())
        throw input_error("round outside recorded horizon");
    const auto& a = sg.snapshots[static_cast<std::size_t>(s)];
    const auto& b = sg.snapshots[static_cast<std::size_t>(t)];
    std::int64_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i) count += a[i] != b[i];
    return count;
}

std::vector<std::uint32_t> extract_core_wp(const StoryGraph& sg, int k) {
    if (!sg.at_fixed_point()) throw state_error("run did not reach a fixed point");
    const MessagedGraph& g = sg.g;
    std::vector<std::uint32_t> core;
    for (std::int64_t v = 0; v < g.n; ++v) {
        std::int64_t ones = 0;
        for (std::int64_t f = g.offsets[static_cast<std::size_t>(v)];
             f < g.offsets[static_cast<std::size_t>(v) + 1]; ++f)
            ones += g.msg[static_cast<std::size_t>(g.rev[static_cast<std::size_t>(f)])] == 1;
        if (ones >= k) core.push_back(static_cast<std::uint32_t>(v));
    }
    return core;
}

std::vector<std::uint32_t> peel_kcore(const MessagedGraph& g, int k) {
    if (k < 1) throw input_error("peel_kcore: k must be >= 1");
    std::vector<std::int64_t> deg(static_cast<std::size_t>(g.n));
    for (std::int64_t v = 0; v < g.n; ++v) deg[static_cast<std::size_t>(v)] = g.degree(v);
    std::vector<std::uint8_t> removed(static_cast<std::size_t>(g.n), 0);
    std::vector<std::uint32_t> queue;
    for (std::int64_t v = 0; v < g.n; ++v) {
        if (deg[static_cast<std::size_t>(v)] < k) {
            removed[static_cast<std::size_t>(v)] = 1;
            queue.push_back(static_cast<std::uint32_t>(v));
        }
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::uint32_t v = queue[head];
        for (std::int64_t f = g.offsets[v]; f < g.offsets[static_cast<std::size_t>(v) + 1]; ++f) {
            const std::uint32_t w = g.nbr[static_cast<std::size_t>(f)];
            if (removed[w]) continue;
            if (--deg[w] < k) {
                removed[w] = 1;
                queue.push_back(w);
            }
        }
    }
    std::vector<std::uint32_t> survivors;
    for (std::int64_t v = 0; v < g.n; ++v)
        if (!removed[static_cast<std::size_t>(v)]) survivors.push_back(static_cast<std::uint32_t>(v));
    return survivors;
}

std::int64_t count_near_short_cycles(const MessagedGraph& g, int t0) {
    if (t0 < 0) throw input_error("t0 must be nonnegative");
    std::vector<std::uint8_t> in_c(static_cast<std::size_t>(g.n), 0);

    if (t0 >= 3) {
        // v lies on a cycle of length <= t0 iff a BFS of depth t0/2 from v
        // finds an edge joining two different root branches with
        // dist(x) + dist(y) + 1 <= t0. Branches of a BFS tree rooted at v
        // only meet at v, so such an edge closes a cycle through v; the
        // converse follows by walking the cycle between v's two neighbors.
        const int depth = t0 / 2;
        std::vector<int> dist(static_cast<std::size_t>(g.n), -1);
        std::vector<std::uint32_t> branch(static_cast<std::size_t>(g.n), 0);
        std::vector<std::uint32_t> order;
        for (std::int64_t v = 0; v < g.n; ++v) {
            order.clear();
            order.push_back(static_cast<std::uint32_t>(v));
            dist[static_cast<std::size_t>(v)] = 0;
            bool found = false;
            for (std::size_t head = 0; head < order.size() && !found; ++head) {
                const std::uint32_t x = order[head];
                const int dx = dist[x];
                // Vertices at the depth limit are scanned for crossing edges
                // but do not discover anything further.
                for (std::int64_t f = g.offsets[x]; f < g.offsets[static_cast<std::size_t>(x) + 1];
                     ++f) {
                    const std::uint32_t y = g.nbr[static_cast<std::size_t>(f)];
                    if (dist[y] < 0) {
                        if (dx >= depth) continue;
                        dist[y] = dx + 1;
                        branch[y] = dx == 0 ? y : branch[x];
                        order.push_back(y);
                    } else if (y != static_cast<std::uint32_t>(v) && dx > 0 &&
                               branch[y] != branch[x] && dx + dist[y] + 1 <= t0) {
                        found = true;
                        break;
                    }
                }
            }
            if (found) in_c[static_cast<std::size_t>(v)] = 1;
            for (std::uint32_t x : order) dist[x] = -1;
        }
    }

    std::vector<std::uint32_t> frontier;
    for (std::int64_t v = 0; v < g.n; ++v)
        if (in_c[static_cast<std::size_t>(v)]) frontier.push_back(static_cast<std::uint32_t>(v));
    for (int step = 0; step < t0 && !frontier.empty(); ++step) {
        std::vector<std::uint32_t> next;
        for (std::uint32_t x : frontier) {
            for (std::int64_t f = g.offsets[x]; f < g.offsets[static_cast<std::size_t>(x) + 1]; ++f) {
                const std::uint32_t y = g.nbr[static_cast<std::size_t>(f)];
                if (!in_c[y]) {
                    in_c[y] = 1;
                    next.push_back(y);
                }
            }
        }
        frontier.swap(next);
    }

    std::int64_t total = 0;
    for (std::uint8_t b : in_c) total += b;
    return total;
}

bool stories_consistent(const StoryGraph& sg, const UpdateRule& rule) {
    const MessagedGraph& g = sg.g;
    const int k = rule.alphabet().size();
    const int cap = rule.cap();
    std::vector<int> counts(static_cast<std::size_t>(k));
    std::vector<int> reduced(static_cast<std::size_t>(k));
    for (int r = 1; r <= sg.horizon(); ++r) {
        const auto& prev = sg.snapshots[static_cast<std::size_t>(r) - 1];
        const auto& cur = sg.snapshots[static_cast<std::size_t>(r)];
        for (std::int64_t v = 0; v < g.n; ++v) {
            const std::int64_t b = g.offsets[static_cast<std::size_t>(v)];
            const std::int64_t e = g.offsets[static_cast<std::size_t>(v) + 1];
            if (b == e) continue;
            std::fill(counts.begin(), counts.end(), 0);
            for (std::int64_t f = b; f < e; ++f)
                ++counts[prev[static_cast<std::size_t>(g.rev[static_cast<std::size_t>(f)])]];
            for (std::int64_t f = b; f < e; ++f) {
                for (int s = 0; s < k; ++s)
                    reduced[static_cast<std::size_t>(s)] =
                        std::min(counts[static_cast<std::size_t>(s)], cap);
                const int back = prev[static_cast<std::size_t>(g.rev[static_cast<std::size_t>(f)])];
                reduced[static_cast<std::size_t>(back)] =
                    std::min(counts[static_cast<std::size_t>(back)] - 1, cap);
                if (cur[static_cast<std::size_t>(f)] != rule.eval_capped(reduced)) return false;
            }
        }
    }
    return true;
}

void save_edge_list(const MessagedGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot open for writing: " + path);
    for (std::int64_t e = 0; e < g.num_directed(); ++e) {
        if (g.tail[static_cast<std::size_t>(e)] < g.nbr[static_cast<std::size_t>(e)])
            out << g.tail[static_cast<std::size_t>(e)] << ' ' << g.nbr[static_cast<std::size_t>(e)]
                << '\n';
    }
}

void save_messaged(const MessagedGraph& g, const Alphabet& alphabet, const std::string& path) {
    if (!g.messaged()) throw state_error("messages not initialized");
    std::ofstream out(path);
    if (!out) throw input_error("cannot open for writing: " + path);
    for (std::int64_t e = 0; e < g.num_directed(); ++e) {
        const std::uint32_t u = g.tail[static_cast<std::size_t>(e)];
        const std::uint32_t v = g.nbr[static_cast<std::size_t>(e)];
        if (u < v)
            out << u << ' ' << v << ' ' << alphabet.name(g.msg[static_cast<std::size_t>(e)]) << ' '
                << alphabet.name(
                       g.msg[static_cast<std::size_t>(g.rev[static_cast<std::size_t>(e)])])
                << '\n';
    }
}

void save_stories(const StoryGraph& sg, const Alphabet& alphabet, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot open for writing: " + path);
    for (std::int64_t e = 0; e < sg.g.num_directed(); ++e) {
        out << sg.g.tail[static_cast<std::size_t>(e)] << ' ' << sg.g.nbr[static_cast<std::size_t>(e)]
            << ' ';
        for (std::size_t r = 0; r < sg.snapshots.size(); ++r) {
            if (r) out << ',';
            out << alphabet.name(sg.snapshots[r][static_cast<std::size_t>(e)]);
        }
        out << '\n';
    }
}

MessagedGraph load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open: " + path);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::int64_t max_v = -1;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::int64_t u, v;
        if (!(ls >> u >> v)) throw validation_error("bad edge-list line: " + line);
        if (u < 0 || v < 0) throw validation_error("negative vertex id");
        edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
        max_v = std::max({max_v, u, v});
    }
    return graph_from_edges(max_v + 1, edges);
}

}  // namespace wp
