#include "wp/halfedge.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <unordered_set>

#include "wp/errors.hpp"
#include "wp/parallel.hpp"
#include "wp/poisson.hpp"
#include "wp/rng.hpp"

namespace wp {

namespace {

// Derived out-story entries 1..t0 at one vertex: entry t is the rule applied
// to the sibling in-messages at t-1.
void derive_out_stories(const UpdateRule& rule, int t0, std::vector<HalfEdge>& hes,
                        const std::vector<std::uint8_t>& out0) {
    const int k = rule.alphabet().size();
    const std::size_t deg = hes.size();
    // entries[i][s]: in-story entry s of half-edge i
    std::vector<std::vector<std::uint8_t>> entries(deg);
    for (std::size_t i = 0; i < deg; ++i)
        entries[i] = decode_story(hes[i].in_code, t0 + 1, k);

    std::vector<int> counts(static_cast<std::size_t>(k));
    std::vector<int> reduced(static_cast<std::size_t>(k));
    std::vector<Story> out(deg, Story(static_cast<std::size_t>(t0) + 1));
    for (std::size_t i = 0; i < deg; ++i) out[i][0] = out0[i];
    for (int t = 1; t <= t0; ++t) {
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < deg; ++i)
            ++counts[entries[i][static_cast<std::size_t>(t - 1)]];
        for (std::size_t i = 0; i < deg; ++i) {
            for (int j = 0; j < k; ++j)
                reduced[static_cast<std::size_t>(j)] =
                    std::min(counts[static_cast<std::size_t>(j)], rule.cap());
            const int own = entries[i][static_cast<std::size_t>(t - 1)];
            reduced[static_cast<std::size_t>(own)] =
                std::min(counts[static_cast<std::size_t>(own)] - 1, rule.cap());
            out[i][static_cast<std::size_t>(t)] =
                static_cast<std::uint8_t>(rule.eval_capped(reduced));
        }
    }
    for (std::size_t i = 0; i < deg; ++i) hes[i].out_code = encode_story(out[i], k);
}

}  // namespace

HalfEdgeEnsemble generate_ensemble(const UpdateRule& rule, double d, const Dist& q0, int t0,
                                   std::int64_t n, std::uint64_t seed, int threads) {
    if (t0 < 0) throw input_error("t0 must be nonnegative");
    if (n < 0) throw input_error("n must be nonnegative");
    const int k = rule.alphabet().size();

    HalfEdgeEnsemble ens;
    ens.n = n;
    ens.t0 = t0;
    ens.d = d;
    ens.sigma = k;
    ens.vertex.resize(static_cast<std::size_t>(n));

    parallel_chunks(0, n, threads, [&](int, std::int64_t lo, std::int64_t hi) {
        for (std::int64_t v = lo; v < hi; ++v) {
            Rng rng(derive_seed(seed, stream::vertex, static_cast<std::uint64_t>(v)));
            const std::int64_t deg = rng.poisson(d);
            auto& hes = ens.vertex[static_cast<std::size_t>(v)];
            hes.resize(static_cast<std::size_t>(deg));
            std::vector<std::uint8_t> out0(static_cast<std::size_t>(deg));
            for (std::int64_t i = 0; i < deg; ++i) {
                hes[static_cast<std::size_t>(i)].in_code =
                    encode_story(sample_story(rule, d, q0, t0, rng), k);
                out0[static_cast<std::size_t>(i)] =
                    static_cast<std::uint8_t>(rng.sample(q0.weights()));
            }
            derive_out_stories(rule, t0, hes, out0);
        }
    });
    return ens;
}

bool out_stories_consistent(const UpdateRule& rule, const HalfEdgeEnsemble& ens) {
    const int k = rule.alphabet().size();
    for (const auto& hes : ens.vertex) {
        std::vector<HalfEdge> copy = hes;
        std::vector<std::uint8_t> out0(hes.size());
        for (std::size_t i = 0; i < hes.size(); ++i)
            out0[i] = decode_story(hes[i].out_code, ens.t0 + 1, k)[0];
        derive_out_stories(rule, ens.t0, copy, out0);
        for (std::size_t i = 0; i < hes.size(); ++i)
            if (copy[i].out_code != hes[i].out_code) return false;
    }
    return true;
}

StoryStats story_statistics(const HalfEdgeEnsemble& ens) {
    StoryStats stats;
    stats.t0 = ens.t0;
    stats.sigma = ens.sigma;
    for (const auto& hes : ens.vertex) {
        for (const HalfEdge& he : hes) {
            ++stats.counts[{he.in_code, he.out_code}];
            ++stats.total;
        }
    }
    return stats;
}

bool statistics_match(const StoryStats& stats) {
    for (const auto& [key, count] : stats.counts) {
        if (key.first == key.second) {
            if (count % 2 != 0) return false;
        } else {
            const auto it = stats.counts.find({key.second, key.first});
            if (it == stats.counts.end() || it->second != count) return false;
        }
    }
    return true;
}

MatchReport match_and_deviations(const StoryStats& stats,
                                 const std::map<StoryPair, double>& expected, std::int64_t n,
                                 double d) {
    MatchReport r;
    r.a_holds = statistics_match(stats);
    const double dn = d * static_cast<double>(n);
    const double sqrt_n = std::sqrt(static_cast<double>(std::max<std::int64_t>(n, 1)));

    for (const auto& [key, count] : stats.counts) {
        if (expected.find(key) == expected.end())
            throw input_error("support mismatch: observed story pair missing from expected map");
    }
    bool any_ratio = false;
    for (const auto& [key, q] : expected) {
        const auto it = stats.counts.find(key);
        const double m = it == stats.counts.end() ? 0.0 : static_cast<double>(it->second);
        const double mbar = dn * q;
        r.max_additive_dev = std::max(r.max_additive_dev, std::abs(m - mbar) / sqrt_n);
        if (mbar > 0.0) {
            const double ratio = m / mbar;
            if (!any_ratio) {
                r.min_ratio = r.max_ratio = ratio;
                any_ratio = true;
            } else {
                r.min_ratio = std::min(r.min_ratio, ratio);
                r.max_ratio = std::max(r.max_ratio, ratio);
            }
        }
    }
    return r;
}

StoryDist story_distribution_exact(const UpdateRule& rule, double d, const Dist& q0, int t) {
    if (t < 0) throw input_error("t must be nonnegative");
    if (d < 0.0) throw input_error("mean degree must be nonnegative");
    const int k = rule.alphabet().size();
    const int cap = rule.cap();

    StoryDist level;
    level.t = 0;
    level.sigma = k;
    for (int j = 0; j < k; ++j)
        if (q0[j] > 0.0) level.prob[static_cast<std::uint64_t>(j)] = q0[j];

    for (int s = 1; s <= t; ++s) {
        // Children are stories of length s (entries 0..s-1) with independent
        // Po(d * prob) counts per story.
        std::vector<std::vector<std::uint8_t>> stories;
        std::vector<double> lambda;
        for (const auto& [code, p] : level.prob) {
            stories.push_back(decode_story(code, s, k));
            lambda.push_back(d * p);
        }
        const std::size_t m = stories.size();
        double combos = 1.0;
        for (std::size_t i = 0; i < m; ++i) combos *= cap + 1;
        if (combos > 1e7)
            throw feasibility_error(
                "story distribution DP exceeds 10^7 capped count vectors; use Monte Carlo");

        // factor[w][c]: probability that story w's capped count equals c.
        std::vector<std::vector<double>> factor(m);
        for (std::size_t i = 0; i < m; ++i) {
            factor[i].resize(static_cast<std::size_t>(cap) + 1);
            for (int c = 0; c < cap; ++c) factor[i][static_cast<std::size_t>(c)] =
                poisson_pmf(c, lambda[i]);
            factor[i][static_cast<std::size_t>(cap)] = poisson_upper_tail(cap, lambda[i]);
        }

        StoryDist next;
        next.t = s;
        next.sigma = k;
        std::vector<int> mult(m, 0);
        std::vector<int> counts(static_cast<std::size_t>(s) * k);
        std::vector<int> capped(static_cast<std::size_t>(k));
        Story parent(static_cast<std::size_t>(s) + 1);
        while (true) {
            double w = 1.0;
            for (std::size_t i = 0; i < m; ++i) w *= factor[i][static_cast<std::size_t>(mult[i])];
            if (w > 0.0) {
                std::fill(counts.begin(), counts.end(), 0);
                for (std::size_t i = 0; i < m; ++i) {
                    if (mult[i] == 0) continue;
                    for (int r = 0; r < s; ++r)
                        counts[static_cast<std::size_t>(r) * k +
                               stories[i][static_cast<std::size_t>(r)]] += mult[i];
                }
                for (int r = 1; r <= s; ++r) {
                    for (int j = 0; j < k; ++j)
                        capped[static_cast<std::size_t>(j)] =
                            std::min(counts[static_cast<std::size_t>(r - 1) * k + j], cap);
                    parent[static_cast<std::size_t>(r)] =
                        static_cast<std::uint8_t>(rule.eval_capped(capped));
                }
                for (int x0 = 0; x0 < k; ++x0) {
                    if (q0[x0] <= 0.0) continue;
                    parent[0] = static_cast<std::uint8_t>(x0);
                    next.prob[encode_story(parent, k)] += q0[x0] * w;
                }
            }
            std::size_t i = 0;
            while (i < m && mult[i] == cap) mult[i++] = 0;
            if (i == m) break;
            ++mult[i];
        }
        level = std::move(next);
    }
    return level;
}

Dist story_dist_marginal(const StoryDist& sd, int entry) {
    if (entry < 0 || entry > sd.t) throw input_error("entry outside story length");
    std::vector<double> w(static_cast<std::size_t>(sd.sigma), 0.0);
    std::uint64_t stride = 1;
    for (int i = 0; i < entry; ++i) stride *= static_cast<std::uint64_t>(sd.sigma);
    double total = 0.0;
    for (const auto& [code, p] : sd.prob) {
        w[static_cast<std::size_t>((code / stride) % static_cast<std::uint64_t>(sd.sigma))] += p;
        total += p;
    }
    for (double& x : w) x /= total;
    return Dist(std::move(w));
}

ClassReport qr_classes(const UpdateRule& rule, double d, const Dist& q0, int t0) {
    if (t0 < 0) throw input_error("t0 must be nonnegative");
    if (d < 0.0) throw input_error("mean degree must be nonnegative");
    ClassReport report;
    report.r_before = 1;  // the t = -1 class of empty stories
    for (int t = 0; t <= t0; ++t) {
        const std::int64_t support =
            d == 0.0 ? [&] {
                // With no children every story is (x0, phi(empty), ...).
                std::int64_t c = 0;
                for (int j = 0; j < rule.alphabet().size(); ++j) c += q0[j] > 0.0;
                return c;
            }()
                     : static_cast<std::int64_t>(story_support(rule, q0, t).stories.size());
        ClassLine line;
        line.t = t;
        line.s = support * support;
        line.r = support;
        line.q = line.s - line.r;
        report.per_t.push_back(line);
        if (t < t0) report.r_before += support;
    }
    const auto& last = report.per_t.back();
    report.exponent =
        (static_cast<double>(last.q) - 2.0 * static_cast<double>(report.r_before)) / 4.0;
    return report;
}

MatchProbEstimate estimate_match_probability(const UpdateRule& rule, double d, const Dist& q0,
                                             int t0, std::int64_t n, std::int64_t trials,
                                             std::uint64_t seed, int threads) {
    if (trials < 1) throw input_error("trials must be >= 1");
    std::vector<std::int64_t> chunk_hits(static_cast<std::size_t>(std::max(threads, 1)), 0);
    parallel_chunks(0, trials, threads, [&](int chunk, std::int64_t lo, std::int64_t hi) {
        for (std::int64_t trial = lo; trial < hi; ++trial) {
            const auto ens = generate_ensemble(
                rule, d, q0, t0, n, derive_seed(seed, stream::trial, static_cast<std::uint64_t>(trial)));
            if (statistics_match(story_statistics(ens)))
                ++chunk_hits[static_cast<std::size_t>(chunk)];
        }
    });
    std::int64_t hits = 0;
    for (std::int64_t h : chunk_hits) hits += h;

    MatchProbEstimate est;
    est.trials = trials;
    est.successes = hits;
    est.p_hat = static_cast<double>(hits) / static_cast<double>(trials);
    const double z = 1.959963984540054;
    const double nn = static_cast<double>(trials);
    const double denom = 1.0 + z * z / nn;
    const double center = (est.p_hat + z * z / (2.0 * nn)) / denom;
    const double half =
        z * std::sqrt(est.p_hat * (1.0 - est.p_hat) / nn + z * z / (4.0 * nn * nn)) / denom;
    est.ci_lo = std::max(0.0, center - half);
    est.ci_hi = std::min(1.0, center + half);
    return est;
}

HalfEdgeEnsemble generate_conditioned_ensemble(const UpdateRule& rule, double d, const Dist& q0,
                                               int t0, std::int64_t n, std::uint64_t seed,
                                               std::int64_t max_regen) {
    for (std::int64_t attempt = 0; attempt < max_regen; ++attempt) {
        auto ens = generate_ensemble(rule, d, q0, t0, n,
                                     derive_seed(seed, stream::trial,
                                                 static_cast<std::uint64_t>(attempt)));
        if (statistics_match(story_statistics(ens))) return ens;
    }
    throw conditioning_error("statistics never matched within the regeneration budget",
                             1.0 / static_cast<double>(max_regen));
}

MatchedGraph sample_matching(const HalfEdgeEnsemble& ens, std::uint64_t seed, int max_attempts) {
    const StoryStats stats = story_statistics(ens);
    if (!statistics_match(stats))
        throw state_error("ensemble statistics do not match; no consistent matching exists");

    // Registry of half-edges by class.
    std::vector<std::uint32_t> owner;
    std::vector<std::uint64_t> in_code, out_code;
    std::map<StoryPair, std::vector<std::int64_t>> classes;
    for (std::int64_t v = 0; v < ens.n; ++v) {
        for (const HalfEdge& he : ens.vertex[static_cast<std::size_t>(v)]) {
            const std::int64_t id = static_cast<std::int64_t>(owner.size());
            owner.push_back(static_cast<std::uint32_t>(v));
            in_code.push_back(he.in_code);
            out_code.push_back(he.out_code);
            classes[{he.in_code, he.out_code}].push_back(id);
        }
    }

    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Rng rng(derive_seed(seed, stream::matching, static_cast<std::uint64_t>(attempt)));
        std::vector<std::pair<std::int64_t, std::int64_t>> matched;  // half-edge id pairs
        for (const auto& [key, ids] : classes) {
            if (key.first < key.second) {
                const auto& dual = classes.at({key.second, key.first});
                std::vector<std::int64_t> other = dual;
                rng.shuffle(other);
                for (std::size_t i = 0; i < ids.size(); ++i) matched.emplace_back(ids[i], other[i]);
            } else if (key.first == key.second) {
                std::vector<std::int64_t> pool = ids;
                rng.shuffle(pool);
                for (std::size_t i = 0; i + 1 < pool.size(); i += 2)
                    matched.emplace_back(pool[i], pool[i + 1]);
            }
        }

        bool simple = true;
        std::unordered_set<std::uint64_t> seen;
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
        edges.reserve(matched.size());
        for (const auto& [a, b] : matched) {
            const std::uint32_t u = owner[static_cast<std::size_t>(a)];
            const std::uint32_t v = owner[static_cast<std::size_t>(b)];
            if (u == v) {
                simple = false;
                break;
            }
            const std::uint64_t k64 =
                (static_cast<std::uint64_t>(std::min(u, v)) << 32) | std::max(u, v);
            if (!seen.insert(k64).second) {
                simple = false;
                break;
            }
            edges.emplace_back(u, v);
        }
        if (!simple) continue;

        std::vector<std::pair<std::int64_t, std::int64_t>> slots;
        MatchedGraph mg;
        mg.t0 = ens.t0;
        mg.g = graph_from_edges(ens.n, edges, &slots);
        mg.stories.assign(static_cast<std::size_t>(ens.t0) + 1,
                          std::vector<std::uint8_t>(mg.g.nbr.size()));
        for (std::size_t i = 0; i < matched.size(); ++i) {
            const auto [a, b] = matched[i];
            const auto [s_uv, s_vu] = slots[i];
            const Story uv = decode_story(out_code[static_cast<std::size_t>(a)], ens.t0 + 1,
                                          ens.sigma);
            const Story vu = decode_story(out_code[static_cast<std::size_t>(b)], ens.t0 + 1,
                                          ens.sigma);
            for (int r = 0; r <= ens.t0; ++r) {
                mg.stories[static_cast<std::size_t>(r)][static_cast<std::size_t>(s_uv)] =
                    uv[static_cast<std::size_t>(r)];
                mg.stories[static_cast<std::size_t>(r)][static_cast<std::size_t>(s_vu)] =
                    vu[static_cast<std::size_t>(r)];
            }
        }
        mg.g.msg = mg.stories[static_cast<std::size_t>(ens.t0)];
        mg.g.round = ens.t0;
        return mg;
    }
    throw conditioning_error("all sampled matchings were non-simple", 0.0);
}

bool verify_wp_consistency(const MatchedGraph& mg, const UpdateRule& rule) {
    MessagedGraph g = mg.g;
    g.msg = mg.stories[0];
    g.round = 0;
    const StoryGraph rerun = wp_run_with_stories(std::move(g), rule, mg.t0);
    for (int r = 0; r <= mg.t0; ++r) {
        const auto& snap =
            rerun.snapshots[static_cast<std::size_t>(std::min(r, rerun.horizon()))];
        if (snap != mg.stories[static_cast<std::size_t>(r)]) return false;
    }
    return true;
}

namespace {

using IncompKey = std::vector<std::pair<std::uint64_t, std::uint8_t>>;

}  // namespace

ModelComparison compare_models(const UpdateRule& rule, double d, const Dist& q0, int t0,
                               std::int64_t n, std::uint64_t seed, int threads) {
    if (n < 1) throw input_error("n must be >= 1");
    const int k = rule.alphabet().size();

    ModelComparison cmp;
    cmp.n = n;
    cmp.t0 = t0;
    cmp.d = d;
    cmp.sigma = k;
    const double lln = std::log(std::log(static_cast<double>(n)));
    cmp.k0 = lln > 0.0 && std::log(lln) > 0.0 ? 11.0 * lln / std::log(lln)
                                              : static_cast<double>(n);

    // Graph model: generate, initialise, run t0 rounds with stories.
    MessagedGraph g = gen_gnp(n, d, seed);
    init_messages(g, q0, seed);
    const StoryGraph sg = wp_run_with_stories(std::move(g), rule, t0, threads);
    cmp.g_rounds = sg.stats.rounds;
    cmp.g_fixed_point = sg.stats.reached_fixed_point;
    auto snap = [&](int r) -> const std::vector<std::uint8_t>& {
        return sg.snapshots[static_cast<std::size_t>(std::min(r, sg.horizon()))];
    };

    std::map<StoryPair, std::int64_t> g_counts;
    {
        Story story(static_cast<std::size_t>(t0) + 1), in(static_cast<std::size_t>(t0) + 1);
        for (std::int64_t e = 0; e < sg.g.num_directed(); ++e) {
            for (int r = 0; r <= t0; ++r) {
                story[static_cast<std::size_t>(r)] = snap(r)[static_cast<std::size_t>(e)];
                in[static_cast<std::size_t>(r)] =
                    snap(r)[static_cast<std::size_t>(sg.g.rev[static_cast<std::size_t>(e)])];
            }
            ++g_counts[{encode_story(in, k), encode_story(story, k)}];
        }
    }

    // Half-edge model.
    const HalfEdgeEnsemble ens = generate_ensemble(rule, d, q0, t0, n, seed, threads);
    const StoryStats he_stats = story_statistics(ens);
    cmp.he_a_holds = statistics_match(he_stats);

    // Expected pair probabilities q = nu(mu1) * nu(mu2).
    std::map<std::uint64_t, double> nu;
    try {
        const StoryDist sd = story_distribution_exact(rule, d, q0, t0);
        nu = sd.prob;
        cmp.expected_exact = true;
    } catch (const feasibility_error&) {
        cmp.expected_exact = false;
        const std::int64_t samples = 200000;
        for (std::int64_t i = 0; i < samples; ++i) {
            Rng rng(derive_seed(seed, stream::story, static_cast<std::uint64_t>(i)));
            nu[encode_story(sample_story(rule, d, q0, t0, rng), k)] +=
                1.0 / static_cast<double>(samples);
        }
    }

    std::set<StoryPair> keys;
    for (const auto& [key, c] : g_counts) keys.insert(key);
    for (const auto& [key, c] : he_stats.counts) keys.insert(key);
    if (nu.size() <= 1000) {
        for (const auto& [c1, p1] : nu)
            for (const auto& [c2, p2] : nu) keys.insert({c1, c2});
    }

    const double dn = d * static_cast<double>(n);
    double l1 = 0.0;
    for (const StoryPair& key : keys) {
        PairComparison pc;
        pc.in_code = key.first;
        pc.out_code = key.second;
        const auto git = g_counts.find(key);
        pc.g_count = git == g_counts.end() ? 0 : git->second;
        const auto hit = he_stats.counts.find(key);
        pc.he_count = hit == he_stats.counts.end() ? 0 : hit->second;
        const auto n1 = nu.find(key.first);
        const auto n2 = nu.find(key.second);
        pc.expected = (n1 == nu.end() || n2 == nu.end()) ? 0.0 : dn * n1->second * n2->second;
        l1 += std::abs(static_cast<double>(pc.g_count) - static_cast<double>(pc.he_count));
        cmp.g_max_abs_dev =
            std::max(cmp.g_max_abs_dev, std::abs(static_cast<double>(pc.g_count) - pc.expected));
        cmp.he_max_abs_dev =
            std::max(cmp.he_max_abs_dev, std::abs(static_cast<double>(pc.he_count) - pc.expected));
        cmp.pairs.push_back(pc);
    }
    cmp.l1_discrepancy = dn > 0.0 ? l1 / dn : 0.0;

    // In-compilation histograms over vertices of degree <= k0.
    std::map<IncompKey, std::int64_t> g_hist, he_hist;
    for (std::int64_t v = 0; v < n; ++v) {
        const std::int64_t deg = sg.g.degree(v);
        if (static_cast<double>(deg) > cmp.k0) {
            ++cmp.g_high_degree;
        } else {
            IncompKey key;
            Story in(static_cast<std::size_t>(t0) + 1);
            for (std::int64_t f = sg.g.offsets[static_cast<std::size_t>(v)];
                 f < sg.g.offsets[static_cast<std::size_t>(v) + 1]; ++f) {
                for (int r = 0; r <= t0; ++r)
                    in[static_cast<std::size_t>(r)] =
                        snap(r)[static_cast<std::size_t>(sg.g.rev[static_cast<std::size_t>(f)])];
                key.emplace_back(encode_story(in, k), snap(0)[static_cast<std::size_t>(f)]);
            }
            std::sort(key.begin(), key.end());
            ++g_hist[key];
        }
        const auto& hes = ens.vertex[static_cast<std::size_t>(v)];
        if (static_cast<double>(hes.size()) > cmp.k0) {
            ++cmp.he_high_degree;
        } else {
            IncompKey key;
            for (const HalfEdge& he : hes)
                key.emplace_back(he.in_code,
                                 decode_story(he.out_code, t0 + 1, k)[0]);
            std::sort(key.begin(), key.end());
            ++he_hist[key];
        }
    }
    std::set<IncompKey> all;
    for (const auto& [key, c] : g_hist) all.insert(key);
    for (const auto& [key, c] : he_hist) all.insert(key);
    double incomp_l1 = 0.0;
    for (const auto& key : all) {
        const auto a = g_hist.find(key);
        const auto b = he_hist.find(key);
        incomp_l1 += std::abs(static_cast<double>(a == g_hist.end() ? 0 : a->second) -
                              static_cast<double>(b == he_hist.end() ? 0 : b->second));
    }
    cmp.incomp_l1 = incomp_l1 / static_cast<double>(n);
    return cmp;
}

}  // namespace wp
