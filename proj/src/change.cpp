#include "wp/change.hpp"

#include <algorithm>
#include <cmath>

#include "wp/errors.hpp"
#include "wp/parallel.hpp"

namespace wp {

std::vector<ChangeChild> change_children_for_counts(const UpdateRule& rule,
                                                    std::span<const std::int64_t> counts,
                                                    ChangePair change) {
    const int k = rule.alphabet().size();
    std::vector<std::int64_t> scratch(counts.begin(), counts.end());
    std::vector<ChangeChild> children;
    for (int s = 0; s < k; ++s) {
        const std::int64_t c = counts[static_cast<std::size_t>(s)];
        if (c == 0) continue;
        // View from one half-edge carrying symbol s: the others plus the
        // parent's message.
        --scratch[static_cast<std::size_t>(s)];
        ++scratch[static_cast<std::size_t>(change.from)];
        const int out_old = rule.eval_counts(scratch);
        --scratch[static_cast<std::size_t>(change.from)];
        ++scratch[static_cast<std::size_t>(change.to)];
        const int out_new = rule.eval_counts(scratch);
        --scratch[static_cast<std::size_t>(change.to)];
        ++scratch[static_cast<std::size_t>(s)];
        if (out_old != out_new)
            children.push_back(ChangeChild{
                ChangePair{static_cast<std::uint8_t>(out_old), static_cast<std::uint8_t>(out_new)},
                static_cast<std::uint8_t>(s), c});
    }
    return children;
}

std::vector<ChangeChild> sample_change_step(const UpdateRule& rule, double d, const Dist& p,
                                            ChangePair change, int chi, Rng& rng,
                                            std::int64_t max_attempts) {
    const int k = rule.alphabet().size();
    if (p.size() != k) throw input_error("distribution size does not match rule alphabet");
    if (chi < 0 || chi >= k) throw input_error("chi out of range");

    if (d == 0.0) {
        if (rule.eval_empty() != chi)
            throw conditioning_error("upward message has zero probability at d=0", 0.0);
        return {};
    }

    std::vector<std::int64_t> counts(static_cast<std::size_t>(k));
    for (std::int64_t attempt = 1; attempt <= max_attempts; ++attempt) {
        for (int s = 0; s < k; ++s)
            counts[static_cast<std::size_t>(s)] = rng.poisson(d * p[s]);
        if (rule.eval_counts(counts) == chi)
            return change_children_for_counts(rule, counts, change);
    }
    throw conditioning_error("rejection sampling hit the attempt cap",
                             1.0 / static_cast<double>(max_attempts));
}

namespace {

std::string pair_name(const Alphabet& ab, ChangePair p) {
    return ab.name(p.from) + "->" + ab.name(p.to);
}

struct PowerResult {
    double rho;
    std::vector<double> alpha;
    double residual;
    int iterations;
};

PowerResult power_iteration(const std::vector<double>& m, std::size_t dim, double epsilon) {
    std::vector<double> x(dim, 1.0 / static_cast<double>(dim));
    std::vector<double> y(dim);
    double rho = 0.0;
    const int max_steps = 100000;
    for (int it = 1; it <= max_steps; ++it) {
        for (std::size_t i = 0; i < dim; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dim; ++j) acc += (m[i * dim + j] + epsilon) * x[j];
            y[i] = acc;
        }
        double norm = 0.0;
        for (double v : y) norm += v;
        rho = norm;
        double moved = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            y[i] /= norm;
            moved += std::abs(y[i] - x[i]);
        }
        x.swap(y);
        if (moved < 1e-14) {
            double res = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < dim; ++j) acc += (m[i * dim + j] + epsilon) * x[j];
                res += std::abs(acc - rho * x[i]);
            }
            return PowerResult{rho, std::move(x), res, it};
        }
    }
    throw numerical_error("power iteration failed to converge");
}

}  // namespace

TypedMatrices estimate_transition_matrix(const UpdateRule& rule, double d, const Dist& p,
                                         std::int64_t trials, std::uint64_t seed, int threads) {
    if (trials < 1) throw input_error("trials must be >= 1");
    const int k = rule.alphabet().size();

    const PotentialChanges pot = potential_changes(rule, d, p, 64);
    if (pot.pairs.empty()) throw input_error("potential change set is empty");

    TypedMatrices out;
    out.change_pairs = pot.pairs;
    const std::size_t npairs = pot.pairs.size();
    const std::size_t dim = npairs * static_cast<std::size_t>(k);

    auto pair_index = [&](ChangePair cp) -> std::size_t {
        const auto it = std::lower_bound(pot.pairs.begin(), pot.pairs.end(), cp);
        if (it == pot.pairs.end() || !(*it == cp))
            throw numerical_error("sampled a change outside the potential-change set");
        return static_cast<std::size_t>(it - pot.pairs.begin());
    };

    out.full.dim = dim;
    out.full.trials_per_type = trials;
    out.full.mean.assign(dim * dim, 0.0);
    out.full.se.assign(dim * dim, 0.0);
    out.full.infeasible.assign(dim, 0);
    for (std::size_t pi = 0; pi < npairs; ++pi) {
        for (int chi = 0; chi < k; ++chi) {
            out.full_types.push_back(ChangeChild{pot.pairs[pi], static_cast<std::uint8_t>(chi), 0});
            out.full.type_names.push_back(pair_name(rule.alphabet(), pot.pairs[pi]) + "|" +
                                          rule.alphabet().name(chi));
        }
    }

    // sum / sum of squares per (child type, parent type), merged over chunks.
    std::vector<std::vector<double>> chunk_sum(static_cast<std::size_t>(std::max(threads, 1)),
                                               std::vector<double>(dim * dim, 0.0));
    auto chunk_sq = chunk_sum;
    std::vector<std::uint8_t> infeasible(dim, 0);

    for (std::size_t parent = 0; parent < dim; ++parent) {
        const ChangePair cp = pot.pairs[parent / static_cast<std::size_t>(k)];
        const int chi = static_cast<int>(parent % static_cast<std::size_t>(k));
        bool bad = false;
        try {
            // Probe feasibility once so an impossible conditioning shows up
            // as a flagged zero column rather than trials * cap attempts.
            Rng probe(derive_seed(seed, stream::trial, 0x7fffffff00000000ULL + parent));
            sample_change_step(rule, d, p, cp, chi, probe, 200000);
        } catch (const conditioning_error&) {
            bad = true;
        }
        if (bad) {
            infeasible[parent] = 1;
            continue;
        }
        parallel_chunks(0, trials, threads, [&](int chunk, std::int64_t lo, std::int64_t hi) {
            auto& sums = chunk_sum[static_cast<std::size_t>(chunk)];
            auto& sqs = chunk_sq[static_cast<std::size_t>(chunk)];
            std::vector<std::int64_t> per_child(dim);
            for (std::int64_t trial = lo; trial < hi; ++trial) {
                Rng rng(derive_seed(seed, stream::trial,
                                    parent * static_cast<std::uint64_t>(trials) +
                                        static_cast<std::uint64_t>(trial)));
                const auto children = sample_change_step(rule, d, p, cp, chi, rng);
                std::fill(per_child.begin(), per_child.end(), 0);
                for (const ChangeChild& c : children)
                    per_child[pair_index(c.pair) * static_cast<std::size_t>(k) + c.chi] += c.count;
                for (std::size_t child = 0; child < dim; ++child) {
                    const double v = static_cast<double>(per_child[child]);
                    sums[child * dim + parent] += v;
                    sqs[child * dim + parent] += v * v;
                }
            }
        });
    }

    out.full.infeasible = infeasible;
    for (std::size_t cell = 0; cell < dim * dim; ++cell) {
        double s = 0.0, sq = 0.0;
        for (int c = 0; c < std::max(threads, 1); ++c) {
            s += chunk_sum[static_cast<std::size_t>(c)][cell];
            sq += chunk_sq[static_cast<std::size_t>(c)][cell];
        }
        const double mean = s / static_cast<double>(trials);
        const double var =
            std::max(0.0, sq / static_cast<double>(trials) - mean * mean);
        out.full.mean[cell] = mean;
        out.full.se[cell] = std::sqrt(var / static_cast<double>(trials));
    }

    // Paper-style |Sigma|^2 matrix: average the parent's chi against the
    // one-step image of p. At a fixed point this reproduces sampling the
    // multiset unconditionally and reading chi off it.
    const Dist chi_law = poissonized_update(rule, d, p);
    const std::size_t adim = static_cast<std::size_t>(k) * static_cast<std::size_t>(k);
    out.aggregated.dim = adim;
    out.aggregated.trials_per_type = trials;
    out.aggregated.mean.assign(adim * adim, 0.0);
    out.aggregated.se.assign(adim * adim, 0.0);
    out.aggregated.infeasible.assign(adim, 0);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
            out.aggregated.type_names.push_back(
                pair_name(rule.alphabet(), ChangePair{static_cast<std::uint8_t>(a),
                                                      static_cast<std::uint8_t>(b)}));
    auto global_index = [k](ChangePair cp) {
        return static_cast<std::size_t>(cp.from) * static_cast<std::size_t>(k) + cp.to;
    };
    for (std::size_t p1 = 0; p1 < npairs; ++p1) {
        for (std::size_t p2 = 0; p2 < npairs; ++p2) {
            const std::size_t gi = global_index(pot.pairs[p1]);
            const std::size_t gj = global_index(pot.pairs[p2]);
            double mean = 0.0, var = 0.0;
            for (int chi = 0; chi < k; ++chi) {
                const double w = chi_law[chi];
                if (w == 0.0) continue;
                const std::size_t parent = p2 * static_cast<std::size_t>(k) +
                                           static_cast<std::size_t>(chi);
                double col_mean = 0.0, col_var = 0.0;
                for (int cc = 0; cc < k; ++cc) {
                    const std::size_t child = p1 * static_cast<std::size_t>(k) +
                                              static_cast<std::size_t>(cc);
                    col_mean += out.full.mean[child * dim + parent];
                    col_var += out.full.se[child * dim + parent] *
                               out.full.se[child * dim + parent];
                }
                mean += w * col_mean;
                var += w * w * col_var;
            }
            out.aggregated.mean[gi * adim + gj] = mean;
            out.aggregated.se[gi * adim + gj] = std::sqrt(var);
        }
    }
    return out;
}

SubcriticalityReport spectral_radius(const TransitionMatrix& t, double epsilon, double margin) {
    if (epsilon <= 0.0) throw input_error("epsilon must be positive");
    if (t.dim == 0) throw input_error("empty matrix");

    const PowerResult central = power_iteration(t.mean, t.dim, epsilon);

    std::vector<double> lo_m(t.mean.size()), hi_m(t.mean.size());
    for (std::size_t i = 0; i < t.mean.size(); ++i) {
        const double half_width = 1.96 * t.se[i];
        lo_m[i] = std::max(0.0, t.mean[i] - half_width);
        hi_m[i] = t.mean[i] + half_width;
    }
    const double rho_lo = power_iteration(lo_m, t.dim, epsilon).rho;
    const double rho_hi = power_iteration(hi_m, t.dim, epsilon).rho;

    SubcriticalityReport r;
    r.rho = central.rho;
    r.alpha = central.alpha;
    r.gamma = 1.0 - central.rho;
    r.ci_lo = rho_lo;
    r.ci_hi = rho_hi;
    r.residual = central.residual;
    r.iterations = central.iterations;
    if (rho_hi < 1.0 - margin)
        r.verdict = Verdict::subcritical;
    else if (rho_lo > 1.0)
        r.verdict = Verdict::supercritical;
    else
        r.verdict = Verdict::critical_band;
    return r;
}

ChangeTreeStats simulate_change_tree(const UpdateRule& rule, double d, const Dist& p,
                                     ChangePair change, int max_gen, std::int64_t max_size,
                                     std::int64_t trials, std::uint64_t seed, int threads) {
    if (max_gen < 1 || max_size < 1 || trials < 1) throw input_error("bad simulation parameters");

    struct ChunkAcc {
        std::vector<std::int64_t> extinct_by_gen;
        std::vector<double> population;
        std::map<std::int64_t, std::int64_t> sizes;
        std::map<int, std::int64_t> depths;
        std::int64_t censored = 0;
    };
    std::vector<ChunkAcc> acc(static_cast<std::size_t>(std::max(threads, 1)));
    for (auto& a : acc) {
        a.extinct_by_gen.assign(static_cast<std::size_t>(max_gen) + 1, 0);
        a.population.assign(static_cast<std::size_t>(max_gen) + 1, 0.0);
    }

    parallel_chunks(0, trials, threads, [&](int chunk, std::int64_t lo, std::int64_t hi) {
        auto& a = acc[static_cast<std::size_t>(chunk)];
        for (std::int64_t trial = lo; trial < hi; ++trial) {
            Rng rng(derive_seed(seed, stream::trial, static_cast<std::uint64_t>(trial)));
            std::vector<ChangeChild> gen;
            gen.push_back(ChangeChild{change,
                                      static_cast<std::uint8_t>(rng.sample(p.weights())), 1});
            std::int64_t size = 1;
            int depth = 0;
            bool censored = false;
            a.population[0] += 1.0;
            for (int g = 1; g <= max_gen; ++g) {
                std::vector<ChangeChild> next;
                for (const ChangeChild& node : gen) {
                    for (std::int64_t rep = 0; rep < node.count; ++rep) {
                        auto kids = sample_change_step(rule, d, p, node.pair, node.chi, rng);
                        for (auto& c : kids) {
                            size += c.count;
                            next.push_back(c);
                        }
                    }
                }
                gen.swap(next);
                std::int64_t pop = 0;
                for (const auto& c : gen) pop += c.count;
                a.population[static_cast<std::size_t>(g)] += static_cast<double>(pop);
                if (pop == 0) {
                    for (int gg = g; gg <= max_gen; ++gg)
                        ++a.extinct_by_gen[static_cast<std::size_t>(gg)];
                    depth = g - 1;
                    break;
                }
                depth = g;
                if (size > max_size || g == max_gen) {
                    censored = true;
                    break;
                }
            }
            if (censored) ++a.censored;
            ++a.sizes[size];
            ++a.depths[depth];
        }
    });

    ChangeTreeStats stats;
    stats.trials = trials;
    stats.max_gen = max_gen;
    stats.extinct_by_gen.assign(static_cast<std::size_t>(max_gen) + 1, 0.0);
    stats.mean_population.assign(static_cast<std::size_t>(max_gen) + 1, 0.0);
    for (const auto& a : acc) {
        for (std::size_t g = 0; g <= static_cast<std::size_t>(max_gen); ++g) {
            stats.extinct_by_gen[g] += static_cast<double>(a.extinct_by_gen[g]);
            stats.mean_population[g] += a.population[g];
        }
        for (const auto& [s, c] : a.sizes) stats.size_histogram[s] += c;
        for (const auto& [dep, c] : a.depths) stats.depth_histogram[dep] += c;
        stats.censored += a.censored;
    }
    for (std::size_t g = 0; g <= static_cast<std::size_t>(max_gen); ++g) {
        stats.extinct_by_gen[g] /= static_cast<double>(trials);
        stats.mean_population[g] /= static_cast<double>(trials);
    }
    return stats;
}

}  // namespace wp
