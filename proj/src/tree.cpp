#include "wp/tree.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "wp/errors.hpp"
#include "wp/parallel.hpp"

namespace wp {

std::uint64_t encode_story(const Story& s, int sigma) {
    std::uint64_t code = 0, stride = 1;
    for (std::uint8_t e : s) {
        code += stride * e;
        if (stride > UINT64_MAX / (2 * static_cast<std::uint64_t>(sigma)))
            throw feasibility_error("story too long to encode");
        stride *= static_cast<std::uint64_t>(sigma);
    }
    return code;
}

Story decode_story(std::uint64_t code, int length, int sigma) {
    Story s(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) {
        s[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(code % sigma);
        code /= static_cast<std::uint64_t>(sigma);
    }
    return s;
}

namespace {

// Bottom-up story of a node that still needs entries 0..h. Children only
// matter through their entries 0..h-1.
Story sample_node(const UpdateRule& rule, double d, const Dist& q0, int h, Rng& rng,
                  std::int64_t& budget) {
    if (--budget < 0) throw resource_error("galton-watson tree exceeded the node budget");
    const int k = rule.alphabet().size();
    Story story(static_cast<std::size_t>(h) + 1);
    story[0] = static_cast<std::uint8_t>(rng.sample(q0.weights()));
    if (h == 0) return story;

    std::vector<int> counts(static_cast<std::size_t>(h) * k, 0);
    const std::int64_t children = rng.poisson(d);
    for (std::int64_t c = 0; c < children; ++c) {
        const Story child = sample_node(rule, d, q0, h - 1, rng, budget);
        for (int s = 0; s < h; ++s)
            ++counts[static_cast<std::size_t>(s) * k + child[static_cast<std::size_t>(s)]];
    }
    std::vector<int> capped(static_cast<std::size_t>(k));
    for (int s = 1; s <= h; ++s) {
        for (int j = 0; j < k; ++j)
            capped[static_cast<std::size_t>(j)] =
                std::min(counts[static_cast<std::size_t>(s - 1) * k + j], rule.cap());
        story[static_cast<std::size_t>(s)] = static_cast<std::uint8_t>(rule.eval_capped(capped));
    }
    return story;
}

}  // namespace

Story sample_story(const UpdateRule& rule, double d, const Dist& q0, int t, Rng& rng,
                   std::int64_t node_budget) {
    if (t < 0) throw input_error("t must be nonnegative");
    if (d < 0.0) throw input_error("mean degree must be nonnegative");
    if (q0.size() != rule.alphabet().size()) throw input_error("q0 size mismatch");
    return sample_node(rule, d, q0, t, rng, node_budget);
}

Story sample_story(const UpdateRule& rule, double d, const Dist& q0, int t, std::uint64_t seed) {
    Rng rng(derive_seed(seed, stream::story, 0));
    return sample_story(rule, d, q0, t, rng);
}

double marginal_check(const UpdateRule& rule, double d, const Dist& q0, int t,
                      std::int64_t samples, std::uint64_t seed, int threads) {
    if (samples < 1) throw input_error("samples must be >= 1");
    const int k = rule.alphabet().size();
    const std::size_t cells = static_cast<std::size_t>(t + 1) * k;
    std::vector<std::vector<std::int64_t>> chunk_counts(
        static_cast<std::size_t>(std::max(threads, 1)), std::vector<std::int64_t>(cells, 0));

    parallel_chunks(0, samples, threads, [&](int chunk, std::int64_t lo, std::int64_t hi) {
        auto& counts = chunk_counts[static_cast<std::size_t>(chunk)];
        for (std::int64_t i = lo; i < hi; ++i) {
            Rng rng(derive_seed(seed, stream::story, static_cast<std::uint64_t>(i)));
            const Story s = sample_story(rule, d, q0, t, rng);
            for (int r = 0; r <= t; ++r)
                ++counts[static_cast<std::size_t>(r) * k + s[static_cast<std::size_t>(r)]];
        }
    });

    std::vector<std::int64_t> counts(cells, 0);
    for (const auto& c : chunk_counts)
        for (std::size_t i = 0; i < cells; ++i) counts[i] += c[i];

    double worst = 0.0;
    Dist iterate = q0;
    for (int r = 0; r <= t; ++r) {
        if (r > 0) iterate = poissonized_update(rule, d, iterate);
        double tv = 0.0;
        for (int j = 0; j < k; ++j) {
            const double emp = static_cast<double>(counts[static_cast<std::size_t>(r) * k + j]) /
                               static_cast<double>(samples);
            tv += std::abs(emp - iterate[j]);
        }
        worst = std::max(worst, 0.5 * tv);
    }
    return worst;
}

namespace {

constexpr double kMultisetBudget = 2e6;

// All stories producible from one level down: enumerate per-element capped
// multiplicities over `level`, evaluate the rule on the capped per-time
// counts, and prepend every feasible initial symbol.
std::set<std::uint64_t> next_level(const UpdateRule& rule, const std::vector<Story>& level,
                                   const std::vector<int>& initial_symbols, int t) {
    const int k = rule.alphabet().size();
    const int cap = rule.cap();
    const std::size_t m = level.size();

    double combos = 1.0;
    for (std::size_t i = 0; i < m; ++i) combos *= cap + 1;
    if (combos > kMultisetBudget)
        throw feasibility_error("support enumeration too large; use story_support_mc");

    std::set<std::uint64_t> out;
    std::vector<int> mult(m, 0);
    std::vector<int> counts(static_cast<std::size_t>(t) * k);
    std::vector<int> capped(static_cast<std::size_t>(k));
    Story story(static_cast<std::size_t>(t) + 1);
    while (true) {
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < m; ++i) {
            if (mult[i] == 0) continue;
            for (int s = 0; s < t; ++s)
                counts[static_cast<std::size_t>(s) * k + level[i][static_cast<std::size_t>(s)]] +=
                    mult[i];
        }
        for (int s = 1; s <= t; ++s) {
            for (int j = 0; j < k; ++j)
                capped[static_cast<std::size_t>(j)] =
                    std::min(counts[static_cast<std::size_t>(s - 1) * k + j], cap);
            story[static_cast<std::size_t>(s)] = static_cast<std::uint8_t>(rule.eval_capped(capped));
        }
        for (int x0 : initial_symbols) {
            story[0] = static_cast<std::uint8_t>(x0);
            out.insert(encode_story(story, k));
        }

        std::size_t i = 0;
        while (i < m && mult[i] == cap) mult[i++] = 0;
        if (i == m) break;
        ++mult[i];
    }
    return out;
}

}  // namespace

SupportResult story_support(const UpdateRule& rule, const Dist& q, int t) {
    if (t < 0) throw input_error("t must be nonnegative");
    const int k = rule.alphabet().size();
    double total = 1.0;
    for (int i = 0; i <= t; ++i) total *= k;
    if (total > 4096)
        throw feasibility_error("|Sigma|^(t+1) > 4096; use story_support_mc for a sampled subset");

    std::vector<int> initial;
    for (int j = 0; j < k; ++j)
        if (q[j] > 0.0) initial.push_back(j);

    std::vector<Story> level;
    for (int j : initial) level.push_back(Story{static_cast<std::uint8_t>(j)});

    for (int s = 1; s <= t; ++s) {
        std::set<std::uint64_t> codes = next_level(rule, level, initial, s);
        level.clear();
        for (std::uint64_t c : codes) level.push_back(decode_story(c, s + 1, k));
    }
    return SupportResult{std::move(level), true};
}

SupportResult story_support_mc(const UpdateRule& rule, double d, const Dist& q, int t,
                               std::int64_t samples, std::uint64_t seed) {
    const int k = rule.alphabet().size();
    std::set<std::uint64_t> codes;
    for (std::int64_t i = 0; i < samples; ++i) {
        Rng rng(derive_seed(seed, stream::story, static_cast<std::uint64_t>(i)));
        codes.insert(encode_story(sample_story(rule, d, q, t, rng), k));
    }
    SupportResult r;
    r.exact = false;
    for (std::uint64_t c : codes) r.stories.push_back(decode_story(c, t + 1, k));
    return r;
}

namespace {

// Reachable pairs of capped count vectors (one per story slot) over multisets
// of `pairs` with per-pair multiplicity <= cap. Count vectors are flat
// mixed-radix indices base cap+1.
std::set<std::pair<std::uint32_t, std::uint32_t>> reachable_count_pairs(
    const std::vector<ChangePair>& pairs, int sigma, int cap, bool empty_only) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> states{{0, 0}};
    if (empty_only) return states;

    std::vector<std::uint32_t> stride(static_cast<std::size_t>(sigma), 1);
    for (int j = 1; j < sigma; ++j)
        stride[static_cast<std::size_t>(j)] =
            stride[static_cast<std::size_t>(j - 1)] * static_cast<std::uint32_t>(cap + 1);

    auto add = [&](std::uint32_t flat, int symbol, int m) {
        const std::uint32_t s = stride[static_cast<std::size_t>(symbol)];
        const int digit = static_cast<int>(flat / s) % (cap + 1);
        return flat + static_cast<std::uint32_t>(std::min(digit + m, cap) - digit) * s;
    };

    for (const ChangePair& p : pairs) {
        std::set<std::pair<std::uint32_t, std::uint32_t>> grown;
        for (const auto& st : states) {
            for (int m = 0; m <= cap; ++m)
                grown.insert({add(st.first, p.from, m), add(st.second, p.to, m)});
        }
        states.swap(grown);
    }
    return states;
}

std::vector<int> decode_flat(std::uint32_t flat, int sigma, int cap) {
    std::vector<int> counts(static_cast<std::size_t>(sigma));
    for (int j = 0; j < sigma; ++j) {
        counts[static_cast<std::size_t>(j)] = static_cast<int>(flat % (cap + 1));
        flat /= static_cast<std::uint32_t>(cap + 1);
    }
    return counts;
}

}  // namespace

PotentialChanges potential_changes(const UpdateRule& rule, double d, const Dist& q, int t_max) {
    if (t_max < 1) throw input_error("t_max must be >= 1");
    if (d < 0.0) throw input_error("mean degree must be nonnegative");
    const int k = rule.alphabet().size();
    const int cap = rule.cap();
    const bool empty_only = d == 0.0;

    double state_space = 1.0;
    for (int j = 0; j < 2 * k; ++j) state_space *= cap + 1;
    if (state_space > 1e6)
        throw feasibility_error("potential-change dynamics state space too large");

    // Level 1: last-two pairs are (x0, phi(counts over supp(q))).
    std::set<ChangePair> level;
    {
        std::vector<ChangePair> seed_pairs;
        for (int j = 0; j < k; ++j)
            if (q[j] > 0.0)
                seed_pairs.push_back(
                    ChangePair{static_cast<std::uint8_t>(j), static_cast<std::uint8_t>(j)});
        const auto states = reachable_count_pairs(seed_pairs, k, cap, empty_only);
        for (const auto& st : states) {
            const auto counts = decode_flat(st.first, k, cap);
            const int x1 = rule.eval_capped(counts);
            for (const ChangePair& p : seed_pairs)
                level.insert(ChangePair{p.from, static_cast<std::uint8_t>(x1)});
        }
    }

    std::set<ChangePair> cumulative;
    auto absorb = [&](const std::set<ChangePair>& lv) {
        for (const ChangePair& p : lv)
            if (p.from != p.to) cumulative.insert(p);
    };
    absorb(level);

    // The level map is deterministic on subsets of Sigma^2, so a repeated
    // (level, cumulative) state means nothing new can ever appear.
    std::map<std::vector<ChangePair>, std::set<ChangePair>> seen;
    PotentialChanges result;
    for (int t = 1; t <= t_max; ++t) {
        std::vector<ChangePair> key(level.begin(), level.end());
        auto it = seen.find(key);
        if (it != seen.end() && it->second == cumulative) {
            result.stabilized = true;
            result.t_reached = t;
            break;
        }
        seen[key] = cumulative;
        if (t == t_max) break;

        const auto states = reachable_count_pairs(key, k, cap, empty_only);
        std::set<ChangePair> next;
        for (const auto& st : states) {
            const auto c0 = decode_flat(st.first, k, cap);
            const auto c1 = decode_flat(st.second, k, cap);
            next.insert(ChangePair{static_cast<std::uint8_t>(rule.eval_capped(c0)),
                                   static_cast<std::uint8_t>(rule.eval_capped(c1))});
        }
        level.swap(next);
        absorb(level);
    }
    result.pairs.assign(cumulative.begin(), cumulative.end());
    return result;
}

}  // namespace wp
