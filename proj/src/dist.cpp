#include "wp/dist.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wp/errors.hpp"
#include "wp/poisson.hpp"

namespace wp {

Dist::Dist(std::vector<double> weights) : w_(std::move(weights)) {
    if (w_.empty()) throw input_error("empty distribution");
    double sum = 0.0;
    for (double x : w_) {
        if (!(x >= 0.0)) throw input_error("negative or non-finite weight");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        if (std::abs(sum - 1.0) > 1e-9)
            throw input_error("distribution sums to " + std::to_string(sum));
        for (double& x : w_) x /= sum;  // absorb benign rounding
    }
}

Dist Dist::delta(int size, int symbol) {
    if (symbol < 0 || symbol >= size) throw input_error("delta symbol out of range");
    std::vector<double> w(static_cast<std::size_t>(size), 0.0);
    w[static_cast<std::size_t>(symbol)] = 1.0;
    return Dist(std::move(w));
}

Dist Dist::uniform(int size) {
    std::vector<double> w(static_cast<std::size_t>(size), 1.0 / size);
    return Dist(std::move(w));
}

double tv_distance(const Dist& p, const Dist& q) {
    if (p.size() != q.size()) throw input_error("tv_distance: alphabet size mismatch");
    double s = 0.0;
    for (int i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

Dist poissonized_update(const UpdateRule& rule, double d, const Dist& p) {
    const int k = rule.alphabet().size();
    if (p.size() != k) throw input_error("distribution size does not match rule alphabet");
    if (d < 0.0) throw input_error("mean degree must be nonnegative");
    const int cap = rule.cap();

    double table_cells = 1.0;
    for (int s = 0; s < k; ++s) table_cells *= cap + 1;
    if (table_cells > 1e7)
        throw feasibility_error(
            "capped count enumeration exceeds 10^7 cells; use Monte Carlo sampling instead");

    // factor[s][c]: Pr(capped count of symbol s equals c).
    std::vector<std::vector<double>> factor(static_cast<std::size_t>(k));
    for (int s = 0; s < k; ++s) {
        const double mean = d * p[s];
        auto& f = factor[static_cast<std::size_t>(s)];
        f.resize(static_cast<std::size_t>(cap) + 1);
        for (int c = 0; c < cap; ++c) f[static_cast<std::size_t>(c)] = poisson_pmf(c, mean);
        f[static_cast<std::size_t>(cap)] = poisson_upper_tail(cap, mean);
    }

    std::vector<double> out(static_cast<std::size_t>(k), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    while (true) {
        double w = 1.0;
        for (int s = 0; s < k; ++s)
            w *= factor[static_cast<std::size_t>(s)][static_cast<std::size_t>(counts[s])];
        if (w > 0.0) out[static_cast<std::size_t>(rule.eval_capped(counts))] += w;

        int s = 0;
        while (s < k && counts[static_cast<std::size_t>(s)] == cap) {
            counts[static_cast<std::size_t>(s)] = 0;
            ++s;
        }
        if (s == k) break;
        ++counts[static_cast<std::size_t>(s)];
    }

    double sum = 0.0;
    for (double x : out) sum += x;
    for (double& x : out) x /= sum;
    return Dist(std::move(out));
}

FixedPointReport iterate_to_fixed_point(const UpdateRule& rule, double d, const Dist& q0,
                                        double tol, int max_iter) {
    if (tol <= 0.0) throw input_error("tolerance must be positive");
    Dist current = q0;
    for (int it = 1; it <= max_iter; ++it) {
        Dist next = poissonized_update(rule, d, current);
        const double step = tv_distance(next, current);
        current = std::move(next);
        if (step <= tol) return FixedPointReport{std::move(current), it, true, step};
        if (it == max_iter) return FixedPointReport{std::move(current), it, false, step};
    }
    return FixedPointReport{std::move(current), 0, true, 0.0};  // max_iter == 0: q0 as-is
}

double stability_estimate(const UpdateRule& rule, double d, const Dist& p, double eps) {
    if (eps <= 0.0) throw input_error("eps must be positive");
    const int k = p.size();
    const Dist base = poissonized_update(rule, d, p);
    double factor = -1.0;
    for (int a = 0; a < k; ++a) {
        if (p[a] < eps) continue;
        for (int b = 0; b < k; ++b) {
            if (b == a) continue;
            std::vector<double> w(p.weights().begin(), p.weights().end());
            w[static_cast<std::size_t>(a)] -= eps;
            w[static_cast<std::size_t>(b)] += eps;
            // Clip and renormalize if rounding pushed anything negative.
            double sum = 0.0;
            for (double& x : w) {
                x = std::max(x, 0.0);
                sum += x;
            }
            for (double& x : w) x /= sum;
            const double moved = tv_distance(Dist(w), p);
            if (moved <= 0.0) continue;
            const Dist image = poissonized_update(rule, d, Dist(std::move(w)));
            factor = std::max(factor, tv_distance(image, base) / moved);
        }
    }
    if (factor < 0.0)
        throw input_error("no feasible perturbation direction at this point/eps");
    return factor;
}

ThresholdResult threshold_scan(const UpdateRule& rule, double d_min, double d_max, const Dist& q0,
                               double tol, double eta, double fp_tol, int max_iter) {
    if (!(d_min < d_max)) throw input_error("requires d_min < d_max");
    if (!(eta > 0.0 && eta < 1.0)) throw input_error("eta must lie in (0,1)");
    if (tol <= 0.0) throw input_error("tolerance must be positive");

    auto limit_at = [&](double d) {
        return iterate_to_fixed_point(rule, d, q0, fp_tol, max_iter).limit;
    };
    const Dist ref = limit_at(d_min);
    auto indicator = [&](double d) { return tv_distance(limit_at(d), ref) > eta; };

    const bool lo_val = indicator(d_min);
    const bool hi_val = indicator(d_max);
    if (lo_val == hi_val) return ThresholdResult{};  // constant on the interval: "none"

    double lo = d_min, hi = d_max;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (indicator(mid) == lo_val)
            lo = mid;
        else
            hi = mid;
    }
    ThresholdResult r;
    r.found = true;
    r.bracket_lo = lo;
    r.bracket_hi = hi;
    r.d_star = 0.5 * (lo + hi);
    r.jump = tv_distance(limit_at(lo), limit_at(hi));
    r.discontinuous = r.jump > eta;
    return r;
}

}  // namespace wp
