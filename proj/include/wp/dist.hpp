#pragma once

#include <span>
#include <vector>

#include "wp/rule.hpp"

namespace wp {

// Probability vector over the alphabet. Weights are validated to be
// nonnegative and to sum to 1 within 1e-12.
class Dist {
  public:
    explicit Dist(std::vector<double> weights);
    static Dist delta(int size, int symbol);
    static Dist uniform(int size);

    int size() const { return static_cast<int>(w_.size()); }
    double operator[](int i) const { return w_[static_cast<std::size_t>(i)]; }
    std::span<const double> weights() const { return w_; }

  private:
    std::vector<double> w_;
};

double tv_distance(const Dist& p, const Dist& q);

// Exact image of Po(d*p) under the rule: per-symbol counts are independent
// Poisson, and the capped count vector law is a product of pmf/upper-tail
// factors, so enumerating (cap+1)^|Sigma| vectors gives the output law with
// no truncation error.
Dist poissonized_update(const UpdateRule& rule, double d, const Dist& p);

struct FixedPointReport {
    Dist limit;
    int iterations = 0;
    bool converged = false;
    double final_step_tv = 0.0;
};

FixedPointReport iterate_to_fixed_point(const UpdateRule& rule, double d, const Dist& q0,
                                        double tol, int max_iter);

// Finite-difference contraction factor of the operator at p: max over ordered
// symbol pairs (a,b) with p(a) >= eps of TV(Phi(p + eps(e_b - e_a)), Phi(p))/eps.
double stability_estimate(const UpdateRule& rule, double d, const Dist& p, double eps = 1e-4);

struct ThresholdResult {
    bool found = false;
    double d_star = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    bool discontinuous = false;
    double jump = 0.0;  // TV across the final bracket
};

// Bisection on d of the indicator TV(limit(d), limit(d_min)) > eta.
ThresholdResult threshold_scan(const UpdateRule& rule, double d_min, double d_max, const Dist& q0,
                               double tol, double eta, double fp_tol = 1e-12,
                               int max_iter = 200000);

}  // namespace wp
