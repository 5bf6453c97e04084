#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

// Euclidean projections used by the subproblem solvers.

namespace uavsched::proj {

// Project onto { x >= 0, sum(x) <= cap }. Exact via the sorted
// threshold construction when the cap binds.
inline void simplex_cap_inplace(Eigen::Ref<Eigen::VectorXd> v, double cap = 1.0) {
    const Eigen::Index n = v.size();
    double pos_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) pos_sum += std::max(0.0, v[i]);
    if (pos_sum <= cap) {
        v = v.cwiseMax(0.0);
        return;
    }
    std::vector<double> s(v.data(), v.data() + n);
    std::sort(s.begin(), s.end(), std::greater<double>());
    double acc = 0.0, tau = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        acc += s[static_cast<std::size_t>(k)];
        const double t = (acc - cap) / static_cast<double>(k + 1);
        if (k + 1 == n || s[static_cast<std::size_t>(k + 1)] <= t) {
            tau = t;
            break;
        }
    }
    v = (v.array() - tau).cwiseMax(0.0);
}

// Project onto { 0 <= p <= hi elementwise, sum(w .* p) <= budget } with
// w >= 0. KKT form p = clamp(q - tau*w, 0, hi); tau found by bisection
// on the monotone weighted sum.
inline void weighted_budget_box_inplace(Eigen::Ref<Eigen::MatrixXd> p,
                                        const Eigen::MatrixXd& w, double budget,
                                        double hi) {
    auto weighted_sum = [&](double tau) {
        return ((p.array() - tau * w.array()).cwiseMax(0.0).cwiseMin(hi) * w.array()).sum();
    };
    if (weighted_sum(0.0) <= budget) {
        p = p.array().cwiseMax(0.0).cwiseMin(hi);
        return;
    }
    double lo = 0.0, hi_tau = 1.0;
    while (weighted_sum(hi_tau) > budget) {
        hi_tau *= 2.0;
        if (hi_tau > 1e300) break;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi_tau);
        if (weighted_sum(mid) > budget)
            lo = mid;
        else
            hi_tau = mid;
    }
    p = (p.array() - hi_tau * w.array()).cwiseMax(0.0).cwiseMin(hi);
}

}  // namespace uavsched::proj
