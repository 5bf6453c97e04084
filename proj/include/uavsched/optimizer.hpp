#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "uavsched/channel.hpp"
#include "uavsched/projection.hpp"

// Joint resource-block / transmit-power / placement optimizer. The slot
// problem
//
//   max_{a, p, c}  sum_{u,b} r_ub - zeta * sum_{u,b} p_ub
//   s.t.  sum_b r_ub >= beta_bits * E[L_u] / eps      (per-user rate floor)
//         sum_u a_ub <= 1, a binary                   (RB exclusivity)
//         sum_{u,b} a_ub p_ub <= P_max, 0 <= p <= P_max
//
// is solved by block coordinate ascent over the relaxed assignment
// (a in [0,1]), the power matrix and the UAV position, followed by
// threshold rounding and a final power re-solve at the binary
// assignment. Each block is handled by projected gradient ascent with
// dual ascent on the coupling constraints; the power block warm-starts
// from the closed-form stationary point of its concave surrogate (the
// dispersion term frozen at the incumbent, which drops out of the
// stationarity condition).

namespace uavsched::opt {

struct rect {
    double x0 = 0, y0 = 0, x1 = 250, y1 = 250;

    bool contains(double x, double y, double tol = 1e-9) const {
        return x >= x0 - tol && x <= x1 + tol && y >= y0 - tol && y <= y1 + tol;
    }
    void clamp(double& x, double& y) const {
        x = std::clamp(x, x0, x1);
        y = std::clamp(y, y0, y1);
    }
};

struct problem {
    std::vector<channel::pos2> users;
    channel::params chan;
    int num_rbs = 1;
    double total_power = 10.0;   // P_max, W
    double packet_bytes = 32.0;  // beta
    double outage_eps = 0.1;
    std::vector<double> predicted_loads;  // E[L_u], packets per slot
    rect coverage;
    double altitude = 120.0;      // m
    double tradeoff_zeta = 5e13;  // (bit/s) per W
    // Expected |h|^2 per user/RB at the initial placement; informational
    // snapshot, the solvers recompute gains from geometry as c moves.
    Eigen::MatrixXd gains;

    std::size_t num_users() const { return users.size(); }

    void validate() const {
        chan.validate();
        if (num_rbs < 1) throw std::invalid_argument("problem: num_rbs must be >= 1");
        if (!(total_power > 0)) throw std::invalid_argument("problem: total_power must be > 0");
        if (!(packet_bytes > 0)) throw std::invalid_argument("problem: packet_bytes must be > 0");
        if (!(outage_eps > 0 && outage_eps < 1))
            throw std::invalid_argument("problem: outage_eps must be in (0, 1)");
        if (!(tradeoff_zeta >= 0)) throw std::invalid_argument("problem: zeta must be >= 0");
        if (predicted_loads.size() != users.size())
            throw std::invalid_argument("problem: one predicted load per user required");
        for (double l : predicted_loads)
            if (!(l >= 0)) throw std::invalid_argument("problem: loads must be >= 0");
        if (!(altitude > 0)) throw std::invalid_argument("problem: altitude must be > 0");
        for (const auto& u : users)
            if (!coverage.contains(u.x, u.y))
                throw std::invalid_argument("problem: user outside coverage rectangle");
    }
};

struct allocation {
    Eigen::MatrixXd assign;  // U x B, {0,1} or [0,1] relaxed
    Eigen::MatrixXd power;   // U x B, W
    channel::pos3 uav_pos;
};

struct solver_config {
    double bcd_tol = 1e-4;        // relative objective change across one cycle
    int max_bcd_iters = 100;
    double inner_tol = 1e-6;      // subproblem first-order residual
    int max_inner_iters = 5000;
    double rounding_threshold = 0.5;
    double dual_step = 1.0;

    void validate() const {
        if (!(bcd_tol > 0) || !(inner_tol > 0) || !(dual_step > 0))
            throw std::invalid_argument("solver_config: tolerances and steps must be > 0");
        if (max_bcd_iters < 1 || max_inner_iters < 1)
            throw std::invalid_argument("solver_config: iteration caps must be >= 1");
        if (!(rounding_threshold > 0 && rounding_threshold < 1))
            throw std::invalid_argument("solver_config: rounding_threshold must be in (0,1)");
    }
};

enum class solve_status { converged, max_iters, infeasible };

struct trace_row {
    int iteration;
    double objective;
    double min_slack;
    double x, y;
};

struct outcome {
    allocation alloc;
    double objective = 0.0;
    Eigen::VectorXd per_user_rate;
    Eigen::VectorXd reliability_slack;
    int iterations = 0;
    std::vector<double> objective_trace;
    std::vector<trace_row> trace;
    solve_status status = solve_status::converged;
};

// beta_bits * E[L_u] / eps (the Markov bound on the outage constraint)
inline double required_rate(const problem& p, std::size_t user) {
    return 8.0 * p.packet_bytes * p.predicted_loads.at(user) / p.outage_eps;
}

inline Eigen::VectorXd required_rates(const problem& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(p.num_users()));
    for (std::size_t u = 0; u < p.num_users(); ++u)
        r[static_cast<Eigen::Index>(u)] = required_rate(p, u);
    return r;
}

inline Eigen::MatrixXd expected_gains(const problem& p, const channel::pos3& pos) {
    const Eigen::Index nu = static_cast<Eigen::Index>(p.num_users());
    Eigen::MatrixXd g(nu, p.num_rbs);
    for (Eigen::Index u = 0; u < nu; ++u)
        g.row(u).setConstant(channel::path_gain(p.chan, pos, p.users[static_cast<std::size_t>(u)]));
    return g;
}

namespace detail {

// Precomputed constants of the rate formula for vectorized evaluation.
struct rate_model {
    double omega;      // RB bandwidth
    double n0w;        // noise power per RB
    double qn;         // Qinv(theta) / sqrt(n)
    double inv_ln2;

    static rate_model from(const channel::params& c) {
        rate_model m;
        m.omega = c.rb_bandwidth;
        m.n0w = c.noise_density * c.rb_bandwidth;
        m.qn = channel::q_inv(c.decode_err) / std::sqrt(static_cast<double>(c.blocklength));
        m.inv_ln2 = 1.0 / std::numbers::ln2_v<double>;
        return m;
    }

    // bracket of the rate expression at unit assignment, clamped at 0
    double bracket(double power, double gain) const {
        if (power <= 0.0 || gain <= 0.0) return 0.0;
        const double s = power * gain / n0w;
        const double sh = omega * std::log2(1.0 + s);
        const double pen = qn * std::sqrt(s / (1.0 + s));
        return std::max(0.0, sh - pen);
    }

    // d bracket / d power where the clamp is inactive, 0 elsewhere
    double bracket_dp(double power, double gain) const {
        if (power <= 0.0 || gain <= 0.0) return 0.0;
        const double s = power * gain / n0w;
        const double sh = omega * std::log2(1.0 + s);
        const double pen = qn * std::sqrt(s / (1.0 + s));
        if (sh - pen <= 0.0) return 0.0;
        const double c = gain / n0w;
        const double dsh = omega * inv_ln2 * c / (1.0 + s);
        const double dpen = qn * 0.5 * c / (std::sqrt(s) * std::pow(1.0 + s, 1.5));
        return dsh - dpen;
    }
};

inline Eigen::MatrixXd bracket_matrix(const rate_model& m, const Eigen::MatrixXd& power,
                                      const Eigen::MatrixXd& gains) {
    Eigen::MatrixXd r(power.rows(), power.cols());
    for (Eigen::Index u = 0; u < power.rows(); ++u)
        for (Eigen::Index b = 0; b < power.cols(); ++b)
            r(u, b) = m.bracket(power(u, b), gains(u, b));
    return r;
}

}  // namespace detail

inline Eigen::VectorXd per_user_rates(const problem& p, const allocation& a,
                                      const Eigen::MatrixXd& gains) {
    const auto m = detail::rate_model::from(p.chan);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(a.assign.rows());
    for (Eigen::Index u = 0; u < a.assign.rows(); ++u)
        for (Eigen::Index b = 0; b < a.assign.cols(); ++b)
            r[u] += a.assign(u, b) * m.bracket(a.power(u, b), gains(u, b));
    return r;
}

inline double objective_with_gains(const problem& p, const allocation& a,
                                   const Eigen::MatrixXd& gains) {
    return per_user_rates(p, a, gains).sum() - p.tradeoff_zeta * a.power.sum();
}

inline double objective(const problem& p, const allocation& a) {
    return objective_with_gains(p, a, expected_gains(p, a.uav_pos));
}

// Per RB: the above-threshold argmax user takes the block (ties to the
// lowest index), otherwise the block stays unassigned.
inline Eigen::MatrixXd round_allocation(const Eigen::MatrixXd& relaxed, double threshold) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(relaxed.rows(), relaxed.cols());
    for (Eigen::Index b = 0; b < relaxed.cols(); ++b) {
        Eigen::Index best = -1;
        double best_v = -1.0;
        for (Eigen::Index u = 0; u < relaxed.rows(); ++u) {
            const double v = relaxed(u, b);
            if (v > best_v + 1e-15) {
                best_v = v;
                best = u;
            }
        }
        if (best >= 0 && best_v >= threshold) out(best, b) = 1.0;
    }
    return out;
}

namespace detail {

constexpr double kFeasRelTol = 1e-6;

inline Eigen::VectorXd slack_scales(const problem& p, const Eigen::VectorXd& req) {
    Eigen::VectorXd s(req.size());
    for (Eigen::Index u = 0; u < req.size(); ++u)
        s[u] = std::max(req[u], p.chan.rb_bandwidth);
    return s;
}

inline Eigen::VectorXd slacks(const rate_model& m, const Eigen::MatrixXd& assign,
                              const Eigen::MatrixXd& power, const Eigen::MatrixXd& gains,
                              const Eigen::VectorXd& req) {
    Eigen::VectorXd s = -req;
    for (Eigen::Index u = 0; u < assign.rows(); ++u)
        for (Eigen::Index b = 0; b < assign.cols(); ++b)
            s[u] += assign(u, b) * m.bracket(power(u, b), gains(u, b));
    return s;
}

inline bool feasible_slacks(const Eigen::VectorXd& s, const Eigen::VectorXd& scales) {
    for (Eigen::Index u = 0; u < s.size(); ++u)
        if (s[u] < -kFeasRelTol * scales[u]) return false;
    return true;
}

// ---- P1: relaxed assignment at fixed power and position -------------
//
// Linear objective sum_ub a_ub * (1+lambda_u) * B_ub - mu * a_ub * p_ub
// over per-RB capped simplexes; reliability multipliers lambda and the
// budget multiplier mu by dual ascent, the inner maximizer by projected
// gradient ascent. An ergodically averaged iterate is kept as a
// fractional fallback candidate.
struct rb_result {
    Eigen::MatrixXd assign;
    bool feasible = false;
};

inline rb_result solve_rb_allocation_impl(const problem& prob, const Eigen::MatrixXd& power,
                                          const channel::pos3& pos, const solver_config& cfg,
                                          const Eigen::MatrixXd* warm_assign = nullptr) {
    const auto m = rate_model::from(prob.chan);
    const Eigen::Index nu = static_cast<Eigen::Index>(prob.num_users());
    const Eigen::Index nb = prob.num_rbs;
    const Eigen::MatrixXd gains = expected_gains(prob, pos);
    const Eigen::MatrixXd rate_coef = bracket_matrix(m, power, gains);
    const Eigen::VectorXd req = required_rates(prob);
    const Eigen::VectorXd scales = slack_scales(prob, req);

    Eigen::MatrixXd a = warm_assign ? *warm_assign
                                    : Eigen::MatrixXd::Constant(nu, nb, 1.0 / static_cast<double>(nu));
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(nu);
    double mu = 0.0;

    rb_result best;
    double best_obj = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd best_slack_a = a;
    double best_min_slack = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(nu, nb);
    double avg_weight = 0.0;

    const int dual_rounds = 50;
    const int inner_cap = std::max(8, cfg.max_inner_iters / dual_rounds);
    double step_mem = 1.0;
    double dual_scale = cfg.dual_step;

    auto consider = [&](const Eigen::MatrixXd& cand) {
        const Eigen::VectorXd s = slacks(m, cand, power, gains, req);
        const double budget = (cand.array() * power.array()).sum();
        const double min_rel = (s.array() / scales.array()).minCoeff();
        const bool ok = feasible_slacks(s, scales) &&
                        budget <= prob.total_power * (1.0 + 1e-8);
        if (ok) {
            const double obj = (cand.array() * rate_coef.array()).sum();
            if (obj > best_obj) {
                best_obj = obj;
                best.assign = cand;
                best.feasible = true;
            }
        }
        if (min_rel > best_min_slack && budget <= prob.total_power * (1.0 + 1e-8)) {
            best_min_slack = min_rel;
            best_slack_a = cand;
        }
    };

    for (int round = 0; round < dual_rounds; ++round) {
        // inner PGA on the Lagrangian (linear in a)
        Eigen::MatrixXd grad(nu, nb);
        for (Eigen::Index u = 0; u < nu; ++u)
            grad.row(u) = (1.0 + lambda[u]) * rate_coef.row(u) - mu * power.row(u);
        for (int it = 0; it < inner_cap; ++it) {
            Eigen::MatrixXd next = a + step_mem * grad;
            for (Eigen::Index b = 0; b < nb; ++b) {
                Eigen::VectorXd col = next.col(b);
                proj::simplex_cap_inplace(col, 1.0);
                next.col(b) = col;
            }
            const double move = (next - a).norm();
            if (move <= cfg.inner_tol * (1.0 + a.norm())) break;
            // objective is linear in a, so the exact change is grad.(next-a)
            const double gain_lin = (grad.array() * (next - a).array()).sum();
            if (gain_lin > 0.0) {
                a = next;
                step_mem = std::min(step_mem * 2.0, 1e6);
            } else {
                step_mem *= 0.5;
                if (step_mem < 1e-14) break;
            }
        }

        avg += a;
        avg_weight += 1.0;
        consider(a);

        const Eigen::VectorXd s = slacks(m, a, power, gains, req);
        const double budget_excess = (a.array() * power.array()).sum() - prob.total_power;
        bool any_violation = budget_excess > prob.total_power * 1e-9;
        const double t = dual_scale / (1.0 + 0.2 * round);
        for (Eigen::Index u = 0; u < nu; ++u) {
            const double rel = s[u] / scales[u];
            if (rel < -kFeasRelTol) any_violation = true;
            lambda[u] = std::max(0.0, lambda[u] - t * rel);
        }
        mu = std::max(0.0, mu + t * budget_excess / prob.total_power);
        if (!any_violation && round >= 2) break;
        if (round > 5 && any_violation) dual_scale *= 1.3;
    }

    if (avg_weight > 0) consider(avg / avg_weight);

    if (!best.feasible) {
        best.assign = best_slack_a;
        best.feasible = false;
    }
    return best;
}

// ---- P2: power at fixed assignment and position ----------------------
//
// At fixed multipliers (lambda, tau) the concave surrogate (dispersion
// frozen, which drops out of stationarity) has the closed water-filling
// maximizer
//   p_ub = clamp( a_ub (1+lambda_u) w / ((zeta + tau a_ub) ln 2) - 1/c_ub, 0, P_max ).
// Power is separable across users given tau, and the per-user rate is
// monotone in lambda_u, so the duals are driven to complementarity by
// bisection: lambda_u lifts a user exactly to its requirement (or to
// the capacity ceiling), and tau scales the total onto the budget. A
// projected-gradient pass verifies stationarity afterwards.
struct power_result {
    Eigen::MatrixXd power;
    bool feasible = false;
};

inline power_result solve_power_impl(const problem& prob, const Eigen::MatrixXd& assign,
                                     const channel::pos3& pos, const solver_config& cfg,
                                     Eigen::VectorXd* warm_lambda = nullptr) {
    const auto m = rate_model::from(prob.chan);
    const Eigen::Index nu = assign.rows(), nb = assign.cols();
    const Eigen::MatrixXd gains = expected_gains(prob, pos);
    const Eigen::VectorXd req = required_rates(prob);
    const Eigen::VectorXd scales = slack_scales(prob, req);
    const double zeta = prob.tradeoff_zeta;
    const double pmax = prob.total_power;
    const double ln2 = std::numbers::ln2_v<double>;

    auto user_power = [&](Eigen::Index u, double lambda_u, double tau,
                          Eigen::Ref<Eigen::VectorXd> row) {
        for (Eigen::Index b = 0; b < nb; ++b) {
            const double a = assign(u, b), g = gains(u, b);
            if (a <= 0.0 || g <= 0.0) {
                row[b] = 0.0;
                continue;
            }
            const double denom = (zeta + tau * a) * ln2;
            if (denom <= 0.0) {
                row[b] = pmax;
                continue;
            }
            const double c = g / m.n0w;
            row[b] = std::clamp(a * (1.0 + lambda_u) * m.omega / denom - 1.0 / c, 0.0, pmax);
        }
    };
    auto user_rate = [&](Eigen::Index u, const Eigen::VectorXd& row) {
        double acc = 0.0;
        for (Eigen::Index b = 0; b < nb; ++b)
            acc += assign(u, b) * m.bracket(row[b], gains(u, b));
        return acc;
    };

    // lambda_u meeting the requirement at a given tau (complementarity)
    auto solve_lambda = [&](Eigen::Index u, double tau, Eigen::Ref<Eigen::VectorXd> row) {
        user_power(u, 0.0, tau, row);
        if (user_rate(u, row) >= req[u]) return 0.0;
        double hi = 1.0;
        for (int it = 0; it < 60; ++it) {
            user_power(u, hi, tau, row);
            if (user_rate(u, row) >= req[u]) break;
            hi *= 4.0;
            if (hi > 1e18) break;
        }
        user_power(u, hi, tau, row);
        if (user_rate(u, row) < req[u]) return hi;  // ceiling: unreachable
        double lo = 0.0;
        for (int it = 0; it < 90; ++it) {
            const double mid = 0.5 * (lo + hi);
            user_power(u, mid, tau, row);
            if (user_rate(u, row) >= req[u])
                hi = mid;
            else
                lo = mid;
        }
        user_power(u, hi, tau, row);
        return hi;
    };

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(nu);
    Eigen::MatrixXd p(nu, nb);
    auto fill_all = [&](double tau) {
        for (Eigen::Index u = 0; u < nu; ++u) {
            Eigen::VectorXd row(nb);
            lambda[u] = solve_lambda(u, tau, row);
            p.row(u) = row;
        }
        return (p.array() * assign.array()).sum();
    };

    double used = fill_all(0.0);
    if (used > pmax) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 200 && fill_all(hi) > pmax; ++it) hi *= 4.0;
        for (int it = 0; it < 90; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (fill_all(mid) > pmax)
                lo = mid;
            else
                hi = mid;
        }
        used = fill_all(hi);
    }

    // projected-gradient verification pass on the frozen-dispersion
    // surrogate; a no-op within inner_tol when the duals are exact
    {
        const int polish_cap = std::min(30, std::max(4, cfg.max_inner_iters / 100));
        double step = 0.0;
        auto surrogate = [&](const Eigen::MatrixXd& q) {
            double acc = 0.0;
            for (Eigen::Index u = 0; u < nu; ++u)
                for (Eigen::Index b = 0; b < nb; ++b) {
                    const double a = assign(u, b), g = gains(u, b);
                    if (a <= 0.0 || g <= 0.0) continue;
                    const double c = g / m.n0w;
                    acc += a * (1.0 + lambda[u]) * m.omega * std::log2(1.0 + c * q(u, b));
                }
            return acc - zeta * q.sum();
        };
        for (int it = 0; it < polish_cap; ++it) {
            Eigen::MatrixXd grad(nu, nb);
            for (Eigen::Index u = 0; u < nu; ++u)
                for (Eigen::Index b = 0; b < nb; ++b) {
                    const double a = assign(u, b), g = gains(u, b);
                    if (a <= 0.0 || g <= 0.0) {
                        grad(u, b) = 0.0;
                        continue;
                    }
                    const double c = g / m.n0w;
                    grad(u, b) =
                        a * (1.0 + lambda[u]) * m.omega * m.inv_ln2 * c /
                            (1.0 + c * p(u, b)) -
                        zeta;
                }
            const double gnorm = grad.cwiseAbs().maxCoeff();
            if (gnorm <= 0.0) break;
            if (step <= 0.0) step = (pmax / static_cast<double>(nb)) / gnorm;
            Eigen::MatrixXd cand = p + step * grad;
            proj::weighted_budget_box_inplace(cand, assign, pmax, pmax);
            cand = cand.array() * (assign.array() > 0.0).cast<double>();
            if ((cand - p).norm() <= cfg.inner_tol * (1.0 + p.norm())) break;
            if (surrogate(cand) > surrogate(p)) {
                p = cand;
                step *= 1.5;
            } else {
                step *= 0.25;
                if (step * gnorm < 1e-18) break;
            }
        }
    }

    power_result out;
    out.power = p;
    const Eigen::VectorXd s = slacks(m, assign, p, gains, req);
    out.feasible = feasible_slacks(s, scales);
    if (warm_lambda) *warm_lambda = lambda;
    return out;
}

// ---- P3: position at fixed assignment and power ----------------------

inline Eigen::Vector2d position_gradient_impl(const problem& prob, const Eigen::MatrixXd& assign,
                                              const Eigen::MatrixXd& power,
                                              const channel::pos3& pos) {
    const auto m = rate_model::from(prob.chan);
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    for (Eigen::Index u = 0; u < assign.rows(); ++u) {
        const auto& user = prob.users[static_cast<std::size_t>(u)];
        const double dx = pos.x - user.x;
        const double dy = pos.y - user.y;
        const double d2 = pos.h * pos.h + dx * dx + dy * dy;
        const double gain = prob.chan.gamma0 * std::pow(d2, -0.5 * prob.chan.pathloss_exp);
        // d gain / d x = -theta * gain * dx / d^2
        double acc = 0.0;  // sum_b a_ub * dbracket/dgain
        for (Eigen::Index b = 0; b < assign.cols(); ++b) {
            const double a = assign(u, b);
            const double pw = power(u, b);
            if (a <= 0.0 || pw <= 0.0) continue;
            // dbracket/dgain = dbracket/dpower * power/gain (snr = p*g/n0w)
            acc += a * m.bracket_dp(pw, gain) * pw / gain;
        }
        const double dgain_dx = -prob.chan.pathloss_exp * gain * dx / d2;
        const double dgain_dy = -prob.chan.pathloss_exp * gain * dy / d2;
        g[0] += acc * dgain_dx;
        g[1] += acc * dgain_dy;
    }
    return g;
}

inline channel::pos3 solve_position_impl(const problem& prob, const Eigen::MatrixXd& assign,
                                         const Eigen::MatrixXd& power, const channel::pos3& start,
                                         const solver_config& cfg) {
    const auto m = rate_model::from(prob.chan);
    auto value = [&](double x, double y) {
        double acc = 0.0;
        for (Eigen::Index u = 0; u < assign.rows(); ++u) {
            const auto& user = prob.users[static_cast<std::size_t>(u)];
            const double dx = x - user.x, dy = y - user.y;
            const double d2 = start.h * start.h + dx * dx + dy * dy;
            const double gain = prob.chan.gamma0 * std::pow(d2, -0.5 * prob.chan.pathloss_exp);
            for (Eigen::Index b = 0; b < assign.cols(); ++b)
                if (assign(u, b) > 0.0) acc += assign(u, b) * m.bracket(power(u, b), gain);
        }
        return acc;
    };

    double x = start.x, y = start.y;
    prob.coverage.clamp(x, y);
    double f = value(x, y);
    double step = 0.0;
    const int iters = std::min(200, std::max(30, cfg.max_inner_iters / 50));
    for (int it = 0; it < iters; ++it) {
        const Eigen::Vector2d g = position_gradient_impl(prob, assign, power, {x, y, start.h});
        const double gn = g.norm();
        if (gn < 1e-14) break;
        if (step <= 0.0) step = 4.0 / gn;  // first probe moves a few meters
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls) {
            double cx = x + step * g[0], cy = y + step * g[1];
            prob.coverage.clamp(cx, cy);
            const double fc = value(cx, cy);
            if (fc > f + 1e-4 * gn * std::hypot(cx - x, cy - y)) {
                const double delta = std::hypot(cx - x, cy - y);
                x = cx;
                y = cy;
                f = fc;
                step *= 2.0;
                moved = true;
                if (delta < 1e-7) it = iters;  // pinned at boundary or stationary
                break;
            }
            step *= 0.5;
            if (step * gn < 1e-10) break;
        }
        if (!moved) break;
    }
    return {x, y, start.h};
}

}  // namespace detail

struct rb_result {
    Eigen::MatrixXd assign;
    bool feasible = false;
};

inline rb_result solve_rb_allocation(const problem& prob, const Eigen::MatrixXd& power,
                                     const channel::pos3& pos, const solver_config& cfg = {}) {
    prob.validate();
    cfg.validate();
    const auto r = detail::solve_rb_allocation_impl(prob, power, pos, cfg);
    return {r.assign, r.feasible};
}

struct power_result {
    Eigen::MatrixXd power;
    bool feasible = false;
};

inline power_result solve_power(const problem& prob, const Eigen::MatrixXd& assign,
                                const channel::pos3& pos, const solver_config& cfg = {}) {
    prob.validate();
    cfg.validate();
    const auto r = detail::solve_power_impl(prob, assign, pos, cfg);
    return {r.power, r.feasible};
}

inline channel::pos3 solve_position(const problem& prob, const Eigen::MatrixXd& assign,
                                    const Eigen::MatrixXd& power, const channel::pos3& start,
                                    const solver_config& cfg = {}) {
    prob.validate();
    cfg.validate();
    return detail::solve_position_impl(prob, assign, power, start, cfg);
}

inline Eigen::Vector2d position_gradient(const problem& prob, const Eigen::MatrixXd& assign,
                                         const Eigen::MatrixXd& power, const channel::pos3& pos) {
    return detail::position_gradient_impl(prob, assign, power, pos);
}

struct feasibility_report {
    double min_slack = 0.0;           // worst normalized slack at the witness
    Eigen::VectorXd slacks;           // absolute, bit/s
    allocation witness;
};

// Max-min reliability slack at full power budget, smoothed by a softmin
// (temperature 1e-2 on requirement-normalized slacks) and optimized
// with the same block structure as the main solver. A negative optimum
// reports the instance as infeasible.
inline feasibility_report feasibility_phase(const problem& prob, const solver_config& cfg = {},
                                            const channel::pos3* fixed_pos = nullptr) {
    prob.validate();
    cfg.validate();
    const auto m = detail::rate_model::from(prob.chan);
    const Eigen::Index nu = static_cast<Eigen::Index>(prob.num_users());
    const Eigen::Index nb = prob.num_rbs;
    const Eigen::VectorXd req = required_rates(prob);
    const Eigen::VectorXd scales = detail::slack_scales(prob, req);
    const double tau = 1e-2;

    feasibility_report rep;
    if (nu == 0) {
        rep.min_slack = 0.0;
        rep.witness.assign = Eigen::MatrixXd::Zero(0, nb);
        rep.witness.power = Eigen::MatrixXd::Zero(0, nb);
        return rep;
    }

    // initialization: round-robin RBs, uniform power, clamped centroid
    allocation x;
    x.assign = Eigen::MatrixXd::Zero(nu, nb);
    for (Eigen::Index b = 0; b < nb; ++b) x.assign(b % nu, b) = 1.0;
    x.power = Eigen::MatrixXd::Zero(nu, nb);
    const double per_rb = prob.total_power / static_cast<double>(nb);
    for (Eigen::Index b = 0; b < nb; ++b) x.power(b % nu, b) = per_rb;
    double cx = 0, cy = 0;
    for (const auto& u : prob.users) {
        cx += u.x;
        cy += u.y;
    }
    cx /= static_cast<double>(nu);
    cy /= static_cast<double>(nu);
    prob.coverage.clamp(cx, cy);
    x.uav_pos = {cx, cy, prob.altitude};
    if (fixed_pos) x.uav_pos = *fixed_pos;

    auto normalized_slacks = [&](const allocation& a) {
        const Eigen::MatrixXd gains = expected_gains(prob, a.uav_pos);
        const Eigen::VectorXd s = detail::slacks(m, a.assign, a.power, gains, req);
        return Eigen::VectorXd((s.array() / scales.array()).matrix());
    };
    auto softmin = [&](const Eigen::VectorXd& s) {
        const Eigen::ArrayXd z = -s.array() / tau;
        const double zmax = z.maxCoeff();
        return -tau * (zmax + std::log((z - zmax).exp().sum()));
    };
    auto softmax_weights = [&](const Eigen::VectorXd& s) {
        Eigen::ArrayXd z = -s.array() / tau;
        const double zmax = z.maxCoeff();
        Eigen::ArrayXd w = (z - zmax).exp();
        return Eigen::VectorXd(w / w.sum());
    };

    double f = softmin(normalized_slacks(x));
    if (normalized_slacks(x).minCoeff() >= 0.0) {
        rep.min_slack = normalized_slacks(x).minCoeff();
        rep.slacks = normalized_slacks(x).array() * scales.array();
        rep.witness = x;
        return rep;
    }

    for (int cycle = 0; cycle < 30; ++cycle) {
        const double f_before = f;
        const Eigen::MatrixXd gains = expected_gains(prob, x.uav_pos);
        const Eigen::MatrixXd coef = detail::bracket_matrix(m, x.power, gains);

        // assignment block
        {
            Eigen::VectorXd w = softmax_weights(normalized_slacks(x));
            Eigen::MatrixXd grad(nu, nb);
            for (Eigen::Index u = 0; u < nu; ++u)
                grad.row(u) = (w[u] / scales[u]) * coef.row(u);
            double step = 1.0 / std::max(1e-300, grad.cwiseAbs().maxCoeff());
            for (int it = 0; it < 40; ++it) {
                Eigen::MatrixXd cand = x.assign + step * grad;
                for (Eigen::Index b = 0; b < nb; ++b) {
                    Eigen::VectorXd col = cand.col(b);
                    proj::simplex_cap_inplace(col, 1.0);
                    cand.col(b) = col;
                }
                const double used = (cand.array() * x.power.array()).sum();
                if (used > prob.total_power && used > 0.0)
                    cand *= prob.total_power / used;
                allocation trial = x;
                trial.assign = cand;
                const double fc = softmin(normalized_slacks(trial));
                if (fc > f) {
                    x.assign = cand;
                    f = fc;
                    step *= 1.8;
                } else {
                    step *= 0.4;
                    if (step * grad.cwiseAbs().maxCoeff() < 1e-12) break;
                }
                w = softmax_weights(normalized_slacks(x));
                for (Eigen::Index u = 0; u < nu; ++u)
                    grad.row(u) = (w[u] / scales[u]) *
                                  detail::bracket_matrix(m, x.power, gains).row(u);
            }
        }

        // power block at full budget
        {
            double step = 0.0;
            for (int it = 0; it < 60; ++it) {
                const Eigen::VectorXd w = softmax_weights(normalized_slacks(x));
                Eigen::MatrixXd grad(nu, nb);
                for (Eigen::Index u = 0; u < nu; ++u)
                    for (Eigen::Index b = 0; b < nb; ++b) {
                        const double a = x.assign(u, b);
                        grad(u, b) = (a > 0.0)
                                         ? (w[u] / scales[u]) * a *
                                               m.bracket_dp(x.power(u, b), gains(u, b))
                                         : 0.0;
                    }
                const double gn = grad.cwiseAbs().maxCoeff();
                if (gn <= 0.0) break;
                if (step <= 0.0) step = (prob.total_power / static_cast<double>(nb)) / gn;
                Eigen::MatrixXd cand = x.power + step * grad;
                proj::weighted_budget_box_inplace(cand, x.assign, prob.total_power,
                                                  prob.total_power);
                allocation trial = x;
                trial.power = cand;
                const double fc = softmin(normalized_slacks(trial));
                if (fc > f) {
                    x.power = cand;
                    f = fc;
                    step *= 1.8;
                } else {
                    step *= 0.4;
                    if (step * gn < 1e-14) break;
                }
            }
        }

        // position block
        if (!fixed_pos) {
            double step = 0.0;
            for (int it = 0; it < 40; ++it) {
                const Eigen::VectorXd w = softmax_weights(normalized_slacks(x));
                Eigen::MatrixXd weighted_assign = x.assign;
                for (Eigen::Index u = 0; u < nu; ++u)
                    weighted_assign.row(u) *= w[u] / scales[u];
                const Eigen::Vector2d g = detail::position_gradient_impl(
                    prob, weighted_assign, x.power, x.uav_pos);
                const double gn = g.norm();
                if (gn < 1e-16) break;
                if (step <= 0.0) step = 4.0 / gn;
                double nx = x.uav_pos.x + step * g[0], ny = x.uav_pos.y + step * g[1];
                prob.coverage.clamp(nx, ny);
                allocation trial = x;
                trial.uav_pos = {nx, ny, x.uav_pos.h};
                const double fc = softmin(normalized_slacks(trial));
                if (fc > f) {
                    x.uav_pos = trial.uav_pos;
                    f = fc;
                    step *= 1.8;
                } else {
                    step *= 0.4;
                    if (step * gn < 1e-10) break;
                }
            }
        }

        if (normalized_slacks(x).minCoeff() >= 0.0) break;
        if (f - f_before <= 1e-9 * (1.0 + std::abs(f))) break;
    }

    const Eigen::VectorXd rel = normalized_slacks(x);
    rep.min_slack = rel.minCoeff();
    rep.slacks = rel.array() * scales.array();
    rep.witness = x;
    return rep;
}

// Algorithm: initialize, (optionally) restore feasibility, iterate
// P1 -> P2 -> P3 with accept-if-improved guards until the objective
// stalls, then round and re-solve the power at the binary assignment.
inline outcome successive_maximization(const problem& prob, const solver_config& cfg = {},
                                        const channel::pos3* fixed_pos = nullptr) {
    prob.validate();
    cfg.validate();
    const auto m = detail::rate_model::from(prob.chan);
    const Eigen::Index nu = static_cast<Eigen::Index>(prob.num_users());
    const Eigen::Index nb = prob.num_rbs;

    outcome out;
    if (nu == 0) {
        out.alloc.assign = Eigen::MatrixXd::Zero(0, nb);
        out.alloc.power = Eigen::MatrixXd::Zero(0, nb);
        out.alloc.uav_pos = {0.5 * (prob.coverage.x0 + prob.coverage.x1),
                             0.5 * (prob.coverage.y0 + prob.coverage.y1), prob.altitude};
        out.objective = 0.0;
        out.iterations = 1;
        out.objective_trace = {0.0};
        out.per_user_rate = Eigen::VectorXd(0);
        out.reliability_slack = Eigen::VectorXd(0);
        out.status = solve_status::converged;
        return out;
    }

    const Eigen::VectorXd req = required_rates(prob);
    const Eigen::VectorXd scales = detail::slack_scales(prob, req);

    // round-robin RBs, uniform power, clamped centroid
    allocation x;
    x.assign = Eigen::MatrixXd::Zero(nu, nb);
    x.power = Eigen::MatrixXd::Zero(nu, nb);
    const double per_rb = prob.total_power / static_cast<double>(nb);
    for (Eigen::Index b = 0; b < nb; ++b) {
        x.assign(b % nu, b) = 1.0;
        x.power(b % nu, b) = per_rb;
    }
    double cx = 0, cy = 0;
    for (const auto& u : prob.users) {
        cx += u.x;
        cy += u.y;
    }
    cx /= static_cast<double>(nu);
    cy /= static_cast<double>(nu);
    prob.coverage.clamp(cx, cy);
    x.uav_pos = {cx, cy, prob.altitude};
    if (fixed_pos) x.uav_pos = *fixed_pos;

    auto slack_of = [&](const allocation& a) {
        const Eigen::MatrixXd gains = expected_gains(prob, a.uav_pos);
        return detail::slacks(m, a.assign, a.power, gains, req);
    };
    auto feasible = [&](const allocation& a) {
        return detail::feasible_slacks(slack_of(a), scales);
    };

    if (!feasible(x)) {
        const auto rep = feasibility_phase(prob, cfg, fixed_pos);
        if (rep.min_slack < -detail::kFeasRelTol) {
            out.alloc = rep.witness;
            out.status = solve_status::infeasible;
            out.objective = objective(prob, rep.witness);
            out.objective_trace = {out.objective};
            const Eigen::MatrixXd g = expected_gains(prob, rep.witness.uav_pos);
            out.per_user_rate = per_user_rates(prob, rep.witness, g);
            out.reliability_slack = out.per_user_rate - req;
            out.iterations = 0;
            out.trace.push_back({0, out.objective,
                                 (out.reliability_slack.array() / scales.array()).minCoeff(),
                                 rep.witness.uav_pos.x, rep.witness.uav_pos.y});
            return out;
        }
        x = rep.witness;
    }

    double f = objective(prob, x);
    out.objective_trace.push_back(f);
    {
        const Eigen::VectorXd s0 = slack_of(x);
        out.trace.push_back({0, f, (s0.array() / scales.array()).minCoeff(), x.uav_pos.x,
                             x.uav_pos.y});
    }

    Eigen::VectorXd warm_lambda = Eigen::VectorXd::Zero(nu);
    bool converged = false;
    int k = 0;
    while (k < cfg.max_bcd_iters && !converged) {
        ++k;

        // P1: assignment
        {
            const auto r = detail::solve_rb_allocation_impl(prob, x.power, x.uav_pos, cfg,
                                                            &x.assign);
            allocation cand = x;
            cand.assign = r.assign;
            if (r.feasible && feasible(cand)) {
                const double fc = objective(prob, cand);
                if (fc >= f) {
                    x = cand;
                    f = fc;
                }
            }
        }

        // P2: power
        {
            Eigen::VectorXd lam = warm_lambda;
            const auto r = detail::solve_power_impl(prob, x.assign, x.uav_pos, cfg, &lam);
            allocation cand = x;
            cand.power = r.power;
            if (r.feasible && feasible(cand)) {
                const double fc = objective(prob, cand);
                if (fc >= f) {
                    x = cand;
                    f = fc;
                    warm_lambda = lam;
                }
            }
        }

        // P3: position (with a nested power re-solve when the raw move
        // would dip a pinned user below its requirement)
        if (!fixed_pos) {
            const channel::pos3 c =
                detail::solve_position_impl(prob, x.assign, x.power, x.uav_pos, cfg);
            allocation cand = x;
            cand.uav_pos = c;
            bool accepted = false;
            if (feasible(cand)) {
                const double fc = objective(prob, cand);
                if (fc >= f) {
                    x = cand;
                    f = fc;
                    accepted = true;
                }
            }
            if (!accepted &&
                (std::abs(c.x - x.uav_pos.x) > 1e-9 || std::abs(c.y - x.uav_pos.y) > 1e-9)) {
                Eigen::VectorXd lam = warm_lambda;
                const auto r = detail::solve_power_impl(prob, x.assign, c, cfg, &lam);
                allocation cand2 = x;
                cand2.uav_pos = c;
                cand2.power = r.power;
                if (r.feasible && feasible(cand2)) {
                    const double fc = objective(prob, cand2);
                    if (fc >= f) {
                        x = cand2;
                        f = fc;
                        warm_lambda = lam;
                    }
                }
            }
        }

        out.objective_trace.push_back(f);
        const Eigen::VectorXd sk = slack_of(x);
        out.trace.push_back({k, f, (sk.array() / scales.array()).minCoeff(), x.uav_pos.x,
                             x.uav_pos.y});
        const double prev = out.objective_trace[static_cast<std::size_t>(k - 1)];
        if (std::abs(f - prev) <= cfg.bcd_tol * std::max(1.0, std::abs(f))) converged = true;
    }

    // threshold rounding, then one power re-solve at the binary assignment
    allocation final = x;
    final.assign = round_allocation(x.assign, cfg.rounding_threshold);
    {
        Eigen::VectorXd lam = warm_lambda;
        const auto r = detail::solve_power_impl(prob, final.assign, final.uav_pos, cfg, &lam);
        final.power = r.power;
    }
    final.power = final.power.array() * (final.assign.array() > 0.0).cast<double>();

    out.alloc = final;
    out.iterations = k;
    const Eigen::MatrixXd gains = expected_gains(prob, final.uav_pos);
    out.per_user_rate = per_user_rates(prob, final, gains);
    out.reliability_slack = out.per_user_rate - req;
    out.objective = objective_with_gains(prob, final, gains);
    if (!detail::feasible_slacks(out.reliability_slack, scales))
        out.status = solve_status::infeasible;
    else if (converged)
        out.status = solve_status::converged;
    else
        out.status = solve_status::max_iters;
    return out;
}

// Allocation invariants: per-RB exclusivity, box and budget limits,
// position inside coverage.
inline bool check_allocation(const problem& prob, const allocation& a, double tol = 1e-8) {
    if (a.assign.rows() != static_cast<Eigen::Index>(prob.num_users()) ||
        a.assign.cols() != prob.num_rbs)
        return false;
    if (a.power.rows() != a.assign.rows() || a.power.cols() != a.assign.cols()) return false;
    for (Eigen::Index b = 0; b < a.assign.cols(); ++b)
        if (a.assign.col(b).sum() > 1.0 + tol) return false;
    if (a.assign.minCoeff() < -tol) return false;
    if (a.power.minCoeff() < -tol) return false;
    if (a.power.maxCoeff() > prob.total_power * (1.0 + tol)) return false;
    if ((a.assign.array() * a.power.array()).sum() > prob.total_power * (1.0 + tol))
        return false;
    if (!prob.coverage.contains(a.uav_pos.x, a.uav_pos.y, 1e-6)) return false;
    return a.uav_pos.h > 0;
}

}  // namespace uavsched::opt
