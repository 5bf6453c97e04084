// Acceptance suite: one line per criterion, nonzero exit if any fails.
//
//   1 predictor quality and runtime on the bundled series (N = 600)
//   2 transmission-energy gain vs the max-power baseline
//   3 trend reproduction (energy/bandwidth, energy/users, rate/users,
//     rate/bandwidth with sub-linear growth)
//   4 BCD monotonicity and convergence on 100 random instances
//   5 micro-instance optimality vs exhaustive search
//   6 numerical kernels vs independent oracles
//   7 realized reliability under the chance constraint
//   8 byte-identical reports for identical config + seed

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "uavsched/channel.hpp"
#include "uavsched/optimizer.hpp"
#include "uavsched/random.hpp"
#include "uavsched/sim.hpp"
#include "uavsched/traffic.hpp"

using namespace uavsched;
using clk = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

double seconds_since(clk::time_point t0) {
    return std::chrono::duration<double>(clk::now() - t0).count();
}

std::shared_ptr<const traffic::series> dataset() {
    static auto s = std::make_shared<const traffic::series>(
        traffic::ingest_file(std::string(UAVSCHED_DATA_DIR) + "/sample_traffic.csv"));
    return s;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto rank = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double lt = 0, eq = 0;
            for (std::size_t j = 0; j < v.size(); ++j) {
                if (v[j] < v[i]) ++lt;
                if (v[j] == v[i]) ++eq;
            }
            r[i] = lt + (eq + 1.0) / 2.0;
        }
        return r;
    };
    const auto rx = rank(x), ry = rank(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(rx.size());
    my /= static_cast<double>(ry.size());
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    return num / std::sqrt(dx * dy);
}

// shared sweep machinery -------------------------------------------------

struct sweep_point {
    double value = 0;
    double energy_proposed = 0;
    double energy_baseline = 0;
    double per_user_rate = 0;
    int dominated = 0;  // trials where proposed <= baseline energy
    int feasible_trials = 0;
    int violations = 0;
    int user_slots = 0;
};

sweep_point run_point(const sim::scenario_config& cfg, const sim::traffic_config& tcfg,
                      const traffic::kernel_params& shared, int trials, bool with_baseline,
                      double value) {
    const std::vector<sim::strategy> sts =
        with_baseline
            ? std::vector<sim::strategy>{sim::strategy::proposed, sim::strategy::max_power}
            : std::vector<sim::strategy>{sim::strategy::proposed};
    const auto rs = sim::run_trials(cfg, tcfg, {}, dataset(), sts, trials, 20250810, 0,
                                    &shared);
    sweep_point pt;
    pt.value = value;
    int rate_samples = 0;
    for (const auto& t : rs) {
        double ep = 0, eb = 0, rate = 0;
        int n = 0;
        bool infeasible = false;
        for (const auto& rec : t.records) {
            if (rec.infeasible) infeasible = true;
            if (rec.strat == sim::strategy::proposed) {
                ep += rec.energy_j;
                rate += rec.per_user_rate_bps;
                ++n;
                pt.violations += rec.violations;
                pt.user_slots += t.num_users;
            } else {
                eb += rec.energy_j;
            }
        }
        pt.per_user_rate += rate / std::max(1, n);
        ++rate_samples;
        if (infeasible) continue;
        ++pt.feasible_trials;
        pt.energy_proposed += ep;
        pt.energy_baseline += eb;
        if (!with_baseline || ep <= eb * (1.0 + 1e-12)) ++pt.dominated;
    }
    pt.per_user_rate /= std::max(1, rate_samples);
    return pt;
}

// criterion 1 ---------------------------------------------------------------

void criterion_1() {
    const auto t0 = clk::now();
    const auto& data = *dataset();
    const std::size_t n = 600;
    traffic::predictor pred(n);
    for (std::size_t t = 0; t < n; ++t)
        pred.observe(data.values[t], static_cast<std::int64_t>(t));
    pred.refit();
    double acc = 0;
    int count = 0, since_fit = 0;
    for (std::size_t t = n; t < data.values.size(); ++t) {
        if (since_fit >= 50) {
            pred.refit();
            since_fit = 0;
        }
        ++since_fit;
        const double m = pred.predict().mean;
        const double err = m - data.values[t];
        acc += err * err;
        ++count;
        pred.observe(data.values[t], static_cast<std::int64_t>(t));
    }
    const double mse = acc / count;
    const double secs = seconds_since(t0);
    report(1, mse <= 0.01 && secs <= 300.0 && count >= 600,
           fmt("rolling one-step MSE %.3g <= 0.01 over %d slots, N = 600, %.1f s <= 300 s",
               mse, count, secs));
}

// criterion 2 ---------------------------------------------------------------

void criterion_2() {
    const auto t0 = clk::now();
    sim::traffic_config tcfg;
    tcfg.dataset = std::string(UAVSCHED_DATA_DIR) + "/sample_traffic.csv";
    const auto shared = sim::fit_shared_params(tcfg, *dataset());
    sim::scenario_config base;  // U = 20, defaults
    const std::vector<double> grid{7.2e6, 8.1e6, 9.0e6, 9.9e6, 10.8e6};
    const int trials = 20;

    double gain_smallest = 0;
    int dominated = 0, feasible = 0;
    for (double eps : {0.01, 0.05}) {
        double ep = 0, eb = 0;
        for (double bw : grid) {
            auto cfg = sim::apply_axis(base, sim::sweep_axis::total_bandwidth, bw);
            cfg.outage_eps = eps;
            const auto pt = run_point(cfg, tcfg, shared, trials, true, bw);
            ep += pt.energy_proposed;
            eb += pt.energy_baseline;
            dominated += pt.dominated;
            feasible += pt.feasible_trials;
        }
        if (eps == 0.01) gain_smallest = (eb - ep) / eb;
    }
    const double dom_frac = feasible > 0 ? static_cast<double>(dominated) / feasible : 0.0;
    const double secs = seconds_since(t0);
    report(2,
           gain_smallest >= 0.10 && dom_frac >= 0.95 && feasible > 0 && secs <= 600.0,
           fmt("energy gain %.1f%% >= 10%% at eps = 0.01, dominance %.1f%% >= 95%% "
               "(%d feasible trials), %.0f s <= 600 s",
               100 * gain_smallest, 100 * dom_frac, feasible, secs));
}

// criterion 3 ---------------------------------------------------------------

void criterion_3() {
    sim::traffic_config tcfg;
    tcfg.dataset = std::string(UAVSCHED_DATA_DIR) + "/sample_traffic.csv";
    const auto shared = sim::fit_shared_params(tcfg, *dataset());
    const int trials = 20;

    auto series_of = [&](sim::sweep_axis axis, const std::vector<double>& values,
                         const sim::scenario_config& base, bool want_rate) {
        std::vector<double> xs, ys;
        for (double v : values) {
            const auto cfg = sim::apply_axis(base, axis, v);
            const auto pt = run_point(cfg, tcfg, shared, trials, false, v);
            xs.push_back(v);
            ys.push_back(want_rate ? pt.per_user_rate
                                   : pt.energy_proposed / std::max(1, pt.feasible_trials));
        }
        return std::make_pair(xs, ys);
    };

    sim::scenario_config energy_base;  // requirement-driven default zeta
    const auto [bx, by] = series_of(sim::sweep_axis::total_bandwidth,
                                    {7.2e6, 8.1e6, 9.0e6, 9.9e6, 10.8e6}, energy_base, false);
    const double rho_eb = spearman(bx, by);

    const auto [ux, uy] = series_of(sim::sweep_axis::num_users, {5, 8, 11, 14, 17, 20},
                                    energy_base, false);
    const double rho_eu = spearman(ux, uy);

    // per-user-rate figures: sum-rate-oriented operating point (budget-driven)
    sim::scenario_config rate_base;
    rate_base.zeta = 1e4;
    const auto [rux, ruy] = series_of(sim::sweep_axis::num_users, {5, 8, 11, 14, 17, 20},
                                      rate_base, true);
    const double rho_ru = spearman(rux, ruy);

    const auto [rbx, rby] = series_of(sim::sweep_axis::total_bandwidth,
                                      {1.8e6, 3.6e6, 5.4e6, 7.2e6, 9.0e6}, rate_base, true);
    const double rho_rb = spearman(rbx, rby);
    double max_second_diff = -1e300;
    for (std::size_t i = 2; i < rby.size(); ++i)
        max_second_diff = std::max(max_second_diff, rby[i] - 2 * rby[i - 1] + rby[i - 2]);

    report(3,
           rho_eb <= -0.9 && rho_eu >= 0.9 && rho_ru <= -0.9 && rho_rb >= 0.9 &&
               max_second_diff <= 0.0,
           fmt("spearman: energy/bandwidth %+.3f <= -0.9, energy/users %+.3f >= +0.9, "
               "rate/users %+.3f <= -0.9, rate/bandwidth %+.3f >= +0.9, "
               "max second difference %.3g <= 0",
               rho_eb, rho_eu, rho_ru, rho_rb, max_second_diff));
}

// criterion 4 ---------------------------------------------------------------

void criterion_4() {
    int converged = 0, monotone_bad = 0, infeasible = 0;
    for (int k = 0; k < 100; ++k) {
        auto rng = rnd::engine(31337, {static_cast<std::uint64_t>(k)});
        std::uniform_real_distribution<double> u(0.0, 1.0);
        opt::problem p;
        p.num_rbs = 5 + static_cast<int>(u(rng) * 21);
        const int nu = 5 + static_cast<int>(u(rng) * 16);
        p.outage_eps = 0.1;
        p.tradeoff_zeta = 5e13;
        p.altitude = 100.0 + 50.0 * u(rng);
        for (int i = 0; i < nu; ++i) p.users.push_back({250.0 * u(rng), 250.0 * u(rng)});
        // sporadic demand: at most B users active in a slot, so RB
        // exclusivity alone cannot make the instance infeasible
        p.predicted_loads.assign(static_cast<std::size_t>(nu), 0.0);
        const int active = std::min(nu, p.num_rbs);
        const double cap = std::min(500.0, 300.0 * p.num_rbs / active);
        for (int i = 0; i < active; ++i)
            p.predicted_loads[static_cast<std::size_t>(i)] = cap * u(rng);

        const auto out = opt::successive_maximization(p, {});
        for (std::size_t i = 1; i < out.objective_trace.size(); ++i)
            if (out.objective_trace[i] < out.objective_trace[i - 1] - 1e-6) ++monotone_bad;
        if (out.status == opt::solve_status::converged) ++converged;
        if (out.status == opt::solve_status::infeasible) ++infeasible;
    }
    report(4, monotone_bad == 0 && converged >= 95,
           fmt("objective traces monotone (0 violations at 1e-6), %d/100 converged "
               "within 100 iterations (>= 95), %d infeasible",
               converged, infeasible));
}

// criterion 5 ---------------------------------------------------------------

void criterion_5() {
    const auto t0 = clk::now();
    int ok = 0, total = 0;
    double worst = 1e300;
    std::uint64_t seed = 0;
    while (total < 50 && seed < 500) {
        auto rng = rnd::engine(4242, {seed++});
        std::uniform_real_distribution<double> u(0.0, 1.0);
        opt::problem p;
        const int nu = 1 + static_cast<int>(u(rng) * 2);
        p.num_rbs = 1 + static_cast<int>(u(rng) * 2);
        p.outage_eps = 0.1;
        p.altitude = 100.0 + 50.0 * u(rng);
        for (int i = 0; i < nu; ++i) p.users.push_back({250.0 * u(rng), 250.0 * u(rng)});
        p.predicted_loads.assign(static_cast<std::size_t>(nu), 0.0);
        if (seed % 3 == 0)
            for (int i = 0; i < nu; ++i)
                p.predicted_loads[static_cast<std::size_t>(i)] = 20.0 * u(rng);
        double cx = 0, cy = 0;
        for (const auto& us : p.users) {
            cx += us.x;
            cy += us.y;
        }
        cx /= nu;
        cy /= nu;
        const double g = opt::expected_gains(p, {cx, cy, p.altitude}).col(0).mean();
        const double c = g / (p.chan.noise_density * p.chan.rb_bandwidth);
        const double s_mid = c * p.total_power / (2.0 * p.num_rbs);
        p.tradeoff_zeta = (0.3 + 0.7 * u(rng)) * p.chan.rb_bandwidth * c /
                          ((1.0 + s_mid) * std::numbers::ln2_v<double>);

        // exhaustive search: (U+1)^B owners x 3^B power levels x 3x3 grid
        const std::vector<double> levels{0.0, 0.5 * p.total_power, p.total_power};
        double best = -1e300;
        const int oc_max = static_cast<int>(std::pow(nu + 1, p.num_rbs));
        const int lc_max = static_cast<int>(std::pow(3, p.num_rbs));
        for (int oc = 0; oc < oc_max; ++oc)
            for (int lc = 0; lc < lc_max; ++lc)
                for (int gx = 0; gx < 3; ++gx)
                    for (int gy = 0; gy < 3; ++gy) {
                        opt::allocation a;
                        a.assign = Eigen::MatrixXd::Zero(nu, p.num_rbs);
                        a.power = Eigen::MatrixXd::Zero(nu, p.num_rbs);
                        int o = oc, l = lc;
                        double tot = 0;
                        for (int b = 0; b < p.num_rbs; ++b) {
                            const int ow = o % (nu + 1) - 1;
                            o /= (nu + 1);
                            const int lv = l % 3;
                            l /= 3;
                            if (ow >= 0) {
                                a.assign(ow, b) = 1.0;
                                a.power(ow, b) = levels[static_cast<std::size_t>(lv)];
                                tot += levels[static_cast<std::size_t>(lv)];
                            }
                        }
                        if (tot > p.total_power * (1 + 1e-12)) continue;
                        a.uav_pos = {125.0 * gx, 125.0 * gy, p.altitude};
                        best = std::max(best, opt::objective(p, a));
                    }

        const auto out = opt::successive_maximization(p, {});
        if (out.status == opt::solve_status::infeasible || best <= 0) continue;
        ++total;
        const double ratio = out.objective / best;
        worst = std::min(worst, ratio);
        if (ratio >= 0.95) ++ok;
    }
    const double secs = seconds_since(t0);
    report(5, ok == total && total == 50 && secs <= 60.0,
           fmt("%d/%d micro-instances >= 95%% of exhaustive optimum (worst %.3f), "
               "%.1f s <= 60 s",
               ok, total, worst, secs));
}

// criterion 6 ---------------------------------------------------------------

// Tail integral with the Gaussian factored out, so the quadrature sums
// only positive terms: Q(x) = phi(x) * integral_0^inf exp(-x s - s^2/2) ds.
double tail_simpson(double x, double a, double b, int depth, double fa, double fm, double fb,
                    double tol) {
    const double m = 0.5 * (a + b);
    auto g = [x](double s) { return std::exp(-x * s - 0.5 * s * s); };
    const double flm = g(0.5 * (a + m)), frm = g(0.5 * (m + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= tol)
        return left + right;
    return tail_simpson(x, a, m, depth - 1, fa, flm, fm, 0.5 * tol) +
           tail_simpson(x, m, b, depth - 1, fm, frm, fb, 0.5 * tol);
}

double q_oracle(double x) {
    auto g = [x](double s) { return std::exp(-x * s - 0.5 * s * s); };
    const double span = -x + std::sqrt(x * x + 90.0);  // x*span + span^2/2 = 45
    const double rough = span / 6.0 * (g(0.0) + 4.0 * g(0.5 * span) + g(span));
    const double integral = tail_simpson(x, 0.0, span, 40, g(0.0), g(0.5 * span), g(span),
                                         1e-15 * std::max(rough, 1e-12));
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi) * integral;
}

double q_inv_oracle(double theta) {
    double lo = 0.0, hi = 9.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (q_oracle(mid) > theta)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

void criterion_6() {
    // q_inv vs quadrature + bisection
    double worst_q = 0;
    for (int i = 0; i <= 24; ++i) {
        const double theta = std::pow(10.0, -8.0 + (8.0 - 0.30103) * i / 24.0);
        worst_q = std::max(worst_q, std::abs(channel::q_inv(theta) - q_inv_oracle(theta)));
    }

    // position gradient vs central differences at 50 random states
    double worst_g = 0;
    {
        auto rng = rnd::engine(101);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 50; ++trial) {
            const int nu = 1 + static_cast<int>(u(rng) * 4);
            const int nb = 1 + static_cast<int>(u(rng) * 5);
            opt::problem p;
            p.num_rbs = nb;
            for (int i = 0; i < nu; ++i) p.users.push_back({250.0 * u(rng), 250.0 * u(rng)});
            p.predicted_loads.assign(static_cast<std::size_t>(nu), 0.0);
            Eigen::MatrixXd assign = Eigen::MatrixXd::Zero(nu, nb);
            Eigen::MatrixXd power = Eigen::MatrixXd::Zero(nu, nb);
            for (int b = 0; b < nb; ++b) {
                const int owner = static_cast<int>(u(rng) * nu);
                assign(owner, b) = 1.0;
                power(owner, b) = 0.05 + u(rng) * p.total_power / nb;
            }
            const channel::pos3 pos{20.0 + 210.0 * u(rng), 20.0 + 210.0 * u(rng), 120.0};
            const Eigen::Vector2d g = opt::position_gradient(p, assign, power, pos);
            auto value = [&](double x, double y) {
                opt::allocation a{assign, power, {x, y, 120.0}};
                return opt::per_user_rates(p, a, opt::expected_gains(p, a.uav_pos)).sum();
            };
            const double h = 1e-3;
            const Eigen::Vector2d fd(
                (value(pos.x + h, pos.y) - value(pos.x - h, pos.y)) / (2 * h),
                (value(pos.x, pos.y + h) - value(pos.x, pos.y - h)) / (2 * h));
            worst_g = std::max(worst_g, (g - fd).norm() / std::max(fd.norm(), 1e-12));
        }
    }

    // GP posterior vs a direct LU solve on 5-point windows
    double worst_gp = 0;
    {
        auto rng = rnd::engine(31);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            traffic::kernel_params kp{0.2 + 2.0 * u(rng), 3.0 + 20.0 * u(rng),
                                      1e-5 + 1e-3 * u(rng)};
            std::vector<double> t(5), y(5);
            for (int i = 0; i < 5; ++i) {
                t[i] = i + 0.3 * u(rng);
                y[i] = u(rng);
            }
            const double q = 5.0 + u(rng);
            const auto pred = traffic::gp_posterior(t, y, kp, q);
            Eigen::MatrixXd g(5, 5);
            Eigen::VectorXd k(5), yv(5);
            for (int i = 0; i < 5; ++i) {
                yv[i] = y[static_cast<std::size_t>(i)];
                const double sq =
                    std::sin(std::numbers::pi * (q - t[static_cast<std::size_t>(i)]) / kp.theta2);
                k[i] = std::exp(-sq * sq / kp.theta1);
                for (int j = 0; j < 5; ++j) {
                    const double s = std::sin(std::numbers::pi *
                                              (t[static_cast<std::size_t>(i)] -
                                               t[static_cast<std::size_t>(j)]) /
                                              kp.theta2);
                    g(i, j) = std::exp(-s * s / kp.theta1) + (i == j ? kp.noise_var : 0.0);
                }
            }
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(g);
            const double mean_ref = k.dot(lu.solve(yv));
            const double var_ref = std::max(0.0, 1.0 - k.dot(lu.solve(k)));
            worst_gp = std::max(worst_gp, std::abs(pred.mean - mean_ref));
            worst_gp = std::max(worst_gp, std::abs(pred.variance - var_ref));
        }
    }

    report(6, worst_q <= 1e-9 && worst_g <= 1e-4 && worst_gp <= 1e-8,
           fmt("q_inv vs bisection %.2g <= 1e-9; position gradient vs central "
               "differences %.2g <= 1e-4; GP posterior vs direct solve %.2g <= 1e-8",
               worst_q, worst_g, worst_gp));
}

// criterion 7 ---------------------------------------------------------------

void criterion_7() {
    sim::traffic_config tcfg;
    tcfg.dataset = std::string(UAVSCHED_DATA_DIR) + "/sample_traffic.csv";
    tcfg.kappa = 1.0;
    const auto shared = sim::fit_shared_params(tcfg, *dataset());
    sim::scenario_config base;  // eps = 0.1, kappa = 1, U = 20, horizon = 5
    const auto rs = sim::run_trials(base, tcfg, {}, dataset(), {sim::strategy::proposed}, 6,
                                    20250810, 0, &shared);
    int violations = 0, user_slots = 0;
    for (const auto& t : rs)
        for (const auto& rec : t.records) {
            violations += rec.violations;
            user_slots += t.num_users;
        }
    const double freq = static_cast<double>(violations) / user_slots;
    report(7, user_slots >= 500 && freq <= 0.15,
           fmt("realized violation frequency %.4f <= 0.15 over %d user-slots (>= 500), "
               "kappa = 1, eps = 0.1",
               freq, user_slots));
}

// criterion 8 ---------------------------------------------------------------

void criterion_8() {
    const fs::path base = fs::temp_directory_path() / "uavsched_accept8";
    fs::remove_all(base);
    fs::create_directories(base);
    const fs::path cfg_path = base / "cfg.json";
    {
        std::ofstream cfg(cfg_path);
        cfg << "{\n"
            << "  \"master_seed\": 97,\n"
            << "  \"scenario\": {\"num_users\": 6, \"num_rbs\": 10, \"horizon_slots\": 2},\n"
            << "  \"traffic\": {\"dataset\": \"" << UAVSCHED_DATA_DIR
            << "/sample_traffic.csv\", \"window_slots\": 64, \"fit_mode\": \"per_trial\"},\n"
            << "  \"sweep\": {\"trials\": 3},\n"
            << "  \"output\": {\"directory\": \"" << (base / "out").string() << "\"}\n"
            << "}\n";
    }
    auto run_once = [&](const fs::path& keep) {
        std::ostringstream cmd;
        cmd << UAVSCHED_CLI_PATH << " sweep --axis eps --values 0.05,0.1 --config "
            << cfg_path << " >/dev/null 2>&1";
        const int rc = std::system(cmd.str().c_str());
        if (rc != 0) return false;
        fs::rename(base / "out", keep);
        return true;
    };
    const bool ok1 = run_once(base / "run1");
    const bool ok2 = run_once(base / "run2");
    if (!ok1 || !ok2) {
        report(8, false, "CLI sweep invocation failed");
        return;
    }
    int files = 0;
    bool identical = true;
    std::string first_diff;
    for (const auto& entry : fs::directory_iterator(base / "run1")) {
        const fs::path other = base / "run2" / entry.path().filename();
        ++files;
        if (!fs::exists(other)) {
            identical = false;
            first_diff = entry.path().filename().string() + " missing";
            break;
        }
        std::ifstream a(entry.path(), std::ios::binary), b(other, std::ios::binary);
        std::ostringstream sa, sb;
        sa << a.rdbuf();
        sb << b.rdbuf();
        if (sa.str() != sb.str()) {
            identical = false;
            first_diff = entry.path().filename().string();
            break;
        }
    }
    report(8, identical && files > 5,
           identical ? fmt("two runs produced byte-identical reports (%d files)", files)
                     : fmt("mismatch in %s", first_diff.c_str()));
    fs::remove_all(base);
}

}  // namespace

int main() {
    const auto t0 = clk::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    std::printf("%d/8 criteria passed in %.0f s\n", 8 - g_failures, seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
