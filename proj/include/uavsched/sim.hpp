#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "uavsched/channel.hpp"
#include "uavsched/optimizer.hpp"
#include "uavsched/random.hpp"
#include "uavsched/traffic.hpp"

// Monte Carlo harness: scenario generation, per-slot orchestration
// (predict -> plan -> evaluate under sampled fading -> slide windows),
// baseline strategies, and parameter sweeps. Planning uses expected
// channel gains (E|rho|^2 = 1); realized rates redraw the Rician fading
// per (trial, slot, user, RB), keyed so that draws are shared across
// strategies and sweep axis values (common random numbers).

namespace uavsched::sim {

namespace tag {
constexpr std::uint64_t scenario = 1;
constexpr std::uint64_t fading = 2;
constexpr std::uint64_t random_pos = 3;
constexpr std::uint64_t trial = 4;
}  // namespace tag

struct scenario_config {
    int num_users = 20;
    opt::rect coverage{0, 0, 250, 250};
    double altitude_min = 100.0;
    double altitude_max = 150.0;
    channel::params chan;
    int num_rbs = 25;
    double total_power = 10.0;  // W
    double packet_bytes = 32.0;
    double outage_eps = 0.1;
    double zeta = 5e13;       // (bit/s)/W
    int horizon = 5;          // evaluated slots per trial
    double slot_duration = 1e-3;

    void validate() const {
        chan.validate();
        if (num_users < 0) throw std::invalid_argument("scenario: num_users must be >= 0");
        if (num_rbs < 1) throw std::invalid_argument("scenario: num_rbs must be >= 1");
        if (!(total_power > 0)) throw std::invalid_argument("scenario: total_power must be > 0");
        if (!(outage_eps > 0 && outage_eps < 1))
            throw std::invalid_argument("scenario: outage_eps must be in (0,1)");
        if (!(altitude_min > 0) || altitude_max < altitude_min)
            throw std::invalid_argument("scenario: bad altitude range");
        if (horizon < 1) throw std::invalid_argument("scenario: horizon must be >= 1");
        if (!(slot_duration > 0))
            throw std::invalid_argument("scenario: slot_duration must be > 0");
        if (!(packet_bytes > 0)) throw std::invalid_argument("scenario: packet_bytes must be > 0");
        if (!(zeta >= 0)) throw std::invalid_argument("scenario: zeta must be >= 0");
        if (!(coverage.x1 > coverage.x0 && coverage.y1 > coverage.y0))
            throw std::invalid_argument("scenario: empty coverage rectangle");
    }
};

enum class fit_mode { global, per_trial, per_user };

struct traffic_config {
    std::string dataset;
    std::string time_column = "Date";
    std::string value_column = "Close";
    char delimiter = ',';
    double max_packets = 500.0;  // load scale Lambda, packets/slot
    std::size_t window = 600;    // N
    int refit_period = 50;       // R, slots between refits
    double kappa = 1.0;          // uncertainty inflation
    int offset_stride = 17;      // per-user stagger into the dataset
    fit_mode fit = fit_mode::global;

    void validate() const {
        if (!(max_packets >= 0)) throw std::invalid_argument("traffic: max_packets must be >= 0");
        if (window < 10) throw std::invalid_argument("traffic: window must be >= 10");
        if (refit_period < 1) throw std::invalid_argument("traffic: refit_period must be >= 1");
        if (!(kappa >= 0)) throw std::invalid_argument("traffic: kappa must be >= 0");
        if (offset_stride < 0) throw std::invalid_argument("traffic: offset_stride must be >= 0");
    }
};

struct scenario {
    scenario_config cfg;
    std::vector<channel::pos2> users;
    double altitude = 0.0;
    std::uint64_t seed = 0;
};

inline scenario generate_scenario(const scenario_config& cfg, std::uint64_t seed) {
    cfg.validate();
    scenario s;
    s.cfg = cfg;
    s.seed = seed;
    auto rng = rnd::engine(seed, {tag::scenario});
    std::uniform_real_distribution<double> ux(cfg.coverage.x0, cfg.coverage.x1);
    std::uniform_real_distribution<double> uy(cfg.coverage.y0, cfg.coverage.y1);
    std::uniform_real_distribution<double> uh(cfg.altitude_min, cfg.altitude_max);
    s.altitude = uh(rng);
    s.users.reserve(static_cast<std::size_t>(cfg.num_users));
    for (int i = 0; i < cfg.num_users; ++i) s.users.push_back({ux(rng), uy(rng)});
    return s;
}

enum class strategy { proposed, max_power, random_placement };

inline const char* strategy_name(strategy s) {
    switch (s) {
        case strategy::proposed: return "proposed";
        case strategy::max_power: return "max_power";
        case strategy::random_placement: return "random_placement";
    }
    return "?";
}

// Uniform P_max/B on every assigned RB of the proposed solution.
inline opt::allocation baseline_max_power(const opt::problem& prob,
                                          const opt::allocation& proposed) {
    opt::allocation a = proposed;
    const double per_rb = prob.total_power / static_cast<double>(prob.num_rbs);
    a.power = (proposed.assign.array() > 0.0).cast<double>() * per_rb;
    return a;
}

// UAV drawn uniformly over the coverage rectangle; RBs and power then
// optimized at that fixed placement.
template <class Rng>
opt::outcome baseline_random_placement(const opt::problem& prob, Rng& rng,
                                       const opt::solver_config& cfg) {
    std::uniform_real_distribution<double> ux(prob.coverage.x0, prob.coverage.x1);
    std::uniform_real_distribution<double> uy(prob.coverage.y0, prob.coverage.y1);
    const channel::pos3 pos{ux(rng), uy(rng), prob.altitude};
    return opt::successive_maximization(prob, cfg, &pos);
}

struct slot_record {
    int slot = 0;
    strategy strat = strategy::proposed;
    double objective = 0.0;
    double energy_j = 0.0;
    double sum_rate_bps = 0.0;       // realized under sampled fading
    double min_user_rate_bps = 0.0;  // realized
    double per_user_rate_bps = 0.0;  // realized, averaged over users
    int violations = 0;              // users with realized rate < beta_bits * actual load
    bool infeasible = false;
};

struct trial_result {
    std::uint64_t trial_seed = 0;
    int num_users = 0;
    std::vector<slot_record> records;
    double predictor_mse = 0.0;
    int solves = 0;
    int converged = 0;
    double mean_bcd_iterations = 0.0;
};

// Per-trial orchestration. The dataset is shared and each user reads it
// at a staggered offset.
class trial_runner {
  public:
    trial_runner(scenario scen, traffic_config tcfg, opt::solver_config scfg,
                 std::shared_ptr<const traffic::series> data,
                 std::vector<strategy> strategies, std::uint64_t trial_seed,
                 const traffic::kernel_params* shared_params = nullptr)
        : scen_(std::move(scen)),
          tcfg_(std::move(tcfg)),
          scfg_(scfg),
          data_(std::move(data)),
          strategies_(std::move(strategies)),
          seed_(trial_seed) {
        tcfg_.validate();
        scfg_.validate();
        const std::size_t n = data_->values.size();
        const std::size_t need = tcfg_.window + static_cast<std::size_t>(scen_.cfg.horizon);
        if (n < need)
            throw traffic::dataset_error("trial: dataset shorter than window + horizon");
        const std::size_t span = n - need;
        const std::size_t nu = scen_.users.size();
        offsets_.resize(nu);
        for (std::size_t u = 0; u < nu; ++u)
            offsets_[u] = span == 0
                              ? 0
                              : (u * static_cast<std::size_t>(tcfg_.offset_stride)) % (span + 1);
        predictors_.reserve(nu);
        for (std::size_t u = 0; u < nu; ++u)
            predictors_.emplace_back(tcfg_.window, traffic::kernel_params{});
        if (shared_params) {
            shared_params_ = *shared_params;
            has_shared_params_ = true;
        }
        result_.trial_seed = seed_;
        result_.num_users = static_cast<int>(nu);
    }

    double load_at(std::size_t user, int slot) const {
        return data_->values[offsets_[user] + static_cast<std::size_t>(slot)];
    }

    void warm_up() {
        const int n = static_cast<int>(tcfg_.window);
        for (int t = 0; t < n; ++t)
            for (std::size_t u = 0; u < predictors_.size(); ++u)
                predictors_[u].observe(load_at(u, t), t);
        fit_params();
        slots_since_fit_ = 0;
    }

    struct slot_plan {
        opt::problem prob;
        std::vector<double> predicted;  // normalized posterior means
    };

    // Predictions and the optimization instance for a slot (does not
    // advance the windows).
    slot_plan plan(int slot) {
        const std::size_t nu = predictors_.size();
        if (tcfg_.refit_period > 0 && slots_since_fit_ >= tcfg_.refit_period) {
            fit_params();
            slots_since_fit_ = 0;
        }
        (void)slot;
        slot_plan out;
        out.predicted.resize(nu);
        opt::problem& prob = out.prob;
        prob.users = scen_.users;
        prob.chan = scen_.cfg.chan;
        prob.num_rbs = scen_.cfg.num_rbs;
        prob.total_power = scen_.cfg.total_power;
        prob.packet_bytes = scen_.cfg.packet_bytes;
        prob.outage_eps = scen_.cfg.outage_eps;
        prob.coverage = scen_.cfg.coverage;
        prob.altitude = scen_.altitude;
        prob.tradeoff_zeta = scen_.cfg.zeta;
        prob.predicted_loads.resize(nu);
        for (std::size_t u = 0; u < nu; ++u) {
            const auto pr = predictors_[u].predict();
            out.predicted[u] = pr.mean;
            const double inflated =
                std::clamp(pr.mean + tcfg_.kappa * std::sqrt(std::max(0.0, pr.variance)),
                           0.0, 1.0);
            prob.predicted_loads[u] = inflated * tcfg_.max_packets;
        }
        {
            double cx = 0, cy = 0;
            for (const auto& u : prob.users) {
                cx += u.x;
                cy += u.y;
            }
            if (nu > 0) {
                cx /= static_cast<double>(nu);
                cy /= static_cast<double>(nu);
            }
            prob.coverage.clamp(cx, cy);
            prob.gains = opt::expected_gains(prob, {cx, cy, prob.altitude});
        }
        return out;
    }

    // One simulated slot: predict, plan per strategy, evaluate realized
    // rates under fresh fading, then slide windows with the actual loads.
    std::vector<slot_record> run_slot(int slot) {
        const std::size_t nu = predictors_.size();
        slot_plan planned = plan(slot);
        ++slots_since_fit_;
        opt::problem& prob = planned.prob;
        const std::vector<double>& predicted = planned.predicted;

        // realized |h|^2: expected gain times a fresh Rician draw, keyed by
        // (trial, slot, user, rb) so strategies and sweep points share draws
        auto realized_gains = [&](const channel::pos3& pos) {
            Eigen::MatrixXd g = opt::expected_gains(prob, pos);
            for (Eigen::Index u = 0; u < g.rows(); ++u)
                for (Eigen::Index b = 0; b < g.cols(); ++b) {
                    auto rng = rnd::engine(seed_, {tag::fading, static_cast<std::uint64_t>(slot),
                                                   static_cast<std::uint64_t>(u),
                                                   static_cast<std::uint64_t>(b)});
                    g(u, b) *= channel::sample_fading(prob.chan, rng).power();
                }
            return g;
        };

        bool have_proposed = false;
        opt::outcome proposed_out;
        auto get_proposed = [&]() -> const opt::outcome& {
            if (!have_proposed) {
                proposed_out = opt::successive_maximization(prob, scfg_);
                have_proposed = true;
                ++result_.solves;
                if (proposed_out.status == opt::solve_status::converged) ++result_.converged;
                result_.mean_bcd_iterations += proposed_out.iterations;
            }
            return proposed_out;
        };

        std::vector<slot_record> out;
        for (strategy st : strategies_) {
            slot_record rec;
            rec.slot = slot;
            rec.strat = st;
            opt::allocation alloc;
            switch (st) {
                case strategy::proposed: {
                    const auto& o = get_proposed();
                    alloc = o.alloc;
                    rec.objective = o.objective;
                    rec.infeasible = o.status == opt::solve_status::infeasible;
                    break;
                }
                case strategy::max_power: {
                    const auto& o = get_proposed();
                    alloc = baseline_max_power(prob, o.alloc);
                    rec.objective = opt::objective(prob, alloc);
                    rec.infeasible = o.status == opt::solve_status::infeasible;
                    break;
                }
                case strategy::random_placement: {
                    auto rng = rnd::engine(seed_, {tag::random_pos,
                                                   static_cast<std::uint64_t>(slot)});
                    const auto o = baseline_random_placement(prob, rng, scfg_);
                    ++result_.solves;
                    if (o.status == opt::solve_status::converged) ++result_.converged;
                    result_.mean_bcd_iterations += o.iterations;
                    alloc = o.alloc;
                    rec.objective = o.objective;
                    rec.infeasible = o.status == opt::solve_status::infeasible;
                    break;
                }
            }
            rec.energy_j =
                (alloc.assign.array() * alloc.power.array()).sum() * scen_.cfg.slot_duration;
            const Eigen::MatrixXd greal = realized_gains(alloc.uav_pos);
            const Eigen::VectorXd rates = opt::per_user_rates(prob, alloc, greal);
            rec.sum_rate_bps = rates.sum();
            rec.min_user_rate_bps = nu > 0 ? rates.minCoeff() : 0.0;
            rec.per_user_rate_bps = nu > 0 ? rates.mean() : 0.0;
            for (std::size_t u = 0; u < nu; ++u) {
                const double demand_bits =
                    8.0 * prob.packet_bytes * load_at(u, slot) * tcfg_.max_packets;
                if (rates[static_cast<Eigen::Index>(u)] < demand_bits) ++rec.violations;
            }
            out.push_back(rec);
        }

        // observe actuals: prediction error, then slide the windows
        for (std::size_t u = 0; u < nu; ++u) {
            const double actual = load_at(u, slot);
            const double err = predicted[u] - actual;
            mse_acc_ += err * err;
            ++mse_count_;
            predictors_[u].observe(actual, slot);
        }
        result_.records.insert(result_.records.end(), out.begin(), out.end());
        return out;
    }

    trial_result finish() {
        trial_result r = result_;
        r.predictor_mse = mse_count_ > 0 ? mse_acc_ / static_cast<double>(mse_count_) : 0.0;
        if (r.solves > 0) r.mean_bcd_iterations /= static_cast<double>(r.solves);
        return r;
    }

    const scenario& scen() const { return scen_; }

  private:
    void fit_params() {
        if (predictors_.empty()) return;
        switch (tcfg_.fit) {
            case fit_mode::global:
                if (has_shared_params_) {
                    for (auto& p : predictors_) p.set_params(shared_params_);
                    return;
                }
                [[fallthrough]];  // no precomputed fit available: fit user 0
            case fit_mode::per_trial: {
                const auto r = traffic::fit_hyperparams(predictors_[0].win());
                for (auto& p : predictors_) p.set_params(r.params);
                break;
            }
            case fit_mode::per_user: {
                std::vector<const traffic::window*> ws;
                ws.reserve(predictors_.size());
                for (const auto& p : predictors_) ws.push_back(&p.win());
                const auto rs = traffic::fit_hyperparams_many(ws);
                for (std::size_t u = 0; u < predictors_.size(); ++u)
                    predictors_[u].set_params(rs[u].params);
                break;
            }
        }
    }

    scenario scen_;
    traffic_config tcfg_;
    opt::solver_config scfg_;
    std::shared_ptr<const traffic::series> data_;
    std::vector<strategy> strategies_;
    std::uint64_t seed_;
    std::vector<std::size_t> offsets_;
    std::vector<traffic::predictor> predictors_;
    traffic::kernel_params shared_params_;
    bool has_shared_params_ = false;
    int slots_since_fit_ = 0;
    trial_result result_;
    double mse_acc_ = 0.0;
    std::size_t mse_count_ = 0;
};

inline traffic::kernel_params fit_shared_params(const traffic_config& tcfg,
                                                const traffic::series& data) {
    traffic::window w(tcfg.window);
    if (data.values.size() < tcfg.window)
        throw traffic::dataset_error("fit: dataset shorter than the window");
    for (std::size_t i = 0; i < tcfg.window; ++i)
        w.slide(data.values[i], static_cast<std::int64_t>(i));
    return traffic::fit_hyperparams(w).params;
}

inline trial_result run_trial(const scenario_config& scfg, const traffic_config& tcfg,
                              const opt::solver_config& solver,
                              std::shared_ptr<const traffic::series> data,
                              const std::vector<strategy>& strategies,
                              std::uint64_t trial_seed,
                              const traffic::kernel_params* shared_params = nullptr) {
    trial_runner runner(generate_scenario(scfg, trial_seed), tcfg, solver, std::move(data),
                        strategies, trial_seed, shared_params);
    runner.warm_up();
    const int n = static_cast<int>(tcfg.window);
    for (int t = n; t < n + scfg.horizon; ++t) runner.run_slot(t);
    return runner.finish();
}

struct metric_stats {
    double mean = 0.0;
    double stddev = 0.0;
};

inline metric_stats stats_of(const std::vector<double>& xs) {
    metric_stats s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    double acc = 0.0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.stddev = xs.size() > 1 ? std::sqrt(acc / static_cast<double>(xs.size() - 1)) : 0.0;
    return s;
}

struct strategy_report {
    strategy strat = strategy::proposed;
    metric_stats energy_j;            // total transmission energy per trial
    metric_stats sum_rate_bps;        // per-slot average
    metric_stats per_user_rate_bps;   // per-slot per-user average
    metric_stats violation_freq;      // per trial: violations / (users*slots)
    double infeasible_fraction = 0.0;  // slots flagged infeasible
};

struct run_report {
    double axis_value = 0.0;
    std::vector<strategy_report> strategies;
    metric_stats predictor_mse;  // over trials
    double converged_fraction = 1.0;
    double mean_bcd_iterations = 0.0;
    std::vector<trial_result> trials;
};

inline run_report aggregate(const std::vector<trial_result>& trials,
                            const std::vector<strategy>& strategies) {
    run_report rep;
    rep.trials = trials;
    std::vector<double> mses;
    double it_acc = 0.0;
    int solves = 0, converged = 0;
    for (const auto& t : trials) {
        mses.push_back(t.predictor_mse);
        it_acc += t.mean_bcd_iterations * t.solves;
        solves += t.solves;
        converged += t.converged;
    }
    rep.predictor_mse = stats_of(mses);
    rep.converged_fraction = solves > 0 ? static_cast<double>(converged) / solves : 1.0;
    rep.mean_bcd_iterations = solves > 0 ? it_acc / solves : 0.0;

    for (strategy st : strategies) {
        strategy_report sr;
        sr.strat = st;
        std::vector<double> energy, sum_rate, per_user, viol;
        int slots = 0, infeasible = 0;
        for (const auto& t : trials) {
            double e = 0.0, sum_r = 0.0, pu = 0.0;
            int v = 0, n = 0;
            for (const auto& rec : t.records) {
                if (rec.strat != st) continue;
                ++n;
                e += rec.energy_j;
                sum_r += rec.sum_rate_bps;
                pu += rec.per_user_rate_bps;
                v += rec.violations;
                ++slots;
                if (rec.infeasible) ++infeasible;
            }
            if (n == 0) continue;
            energy.push_back(e);
            sum_rate.push_back(sum_r / n);
            per_user.push_back(pu / n);
            viol.push_back(t.num_users > 0
                               ? static_cast<double>(v) / (static_cast<double>(n) * t.num_users)
                               : 0.0);
        }
        sr.energy_j = stats_of(energy);
        sr.sum_rate_bps = stats_of(sum_rate);
        sr.per_user_rate_bps = stats_of(per_user);
        sr.violation_freq = stats_of(viol);
        sr.infeasible_fraction = slots > 0 ? static_cast<double>(infeasible) / slots : 0.0;
        rep.strategies.push_back(sr);
    }
    return rep;
}

// Trials are independent given their seeds; run them on a small pool.
// Results land in index-order slots, so the report is identical for any
// parallelism degree.
inline std::vector<trial_result> run_trials(const scenario_config& scfg,
                                            const traffic_config& tcfg,
                                            const opt::solver_config& solver,
                                            std::shared_ptr<const traffic::series> data,
                                            const std::vector<strategy>& strategies,
                                            int trials, std::uint64_t master_seed,
                                            int parallelism = 0,
                                            const traffic::kernel_params* shared_params = nullptr) {
    std::vector<trial_result> out(static_cast<std::size_t>(trials));
    if (parallelism <= 0)
        parallelism = static_cast<int>(std::thread::hardware_concurrency());
    parallelism = std::max(1, std::min(parallelism, trials));

    traffic::kernel_params global_fit;
    if (tcfg.fit == fit_mode::global && !shared_params) {
        global_fit = fit_shared_params(tcfg, *data);
        shared_params = &global_fit;
    }

    std::exception_ptr error;
    std::mutex error_mu;
    std::atomic<int> next{0};
    auto work = [&]() {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= trials) return;
            try {
                const std::uint64_t ts =
                    rnd::substream_seed(master_seed, {tag::trial, static_cast<std::uint64_t>(i)});
                out[static_cast<std::size_t>(i)] =
                    run_trial(scfg, tcfg, solver, data, strategies, ts, shared_params);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    if (parallelism == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(parallelism));
        for (int i = 0; i < parallelism; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

enum class sweep_axis { outage_eps, num_users, total_bandwidth };

inline const char* axis_name(sweep_axis a) {
    switch (a) {
        case sweep_axis::outage_eps: return "eps";
        case sweep_axis::num_users: return "users";
        case sweep_axis::total_bandwidth: return "bandwidth";
    }
    return "?";
}

inline scenario_config apply_axis(scenario_config base, sweep_axis axis, double value) {
    switch (axis) {
        case sweep_axis::outage_eps:
            base.outage_eps = value;
            break;
        case sweep_axis::num_users:
            base.num_users = static_cast<int>(std::lround(value));
            break;
        case sweep_axis::total_bandwidth:
            base.num_rbs = std::max(
                1, static_cast<int>(std::lround(value / base.chan.rb_bandwidth)));
            break;
    }
    return base;
}

// One report per axis value. Trial seeds depend only on the trial index,
// so axis points are paired through common random numbers.
inline std::vector<run_report> sweep(sweep_axis axis, const std::vector<double>& values,
                                     const scenario_config& base, const traffic_config& tcfg,
                                     const opt::solver_config& solver,
                                     std::shared_ptr<const traffic::series> data,
                                     const std::vector<strategy>& strategies, int trials,
                                     std::uint64_t master_seed, int parallelism = 0) {
    // the fitted hyperparameters depend only on the dataset: compute once
    traffic::kernel_params shared;
    const traffic::kernel_params* shared_ptr = nullptr;
    if (tcfg.fit == fit_mode::global) {
        shared = fit_shared_params(tcfg, *data);
        shared_ptr = &shared;
    }
    std::vector<run_report> out;
    out.reserve(values.size());
    for (double v : values) {
        const scenario_config cfg = apply_axis(base, axis, v);
        auto trial_results = run_trials(cfg, tcfg, solver, data, strategies, trials,
                                        master_seed, parallelism, shared_ptr);
        run_report rep = aggregate(trial_results, strategies);
        rep.axis_value = v;
        out.push_back(std::move(rep));
    }
    return out;
}

}  // namespace uavsched::sim
