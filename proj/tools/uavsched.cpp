// Batch experiment driver: traffic prediction, single-slot solves,
// parameter sweeps and strategy comparisons, all driven by a JSON
// config (defaults overridden by --config) and a master seed.
//
// Exit codes: 0 success, 2 configuration error, 3 infeasible instance,
// 4 dataset error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uavsched/config.hpp"
#include "uavsched/io.hpp"
#include "uavsched/optimizer.hpp"
#include "uavsched/sim.hpp"
#include "uavsched/traffic.hpp"

namespace {

using namespace uavsched;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitDataset = 4;

struct context {
    config::run_config cfg;
    nlohmann::json tree;
    io::run_header header;
    fs::path out_dir;

    void emit(const std::string& name, const io::table& t) const {
        io::write_table(out_dir, name, header, t, cfg.output.formats);
    }
};

context make_context(const std::string& config_path, std::optional<std::uint64_t> seed,
                     const std::string& out_dir, std::optional<int> trials) {
    context ctx;
    ctx.tree = config::load_tree(config_path);
    if (seed) ctx.tree["master_seed"] = *seed;
    if (!out_dir.empty()) ctx.tree["output"]["directory"] = out_dir;
    if (trials) ctx.tree["sweep"]["trials"] = *trials;
    ctx.cfg = config::from_tree(ctx.tree);
    ctx.header.master_seed = ctx.cfg.master_seed;
    ctx.header.config_hash = config::hash_of(ctx.tree);
    ctx.out_dir = ctx.cfg.output.directory;
    fs::create_directories(ctx.out_dir);
    std::ofstream eff(ctx.out_dir / "effective_config.json", std::ios::binary);
    eff << config::dump_tree(ctx.tree);
    return ctx;
}

std::shared_ptr<const traffic::series> load_dataset(const config::run_config& cfg,
                                                    std::size_t min_rows = 0) {
    traffic::ingest_options opt;
    opt.delimiter = cfg.traffic.delimiter;
    opt.time_column = cfg.traffic.time_column;
    opt.value_column = cfg.traffic.value_column;
    opt.min_rows = min_rows;
    return std::make_shared<const traffic::series>(
        traffic::ingest_file(cfg.traffic.dataset, opt));
}

std::vector<sim::strategy> parse_strategies(const std::string& s) {
    if (s.empty() || s == "all")
        return {sim::strategy::proposed, sim::strategy::max_power,
                sim::strategy::random_placement};
    if (s == "proposed") return {sim::strategy::proposed};
    if (s == "max_power") return {sim::strategy::max_power};
    if (s == "random" || s == "random_placement") return {sim::strategy::random_placement};
    throw config::config_error("unknown strategy '" + s + "'");
}

// ---- predict -----------------------------------------------------------

int cmd_predict(const context& ctx) {
    const auto& tc = ctx.cfg.traffic;
    const auto data = load_dataset(ctx.cfg, tc.window + 2);
    if (data->rejected_rows > 0)
        std::fprintf(stderr, "warning: %zu rows rejected while ingesting %s\n",
                     data->rejected_rows, tc.dataset.c_str());

    traffic::predictor pred(tc.window);
    const int n = static_cast<int>(tc.window);
    for (int t = 0; t < n; ++t) pred.observe(data->values[static_cast<std::size_t>(t)], t);
    pred.refit();

    io::table trace;
    trace.columns = {"slot", "observed", "predicted_mean", "predicted_variance",
                     "squared_error"};
    double acc = 0.0;
    int count = 0;
    int since_fit = 0;
    const int end = static_cast<int>(data->values.size());
    for (int t = n; t < end; ++t) {
        if (tc.refit_period > 0 && since_fit >= tc.refit_period) {
            pred.refit();
            since_fit = 0;
        }
        ++since_fit;
        const auto pr = pred.predict();
        const double actual = data->values[static_cast<std::size_t>(t)];
        const double err = pr.mean - actual;
        acc += err * err;
        ++count;
        trace.add_row({static_cast<std::int64_t>(t), actual, pr.mean, pr.variance, err * err});
        pred.observe(actual, t);
    }
    const double mse = acc / count;
    ctx.emit("prediction_trace", trace);

    io::table summary;
    summary.columns = {"metric", "value"};
    summary.add_row({std::string("mse"), mse});
    summary.add_row({std::string("evaluated_slots"), static_cast<std::int64_t>(count)});
    summary.add_row({std::string("window_slots"), static_cast<std::int64_t>(n)});
    summary.add_row({std::string("rejected_rows"),
                     static_cast<std::int64_t>(data->rejected_rows)});
    ctx.emit("prediction_summary", summary);

    std::printf("predict: %d slots evaluated, one-step MSE %.6g\n", count, mse);
    return kExitOk;
}

// ---- solve --------------------------------------------------------------

int cmd_solve(const context& ctx) {
    const auto data = load_dataset(ctx.cfg, ctx.cfg.traffic.window + 1);
    const auto scen = sim::generate_scenario(ctx.cfg.scenario, ctx.cfg.master_seed);
    traffic::kernel_params shared;
    const traffic::kernel_params* shared_ptr = nullptr;
    if (ctx.cfg.traffic.fit == sim::fit_mode::global) {
        shared = sim::fit_shared_params(ctx.cfg.traffic, *data);
        shared_ptr = &shared;
    }
    sim::trial_runner runner(scen, ctx.cfg.traffic, ctx.cfg.solver, data,
                             {sim::strategy::proposed}, ctx.cfg.master_seed, shared_ptr);
    runner.warm_up();
    const int slot = static_cast<int>(ctx.cfg.traffic.window);
    auto planned = runner.plan(slot);
    const auto out = opt::successive_maximization(planned.prob, ctx.cfg.solver);

    if (out.status != opt::solve_status::infeasible &&
        !opt::check_allocation(planned.prob, out.alloc)) {
        std::fprintf(stderr, "solve: emitted allocation failed its self-check\n");
        return 1;
    }

    io::table trace;
    trace.columns = {"iteration", "objective", "min_slack", "x", "y"};
    for (const auto& r : out.trace)
        trace.add_row({static_cast<std::int64_t>(r.iteration), r.objective, r.min_slack, r.x,
                       r.y});
    ctx.emit("solve_trace", trace);

    io::table users;
    users.columns = {"user",      "x",          "y",         "predicted_load",
                     "required_rate_bps", "rate_bps", "slack_bps", "rbs_assigned",
                     "power_w"};
    for (std::size_t u = 0; u < planned.prob.num_users(); ++u) {
        const auto ui = static_cast<Eigen::Index>(u);
        users.add_row({static_cast<std::int64_t>(u), planned.prob.users[u].x,
                       planned.prob.users[u].y, planned.prob.predicted_loads[u],
                       opt::required_rate(planned.prob, u), out.per_user_rate[ui],
                       out.reliability_slack[ui],
                       static_cast<std::int64_t>(std::lround(out.alloc.assign.row(ui).sum())),
                       out.alloc.power.row(ui).sum()});
    }
    ctx.emit("solve_users", users);

    const char* status = out.status == opt::solve_status::converged   ? "converged"
                         : out.status == opt::solve_status::max_iters ? "max_iters"
                                                                      : "infeasible";
    io::table summary;
    summary.columns = {"metric", "value"};
    summary.add_row({std::string("status"), std::string(status)});
    summary.add_row({std::string("objective"), out.objective});
    summary.add_row({std::string("iterations"), static_cast<std::int64_t>(out.iterations)});
    summary.add_row({std::string("uav_x"), out.alloc.uav_pos.x});
    summary.add_row({std::string("uav_y"), out.alloc.uav_pos.y});
    summary.add_row({std::string("uav_h"), out.alloc.uav_pos.h});
    summary.add_row({std::string("total_power_w"),
                     (out.alloc.assign.array() * out.alloc.power.array()).sum()});
    summary.add_row({std::string("min_slack_bps"),
                     out.reliability_slack.size() > 0 ? out.reliability_slack.minCoeff() : 0.0});
    ctx.emit("solve_summary", summary);

    std::printf("solve: status=%s objective=%.6g iterations=%d\n", status, out.objective,
                out.iterations);
    if (out.status == opt::solve_status::infeasible) {
        std::fprintf(stderr,
                     "solve: infeasible instance; max-min reliability slack %.6g bit/s\n",
                     out.reliability_slack.size() > 0 ? out.reliability_slack.minCoeff() : 0.0);
        return kExitInfeasible;
    }
    return kExitOk;
}

// ---- sweep ---------------------------------------------------------------

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

int cmd_sweep(const context& ctx, const std::string& axis_str,
              const std::vector<double>& values_arg, const std::string& strategy_str) {
    sim::sweep_axis axis;
    if (axis_str == "eps")
        axis = sim::sweep_axis::outage_eps;
    else if (axis_str == "users")
        axis = sim::sweep_axis::num_users;
    else if (axis_str == "bandwidth")
        axis = sim::sweep_axis::total_bandwidth;
    else
        throw config::config_error("sweep: axis must be eps|users|bandwidth");

    std::vector<double> values = values_arg;
    if (values.empty()) {
        switch (axis) {
            case sim::sweep_axis::outage_eps: values = ctx.cfg.sweep.eps_values; break;
            case sim::sweep_axis::num_users: values = ctx.cfg.sweep.users_values; break;
            case sim::sweep_axis::total_bandwidth:
                values = ctx.cfg.sweep.bandwidth_values_hz;
                break;
        }
    }
    if (values.empty()) throw config::config_error("sweep: no axis values");

    const auto strategies = parse_strategies(strategy_str);
    const auto data = load_dataset(ctx.cfg, ctx.cfg.traffic.window + 1);
    traffic::kernel_params shared;
    const traffic::kernel_params* shared_ptr = nullptr;
    if (ctx.cfg.traffic.fit == sim::fit_mode::global) {
        shared = sim::fit_shared_params(ctx.cfg.traffic, *data);
        shared_ptr = &shared;
    }

    std::vector<std::pair<double, sim::run_report>> reports;
    std::vector<std::pair<std::string, std::string>> failures;
    for (double v : values) {
        try {
            const auto scfg = sim::apply_axis(ctx.cfg.scenario, axis, v);
            auto trials = sim::run_trials(scfg, ctx.cfg.traffic, ctx.cfg.solver, data,
                                          strategies, ctx.cfg.sweep.trials,
                                          ctx.cfg.master_seed, ctx.cfg.sweep.parallelism,
                                          shared_ptr);
            auto rep = sim::aggregate(trials, strategies);
            rep.axis_value = v;
            reports.emplace_back(v, std::move(rep));
        } catch (const std::exception& e) {
            failures.emplace_back(format_value(v), e.what());
            std::fprintf(stderr, "sweep: value %s failed: %s\n", format_value(v).c_str(),
                         e.what());
        }
    }
    if (reports.empty()) throw std::runtime_error("sweep: every axis value failed");

    for (std::size_t si = 0; si < strategies.size(); ++si) {
        const std::string name = sim::strategy_name(strategies[si]);
        io::table series;
        series.columns = {"axis_value",
                          "energy_mean_j",
                          "energy_std_j",
                          "sum_rate_mean_bps",
                          "sum_rate_std_bps",
                          "per_user_rate_mean_bps",
                          "per_user_rate_std_bps",
                          "violation_freq_mean",
                          "violation_freq_std",
                          "infeasible_fraction",
                          "predictor_mse_mean",
                          "predictor_mse_std",
                          "converged_fraction"};
        io::table plot_energy, plot_energy_std, plot_rate, plot_rate_std, plot_sum,
            plot_sum_std;
        for (auto* t : {&plot_energy, &plot_energy_std, &plot_rate, &plot_rate_std, &plot_sum,
                        &plot_sum_std})
            t->columns = {"x", "value"};
        for (const auto& [v, rep] : reports) {
            const auto& sr = rep.strategies[si];
            series.add_row({v, sr.energy_j.mean, sr.energy_j.stddev, sr.sum_rate_bps.mean,
                            sr.sum_rate_bps.stddev, sr.per_user_rate_bps.mean,
                            sr.per_user_rate_bps.stddev, sr.violation_freq.mean,
                            sr.violation_freq.stddev, sr.infeasible_fraction,
                            rep.predictor_mse.mean, rep.predictor_mse.stddev,
                            rep.converged_fraction});
            plot_energy.add_row({v, sr.energy_j.mean});
            plot_energy_std.add_row({v, sr.energy_j.stddev});
            plot_rate.add_row({v, sr.per_user_rate_bps.mean});
            plot_rate_std.add_row({v, sr.per_user_rate_bps.stddev});
            plot_sum.add_row({v, sr.sum_rate_bps.mean});
            plot_sum_std.add_row({v, sr.sum_rate_bps.stddev});
        }
        ctx.emit("sweep_" + axis_str + "_" + name, series);
        ctx.emit("plot_" + axis_str + "_" + name + "_energy_j", plot_energy);
        ctx.emit("plot_" + axis_str + "_" + name + "_energy_j_std", plot_energy_std);
        ctx.emit("plot_" + axis_str + "_" + name + "_per_user_rate_bps", plot_rate);
        ctx.emit("plot_" + axis_str + "_" + name + "_per_user_rate_bps_std", plot_rate_std);
        ctx.emit("plot_" + axis_str + "_" + name + "_sum_rate_bps", plot_sum);
        ctx.emit("plot_" + axis_str + "_" + name + "_sum_rate_bps_std", plot_sum_std);
    }

    // per-trial stream, one file per axis value, stable column order
    for (const auto& [v, rep] : reports) {
        io::table stream;
        stream.columns = {"trial",    "slot",         "strategy",
                          "objective", "energy_j",    "sum_rate_bps",
                          "min_user_rate_bps", "violations", "infeasible_flag"};
        for (std::size_t ti = 0; ti < rep.trials.size(); ++ti)
            for (const auto& rec : rep.trials[ti].records)
                stream.add_row({static_cast<std::int64_t>(ti),
                                static_cast<std::int64_t>(rec.slot),
                                std::string(sim::strategy_name(rec.strat)), rec.objective,
                                rec.energy_j, rec.sum_rate_bps, rec.min_user_rate_bps,
                                static_cast<std::int64_t>(rec.violations),
                                static_cast<std::int64_t>(rec.infeasible ? 1 : 0)});
        ctx.emit("trials_" + axis_str + "_" + format_value(v), stream);
    }

    if (!failures.empty()) {
        io::table fail;
        fail.columns = {"value", "error"};
        for (const auto& [v, msg] : failures) fail.add_row({v, msg});
        ctx.emit("sweep_" + axis_str + "_failures", fail);
    }
    std::printf("sweep: axis=%s points=%zu trials=%d strategies=%zu%s\n", axis_str.c_str(),
                reports.size(), ctx.cfg.sweep.trials, strategies.size(),
                failures.empty() ? "" : " (with failures)");
    return kExitOk;
}

// ---- compare --------------------------------------------------------------

int cmd_compare(const context& ctx, const std::string& strategy_str) {
    const auto strategies = parse_strategies(strategy_str);
    const auto data = load_dataset(ctx.cfg, ctx.cfg.traffic.window + 1);
    auto trials = sim::run_trials(ctx.cfg.scenario, ctx.cfg.traffic, ctx.cfg.solver, data,
                                  strategies, ctx.cfg.sweep.trials, ctx.cfg.master_seed,
                                  ctx.cfg.sweep.parallelism);
    auto rep = sim::aggregate(trials, strategies);

    auto trial_metric = [&](const sim::trial_result& t, sim::strategy st, bool energy) {
        double acc = 0.0;
        int n = 0;
        for (const auto& rec : t.records) {
            if (rec.strat != st) continue;
            acc += energy ? rec.energy_j : rec.objective;
            ++n;
        }
        return energy ? acc : (n > 0 ? acc / n : 0.0);
    };

    io::table cmp;
    cmp.columns = {"baseline",     "metric",       "proposed_mean", "baseline_mean",
                   "diff_mean",    "diff_ci95_lo", "diff_ci95_hi",  "wins"};
    const bool have_proposed =
        std::find(strategies.begin(), strategies.end(), sim::strategy::proposed) !=
        strategies.end();
    for (sim::strategy st : strategies) {
        if (st == sim::strategy::proposed || !have_proposed) continue;
        for (bool energy : {true, false}) {
            std::vector<double> diffs;
            double pm = 0, bm = 0;
            int wins = 0;
            for (const auto& t : trials) {
                const double a = trial_metric(t, sim::strategy::proposed, energy);
                const double b = trial_metric(t, st, energy);
                diffs.push_back(a - b);
                pm += a;
                bm += b;
                const bool win = energy ? a <= b + 1e-15 : a >= b - 1e-15;
                if (win) ++wins;
            }
            const auto st_diff = sim::stats_of(diffs);
            const double half =
                1.96 * st_diff.stddev / std::sqrt(static_cast<double>(diffs.size()));
            cmp.add_row({std::string(sim::strategy_name(st)),
                         std::string(energy ? "energy_j" : "objective"),
                         pm / static_cast<double>(trials.size()),
                         bm / static_cast<double>(trials.size()), st_diff.mean,
                         st_diff.mean - half, st_diff.mean + half,
                         static_cast<std::int64_t>(wins)});
        }
    }
    ctx.emit("compare", cmp);

    io::table viol;
    viol.columns = {"strategy", "violation_freq_mean", "violation_freq_std",
                    "infeasible_fraction"};
    for (std::size_t si = 0; si < strategies.size(); ++si) {
        const auto& sr = rep.strategies[si];
        viol.add_row({std::string(sim::strategy_name(strategies[si])),
                      sr.violation_freq.mean, sr.violation_freq.stddev,
                      sr.infeasible_fraction});
    }
    ctx.emit("compare_violations", viol);

    std::printf("compare: %zu strategies, %d trials\n", strategies.size(),
                ctx.cfg.sweep.trials);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"UAV base-station URLLC scheduling experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, axis = "eps", strategy = "all", values_csv;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config overriding the defaults");
        sub->add_option("--seed", seed, "master seed override");
        sub->add_option("--out", out_dir, "output directory override");
        sub->add_option("--trials", trials, "Monte Carlo trials override");
    };
    auto* predict = app.add_subcommand("predict", "rolling one-step traffic prediction");
    add_common(predict);
    auto* solve = app.add_subcommand("solve", "single-slot joint optimization");
    add_common(solve);
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo parameter sweep");
    add_common(sweep);
    sweep->add_option("--axis", axis, "eps|users|bandwidth");
    sweep->add_option("--values", values_csv, "comma-separated axis values");
    sweep->add_option("--strategy", strategy, "proposed|max_power|random|all");
    auto* compare = app.add_subcommand("compare", "side-by-side strategy comparison");
    add_common(compare);
    compare->add_option("--strategy", strategy, "proposed|max_power|random|all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        const context ctx = make_context(config_path, seed, out_dir, trials);
        std::vector<double> values;
        if (!values_csv.empty()) {
            std::stringstream ss(values_csv);
            std::string tok;
            while (std::getline(ss, tok, ',')) values.push_back(std::stod(tok));
        }
        if (predict->parsed()) return cmd_predict(ctx);
        if (solve->parsed()) return cmd_solve(ctx);
        if (sweep->parsed()) return cmd_sweep(ctx, axis, values, strategy);
        if (compare->parsed()) return cmd_compare(ctx, strategy);
        return kExitConfig;
    } catch (const config::config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const traffic::dataset_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDataset;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
