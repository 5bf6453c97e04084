#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavsched/channel.hpp"
#include "uavsched/optimizer.hpp"
#include "uavsched/sim.hpp"

// Run configuration: a JSON tree of defaults overridden by an optional
// user file. Unknown keys are rejected; dB/dBm-valued entries convert
// to linear at load; the merged tree is the effective config, which is
// what gets hashed into every report and re-emitted byte-stably.

namespace uavsched::config {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct run_config {
    std::uint64_t master_seed = 1;
    sim::scenario_config scenario;
    opt::solver_config solver;
    sim::traffic_config traffic;
    struct sweep_block {
        std::vector<double> eps_values;
        std::vector<double> users_values;
        std::vector<double> bandwidth_values_hz;
        int trials = 20;
        int parallelism = 0;
    } sweep;
    struct output_block {
        std::string directory = "out";
        std::vector<std::string> formats;
    } output;
};

inline nlohmann::json default_tree() {
    return nlohmann::json{
        {"master_seed", 1},
        {"scenario",
         {{"num_users", 20},
          {"coverage_m", {250.0, 250.0}},
          {"altitude_range_m", {100.0, 150.0}},
          {"num_rbs", 25},
          {"total_power_w", 10.0},
          {"packet_bytes", 32.0},
          {"outage_eps", 0.1},
          {"zeta_bps_per_w", 5e13},
          {"horizon_slots", 5},
          {"slot_duration_s", 0.001},
          {"channel",
           {{"gamma0_db", -30.0},
            {"pathloss_exp", 2.0},
            {"noise_density_dbm_hz", -174.0},
            {"rb_bandwidth_hz", 180000.0},
            {"rician_k", 10.0},
            {"blocklength", 168},
            {"decode_err", 1e-5}}}}},
        {"solver",
         {{"bcd_tol", 1e-4},
          {"max_bcd_iters", 100},
          {"inner_tol", 1e-6},
          {"max_inner_iters", 5000},
          {"rounding_threshold", 0.5},
          {"dual_step", 1.0}}},
        {"traffic",
         {{"dataset", "data/sample_traffic.csv"},
          {"time_column", "Date"},
          {"value_column", "Close"},
          {"delimiter", ","},
          {"max_packets_per_slot", 500.0},
          {"window_slots", 600},
          {"refit_period_slots", 50},
          {"kappa", 1.0},
          {"offset_stride", 17},
          {"fit_mode", "global"}}},
        {"sweep",
         {{"eps_values", {0.01, 0.05, 0.1}},
          {"users_values", {5.0, 8.0, 11.0, 14.0, 17.0, 20.0}},
          {"bandwidth_values_hz", {7.2e6, 8.1e6, 9.0e6, 9.9e6, 10.8e6}},
          {"trials", 20},
          {"parallelism", 0}}},
        {"output", {{"directory", "out"}, {"formats", {"csv", "json"}}}}};
}

namespace detail {

inline bool same_kind(const nlohmann::json& a, const nlohmann::json& b) {
    if (a.is_number() && b.is_number()) return true;
    return a.type() == b.type();
}

inline void merge_into(nlohmann::json& base, const nlohmann::json& overrides,
                       const std::string& where) {
    if (!overrides.is_object())
        throw config_error("config: expected an object at " + (where.empty() ? "/" : where));
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
        const std::string path = where + "/" + it.key();
        if (!base.contains(it.key()))
            throw config_error("config: unknown key '" + path + "'");
        nlohmann::json& slot = base[it.key()];
        if (slot.is_object() && it.value().is_object()) {
            merge_into(slot, it.value(), path);
        } else {
            if (!same_kind(slot, it.value()))
                throw config_error("config: type mismatch at '" + path + "'");
            slot = it.value();
        }
    }
}

template <class T>
T get(const nlohmann::json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

}  // namespace detail

// Merge: defaults overridden by the user tree; unknown keys rejected.
inline nlohmann::json effective_tree(const nlohmann::json& overrides) {
    nlohmann::json tree = default_tree();
    detail::merge_into(tree, overrides, "");
    return tree;
}

inline run_config from_tree(const nlohmann::json& t) {
    run_config c;
    c.master_seed = detail::get<std::uint64_t>(t, "master_seed");

    const auto& sc = t.at("scenario");
    c.scenario.num_users = detail::get<int>(sc, "num_users");
    const auto cov = detail::get<std::vector<double>>(sc, "coverage_m");
    if (cov.size() != 2) throw config_error("config: coverage_m must be [width, height]");
    c.scenario.coverage = {0.0, 0.0, cov[0], cov[1]};
    const auto alt = detail::get<std::vector<double>>(sc, "altitude_range_m");
    if (alt.size() != 2) throw config_error("config: altitude_range_m must be [min, max]");
    c.scenario.altitude_min = alt[0];
    c.scenario.altitude_max = alt[1];
    c.scenario.num_rbs = detail::get<int>(sc, "num_rbs");
    c.scenario.total_power = detail::get<double>(sc, "total_power_w");
    c.scenario.packet_bytes = detail::get<double>(sc, "packet_bytes");
    c.scenario.outage_eps = detail::get<double>(sc, "outage_eps");
    c.scenario.zeta = detail::get<double>(sc, "zeta_bps_per_w");
    c.scenario.horizon = detail::get<int>(sc, "horizon_slots");
    c.scenario.slot_duration = detail::get<double>(sc, "slot_duration_s");

    const auto& ch = sc.at("channel");
    c.scenario.chan.gamma0 = channel::db_to_linear(detail::get<double>(ch, "gamma0_db"));
    c.scenario.chan.pathloss_exp = detail::get<double>(ch, "pathloss_exp");
    c.scenario.chan.noise_density =
        channel::dbm_to_watts(detail::get<double>(ch, "noise_density_dbm_hz"));
    c.scenario.chan.rb_bandwidth = detail::get<double>(ch, "rb_bandwidth_hz");
    c.scenario.chan.rician_k = detail::get<double>(ch, "rician_k");
    c.scenario.chan.blocklength = detail::get<int>(ch, "blocklength");
    c.scenario.chan.decode_err = detail::get<double>(ch, "decode_err");

    const auto& so = t.at("solver");
    c.solver.bcd_tol = detail::get<double>(so, "bcd_tol");
    c.solver.max_bcd_iters = detail::get<int>(so, "max_bcd_iters");
    c.solver.inner_tol = detail::get<double>(so, "inner_tol");
    c.solver.max_inner_iters = detail::get<int>(so, "max_inner_iters");
    c.solver.rounding_threshold = detail::get<double>(so, "rounding_threshold");
    c.solver.dual_step = detail::get<double>(so, "dual_step");

    const auto& tr = t.at("traffic");
    c.traffic.dataset = detail::get<std::string>(tr, "dataset");
    c.traffic.time_column = detail::get<std::string>(tr, "time_column");
    c.traffic.value_column = detail::get<std::string>(tr, "value_column");
    const auto delim = detail::get<std::string>(tr, "delimiter");
    if (delim.size() != 1) throw config_error("config: delimiter must be one character");
    c.traffic.delimiter = delim[0];
    c.traffic.max_packets = detail::get<double>(tr, "max_packets_per_slot");
    const int window = detail::get<int>(tr, "window_slots");
    if (window < 10) throw config_error("config: window_slots must be >= 10");
    c.traffic.window = static_cast<std::size_t>(window);
    c.traffic.refit_period = detail::get<int>(tr, "refit_period_slots");
    c.traffic.kappa = detail::get<double>(tr, "kappa");
    c.traffic.offset_stride = detail::get<int>(tr, "offset_stride");
    const auto fit = detail::get<std::string>(tr, "fit_mode");
    if (fit == "global")
        c.traffic.fit = sim::fit_mode::global;
    else if (fit == "per_trial")
        c.traffic.fit = sim::fit_mode::per_trial;
    else if (fit == "per_user")
        c.traffic.fit = sim::fit_mode::per_user;
    else
        throw config_error("config: fit_mode must be global|per_trial|per_user");

    const auto& sw = t.at("sweep");
    c.sweep.eps_values = detail::get<std::vector<double>>(sw, "eps_values");
    c.sweep.users_values = detail::get<std::vector<double>>(sw, "users_values");
    c.sweep.bandwidth_values_hz = detail::get<std::vector<double>>(sw, "bandwidth_values_hz");
    c.sweep.trials = detail::get<int>(sw, "trials");
    c.sweep.parallelism = detail::get<int>(sw, "parallelism");
    if (c.sweep.trials < 1) throw config_error("config: sweep.trials must be >= 1");

    const auto& ou = t.at("output");
    c.output.directory = detail::get<std::string>(ou, "directory");
    c.output.formats = detail::get<std::vector<std::string>>(ou, "formats");
    for (const auto& f : c.output.formats)
        if (f != "csv" && f != "json")
            throw config_error("config: output format must be csv or json");
    if (c.output.formats.empty()) throw config_error("config: at least one output format");

    try {
        c.scenario.validate();
        c.solver.validate();
        c.traffic.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    return c;
}

inline nlohmann::json load_tree(const std::string& path) {
    if (path.empty()) return effective_tree(nlohmann::json::object());
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open '" + path + "'");
    nlohmann::json overrides;
    try {
        in >> overrides;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config: parse error in '" + path + "': " + e.what());
    }
    return effective_tree(overrides);
}

inline std::string dump_tree(const nlohmann::json& t) { return t.dump(2) + "\n"; }

// FNV-1a over the canonical dump; hex string for report headers.
inline std::string hash_of(const nlohmann::json& t) {
    const std::string s = dump_tree(t);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace uavsched::config
