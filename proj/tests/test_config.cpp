#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "uavsched/config.hpp"

using namespace uavsched;

TEST_CASE("defaults parse and carry the reference scenario constants") {
    const auto tree = config::effective_tree(nlohmann::json::object());
    const auto cfg = config::from_tree(tree);
    CHECK(cfg.scenario.num_users == 20);
    CHECK(cfg.scenario.coverage.x1 == 250.0);
    CHECK(cfg.scenario.coverage.y1 == 250.0);
    CHECK(cfg.scenario.altitude_min == 100.0);
    CHECK(cfg.scenario.altitude_max == 150.0);
    CHECK(cfg.scenario.total_power == 10.0);
    CHECK(cfg.scenario.packet_bytes == 32.0);
    CHECK(cfg.scenario.chan.rb_bandwidth == 180000.0);
    CHECK(cfg.traffic.window == 600);
    // dB / dBm entries are converted to linear at load
    CHECK(cfg.scenario.chan.gamma0 == Catch::Approx(1e-3).epsilon(1e-12));
    CHECK(cfg.scenario.chan.noise_density ==
          Catch::Approx(3.9810717055349695e-21).epsilon(1e-12));
}

TEST_CASE("unknown keys and type mismatches are rejected") {
    CHECK_THROWS_AS(config::effective_tree({{"not_a_key", 1}}), config::config_error);
    CHECK_THROWS_AS(config::effective_tree({{"scenario", {{"numUsers", 5}}}}),
                    config::config_error);
    CHECK_THROWS_AS(config::effective_tree({{"scenario", {{"num_users", "twenty"}}}}),
                    config::config_error);
    // arrays and nested objects merge fine
    const auto t = config::effective_tree(
        {{"scenario", {{"num_users", 7}, {"channel", {{"rician_k", 3.5}}}}}});
    const auto cfg = config::from_tree(t);
    CHECK(cfg.scenario.num_users == 7);
    CHECK(cfg.scenario.chan.rician_k == 3.5);
    CHECK(cfg.scenario.chan.pathloss_exp == 2.0);  // untouched default
}

TEST_CASE("invalid values fail validation as config errors") {
    CHECK_THROWS_AS(
        config::from_tree(config::effective_tree({{"scenario", {{"outage_eps", 1.5}}}})),
        config::config_error);
    CHECK_THROWS_AS(
        config::from_tree(config::effective_tree({{"traffic", {{"fit_mode", "sometimes"}}}})),
        config::config_error);
    CHECK_THROWS_AS(
        config::from_tree(config::effective_tree({{"traffic", {{"delimiter", ";;"}}}})),
        config::config_error);
    CHECK_THROWS_AS(
        config::from_tree(config::effective_tree({{"output", {{"formats", {"xml"}}}}})),
        config::config_error);
    CHECK_THROWS_AS(
        config::from_tree(config::effective_tree({{"solver", {{"rounding_threshold", 1.5}}}})),
        config::config_error);
}

TEST_CASE("effective config dump is byte-stable under reload") {
    const auto t1 = config::effective_tree({{"master_seed", 99},
                                            {"scenario", {{"num_rbs", 12}}},
                                            {"sweep", {{"trials", 3}}}});
    const std::string d1 = config::dump_tree(t1);
    // feeding the full effective tree back as overrides must reproduce it
    const auto t2 = config::effective_tree(nlohmann::json::parse(d1));
    const std::string d2 = config::dump_tree(t2);
    CHECK(d1 == d2);
    CHECK(config::hash_of(t1) == config::hash_of(t2));
}

TEST_CASE("hash changes with content") {
    const auto a = config::effective_tree(nlohmann::json::object());
    const auto b = config::effective_tree({{"master_seed", 2}});
    CHECK(config::hash_of(a) != config::hash_of(b));
    CHECK(config::hash_of(a).size() == 16);
}
