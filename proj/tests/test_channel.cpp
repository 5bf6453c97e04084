#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "uavsched/channel.hpp"
#include "uavsched/random.hpp"

using namespace uavsched;

namespace {

// Quadrature oracle for the Gaussian tail, independent of the library's
// erfc/Newton path. The Gaussian is factored out of the tail integral so
// the adaptive Simpson rule sums only positive terms:
//   Q(x) = phi(x) * integral_0^inf exp(-x s - s^2/2) ds.
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
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI) * integral;
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

}  // namespace

TEST_CASE("path gain reference distance and hand values") {
    channel::params p;
    p.gamma0 = 0.42;
    // d = 1 m regardless of exponent
    channel::pos3 uav{0, 0, 1.0};
    channel::pos2 user{0, 0};
    CHECK(channel::path_gain(p, uav, user) == Catch::Approx(0.42).epsilon(1e-12));

    p.gamma0 = 1e-3;  // -30 dB
    p.pathloss_exp = 2.0;
    channel::pos3 high{10, 20, 100.0};
    channel::pos2 below{10, 20};
    CHECK(channel::path_gain(p, high, below) == Catch::Approx(1e-7).epsilon(1e-12));

    CHECK(channel::db_to_linear(-30.0) == Catch::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("path gain monotone in each coordinate distance") {
    channel::params p;
    p.pathloss_exp = 2.7;
    channel::pos2 user{30, 40};
    double prev = channel::path_gain(p, {30, 40, 50}, user);
    for (double dx : {5.0, 10.0, 50.0, 120.0}) {
        const double g = channel::path_gain(p, {30 + dx, 40, 50}, user);
        CHECK(g < prev);
        prev = g;
    }
    prev = channel::path_gain(p, {0, 0, 60}, user);
    for (double h : {80.0, 100.0, 140.0}) {
        const double g = channel::path_gain(p, {0, 0, h}, user);
        CHECK(g < prev);
        prev = g;
    }
}

TEST_CASE("fading: K -> infinity limit and unit second moment") {
    channel::params p;
    p.rician_k = 1e12;
    auto rng = rnd::engine(1234);
    auto s = channel::sample_fading(p, rng);
    CHECK(std::abs(s.rho) == Catch::Approx(1.0).epsilon(1e-5));

    // E|rho|^2 = 1 for any K (law of large numbers at 1e5 draws, 2% band)
    for (double k : {0.0, 1.0, 10.0}) {
        p.rician_k = k;
        auto gen = rnd::engine(99, {static_cast<std::uint64_t>(k)});
        double acc = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) acc += channel::sample_fading(p, gen).power();
        CHECK(acc / n == Catch::Approx(1.0).margin(0.02));
    }
}

TEST_CASE("fading: K = 0 is pure scattering with unit power variance") {
    channel::params p;
    p.rician_k = 0.0;
    auto gen = rnd::engine(2024);
    const int n = 100000;
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = channel::sample_fading(p, gen).power();
        acc += w;
        acc2 += w * w;
    }
    const double mean = acc / n;
    const double var = acc2 / n - mean * mean;
    CHECK(mean == Catch::Approx(1.0).margin(0.02));
    // |rho|^2 ~ Exp(1) when K = 0, so Var = 1
    CHECK(var == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("q_inv basics") {
    CHECK(channel::q_inv(0.5) == Catch::Approx(0.0).margin(1e-12));
    CHECK(channel::q_inv(1.0 - 0.1) == Catch::Approx(-channel::q_inv(0.1)).epsilon(1e-12));
    CHECK(channel::q_inv(1e-5) == Catch::Approx(4.26489).margin(1e-4));
    CHECK_THROWS_AS(channel::q_inv(0.0), std::domain_error);
    CHECK_THROWS_AS(channel::q_inv(1.0), std::domain_error);
    CHECK_THROWS_AS(channel::q_inv(-0.1), std::domain_error);
    // positive iff theta < 0.5
    CHECK(channel::q_inv(0.499) > 0.0);
    CHECK(channel::q_inv(0.501) < 0.0);
}

TEST_CASE("q_inv agrees with quadrature/bisection oracle") {
    for (double theta : {1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.25, 0.5 - 1e-9}) {
        const double x = channel::q_inv(theta);
        const double ref = q_inv_oracle(theta);
        INFO("theta=" << theta);
        CHECK(x == Catch::Approx(ref).margin(1e-9));
        // forward residual: |Q(qinv(theta)) - theta| small relative to theta
        CHECK(std::abs(channel::q_func(x) - theta) <= 1e-12 * theta + 1e-300);
    }
}

TEST_CASE("dispersion") {
    CHECK(channel::dispersion(0.0) == 0.0);
    CHECK(channel::dispersion(1.0) == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(channel::dispersion(1e15) == Catch::Approx(1.0).epsilon(1e-12));
    double prev = -1.0;
    for (double s : {0.0, 0.1, 1.0, 5.0, 100.0, 1e6}) {
        const double v = channel::dispersion(s);
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("achievable rate: zero cases and hand evaluation") {
    channel::params p;
    p.rb_bandwidth = 180e3;
    p.blocklength = 168;
    p.decode_err = 1e-5;

    CHECK(channel::achievable_rate(p, 0.0, 3.0, 1e-6) == 0.0);
    CHECK(channel::achievable_rate(p, 1.0, 0.0, 1e-6) == 0.0);

    // snr = 10 exactly: gain chosen as 10*n0*w per unit power
    const double gain = 10.0 * p.noise_density * p.rb_bandwidth;
    const double expected =
        180e3 * std::log2(11.0) -
        std::sqrt((1.0 - 1.0 / 11.0) / 168.0) * q_inv_oracle(1e-5);
    CHECK(channel::achievable_rate(p, 1.0, 1.0, gain) ==
          Catch::Approx(expected).epsilon(1e-9));

    // relaxed assignment scales linearly
    CHECK(channel::achievable_rate(p, 0.25, 1.0, gain) ==
          Catch::Approx(0.25 * expected).epsilon(1e-9));
}

TEST_CASE("achievable rate clamps below zero at tiny snr") {
    channel::params p;
    const double gain = 1e-12 * p.noise_density * p.rb_bandwidth;  // snr = 1e-12
    const auto parts = channel::rate_components(p, 1.0, gain);
    CHECK(parts.shannon - parts.penalty < 0.0);
    CHECK(channel::achievable_rate(p, 1.0, 1.0, gain) == 0.0);
}

TEST_CASE("achievable rate monotone in power once clamp inactive") {
    channel::params p;
    const double gain = 5e-8;
    double prev = 0.0;
    for (double w = 1e-9; w < 10.0; w *= 3.0) {
        const double r = channel::achievable_rate(p, 1.0, w, gain);
        CHECK(r >= prev);
        prev = r;
    }
}

TEST_CASE("rate without penalty equals the Shannon term") {
    channel::params p;
    const double gain = 3.3e-8;
    for (double w : {1e-6, 1e-3, 0.5, 8.0}) {
        const auto parts = channel::rate_components(p, w, gain);
        CHECK(channel::shannon_rate(p, 1.0, w, gain) ==
              Catch::Approx(parts.shannon).epsilon(1e-12));
        CHECK(channel::achievable_rate(p, 1.0, w, gain) ==
              Catch::Approx(parts.shannon - parts.penalty).epsilon(1e-12));
    }
}

TEST_CASE("params validation") {
    channel::params p;
    CHECK_NOTHROW(p.validate());
    p.decode_err = 0.7;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = channel::params{};
    p.gamma0 = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = channel::params{};
    p.blocklength = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
