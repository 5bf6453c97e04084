#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

// Physical-layer math for the air-to-ground link: distance-based path
// gain, Rician small-scale fading, and the short-packet achievable rate
//
//   r = a * [ w*log2(1 + snr) - sqrt(V/n) * Qinv(theta) ],
//   V = 1 - 1/(1 + snr),
//
// clamped below at zero. All quantities are linear (conversions from
// dB happen at configuration load).

namespace uavsched::channel {

struct params {
    double gamma0 = 1e-3;            // power gain at ref_distance (linear)
    double pathloss_exp = 2.0;
    double noise_density = 3.9810717055349695e-21;  // W/Hz (-174 dBm/Hz)
    double rb_bandwidth = 180e3;     // Hz per resource block
    double rician_k = 10.0;          // linear
    int blocklength = 168;           // channel uses per slot
    double decode_err = 1e-5;
    double ref_distance = 1.0;       // m

    void validate() const {
        if (!(gamma0 > 0)) throw std::invalid_argument("channel: gamma0 must be > 0");
        if (!(pathloss_exp > 0)) throw std::invalid_argument("channel: pathloss_exp must be > 0");
        if (!(noise_density > 0)) throw std::invalid_argument("channel: noise_density must be > 0");
        if (!(rb_bandwidth > 0)) throw std::invalid_argument("channel: rb_bandwidth must be > 0");
        if (!(rician_k >= 0)) throw std::invalid_argument("channel: rician_k must be >= 0");
        if (blocklength < 1) throw std::invalid_argument("channel: blocklength must be >= 1");
        if (!(decode_err > 0 && decode_err <= 0.5))
            throw std::invalid_argument("channel: decode_err must be in (0, 0.5]");
    }
};

struct pos2 {
    double x = 0, y = 0;
};

struct pos3 {
    double x = 0, y = 0, h = 0;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

inline double distance(const pos3& uav, const pos2& user) {
    const double dx = uav.x - user.x;
    const double dy = uav.y - user.y;
    return std::sqrt(uav.h * uav.h + dx * dx + dy * dy);
}

// gamma0 * d^(-theta); gamma0 is referenced to d0 = 1 m.
inline double path_gain(const params& p, const pos3& uav, const pos2& user) {
    return p.gamma0 * std::pow(distance(uav, user), -p.pathloss_exp);
}

struct fading_sample {
    std::complex<double> rho;
    double power() const { return std::norm(rho); }
};

// Rician: deterministic LoS part (unit magnitude, phase fixed at zero)
// plus a CSCG scattered part with unit variance, so E|rho|^2 = 1.
template <class Rng>
fading_sample sample_fading(const params& p, Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    const double k = p.rician_k;
    const double los = std::sqrt(k / (k + 1.0));
    const double nlos = std::sqrt(0.5 / (k + 1.0));
    const double re = n01(rng);
    const double im = n01(rng);
    return {std::complex<double>(los + nlos * re, nlos * im)};
}

// Gaussian tail Q(x) = P[N(0,1) > x].
inline double q_func(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

namespace detail {
// Acklam's rational approximation to the standard normal quantile,
// good to ~1e-9 relative; used only to seed Newton.
inline double norm_quantile_approx(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}
}  // namespace detail

// Inverse of q_func, refined with Newton steps on 0.5*erfc(x/sqrt(2)).
inline double q_inv(double theta) {
    if (!(theta > 0.0 && theta < 1.0))
        throw std::domain_error("q_inv: theta must be in (0, 1)");
    double x = -detail::norm_quantile_approx(theta);  // Q(x) = theta <=> x = Phi^{-1}(1-theta)
    const double inv_sqrt2pi = 0.3989422804014327;
    for (int i = 0; i < 4; ++i) {
        const double f = q_func(x) - theta;
        const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
        if (pdf == 0.0) break;
        const double step = f / pdf;  // Q' = -pdf
        x += step;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    return x;
}

inline double dispersion(double snr) { return 1.0 - 1.0 / (1.0 + snr); }

struct rate_parts {
    double shannon;  // w*log2(1+snr), bit/s
    double penalty;  // sqrt(V/n)*Qinv(theta)
};

inline rate_parts rate_components(const params& p, double power_w, double gain) {
    const double snr = power_w * gain / (p.noise_density * p.rb_bandwidth);
    rate_parts out;
    out.shannon = p.rb_bandwidth * std::log2(1.0 + snr);
    out.penalty = std::sqrt(dispersion(snr) / static_cast<double>(p.blocklength)) * q_inv(p.decode_err);
    return out;
}

// Short-packet rate; `assigned` may be fractional in relaxed mode.
inline double achievable_rate(const params& p, double assigned, double power_w, double gain) {
    if (assigned <= 0.0 || power_w <= 0.0 || gain <= 0.0) return 0.0;
    const rate_parts c = rate_components(p, power_w, gain);
    return assigned * std::max(0.0, c.shannon - c.penalty);
}

inline double shannon_rate(const params& p, double assigned, double power_w, double gain) {
    if (assigned <= 0.0 || power_w <= 0.0 || gain <= 0.0) return 0.0;
    return assigned * rate_components(p, power_w, gain).shannon;
}

}  // namespace uavsched::channel
