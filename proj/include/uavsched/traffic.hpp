#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavsched/toeplitz.hpp"

// Online traffic-load prediction with Gaussian process regression under
// the periodic kernel
//
//   g(a, b) = exp( -sin^2( pi*(a - b)/theta2 ) / theta1 ),
//
// evaluated on time indices. Posterior mean/variance come from the
// standard noisy-GP equations with a zero prior mean; hyperparameters
// are fitted by exact log-marginal-likelihood search over a fixed
// log-spaced grid. Windows hold contiguous slots, so their Gram
// matrices are Toeplitz and the grid search runs through the Levinson
// recursion instead of dense factorizations.

namespace uavsched::traffic {

struct dataset_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct kernel_params {
    double theta1 = 1.0;    // length hyperparameter
    double theta2 = 150.0;  // period hyperparameter (slots)
    double noise_var = 1e-4;

    void validate() const {
        if (!(theta1 > 0)) throw std::invalid_argument("kernel: theta1 must be > 0");
        if (!(theta2 > 0)) throw std::invalid_argument("kernel: theta2 must be > 0");
        if (!(noise_var >= 0)) throw std::invalid_argument("kernel: noise_var must be >= 0");
    }
    friend bool operator==(const kernel_params&, const kernel_params&) = default;
};

inline double periodic_kernel(double a, double b, const kernel_params& p) {
    const double s = std::sin(M_PI * (a - b) / p.theta2);
    return std::exp(-s * s / p.theta1);
}

// Sliding window of the last N normalized load observations on
// contiguous integer slots.
class window {
  public:
    explicit window(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("window: capacity must be >= 1");
    }

    void slide(double value, std::int64_t slot) {
        if (!values_.empty() && slot != first_time_ + static_cast<std::int64_t>(values_.size()))
            throw std::invalid_argument("window: non-contiguous slot index");
        if (!(value >= 0.0 && value <= 1.0) || !std::isfinite(value))
            throw std::invalid_argument("window: load value outside [0, 1]");
        if (values_.empty()) first_time_ = slot;
        values_.push_back(value);
        if (values_.size() > capacity_) {
            values_.erase(values_.begin());
            ++first_time_;
        }
    }

    std::size_t size() const { return values_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool full() const { return values_.size() == capacity_; }
    bool empty() const { return values_.empty(); }
    const std::vector<double>& values() const { return values_; }
    std::int64_t first_time() const { return first_time_; }
    std::int64_t last_time() const {
        return first_time_ + static_cast<std::int64_t>(values_.size()) - 1;
    }
    std::int64_t time_at(std::size_t i) const {
        return first_time_ + static_cast<std::int64_t>(i);
    }

  private:
    std::size_t capacity_;
    std::int64_t first_time_ = 0;
    std::vector<double> values_;
};

struct prediction {
    double mean = 0.0;
    double variance = 0.0;
};

inline Eigen::MatrixXd build_gram(std::span<const double> times, const kernel_params& p) {
    if (times.empty()) throw std::invalid_argument("build_gram: empty input");
    const Eigen::Index n = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        g(i, i) = 1.0 + p.noise_var;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = periodic_kernel(times[i], times[j], p);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

inline Eigen::MatrixXd build_gram(const window& w, const kernel_params& p) {
    std::vector<double> times(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) times[i] = static_cast<double>(w.time_at(i));
    return build_gram(times, p);
}

// Zero-mean GP posterior at an arbitrary query input; dense SPD solve.
inline prediction gp_posterior(std::span<const double> times, std::span<const double> values,
                               const kernel_params& p, double query) {
    if (times.size() != values.size() || times.size() < 2)
        throw std::invalid_argument("gp_posterior: need >= 2 observations");
    const Eigen::MatrixXd g = build_gram(times, p);
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(
            "gp_posterior: Gram factorization failed; refit hyperparameters with a larger "
            "noise floor");
    const Eigen::Index n = g.rows();
    Eigen::VectorXd k(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k[i] = periodic_kernel(query, times[i], p);
        y[i] = values[i];
    }
    const Eigen::VectorXd alpha = llt.solve(y);
    const Eigen::VectorXd ginv_k = llt.solve(k);
    prediction out;
    out.mean = k.dot(alpha);
    const double prior = periodic_kernel(query, query, p);
    out.variance = std::clamp(prior - k.dot(ginv_k), 0.0, prior);
    return out;
}

inline prediction predict_next(const window& w, const kernel_params& p) {
    std::vector<double> times(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) times[i] = static_cast<double>(w.time_at(i));
    return gp_posterior(times, w.values(), p, static_cast<double>(w.last_time() + 1));
}

inline double log_marginal(std::span<const double> times, std::span<const double> values,
                           const kernel_params& p) {
    const Eigen::MatrixXd g = build_gram(times, p);
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Eigen::Index n = g.rows();
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = values[i];
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const double quad = y.dot(llt.solve(y));
    return -0.5 * (quad + logdet + static_cast<double>(n) * std::log(2.0 * M_PI));
}

inline double log_marginal(const window& w, const kernel_params& p) {
    std::vector<double> times(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) times[i] = static_cast<double>(w.time_at(i));
    return log_marginal(times, w.values(), p);
}

// Fixed hyperparameter search grid, log-spaced per axis.
struct fit_grid {
    std::vector<double> theta1s;
    std::vector<double> theta2s;
    std::vector<double> noise_vars;

    static std::vector<double> log_space(double lo, double hi, int k) {
        std::vector<double> v(k);
        for (int i = 0; i < k; ++i)
            v[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (k - 1));
        return v;
    }
    // The period axis extends one octave past the window: a period equal
    // to the window length makes the one-step query alias the window's
    // oldest point (lag N = one full period), which the in-sample
    // likelihood cannot falsify, while periods beyond N behave as smooth
    // local models at the query.
    static fit_grid for_window(std::size_t n) {
        fit_grid g;
        g.theta1s = log_space(1e-2, 1e2, 9);
        g.theta2s = log_space(2.0, std::max(2.5, 2.0 * static_cast<double>(n)), 12);
        g.noise_vars = log_space(1e-6, 1e-1, 6);
        return g;
    }
};

struct fit_result {
    kernel_params params;
    bool degenerate = false;
    double log_likelihood = -std::numeric_limits<double>::infinity();
};

// Exact marginal-likelihood grid search for a batch of equal-length
// contiguous windows. The Gram matrix at a grid point is shared by all
// windows (Toeplitz, data-independent), so one Levinson pass per point
// serves every window's quadratic form.
inline std::vector<fit_result> fit_hyperparams_many(std::span<const window* const> windows) {
    if (windows.empty()) return {};
    const std::size_t n = windows.front()->size();
    if (n < 10) throw std::invalid_argument("fit_hyperparams: need >= 10 observations");
    for (const window* w : windows)
        if (w->size() != n)
            throw std::invalid_argument("fit_hyperparams_many: windows must have equal length");

    const std::size_t u = windows.size();
    std::vector<fit_result> out(u);
    std::vector<bool> degenerate(u, false);
    Eigen::MatrixXd ys(n, u);
    for (std::size_t j = 0; j < u; ++j) {
        const auto& v = windows[j]->values();
        double lo = v[0], hi = v[0];
        for (std::size_t i = 0; i < n; ++i) {
            ys(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i];
            lo = std::min(lo, v[i]);
            hi = std::max(hi, v[i]);
        }
        if (hi - lo < 1e-12) degenerate[j] = true;
    }

    const fit_grid grid = fit_grid::for_window(n);
    const double c = static_cast<double>(n) * std::log(2.0 * M_PI);
    Eigen::VectorXd base(static_cast<Eigen::Index>(n));
    for (double t1 : grid.theta1s) {
        for (double t2 : grid.theta2s) {
            for (Eigen::Index d = 0; d < static_cast<Eigen::Index>(n); ++d) {
                const double s = std::sin(M_PI * static_cast<double>(d) / t2);
                base[d] = std::exp(-s * s / t1);
            }
            for (double nv : grid.noise_vars) {
                Eigen::VectorXd col = base;
                col[0] += nv;
                const auto q = toeplitz::quad_forms(col, ys);
                if (!q.positive_definite) continue;
                for (std::size_t j = 0; j < u; ++j) {
                    const double ll = -0.5 * (q.quad[static_cast<Eigen::Index>(j)] + q.log_det + c);
                    if (ll > out[j].log_likelihood) {
                        out[j].log_likelihood = ll;
                        out[j].params = kernel_params{t1, t2, nv};
                    }
                }
            }
        }
    }

    for (std::size_t j = 0; j < u; ++j) {
        if (degenerate[j] || !std::isfinite(out[j].log_likelihood)) {
            out[j].params = kernel_params{1.0, static_cast<double>(n) / 4.0, 1e-4};
            out[j].degenerate = true;
        }
    }
    return out;
}

inline fit_result fit_hyperparams(const window& w) {
    const window* p = &w;
    return fit_hyperparams_many(std::span<const window* const>(&p, 1)).front();
}

// --- tabular ingestion -------------------------------------------------

struct ingest_options {
    char delimiter = ',';
    std::string time_column = "Date";
    std::string value_column = "Close";
    std::size_t min_rows = 0;  // 0 disables the check
};

struct series {
    std::vector<double> values;  // min-max normalized to [0, 1]
    std::size_t rejected_rows = 0;
    bool degenerate_scale = false;
    double raw_min = 0.0;
    double raw_max = 0.0;
};

namespace detail {
inline std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, delim)) out.push_back(cell);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}
}  // namespace detail

inline series ingest_series(std::istream& in, const ingest_options& opt = {}) {
    std::string line;
    if (!std::getline(in, line)) throw dataset_error("ingest: empty input, header row required");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split(line, opt.delimiter);
    std::ptrdiff_t value_idx = -1, time_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == opt.value_column) value_idx = static_cast<std::ptrdiff_t>(i);
        if (header[i] == opt.time_column) time_idx = static_cast<std::ptrdiff_t>(i);
    }
    if (value_idx < 0)
        throw dataset_error("ingest: value column '" + opt.value_column + "' not found");
    if (time_idx < 0)
        throw dataset_error("ingest: time column '" + opt.time_column + "' not found");

    series out;
    std::vector<double> raw;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split(line, opt.delimiter);
        if (cells.size() <= static_cast<std::size_t>(value_idx)) {
            ++out.rejected_rows;
            continue;
        }
        const std::string& cell = cells[static_cast<std::size_t>(value_idx)];
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0' || !std::isfinite(v)) {
            ++out.rejected_rows;
            continue;
        }
        raw.push_back(v);
    }
    if (raw.empty()) throw dataset_error("ingest: no usable rows");
    if (opt.min_rows > 0 && raw.size() < opt.min_rows)
        throw dataset_error("ingest: only " + std::to_string(raw.size()) +
                            " usable rows, need >= " + std::to_string(opt.min_rows));

    out.raw_min = *std::min_element(raw.begin(), raw.end());
    out.raw_max = *std::max_element(raw.begin(), raw.end());
    const double scale = out.raw_max - out.raw_min;
    out.values.resize(raw.size());
    if (scale <= 0.0) {
        std::fill(out.values.begin(), out.values.end(), 0.5);
        out.degenerate_scale = true;
    } else {
        for (std::size_t i = 0; i < raw.size(); ++i)
            out.values[i] = (raw[i] - out.raw_min) / scale;
    }
    return out;
}

inline series ingest_file(const std::string& path, const ingest_options& opt = {}) {
    std::ifstream in(path);
    if (!in) throw dataset_error("ingest: cannot open '" + path + "'");
    return ingest_series(in, opt);
}

// --- rolling one-step predictor ----------------------------------------
//
// For a full contiguous window the Gram matrix and the query kernel
// vector depend only on (params, length), so the solve weights
// w = G^{-1} k* can be cached: a slide costs O(N) and refreshing the
// cache costs one factorization.
class predictor {
  public:
    predictor(std::size_t capacity, kernel_params params = {})
        : win_(capacity), params_(params) {}

    void observe(double value, std::int64_t slot) { win_.slide(value, slot); }

    const window& win() const { return win_; }
    const kernel_params& params() const { return params_; }

    void set_params(const kernel_params& p) {
        p.validate();
        params_ = p;
        cache_valid_ = false;
    }

    fit_result refit() {
        const fit_result r = fit_hyperparams(win_);
        set_params(r.params);
        return r;
    }

    prediction predict() const {
        const std::size_t n = win_.size();
        if (n < 2) throw std::invalid_argument("predictor: need >= 2 observations");
        if (!cache_valid_ || cached_n_ != n) refresh_cache();
        prediction out;
        double acc = 0.0;
        const auto& v = win_.values();
        for (std::size_t i = 0; i < n; ++i) acc += weights_[static_cast<Eigen::Index>(i)] * v[i];
        out.mean = acc;
        out.variance = cached_variance_;
        return out;
    }

  private:
    void refresh_cache() const {
        const std::size_t n = win_.size();
        std::vector<double> times(n);
        for (std::size_t i = 0; i < n; ++i) times[i] = static_cast<double>(i);
        const Eigen::MatrixXd g = build_gram(times, params_);
        Eigen::LLT<Eigen::MatrixXd> llt(g);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error(
                "predictor: Gram factorization failed; refit hyperparameters with a larger "
                "noise floor");
        Eigen::VectorXd k(static_cast<Eigen::Index>(n));
        const double q = static_cast<double>(n);  // query offset: one past the window
        for (std::size_t i = 0; i < n; ++i)
            k[static_cast<Eigen::Index>(i)] = periodic_kernel(q, times[i], params_);
        weights_ = llt.solve(k);
        const double prior = periodic_kernel(q, q, params_);
        cached_variance_ = std::clamp(prior - k.dot(weights_), 0.0, prior);
        cached_n_ = n;
        cache_valid_ = true;
    }

    window win_;
    kernel_params params_;
    mutable bool cache_valid_ = false;
    mutable std::size_t cached_n_ = 0;
    mutable Eigen::VectorXd weights_;
    mutable double cached_variance_ = 0.0;
};

}  // namespace uavsched::traffic
