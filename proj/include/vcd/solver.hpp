#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <ostream>
#include <vector>

#include "vcd/errors.hpp"
#include "vcd/forward_model.hpp"
#include "vcd/image.hpp"
#include "vcd/light_field.hpp"

namespace vcd {

struct SolverOptions {
    int max_iterations = 500;
    /// Convergence: per-iteration residual drop below tolerance * initial
    /// residual.
    double relative_residual_tolerance = 1e-4;
    bool momentum = true;
    int power_iterations = 50;
    double step_safety = 0.95;
    int threads = 0;

    void validate() const {
        if (max_iterations < 1) throw NumericError("solver: max_iterations must be >= 1");
        if (!(relative_residual_tolerance > 0.0))
            throw NumericError("solver: tolerance must be positive");
        if (power_iterations < 1) throw NumericError("solver: power_iterations must be >= 1");
    }
};

struct PrefilterResult {
    LightField4D light_field;
    /// One history per channel; entry k is ||P*L - target||_2 after k
    /// accepted iterations (entry 0 is the initial residual).
    std::vector<std::vector<double>> residual_history;
    int iterations_used = 0;
    bool converged = false;
};

/// Largest singular value of P, estimated by power iteration on P^T P.
inline double estimate_spectral_norm(const PrefilterMatrix& P, int iterations, int threads = 0) {
    std::vector<double> v(static_cast<std::size_t>(P.cols()), 1.0);
    std::vector<double> y, w;
    double norm2 = 0.0;
    for (int it = 0; it < iterations; ++it) {
        P.apply(v, y, threads);
        P.apply_transpose(y, w, threads);
        norm2 = 0.0;
        for (double x : w) norm2 += x * x;
        norm2 = std::sqrt(norm2);
        if (norm2 <= 0.0) return 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / norm2;
    }
    return std::sqrt(norm2);  // ||P^T P v|| -> sigma_max^2
}

/// Target image replicated across the angular grid: the target is resampled
/// to the spatial resolution and copied into every angular sample, clamped
/// to [0,1].
inline LightField4D initial_guess(const Image& target, const LightFieldGrid& grid) {
    Image spatial = resample_bilinear(target, grid.n_x, grid.n_y);
    LightField4D lf = grid.make_field(target.channels);
    for (int j = 0; j < grid.n_y; ++j)
        for (int i = 0; i < grid.n_x; ++i)
            for (int b = 0; b < grid.n_v; ++b)
                for (int a = 0; a < grid.n_u; ++a)
                    for (int ch = 0; ch < target.channels; ++ch)
                        lf.at(i, j, a, b, ch) = std::clamp(spatial.at(j, i, ch), 0.0, 1.0);
    return lf;
}

namespace detail {

inline double residual_norm(const PrefilterMatrix& P, const std::vector<double>& x,
                            const std::vector<double>& t, std::vector<double>& scratch,
                            int threads) {
    P.apply(x, scratch, threads);
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double d = scratch[i] - t[i];
        s += d * d;
    }
    return std::sqrt(s);
}

/// One projected-gradient step from `from` with step size alpha.
inline void pg_step(const PrefilterMatrix& P, const std::vector<double>& from,
                    const std::vector<double>& t, double alpha, std::vector<double>& out,
                    std::vector<double>& r, std::vector<double>& g, int threads) {
    P.apply(from, r, threads);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= t[i];
    P.apply_transpose(r, g, threads);
    out.resize(from.size());
    for (std::size_t i = 0; i < from.size(); ++i)
        out[i] = std::clamp(from[i] - alpha * g[i], 0.0, 1.0);
}

inline std::vector<double> solve_channel(const PrefilterMatrix& P, const std::vector<double>& t,
                                         std::vector<double> x, double alpha,
                                         const SolverOptions& opts, std::vector<double>& history,
                                         int& iterations, bool& converged) {
    std::vector<double> scratch, grad, candidate, prev = x, y = x;
    double res = residual_norm(P, x, t, scratch, opts.threads);
    const double res0 = res;
    history.clear();
    history.push_back(res);
    double momentum_t = 1.0;
    converged = false;
    iterations = 0;
    for (int it = 0; it < opts.max_iterations; ++it) {
        bool used_momentum = false;
        if (opts.momentum && it > 0) {
            pg_step(P, y, t, alpha, candidate, scratch, grad, opts.threads);
            used_momentum = true;
        } else {
            pg_step(P, x, t, alpha, candidate, scratch, grad, opts.threads);
        }
        double cand_res = residual_norm(P, candidate, t, scratch, opts.threads);
        if (cand_res > res && used_momentum) {
            // Momentum overshoot: restart from the last accepted iterate.
            momentum_t = 1.0;
            pg_step(P, x, t, alpha, candidate, scratch, grad, opts.threads);
            cand_res = residual_norm(P, candidate, t, scratch, opts.threads);
        }
        if (cand_res > res) {
            // Plain projected step with a safe step size cannot ascend;
            // treat numerically flat progress as a fixed point.
            converged = true;
            break;
        }
        prev.swap(x);
        x = candidate;
        assert(std::all_of(x.begin(), x.end(), [](double v) { return v >= 0.0 && v <= 1.0; }));
        if (opts.momentum) {
            double t_next = (1.0 + std::sqrt(1.0 + 4.0 * momentum_t * momentum_t)) / 2.0;
            double beta = (momentum_t - 1.0) / t_next;
            momentum_t = t_next;
            y.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + beta * (x[i] - prev[i]);
        }
        double drop = res - cand_res;
        res = cand_res;
        history.push_back(res);
        iterations = it + 1;
        if (drop < opts.relative_residual_tolerance * std::max(res0, 1e-30)) {
            converged = true;
            break;
        }
    }
    return x;
}

}  // namespace detail

/// Box-constrained least squares per channel:
///   minimize ||P*L - target||^2 over 0 <= L <= 1,
/// by projected gradient with optional Nesterov momentum and restart on
/// residual increase, so the recorded history is non-increasing. The step
/// size is step_safety / sigma_max(P)^2.
inline PrefilterResult solve_prefilter(const PrefilterMatrix& P, const Image& target,
                                       const SolverOptions& opts) {
    opts.validate();
    const SceneGeometry& geom = P.geometry();
    if (target.width != geom.retina_cols || target.height != geom.retina_rows)
        throw NumericError("solve_prefilter: target does not match operator geometry");
    for (double v : target.data)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw NumericError("solve_prefilter: target values must be finite and in [0,1]");

    double sigma = estimate_spectral_norm(P, opts.power_iterations, opts.threads);
    if (!(sigma > 0.0)) throw NumericError("solve_prefilter: operator has zero spectral norm");
    const double alpha = opts.step_safety / (sigma * sigma);

    PrefilterResult result;
    result.light_field = initial_guess(target, P.grid());
    result.residual_history.resize(target.channels);
    result.converged = true;
    result.iterations_used = 0;

    const std::size_t n = result.light_field.samples_per_channel();
    std::vector<double> t(static_cast<std::size_t>(P.rows()));
    std::vector<double> x(n);
    for (int ch = 0; ch < target.channels; ++ch) {
        for (int r = 0; r < target.height; ++r)
            for (int c = 0; c < target.width; ++c)
                t[static_cast<std::size_t>(r) * target.width + c] = target.at(r, c, ch);
        for (std::size_t s = 0; s < n; ++s)
            x[s] = result.light_field.radiance[s * target.channels + ch];
        int iters = 0;
        bool conv = false;
        x = detail::solve_channel(P, t, std::move(x), alpha, opts,
                                  result.residual_history[ch], iters, conv);
        for (std::size_t s = 0; s < n; ++s)
            result.light_field.radiance[s * target.channels + ch] = x[s];
        result.iterations_used = std::max(result.iterations_used, iters);
        result.converged = result.converged && conv;
    }
    return result;
}

/// CSV with header "iteration,residual[,...]": one column per channel.
inline void write_residual_csv(const PrefilterResult& result, std::ostream& os) {
    const std::size_t channels = result.residual_history.size();
    os << "iteration";
    if (channels == 1)
        os << ",residual";
    else
        for (std::size_t ch = 0; ch < channels; ++ch) os << ",residual_" << ch;
    os << '\n';
    std::size_t longest = 0;
    for (const auto& h : result.residual_history) longest = std::max(longest, h.size());
    for (std::size_t it = 0; it < longest; ++it) {
        os << it;
        for (const auto& h : result.residual_history)
            os << ',' << (it < h.size() ? h[it] : h.empty() ? 0.0 : h.back());
        os << '\n';
    }
}

}  // namespace vcd
