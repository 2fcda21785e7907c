#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "microdata/errors.hpp"
#include "microdata/rng.hpp"
#include "microdata/types.hpp"

namespace microdata::gp {

enum class KernelType { SquaredExponential, Matern52 };

/// Stationary ARD covariance: k(x, x) = signal_variance, one length scale
/// per input dimension.
struct KernelSpec {
    KernelType type = KernelType::SquaredExponential;
    double signal_variance = 1.0;
    Vec length_scales; // one per input dimension, all > 0

    int dim() const { return static_cast<int>(length_scales.size()); }

    static KernelSpec ard(KernelType type, double signal_variance, int dim, double length_scale)
    {
        KernelSpec k;
        k.type = type;
        k.signal_variance = signal_variance;
        k.length_scales = Vec::Constant(dim, length_scale);
        return k;
    }
};

double kernel_eval(const KernelSpec& spec, const Vec& x, const Vec& y);

using MeanFn = std::function<double(const Vec&)>;

/// Fitted Gaussian-process posterior. Immutable once built: concurrent
/// reads are safe.
struct GpModel {
    KernelSpec kernel;
    double noise_variance = 1e-6;
    MeanFn prior_mean;    // empty => constant zero
    Mat inputs;           // n x d
    Vec targets;          // n
    Vec residuals;        // targets - prior_mean(inputs)
    Mat chol;             // lower factor L of K + (noise_variance + jitter) I
    Vec alpha;            // (K + (noise_variance + jitter) I)^-1 residuals
    double jitter = 0.0;  // extra diagonal added to achieve factorization

    int size() const { return static_cast<int>(targets.size()); }
    int dim() const { return kernel.dim(); }
    double mean_at(const Vec& x) const { return prior_mean ? prior_mean(x) : 0.0; }
    double best_target() const; // max observed target; EmptyModel if none
};

/// Fits the posterior. Data may be empty (predictions then fall back to the
/// prior). Escalates diagonal jitter 1e-10 -> 1e-6 (x10 steps) if the
/// factorization fails; throws FactorizationFailure past that.
GpModel gp_fit(KernelSpec kernel, double noise_variance, MeanFn prior_mean,
               const Mat& inputs, const Vec& targets);

GpModel gp_fit(KernelSpec kernel, double noise_variance, MeanFn prior_mean,
               const std::vector<std::pair<Vec, double>>& data);

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

/// Posterior mean and (latent, noise-free) variance at x. Variance is
/// clamped into [0, signal_variance + noise_variance].
Prediction gp_predict(const GpModel& model, const Vec& x);

double log_marginal_likelihood(const GpModel& model);

/// Gradient of the log marginal likelihood w.r.t. log hyperparameters, in
/// the order (log signal_variance, log length_scale_0.., log noise_variance);
/// length = 2 + d.
Vec lml_gradient(const GpModel& model);

/// Box bounds in log space for hyperparameter search.
struct HyperBounds {
    double log_signal_variance_min = std::log(1e-4);
    double log_signal_variance_max = std::log(1e2);
    double log_length_scale_min = std::log(1e-2);
    double log_length_scale_max = std::log(1e1);
    double log_noise_variance_min = std::log(1e-8);
    double log_noise_variance_max = std::log(1e-1);
};

struct HyperOptConfig {
    int restarts = 8;
    int max_ascent_iters = 60;
    double initial_step = 0.5;
    double min_step = 1e-10;
    double grad_tolerance = 1e-6;
    HyperBounds bounds;
    // When set, restart 0 starts here instead of a random point.
    std::optional<std::pair<KernelSpec, double>> warm_start;
};

struct HyperOptResult {
    KernelSpec kernel;
    double noise_variance = 0.0;
    double lml = 0.0;
};

/// Multistart gradient ascent with backtracking line search over
/// log-hyperparameters. Deterministic given the rng state.
HyperOptResult optimize_hyperparams(KernelType type, const Mat& inputs, const Vec& targets,
                                    const MeanFn& prior_mean, const HyperOptConfig& config,
                                    Rng& rng);

} // namespace microdata::gp
