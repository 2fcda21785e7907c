#include "microdata/gp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

namespace microdata::gp {

namespace {

constexpr double k_sqrt5 = 2.2360679774997896964091736687747;
constexpr double k_log_2pi = 1.8378770664093454835606594728112;

void validate_kernel(const KernelSpec& spec)
{
    if (!std::isfinite(spec.signal_variance) || spec.signal_variance <= 0.0)
        throw std::invalid_argument("signal_variance must be finite and > 0");
    if (spec.length_scales.size() == 0)
        throw std::invalid_argument("kernel has no length scales");
    for (int i = 0; i < spec.length_scales.size(); ++i) {
        const double l = spec.length_scales[i];
        if (!std::isfinite(l) || l <= 0.0)
            throw std::invalid_argument("length scales must be finite and > 0");
    }
}

/// Scaled squared distance sum_i ((x_i - y_i) / l_i)^2.
double scaled_sqdist(const KernelSpec& spec, const Vec& x, const Vec& y)
{
    return ((x - y).cwiseQuotient(spec.length_scales)).squaredNorm();
}

double kernel_from_sqdist(const KernelSpec& spec, double s2)
{
    switch (spec.type) {
    case KernelType::SquaredExponential:
        return spec.signal_variance * std::exp(-0.5 * s2);
    case KernelType::Matern52: {
        const double r = std::sqrt(s2);
        const double a = k_sqrt5 * r;
        return spec.signal_variance * (1.0 + a + 5.0 * s2 / 3.0) * std::exp(-a);
    }
    }
    return 0.0;
}

/// Kernel matrix of the training inputs (signal part only).
Mat gram_matrix(const KernelSpec& spec, const Mat& inputs)
{
    const int n = static_cast<int>(inputs.rows());
    Mat k(n, n);
    for (int i = 0; i < n; ++i) {
        k(i, i) = spec.signal_variance;
        for (int j = 0; j < i; ++j) {
            const double s2 = scaled_sqdist(spec, inputs.row(i), inputs.row(j));
            const double v = kernel_from_sqdist(spec, s2);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

/// Cross-covariances between every training input and a query point.
Vec cross_vector(const KernelSpec& spec, const Mat& inputs, const Vec& x)
{
    const int n = static_cast<int>(inputs.rows());
    Vec k(n);
    Vec scaled = x.cwiseQuotient(spec.length_scales);
    for (int i = 0; i < n; ++i) {
        const double s2 = (inputs.row(i).transpose().cwiseQuotient(spec.length_scales) - scaled).squaredNorm();
        k[i] = kernel_from_sqdist(spec, s2);
    }
    return k;
}

} // namespace

double kernel_eval(const KernelSpec& spec, const Vec& x, const Vec& y)
{
    validate_kernel(spec);
    if (x.size() != spec.length_scales.size() || y.size() != spec.length_scales.size())
        throw DimensionMismatch("kernel_eval: input dimension does not match length scales");
    if (!all_finite(x) || !all_finite(y))
        throw NonFiniteInput("kernel_eval: non-finite input");
    return kernel_from_sqdist(spec, scaled_sqdist(spec, x, y));
}

double GpModel::best_target() const
{
    if (targets.size() == 0)
        throw EmptyModel("best_target: model has no data");
    return targets.maxCoeff();
}

GpModel gp_fit(KernelSpec kernel, double noise_variance, MeanFn prior_mean,
               const Mat& inputs, const Vec& targets)
{
    validate_kernel(kernel);
    if (!std::isfinite(noise_variance) || noise_variance < 0.0)
        throw std::invalid_argument("noise_variance must be finite and >= 0");
    if (inputs.rows() != targets.size())
        throw DimensionMismatch("gp_fit: inputs/targets length mismatch");
    if (inputs.rows() > 0 && inputs.cols() != kernel.dim())
        throw DimensionMismatch("gp_fit: input dimension does not match kernel");
    if (!targets.allFinite() || !inputs.allFinite())
        throw NonFiniteInput("gp_fit: non-finite data");

    GpModel model;
    model.kernel = std::move(kernel);
    model.noise_variance = noise_variance;
    model.prior_mean = std::move(prior_mean);
    model.inputs = inputs;
    model.targets = targets;

    const int n = static_cast<int>(targets.size());
    model.residuals = Vec(n);
    for (int i = 0; i < n; ++i)
        model.residuals[i] = targets[i] - model.mean_at(inputs.row(i));

    if (n == 0) {
        model.chol = Mat(0, 0);
        model.alpha = Vec(0);
        return model;
    }

    const Mat gram = gram_matrix(model.kernel, inputs);
    double jitter = 0.0;
    while (true) {
        Mat reg = gram;
        reg.diagonal().array() += noise_variance + jitter;
        Eigen::LLT<Mat> llt(reg);
        if (llt.info() == Eigen::Success) {
            model.chol = llt.matrixL();
            model.alpha = llt.solve(model.residuals);
            model.jitter = jitter;
            return model;
        }
        if (jitter == 0.0)
            jitter = 1e-10;
        else if (jitter < 1e-6)
            jitter *= 10.0;
        else
            throw FactorizationFailure("gp_fit: Cholesky failed after jitter escalation to 1e-6");
    }
}

GpModel gp_fit(KernelSpec kernel, double noise_variance, MeanFn prior_mean,
               const std::vector<std::pair<Vec, double>>& data)
{
    const int d = kernel.dim();
    Mat inputs(static_cast<int>(data.size()), d);
    Vec targets(static_cast<int>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].first.size() != d)
            throw DimensionMismatch("gp_fit: data point dimension does not match kernel");
        inputs.row(static_cast<int>(i)) = data[i].first;
        targets[static_cast<int>(i)] = data[i].second;
    }
    return gp_fit(std::move(kernel), noise_variance, std::move(prior_mean), inputs, targets);
}

Prediction gp_predict(const GpModel& model, const Vec& x)
{
    if (x.size() != model.kernel.length_scales.size())
        throw DimensionMismatch("gp_predict: query dimension does not match model");
    if (!all_finite(x))
        throw NonFiniteInput("gp_predict: non-finite query");

    Prediction out;
    if (model.size() == 0) {
        out.mean = model.mean_at(x);
        out.variance = model.kernel.signal_variance;
        return out;
    }

    const Vec k_star = cross_vector(model.kernel, model.inputs, x);
    out.mean = model.mean_at(x) + k_star.dot(model.alpha);

    const Vec v = model.chol.triangularView<Eigen::Lower>().solve(k_star);
    double var = model.kernel.signal_variance - v.squaredNorm();
    const double cap = model.kernel.signal_variance + model.noise_variance;
    out.variance = std::min(std::max(var, 0.0), cap);
    return out;
}

double log_marginal_likelihood(const GpModel& model)
{
    const int n = model.size();
    if (n == 0)
        throw EmptyModel("log_marginal_likelihood: model has no data");
    double log_det_half = model.chol.diagonal().array().log().sum();
    return -0.5 * model.residuals.dot(model.alpha) - log_det_half - 0.5 * n * k_log_2pi;
}

Vec lml_gradient(const GpModel& model)
{
    const int n = model.size();
    if (n == 0)
        throw EmptyModel("lml_gradient: model has no data");
    const int d = model.dim();
    const KernelSpec& spec = model.kernel;

    // K^-1 through the stored factor, then W = alpha alpha^T - K^-1.
    Mat kinv = model.chol.triangularView<Eigen::Lower>().solve(Mat::Identity(n, n));
    kinv = model.chol.transpose().triangularView<Eigen::Upper>().solve(kinv);
    Mat w = model.alpha * model.alpha.transpose() - kinv;

    const Mat gram = gram_matrix(spec, model.inputs);

    Vec grad(d + 2);
    // d/dlog(signal_variance): the signal part scales linearly with it.
    grad[0] = 0.5 * (w.array() * gram.array()).sum();

    // Pairwise factor F with dk/dlog(l_i) = F(a,b) * ((x_a,i - x_b,i)/l_i)^2.
    Mat factor(n, n);
    if (spec.type == KernelType::SquaredExponential) {
        factor = gram;
    } else {
        for (int a = 0; a < n; ++a) {
            factor(a, a) = 0.0;
            for (int b = 0; b < a; ++b) {
                const double r = std::sqrt(scaled_sqdist(spec, model.inputs.row(a), model.inputs.row(b)));
                const double f = spec.signal_variance * (5.0 / 3.0) * (1.0 + k_sqrt5 * r)
                    * std::exp(-k_sqrt5 * r);
                factor(a, b) = f;
                factor(b, a) = f;
            }
        }
    }

    for (int i = 0; i < d; ++i) {
        double g = 0.0;
        const double li = spec.length_scales[i];
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < a; ++b) {
                const double di = (model.inputs(a, i) - model.inputs(b, i)) / li;
                g += 2.0 * w(a, b) * factor(a, b) * di * di; // off-diagonal pairs; diagonal is zero
            }
        }
        grad[1 + i] = 0.5 * g;
    }

    // d/dlog(noise_variance).
    grad[d + 1] = 0.5 * model.noise_variance * w.trace();
    return grad;
}

namespace {

struct LogTheta {
    Vec v; // [log sf2, log l_0.., log sn2]

    static LogTheta from(const KernelSpec& spec, double noise)
    {
        LogTheta t;
        t.v = Vec(spec.dim() + 2);
        t.v[0] = std::log(spec.signal_variance);
        for (int i = 0; i < spec.dim(); ++i)
            t.v[1 + i] = std::log(spec.length_scales[i]);
        t.v[spec.dim() + 1] = std::log(noise);
        return t;
    }

    KernelSpec kernel(KernelType type) const
    {
        const int d = static_cast<int>(v.size()) - 2;
        KernelSpec spec;
        spec.type = type;
        spec.signal_variance = std::exp(v[0]);
        spec.length_scales = v.segment(1, d).array().exp();
        return spec;
    }

    double noise() const { return std::exp(v[v.size() - 1]); }
};

Vec bounds_lo(const HyperBounds& b, int d)
{
    Vec lo(d + 2);
    lo[0] = b.log_signal_variance_min;
    lo.segment(1, d).setConstant(b.log_length_scale_min);
    lo[d + 1] = b.log_noise_variance_min;
    return lo;
}

Vec bounds_hi(const HyperBounds& b, int d)
{
    Vec hi(d + 2);
    hi[0] = b.log_signal_variance_max;
    hi.segment(1, d).setConstant(b.log_length_scale_max);
    hi[d + 1] = b.log_noise_variance_max;
    return hi;
}

} // namespace

HyperOptResult optimize_hyperparams(KernelType type, const Mat& inputs, const Vec& targets,
                                    const MeanFn& prior_mean, const HyperOptConfig& config,
                                    Rng& rng)
{
    if (targets.size() == 0)
        throw EmptyData("optimize_hyperparams: no data");
    const int d = static_cast<int>(inputs.cols());
    const Vec lo = bounds_lo(config.bounds, d);
    const Vec hi = bounds_hi(config.bounds, d);

    auto fit_at = [&](const Vec& theta) {
        LogTheta t{theta};
        return gp_fit(t.kernel(type), t.noise(), prior_mean, inputs, targets);
    };
    auto clamp_box = [&](Vec theta) { return theta.cwiseMax(lo).cwiseMin(hi).eval(); };

    double best_lml = -std::numeric_limits<double>::infinity();
    Vec best_theta;

    for (int restart = 0; restart < std::max(1, config.restarts); ++restart) {
        Vec theta(d + 2);
        if (restart == 0 && config.warm_start) {
            theta = clamp_box(LogTheta::from(config.warm_start->first, config.warm_start->second).v);
        } else {
            for (int i = 0; i < theta.size(); ++i)
                theta[i] = rng.uniform(lo[i], hi[i]);
        }

        GpModel model = fit_at(theta);
        double lml = log_marginal_likelihood(model);
        Vec grad = lml_gradient(model);

        double step = config.initial_step;
        for (int iter = 0; iter < config.max_ascent_iters; ++iter) {
            if (grad.lpNorm<Eigen::Infinity>() < config.grad_tolerance)
                break;
            // Backtracking on a clamped gradient step; accept first improvement.
            bool improved = false;
            double t = step;
            while (t >= config.min_step) {
                const Vec trial = clamp_box(theta + t * grad);
                if ((trial - theta).lpNorm<Eigen::Infinity>() > 0.0) {
                    GpModel trial_model = fit_at(trial);
                    const double trial_lml = log_marginal_likelihood(trial_model);
                    if (trial_lml > lml + 1e-12) {
                        theta = trial;
                        lml = trial_lml;
                        grad = lml_gradient(trial_model);
                        improved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if (!improved)
                break;
            step = std::min(2.0 * t, config.initial_step);
        }

        if (lml > best_lml) {
            best_lml = lml;
            best_theta = theta;
        }
    }

    LogTheta t{best_theta};
    return HyperOptResult{t.kernel(type), t.noise(), best_lml};
}

} // namespace microdata::gp
