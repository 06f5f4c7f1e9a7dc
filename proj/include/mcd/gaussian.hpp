#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace mcd {

/// Gaussian tail probability, Q(x) = erfc(x / sqrt 2) / 2.
inline double q_function(double x)
{
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// Standard normal density.
inline double normal_pdf(double x)
{
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Thrown when a covariance cannot be factorised even after diagonal loading.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precomputed Gaussian negative log-likelihood (up to the 2 pi constant):
/// ln|Sigma| + (y - mu)^T Sigma^-1 (y - mu).
///
/// The covariance is Cholesky-factorised; if that fails it is loaded with
/// 1e-9 * trace / dim on the diagonal and factorised again.
class GaussianMetric {
public:
    GaussianMetric() = default;
    GaussianMetric(Eigen::VectorXd mu, const Eigen::MatrixXd& sigma);

    double operator()(const Eigen::Ref<const Eigen::VectorXd>& y) const;

    double log_det() const { return log_det_; }
    const Eigen::VectorXd& mean() const { return mu_; }
    bool loaded() const { return loaded_; }
    Eigen::Index dim() const { return mu_.size(); }

private:
    Eigen::VectorXd mu_;
    Eigen::MatrixXd lower_;
    double log_det_{0.0};
    bool loaded_{false};
};

}  // namespace mcd
