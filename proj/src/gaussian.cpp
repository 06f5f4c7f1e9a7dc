#include "mcd/gaussian.hpp"

#include <array>

namespace mcd {

namespace {

bool factorise(const Eigen::MatrixXd& sigma, Eigen::MatrixXd& lower)
{
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        return false;
    lower = llt.matrixL();
    for (Eigen::Index i = 0; i < lower.rows(); ++i)
        if (!(lower(i, i) > 0.0) || !std::isfinite(lower(i, i)))
            return false;
    return true;
}

}  // namespace

GaussianMetric::GaussianMetric(Eigen::VectorXd mu, const Eigen::MatrixXd& sigma)
    : mu_(std::move(mu))
{
    const Eigen::Index n = mu_.size();
    if (sigma.rows() != n || sigma.cols() != n)
        throw std::invalid_argument("GaussianMetric: dimension mismatch");
    if (!factorise(sigma, lower_)) {
        const double eps = n > 0 ? 1e-9 * sigma.trace() / static_cast<double>(n) : 0.0;
        Eigen::MatrixXd loaded = sigma;
        loaded.diagonal().array() += eps;
        if (!(eps > 0.0) || !factorise(loaded, lower_))
            throw NumericalError("covariance is singular after diagonal loading");
        loaded_ = true;
    }
    log_det_ = 2.0 * lower_.diagonal().array().log().sum();
}

double GaussianMetric::operator()(const Eigen::Ref<const Eigen::VectorXd>& y) const
{
    const Eigen::Index n = mu_.size();
    if (y.size() != n)
        throw std::invalid_argument("GaussianMetric: observation dimension mismatch");
    constexpr Eigen::Index kStack = 64;
    if (n > kStack) {
        const Eigen::VectorXd r = lower_.triangularView<Eigen::Lower>().solve(y - mu_);
        return log_det_ + r.squaredNorm();
    }
    // Forward substitution L r = y - mu.
    std::array<double, kStack> r{};
    double quad = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = y(i) - mu_(i);
        for (Eigen::Index k = 0; k < i; ++k)
            acc -= lower_(i, k) * r[static_cast<std::size_t>(k)];
        const double ri = acc / lower_(i, i);
        r[static_cast<std::size_t>(i)] = ri;
        quad += ri * ri;
    }
    return log_det_ + quad;
}

}  // namespace mcd
