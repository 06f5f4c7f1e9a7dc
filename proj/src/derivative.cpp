#include "mcd/derivative.hpp"

#include <stdexcept>

namespace mcd {

namespace {

void check_order(int m)
{
    if (m < 0)
        throw std::invalid_argument("derivative order must be non-negative");
}

void check_truncation(Eigen::Index n, int m)
{
    check_order(m);
    if (n <= m)
        throw std::invalid_argument("derivative order must be smaller than samples per symbol");
}

}  // namespace

void apply_derivative_inplace(std::span<double> y, int m)
{
    check_order(m);
    const std::size_t n = y.size();
    if (n == 0)
        return;
    for (int pass = 0; pass < m; ++pass) {
        for (std::size_t i = 0; i + 1 < n; ++i)
            y[i] = y[i + 1] - y[i];
        y[n - 1] = -y[n - 1];
    }
}

std::vector<double> apply_derivative(std::span<const double> y, int m)
{
    if (y.empty())
        throw std::invalid_argument("apply_derivative requires a non-empty sequence");
    std::vector<double> out(y.begin(), y.end());
    apply_derivative_inplace(out, m);
    return out;
}

Eigen::MatrixXd derivative_matrix(Eigen::Index n, int m)
{
    check_order(m);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = -1.0;
        if (i + 1 < n)
            d(i, i + 1) = 1.0;
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < m; ++k)
        out = d * out;
    return out;
}

GaussianStats transform_stats(const GaussianStats& g, int m)
{
    check_order(m);
    const Eigen::Index n = g.dim();
    if (g.sigma.rows() != n || g.sigma.cols() != n)
        throw std::invalid_argument("mean and covariance dimensions disagree");
    if (m == 0)
        return g;

    GaussianStats out;
    out.mu = g.mu;
    apply_derivative_inplace(std::span<double>(out.mu.data(), static_cast<std::size_t>(n)), m);

    // D^m Sigma column by column, then D^m applied to the rows of the result.
    Eigen::MatrixXd left = g.sigma;
    for (Eigen::Index c = 0; c < n; ++c)
        apply_derivative_inplace(std::span<double>(left.col(c).data(), static_cast<std::size_t>(n)), m);
    Eigen::MatrixXd t = left.transpose();
    for (Eigen::Index c = 0; c < n; ++c)
        apply_derivative_inplace(std::span<double>(t.col(c).data(), static_cast<std::size_t>(n)), m);
    out.sigma = 0.5 * (t + t.transpose());
    return out;
}

std::vector<double> truncate_noncausal(std::span<const double> symbol_samples, int m)
{
    check_truncation(static_cast<Eigen::Index>(symbol_samples.size()), m);
    return {symbol_samples.begin(), symbol_samples.end() - m};
}

Eigen::VectorXd truncate_noncausal(const Eigen::VectorXd& v, int m)
{
    check_truncation(v.size(), m);
    return v.head(v.size() - m);
}

Eigen::MatrixXd truncate_noncausal(const Eigen::MatrixXd& cov, int m)
{
    check_truncation(cov.rows(), m);
    const Eigen::Index k = cov.rows() - m;
    return cov.topLeftCorner(k, k);
}

GaussianStats truncate_noncausal(const GaussianStats& g, int m)
{
    return {truncate_noncausal(g.mu, m), truncate_noncausal(g.sigma, m)};
}

Eigen::VectorXd intended_mean(const ChannelVector& h, double M, int N, int m)
{
    check_truncation(N, m);
    std::vector<double> mus(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j)
        mus[static_cast<std::size_t>(j)] = M * h.tap(static_cast<std::size_t>(j));
    apply_derivative_inplace(mus, m);
    return Eigen::Map<const Eigen::VectorXd>(mus.data(), N - m);
}

}  // namespace mcd
