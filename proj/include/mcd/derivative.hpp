#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mcd/channel.hpp"
#include "mcd/signal.hpp"

namespace mcd {

// The forward-difference operator D is square: row i has -1 at column i and +1 at
// column i+1, so the last output sample is -y[n-1]. D^m is applied as m passes of that
// difference; the last m samples of each symbol depend on the next symbol and are
// dropped before detection.

/// D^m y by m in-place forward-difference passes, O(m n).
std::vector<double> apply_derivative(std::span<const double> y, int m);
void apply_derivative_inplace(std::span<double> y, int m);

/// Dense n x n D^m. Only for tests and small per-symbol blocks.
Eigen::MatrixXd derivative_matrix(Eigen::Index n, int m);

/// Mean D^m mu and covariance D^m Sigma (D^m)^T.
GaussianStats transform_stats(const GaussianStats& g, int m);

/// First N - m entries of a per-symbol vector. Throws std::invalid_argument when m >= N.
std::vector<double> truncate_noncausal(std::span<const double> symbol_samples, int m);
Eigen::VectorXd truncate_noncausal(const Eigen::VectorXd& v, int m);
/// Leading principal (N-m) block of a per-symbol covariance.
Eigen::MatrixXd truncate_noncausal(const Eigen::MatrixXd& cov, int m);
GaussianStats truncate_noncausal(const GaussianStats& g, int m);

/// Post-derivative mean of a bit-1 symbol's own samples, truncated to N - m entries.
Eigen::VectorXd intended_mean(const ChannelVector& h, double M, int N, int m);

}  // namespace mcd
