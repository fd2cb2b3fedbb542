#pragma once

#include <vector>

#include <Eigen/Dense>

namespace rankprior::numeric {

// min ||A x - y|| subject to x >= 0 (Lawson-Hanson active set). `start`
// optionally seeds the passive set with column indices.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                     const std::vector<int>& start = {}, int max_outer = 0);

}  // namespace rankprior::numeric
