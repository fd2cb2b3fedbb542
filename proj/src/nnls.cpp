#include "rankprior/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rankprior/errors.hpp"

namespace rankprior::numeric {

namespace {

Eigen::VectorXd solve_on(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, const std::vector<int>& cols) {
    Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = A.col(cols[k]);
    return sub.colPivHouseholderQr().solve(y);
}

}  // namespace

Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, const std::vector<int>& start,
                     int max_outer) {
    const Eigen::Index p = A.cols();
    if (A.rows() != y.size()) throw ArgumentError("nnls: dimension mismatch");
    if (max_outer <= 0) max_outer = static_cast<int>(3 * p) + 10;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
    std::vector<char> passive(static_cast<std::size_t>(p), 0);
    std::vector<int> P;

    // Warm start: keep dropping columns whose unconstrained coefficient is
    // not positive until the seed set is feasible.
    for (int c : start)
        if (c >= 0 && c < p && !passive[static_cast<std::size_t>(c)]) {
            passive[static_cast<std::size_t>(c)] = 1;
            P.push_back(c);
        }
    while (!P.empty()) {
        const Eigen::VectorXd s = solve_on(A, y, P);
        std::vector<int> keep;
        for (std::size_t k = 0; k < P.size(); ++k) {
            if (s[static_cast<Eigen::Index>(k)] > 0.0) keep.push_back(P[k]);
            else passive[static_cast<std::size_t>(P[k])] = 0;
        }
        if (keep.size() == P.size()) {
            for (std::size_t k = 0; k < P.size(); ++k) x[P[k]] = s[static_cast<Eigen::Index>(k)];
            break;
        }
        P = std::move(keep);
    }

    const double tol = 1e-12 * std::max(1.0, (A.transpose() * y).cwiseAbs().maxCoeff());
    for (int outer = 0; outer < max_outer; ++outer) {
        const Eigen::VectorXd w = A.transpose() * (y - A * x);
        int best = -1;
        double top = tol;
        for (Eigen::Index j = 0; j < p; ++j)
            if (!passive[static_cast<std::size_t>(j)] && w[j] > top) {
                top = w[j];
                best = static_cast<int>(j);
            }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = 1;
        P.push_back(best);

        for (int inner = 0; inner < 3 * static_cast<int>(p) + 10; ++inner) {
            const Eigen::VectorXd s = solve_on(A, y, P);
            bool feasible = true;
            for (Eigen::Index k = 0; k < s.size(); ++k) feasible = feasible && s[k] > 0.0;
            if (feasible) {
                for (std::size_t k = 0; k < P.size(); ++k) x[P[k]] = s[static_cast<Eigen::Index>(k)];
                break;
            }
            double alpha = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < P.size(); ++k) {
                const double sk = s[static_cast<Eigen::Index>(k)];
                if (sk <= 0.0) alpha = std::min(alpha, x[P[k]] / (x[P[k]] - sk));
            }
            std::vector<int> keep;
            for (std::size_t k = 0; k < P.size(); ++k) {
                const int c = P[k];
                x[c] += alpha * (s[static_cast<Eigen::Index>(k)] - x[c]);
                if (x[c] > 0.0 && !(x[c] <= 1e-300)) keep.push_back(c);
                else {
                    x[c] = 0.0;
                    passive[static_cast<std::size_t>(c)] = 0;
                }
            }
            P = std::move(keep);
            if (P.empty()) break;
        }
    }
    return x;
}

}  // namespace rankprior::numeric
