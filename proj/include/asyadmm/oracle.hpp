#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <vector>

#include "asyadmm/digraph.hpp"
#include "asyadmm/problems.hpp"

// Ground truth computed centrally, outside the simulated network.

namespace asyadmm {

struct GroundTruth {
    Vec x_star;
    double f_star = 0.0;
    /// lambda_i* = -grad f_i(x*)
    std::vector<Vec> lambda_star;
};

class SingularInstance : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// Solves (sum A_i^T A_i) x = sum A_i^T b_i.
inline GroundTruth centralized_solution(const LeastSquaresInstance& inst) {
    const auto p = static_cast<Eigen::Index>(inst.p);
    Mat normal = Mat::Zero(p, p);
    Vec rhs = Vec::Zero(p);
    for (std::size_t i = 0; i < inst.n(); ++i) {
        normal += inst.A[i].transpose() * inst.A[i];
        rhs += inst.A[i].transpose() * inst.b[i];
    }
    const Eigen::FullPivLU<Mat> lu(normal);
    if (!lu.isInvertible()) throw SingularInstance("centralized solution: normal matrix is singular");

    GroundTruth gt;
    gt.x_star = lu.solve(rhs);
    for (std::size_t i = 0; i < inst.n(); ++i) {
        const Vec residual = inst.A[i] * gt.x_star - inst.b[i];
        gt.f_star += 0.5 * residual.squaredNorm();
        gt.lambda_star.push_back(-(inst.A[i].transpose() * residual));
    }
    return gt;
}

/// Arithmetic mean with Neumaier-compensated summation.
inline Vec exact_average(std::span<const Vec> vectors) {
    if (vectors.empty()) throw std::invalid_argument("exact_average: no vectors");
    const Eigen::Index p = vectors.front().size();
    Vec sum = Vec::Zero(p);
    Vec comp = Vec::Zero(p);
    for (const auto& v : vectors) {
        if (v.size() != p) throw std::invalid_argument("exact_average: dimension mismatch");
        for (Eigen::Index c = 0; c < p; ++c) {
            const double t = sum[c] + v[c];
            if (std::abs(sum[c]) >= std::abs(v[c]))
                comp[c] += (sum[c] - t) + v[c];
            else
                comp[c] += (v[c] - t) + sum[c];
            sum[c] = t;
        }
    }
    return (sum + comp) / static_cast<double>(vectors.size());
}

/// Dense column-stochastic matrix P with P(l, j) = 1/(1 + outdeg j) on
/// out(j) ∪ {j}. Built from the graph alone, independently of WeightMatrix.
inline Mat dense_push_sum_matrix(const Digraph& g) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Mat P = Mat::Zero(n, n);
    for (NodeId j = 0; j < g.size(); ++j) {
        const double w = 1.0 / (1.0 + static_cast<double>(g.out_degree(j)));
        const auto col = static_cast<Eigen::Index>(j);
        P(col, col) = w;
        for (NodeId l : g.out_neighbors(j)) P(static_cast<Eigen::Index>(l), col) = w;
    }
    return P;
}

namespace detail {

// y_l <- P(l,l) y_l + sum_{j != l, ascending} P(l,j) y_j: each product is
// formed first and summed in sender order, which is exactly the order the
// simulator applies delivered messages in.
inline void push_sum_multiply(const Mat& P, std::vector<Vec>& y, std::vector<double>& w) {
    const auto n = static_cast<std::size_t>(P.rows());
    std::vector<Vec> ny(n);
    std::vector<double> nw(n);
    for (std::size_t l = 0; l < n; ++l) {
        const auto L = static_cast<Eigen::Index>(l);
        ny[l] = P(L, L) * y[l];
        nw[l] = P(L, L) * w[l];
        for (std::size_t j = 0; j < n; ++j) {
            const double pj = P(L, static_cast<Eigen::Index>(j));
            if (j == l || pj == 0.0) continue;
            for (Eigen::Index c = 0; c < ny[l].size(); ++c) ny[l][c] += pj * y[j][c];
            nw[l] += pj * w[j];
        }
    }
    y = std::move(ny);
    w = std::move(nw);
}

}  // namespace detail

/// Ratios (P^s y0) / (P^s 1) for s = 0..steps, one entry per step.
inline std::vector<std::vector<Vec>> synchronous_ratio_trajectory(const Mat& P, const std::vector<Vec>& y0,
                                                                  std::size_t steps) {
    if (static_cast<std::size_t>(P.rows()) != y0.size())
        throw std::invalid_argument("synchronous ratio oracle: size mismatch");
    std::vector<Vec> y = y0;
    std::vector<double> w(y0.size(), 1.0);
    std::vector<std::vector<Vec>> out;
    out.reserve(steps + 1);
    const auto ratios = [&] {
        std::vector<Vec> z(y.size());
        for (std::size_t l = 0; l < y.size(); ++l) z[l] = y[l] / w[l];
        return z;
    };
    out.push_back(ratios());
    for (std::size_t s = 0; s < steps; ++s) {
        detail::push_sum_multiply(P, y, w);
        out.push_back(ratios());
    }
    return out;
}

inline std::vector<Vec> synchronous_ratio_oracle(const Mat& P, const std::vector<Vec>& y0, std::size_t k) {
    return synchronous_ratio_trajectory(P, y0, k).back();
}

}  // namespace asyadmm
