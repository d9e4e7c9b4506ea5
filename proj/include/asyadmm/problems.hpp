#pragma once

#include <Eigen/Dense>
#include <fmt/format.h>

#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "asyadmm/random.hpp"

namespace asyadmm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Closed, proper, convex local cost f_i. The x-update of every node goes
/// through prox; nothing else in the solver depends on the concrete cost.
class CostFunction {
 public:
    virtual ~CostFunction() = default;

    virtual Eigen::Index dim() const = 0;
    virtual double eval(const Vec& x) const = 0;
    /// argmin_x f(x) + (rho/2) ||x - target||^2
    virtual Vec prox(const Vec& target, double rho) const = 0;
    virtual Vec gradient(const Vec& x) const = 0;
};

using CostList = std::vector<std::shared_ptr<const CostFunction>>;

/// Solves (A^T A + rho I) x = A^T b - lambda + rho z.
inline Vec ls_prox(const Mat& A, const Vec& b, const Vec& lambda, const Vec& z, double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("ls_prox: rho must be positive");
    Mat normal = A.transpose() * A;
    normal.diagonal().array() += rho;
    const Vec rhs = A.transpose() * b - lambda + rho * z;
    return normal.llt().solve(rhs);
}

/// f(x) = 1/2 ||A x - b||^2
class LeastSquaresCost final : public CostFunction {
 public:
    LeastSquaresCost(Mat A, Vec b) : A_(std::move(A)), b_(std::move(b)) {
        if (A_.rows() != b_.size()) throw std::invalid_argument("least squares: A and b disagree");
    }

    Eigen::Index dim() const override { return A_.cols(); }

    double eval(const Vec& x) const override { return 0.5 * (A_ * x - b_).squaredNorm(); }

    Vec prox(const Vec& target, double rho) const override {
        // Completing the square: lambda = 0, z = target.
        return ls_prox(A_, b_, Vec::Zero(target.size()), target, rho);
    }

    Vec gradient(const Vec& x) const override { return A_.transpose() * (A_ * x - b_); }

    const Mat& A() const { return A_; }
    const Vec& b() const { return b_; }

 private:
    Mat A_;
    Vec b_;
};

/// Per-node (A_i, b_i) with A_i q x p.
struct LeastSquaresInstance {
    std::size_t p = 0;
    std::size_t q = 0;
    std::uint64_t seed = 0;
    std::vector<Mat> A;
    std::vector<Vec> b;

    std::size_t n() const { return A.size(); }

    CostList costs() const {
        CostList out;
        out.reserve(n());
        for (std::size_t i = 0; i < n(); ++i) out.push_back(std::make_shared<LeastSquaresCost>(A[i], b[i]));
        return out;
    }

    friend bool operator==(const LeastSquaresInstance& x, const LeastSquaresInstance& y) {
        if (x.p != y.p || x.q != y.q || x.n() != y.n()) return false;
        for (std::size_t i = 0; i < x.n(); ++i) {
            if (x.A[i] != y.A[i] || x.b[i] != y.b[i]) return false;
        }
        return true;
    }
};

/// Every entry of every A_i and b_i i.i.d. N(0, 1), node by node.
inline LeastSquaresInstance generate_ls(std::size_t n, std::size_t p, std::size_t q, std::uint64_t seed) {
    if (n == 0 || p == 0 || q == 0) throw std::invalid_argument("generate_ls: dimensions must be positive");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    LeastSquaresInstance inst{p, q, seed, {}, {}};
    inst.A.reserve(n);
    inst.b.reserve(n);
    const auto rows = static_cast<Eigen::Index>(q);
    const auto cols = static_cast<Eigen::Index>(p);
    for (std::size_t i = 0; i < n; ++i) {
        Mat A(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) A(r, c) = normal(rng);
        Vec b(rows);
        for (Eigen::Index r = 0; r < rows; ++r) b[r] = normal(rng);
        inst.A.push_back(std::move(A));
        inst.b.push_back(std::move(b));
    }
    return inst;
}

inline double total_objective(const CostList& costs, const std::vector<Vec>& x) {
    double f = 0.0;
    for (std::size_t i = 0; i < costs.size(); ++i) f += costs[i]->eval(x[i]);
    return f;
}

// Text format, one block per node:
//   i q p
//   q rows of A_i (p values each)
//   one row of b_i (q values)
// Values are written with 17 significant digits so a reload is bit-exact.

inline void write_instance(std::ostream& os, const LeastSquaresInstance& inst) {
    for (std::size_t i = 0; i < inst.n(); ++i) {
        os << fmt::format("{} {} {}\n", i, inst.q, inst.p);
        const Mat& A = inst.A[i];
        for (Eigen::Index r = 0; r < A.rows(); ++r) {
            for (Eigen::Index c = 0; c < A.cols(); ++c) os << (c ? " " : "") << fmt::format("{:.17g}", A(r, c));
            os << '\n';
        }
        for (Eigen::Index r = 0; r < inst.b[i].size(); ++r)
            os << (r ? " " : "") << fmt::format("{:.17g}", inst.b[i][r]);
        os << '\n';
    }
}

inline LeastSquaresInstance read_instance(std::istream& is) {
    LeastSquaresInstance inst;
    std::size_t idx = 0;
    std::size_t q = 0;
    std::size_t p = 0;
    while (is >> idx >> q >> p) {
        if (idx != inst.n()) throw std::runtime_error("instance: blocks out of order");
        if (inst.n() == 0) {
            inst.p = p;
            inst.q = q;
        } else if (p != inst.p || q != inst.q) {
            throw std::runtime_error("instance: inconsistent block dimensions");
        }
        Mat A(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p));
        for (Eigen::Index r = 0; r < A.rows(); ++r)
            for (Eigen::Index c = 0; c < A.cols(); ++c)
                if (!(is >> A(r, c))) throw std::runtime_error("instance: truncated A block");
        Vec b(static_cast<Eigen::Index>(q));
        for (Eigen::Index r = 0; r < b.size(); ++r)
            if (!(is >> b[r])) throw std::runtime_error("instance: truncated b row");
        inst.A.push_back(std::move(A));
        inst.b.push_back(std::move(b));
    }
    if (!is.eof()) throw std::runtime_error("instance: malformed block header");
    if (inst.n() == 0) throw std::runtime_error("instance: no blocks");
    return inst;
}

inline void save_instance(const std::string& path, const LeastSquaresInstance& inst) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write instance file: " + path);
    write_instance(out, inst);
}

inline LeastSquaresInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open instance file: " + path);
    return read_instance(in);
}

}  // namespace asyadmm
