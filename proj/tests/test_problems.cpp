#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "asyadmm/problems.hpp"

using namespace asyadmm;

namespace {

Vec random_vec(Rng& rng, Eigen::Index p) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec v(p);
    for (Eigen::Index c = 0; c < p; ++c) v[c] = normal(rng);
    return v;
}

}  // namespace

TEST(GenerateLs, ShapesAndDeterminism) {
    const auto large = generate_ls(600, 3, 3, 1);
    EXPECT_EQ(large.n(), 600u);
    for (std::size_t i = 0; i < large.n(); ++i) {
        EXPECT_EQ(large.A[i].rows(), 3);
        EXPECT_EQ(large.A[i].cols(), 3);
        EXPECT_EQ(large.b[i].size(), 3);
    }
    const auto tiny = generate_ls(2, 1, 1, 5);
    EXPECT_EQ(tiny.n(), 2u);
    EXPECT_EQ(tiny.A[1].size(), 1);

    EXPECT_EQ(generate_ls(10, 3, 4, 9), generate_ls(10, 3, 4, 9));
    EXPECT_FALSE(generate_ls(10, 3, 4, 9) == generate_ls(10, 3, 4, 10));
    EXPECT_THROW(generate_ls(0, 3, 3, 1), std::invalid_argument);
}

TEST(GenerateLs, EntriesLookStandardNormal) {
    const auto inst = generate_ls(2000, 3, 3, 17);
    double sum = 0.0;
    double sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < inst.n(); ++i) {
        sum += inst.A[i].sum() + inst.b[i].sum();
        sq += inst.A[i].squaredNorm() + inst.b[i].squaredNorm();
        count += 12;
    }
    const double mean = sum / static_cast<double>(count);
    EXPECT_NEAR(mean, 0.0, 0.03);
    EXPECT_NEAR(sq / static_cast<double>(count) - mean * mean, 1.0, 0.03);
}

TEST(LsProx, ClosedFormCases) {
    // (I + I) x = b  =>  x = b / 2
    const Vec x = ls_prox(Mat::Identity(2, 2), Vec::Constant(2, 2.0), Vec::Zero(2), Vec::Zero(2), 1.0);
    EXPECT_NEAR((x - Vec::Ones(2)).norm(), 0.0, 1e-15);

    const Vec lambda = (Vec(3) << 1.0, -2.0, 0.5).finished();
    const Vec z = (Vec(3) << 0.3, 0.1, -4.0).finished();
    const Vec zero_prox = ls_prox(Mat::Zero(3, 3), Vec::Zero(3), lambda, z, 2.0);
    EXPECT_NEAR((zero_prox - (z - lambda / 2.0)).norm(), 0.0, 1e-14);

    EXPECT_THROW(ls_prox(Mat::Identity(2, 2), Vec::Zero(2), Vec::Zero(2), Vec::Zero(2), 0.0), std::invalid_argument);
}

TEST(LsProx, SolvesNormalEquations) {
    Rng rng(3);
    const auto inst = generate_ls(30, 4, 6, 3);
    for (std::size_t i = 0; i < inst.n(); ++i) {
        const Vec lambda = random_vec(rng, 4);
        const Vec z = random_vec(rng, 4);
        const double rho = 0.1 + static_cast<double>(i) / 10.0;
        const Vec x = ls_prox(inst.A[i], inst.b[i], lambda, z, rho);
        Mat normal = inst.A[i].transpose() * inst.A[i];
        normal.diagonal().array() += rho;
        const Vec rhs = inst.A[i].transpose() * inst.b[i] - lambda + rho * z;
        EXPECT_LE((normal * x - rhs).norm(), 1e-10);
    }
}

TEST(LeastSquaresCost, ProxOptimality) {
    Rng rng(11);
    const auto costs = generate_ls(20, 3, 3, 11).costs();
    for (const auto& f : costs) {
        const Vec target = random_vec(rng, 3);
        const double rho = 0.7;
        const Vec x = f->prox(target, rho);
        EXPECT_LE((f->gradient(x) + rho * (x - target)).norm(), 1e-8);

        const auto phi = [&](const Vec& v) { return f->eval(v) + 0.5 * rho * (v - target).squaredNorm(); };
        for (int d = 0; d < 10; ++d) {
            const Vec dir = random_vec(rng, 3).normalized();
            const double h = 1e-4;
            EXPECT_GE(phi(x + h * dir) - phi(x), -1e-6);
            EXPECT_GE(phi(x - h * dir) - phi(x), -1e-6);
        }
    }
}

TEST(LeastSquaresCost, GradientMatchesCentralDifferences) {
    Rng rng(5);
    const auto costs = generate_ls(10, 3, 5, 5).costs();
    for (const auto& f : costs) {
        const Vec x = random_vec(rng, 3);
        const Vec g = f->gradient(x);
        Vec fd(3);
        const double h = 1e-5;
        for (Eigen::Index c = 0; c < 3; ++c) {
            Vec e = Vec::Zero(3);
            e[c] = h;
            fd[c] = (f->eval(x + e) - f->eval(x - e)) / (2 * h);
        }
        EXPECT_LE((fd - g).norm(), 1e-6 * std::max(1.0, g.norm()));
    }
}

TEST(LeastSquaresCost, EvalKeepsTheHalfFactor) {
    const LeastSquaresCost f(Mat::Identity(2, 2), Vec::Constant(2, 1.0));
    EXPECT_DOUBLE_EQ(f.eval(Vec::Zero(2)), 1.0);
    EXPECT_THROW(LeastSquaresCost(Mat::Identity(2, 2), Vec::Zero(3)), std::invalid_argument);
}

TEST(InstanceFormat, ReloadIsBitExact) {
    const auto inst = generate_ls(7, 3, 2, 21);
    std::stringstream ss;
    write_instance(ss, inst);
    const auto back = read_instance(ss);
    EXPECT_EQ(back, inst);

    std::stringstream header(ss.str());
    std::size_t i = 9;
    std::size_t q = 0;
    std::size_t p = 0;
    header >> i >> q >> p;
    EXPECT_EQ(i, 0u);
    EXPECT_EQ(q, 2u);
    EXPECT_EQ(p, 3u);
}

TEST(InstanceFormat, RejectsBrokenInput) {
    std::stringstream truncated("0 2 2\n1 0\n0 1\n3\n");
    EXPECT_THROW(read_instance(truncated), std::runtime_error);
    std::stringstream mixed("0 1 1\n1\n2\n1 2 1\n1\n1\n3 4\n");
    EXPECT_THROW(read_instance(mixed), std::runtime_error);
    std::stringstream empty("");
    EXPECT_THROW(read_instance(empty), std::runtime_error);
}
