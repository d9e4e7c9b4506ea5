#include <gtest/gtest.h>

#include <random>

#include "asyadmm/admm.hpp"
#include "asyadmm/consensus.hpp"
#include "asyadmm/oracle.hpp"

using namespace asyadmm;

namespace {

std::vector<Vec> normal_vectors(std::size_t n, Eigen::Index p, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vec> out(n, Vec(p));
    for (auto& v : out)
        for (Eigen::Index c = 0; c < p; ++c) v[c] = normal(rng);
    return out;
}

std::vector<Vec> scalars(std::initializer_list<double> xs) {
    std::vector<Vec> out;
    for (double x : xs) out.push_back(Vec::Constant(1, x));
    return out;
}

Network three_cycle() { return Network(Digraph(3, {{0, 1}, {1, 2}, {2, 0}})); }

}  // namespace

TEST(RatioStep, TwoNodeHandIteration) {
    // P = [[1/2, 1/2], [1/2, 1/2]]: y1 = (2, 2), w1 = (1, 1).
    const Network net(Digraph(2, {{0, 1}, {1, 0}}));
    auto dm = DelayModel::zero();
    RatioConsensus rc(net, dm, scalars({0.0, 4.0}));
    rc.step();
    for (const auto& s : rc.states()) {
        EXPECT_EQ(s.y[0], 2.0);
        EXPECT_EQ(s.w, 1.0);
        EXPECT_EQ(s.z[0], 2.0);
    }
}

TEST(RatioStep, RejectsForeignAndMalformedMessages) {
    const Network net(Digraph(2, {{0, 1}, {1, 0}}));
    const auto own = RatioState::initial(Vec::Ones(2));
    const std::vector<Message> foreign{{1, 1, MessageKind::RatioPair, {0.5, 0.5, 0.5}, 0, 0}};
    EXPECT_THROW(ratio_step(0, foreign, own, net.weights), std::invalid_argument);
    const std::vector<Message> short_payload{{1, 0, MessageKind::RatioPair, {0.5}, 0, 0}};
    EXPECT_THROW(ratio_step(0, short_payload, own, net.weights), std::invalid_argument);
    const std::vector<Message> drained{{1, 0, MessageKind::RatioPair, {0.0, 0.0, -0.5}, 0, 0}};
    EXPECT_THROW(ratio_step(0, drained, own, net.weights), std::logic_error);
}

TEST(RatioConsensus, ConstantInputIsAFixedPoint) {
    const Network net(random_strongly_connected(15, 0.2, 3));
    auto dm = DelayModel::uniform(3, 3);
    RatioConsensus rc(net, dm, std::vector<Vec>(net.size(), Vec::Constant(2, -1.25)));
    for (int k = 0; k < 100; ++k) {
        rc.step();
        for (const auto& s : rc.states()) EXPECT_NEAR((s.z - Vec::Constant(2, -1.25)).norm(), 0.0, 1e-12);
    }
}

TEST(RatioConsensus, MassIsConservedIncludingInFlight) {
    const Network net(random_strongly_connected(12, 0.25, 9));
    auto dm = DelayModel::uniform(4, 9);
    const auto y0 = normal_vectors(net.size(), 3, 9);
    Vec mass = Vec::Zero(3);
    for (const auto& y : y0) mass += y;
    RatioConsensus rc(net, dm, y0);
    for (int k = 0; k < 60; ++k) {
        rc.step();
        EXPECT_NEAR((rc.total_y() - mass).norm(), 0.0, 1e-12);
        EXPECT_NEAR(rc.total_w(), static_cast<double>(net.size()), 1e-12);
        for (const auto& s : rc.states()) EXPECT_GT(s.w, 0.0);
    }
}

TEST(MinMax, ThreeCycleSynchronous) {
    const auto net = three_cycle();
    auto dm = DelayModel::zero();
    MinMaxConsensus mm(net, dm, scalars({5.0, 1.0, 3.0}));
    for (Step k = 0; k < 2; ++k) mm.step();
    EXPECT_TRUE(mm.max_converged());
    EXPECT_TRUE(mm.min_converged());
    for (const auto& s : mm.states()) {
        EXPECT_EQ(s.M[0], 5.0);
        EXPECT_EQ(s.m[0], 1.0);
    }
}

TEST(MinMax, ThreeCycleWithDelaysWithinBD) {
    const auto net = three_cycle();
    ASSERT_EQ(net.diameter, 2u);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto dm = DelayModel::uniform(2, seed);
        MinMaxConsensus mm(net, dm, scalars({5.0, 1.0, 3.0}));
        for (Step k = 0; k < 6; ++k) mm.step();
        EXPECT_TRUE(mm.max_converged() && mm.min_converged()) << "seed " << seed;
    }
}

TEST(MinMax, MessagesFromEarlierRoundsAreIgnored) {
    TerminationState t = TerminationState::initial(1);
    t.reinitialize(Vec::Constant(1, 2.0), 10);
    const std::vector<Message> in{
        {1, 0, MessageKind::MinMaxPair, {9.0, -9.0}, 9, 10},  // sent before the reset
        {2, 0, MessageKind::MinMaxPair, {3.0, 1.5}, 10, 11},
    };
    const auto next = minmax_step(in, t);
    EXPECT_EQ(next.M[0], 3.0);
    EXPECT_EQ(next.m[0], 1.5);
}

TEST(TerminatingConsensus, IdenticalInputsStopAtFirstMeaningfulCheck) {
    // The first check always fails because M and m start at +/- infinity.
    const Network net(random_strongly_connected(10, 0.2, 1));
    for (Step tau : {0, 2, 5}) {
        auto dm = tau == 0 ? DelayModel::zero() : DelayModel::uniform(tau, tau);
        const auto res = run_terminating_consensus(net, dm, std::vector<Vec>(net.size(), Vec::Constant(3, 0.7)),
                                                   1e-9, 1000);
        const Step round = net.round_length(tau);
        EXPECT_TRUE(res.converged);
        EXPECT_EQ(res.steps, 2 * round);
        EXPECT_EQ(res.checks, (std::vector<Step>{round, 2 * round}));
        for (const auto& z : res.z) EXPECT_NEAR((z - Vec::Constant(3, 0.7)).norm(), 0.0, 1e-12);
    }
}

TEST(TerminatingConsensus, GoldenTwentyNodeRun) {
    const Network net(random_strongly_connected(20, 0.2, 7));
    const auto y0 = normal_vectors(20, 3, 77);
    auto dm1 = DelayModel::uniform(3, 77);
    auto dm2 = DelayModel::uniform(3, 77);
    const auto a = run_terminating_consensus(net, dm1, y0, 0.1, 1000);
    const auto b = run_terminating_consensus(net, dm2, y0, 0.1, 1000);
    EXPECT_EQ(net.diameter, 4u);
    EXPECT_TRUE(a.converged);
    EXPECT_EQ(a.steps, 32u);
    EXPECT_EQ(a.steps, b.steps);
    for (std::size_t j = 0; j < a.z.size(); ++j) EXPECT_EQ(a.z[j], b.z[j]);
}

TEST(TerminatingConsensus, SpreadAndAverageWithinEpsilon) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Network net(random_strongly_connected(5 + seed % 16, 0.15, seed));
        const auto y0 = normal_vectors(net.size(), 3, seed + 1);
        const Vec avg = exact_average(y0);
        for (double eps : {0.1, 0.01}) {
            auto dm = DelayModel::uniform(seed % 4, seed);
            const auto res = run_terminating_consensus(net, dm, y0, eps, 100000);
            ASSERT_TRUE(res.converged);
            EXPECT_LE(max_pairwise_spread(res.z), eps);
            for (const auto& z : res.z) EXPECT_LE((z - avg).norm(), eps);
            for (Step c : res.checks) EXPECT_EQ(c % net.round_length(seed % 4), 0u);
        }
    }
}

TEST(TerminatingConsensus, CapExhaustionIsReported) {
    const Network net(random_strongly_connected(20, 0.1, 2));
    auto dm = DelayModel::uniform(3, 2);
    const auto res = run_terminating_consensus(net, dm, normal_vectors(20, 3, 2), 1e-14, 50);
    EXPECT_FALSE(res.converged);
    EXPECT_EQ(res.steps, 50u);
    EXPECT_EQ(res.z.size(), 20u);
    EXPECT_THROW(run_terminating_consensus(net, dm, normal_vectors(20, 3, 2), 0.0, 50), std::invalid_argument);
}

TEST(TerminatingConsensus, StepTrends) {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        const Network net(random_strongly_connected(15, 0.15, seed));
        const auto y0 = normal_vectors(15, 3, seed);
        Step prev = 0;
        for (Step tau : {0, 1, 3, 5, 10}) {
            auto dm = tau == 0 ? DelayModel::zero() : DelayModel::uniform(tau, seed);
            const Step steps = run_terminating_consensus(net, dm, y0, 0.01, 100000).steps;
            EXPECT_GE(steps, prev) << "seed " << seed << " tau " << tau;
            prev = steps;
        }
        // Identical delay streams: a looser tolerance can only stop earlier.
        Step last = std::numeric_limits<Step>::max();
        for (double eps : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
            auto dm = DelayModel::uniform(3, seed);
            const Step steps = run_terminating_consensus(net, dm, y0, eps, 100000).steps;
            EXPECT_LE(steps, last);
            last = steps;
        }
    }
}

TEST(TerminatingConsensus, SingleNode) {
    const Network net(Digraph(1, {}));
    auto dm = DelayModel::uniform(2, 0);
    const auto res = run_terminating_consensus(net, dm, {Vec::Constant(2, 4.0)}, 0.1, 100);
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.steps, 6u);
    EXPECT_EQ(res.z[0], Vec::Constant(2, 4.0));
}
