#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "asyadmm/consensus.hpp"
#include "asyadmm/netsim.hpp"
#include "asyadmm/oracle.hpp"
#include "asyadmm/problems.hpp"
#include "asyadmm/random.hpp"

namespace asyadmm {

/// How the z-update reaches (approximate) agreement.
enum class ZUpdateMode {
    /// Delayed ratio consensus with finite-time termination.
    TerminatingConsensus,
    /// Idealized exact averaging with no network; the synchronous baseline.
    ExactAverage,
};

struct SolverConfig {
    double rho = 1.0;
    double epsilon = 0.01;
    Step tau_bar = 3;
    std::size_t k_max = 200;
    double eps_abs = 1e-4;
    double eps_rel = 1e-2;
    Step step_cap = 1000;
    std::uint64_t seed = 1;
    ZUpdateMode mode = ZUpdateMode::TerminatingConsensus;
    /// When false the loop always runs k_max iterations.
    bool use_stopping_criterion = true;
    /// Keep (X, z, lambda) of every iteration in the RunRecord.
    bool keep_trajectory = false;

    void validate() const {
        if (!(rho > 0.0)) throw std::invalid_argument("solver config: rho must be positive");
        if (!(epsilon > 0.0)) throw std::invalid_argument("solver config: epsilon must be positive");
        if (k_max < 1) throw std::invalid_argument("solver config: k_max must be at least 1");
        if (!(eps_abs >= 0.0) || !(eps_rel >= 0.0))
            throw std::invalid_argument("solver config: stopping tolerances must be nonnegative");
    }
};

/// Stacked per-node blocks: x_i, z_i, lambda_i.
struct NodeStates {
    std::vector<Vec> x;
    std::vector<Vec> z;
    std::vector<Vec> lambda;

    std::size_t size() const { return x.size(); }
};

inline double stacked_norm(const std::vector<Vec>& v) {
    double s = 0.0;
    for (const auto& b : v) s += b.squaredNorm();
    return std::sqrt(s);
}

inline double stacked_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
    return std::sqrt(s);
}

/// max_{i,j} ||v_i - v_j||
inline double max_pairwise_spread(const std::vector<Vec>& v) {
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j) worst = std::max(worst, (v[i] - v[j]).norm());
    return worst;
}

/// argmin_x f_i(x) + lambda^T x + (rho/2) ||x - z||^2, via prox at z - lambda/rho.
inline Vec x_update(const CostFunction& cost, const Vec& lambda, const Vec& z, double rho) {
    return cost.prox(z - lambda / rho, rho);
}

inline Vec lambda_update(const Vec& lambda, const Vec& x, const Vec& z, double rho) {
    return lambda + rho * (x - z);
}

struct ZUpdateResult {
    std::vector<Vec> z;
    Step steps = 0;
    bool capped = false;
};

/// z^{k+1}: each node starts ratio consensus at x_i + lambda_i / rho and
/// stops once the network-wide spread is below epsilon.
inline ZUpdateResult z_update(const Network& net, DelayModel& delays, const std::vector<Vec>& x,
                              const std::vector<Vec>& lambda, double rho, double epsilon, Step step_cap,
                              EventQueue::TraceSink trace = nullptr) {
    std::vector<Vec> y0(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y0[i] = x[i] + lambda[i] / rho;
    auto res = run_terminating_consensus(net, delays, y0, epsilon, step_cap, std::move(trace));
    return {std::move(res.z), res.steps, !res.converged};
}

/// Primal and dual feasibility test with mixed absolute/relative thresholds
/// (inclusive comparison).
inline bool stopping_criterion(const NodeStates& s, const std::vector<Vec>& prev_z, const SolverConfig& cfg) {
    if (s.size() == 0) return false;
    const double scale = std::sqrt(static_cast<double>(s.size() * static_cast<std::size_t>(s.x.front().size())));
    const double primal = stacked_distance(s.x, s.z);
    const double dual = cfg.rho * stacked_distance(s.z, prev_z);
    const double eps_pri = scale * cfg.eps_abs + cfg.eps_rel * std::max(stacked_norm(s.x), stacked_norm(s.z));
    const double eps_dual = scale * cfg.eps_abs + cfg.eps_rel * stacked_norm(s.lambda);
    return primal <= eps_pri && dual <= eps_dual;
}

/// Running ergodic averages of X^s and z^s and the Lagrangian gap
/// L(Xbar, zbar, lambda*) - L(X*, z*, lambda*). g(zbar) is taken as 0, which
/// holds whenever every z^s was in the consensus set.
class ErgodicGap {
 public:
    ErgodicGap(const CostList& costs, const GroundTruth& truth) : costs_(&costs), truth_(&truth) {}

    double add(const std::vector<Vec>& x, const std::vector<Vec>& z) {
        if (count_ == 0) {
            sum_x_ = x;
            sum_z_ = z;
        } else {
            for (std::size_t i = 0; i < x.size(); ++i) {
                sum_x_[i] += x[i];
                sum_z_[i] += z[i];
            }
        }
        ++count_;
        return gap();
    }

    double gap() const {
        const double k = static_cast<double>(count_);
        double value = -truth_->f_star;
        for (std::size_t i = 0; i < sum_x_.size(); ++i) {
            const Vec xbar = sum_x_[i] / k;
            const Vec zbar = sum_z_[i] / k;
            value += (*costs_)[i]->eval(xbar) + truth_->lambda_star[i].dot(xbar - zbar);
        }
        return value;
    }

    std::vector<Vec> x_bar() const { return scaled(sum_x_); }
    std::vector<Vec> z_bar() const { return scaled(sum_z_); }

 private:
    std::vector<Vec> scaled(const std::vector<Vec>& s) const {
        std::vector<Vec> out(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] / static_cast<double>(count_);
        return out;
    }

    const CostList* costs_;
    const GroundTruth* truth_;
    std::size_t count_ = 0;
    std::vector<Vec> sum_x_;
    std::vector<Vec> sum_z_;
};

struct IterationRecord {
    std::size_t k = 0;
    double objective = 0.0;
    double primal_res = 0.0;
    double dual_res = 0.0;
    Step consensus_steps = 0;
    bool capped = false;
    double z_spread = 0.0;
    /// NaN when the run had no ground truth.
    double gap = std::numeric_limits<double>::quiet_NaN();
    double max_node_err = std::numeric_limits<double>::quiet_NaN();
};

struct RunRecord {
    std::vector<IterationRecord> iterations;
    NodeStates initial;
    NodeStates final;
    /// Per-iteration states after the update, when requested.
    std::vector<NodeStates> trajectory;
    bool stopped_by_criterion = false;
    std::size_t capped_events = 0;

    Step total_consensus_steps() const {
        Step s = 0;
        for (const auto& it : iterations) s += it.consensus_steps;
        return s;
    }

    double mean_consensus_steps() const {
        return iterations.empty() ? 0.0
                                  : static_cast<double>(total_consensus_steps()) /
                                        static_cast<double>(iterations.size());
    }
};

/// i.i.d. N(0, 1) per component for x0, z0, lambda0.
inline NodeStates random_initial_states(std::size_t n, Eigen::Index p, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto draw = [&] {
        Vec v(p);
        for (Eigen::Index c = 0; c < p; ++c) v[c] = normal(rng);
        return v;
    };
    NodeStates s;
    for (std::size_t i = 0; i < n; ++i) s.x.push_back(draw());
    for (std::size_t i = 0; i < n; ++i) s.z.push_back(draw());
    for (std::size_t i = 0; i < n; ++i) s.lambda.push_back(draw());
    return s;
}

struct RunOptions {
    /// Enables the gap and per-node error columns.
    const GroundTruth* truth = nullptr;
    EventQueue::TraceSink trace = nullptr;
};

/// Asynchronous approximate distributed ADMM. Iteration k+1 starts only
/// after the consensus instance of iteration k has terminated at every node.
inline RunRecord run(const CostList& costs, const Network& net, const SolverConfig& cfg,
                     const RunOptions& opts = {}) {
    cfg.validate();
    const std::size_t n = costs.size();
    if (n == 0 || n != net.size()) throw std::invalid_argument("admm: one cost per node required");
    const Eigen::Index p = costs.front()->dim();
    for (const auto& c : costs) {
        if (c->dim() != p) throw std::invalid_argument("admm: cost dimensions differ");
    }
    if (opts.truth && (opts.truth->x_star.size() != p || opts.truth->lambda_star.size() != n))
        throw std::invalid_argument("admm: ground truth does not match the problem");

    DelayModel delays = cfg.mode == ZUpdateMode::ExactAverage
                            ? DelayModel::zero()
                            : (cfg.tau_bar == 0 ? DelayModel::zero()
                                                : DelayModel::uniform(cfg.tau_bar, detail::derive_seed(cfg.seed, 3)));

    RunRecord rec;
    NodeStates s = random_initial_states(n, p, detail::derive_seed(cfg.seed, 2));
    rec.initial = s;
    std::optional<ErgodicGap> ergodic;
    if (opts.truth) ergodic.emplace(costs, *opts.truth);

    for (std::size_t k = 0; k < cfg.k_max; ++k) {
        for (std::size_t i = 0; i < n; ++i) s.x[i] = x_update(*costs[i], s.lambda[i], s.z[i], cfg.rho);

        ZUpdateResult zr;
        if (cfg.mode == ZUpdateMode::ExactAverage) {
            std::vector<Vec> y0(n);
            for (std::size_t i = 0; i < n; ++i) y0[i] = s.x[i] + s.lambda[i] / cfg.rho;
            zr.z.assign(n, exact_average(y0));
        } else {
            zr = z_update(net, delays, s.x, s.lambda, cfg.rho, cfg.epsilon, cfg.step_cap, opts.trace);
        }
        std::vector<Vec> prev_z = std::move(s.z);
        s.z = std::move(zr.z);

        for (std::size_t i = 0; i < n; ++i) s.lambda[i] = lambda_update(s.lambda[i], s.x[i], s.z[i], cfg.rho);

        IterationRecord it;
        it.k = k + 1;
        it.objective = total_objective(costs, s.x);
        it.primal_res = stacked_distance(s.x, s.z);
        it.dual_res = cfg.rho * stacked_distance(s.z, prev_z);
        it.consensus_steps = zr.steps;
        it.capped = zr.capped;
        it.z_spread = max_pairwise_spread(s.z);
        if (ergodic) {
            it.gap = ergodic->add(s.x, s.z);
            it.max_node_err = 0.0;
            for (const auto& xi : s.x) it.max_node_err = std::max(it.max_node_err, (xi - opts.truth->x_star).norm());
        }
        if (zr.capped) ++rec.capped_events;
        rec.iterations.push_back(it);
        if (cfg.keep_trajectory) rec.trajectory.push_back(s);

        if (cfg.use_stopping_criterion && stopping_criterion(s, prev_z, cfg)) {
            rec.stopped_by_criterion = true;
            break;
        }
    }
    rec.final = std::move(s);
    return rec;
}

struct GapReport {
    /// gap[k-1] = L(Xbar^k, zbar^k, lambda*) - L*
    std::vector<double> gap;
    /// (1/2rho) ||lambda* - lambda0||^2 + (rho/2) ||X* - z0||^2
    double theta = 0.0;
    /// theta / k
    std::vector<double> rate_bound;
    /// Smallest c >= 0 with gap_k <= theta/k + c sqrt(n) eps for every k.
    double fitted_c = 0.0;
};

/// Lagrangian gap of the ergodic averages along a stored trajectory, and the
/// O(1/k) bound built from the run's initial point.
inline GapReport ergodic_gap_report(const CostList& costs, const RunRecord& rec, const GroundTruth& truth,
                                   double rho, double epsilon) {
    if (rec.trajectory.empty()) throw std::invalid_argument("ergodic_gap_report: run kept no trajectory");
    const std::size_t n = costs.size();
    GapReport out;
    for (std::size_t i = 0; i < n; ++i) {
        out.theta += (truth.lambda_star[i] - rec.initial.lambda[i]).squaredNorm() / (2.0 * rho);
        out.theta += 0.5 * rho * (truth.x_star - rec.initial.z[i]).squaredNorm();
    }
    ErgodicGap ergodic(costs, truth);
    const double slack_unit = std::sqrt(static_cast<double>(n)) * epsilon;
    for (std::size_t k = 1; k <= rec.trajectory.size(); ++k) {
        const auto& s = rec.trajectory[k - 1];
        const double g = ergodic.add(s.x, s.z);
        const double b = out.theta / static_cast<double>(k);
        out.gap.push_back(g);
        out.rate_bound.push_back(b);
        if (slack_unit > 0.0) out.fitted_c = std::max(out.fitted_c, (g - b) / slack_unit);
    }
    return out;
}

}  // namespace asyadmm
