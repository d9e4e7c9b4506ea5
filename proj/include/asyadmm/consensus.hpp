#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "asyadmm/digraph.hpp"
#include "asyadmm/netsim.hpp"

namespace asyadmm {

using Vec = Eigen::VectorXd;

/// Topology plus everything a node is allowed to know about it up front:
/// its out-degree (through the weights) and the diameter.
struct Network {
    Digraph graph;
    WeightMatrix weights;
    std::size_t diameter;

    explicit Network(Digraph g)
        : graph(std::move(g)), weights(graph), diameter(asyadmm::diameter(graph)) {}

    std::size_t size() const { return graph.size(); }

    /// Steps between termination checks, (1 + tau_bar) * D. A single node
    /// uses D = 1.
    Step round_length(Step tau_bar) const {
        return (1 + tau_bar) * std::max<Step>(diameter, 1);
    }
};

/// Push-sum state. One scalar denominator serves all components of y.
struct RatioState {
    Vec y;
    double w = 1.0;
    Vec z;

    static RatioState initial(const Vec& y0) { return {y0, 1.0, y0}; }
};

/// Running max/min of ratio snapshots used to decide termination.
struct TerminationState {
    Vec M;
    Vec m;
    bool flag = false;
    /// Messages sent before this step belong to an earlier round and are ignored.
    Step epoch_start = 0;

    static TerminationState initial(Eigen::Index dim) {
        return {Vec::Constant(dim, std::numeric_limits<double>::infinity()),
                Vec::Constant(dim, -std::numeric_limits<double>::infinity()), false, 0};
    }

    void reinitialize(const Vec& z, Step k) {
        M = z;
        m = z;
        epoch_start = k;
    }

    double spread() const { return (M - m).norm(); }
};

inline std::vector<double> ratio_payload(const RatioState& s, double sender_weight) {
    std::vector<double> out(static_cast<std::size_t>(s.y.size()) + 1);
    for (Eigen::Index c = 0; c < s.y.size(); ++c) out[c] = sender_weight * s.y[c];
    out.back() = sender_weight * s.w;
    return out;
}

inline std::vector<double> minmax_payload(const TerminationState& t) {
    const auto p = static_cast<std::size_t>(t.M.size());
    std::vector<double> out(2 * p);
    for (std::size_t c = 0; c < p; ++c) {
        out[c] = t.M[c];
        out[p + c] = t.m[c];
    }
    return out;
}

/// y' = p_jj y + sum of delivered pre-scaled y's; likewise for w.
/// `delivered` must hold only RatioPair messages addressed to `node`.
inline RatioState ratio_step(NodeId node, std::span<const Message> delivered,
                             const RatioState& own, const WeightMatrix& weights) {
    const double self = weights(node, node);
    const Eigen::Index p = own.y.size();
    RatioState next;
    next.y = self * own.y;
    next.w = self * own.w;
    for (const auto& msg : delivered) {
        if (msg.receiver != node || msg.kind != MessageKind::RatioPair ||
            msg.payload.size() != static_cast<std::size_t>(p) + 1)
            throw std::invalid_argument("ratio_step: foreign or malformed message");
        for (Eigen::Index c = 0; c < p; ++c) next.y[c] += msg.payload[c];
        next.w += msg.payload.back();
    }
    if (!(next.w > 0.0)) throw std::logic_error("ratio_step: nonpositive denominator");
    next.z = next.y / next.w;
    return next;
}

/// Componentwise max of M and min of m over own and delivered states of the
/// current round.
inline TerminationState minmax_step(std::span<const Message> delivered, const TerminationState& own) {
    TerminationState next = own;
    const Eigen::Index p = own.M.size();
    for (const auto& msg : delivered) {
        if (msg.kind != MessageKind::MinMaxPair || msg.payload.size() != 2 * static_cast<std::size_t>(p))
            throw std::invalid_argument("minmax_step: malformed message");
        if (msg.sent_at < own.epoch_start) continue;
        for (Eigen::Index c = 0; c < p; ++c) {
            next.M[c] = std::max(next.M[c], msg.payload[c]);
            next.m[c] = std::min(next.m[c], msg.payload[p + c]);
        }
    }
    return next;
}

namespace detail {

struct Inbox {
    std::vector<Message> ratio;
    std::vector<Message> minmax;
};

inline std::vector<Inbox> sort_into_inboxes(std::vector<Message> delivered, std::size_t n) {
    std::vector<Inbox> boxes(n);
    for (auto& m : delivered) {
        auto& box = boxes.at(m.receiver);
        if (m.kind == MessageKind::RatioPair)
            box.ratio.push_back(std::move(m));
        else if (m.kind == MessageKind::MinMaxPair)
            box.minmax.push_back(std::move(m));
    }
    return boxes;
}

inline void check_initial(const Network& net, const std::vector<Vec>& init) {
    if (init.size() != net.size()) throw std::invalid_argument("consensus: one initial vector per node");
    for (const auto& v : init) {
        if (v.size() != init.front().size())
            throw std::invalid_argument("consensus: initial vectors differ in dimension");
    }
}

}  // namespace detail

/// Delayed ratio consensus driven step by step; exposes in-flight mass.
class RatioConsensus {
 public:
    RatioConsensus(const Network& net, DelayModel& delays, const std::vector<Vec>& y0)
        : net_(&net), delays_(&delays) {
        detail::check_initial(net, y0);
        states_.reserve(y0.size());
        for (const auto& y : y0) states_.push_back(RatioState::initial(y));
    }

    Step now() const { return queue_.now(); }
    const std::vector<RatioState>& states() const { return states_; }
    EventQueue& queue() { return queue_; }

    void step() {
        const auto& g = net_->graph;
        for (NodeId j = 0; j < g.size(); ++j) {
            broadcast(j, g, MessageKind::RatioPair, ratio_payload(states_[j], net_->weights.sender_weight(j)),
                      *delays_, queue_);
        }
        auto boxes = detail::sort_into_inboxes(queue_.deliver_now(), g.size());
        for (NodeId j = 0; j < g.size(); ++j)
            states_[j] = ratio_step(j, boxes[j].ratio, states_[j], net_->weights);
        queue_.tick();
    }

    /// Sum of y over node states and messages still in flight.
    Vec total_y() const {
        Vec total = Vec::Zero(states_.front().y.size());
        for (const auto& s : states_) total += s.y;
        for_each_in_flight([&](const Message& m) {
            for (Eigen::Index c = 0; c < total.size(); ++c) total[c] += m.payload[c];
        });
        return total;
    }

    double total_w() const {
        double total = 0.0;
        for (const auto& s : states_) total += s.w;
        for_each_in_flight([&](const Message& m) { total += m.payload.back(); });
        return total;
    }

 private:
    void for_each_in_flight(const std::function<void(const Message&)>& f) const {
        // Copying the queue keeps the public surface of EventQueue minimal.
        EventQueue copy = queue_;
        copy.set_trace(nullptr);
        while (!copy.empty()) {
            for (const auto& m : copy.deliver_now()) f(m);
            copy.tick();
        }
    }

    const Network* net_;
    DelayModel* delays_;
    EventQueue queue_;
    std::vector<RatioState> states_;
};

/// Standalone delayed max- and min-consensus over fixed initial values.
class MinMaxConsensus {
 public:
    MinMaxConsensus(const Network& net, DelayModel& delays, const std::vector<Vec>& init)
        : net_(&net), delays_(&delays) {
        detail::check_initial(net, init);
        for (const auto& v : init) states_.push_back({v, v, false, 0});
        global_max_ = init.front();
        global_min_ = init.front();
        for (const auto& v : init) {
            global_max_ = global_max_.cwiseMax(v);
            global_min_ = global_min_.cwiseMin(v);
        }
    }

    Step now() const { return queue_.now(); }
    const std::vector<TerminationState>& states() const { return states_; }

    void step() {
        const auto& g = net_->graph;
        for (NodeId j = 0; j < g.size(); ++j)
            broadcast(j, g, MessageKind::MinMaxPair, minmax_payload(states_[j]), *delays_, queue_);
        auto boxes = detail::sort_into_inboxes(queue_.deliver_now(), g.size());
        for (NodeId j = 0; j < g.size(); ++j) states_[j] = minmax_step(boxes[j].minmax, states_[j]);
        queue_.tick();
    }

    bool max_converged() const {
        return std::all_of(states_.begin(), states_.end(),
                           [&](const TerminationState& s) { return s.M == global_max_; });
    }

    bool min_converged() const {
        return std::all_of(states_.begin(), states_.end(),
                           [&](const TerminationState& s) { return s.m == global_min_; });
    }

 private:
    const Network* net_;
    DelayModel* delays_;
    EventQueue queue_;
    std::vector<TerminationState> states_;
    Vec global_max_;
    Vec global_min_;
};

struct ConsensusResult {
    std::vector<Vec> z;
    /// Ratio iterations executed.
    Step steps = 0;
    bool converged = false;
    /// Steps at which M and m were checked and reinitialized.
    std::vector<Step> checks;
};

/// Ratio consensus with the periodic max/min spread test. Every
/// (1 + tau_bar) D steps each node compares ||M - m|| with `epsilon`, raises
/// its flag on success, and otherwise restarts M = m = z. All nodes see the
/// same M and m at a check, so they stop together.
inline ConsensusResult run_terminating_consensus(const Network& net, DelayModel& delays,
                                                 const std::vector<Vec>& y0, double epsilon,
                                                 Step step_cap,
                                                 EventQueue::TraceSink trace = nullptr) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("terminating consensus: epsilon must be positive");
    detail::check_initial(net, y0);

    const auto& g = net.graph;
    const std::size_t n = g.size();
    const Step round = net.round_length(delays.tau_bar());

    std::vector<RatioState> ratio;
    std::vector<TerminationState> term;
    ratio.reserve(n);
    term.reserve(n);
    for (const auto& y : y0) {
        ratio.push_back(RatioState::initial(y));
        term.push_back(TerminationState::initial(y.size()));
    }

    EventQueue queue;
    if (trace) queue.set_trace(std::move(trace));

    ConsensusResult result;
    const auto finish = [&](bool converged) {
        result.converged = converged;
        result.steps = queue.now();
        result.z.reserve(n);
        for (const auto& s : ratio) result.z.push_back(s.z);
        return result;
    };

    for (;;) {
        const Step k = queue.now();
        if (k != 0 && k % round == 0) {
            result.checks.push_back(k);
            for (NodeId j = 0; j < n; ++j) {
                if (term[j].spread() < epsilon) term[j].flag = true;
                term[j].reinitialize(ratio[j].z, k);
            }
            const bool any = std::any_of(term.begin(), term.end(), [](const auto& t) { return t.flag; });
            const bool all = std::all_of(term.begin(), term.end(), [](const auto& t) { return t.flag; });
            if (any != all) throw std::logic_error("terminating consensus: nodes disagree at a check");
            if (all) return finish(true);
        }
        if (k >= step_cap) return finish(false);

        for (NodeId j = 0; j < n; ++j) {
            broadcast(j, g, MessageKind::RatioPair, ratio_payload(ratio[j], net.weights.sender_weight(j)),
                      delays, queue);
            broadcast(j, g, MessageKind::MinMaxPair, minmax_payload(term[j]), delays, queue);
        }
        auto boxes = detail::sort_into_inboxes(queue.deliver_now(), n);
        for (NodeId j = 0; j < n; ++j) {
            ratio[j] = ratio_step(j, boxes[j].ratio, ratio[j], net.weights);
            term[j] = minmax_step(boxes[j].minmax, term[j]);
        }
        queue.tick();
    }
}

}  // namespace asyadmm
