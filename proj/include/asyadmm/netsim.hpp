#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iterator>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "asyadmm/digraph.hpp"
#include "asyadmm/random.hpp"

namespace asyadmm {

/// Logical time index shared by every node of one simulation.
using Step = std::uint64_t;

enum class MessageKind : std::uint8_t { RatioPair = 0, MinMaxPair = 1, Control = 2 };

inline std::string_view to_string(MessageKind kind) {
    switch (kind) {
        case MessageKind::RatioPair: return "ratio";
        case MessageKind::MinMaxPair: return "minmax";
        case MessageKind::Control: return "control";
    }
    return "unknown";
}

struct Message {
    NodeId sender = 0;
    NodeId receiver = 0;
    MessageKind kind = MessageKind::Control;
    std::vector<double> payload;
    Step sent_at = 0;
    Step deliver_at = 0;

    Step delay() const { return deliver_at - sent_at; }
};

/// Per-message integer delay in [0, tau_bar]. The own value of a node is
/// never delayed, so only inter-node links are sampled.
class DelayModel {
 public:
    enum class Distribution { Zero, Uniform, PerLink };

    using LinkBounds = std::map<std::pair<NodeId, NodeId>, Step>;  // (sender, receiver)

    static DelayModel zero() { return DelayModel(Distribution::Zero, 0, {}, 0); }

    static DelayModel uniform(Step tau_bar, std::uint64_t seed) {
        return DelayModel(Distribution::Uniform, tau_bar, {}, seed);
    }

    /// Each listed link samples uniformly from [0, bound]; unlisted links use tau_bar.
    static DelayModel per_link(Step tau_bar, LinkBounds bounds, std::uint64_t seed) {
        for (const auto& [link, bound] : bounds) {
            if (bound > tau_bar)
                throw std::invalid_argument("delay model: link bound exceeds tau_bar");
        }
        return DelayModel(Distribution::PerLink, tau_bar, std::move(bounds), seed);
    }

    Distribution distribution() const { return distribution_; }
    Step tau_bar() const { return tau_bar_; }
    /// Time-index staleness bound B = 1 + tau_bar.
    Step staleness_bound() const { return 1 + tau_bar_; }

    Step bound(NodeId sender, NodeId receiver) const {
        switch (distribution_) {
            case Distribution::Zero: return 0;
            case Distribution::Uniform: return tau_bar_;
            case Distribution::PerLink: {
                const auto it = bounds_.find({sender, receiver});
                return it == bounds_.end() ? tau_bar_ : it->second;
            }
        }
        return 0;
    }

    Step sample(NodeId sender, NodeId receiver) {
        if (sender == receiver) return 0;
        const Step b = bound(sender, receiver);
        return b == 0 ? 0 : detail::uniform_upto(rng_, b);
    }

 private:
    DelayModel(Distribution d, Step tau_bar, LinkBounds bounds, std::uint64_t seed)
        : distribution_(d), tau_bar_(tau_bar), bounds_(std::move(bounds)), rng_(seed) {}

    Distribution distribution_;
    Step tau_bar_;
    LinkBounds bounds_;
    Rng rng_;
};

/// Pending messages keyed by delivery time. Messages due at the same time
/// come out ordered by (receiver, sender, kind, sent_at).
class EventQueue {
 public:
    using TraceSink = std::function<void(const Message&)>;

    Step now() const { return now_; }

    std::size_t pending() const { return pending_; }
    bool empty() const { return pending_ == 0; }

    void set_trace(TraceSink sink) { trace_ = std::move(sink); }

    void push(Message m) {
        if (m.deliver_at < m.sent_at) throw std::logic_error("event queue: delivery before send");
        if (m.deliver_at < now_) throw std::logic_error("event queue: delivery in the past");
        const Step at = m.deliver_at;
        due_[at].push_back(std::move(m));
        ++pending_;
    }

    /// Removes and returns every message with deliver_at <= now.
    std::vector<Message> deliver_now() {
        std::vector<Message> out;
        auto it = due_.begin();
        while (it != due_.end() && it->first <= now_) {
            std::move(it->second.begin(), it->second.end(), std::back_inserter(out));
            it = due_.erase(it);
        }
        std::stable_sort(out.begin(), out.end(), [](const Message& a, const Message& b) {
            return std::tie(a.receiver, a.sender, a.kind, a.sent_at) <
                   std::tie(b.receiver, b.sender, b.kind, b.sent_at);
        });
        pending_ -= out.size();
        if (trace_) {
            for (const auto& m : out) trace_(m);
        }
        return out;
    }

    /// Moves the clock forward one step and returns what became due.
    std::pair<Step, std::vector<Message>> advance() {
        ++now_;
        auto delivered = deliver_now();
        return {now_, std::move(delivered)};
    }

    /// Moves the clock forward one step without delivering.
    void tick() { ++now_; }

 private:
    Step now_ = 0;
    std::size_t pending_ = 0;
    std::map<Step, std::vector<Message>> due_;
    TraceSink trace_;
};

/// Sends `payload` from `sender` to each out-neighbor with an independently
/// sampled delay. The sender's own term is applied locally by the receiver
/// of the state update and is not enqueued.
inline void broadcast(NodeId sender, const Digraph& g, MessageKind kind,
                      const std::vector<double>& payload, DelayModel& dm, EventQueue& q) {
    for (NodeId l : g.out_neighbors(sender)) {
        const Step tau = dm.sample(sender, l);
        q.push(Message{sender, l, kind, payload, q.now(), q.now() + tau});
    }
}

/// One trace line: `k,sender,receiver,kind` with k the delivery step.
inline std::string trace_line(const Message& m) {
    return std::to_string(m.deliver_at) + ',' + std::to_string(m.sender) + ',' +
           std::to_string(m.receiver) + ',' + std::string(to_string(m.kind));
}

}  // namespace asyadmm
