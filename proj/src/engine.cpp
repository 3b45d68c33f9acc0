#include "beepvote/engine.hpp"

#include <ostream>

namespace beepvote {

Channel::Channel(const Graph& g, Duplex duplex, std::uint64_t slot_budget, std::ostream* trace)
    : graph_(&g),
      duplex_(duplex),
      slot_budget_(slot_budget),
      trace_(trace),
      heard_(g.node_count(), 0),
      beeping_(g.node_count(), 0) {}

void Channel::charge(std::uint64_t slots) {
  if (slots > slot_budget_ - metrics_.slots_elapsed) {
    metrics_.slots_elapsed = slot_budget_;
    throw SlotBudgetExhausted();
  }
  metrics_.slots_elapsed += slots;
}

std::span<const std::uint8_t> Channel::transmit(std::span<const NodeId> beepers) {
  for (NodeId v : touched_) heard_[v] = 0;
  touched_.clear();

  const std::uint64_t slot = metrics_.slots_elapsed;
  charge(1);
  metrics_.total_beeps += beepers.size();

  for (NodeId v : beepers) beeping_[v] = 1;
  for (NodeId v : beepers) {
    for (NodeId u : graph_->neighbors(v)) {
      if (heard_[u] || (beeping_[u] && duplex_ == Duplex::half)) continue;
      heard_[u] = 1;
      touched_.push_back(u);
    }
  }
  for (NodeId v : beepers) beeping_[v] = 0;

  if (trace_) {
    for (NodeId v : beepers) *trace_ << slot << ' ' << v + 1 << " B " << int{heard_[v]} << '\n';
    for (NodeId v : touched_) *trace_ << slot << ' ' << v + 1 << " L 1\n";
  }
  return heard_;
}

std::vector<SlotObservation> Channel::step(std::span<const SlotAction> actions) {
  if (actions.size() != graph_->node_count())
    throw std::invalid_argument("action array length does not match node count");
  std::vector<NodeId> beepers;
  for (NodeId v = 0; v < actions.size(); ++v)
    if (actions[v] == SlotAction::beep) beepers.push_back(v);
  auto heard = transmit(beepers);
  std::vector<SlotObservation> out(actions.size());
  for (std::size_t v = 0; v < out.size(); ++v) out[v].heard = heard[v] != 0;
  return out;
}

void Channel::idle(std::uint64_t slots) {
  if (slots == 0) return;
  for (NodeId v : touched_) heard_[v] = 0;
  touched_.clear();
  const std::uint64_t first = metrics_.slots_elapsed;
  charge(slots);
  if (trace_) *trace_ << first << '-' << first + slots - 1 << " silent\n";
}

std::vector<SlotObservation> step(const Graph& g, std::span<const SlotAction> actions) {
  Channel channel(g);
  return channel.step(actions);
}

const char* to_string(RunStatus status) noexcept {
  switch (status) {
    case RunStatus::terminated: return "terminated";
    case RunStatus::max_phases_exceeded: return "max_phases_exceeded";
    case RunStatus::slot_budget_exhausted: return "slot_budget_exhausted";
  }
  return "unknown";
}

}  // namespace beepvote
