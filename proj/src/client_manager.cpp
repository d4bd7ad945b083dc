#include "rcc/client_manager.hpp"

#include <algorithm>

namespace rcc {

SwitchWindows switch_windows(Round observed, Round sigma) {
  return {observed + sigma, observed + 2 * sigma, observed + 3 * sigma};
}

ClientManager::ClientManager(const SystemConfig& cfg) : m_(cfg.m), sigma_(cfg.sigma) {}

const std::vector<AcceptSegment>& ClientManager::segments(ClientId c) const {
  static const std::vector<AcceptSegment> none;
  const auto it = segments_.find(c);
  return it == segments_.end() ? none : it->second;
}

std::vector<AcceptSegment>& ClientManager::segments_mut(ClientId c) {
  auto [it, inserted] = segments_.try_emplace(c);
  if (inserted) it->second.push_back({initial_assignment(c), 0, kOpenEnded});
  return it->second;
}

InstanceId ClientManager::assigned(ClientId c) const {
  const auto it = segments_.find(c);
  return it == segments_.end() ? initial_assignment(c) : it->second.back().instance;
}

bool ClientManager::acceptable(ClientId c, InstanceId instance, Round round) const {
  const auto it = segments_.find(c);
  if (it == segments_.end()) return instance == initial_assignment(c);
  return std::any_of(it->second.begin(), it->second.end(), [&](const AcceptSegment& s) {
    return s.instance == instance && round >= s.from && round <= s.to;
  });
}

bool ClientManager::may_propose(ClientId c, InstanceId instance, Round round) const {
  if (assigned(c) != instance) return false;
  const auto it = propose_from_.find(c);
  return it == propose_from_.end() || round >= it->second;
}

SwitchWindows ClientManager::apply_switch(ClientId c, InstanceId target, Round observed) {
  const SwitchWindows w = switch_windows(observed, sigma_);
  auto& segs = segments_mut(c);
  segs.back().to = std::min(segs.back().to, w.stop_accept);
  segs.push_back({target, w.start_accept, kOpenEnded});
  propose_from_[c] = w.propose_from;
  return w;
}

std::optional<std::uint64_t> ClientManager::last_switch_nonce(ClientId c) const {
  const auto it = switch_nonce_.find(c);
  if (it == switch_nonce_.end()) return std::nullopt;
  return it->second;
}

std::vector<ClientManager::Deferred> ClientManager::take_deferred(InstanceId target) {
  std::vector<Deferred> out;
  std::erase_if(deferred_, [&](const Deferred& d) {
    if (d.target != target) return false;
    out.push_back(d);
    return true;
  });
  return out;
}

bool ClientManager::has_deferred(ClientId c) const {
  return std::any_of(deferred_.begin(), deferred_.end(), [&](const Deferred& d) { return d.client == c; });
}

std::optional<SimTime> ClientManager::last_proposed(InstanceId instance, ClientId c) const {
  const auto it = last_proposed_.find({instance, c});
  if (it == last_proposed_.end()) return std::nullopt;
  return it->second;
}

}  // namespace rcc
