#include "rcc/checkpoint.hpp"

namespace rcc {

CheckpointTracker::CheckpointTracker(const SystemConfig& cfg) : threshold_(quorum_sizes(cfg).checkpoint_trigger) {}

bool CheckpointTracker::on_claim(std::uint32_t sender, InstanceId instance, Round round) {
  auto& c = claims_[round];
  c.emplace(sender, instance);
  if (c.size() >= threshold_ && !triggered_.contains(round)) {
    triggered_.insert(round);
    return true;
  }
  return false;
}

std::size_t CheckpointTracker::claims(Round round) const {
  const auto it = claims_.find(round);
  return it == claims_.end() ? 0 : it->second.size();
}

std::vector<InstanceId> CheckpointTracker::claimed_instances(Round round) const {
  std::set<InstanceId> s;
  if (const auto it = claims_.find(round); it != claims_.end()) {
    for (const auto& [sender, instance] : it->second) s.insert(instance);
  }
  return {s.begin(), s.end()};
}

bool CheckpointTracker::claimed(InstanceId instance, Round round) const {
  const auto it = claims_.find(round);
  if (it == claims_.end()) return false;
  for (const auto& [sender, i] : it->second) {
    if (i == instance) return true;
  }
  return false;
}

bool CheckpointTracker::mark_contributed(InstanceId instance, Round round) {
  return contributed_.emplace(instance, round).second;
}

std::optional<Certificate> CheckpointTracker::on_contribution(ReplicaId sender, const CheckpointMsg& msg) {
  const std::pair key{msg.instance, msg.round};
  if (adopted_.contains(key) || !msg.cert.txn) return std::nullopt;
  auto& senders = votes_[key][msg.cert.txn->digest()];
  senders.insert(sender);
  if (senders.size() < threshold_) return std::nullopt;
  adopted_.insert(key);
  votes_.erase(key);
  return msg.cert;
}

void CheckpointTracker::prune_below(Round round) {
  claims_.erase(claims_.begin(), claims_.lower_bound(round));
  triggered_.erase(triggered_.begin(), triggered_.lower_bound(round));
  std::erase_if(contributed_, [&](const auto& k) { return k.second < round; });
  std::erase_if(votes_, [&](const auto& kv) { return kv.first.second < round; });
  std::erase_if(adopted_, [&](const auto& k) { return k.second < round; });
}

}  // namespace rcc
