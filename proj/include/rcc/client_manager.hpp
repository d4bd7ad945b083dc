#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "rcc/types.hpp"

namespace rcc {

inline constexpr Round kOpenEnded = std::numeric_limits<Round>::max();

struct SwitchWindows {
  // Last round the old instance may have the client's transactions accepted.
  Round stop_accept = 0;
  // First round the new instance may have them accepted.
  Round start_accept = 0;
  // First round the new primary proposes them.
  Round propose_from = 0;
};

// `observed` is the highest round this replica saw proposed in any running
// instance when the switch took effect.
SwitchWindows switch_windows(Round observed, Round sigma);

struct AcceptSegment {
  InstanceId instance = 0;
  Round from = 0;
  Round to = kOpenEnded;  // inclusive
};

// Per-replica view of which instance serves each client.
class ClientManager {
 public:
  explicit ClientManager(const SystemConfig& cfg);

  InstanceId initial_assignment(ClientId c) const { return static_cast<InstanceId>(c % m_) + 1; }
  InstanceId assigned(ClientId c) const;

  bool acceptable(ClientId c, InstanceId instance, Round round) const;
  bool may_propose(ClientId c, InstanceId instance, Round round) const;

  SwitchWindows apply_switch(ClientId c, InstanceId target, Round observed);
  std::optional<std::uint64_t> last_switch_nonce(ClientId c) const;
  void note_switch_nonce(ClientId c, std::uint64_t nonce) { switch_nonce_[c] = nonce; }

  // Switches decided while the target was halted wait here.
  void defer(ClientId c, InstanceId target, std::uint64_t nonce) { deferred_.push_back({c, target, nonce}); }
  struct Deferred {
    ClientId client;
    InstanceId target;
    std::uint64_t nonce;
  };
  std::vector<Deferred> take_deferred(InstanceId target);
  bool has_deferred(ClientId c) const;

  // Forced-request support: time of the latest proposal carrying the
  // client's transaction in the instance.
  void note_proposed(InstanceId instance, ClientId c, SimTime at) { last_proposed_[{instance, c}] = at; }
  std::optional<SimTime> last_proposed(InstanceId instance, ClientId c) const;

  const std::vector<AcceptSegment>& segments(ClientId c) const;

 private:
  std::vector<AcceptSegment>& segments_mut(ClientId c);

  std::uint32_t m_;
  Round sigma_;
  std::map<ClientId, std::vector<AcceptSegment>> segments_;
  std::map<ClientId, Round> propose_from_;
  std::map<ClientId, std::uint64_t> switch_nonce_;
  std::vector<Deferred> deferred_;
  std::map<std::pair<InstanceId, ClientId>, SimTime> last_proposed_;
};

}  // namespace rcc
