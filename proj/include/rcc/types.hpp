#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace rcc {

using ReplicaId = std::uint32_t;
using ClientId = std::uint32_t;
// 1-based; instance i is coordinated by replica i - 1.
using InstanceId = std::uint32_t;
// Per-instance round. Signed so that "nothing accepted yet" is -1.
using Round = std::int64_t;
using ViewNum = std::uint64_t;
// Virtual time units. One unit models one millisecond.
using SimTime = std::int64_t;

// Clients share the authentication namespace with replicas; node ids at or
// above this value belong to clients.
inline constexpr std::uint32_t kClientNodeBase = 1u << 20;
inline constexpr ClientId kNoClient = std::numeric_limits<ClientId>::max();
inline constexpr Round kNoRound = -1;
inline constexpr SimTime kTicksPerSecond = 1000;

inline constexpr std::uint32_t client_node(ClientId c) { return kClientNodeBase + c; }
inline constexpr bool is_client_node(std::uint32_t node) { return node >= kClientNodeBase; }

inline constexpr ReplicaId primary_of(InstanceId i) { return i - 1; }

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when replicas diverge on an accepted value. Never expected in a
// correct run; simulation traces abort on it.
class ProtocolViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OrderingPolicy { by_instance, hash_permuted };

std::string to_string(OrderingPolicy p);
OrderingPolicy parse_ordering(const std::string& s);

struct SystemConfig {
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  std::uint32_t m = 4;
  Round sigma = 5;
  SimTime base_timeout = 50;
  // Maximum number of proposed-but-unexecuted rounds a primary may have.
  Round window = 64;
  // Cap on the exponent used for timeout growth.
  std::uint32_t max_timeout_doublings = 3;
  OrderingPolicy ordering = OrderingPolicy::by_instance;
  // Send the full recoverable state only to the recovery leader.
  bool failure_state_to_leader_only = false;
  // Checkpoint contributions are rebroadcast at most this many times.
  std::uint32_t checkpoint_retries = 5;
  // Primary pacing: one proposal per instance per this many time units.
  SimTime propose_interval = 5;

  std::uint32_t nf() const { return n - f; }

  // Throws ConfigError.
  void validate() const;
};

struct QuorumSizes {
  std::uint32_t detect = 0;          // f + 1
  std::uint32_t confirm = 0;         // nf
  std::uint32_t prepare_commit = 0;  // nf
  std::uint32_t checkpoint_trigger = 0;  // nf - f
};

QuorumSizes quorum_sizes(const SystemConfig& cfg);

}  // namespace rcc
