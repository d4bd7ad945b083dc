#include "rcc/types.hpp"

namespace rcc {

std::string to_string(OrderingPolicy p) {
  return p == OrderingPolicy::by_instance ? "by-instance" : "hash";
}

OrderingPolicy parse_ordering(const std::string& s) {
  if (s == "by-instance" || s == "by_instance") return OrderingPolicy::by_instance;
  if (s == "hash" || s == "hash_permuted" || s == "hash-permuted") return OrderingPolicy::hash_permuted;
  throw ConfigError("unknown ordering policy '" + s + "'");
}

void SystemConfig::validate() const {
  if (n <= 3 * f) {
    throw ConfigError("n must exceed 3f (n=" + std::to_string(n) + ", f=" + std::to_string(f) + ")");
  }
  if (m < 1 || m > n) throw ConfigError("m must satisfy 1 <= m <= n");
  if (sigma < 1) throw ConfigError("sigma must be at least 1");
  if (base_timeout < 1) throw ConfigError("base_timeout must be positive");
  if (window < 1) throw ConfigError("window must be positive");
  if (propose_interval < 1) throw ConfigError("propose_interval must be positive");
  // k! must fit in 64 bits for the permutation index.
  if (ordering == OrderingPolicy::hash_permuted && m > 20) {
    throw ConfigError("hash ordering supports at most 20 instances");
  }
}

QuorumSizes quorum_sizes(const SystemConfig& cfg) {
  cfg.validate();
  const auto nf = cfg.nf();
  return QuorumSizes{cfg.f + 1, nf, nf, nf - cfg.f};
}

}  // namespace rcc
