#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace rcc::check {

enum class Status { pass, fail, skipped };

const char* to_string(Status s);

struct InvariantResult {
  std::string name;
  Status status = Status::pass;
  std::string detail;
};

struct CheckReport {
  std::vector<InvariantResult> results;

  bool ok() const;
  const InvariantResult* find(const std::string& name) const;
  void print(std::ostream& out) const;
};

// Invariants: fault-budget, no-violation, agreement, execution-order,
// final-state, ledger-integrity, recovery, quorum-acceptance, liveness,
// single-proposer, checkpoint-silence.
CheckReport check_trace(std::istream& trace);
CheckReport check_trace_text(const std::string& trace);

}  // namespace rcc::check
