#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dpol/privacy.hpp"

namespace dpol {

struct TraceRow {
  uint32_t t = 0;        // 1-based round
  int32_t expert = -1;   // chosen action (-1 when the action is a point, not an index)
  double loss = 0.0;
  bool switched = false;
  uint32_t phase = 0;
};

struct PhaseEvent {
  uint32_t round = 0;  // 1-based
  std::string event;
};

/// Per-round record of a run: chosen action, incurred loss, switch events and
/// algorithm-specific extra columns, plus the privacy accounting of the run.
class AlgorithmTrace {
 public:
  std::vector<TraceRow> rows;
  std::vector<PhaseEvent> events;
  CompositionLedger ledger;
  PrivacyBudget spent;       // composed by the producing algorithm
  PrivacyBudget configured;  // what the caller asked for

  void add_event(uint32_t round, std::string event) {
    events.push_back({round, std::move(event)});
  }
  /// Registers an extra CSV column; returns the storage to append into.
  /// The reference stays valid as further columns are added; columns must
  /// stay aligned with `rows`.
  std::vector<double>& add_column(const std::string& name);
  const std::vector<double>* column(const std::string& name) const;

  size_t count_events(const std::string& name) const;

  /// Streams rows as CSV: t,expert,loss,switched,phase[,extras...].
  void write_csv(std::ostream& out) const;

 private:
  std::deque<std::pair<std::string, std::vector<double>>> extra_;
};

}  // namespace dpol
