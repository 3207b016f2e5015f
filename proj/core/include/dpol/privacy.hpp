#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dpol {

/// (epsilon, delta) pair. delta == 0 encodes pure DP.
struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;

  static PrivacyBudget pure(double eps) { return {eps, 0.0}; }

  void validate() const;

  /// True when this budget dominates `other` within tolerance.
  bool covers(const PrivacyBudget& other, double tol = 1e-9) const {
    return other.epsilon <= epsilon + tol && other.delta <= delta + tol;
  }
};

struct LedgerEntry {
  std::string label;
  double epsilon = 0.0;
  double delta = 0.0;
  uint64_t count = 0;
};

/// Record of the mechanisms an algorithm ran, for composition accounting.
class CompositionLedger {
 public:
  void add(std::string label, double epsilon, double delta, uint64_t count = 1);
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<LedgerEntry> entries_;
};

/// Basic composition: sum of count_i * (eps_i, delta_i). Ledger must be nonempty.
PrivacyBudget compose_basic(const CompositionLedger& ledger);

/// Advanced composition of k mechanisms, each (epsilon, delta)-DP:
/// (sqrt(2k ln(1/delta')) eps + k eps (e^eps - 1), delta' + k delta).
PrivacyBudget compose_advanced(double epsilon, double delta, uint64_t k,
                               double delta_prime);

/// Advanced composition over a ledger whose entries all share (eps, delta).
PrivacyBudget compose_advanced(const CompositionLedger& ledger,
                               double delta_prime);

}  // namespace dpol
