#include "dpol/privacy.hpp"

#include <cmath>

#include "dpol/errors.hpp"

namespace dpol {

void PrivacyBudget::validate() const {
  if (!(epsilon > 0.0)) throw ParameterError("PrivacyBudget: epsilon must be positive");
  if (delta < 0.0 || delta > 1.0) throw ParameterError("PrivacyBudget: delta must lie in [0,1]");
}

void CompositionLedger::add(std::string label, double epsilon, double delta,
                            uint64_t count) {
  if (epsilon < 0.0 || delta < 0.0)
    throw ParameterError("CompositionLedger: negative entry");
  entries_.push_back({std::move(label), epsilon, delta, count});
}

PrivacyBudget compose_basic(const CompositionLedger& ledger) {
  if (ledger.empty()) throw ParameterError("compose_basic: empty ledger");
  PrivacyBudget total;
  for (const auto& e : ledger.entries()) {
    total.epsilon += static_cast<double>(e.count) * e.epsilon;
    total.delta += static_cast<double>(e.count) * e.delta;
  }
  return total;
}

PrivacyBudget compose_advanced(double epsilon, double delta, uint64_t k,
                               double delta_prime) {
  if (delta_prime <= 0.0)
    throw ParameterError("compose_advanced: delta' must be positive");
  if (epsilon < 0.0 || delta < 0.0)
    throw ParameterError("compose_advanced: negative parameter");
  if (k == 0) return {0.0, delta_prime};
  const double kd = static_cast<double>(k);
  const double eps_total = std::sqrt(2.0 * kd * std::log(1.0 / delta_prime)) * epsilon +
                           kd * epsilon * std::expm1(epsilon);
  return {eps_total, delta_prime + kd * delta};
}

PrivacyBudget compose_advanced(const CompositionLedger& ledger,
                               double delta_prime) {
  if (ledger.empty()) throw ParameterError("compose_advanced: empty ledger");
  const auto& first = ledger.entries().front();
  uint64_t k = 0;
  for (const auto& e : ledger.entries()) {
    if (e.epsilon != first.epsilon || e.delta != first.delta)
      throw ParameterError("compose_advanced: ledger entries are not uniform");
    k += e.count;
  }
  return compose_advanced(first.epsilon, first.delta, k, delta_prime);
}

}  // namespace dpol
