#include "dpol/trace.hpp"

#include <ostream>

#include "dpol/errors.hpp"

namespace dpol {

std::vector<double>& AlgorithmTrace::add_column(const std::string& name) {
  for (auto& [n, col] : extra_)
    if (n == name) return col;
  extra_.emplace_back(name, std::vector<double>{});
  return extra_.back().second;
}

const std::vector<double>* AlgorithmTrace::column(const std::string& name) const {
  for (const auto& [n, col] : extra_)
    if (n == name) return &col;
  return nullptr;
}

size_t AlgorithmTrace::count_events(const std::string& name) const {
  size_t n = 0;
  for (const auto& e : events)
    if (e.event == name) ++n;
  return n;
}

void AlgorithmTrace::write_csv(std::ostream& out) const {
  out << "t,expert,loss,switched,phase";
  for (const auto& [name, col] : extra_) {
    if (col.size() != rows.size())
      throw StateError("AlgorithmTrace: extra column '" + name +
                       "' out of sync with rows");
    out << ',' << name;
  }
  out << '\n';
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << r.t << ',' << r.expert << ',' << r.loss << ',' << (r.switched ? 1 : 0)
        << ',' << r.phase;
    for (const auto& [name, col] : extra_) out << ',' << col[i];
    out << '\n';
  }
}

}  // namespace dpol
