#include "dpol/experts_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dpol/errors.hpp"

namespace dpol {

namespace {
constexpr char kBinaryMagic[8] = {'D', 'P', 'O', 'L', 'S', 'Q', '0', '1'};
}

LossSequence::LossSequence(size_t horizon, size_t experts)
    : horizon_(horizon), experts_(experts), data_(horizon * experts, 0.0) {
  if (horizon == 0 || experts == 0)
    throw ParameterError("LossSequence: horizon and experts must be positive");
}

void LossSequence::set(size_t round, size_t expert, double value) {
  if (round >= horizon_ || expert >= experts_)
    throw ParameterError("LossSequence: index out of range");
  if (!(value >= 0.0 && value <= 1.0))
    throw ParameterError("LossSequence: entry outside [0,1]");
  data_[round * experts_ + expert] = value;
}

std::vector<double> LossSequence::column_sums() const {
  std::vector<double> sums(experts_, 0.0);
  for (size_t t = 0; t < horizon_; ++t)
    for (size_t x = 0; x < experts_; ++x) sums[x] += data_[t * experts_ + x];
  return sums;
}

double LossSequence::best_expert_loss() const {
  const auto sums = column_sums();
  return *std::min_element(sums.begin(), sums.end());
}

size_t LossSequence::best_expert() const {
  const auto sums = column_sums();
  return std::min_element(sums.begin(), sums.end()) - sums.begin();
}

void LossSequence::validate() const {
  for (double v : data_)
    if (!(v >= 0.0 && v <= 1.0))
      throw ParameterError("LossSequence: entry outside [0,1]");
}

void LossSequence::write_csv(std::ostream& out) const {
  out << "t";
  for (size_t x = 0; x < experts_; ++x) out << ",x" << x;
  out << '\n';
  out.precision(17);
  for (size_t t = 0; t < horizon_; ++t) {
    out << (t + 1);
    for (size_t x = 0; x < experts_; ++x) out << ',' << data_[t * experts_ + x];
    out << '\n';
  }
}

LossSequence LossSequence::read_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header))
    throw ParameterError("LossSequence: empty CSV");
  size_t experts = std::count(header.begin(), header.end(), ',');
  if (experts == 0) throw ParameterError("LossSequence: malformed CSV header");
  std::vector<double> values;
  std::string line;
  size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // t column
    size_t got = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::stod(cell));
      ++got;
    }
    if (got != experts) throw ParameterError("LossSequence: ragged CSV row");
    ++rows;
  }
  if (rows == 0) throw ParameterError("LossSequence: no data rows");
  LossSequence seq(rows, experts);
  for (size_t t = 0; t < rows; ++t)
    for (size_t x = 0; x < experts; ++x) seq.set(t, x, values[t * experts + x]);
  return seq;
}

void LossSequence::write_binary(std::ostream& out) const {
  out.write(kBinaryMagic, sizeof(kBinaryMagic));
  const uint64_t dims[2] = {horizon_, experts_};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(data_.data()),
            static_cast<std::streamsize>(data_.size() * sizeof(double)));
}

LossSequence LossSequence::read_binary(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kBinaryMagic, sizeof(magic)) != 0)
    throw ParameterError("LossSequence: bad binary magic");
  uint64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw ParameterError("LossSequence: truncated binary header");
  LossSequence seq(dims[0], dims[1]);
  in.read(reinterpret_cast<char*>(seq.data_.data()),
          static_cast<std::streamsize>(seq.data_.size() * sizeof(double)));
  if (!in) throw ParameterError("LossSequence: truncated binary payload");
  seq.validate();
  return seq;
}

LossSequence gen_realizable(RngStream& rng, size_t horizon, size_t experts,
                            size_t zero_expert, double churn) {
  if (zero_expert >= experts)
    throw ParameterError("gen_realizable: zero_expert out of range");
  if (!(churn >= 0.0 && churn <= 1.0))
    throw ParameterError("gen_realizable: churn must lie in [0,1]");
  LossSequence seq(horizon, experts);
  for (size_t t = 0; t < horizon; ++t)
    for (size_t x = 0; x < experts; ++x) {
      if (x == zero_expert) continue;
      double v = churn >= 1.0 ? 1.0 : (rng.bernoulli(churn) ? 1.0 : 0.0);
      seq.set(t, x, v);
    }
  return seq;
}

LossSequence gen_low_loss(RngStream& rng, size_t horizon, size_t experts,
                          size_t target_loss) {
  if (target_loss > horizon)
    throw ParameterError("gen_low_loss: target loss exceeds horizon");
  LossSequence seq(horizon, experts);
  const size_t designated = rng.uniform_index(experts);
  for (size_t t = 0; t < horizon; ++t)
    for (size_t x = 0; x < experts; ++x)
      if (x != designated) seq.set(t, x, 1.0);
  // Unit losses at target_loss distinct uniformly random rounds.
  std::vector<size_t> rounds(horizon);
  for (size_t t = 0; t < horizon; ++t) rounds[t] = t;
  for (size_t i = 0; i < target_loss; ++i) {
    const size_t j = i + rng.uniform_index(horizon - i);
    std::swap(rounds[i], rounds[j]);
    seq.set(rounds[i], designated, 1.0);
  }
  return seq;
}

LossSequence gen_lower_bound_adversary(RngStream& rng, size_t horizon,
                                       size_t experts, double epsilon) {
  if (!(epsilon > 0.0))
    throw ParameterError("gen_lower_bound_adversary: epsilon must be positive");
  const double k_real = std::log(static_cast<double>(experts)) / (2.0 * epsilon);
  const size_t k = static_cast<size_t>(std::ceil(k_real));
  if (k > horizon)
    throw ParameterError("gen_lower_bound_adversary: k exceeds horizon");
  LossSequence seq(horizon, experts);
  const size_t j = rng.uniform_index(experts);
  for (size_t t = horizon - k; t < horizon; ++t)
    for (size_t x = 0; x < experts; ++x)
      if (x != j) seq.set(t, x, 1.0);
  return seq;
}

LossSequence gen_stochastic(RngStream& rng, size_t horizon, size_t experts,
                            std::span<const double> means) {
  if (means.size() != experts)
    throw ParameterError("gen_stochastic: means size mismatch");
  for (double m : means)
    if (!(m >= 0.0 && m <= 1.0))
      throw ParameterError("gen_stochastic: mean outside [0,1]");
  LossSequence seq(horizon, experts);
  for (size_t t = 0; t < horizon; ++t)
    for (size_t x = 0; x < experts; ++x)
      seq.set(t, x, rng.bernoulli(means[x]) ? 1.0 : 0.0);
  return seq;
}

std::string RegretReport::to_json() const {
  nlohmann::ordered_json j;
  j["regret"] = regret;
  j["best_loss"] = best_expert_loss;
  j["switches"] = switch_count;
  auto phases = nlohmann::ordered_json::array();
  for (const auto& e : phase_log) phases.push_back({e.round, e.event});
  j["phases"] = phases;
  return j.dump();
}

RegretReport score_run(const LossSequence& seq, const AlgorithmTrace& trace) {
  if (trace.rows.size() != seq.horizon())
    throw ParameterError("score_run: trace length does not match horizon");
  RegretReport report;
  int32_t prev = -1;
  for (size_t t = 0; t < trace.rows.size(); ++t) {
    const auto& row = trace.rows[t];
    if (row.expert < 0 || static_cast<size_t>(row.expert) >= seq.experts())
      throw ParameterError("score_run: expert index out of range");
    report.cumulative_loss += seq.loss(t, static_cast<size_t>(row.expert));
    if (t == 0 || row.expert != prev) ++report.switch_count;
    prev = row.expert;
  }
  report.best_expert_loss = seq.best_expert_loss();
  report.regret = report.cumulative_loss - report.best_expert_loss;
  report.phase_log = trace.events;
  return report;
}

}  // namespace dpol
