#include "survt/loss.hpp"

#include <cmath>
#include <string>

namespace survt {

LossBatch LossBatch::from_hazards(std::vector<std::vector<double>> hazards,
                                  std::vector<int> time_bin, std::vector<int> event) {
  LossBatch b;
  b.hazard = std::move(hazards);
  b.time_bin = std::move(time_bin);
  b.event = std::move(event);
  b.cif.reserve(b.hazard.size());
  for (const auto& y : b.hazard) {
    std::vector<double> c = y;
    for (std::size_t t = 1; t < c.size(); ++t) c[t] += c[t - 1];
    b.cif.push_back(std::move(c));
  }
  b.validate();
  return b;
}

void LossBatch::validate() const {
  if (hazard.size() != cif.size() || hazard.size() != time_bin.size() ||
      hazard.size() != event.size())
    throw ShapeError("LossBatch: field lengths disagree");
  for (std::size_t i = 0; i < hazard.size(); ++i) {
    const std::size_t T = hazard[i].size();
    if (T == 0 || cif[i].size() != T)
      throw ShapeError("LossBatch: patient " + std::to_string(i) + " has inconsistent rows");
    if (time_bin[i] < 0 || std::size_t(time_bin[i]) >= T)
      throw ShapeError("LossBatch: patient " + std::to_string(i) + " time bin out of range");
    double run = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      run += hazard[i][t];
      if (std::fabs(run - cif[i][t]) > 1e-9)
        throw ShapeError("LossBatch: cif is not the prefix sum of hazard for patient " +
                         std::to_string(i));
    }
  }
}

double loss_l1(const LossBatch& batch) {
  if (batch.size() == 0) throw ConfigError("loss_l1: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int s = batch.time_bin[i];
    const double arg = batch.event[i] == 1 ? batch.hazard[i][std::size_t(s)]
                                           : 1.0 - batch.cif[i][std::size_t(s)];
    total -= std::log(arg > kLogFloor ? arg : kLogFloor);
  }
  return total;
}

double loss_l2(const LossBatch& batch, double sigma) {
  if (batch.size() == 0) throw ConfigError("loss_l2: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.event[i] != 1) continue;
    const int si = batch.time_bin[i];
    const double fi = batch.cif[i][std::size_t(si)];
    for (std::size_t j = 0; j < batch.size(); ++j) {
      if (j == i || batch.time_bin[j] <= si) continue;
      total += std::exp(-(fi - batch.cif[j][std::size_t(si)]) / sigma);
    }
  }
  return total;
}

double total_loss(const LossBatch& batch, double w1, double w2, double sigma) {
  if (w1 < 0.0 || w2 < 0.0) throw ConfigError("total_loss: weights must be >= 0");
  if (w1 == 0.0 && w2 == 0.0) throw ConfigError("total_loss: both weights are zero");
  double total = 0.0;
  if (w1 > 0.0) total += w1 * loss_l1(batch);
  if (w2 > 0.0) total += w2 * loss_l2(batch, sigma);
  return total;
}

Tape::NodeId build_total_loss(Tape& t, std::span<const Tape::NodeId> hazard_nodes,
                              std::span<const int> time_bin, std::span<const int> event,
                              double w1, double w2, double sigma) {
  if (w1 < 0.0 || w2 < 0.0) throw ConfigError("build_total_loss: weights must be >= 0");
  if (w1 == 0.0 && w2 == 0.0) throw ConfigError("build_total_loss: both weights are zero");
  const std::size_t n = hazard_nodes.size();
  if (n == 0 || time_bin.size() != n || event.size() != n)
    throw ShapeError("build_total_loss: batch metadata lengths disagree");

  std::vector<Tape::NodeId> cif(n);
  for (std::size_t i = 0; i < n; ++i) cif[i] = t.cumsum(hazard_nodes[i]);

  Tape::NodeId total = t.constant(Tensor::scalar(0.0));
  bool have_total = false;
  auto accumulate = [&](Tape::NodeId term) {
    total = have_total ? t.add(total, term) : term;
    have_total = true;
  };

  if (w1 > 0.0) {
    Tape::NodeId l1 = t.constant(Tensor::scalar(0.0));
    bool have = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t s = std::size_t(time_bin[i]);
      Tape::NodeId arg;
      if (event[i] == 1)
        arg = t.pick(hazard_nodes[i], s);
      else
        arg = t.add_scalar(t.scale(t.pick(cif[i], s), -1.0), 1.0);
      const Tape::NodeId term = t.scale(t.log_clamped(arg, kLogFloor), -1.0);
      l1 = have ? t.add(l1, term) : term;
      have = true;
    }
    accumulate(w1 == 1.0 ? l1 : t.scale(l1, w1));
  }

  if (w2 > 0.0) {
    Tape::NodeId l2 = t.constant(Tensor::scalar(0.0));
    bool have = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (event[i] != 1) continue;
      const std::size_t si = std::size_t(time_bin[i]);
      const Tape::NodeId fi = t.pick(cif[i], si);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || time_bin[j] <= time_bin[i]) continue;
        const Tape::NodeId diff = t.sub(fi, t.pick(cif[j], si));
        const Tape::NodeId term = t.exp(t.scale(diff, -1.0 / sigma));
        l2 = have ? t.add(l2, term) : term;
        have = true;
      }
    }
    if (have) accumulate(w2 == 1.0 ? l2 : t.scale(l2, w2));
    else if (!have_total) accumulate(l2);  // zero constant: no acceptable pairs
  }
  return total;
}

}  // namespace survt
