#include "survt/metrics.hpp"

#include <algorithm>
#include <string>

namespace survt {

namespace {

double cif_at(const std::vector<double>& row, int bin) {
  const std::size_t idx = std::min(std::size_t(bin), row.size() - 1);
  return row[idx];
}

}  // namespace

double ct_index(const RiskMatrix& risks, TieRule ties) {
  const std::size_t n = risks.cif.size();
  if (risks.time_bin.size() != n || risks.event.size() != n)
    throw ShapeError("ct_index: field lengths disagree");
  double concordant = 0.0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (risks.event[i] != 1) continue;
    const int si = risks.time_bin[i];
    const double fi = cif_at(risks.cif[i], si);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || risks.time_bin[j] <= si) continue;
      ++total;
      const double fj = cif_at(risks.cif[j], si);
      if (fi > fj)
        concordant += 1.0;
      else if (fi == fj && ties == TieRule::kHalf)
        concordant += 0.5;
    }
  }
  if (total == 0) throw MetricError("ct_index: no acceptable pairs in the cohort");
  return concordant / double(total);
}

double KaplanMeier::at(double t) const {
  double s = 1.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] > t) break;
    s = survival[i];
  }
  return s;
}

KaplanMeier kaplan_meier(std::span<const double> times, std::span<const int> events) {
  if (times.empty() || times.size() != events.size())
    throw ShapeError("kaplan_meier: empty cohort or mismatched lengths");
  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  KaplanMeier km;
  double s = 1.0;
  std::size_t at_risk = times.size();
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = times[order[i]];
    std::size_t deaths = 0, leaving = 0;
    while (i < order.size() && times[order[i]] == t) {
      if (events[order[i]] == 1) ++deaths;
      ++leaving;
      ++i;
    }
    if (deaths > 0) {
      s *= 1.0 - double(deaths) / double(at_risk);
      km.times.push_back(t);
      km.survival.push_back(s);
    }
    at_risk -= leaving;
  }
  return km;
}

}  // namespace survt
