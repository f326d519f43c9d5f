#include "survt/shapley.hpp"

#include <algorithm>
#include <cmath>

namespace survt {

namespace {

// Sample restricted to a coalition: features outside keep_groups lose their
// mask bit and their value entry (token_mask false implies value 0).
EncodedSample coalition_sample(const EncodedSample& base,
                               const std::vector<FeatureGroup>& groups,
                               const std::vector<std::size_t>& members,
                               std::uint32_t bits) {
  EncodedSample s = base;
  const std::size_t d = s.token_mask.size();
  for (std::size_t f = 0; f < members.size(); ++f) {
    if (bits & (1u << f)) continue;  // stays available
    const FeatureGroup& g = groups[members[f]];
    for (std::size_t c = g.begin; c < g.begin + g.count; ++c) {
      s.token_mask[c] = 0;
      s.tokens.at(c, d) = 0.0;
    }
  }
  return s;
}

}  // namespace

ShapleyAttribution shapley_values(const HazardNet& model, const EncodedSample& sample,
                                  const std::vector<FeatureGroup>& groups,
                                  std::span<const double> empty_value,
                                  std::size_t max_coalition_features) {
  const std::size_t T = std::size_t(model.output_bins());
  if (empty_value.size() != T)
    throw ShapeError("shapley_values: empty-coalition baseline length must equal T");

  ShapleyAttribution out;
  out.value_empty.assign(empty_value.begin(), empty_value.end());

  // Players = original features with at least one available column.
  std::vector<std::size_t> members;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const FeatureGroup& g = groups[gi];
    bool avail = false;
    for (std::size_t c = g.begin; c < g.begin + g.count; ++c)
      avail = avail || sample.token_mask[c];
    out.features.push_back(g.name);
    out.feature_available.push_back(avail ? 1 : 0);
    if (avail) members.push_back(gi);
  }
  const std::size_t m = members.size();
  if (m == 0) throw MaskError("shapley_values: sample has no available features");
  if (m > max_coalition_features)
    throw ComplexityError("shapley_values: " + std::to_string(m) +
                          " available features need 2^" + std::to_string(m) +
                          " coalitions; limit is " + std::to_string(max_coalition_features) +
                          " (consider a sampling approximation)");

  // One forward per coalition gives F(t) for every t at once.
  const std::uint32_t n_masks = 1u << m;
  std::vector<std::vector<double>> value(n_masks);
  for (std::uint32_t bits = 0; bits < n_masks; ++bits) {
    if (bits == 0) {
      value[0] = out.value_empty;
      continue;
    }
    value[bits] = model.predict_cif(coalition_sample(sample, groups, members, bits));
  }
  out.value_full = value[n_masks - 1];

  // w(|S|) = |S|! (m-|S|-1)! / m! = 1 / (m * C(m-1, |S|)), via Pascal's rule.
  std::vector<double> choose(m, 1.0);
  for (std::size_t s = 1; s < m; ++s)
    choose[s] = choose[s - 1] * double(m - s) / double(s);
  std::vector<double> weight(m);
  for (std::size_t s = 0; s < m; ++s) weight[s] = 1.0 / (double(m) * choose[s]);

  out.phi.assign(groups.size(), std::vector<double>(T, 0.0));
  for (std::size_t f = 0; f < m; ++f) {
    const std::uint32_t fbit = 1u << f;
    std::vector<double>& phi = out.phi[members[f]];
    for (std::uint32_t bits = 0; bits < n_masks; ++bits) {
      if (bits & fbit) continue;
      const double w = weight[std::size_t(__builtin_popcount(bits))];
      const std::vector<double>& with = value[bits | fbit];
      const std::vector<double>& without = value[bits];
      for (std::size_t t = 0; t < T; ++t) phi[t] += w * (with[t] - without[t]);
    }
  }
  return out;
}

std::vector<ImportanceEntry> summarize(std::span<const ShapleyAttribution> attributions) {
  if (attributions.empty()) throw ConfigError("summarize: no attributions");
  const auto& names = attributions.front().features;
  const std::size_t T = attributions.front().phi.front().size();
  std::vector<double> total(names.size(), 0.0);
  for (const auto& att : attributions) {
    if (att.features != names) throw ShapeError("summarize: feature sets disagree");
    for (std::size_t f = 0; f < names.size(); ++f)
      for (double v : att.phi[f]) total[f] += std::fabs(v);
  }
  std::vector<ImportanceEntry> out;
  for (std::size_t f = 0; f < names.size(); ++f)
    out.push_back({names[f], total[f] / double(attributions.size() * T)});
  std::sort(out.begin(), out.end(), [](const ImportanceEntry& a, const ImportanceEntry& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.feature < b.feature;
  });
  return out;
}

}  // namespace survt
