#pragma once

// Exact Shapley attribution by coalition masking. The model natively accepts
// any subset of available features, so the coalition value function needs no
// surrogate: v(S) = F(t | features in S available), and v(empty) is supplied
// by the caller as the training-cohort mean of F(t) because the model cannot
// run with zero tokens.
//
// Attribution works at the original-feature level: all one-hot columns of a
// categorical toggle together. Features already missing in the sample are
// absent players and get phi = 0.

#include <span>
#include <string>
#include <vector>

#include "survt/model.hpp"

namespace survt {

struct ShapleyAttribution {
  std::vector<std::string> features;           // all original features, group order
  std::vector<std::uint8_t> feature_available; // per feature, in this sample
  std::vector<std::vector<double>> phi;        // [feature][time], zeros when absent
  std::vector<double> value_full;              // F(t) with every available feature
  std::vector<double> value_empty;             // the supplied baseline
};

// Exact enumeration over the 2^m coalitions of the m available features;
// ComplexityError when m exceeds max_coalition_features (default 20).
ShapleyAttribution shapley_values(const HazardNet& model, const EncodedSample& sample,
                                  const std::vector<FeatureGroup>& groups,
                                  std::span<const double> empty_value,
                                  std::size_t max_coalition_features = 20);

struct ImportanceEntry {
  std::string feature;
  double importance;  // mean |phi| over patients and times
};

// Global ranking: mean of |phi| across patients and all output times,
// descending, ties broken by feature name.
std::vector<ImportanceEntry> summarize(std::span<const ShapleyAttribution> attributions);

}  // namespace survt
