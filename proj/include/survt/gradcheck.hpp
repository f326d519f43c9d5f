#pragma once

// Finite-difference verification suite: per-primitive checks on random small
// tensors and the end-to-end check of the training loss through a model.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "survt/model.hpp"

namespace survt {

struct GradCheckItem {
  std::string name;
  double max_rel_error = 0.0;
};

// One scalar function per primitive, checked against central differences.
std::vector<GradCheckItem> primitive_gradient_checks(std::uint64_t seed, double step = 1e-5);

// Max relative gradient error of the batch loss over every parameter tensor
// of the model, against central differences.
double loss_gradient_error(HazardNet& model, const std::vector<EncodedSample>& samples,
                           std::span<const int> time_bin, std::span<const int> event,
                           double w1, double w2, double step = 1e-5);

}  // namespace survt
