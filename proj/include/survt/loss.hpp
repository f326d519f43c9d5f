#pragma once

// Composite survival loss L = w1*L1 + w2*L2.
//
// L1 is the negative log-likelihood of the first hitting time: an uncensored
// patient contributes -log y[s], a censored one -log(1 - F(s)), with every
// log argument clamped below at 1e-7 (the softmax head makes F(T-1) exactly 1,
// so last-bin censored patients would otherwise hit log 0).
//
// L2 is a concordance ranking penalty over acceptable pairs (i uncensored,
// s_i < s_j):  sum A_ij * exp(-(F_i(s_i) - F_j(s_i)) / sigma), sigma = 0.1.

#include <span>
#include <vector>

#include "survt/tensor.hpp"

namespace survt {

inline constexpr double kLogFloor = 1e-7;
inline constexpr double kRankSigma = 0.1;

struct LossBatch {
  std::vector<std::vector<double>> hazard;  // per patient, length T
  std::vector<std::vector<double>> cif;     // prefix sums of hazard
  std::vector<int> time_bin;
  std::vector<int> event;

  std::size_t size() const { return hazard.size(); }
  static LossBatch from_hazards(std::vector<std::vector<double>> hazards,
                                std::vector<int> time_bin, std::vector<int> event);
  void validate() const;
};

double loss_l1(const LossBatch& batch);
double loss_l2(const LossBatch& batch, double sigma = kRankSigma);
// w1*L1 + w2*L2. ConfigError when both weights are zero or either is negative.
double total_loss(const LossBatch& batch, double w1 = 1.0, double w2 = 1.0,
                  double sigma = kRankSigma);

// Tape form of the same quantity, for training. hazard_nodes[i] must be the
// length-T hazard vector of patient i on the tape.
Tape::NodeId build_total_loss(Tape& tape, std::span<const Tape::NodeId> hazard_nodes,
                              std::span<const int> time_bin, std::span<const int> event,
                              double w1, double w2, double sigma = kRankSigma);

}  // namespace survt
