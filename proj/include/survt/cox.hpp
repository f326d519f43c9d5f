#pragma once

// Cox proportional hazards on the discretized time bins, with the Breslow
// approximation for ties and a damped Newton solver with step halving.
// The fit maximizes
//   l(beta) = sum_{events i} eta_i - sum_{event bins e} d_e * log(sum_{j in R(e)} exp(eta_j))
// where R(e) = {j : s_j >= e}. The baseline cumulative hazard uses the
// Breslow estimator, folded so predictions take raw encoded covariates.

#include <span>
#include <vector>

#include "survt/dataset.hpp"

namespace survt {

struct CoxModel {
  std::vector<double> beta;
  std::vector<double> baseline_cumhaz;  // H0 at each bin 0..T-1 (right edges)
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
  std::vector<double> loglik_trace;  // per accepted Newton step, non-decreasing
};

// Requires fully-imputed data (no unavailable cells) and at least one event.
// Raises ConvergenceError when |beta| exceeds 50 (separable data).
CoxModel fit_cox(const EncodedCohort& train, int max_iter = 100);

// F(t) = 1 - exp(-H0(t) * exp(beta'x)) at every bin; non-decreasing in t.
std::vector<double> cox_predict_cif(const CoxModel& model, std::span<const double> x);

// Breslow partial log-likelihood at a given beta; exposed for verification.
double cox_partial_loglik(const EncodedCohort& data, std::span<const double> beta);

}  // namespace survt
