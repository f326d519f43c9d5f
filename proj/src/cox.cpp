#include "survt/cox.hpp"

#include <algorithm>
#include <cmath>

namespace survt {

namespace {

struct BreslowSums {
  double loglik = 0.0;
  std::vector<double> grad;
  std::vector<double> hessian;  // negative second derivative, p x p
};

// One descending sweep over the bins, accumulating the risk-set sums. x must
// already be centered.
BreslowSums breslow_sweep(const std::vector<double>& x, std::span<const int> bins,
                          std::span<const int> events, std::size_t n, std::size_t p,
                          std::span<const double> beta, bool with_derivatives) {
  BreslowSums out;
  if (with_derivatives) {
    out.grad.assign(p, 0.0);
    out.hessian.assign(p * p, 0.0);
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return bins[a] > bins[b]; });

  std::vector<double> eta(n);
  for (std::size_t i = 0; i < n; ++i) {
    double e = 0.0;
    for (std::size_t c = 0; c < p; ++c) e += beta[c] * x[i * p + c];
    eta[i] = e;
  }

  double s0 = 0.0;
  std::vector<double> s1(p, 0.0), s2(p * p, 0.0);
  std::size_t pos = 0;
  while (pos < n) {
    const int bin = bins[order[pos]];
    // Everyone observed at this bin (event or censored) enters the risk set.
    std::size_t first = pos;
    while (pos < n && bins[order[pos]] == bin) {
      const std::size_t i = order[pos];
      const double w = std::exp(eta[i]);
      s0 += w;
      const double* xi = x.data() + i * p;
      for (std::size_t a = 0; a < p; ++a) {
        s1[a] += w * xi[a];
        if (with_derivatives)
          for (std::size_t b = a; b < p; ++b) s2[a * p + b] += w * xi[a] * xi[b];
      }
      ++pos;
    }
    std::size_t deaths = 0;
    for (std::size_t q = first; q < pos; ++q) {
      const std::size_t i = order[q];
      if (events[i] != 1) continue;
      ++deaths;
      out.loglik += eta[i];
      if (with_derivatives) {
        const double* xi = x.data() + i * p;
        for (std::size_t a = 0; a < p; ++a) out.grad[a] += xi[a];
      }
    }
    if (deaths == 0) continue;
    const double d = double(deaths);
    out.loglik -= d * std::log(s0);
    if (with_derivatives) {
      for (std::size_t a = 0; a < p; ++a) out.grad[a] -= d * s1[a] / s0;
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a; b < p; ++b)
          out.hessian[a * p + b] += d * (s2[a * p + b] / s0 - (s1[a] / s0) * (s1[b] / s0));
    }
  }
  if (with_derivatives)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < a; ++b) out.hessian[a * p + b] = out.hessian[b * p + a];
  return out;
}

// In-place Cholesky solve of (A + tau I) x = rhs; returns false when the
// damped matrix is still not positive definite.
bool cholesky_solve(std::vector<double> a, std::size_t p, double tau,
                    std::vector<double> rhs, std::vector<double>& x) {
  for (std::size_t i = 0; i < p; ++i) a[i * p + i] += tau;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) sum -= a[i * p + k] * a[j * p + k];
      if (i == j) {
        if (sum <= 0.0) return false;
        a[i * p + i] = std::sqrt(sum);
      } else {
        a[i * p + j] = sum / a[j * p + j];
      }
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    double sum = rhs[i];
    for (std::size_t k = 0; k < i; ++k) sum -= a[i * p + k] * rhs[k];
    rhs[i] = sum / a[i * p + i];
  }
  x.assign(p, 0.0);
  for (std::size_t i = p; i-- > 0;) {
    double sum = rhs[i];
    for (std::size_t k = i + 1; k < p; ++k) sum -= a[k * p + i] * x[k];
    x[i] = sum / a[i * p + i];
  }
  return true;
}

std::vector<double> center_covariates(const EncodedCohort& data, std::vector<double>& mu) {
  const std::size_t n = data.n_rows, p = data.n_columns;
  mu.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < p; ++c) mu[c] += data.x[i * p + c];
  for (auto& m : mu) m /= double(n);
  std::vector<double> xc(n * p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < p; ++c) xc[i * p + c] = data.x[i * p + c] - mu[c];
  return xc;
}

}  // namespace

double cox_partial_loglik(const EncodedCohort& data, std::span<const double> beta) {
  if (beta.size() != data.n_columns) throw ShapeError("cox_partial_loglik: beta width mismatch");
  std::vector<double> xc = data.x;  // uncentered is fine for a plain evaluation
  return breslow_sweep(xc, data.time_bin, data.event, data.n_rows, data.n_columns, beta,
                       false)
      .loglik;
}

CoxModel fit_cox(const EncodedCohort& train, int max_iter) {
  const std::size_t n = train.n_rows, p = train.n_columns;
  if (n == 0 || p == 0) throw ConfigError("fit_cox: empty training data");
  for (auto a : train.available)
    if (!a) throw ConfigError("fit_cox: data contains missing cells; impute first");
  std::size_t n_events = 0;
  for (int e : train.event) n_events += e == 1 ? 1 : 0;
  if (n_events == 0) throw ConfigError("fit_cox: no events in the training data");
  if (max_iter < 1) throw ConfigError("fit_cox: max_iter must be >= 1");

  std::vector<double> mu;
  const std::vector<double> xc = center_covariates(train, mu);

  CoxModel model;
  model.beta.assign(p, 0.0);
  BreslowSums cur = breslow_sweep(xc, train.time_bin, train.event, n, p, model.beta, true);
  model.loglik_trace.push_back(cur.loglik);

  for (int iter = 0; iter < max_iter; ++iter) {
    model.iterations = iter;
    double gmax = 0.0;
    for (double g : cur.grad) gmax = std::max(gmax, std::fabs(g));
    if (gmax < 1e-6) {
      model.converged = true;
      break;
    }
    double maxdiag = 0.0;
    for (std::size_t a = 0; a < p; ++a) maxdiag = std::max(maxdiag, cur.hessian[a * p + a]);
    // One-hot blocks of multiple categoricals are exactly collinear; the
    // likelihood is flat along those directions, so a small damping term
    // keeps the solve well-posed without moving the optimum.
    double tau = 1e-10 * (1.0 + maxdiag);
    std::vector<double> delta;
    while (!cholesky_solve(cur.hessian, p, tau, cur.grad, delta)) {
      tau *= 10.0;
      if (tau > 1e6 * (1.0 + maxdiag))
        throw ConvergenceError("fit_cox: Hessian could not be stabilized");
    }

    std::vector<double> candidate(p);
    BreslowSums next;
    bool accepted = false;
    double step = 1.0;
    for (int halving = 0; halving < 30; ++halving, step *= 0.5) {
      for (std::size_t c = 0; c < p; ++c) candidate[c] = model.beta[c] + step * delta[c];
      next = breslow_sweep(xc, train.time_bin, train.event, n, p, candidate, true);
      if (next.loglik >= cur.loglik - 1e-12) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no ascent direction left; report the best iterate
    model.beta = candidate;
    cur = std::move(next);
    model.loglik_trace.push_back(cur.loglik);

    double norm = 0.0;
    for (double b : model.beta) norm += b * b;
    if (std::sqrt(norm) > 50.0)
      throw ConvergenceError("fit_cox: |beta| exceeded 50, data looks separable");
    model.iterations = iter + 1;
  }
  model.log_likelihood = cur.loglik;

  // Breslow baseline on centered data, folded by exp(-beta'mu) so predictions
  // use raw encoded covariates.
  std::vector<double> eta(n);
  for (std::size_t i = 0; i < n; ++i) {
    double e = 0.0;
    for (std::size_t c = 0; c < p; ++c) e += model.beta[c] * xc[i * p + c];
    eta[i] = e;
  }
  const int T = train.n_bins;
  std::vector<double> deaths(std::size_t(T), 0.0), risk(std::size_t(T), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (train.event[i] == 1) deaths[std::size_t(train.time_bin[i])] += 1.0;
  for (int b = T - 1; b >= 0; --b) {
    for (std::size_t i = 0; i < n; ++i)
      if (train.time_bin[i] == b) risk[std::size_t(b)] += std::exp(eta[i]);
    if (b + 1 < T) risk[std::size_t(b)] += risk[std::size_t(b) + 1];
  }
  double offset = 0.0;
  for (std::size_t c = 0; c < p; ++c) offset += model.beta[c] * mu[c];
  const double fold = std::exp(-offset);
  model.baseline_cumhaz.assign(std::size_t(T), 0.0);
  double h = 0.0;
  for (int b = 0; b < T; ++b) {
    if (deaths[std::size_t(b)] > 0.0) h += deaths[std::size_t(b)] / risk[std::size_t(b)];
    model.baseline_cumhaz[std::size_t(b)] = h * fold;
  }
  return model;
}

std::vector<double> cox_predict_cif(const CoxModel& model, std::span<const double> x) {
  if (x.size() != model.beta.size()) throw ShapeError("cox_predict_cif: covariate width mismatch");
  double eta = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) eta += model.beta[c] * x[c];
  const double r = std::exp(eta);
  std::vector<double> cif(model.baseline_cumhaz.size());
  for (std::size_t t = 0; t < cif.size(); ++t)
    cif[t] = 1.0 - std::exp(-model.baseline_cumhaz[t] * r);
  return cif;
}

}  // namespace survt
