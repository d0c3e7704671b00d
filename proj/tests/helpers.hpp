#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "dpsurv/rng.hpp"
#include "dpsurv/types.hpp"

namespace testutil {

inline double mean(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  return m / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

inline double mean(const Eigen::VectorXd& v) { return v.mean(); }

inline double variance(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

// Standard error of a sample mean.
inline double se_mean(const std::vector<double>& v) {
  return std::sqrt(variance(v) / static_cast<double>(v.size()));
}

// Standard error of a sample variance via the fourth central moment.
inline double se_variance(const std::vector<double>& v) {
  const double m = mean(v);
  const double var = variance(v);
  double m4 = 0.0;
  for (double x : v) {
    const double d = x - m;
    m4 += d * d * d * d;
  }
  m4 /= static_cast<double>(v.size());
  return std::sqrt(std::max(m4 - var * var, 0.0) / static_cast<double>(v.size()));
}

// Dataset with exponential-ish times, Bernoulli censoring, standard normal
// covariates and Poisson counts; generic fodder for property tests.
inline dpsurv::SurvivalDataset random_dataset(dpsurv::Rng& rng, int n, int j_cov,
                                              double censor_prob = 0.3) {
  dpsurv::SurvivalDataset data;
  data.u.resize(n);
  data.delta.resize(n);
  data.z.resize(n, j_cov);
  data.w.resize(n);
  data.a.resize(n);
  data.x_true = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) {
    data.u[i] = rng.exponential(1.0) + 1e-3;
    data.delta[i] = rng.uniform() < censor_prob ? 0 : 1;
    for (int j = 0; j < j_cov; ++j) data.z(i, j) = rng.normal();
    const double x = rng.gamma(2.0, 1.0) + 1e-6;
    (*data.x_true)[i] = x;
    data.a[i] = 0.5 + rng.uniform();
    data.w[i] = static_cast<double>(rng.poisson(x * data.a[i]));
  }
  if (data.delta.sum() == 0) data.delta[0] = 1;
  return data;
}

}  // namespace testutil
