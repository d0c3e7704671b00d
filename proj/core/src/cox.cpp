#include "dpsurv/cox.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

namespace dpsurv {

namespace {

// Subjects ordered by decreasing time so the risk set grows as we walk
// through event times.
std::vector<Eigen::Index> descending_order(const Eigen::VectorXd& time) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(time.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return time[a] > time[b]; });
  return order;
}

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

Eigen::MatrixXd nan_matrix(Eigen::Index p) {
  return Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
}

}  // namespace

Eigen::VectorXd CoxFit::se() const {
  return covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

Eigen::VectorXd CoxFit::z_scores() const {
  const Eigen::VectorXd s = se();
  Eigen::VectorXd z(coef.size());
  for (Eigen::Index j = 0; j < coef.size(); ++j)
    z[j] = s[j] > 0.0 ? coef[j] / s[j] : 0.0;
  return z;
}

Eigen::VectorXd CoxFit::p_values() const {
  const Eigen::VectorXd z = z_scores();
  Eigen::VectorXd p(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j)
    p[j] = 2.0 * (1.0 - normal_cdf(std::fabs(z[j])));
  return p;
}

void cox_derivatives(const Eigen::VectorXd& beta, const Eigen::VectorXd& time,
                     const Eigen::VectorXi& event, const Eigen::MatrixXd& covariates,
                     double* log_pl, Eigen::VectorXd* score, Eigen::MatrixXd* info) {
  const Eigen::Index n = time.size();
  const Eigen::Index p = covariates.cols();
  if (event.size() != n || covariates.rows() != n)
    throw Error(errc::length_mismatch, "time, event and covariate sizes differ");

  const Eigen::VectorXd eta = covariates * beta;
  const auto order = descending_order(time);

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);

  double lpl = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd inf = Eigen::MatrixXd::Zero(p, p);

  std::size_t pos = 0;
  const auto total = static_cast<std::size_t>(n);
  while (pos < total) {
    const double t = time[order[pos]];
    // Admit the whole tied block to the risk set before scoring its events.
    std::size_t block_end = pos;
    while (block_end < total && time[order[block_end]] == t) {
      const Eigen::Index i = order[block_end];
      const double r = std::exp(eta[i]);
      s0 += r;
      s1.noalias() += r * covariates.row(i).transpose();
      s2.noalias() += r * covariates.row(i).transpose() * covariates.row(i);
      ++block_end;
    }
    for (std::size_t q = pos; q < block_end; ++q) {
      const Eigen::Index i = order[q];
      if (event[i] != 1) continue;
      const Eigen::VectorXd mean = s1 / s0;
      lpl += eta[i] - std::log(s0);
      grad += covariates.row(i).transpose() - mean;
      inf += s2 / s0 - mean * mean.transpose();
    }
    pos = block_end;
  }

  if (log_pl) *log_pl = lpl;
  if (score) *score = grad;
  if (info) *info = inf;
}

double cox_log_partial_lik(const Eigen::VectorXd& beta, const Eigen::VectorXd& time,
                           const Eigen::VectorXi& event, const Eigen::MatrixXd& covariates) {
  double lpl = 0.0;
  cox_derivatives(beta, time, event, covariates, &lpl, nullptr, nullptr);
  return lpl;
}

CoxFit fit_cox(const Eigen::VectorXd& time, const Eigen::VectorXi& event,
               const Eigen::MatrixXd& covariates) {
  constexpr int kMaxIter = 50;
  constexpr double kScoreTol = 1e-8;
  constexpr double kRelTol = 1e-10;
  // A Newton step this large at an apparent optimum means the likelihood is
  // flattening toward a boundary (monotone likelihood); the fit is flagged.
  constexpr double kDivergentStep = 0.5;

  const Eigen::Index p = covariates.cols();
  if (event.sum() < 1) throw Error(errc::invalid_argument, "need at least one event");

  CoxFit fit;
  fit.coef = Eigen::VectorXd::Zero(p);

  double lpl;
  Eigen::VectorXd score(p);
  Eigen::MatrixXd info(p, p);
  cox_derivatives(fit.coef, time, event, covariates, &lpl, &score, &info);
  fit.log_partial_lik = lpl;

  // LDLT accepts semidefinite matrices, so rank deficiency is caught on the
  // pivot diagonal.
  auto usable = [&](const Eigen::LDLT<Eigen::MatrixXd>& solver) {
    if (solver.info() != Eigen::Success || !solver.isPositive()) return false;
    const Eigen::VectorXd d = solver.vectorD();
    return d.minCoeff() > 1e-12 * std::max(d.maxCoeff(), 1.0);
  };
  auto covariance_from = [&](const Eigen::MatrixXd& information) -> Eigen::MatrixXd {
    Eigen::LDLT<Eigen::MatrixXd> solver(information);
    if (usable(solver)) return solver.solve(Eigen::MatrixXd::Identity(p, p));
    return nan_matrix(p);
  };

  if (p == 0 || score.cwiseAbs().maxCoeff() < kScoreTol) {
    // Already stationary at beta = 0 (e.g. all covariates constant).
    fit.iterations = 1;
    fit.converged = true;
    fit.covariance = covariance_from(info);
    return fit;
  }

  for (int iter = 1; iter <= kMaxIter; ++iter) {
    Eigen::LDLT<Eigen::MatrixXd> solver(info);
    if (!usable(solver)) {
      if (iter == 1)
        throw Error(errc::singular, "information matrix is singular at beta = 0");
      fit.iterations = iter - 1;
      fit.converged = false;
      fit.covariance = nan_matrix(p);
      return fit;
    }
    const Eigen::VectorXd direction = solver.solve(score);

    double step = 1.0;
    Eigen::VectorXd candidate = fit.coef + direction;
    double lpl_new = cox_log_partial_lik(candidate, time, event, covariates);
    int halvings = 0;
    while ((!std::isfinite(lpl_new) || lpl_new < lpl) && halvings < 30) {
      step *= 0.5;
      candidate = fit.coef + step * direction;
      lpl_new = cox_log_partial_lik(candidate, time, event, covariates);
      ++halvings;
    }

    const double rel_change = std::fabs(lpl_new - lpl) / (std::fabs(lpl) + 1.0);
    fit.coef = candidate;
    cox_derivatives(fit.coef, time, event, covariates, &lpl, &score, &info);
    fit.iterations = iter;
    fit.log_partial_lik = lpl;

    const bool stationary =
        score.cwiseAbs().maxCoeff() < kScoreTol || rel_change < kRelTol;
    if (stationary) {
      if (direction.cwiseAbs().maxCoeff() > kDivergentStep) continue;
      fit.converged = true;
      fit.covariance = covariance_from(info);
      return fit;
    }
  }

  fit.converged = false;
  fit.covariance = covariance_from(info);
  return fit;
}

Eigen::VectorXd martingale_residuals(const CoxFit& fit, const Eigen::VectorXd& time,
                                     const Eigen::VectorXi& event,
                                     const Eigen::MatrixXd& covariates) {
  const Eigen::Index n = time.size();
  const Eigen::VectorXd eta = covariates * fit.coef;
  const Eigen::VectorXd risk = eta.array().exp();

  // Breslow increments dH0(t) = d_t / sum_{risk set} exp(eta_j) at each
  // distinct event time, accumulated over subjects in descending time order.
  const auto order = descending_order(time);
  double s0 = 0.0;
  std::vector<std::pair<double, double>> increments;  // (time, dH0)
  std::size_t pos = 0;
  const auto total = static_cast<std::size_t>(n);
  while (pos < total) {
    const double t = time[order[pos]];
    std::size_t block_end = pos;
    int d = 0;
    while (block_end < total && time[order[block_end]] == t) {
      s0 += risk[order[block_end]];
      d += event[order[block_end]];
      ++block_end;
    }
    if (d > 0) increments.emplace_back(t, static_cast<double>(d) / s0);
    pos = block_end;
  }
  std::reverse(increments.begin(), increments.end());  // ascending in time
  std::vector<double> cum(increments.size());
  double running = 0.0;
  for (std::size_t k = 0; k < increments.size(); ++k) {
    running += increments[k].second;
    cum[k] = running;
  }

  Eigen::VectorXd residuals(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // H0(u_i): increments with event time <= u_i.
    std::size_t lo = 0, hi = increments.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (increments[mid].first <= time[i])
        lo = mid + 1;
      else
        hi = mid;
    }
    const double h0 = lo > 0 ? cum[lo - 1] : 0.0;
    residuals[i] = static_cast<double>(event[i]) - h0 * risk[i];
  }
  return residuals;
}

}  // namespace dpsurv
