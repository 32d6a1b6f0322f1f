#include "pulsedeconv/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "banded_cholesky.hpp"
#include "pulsedeconv/error.hpp"

namespace pulsedeconv {

namespace {

using detail::BandMatrix;

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

/// Constraint operator of the standard-form program
///
///   z = [x+ (n), x- (n), e+ (n), e- (n), s (1)] >= 0
///   G (x+ - x-) + e+ - e- = y
///   sum(e+) + sum(e-) + s = delta
///
/// or, without a budget row, G (x+ - x-) = y. Normal equations A D A^T are a
/// band matrix of half-width 2R bordered by one dense row, which is
/// eliminated by a Schur complement.
class DeconvolutionLp {
 public:
  DeconvolutionLp(const SampledKernel& kernel, std::size_t n, bool budget)
      : taps_(kernel.taps), radius_(kernel.radius), n_(n), budget_(budget),
        normal_(n, static_cast<std::size_t>(2 * kernel.radius)), g_tmp_(n), u2_(n) {}

  std::size_t vars() const { return budget_ ? 4 * n_ + 1 : 2 * n_; }
  std::size_t rows() const { return budget_ ? n_ + 1 : n_; }

  /// out = G in (transpose = false) or G^T in.
  void convolve(std::span<const double> in, std::span<double> out, bool transpose) const {
    const long n = static_cast<long>(n_);
    const long r = radius_;
    for (long k = 0; k < n; ++k) {
      double acc = 0.0;
      const long lo = std::max(0L, k - r);
      const long hi = std::min(n - 1, k + r);
      for (long j = lo; j <= hi; ++j) {
        const long tap = transpose ? j - k + r : k - j + r;
        acc += taps_[static_cast<std::size_t>(tap)] * in[static_cast<std::size_t>(j)];
      }
      out[static_cast<std::size_t>(k)] = acc;
    }
  }

  void multiply(std::span<const double> z, std::span<double> out) {
    for (std::size_t k = 0; k < n_; ++k) g_tmp_[k] = z[k] - z[n_ + k];
    convolve(g_tmp_, out.first(n_), false);
    if (!budget_) return;
    double total = z[4 * n_];
    for (std::size_t k = 0; k < n_; ++k) {
      out[k] += z[2 * n_ + k] - z[3 * n_ + k];
      total += z[2 * n_ + k] + z[3 * n_ + k];
    }
    out[n_] = total;
  }

  void multiply_transpose(std::span<const double> w, std::span<double> out) {
    convolve(w.first(n_), g_tmp_, true);
    for (std::size_t k = 0; k < n_; ++k) {
      out[k] = g_tmp_[k];
      out[n_ + k] = -g_tmp_[k];
    }
    if (!budget_) return;
    const double mu = w[n_];
    for (std::size_t k = 0; k < n_; ++k) {
      out[2 * n_ + k] = w[k] + mu;
      out[3 * n_ + k] = -w[k] + mu;
    }
    out[4 * n_] = mu;
  }

  /// Factors A diag(d) A^T.
  void factor(std::span<const double> d) {
    normal_.zero();
    const long n = static_cast<long>(n_);
    const long r = radius_;
    for (long j = 0; j < n; ++j) {
      const double dj = d[static_cast<std::size_t>(j)] + d[n_ + static_cast<std::size_t>(j)];
      const long lo = std::max(0L, j - r);
      const long hi = std::min(n - 1, j + r);
      for (long k1 = lo; k1 <= hi; ++k1) {
        const double t1 = dj * taps_[static_cast<std::size_t>(k1 - j + r)];
        for (long k2 = lo; k2 <= k1; ++k2) {
          normal_.lower(static_cast<std::size_t>(k1), static_cast<std::size_t>(k2)) +=
              t1 * taps_[static_cast<std::size_t>(k2 - j + r)];
        }
      }
    }
    if (budget_) {
      double corner = d[4 * n_];
      for (std::size_t k = 0; k < n_; ++k) {
        const double dp = d[2 * n_ + k];
        const double dm = d[3 * n_ + k];
        normal_.lower(k, k) += dp + dm;
        u2_[k] = dp - dm;
        corner += dp + dm;
      }
      border_ = u2_;
      detail::band_cholesky(normal_, 1e-14);
      detail::band_solve(normal_, u2_);
      // corner - v^T (G Dx G^T + E)^{-1} v without cancellation:
      //   ds + sum 4 dp dm / (dp + dm) + (E^{-1} v)^T G Dx G^T u2.
      double schur = d[4 * n_];
      convolve(u2_, g_tmp_, true);
      for (std::size_t k = 0; k < n_; ++k) g_tmp_[k] *= d[k] + d[n_ + k];
      std::vector<double>& gx_u2 = scratch_;
      gx_u2.resize(n_);
      convolve(g_tmp_, gx_u2, false);
      double coupled = 0.0;
      for (std::size_t k = 0; k < n_; ++k) {
        const double dp = d[2 * n_ + k];
        const double dm = d[3 * n_ + k];
        const double e = dp + dm;
        if (e > 0.0) {
          schur += 4.0 * dp * dm / e;
          coupled += (dp - dm) / e * gx_u2[k];
        }
      }
      schur_ = schur + std::max(coupled, 0.0);
      if (!(schur_ > 1e-300)) schur_ = 1e-300;
    } else {
      for (std::size_t k = 0; k < n_; ++k) normal_.lower(k, k) += 1e-14 * normal_.lower(k, k);
      detail::band_cholesky(normal_, 1e-14);
    }
  }

  /// Solves (A D A^T) out = rhs with the current factor.
  void solve(std::span<const double> rhs, std::span<double> out) const {
    std::copy(rhs.begin(), rhs.end(), out.begin());
    detail::band_solve(normal_, out.first(n_));
    if (!budget_) return;
    const double mu = (rhs[n_] - dot(border_, out.first(n_))) / schur_;
    for (std::size_t k = 0; k < n_; ++k) out[k] -= mu * u2_[k];
    out[n_] = mu;
  }

 private:
  std::vector<double> taps_;
  long radius_;
  std::size_t n_;
  bool budget_;
  BandMatrix normal_;
  std::vector<double> g_tmp_;
  std::vector<double> u2_;
  std::vector<double> border_;
  std::vector<double> scratch_;
  double schur_ = 1.0;
};

double max_step(std::span<const double> v, std::span<const double> dv) {
  double alpha = 1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

struct IpmResult {
  std::vector<double> z;
  std::vector<double> w;
  int iterations = 0;
  double pinf = 0.0;
  double dinf = 0.0;
  double gap = 0.0;
  double dual_objective = 0.0;
  SolverStatus status = SolverStatus::Optimal;
};

/// Mehrotra predictor-corrector on min c^T z, A z = b, z >= 0.
IpmResult interior_point(DeconvolutionLp& lp, std::span<const double> b, std::span<const double> c, double tol,
                         double feas_tol, int max_iterations) {
  const std::size_t nv = lp.vars();
  const std::size_t nr = lp.rows();
  std::vector<double> z(nv), zs(nv), w(nr, 0.0);
  std::vector<double> rp(nr), rd(nv), az(nr), atw(nv), d(nv), rhs(nr), tmp_v(nv);
  std::vector<double> dz(nv), dzs(nv), dw(nr), dz_aff(nv), dzs_aff(nv), rc(nv);

  const double b_norm = 1.0 + inf_norm(b);
  const double c_norm = 1.0 + inf_norm(c);

  // Mehrotra's starting point from the least-squares solutions with D = I.
  std::fill(d.begin(), d.end(), 1.0);
  lp.factor(d);
  lp.solve(b, rhs);
  lp.multiply_transpose(rhs, z);
  lp.multiply(c, az);
  lp.solve(az, w);
  lp.multiply_transpose(w, atw);
  for (std::size_t i = 0; i < nv; ++i) zs[i] = c[i] - atw[i];
  const double shift_z = std::max(-1.5 * *std::min_element(z.begin(), z.end()), 0.0);
  const double shift_s = std::max(-1.5 * *std::min_element(zs.begin(), zs.end()), 0.0);
  for (std::size_t i = 0; i < nv; ++i) {
    z[i] += shift_z;
    zs[i] += shift_s;
  }
  {
    const double xs = dot(z, zs);
    const double sum_z = std::accumulate(z.begin(), z.end(), 0.0);
    const double sum_s = std::accumulate(zs.begin(), zs.end(), 0.0);
    for (std::size_t i = 0; i < nv; ++i) {
      z[i] += 0.5 * xs / std::max(sum_s, 1e-300);
      zs[i] += 0.5 * xs / std::max(sum_z, 1e-300);
      if (!(z[i] > 0.0) || !std::isfinite(z[i])) z[i] = 1.0;
      if (!(zs[i] > 0.0) || !std::isfinite(zs[i])) zs[i] = 1.0;
    }
  }

  IpmResult best;
  double best_merit = std::numeric_limits<double>::infinity();
  int stalls = 0;

  // Normal-equation solve with iterative refinement against the operator form,
  // which recovers accuracy lost to ill-conditioning near the optimum.
  std::vector<double> refine_r(nr), refine_dw(nr), refine_v(nv);
  // Refinement stops as soon as it stops helping: with pinned pivots the factor
  // is not the operator, and unchecked refinement can diverge.
  std::vector<double> refine_best(nr);
  auto residual_of = [&](std::span<const double> r, std::span<const double> sol) {
    lp.multiply_transpose(sol, refine_v);
    for (std::size_t i = 0; i < nv; ++i) refine_v[i] *= d[i];
    lp.multiply(refine_v, refine_r);
    double err = 0.0;
    for (std::size_t i = 0; i < nr; ++i) {
      refine_r[i] = r[i] - refine_r[i];
      err = std::max(err, std::abs(refine_r[i]));
    }
    return err;
  };
  auto refined_solve = [&](std::span<const double> r, std::span<double> sol) {
    lp.solve(r, sol);
    double err = residual_of(r, sol);
    const double target = 1e-15 * (1.0 + inf_norm(r));
    for (int pass = 0; pass < 3 && err > target; ++pass) {
      std::copy(sol.begin(), sol.end(), refine_best.begin());
      lp.solve(refine_r, refine_dw);
      for (std::size_t i = 0; i < nr; ++i) sol[i] += refine_dw[i];
      const double next = residual_of(r, sol);
      if (!(next < err)) {
        std::copy(refine_best.begin(), refine_best.end(), sol.begin());
        break;
      }
      err = next;
    }
  };

  for (int iter = 0;; ++iter) {
    lp.multiply(z, az);
    lp.multiply_transpose(w, atw);
    for (std::size_t i = 0; i < nr; ++i) rp[i] = b[i] - az[i];
    for (std::size_t i = 0; i < nv; ++i) rd[i] = c[i] - atw[i] - zs[i];
    const double pobj = dot(c, z);
    const double dobj = dot(b, w);
    const double pinf = inf_norm(rp) / b_norm;
    const double dinf = inf_norm(rd) / c_norm;
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    if (!std::isfinite(pinf) || !std::isfinite(dinf) || !std::isfinite(gap)) break;
    const double merit = std::max({pinf / feas_tol, dinf / feas_tol, gap / tol});
    if (merit < best_merit) {
      best_merit = merit;
      best.z = z;
      best.w = w;
      best.iterations = iter;
      best.pinf = pinf;
      best.dinf = dinf;
      best.gap = gap;
      best.dual_objective = dobj;
    }
    if (merit < 1.0) {
      best.status = SolverStatus::Optimal;
      return best;
    }
    if (iter >= max_iterations) {
      best.status = SolverStatus::MaxIterations;
      return best;
    }

    const double mu = dot(z, zs) / static_cast<double>(nv);
    for (std::size_t i = 0; i < nv; ++i) d[i] = std::clamp(z[i] / zs[i], 1e-60, 1e60);
    lp.factor(d);

    // Predictor (affine scaling) direction.
    for (std::size_t i = 0; i < nv; ++i) tmp_v[i] = d[i] * rd[i] + z[i];
    lp.multiply(tmp_v, az);
    for (std::size_t i = 0; i < nr; ++i) rhs[i] = rp[i] + az[i];
    refined_solve(rhs, dw);
    lp.multiply_transpose(dw, atw);
    for (std::size_t i = 0; i < nv; ++i) {
      dzs_aff[i] = rd[i] - atw[i];
      dz_aff[i] = -z[i] - d[i] * dzs_aff[i];
    }
    const double ap_aff = max_step(z, dz_aff);
    const double ad_aff = max_step(zs, dzs_aff);
    double mu_aff = 0.0;
    for (std::size_t i = 0; i < nv; ++i) mu_aff += (z[i] + ap_aff * dz_aff[i]) * (zs[i] + ad_aff * dzs_aff[i]);
    mu_aff /= static_cast<double>(nv);
    const double ratio = mu_aff / mu;
    const double centering = ratio * ratio * ratio;

    // Combined corrector direction.
    for (std::size_t i = 0; i < nv; ++i) {
      rc[i] = centering * mu - z[i] * zs[i] - dz_aff[i] * dzs_aff[i];
      tmp_v[i] = d[i] * rd[i] - rc[i] / zs[i];
    }
    lp.multiply(tmp_v, az);
    for (std::size_t i = 0; i < nr; ++i) rhs[i] = rp[i] + az[i];
    refined_solve(rhs, dw);
    lp.multiply_transpose(dw, atw);
    for (std::size_t i = 0; i < nv; ++i) {
      dzs[i] = rd[i] - atw[i];
      dz[i] = rc[i] / zs[i] - d[i] * dzs[i];
    }
    const double ap = std::min(1.0, 0.9995 * max_step(z, dz));
    const double ad = std::min(1.0, 0.9995 * max_step(zs, dzs));
    for (std::size_t i = 0; i < nv; ++i) {
      z[i] = std::max(z[i] + ap * dz[i], 1e-300);
      zs[i] = std::max(zs[i] + ad * dzs[i], 1e-300);
    }
    for (std::size_t i = 0; i < nr; ++i) w[i] += ad * dw[i];

    stalls = (ap < 1e-6 && ad < 1e-6) ? stalls + 1 : 0;
    if (stalls >= 3) break;
  }
  // Stalled short of the tolerances: keep the iterate if it is still a usable
  // approximation of the optimum.
  const bool usable = best.pinf <= 1e-4 && best.dinf <= 1e-4 && best.gap <= 1e-5;
  best.status = usable || best_merit < 1e3 ? SolverStatus::Inaccurate : SolverStatus::NumericalFailure;
  return best;
}

/// Equality-constrained refit: least squares of y on the columns of G in the
/// recovered support. The support matrix is far better conditioned than G, so
/// this removes the dense rounding noise an interior iterate carries when G is
/// nearly singular. The refit replaces x only if it keeps every sign, fits y at
/// least as well, and does not raise the objective beyond rounding.
void polish_equality(std::span<const double> y, const SampledKernel& kernel, std::vector<double>& x) {
  const double peak = inf_norm(x);
  if (!(peak > 0.0)) return;
  const std::vector<double> fit = convolve_same(x, kernel);
  double residual = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) residual = std::max(residual, std::abs(y[k] - fit[k]));
  double objective = 0.0;
  for (double v : x) objective += std::abs(v);
  const auto n = static_cast<Eigen::Index>(y.size());
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  for (double rel : {1e-4, 1e-6, 1e-8}) {
    std::vector<Eigen::Index> support;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (std::abs(x[j]) > rel * peak) support.push_back(static_cast<Eigen::Index>(j));
    }
    if (support.empty() || static_cast<Eigen::Index>(support.size()) > n) continue;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) {
      for (Eigen::Index k = 0; k < n; ++k) A(k, static_cast<Eigen::Index>(i)) = kernel.at(static_cast<int>(k - support[i]));
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < A.cols()) continue;
    const Eigen::VectorXd xs = qr.solve(yv);
    if (!xs.allFinite()) continue;
    const double refit_residual = (yv - A * xs).cwiseAbs().maxCoeff();
    bool signs = true;
    for (std::size_t i = 0; i < support.size(); ++i) {
      signs = signs && (xs(static_cast<Eigen::Index>(i)) > 0.0) == (x[static_cast<std::size_t>(support[i])] > 0.0);
    }
    const double refit_objective = xs.cwiseAbs().sum();
    if (signs && refit_residual <= residual && refit_objective <= objective + 1e-6 * (1.0 + objective)) {
      std::fill(x.begin(), x.end(), 0.0);
      for (std::size_t i = 0; i < support.size(); ++i) {
        x[static_cast<std::size_t>(support[i])] = xs(static_cast<Eigen::Index>(i));
      }
      return;
    }
  }
}

}  // namespace

RecoveryProblem RecoveryProblem::from(const Measurements& m, const SampledKernel& kernel, double solver_tol) {
  RecoveryProblem p;
  p.y = m.y;
  p.kernel = kernel;
  p.delta = m.delta;
  p.solver_tol = solver_tol;
  return p;
}

std::string to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::Optimal: return "optimal";
    case SolverStatus::Inaccurate: return "inaccurate";
    case SolverStatus::MaxIterations: return "max_iterations";
    case SolverStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

SpikeTrain RecoverySolution::estimate() const {
  return SpikeTrain(support, std::max<std::size_t>(x_hat.size(), 1));
}

std::vector<Spike> extract_support(std::span<const double> x_hat, double support_floor) {
  if (!(support_floor >= 0.0)) throw InvalidArgument("support_floor must be >= 0");
  std::vector<Spike> out;
  for (std::size_t k = 0; k < x_hat.size(); ++k) {
    if (std::abs(x_hat[k]) > support_floor) out.push_back({static_cast<long>(k), x_hat[k]});
  }
  return out;
}

RecoverySolution solve_l1_deconvolution(const RecoveryProblem& problem, std::optional<double> support_floor) {
  if (!(problem.delta >= 0.0) || !std::isfinite(problem.delta)) throw InvalidArgument("delta must be >= 0");
  if (problem.y.empty()) throw InvalidArgument("measurements are empty");
  if (problem.kernel.taps.empty() || inf_norm(problem.kernel.taps) == 0.0) {
    throw InvalidArgument("kernel taps are all zero");
  }
  if (!(problem.solver_tol > 0.0)) throw InvalidArgument("solver_tol must be positive");
  for (double v : problem.y) {
    if (!std::isfinite(v)) throw InvalidArgument("measurements contain non-finite values");
  }

  const std::size_t n = problem.y.size();
  RecoverySolution sol;
  sol.x_hat.assign(n, 0.0);

  double y_l1 = 0.0;
  for (double v : problem.y) y_l1 += std::abs(v);
  if (problem.delta >= y_l1) {
    // x = 0 is feasible and attains the lower bound of the objective.
    sol.residual_l1 = y_l1;
    sol.support_floor = support_floor.value_or(0.0);
    return sol;
  }

  // Work on y / ||y||_inf so the interior-point tolerances are scale free.
  const double scale = inf_norm(problem.y);
  const bool budget = problem.delta > 0.0;
  DeconvolutionLp lp(problem.kernel, n, budget);
  std::vector<double> b(lp.rows()), c(lp.vars(), 0.0);
  for (std::size_t k = 0; k < n; ++k) b[k] = problem.y[k] / scale;
  if (budget) b[n] = problem.delta / scale;
  std::fill(c.begin(), c.begin() + static_cast<long>(2 * n), 1.0);

  IpmResult ipm = interior_point(lp, b, c, problem.solver_tol, problem.feasibility_tol, problem.max_iterations);
  if (ipm.z.empty()) throw SolverError("interior-point iteration diverged before producing an iterate");

  for (std::size_t k = 0; k < n; ++k) sol.x_hat[k] = scale * (ipm.z[k] - ipm.z[n + k]);
  if (!budget) polish_equality(problem.y, problem.kernel, sol.x_hat);
  sol.status = ipm.status;
  sol.iterations = ipm.iterations;
  sol.primal_infeasibility = ipm.pinf;
  sol.dual_infeasibility = ipm.dinf;
  sol.relative_gap = ipm.gap;
  sol.dual_objective = scale * ipm.dual_objective;

  std::vector<double> fit = convolve_same(sol.x_hat, problem.kernel);
  sol.residual_l1 = 0.0;
  for (std::size_t k = 0; k < n; ++k) sol.residual_l1 += std::abs(problem.y[k] - fit[k]);
  sol.objective = 0.0;
  for (double v : sol.x_hat) sol.objective += std::abs(v);

  sol.support_floor = support_floor.value_or(1e-8 * inf_norm(sol.x_hat));
  sol.support = extract_support(sol.x_hat, sol.support_floor);
  return sol;
}

}  // namespace pulsedeconv
