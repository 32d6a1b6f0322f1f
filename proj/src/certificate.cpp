#include "pulsedeconv/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "pulsedeconv/error.hpp"

namespace pulsedeconv {

double DualCertificate::eval(double t, int order) const {
  if (order < 0 || order > 2) throw InvalidArgument("certificate derivative order must be 0, 1 or 2");
  double q = 0.0;
  for (std::size_t m = 0; m < nodes.size(); ++m) {
    const double tau = (t - nodes[m]) / sigma;
    q += coeffs_a[m] * kernel.eval(tau, order) + coeffs_b[m] * kernel.eval(tau, order + 1);
  }
  return q / std::pow(sigma, order);
}

double eval_certificate(const DualCertificate& cert, double t) { return cert.eval(t, 0); }

DualCertificate build_certificate(std::vector<double> nodes, std::vector<double> signs, const Kernel& kernel,
                                  double sigma) {
  if (nodes.empty()) throw InvalidArgument("certificate needs at least one node");
  if (nodes.size() != signs.size()) throw InvalidArgument("nodes and signs must have the same length");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be positive");
  for (double t : nodes) {
    if (!std::isfinite(t)) throw InvalidArgument("certificate nodes must be finite");
  }
  for (double u : signs) {
    if (u != 1.0 && u != -1.0) throw InvalidArgument("certificate signs must be +1 or -1");
  }

  const std::size_t m_count = nodes.size();
  const auto M = static_cast<Eigen::Index>(m_count);
  Eigen::MatrixXd A(2 * M, 2 * M);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * M);
  for (Eigen::Index j = 0; j < M; ++j) {
    rhs(j) = signs[static_cast<std::size_t>(j)];
    for (Eigen::Index m = 0; m < M; ++m) {
      const double tau = (nodes[static_cast<std::size_t>(j)] - nodes[static_cast<std::size_t>(m)]) / sigma;
      const double g0 = kernel.eval(tau, 0);
      const double g1 = kernel.eval(tau, 1);
      const double g2 = kernel.eval(tau, 2);
      A(j, m) = g0;
      A(j, M + m) = g1;
      // Stationarity rows are scaled by sigma, which does not change the solution.
      A(M + j, m) = g1;
      A(M + j, M + m) = g2;
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxCertificateCondition)) {
    std::size_t bi = 0;
    std::size_t bj = m_count > 1 ? 1 : 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m_count; ++i) {
      for (std::size_t j = i + 1; j < m_count; ++j) {
        const double gap = std::abs(nodes[i] - nodes[j]);
        if (gap < best) {
          best = gap;
          bi = i;
          bj = j;
        }
      }
    }
    std::ostringstream msg;
    msg << "certificate system is ill-conditioned (condition number " << cond << "); closest nodes are t[" << bi
        << "] = " << nodes[bi] << " and t[" << bj << "] = " << nodes[bj];
    throw ConstructionFailed(msg.str());
  }
  const Eigen::VectorXd coef = svd.solve(rhs);

  DualCertificate cert;
  cert.nodes = std::move(nodes);
  cert.signs = std::move(signs);
  cert.coeffs_a.assign(coef.data(), coef.data() + M);
  cert.coeffs_b.assign(coef.data() + M, coef.data() + 2 * M);
  cert.sigma = sigma;
  cert.kernel = kernel;
  cert.condition_number = cond;
  double residual = 0.0;
  for (std::size_t j = 0; j < m_count; ++j) {
    residual = std::max(residual, std::abs(cert.eval(cert.nodes[j], 0) - cert.signs[j]));
    residual = std::max(residual, std::abs(cert.eval(cert.nodes[j], 1)) * sigma);
  }
  cert.system_residual = residual;
  return cert;
}

CertificateReport verify_certificate(const DualCertificate& cert, double epsilon, double beta, CertificateGrid grid,
                                     double bound_tol, double residual_tol) {
  CertificateReport report;
  const double sigma = cert.sigma;
  const double g0 = cert.kernel.eval(0.0, 0);

  for (std::size_t m = 0; m < cert.nodes.size(); ++m) {
    report.interpolation_residual =
        std::max(report.interpolation_residual, std::abs(cert.eval(cert.nodes[m], 0) - cert.signs[m]));
    report.stationarity_residual =
        std::max(report.stationarity_residual, std::abs(cert.eval(cert.nodes[m], 1)) * sigma);
  }

  auto visit = [&](double t) {
    const double q = std::abs(cert.eval(t, 0));
    if (q > report.max_abs_q) {
      report.max_abs_q = q;
      report.argmax_t = t;
    }
  };

  const auto [lo_it, hi_it] = std::minmax_element(cert.nodes.begin(), cert.nodes.end());
  const double lo = *lo_it - grid.t_max * sigma;
  const double hi = *hi_it + grid.t_max * sigma;

  std::vector<double> sorted = cert.nodes;
  std::sort(sorted.begin(), sorted.end());
  const double far_h = grid.far_step * sigma;
  const double near_h = grid.near_step * sigma;
  // Coarse scan everywhere, then a fine scan within one sigma of each node.
  const auto coarse = static_cast<long>(std::ceil((hi - lo) / far_h));
  for (long i = 0; i <= coarse; ++i) visit(lo + static_cast<double>(i) * (hi - lo) / static_cast<double>(coarse));
  const auto fine = static_cast<long>(std::ceil(sigma / near_h));
  for (double tm : sorted) {
    for (long i = -fine; i <= fine; ++i) visit(tm + static_cast<double>(i) * near_h);
  }

  // Beyond the scan every node is at least t_max sigma away.
  const double c0 = decay_constant(cert.kernel, 0);
  const double c1 = decay_constant(cert.kernel, 1);
  double envelope = 0.0;
  for (std::size_t m = 0; m < cert.nodes.size(); ++m) {
    envelope += std::abs(cert.coeffs_a[m]) * c0 + std::abs(cert.coeffs_b[m]) * c1;
  }
  report.tail_bound = envelope / (1.0 + grid.t_max * grid.t_max);

  if (epsilon > 0.0) {
    const auto steps = static_cast<long>(std::ceil(epsilon * sigma / near_h));
    for (double tm : sorted) {
      for (long i = -steps; i <= steps; ++i) {
        const double dt = std::clamp(static_cast<double>(i) * near_h, -epsilon * sigma, epsilon * sigma);
        const double limit = 1.0 - beta * dt * dt / (4.0 * g0 * sigma * sigma);
        const double excess = std::abs(cert.eval(tm + dt, 0)) - limit;
        if (excess > report.quadratic_violation) {
          report.quadratic_violation = excess;
          report.quadratic_violation_t = tm + dt;
        }
      }
    }
  }

  report.bounded = report.max_abs_q <= 1.0 + bound_tol && report.tail_bound <= 1.0 + bound_tol;
  report.interpolates = report.interpolation_residual <= residual_tol && report.stationarity_residual <= residual_tol;
  report.quadratic = report.quadratic_violation <= bound_tol;
  report.passed = report.bounded && report.interpolates && report.quadratic;
  return report;
}

namespace {

bool passes_at(const Kernel& kernel, double nu, const std::vector<std::vector<double>>& patterns, double epsilon,
               double beta, const SeparationSearch& config, std::vector<double>& failing) {
  const std::size_t m_count = patterns.front().size();
  std::vector<double> nodes(m_count);
  for (std::size_t m = 0; m < m_count; ++m) nodes[m] = nu * static_cast<double>(m);
  for (const auto& signs : patterns) {
    bool ok = false;
    try {
      const DualCertificate cert = build_certificate(nodes, signs, kernel, 1.0);
      ok = verify_certificate(cert, epsilon, beta, config.grid, config.bound_tol).passed;
    } catch (const ConstructionFailed&) {
      ok = false;
    }
    if (!ok) {
      failing = signs;
      return false;
    }
  }
  return true;
}

}  // namespace

SeparationResult empirical_min_separation(const Kernel& kernel, const SeparationSearch& config) {
  if (config.M < 1) throw InvalidArgument("separation search needs M >= 1");
  if (!(config.tol > 0.0)) throw InvalidArgument("separation search tolerance must be positive");
  if (!(config.lower > 0.0) || !(config.upper > config.lower)) {
    throw InvalidArgument("separation search bracket must satisfy 0 < lower < upper");
  }
  SeparationResult result;
  if (config.M == 1) {
    result.nu = config.lower;
    result.worst_pattern = {1.0};
    return result;
  }

  double epsilon = config.epsilon;
  double beta = config.beta;
  if (!(epsilon > 0.0) || !(beta > 0.0)) {
    const AdmissibilityReport adm = verify_admissibility(kernel);
    epsilon = adm.epsilon;
    beta = adm.beta;
  }

  const auto m_count = static_cast<std::size_t>(config.M);
  std::vector<std::vector<double>> patterns;
  if (config.alternating) {
    std::vector<double> p(m_count);
    for (std::size_t m = 0; m < m_count; ++m) p[m] = m % 2 == 0 ? 1.0 : -1.0;
    patterns.push_back(p);
  }
  if (config.equal) patterns.emplace_back(m_count, 1.0);
  std::mt19937_64 rng(config.seed);
  std::bernoulli_distribution coin(0.5);
  for (int r = 0; r < config.random_patterns; ++r) {
    std::vector<double> p(m_count);
    for (double& u : p) u = coin(rng) ? 1.0 : -1.0;
    patterns.push_back(p);
  }
  if (patterns.empty()) throw InvalidArgument("separation search has no sign patterns");

  std::vector<double> failing;
  double lo = config.lower;
  double hi = config.upper;
  result.probes = 2;
  if (passes_at(kernel, lo, patterns, epsilon, beta, config, failing)) {
    throw InvalidArgument("certificate already passes at the lower bracket " + std::to_string(lo) +
                          "; widen the bracket downwards");
  }
  result.worst_pattern = failing;
  if (!passes_at(kernel, hi, patterns, epsilon, beta, config, failing)) {
    throw InvalidArgument("certificate fails at the upper bracket " + std::to_string(hi) +
                          "; widen the bracket upwards");
  }
  while (hi - lo > config.tol) {
    const double mid = 0.5 * (lo + hi);
    ++result.probes;
    if (passes_at(kernel, mid, patterns, epsilon, beta, config, failing)) {
      hi = mid;
    } else {
      lo = mid;
      result.worst_pattern = failing;
    }
  }
  result.nu = hi;
  return result;
}

}  // namespace pulsedeconv
