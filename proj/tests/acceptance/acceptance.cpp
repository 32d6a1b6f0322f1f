// Acceptance gate: one PASS/FAIL line per criterion; exit status is nonzero
// when any criterion fails. Set PULSEDECONV_ACCEPTANCE=1,4 to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lp_oracle.hpp"
#include "pulsedeconv/certificate.hpp"
#include "pulsedeconv/error.hpp"
#include "pulsedeconv/harness.hpp"
#include "pulsedeconv/kernels.hpp"
#include "pulsedeconv/metrics.hpp"
#include "pulsedeconv/recovery.hpp"
#include "pulsedeconv/signal.hpp"

namespace pd = pulsedeconv;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1. Noiseless exact recovery.
Outcome exact_recovery() {
  const auto g = pd::sample_kernel(pd::Kernel::gaussian(), 1.0, 4, 1e-2);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<long> gap(5, 12);  // >= ceil(1.1 * 4)
  std::uniform_real_distribution<double> mag(5.0, 10.0);
  std::bernoulli_distribution sign(0.5);
  double worst_amp = 0.0;
  int support_mismatch = 0;
  const int trials = 10;
  for (int t = 0; t < trials; ++t) {
    std::vector<pd::Spike> s;
    long k = 60;
    for (int m = 0; m < 5; ++m) {
      s.push_back({k, sign(rng) ? mag(rng) : -mag(rng)});
      k += gap(rng);
    }
    const pd::SpikeTrain x(s, 192);
    const auto m = pd::synthesize(x, g, pd::L1Budget{0.0, 0});
    pd::RecoveryProblem p;
    p.y = m.y;
    p.kernel = g;
    p.delta = 0.0;
    const auto sol = pd::solve_l1_deconvolution(p);
    const auto est = sol.estimate();
    if (est.locations() != x.locations()) {
      ++support_mismatch;
      continue;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      worst_amp = std::max(worst_amp, std::abs(est[i].amplitude - x[i].amplitude));
    }
  }
  return {support_mismatch == 0 && worst_amp <= 1e-6,
          std::to_string(trials) + " instances, support mismatches " + std::to_string(support_mismatch) +
              ", max amplitude error " + fmt("%.2e", worst_amp)};
}

// 2. Decay constants and curvature at the origin.
Outcome table_constants() {
  const std::array<double, 4> gauss_c{1.22, 1.59, 2.04, 2.6};
  const std::array<double, 4> cauchy_c{1.0, 1.0, 2.0, 5.22};
  bool ok = true;
  std::ostringstream d;
  for (const auto& [kernel, expected, g2] :
       {std::tuple{pd::Kernel::gaussian(), gauss_c, -1.0}, std::tuple{pd::Kernel::cauchy(), cauchy_c, -2.0}}) {
    const auto r = pd::verify_admissibility(kernel);
    d << kernel.name() << " C=(";
    for (int l = 0; l < 4; ++l) {
      d << (l ? ", " : "") << fmt("%.4f", r.C[static_cast<std::size_t>(l)]);
      ok = ok && std::abs(r.C[static_cast<std::size_t>(l)] - expected[static_cast<std::size_t>(l)]) <= 0.01;
    }
    d << ") g''(0)=" << kernel.eval(0.0, 2) << "; ";
    ok = ok && kernel.eval(0.0, 2) == g2 && r.passed;
  }
  return {ok, d.str()};
}

// 3. Empirical minimal separation with alternating signs, M = 8.
Outcome empirical_nu() {
  bool ok = true;
  std::ostringstream d;
  for (const auto& [kernel, expected] : {std::pair{pd::Kernel::gaussian(), 1.1}, std::pair{pd::Kernel::cauchy(), 0.45}}) {
    pd::SeparationSearch s;
    s.M = 8;
    s.alternating = true;
    s.equal = false;
    s.random_patterns = 0;
    const double nu = pd::empirical_min_separation(kernel, s).nu;
    d << kernel.name() << " nu=" << fmt("%.4f", nu) << " (target " << expected << " +- 0.05); ";
    ok = ok && std::abs(nu - expected) <= 0.05;
  }
  return {ok, d.str()};
}

// Shared randomized suite for criteria 4 to 7.
struct BoundSuite {
  std::vector<pd::TrialRecord> records;
  std::vector<double> deltas;
  bool preconditions = true;
  std::string error;
};

const BoundSuite& bound_suite() {
  static const BoundSuite suite = [] {
    BoundSuite s;
    pd::ExperimentConfig c;
    c.kernel = "gaussian";
    c.sigmas = {4.0};
    c.N = 4;
    c.grid_len = 1024;
    c.spike_count = 10;
    c.separations = {1.1};
    c.placement = pd::Placement::MinGap;
    c.noise = pd::NoiseModel::L1Budget;
    // Two sweeps of three decades each. The low one is where spikes qualify for
    // the per-spike localization bound (|c| > 16 gamma^2 delta / beta); there
    // every spike is localized exactly on the grid. The high one, relative noise
    // ||eta||_1 / ||g * x||_1 from about 3e-3 to 3, is where grid-level errors
    // appear and carries the scaling fit.
    c.deltas = {1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1, 2e-1, 5e-1, 1.0,
                1e1,  2e1,  5e1,  1e2,  2e2,  5e2,  1e3,  2e3,  5e3,  1e4};
    c.trials = 10;
    c.seed = 2025;
    c.methods = {pd::Method::L1};
    c.trunc_tol = 5e-2;
    c.plots = false;
    s.deltas = c.deltas;
    try {
      s.records = pd::run_experiment(c);
    } catch (const std::exception& e) {
      s.error = e.what();
    }
    for (const auto& r : s.records) s.preconditions = s.preconditions && r.checked;
    return s;
  }();
  return suite;
}

int count_flag(const BoundSuite& s, const std::string& flag) {
  int n = 0;
  for (const auto& r : s.records) n += std::count(r.violations.begin(), r.violations.end(), flag) > 0;
  return n;
}

std::string suite_header(const BoundSuite& s) {
  int solver_flags = 0;
  for (const auto& r : s.records) solver_flags += !r.status.empty();
  return std::to_string(s.records.size()) + " trials, delta " + fmt("%g", s.deltas.front()) + ".." +
         fmt("%g", s.deltas.back()) + (s.preconditions ? "" : ", PRECONDITIONS NOT MET") +
         (solver_flags ? ", " + std::to_string(solver_flags) + " inexact solves" : "");
}

Outcome suite_flag(const std::string& flag, const std::function<double(const pd::TrialRecord&)>& ratio) {
  const auto& s = bound_suite();
  if (!s.error.empty()) return {false, s.error};
  double worst = 0.0;
  for (const auto& r : s.records) worst = std::max(worst, ratio(r));
  const int v = count_flag(s, flag);
  return {s.records.size() == 200 && s.preconditions && v == 0,
          suite_header(s) + ", violations " + std::to_string(v) + ", max value/bound " + fmt("%.3g", worst)};
}

Outcome theorem_l1() {
  return suite_flag("l1", [](const pd::TrialRecord& r) { return r.l1_err / r.bounds.l1_bound; });
}

Outcome corollary_far() {
  return suite_flag("far", [](const pd::TrialRecord& r) { return r.far_amp / r.bounds.far_amp_bound; });
}

Outcome lemma_near() {
  return suite_flag("lemma21", [](const pd::TrialRecord& r) { return r.lemma21_lhs / r.bounds.weighted_d2_bound; });
}

Outcome theorem_localization() {
  const auto& s = bound_suite();
  if (!s.error.empty()) return {false, s.error};
  int eligible = 0;
  double worst_ratio = 0.0;
  std::map<double, double> worst_by_delta;
  for (const auto& r : s.records) {
    double& w = worst_by_delta[r.delta];
    for (std::size_t m = 0; m < r.truth.size(); ++m) {
      if (std::isfinite(r.loc_errors[m])) w = std::max(w, r.loc_errors[m]);
      if (const auto& b = r.bounds.loc_bound_per_spike[m]) {
        ++eligible;
        if (*b > 0.0) worst_ratio = std::max(worst_ratio, r.loc_errors[m] / *b);
      }
    }
  }
  // Worst localization error per configured delta (records carry the realized delta, equal to it).
  std::vector<double> lx, ly;
  for (const auto& [delta, worst] : worst_by_delta) {
    if (worst > 0.0) {
      lx.push_back(std::log(delta));
      ly.push_back(std::log(worst));
    }
  }
  double slope = std::numeric_limits<double>::quiet_NaN();
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    slope = sxy / sxx;
  }
  std::ostringstream worst;
  for (const auto& [delta, w] : worst_by_delta) worst << fmt("%g", delta) << ":" << w << " ";
  const int v = count_flag(s, "loc");
  const bool slope_ok = std::isfinite(slope) && std::abs(slope - 0.5) <= 0.15;
  return {s.records.size() == 200 && s.preconditions && v == 0 && slope_ok,
          suite_header(s) + ", eligible spikes " + std::to_string(eligible) + ", violations " + std::to_string(v) +
              ", max error/bound " + fmt("%.3g", worst_ratio) + "; worst error by delta [" + worst.str() +
              "] log-log slope " + fmt("%.3f", slope) + " over " + std::to_string(lx.size()) +
              " nonzero points (target 0.5 +- 0.15)"};
}

double condition_number(const pd::SampledKernel& g, std::size_t n) {
  Eigen::MatrixXd G(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      G(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = g.at(static_cast<int>(k) - static_cast<int>(j));
    }
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
  const auto& sv = svd.singularValues();
  return sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
}

// 8. Interior-point objective against a dense simplex on small instances.
Outcome oracle_equivalence() {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> len(16, 64);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  int oracle_failures = 0;
  for (int t = 0; t < 50; ++t) {
    const auto kernel = t % 2 ? pd::Kernel::cauchy() : pd::Kernel::gaussian();
    const auto n = static_cast<std::size_t>(len(rng));
    // Sparse stream with edge-truncated pulses; every fifth instance is noiseless with delta = 0.
    const bool noiseless = t % 5 == 0;
    // With delta = 0 the feasible set is the single point G^{-1} y, which
    // rounding of y moves by about cond(G) * eps; keep that below the tolerance.
    auto g = pd::sample_kernel(kernel, 0.5 + unit(rng), 1 + t % 4, 2e-2);
    while (noiseless && condition_number(g, n) > 1e8) g = pd::sample_kernel(kernel, 0.5 + unit(rng), 1 + t % 4, 2e-2);
    std::vector<double> x(n, 0.0), y(n, 0.0);
    const auto step = static_cast<std::size_t>(std::ceil(1.1 * g.width()));
    for (std::size_t k = static_cast<std::size_t>(unit(rng) * 4.0); k < n; k += step + static_cast<std::size_t>(unit(rng) * 5)) {
      x[k] = (unit(rng) < 0.5 ? -1.0 : 1.0) * (1.0 + 4.0 * unit(rng));
    }
    double noise = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t j = 0; j < n; ++j) y[k] += g.at(static_cast<int>(k) - static_cast<int>(j)) * x[j];
      if (!noiseless) {
        const double e = 0.05 * (unit(rng) - 0.5);
        y[k] += e;
        noise += std::abs(e);
      }
    }
    const double delta = noiseless ? 0.0 : noise * (1.0 + 20.0 * unit(rng));
    pd::RecoveryProblem p;
    p.y = y;
    p.kernel = g;
    p.delta = delta;
    const auto sol = pd::solve_l1_deconvolution(p);
    const auto ref = pd::testing::l1_deconvolution_oracle(y, g, delta);
    if (!ref.optimal) {
      ++oracle_failures;
      if (std::getenv("PULSEDECONV_ACCEPTANCE_VERBOSE")) std::fprintf(stderr, "  instance %d: oracle not optimal\n", t);
      continue;
    }
    const double diff = std::abs(sol.objective - ref.objective);
    if (diff > 1e-6 && std::getenv("PULSEDECONV_ACCEPTANCE_VERBOSE")) {
      std::fprintf(stderr, "  instance %d: %s sigma %.3f N %d n %zu delta %.3g status %s objective %.9g oracle %.9g\n", t,
                   kernel.name().c_str(), g.sigma, g.N, n, delta, pd::to_string(sol.status).c_str(), sol.objective,
                   ref.objective);
      if (const char* dir = std::getenv("PULSEDECONV_ACCEPTANCE_DUMP")) {
        FILE* f = std::fopen((std::string(dir) + "/instance" + std::to_string(t) + ".txt").c_str(), "w");
        std::fprintf(f, "%.17g\n", delta);
        for (double v : g.taps) std::fprintf(f, "%.17g ", v);
        std::fprintf(f, "\n");
        for (double v : y) std::fprintf(f, "%.17g ", v);
        std::fprintf(f, "\n");
        for (double v : sol.x_hat) std::fprintf(f, "%.17g ", v);
        std::fprintf(f, "\n");
        for (double v : ref.x) std::fprintf(f, "%.17g ", v);
        std::fprintf(f, "\n");
        std::fclose(f);
      }
    }
    worst = std::max(worst, diff);
  }
  return {oracle_failures == 0 && worst <= 1e-6, "50 instances, max |objective - oracle| " + fmt("%.2e", worst) +
                                                     (oracle_failures ? ", oracle failures " + std::to_string(oracle_failures)
                                                                      : "")};
}

// 9. Trend reproduction over the SNR sweep.
Outcome trend_reproduction() {
  pd::ExperimentConfig c;
  c.snr_db = {15.0, 20.0, 23.0, 25.0, 30.0, 35.0};
  c.separations = {1.1, 1.5, 2.0};
  c.trials = 20;
  c.seed = 9;
  c.methods = {pd::Method::L1};
  c.plots = false;
  const auto records = pd::run_experiment(c);
  const auto rows = pd::aggregate(records, c.noise);
  // Diagnostic only: the same ratio for signed offsets (estimate minus truth).
  std::map<double, std::vector<double>> offsets;
  for (const auto& r : records) {
    if (r.noise_level != 23.0) continue;
    for (std::size_t m = 0; m < r.truth.size(); ++m) {
      if (r.nearest[m]) offsets[r.separation].push_back(static_cast<double>(*r.nearest[m] - r.truth[m].location));
    }
  }
  bool ok_a = true, ok_b = true, ok_c = true;
  std::ostringstream d;
  for (double sep : c.separations) {
    std::vector<double> snr, mean, std_dev, far;
    double ratio23 = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rows) {
      if (r.separation != sep) continue;
      if (r.noise_level == 23.0) {
        ratio23 = r.std_loc_error / r.mean_loc_error;
        continue;
      }
      snr.push_back(r.noise_level);
      mean.push_back(r.mean_loc_error);
      std_dev.push_back(r.std_loc_error);
      far.push_back(r.mean_far_amp);
    }
    const double rho_mean = pd::spearman(snr, mean);
    const double rho_std = pd::spearman(snr, std_dev);
    const double rho_far = pd::spearman(snr, far);
    // A constant series (for example all zero) has no increasing trend.
    auto nonincreasing = [](double rho) { return std::isnan(rho) || rho <= 0.0; };
    ok_a = ok_a && nonincreasing(rho_mean) && nonincreasing(rho_std);
    ok_b = ok_b && ratio23 >= 3.0;
    ok_c = ok_c && nonincreasing(rho_far);
    d << "sep " << sep << ": rho(mean)=" << fmt("%.2f", rho_mean) << " rho(std)=" << fmt("%.2f", rho_std)
      << " rho(far)=" << fmt("%.2f", rho_far) << " std/mean@23dB=" << fmt("%.2f", ratio23);
    const auto& off = offsets[sep];
    if (!off.empty()) {
      const double mu = std::accumulate(off.begin(), off.end(), 0.0) / static_cast<double>(off.size());
      double var = 0.0;
      for (double e : off) var += (e - mu) * (e - mu);
      d << " (signed offsets: " << fmt("%.1f", std::sqrt(var / static_cast<double>(off.size())) / std::abs(mu)) << ")";
    }
    d << "; ";
  }
  d << "(a) " << (ok_a ? "pass" : "FAIL") << " (b) " << (ok_b ? "pass" : "FAIL") << " (c) " << (ok_c ? "pass" : "FAIL");
  return {ok_a && ok_b && ok_c, d.str()};
}

// 10. Certificates on random separated configurations at the tabulated nu.
Outcome certificate_verification() {
  bool ok = true;
  std::ostringstream d;
  for (const auto& kernel : {pd::Kernel::gaussian(), pd::Kernel::cauchy()}) {
    const auto adm = pd::verify_admissibility(kernel);
    const double nu = kernel.nominal_nu();
    std::mt19937_64 rng(kernel.family() == pd::KernelFamily::Gaussian ? 101 : 202);
    std::uniform_int_distribution<int> count(2, 10);
    std::uniform_real_distribution<double> gap(nu, 2.0 * nu);
    std::uniform_real_distribution<double> width(0.5, 3.0);
    std::bernoulli_distribution sign(0.5);
    int failures = 0;
    double worst_q = 0.0, worst_res = 0.0;
    for (int t = 0; t < 20; ++t) {
      const double sigma = width(rng);
      const int M = count(rng);
      std::vector<double> nodes{0.0}, signs{sign(rng) ? 1.0 : -1.0};
      for (int m = 1; m < M; ++m) {
        nodes.push_back(nodes.back() + gap(rng) * sigma);
        signs.push_back(sign(rng) ? 1.0 : -1.0);
      }
      try {
        const auto cert = pd::build_certificate(nodes, signs, kernel, sigma);
        const auto r = pd::verify_certificate(cert, adm.epsilon, adm.beta);
        worst_q = std::max(worst_q, r.max_abs_q);
        worst_res = std::max(worst_res, r.interpolation_residual);
        const bool pass = r.max_abs_q <= 1.0 + 1e-6 && r.tail_bound <= 1.0 + 1e-6 &&
                          r.interpolation_residual <= 1e-9 && r.quadratic;
        failures += !pass;
      } catch (const pd::ConstructionFailed&) {
        ++failures;
      }
    }
    ok = ok && failures == 0;
    d << kernel.name() << " (nu " << nu << "): failures " << failures << "/20, max|q| " << fmt("%.6f", worst_q)
      << ", max residual " << fmt("%.1e", worst_res) << "; ";
  }
  return {ok, d.str()};
}

// 11. Ordering against the baselines at low SNR.
Outcome baseline_ordering() {
  pd::ExperimentConfig c;
  c.snr_db = {15.0};
  c.separations = {1.1};
  c.trials = 20;
  c.seed = 11;
  c.methods = {pd::Method::L1, pd::Method::Omp, pd::Method::Music};
  c.plots = false;
  const auto rows = pd::aggregate(pd::run_experiment(c), c.noise);
  std::map<pd::Method, double> mean;
  std::map<pd::Method, int> misses;
  for (const auto& r : rows) {
    mean[r.method] = r.mean_loc_error;
    misses[r.method] = r.misses;
  }
  const bool ok = mean[pd::Method::L1] <= mean[pd::Method::Omp] && mean[pd::Method::L1] <= mean[pd::Method::Music];
  std::ostringstream d;
  for (auto m : c.methods) d << pd::to_string(m) << " " << fmt("%.3f", mean[m]) << " (misses " << misses[m] << ") ";
  d << "at 15 dB, separation 1.1 sigma N, 20 trials";
  return {ok, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"exact recovery, noiseless", exact_recovery},
      {"decay constants and g''(0)", table_constants},
      {"empirical separation constant", empirical_nu},
      {"l1 error bound", theorem_l1},
      {"far false-detection bound", corollary_far},
      {"localization bound and sqrt scaling", theorem_localization},
      {"near-support weighted distance bound", lemma_near},
      {"LP oracle equivalence", oracle_equivalence},
      {"trends over SNR sweep", trend_reproduction},
      {"certificate verification", certificate_verification},
      {"baseline ordering at low SNR", baseline_ordering},
  };
  std::set<int> selected;
  if (const char* env = std::getenv("PULSEDECONV_ACCEPTANCE")) {
    std::stringstream ss(env);
    for (std::string tok; std::getline(ss, tok, ',');) selected.insert(std::stoi(tok));
  }
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.contains(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("criterion %2d %s: %s | %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed ? 1 : 0;
}
