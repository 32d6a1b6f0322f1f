#include <cmath>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pulsedeconv/baselines.hpp"
#include "pulsedeconv/certificate.hpp"
#include "pulsedeconv/error.hpp"
#include "pulsedeconv/harness.hpp"
#include "pulsedeconv/io.hpp"
#include "pulsedeconv/kernels.hpp"
#include "pulsedeconv/recovery.hpp"
#include "pulsedeconv/signal.hpp"

namespace pd = pulsedeconv;
using nlohmann::json;

namespace {

struct KernelArgs {
  std::string name = "gaussian";
  double sigma = 1.0;
  int N = 4;
  double trunc_tol = 1e-2;

  void add_to(CLI::App* app, bool sampled = true) {
    app->add_option("--kernel", name, "Kernel family: gaussian or cauchy")->capture_default_str();
    app->add_option("--sigma", sigma, "Pulse width")->capture_default_str();
    if (sampled) {
      app->add_option("--N", N, "Samples per unit width")->capture_default_str();
      app->add_option("--trunc-tol", trunc_tol, "Kernel truncation tolerance")->capture_default_str();
    }
  }
  pd::Kernel kernel() const { return pd::Kernel::from_name(name); }
  pd::SampledKernel sampled() const { return pd::sample_kernel(kernel(), sigma, N, trunc_tol); }
};

void emit_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    pd::write_text(path, j.dump(2) + "\n");
  }
}

std::vector<double> signs_for(int M, const std::string& pattern) {
  std::vector<double> s(static_cast<std::size_t>(M), 1.0);
  if (pattern == "alternating") {
    for (int i = 1; i < M; i += 2) s[static_cast<std::size_t>(i)] = -1.0;
  } else if (pattern != "equal") {
    throw pd::InvalidArgument("unknown sign pattern '" + pattern + "' (expected alternating or equal)");
  }
  return s;
}

int cmd_run(const std::string& config_path, const std::string& output_dir, int threads, int trials) {
  pd::ExperimentConfig cfg;
  try {
    cfg = pd::config_from_json(json::parse(pd::read_text(config_path)));
  } catch (const json::parse_error& e) {
    throw pd::InvalidArgument(config_path + ": " + e.what());
  }
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  if (threads > 0) cfg.threads = threads;
  if (trials > 0) cfg.trials = trials;
  const auto records = pd::run_experiment(cfg);
  const auto summary = pd::aggregate(records, cfg.noise);
  const auto paths = pd::default_output_paths(cfg.output_dir, cfg.plots);
  pd::emit_outputs(records, summary, paths);
  pd::write_text(std::filesystem::path(cfg.output_dir) / "config.json", pd::config_to_json(cfg).dump(2) + "\n");
  int violations = 0;
  for (const auto& s : summary) violations += s.violations;
  std::cout << records.size() << " records, " << summary.size() << " cells, " << violations
            << " trials with bound violations\n"
            << "wrote " << paths.trials_csv.string() << " and " << paths.summary_csv.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse spike deconvolution by l1 minimization"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run a configured simulation sweep");
  std::string config_path;
  std::string run_output;
  int run_threads = 0;
  int run_trials = 0;
  run->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", run_output, "Overrides output_dir from the config");
  run->add_option("--threads", run_threads, "Overrides threads from the config");
  run->add_option("--trials", run_trials, "Overrides trials from the config");

  // recover
  auto* recover = app.add_subcommand("recover", "Solve the l1 program for one measurement vector");
  KernelArgs rk;
  std::string rec_input, rec_output = "solution.csv", rec_status;
  double rec_delta = 0.0, rec_tol = 1e-10;
  recover->add_option("--input", rec_input, "Measurement CSV (index,value)")->required()->check(CLI::ExistingFile);
  rk.add_to(recover);
  recover->add_option("--delta", rec_delta, "Residual l1 budget")->required()->check(CLI::NonNegativeNumber);
  recover->add_option("--tol", rec_tol, "Relative duality gap tolerance")->capture_default_str();
  recover->add_option("--output", rec_output, "Solution CSV (k,x_hat)")->capture_default_str();
  recover->add_option("--status", rec_status, "Status JSON path (stdout when omitted)");

  // omp
  auto* omp = app.add_subcommand("omp", "Orthogonal matching pursuit baseline");
  KernelArgs ok;
  std::string omp_input, omp_output = "omp.csv";
  int omp_atoms = 1;
  double omp_tol = 0.0;
  omp->add_option("--input", omp_input, "Measurement CSV (index,value)")->required()->check(CLI::ExistingFile);
  ok.add_to(omp);
  omp->add_option("--atoms", omp_atoms, "Number of atoms to select")->required()->check(CLI::PositiveNumber);
  omp->add_option("--residual-tol", omp_tol, "Stop once ||r||_2 falls below this")->capture_default_str();
  omp->add_option("--output", omp_output, "Estimated spikes CSV (index,value)")->capture_default_str();

  // music
  auto* music = app.add_subcommand("music", "Subspace (MUSIC) baseline");
  KernelArgs mk;
  std::string music_input, music_output = "music.csv", music_spectrum;
  pd::MusicConfig mcfg;
  double carrier = 0.0, sample_rate = 0.0;
  music->add_option("--input", music_input, "Measurement CSV (index,value)")->required()->check(CLI::ExistingFile);
  mk.add_to(music);
  music->add_option("--order", mcfg.model_order, "Model order")->required()->check(CLI::NonNegativeNumber);
  music->add_option("--regularization", mcfg.deconv_regularization, "Spectral division regularization")
      ->capture_default_str();
  music->add_option("--hankel-rows", mcfg.hankel_rows, "Hankel rows (0 for automatic)")->capture_default_str();
  music->add_option("--carrier-hz", carrier, "Treat the input as RF with this carrier");
  music->add_option("--sample-hz", sample_rate, "Sampling rate for --carrier-hz");
  music->add_option("--output", music_output, "Located spikes CSV (index,value)")->capture_default_str();
  music->add_option("--spectrum", music_spectrum, "Pseudospectrum CSV");

  // certify
  auto* certify = app.add_subcommand("certify", "Build and verify the interpolating certificate");
  KernelArgs ck;
  std::vector<double> cert_nodes, cert_signs;
  double cert_spacing = 0.0;
  int cert_M = 8;
  std::string cert_pattern = "alternating", cert_output;
  double cert_eps = 0.0, cert_beta = 0.0;
  ck.add_to(certify, false);
  certify->add_option("--nodes", cert_nodes, "Node positions")->delimiter(',');
  certify->add_option("--signs", cert_signs, "Node signs (+1/-1)")->delimiter(',');
  certify->add_option("--spacing", cert_spacing, "Uniform spacing in units of sigma (instead of --nodes)");
  certify->add_option("--M", cert_M, "Node count with --spacing")->capture_default_str();
  certify->add_option("--pattern", cert_pattern, "Sign pattern with --spacing: alternating or equal")
      ->capture_default_str();
  certify->add_option("--epsilon", cert_eps, "Quadratic-clause radius (default from admissibility)");
  certify->add_option("--beta", cert_beta, "Quadratic-clause curvature (default from admissibility)");
  certify->add_option("--output", cert_output, "JSON output path (stdout when omitted)");

  // find-nu
  auto* findnu = app.add_subcommand("find-nu", "Bisect the minimal separation that admits a certificate");
  std::string fn_kernel = "gaussian", fn_patterns = "alternating", fn_output;
  pd::SeparationSearch search;
  findnu->add_option("--kernel", fn_kernel, "Kernel family")->capture_default_str();
  findnu->add_option("--M", search.M, "Node count")->capture_default_str();
  findnu->add_option("--patterns", fn_patterns, "alternating, equal, or all (adds random patterns)")
      ->capture_default_str();
  findnu->add_option("--random", search.random_patterns, "Random patterns with --patterns all")
      ->capture_default_str();
  findnu->add_option("--seed", search.seed, "Seed for random patterns")->capture_default_str();
  findnu->add_option("--lower", search.lower, "Lower bracket")->capture_default_str();
  findnu->add_option("--upper", search.upper, "Upper bracket")->capture_default_str();
  findnu->add_option("--tol", search.tol, "Bisection resolution")->capture_default_str();
  findnu->add_option("--output", fn_output, "JSON output path (stdout when omitted)");

  // admissibility
  auto* adm = app.add_subcommand("admissibility", "Report the decay and curvature constants of a kernel");
  std::string adm_kernel = "gaussian";
  adm->add_option("--kernel", adm_kernel, "Kernel family")->capture_default_str();

  // synthesize
  auto* synth = app.add_subcommand("synthesize", "Generate measurements from a spike CSV");
  KernelArgs sk;
  std::string syn_spikes, syn_output = "y.csv", syn_meta;
  std::size_t syn_len = 0;
  std::optional<double> syn_snr, syn_delta;
  std::uint64_t syn_seed = 0;
  std::string syn_mode = "eta_l1";
  synth->add_option("--spikes", syn_spikes, "Spike CSV (index,value)")->required()->check(CLI::ExistingFile);
  synth->add_option("--grid-len", syn_len, "Grid length")->required();
  sk.add_to(synth);
  auto* snr_opt = synth->add_option("--snr-db", syn_snr, "Gaussian noise at this SNR");
  synth->add_option("--delta", syn_delta, "Noise with this l1 norm")->excludes(snr_opt);
  synth->add_option("--seed", syn_seed, "Noise seed")->capture_default_str();
  synth->add_option("--delta-mode", syn_mode, "eta_l1 or eta_conv_g_l1")->capture_default_str();
  synth->add_option("--output", syn_output, "Measurement CSV")->capture_default_str();
  synth->add_option("--meta", syn_meta, "Measurement JSON (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, run_output, run_threads, run_trials);

    if (*recover) {
      pd::RecoveryProblem p;
      p.y = pd::read_series_csv(rec_input);
      p.kernel = rk.sampled();
      p.delta = rec_delta;
      p.solver_tol = rec_tol;
      const pd::RecoverySolution sol = pd::solve_l1_deconvolution(p);
      pd::write_series_csv(rec_output, sol.x_hat, "x_hat");
      emit_json(pd::to_json(sol), rec_status);
      return sol.status == pd::SolverStatus::NumericalFailure ? 2 : 0;
    }

    if (*omp) {
      const auto y = pd::read_series_csv(omp_input);
      const pd::OmpResult r = pd::omp_deconvolution(y, ok.sampled(), {omp_atoms, omp_tol});
      pd::write_spikes_csv(omp_output, r.estimate);
      emit_json({{"iterations", r.iterations},
                 {"rank_deficient", r.rank_deficient},
                 {"residual_norms", r.residual_norms},
                 {"estimate", pd::to_json(r.estimate)}},
                "");
      return 0;
    }

    if (*music) {
      const auto y = pd::read_series_csv(music_input);
      pd::SampledKernel g = mk.sampled();
      if (carrier > 0.0) {
        if (!(sample_rate > 0.0)) throw pd::InvalidArgument("--carrier-hz requires --sample-hz");
        g = pd::modulate_kernel(g, carrier, sample_rate);
      }
      const pd::MusicResult r = pd::music_deconvolution(y, g, mcfg);
      std::vector<pd::Spike> located;
      for (long k : r.locations) located.push_back({k, 1.0});
      pd::write_spikes_csv(music_output, pd::SpikeTrain(std::move(located), y.size()));
      if (!music_spectrum.empty()) pd::write_series_csv(music_spectrum, r.pseudospectrum, "pseudospectrum");
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      emit_json({{"locations", r.locations},
                 {"band_low", r.band_low},
                 {"band_size", r.band_size},
                 {"hankel_rows", r.hankel_rows},
                 {"numerical_rank", r.numerical_rank},
                 {"warnings", r.warnings}},
                "");
      return 0;
    }

    if (*certify) {
      const pd::Kernel kernel = ck.kernel();
      std::vector<double> nodes = cert_nodes;
      std::vector<double> signs = cert_signs;
      if (nodes.empty()) {
        if (!(cert_spacing > 0.0)) throw pd::InvalidArgument("give --nodes or a positive --spacing");
        for (int m = 0; m < cert_M; ++m) nodes.push_back(m * cert_spacing * ck.sigma);
        if (signs.empty()) signs = signs_for(cert_M, cert_pattern);
      } else if (signs.empty()) {
        signs = signs_for(static_cast<int>(nodes.size()), cert_pattern);
      }
      const pd::AdmissibilityReport adm_report = pd::verify_admissibility(kernel);
      const double eps = cert_eps > 0.0 ? cert_eps : adm_report.epsilon;
      const double beta = cert_beta > 0.0 ? cert_beta : adm_report.beta;
      const pd::DualCertificate cert = pd::build_certificate(nodes, signs, kernel, ck.sigma);
      const pd::CertificateReport report = pd::verify_certificate(cert, eps, beta);
      emit_json({{"certificate", pd::to_json(cert)},
                 {"epsilon", eps},
                 {"beta", beta},
                 {"report", pd::to_json(report)}},
                cert_output);
      return report.passed ? 0 : 1;
    }

    if (*findnu) {
      if (fn_patterns == "alternating") {
        search.alternating = true;
        search.equal = false;
        search.random_patterns = 0;
      } else if (fn_patterns == "equal") {
        search.alternating = false;
        search.equal = true;
        search.random_patterns = 0;
      } else if (fn_patterns == "all") {
        search.alternating = true;
        search.equal = true;
      } else {
        throw pd::InvalidArgument("unknown --patterns '" + fn_patterns + "' (expected alternating, equal or all)");
      }
      const pd::Kernel kernel = pd::Kernel::from_name(fn_kernel);
      const pd::SeparationResult r = pd::empirical_min_separation(kernel, search);
      emit_json({{"kernel", kernel.name()},
                 {"M", search.M},
                 {"nu", r.nu},
                 {"nominal_nu", kernel.nominal_nu()},
                 {"worst_pattern", r.worst_pattern},
                 {"probes", r.probes}},
                fn_output);
      return 0;
    }

    if (*adm) {
      const pd::AdmissibilityReport r = pd::verify_admissibility(pd::Kernel::from_name(adm_kernel));
      emit_json(pd::to_json(r), "");
      return r.passed ? 0 : 1;
    }

    if (*synth) {
      const pd::SpikeTrain spikes = pd::read_spikes_csv(syn_spikes, syn_len);
      pd::NoiseSpec noise = pd::L1Budget{0.0, syn_seed};
      if (syn_snr) noise = pd::GaussianSnr{*syn_snr, syn_seed};
      if (syn_delta) noise = pd::L1Budget{*syn_delta, syn_seed};
      pd::DeltaMode mode = pd::DeltaMode::EtaL1;
      if (syn_mode == "eta_conv_g_l1") {
        mode = pd::DeltaMode::EtaConvGL1;
      } else if (syn_mode != "eta_l1") {
        throw pd::InvalidArgument("unknown --delta-mode '" + syn_mode + "'");
      }
      const pd::Measurements m = pd::synthesize(spikes, sk.sampled(), noise, mode);
      pd::write_series_csv(syn_output, m.y, "y");
      json meta = pd::to_json(m);
      meta.erase("y");
      emit_json(meta, syn_meta);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
