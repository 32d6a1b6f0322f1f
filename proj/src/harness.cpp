#include "pulsedeconv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "pulsedeconv/baselines.hpp"
#include "pulsedeconv/error.hpp"
#include "pulsedeconv/io.hpp"
#include "svg_plot.hpp"

namespace pulsedeconv {

std::string to_string(Method m) {
  switch (m) {
    case Method::L1: return "l1";
    case Method::Omp: return "omp";
    case Method::Music: return "music";
  }
  return "unknown";
}

std::string to_string(NoiseModel m) { return m == NoiseModel::Snr ? "snr" : "l1_budget"; }

std::string to_string(Placement p) { return p == Placement::Even ? "even" : "min_gap"; }

namespace {

using nlohmann::json;

Method method_from(const std::string& s) {
  if (s == "l1") return Method::L1;
  if (s == "omp") return Method::Omp;
  if (s == "music") return Method::Music;
  throw InvalidArgument("unknown method '" + s + "' (expected l1, omp or music)");
}

DeltaMode delta_mode_from(const std::string& s) {
  if (s == "eta_l1") return DeltaMode::EtaL1;
  if (s == "eta_conv_g_l1") return DeltaMode::EtaConvGL1;
  throw InvalidArgument("unknown delta_mode '" + s + "' (expected eta_l1 or eta_conv_g_l1)");
}

std::string to_string(DeltaMode m) { return m == DeltaMode::EtaL1 ? "eta_l1" : "eta_conv_g_l1"; }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t cell, int trial) {
  return splitmix64(splitmix64(splitmix64(base) ^ static_cast<std::uint64_t>(cell)) ^
                    static_cast<std::uint64_t>(trial));
}

struct Cell {
  double sigma;
  double separation;
  double level;
};

std::vector<Cell> enumerate_cells(const ExperimentConfig& c) {
  std::vector<Cell> cells;
  for (double sigma : c.sigmas) {
    for (double sep : c.separations) {
      for (double level : c.noise_levels()) cells.push_back({sigma, sep, level});
    }
  }
  return cells;
}

/// Spacing in samples for a separation given in multiples of sigma N.
long spacing_samples(double separation, double sigma, int N) {
  return std::max(1L, static_cast<long>(std::ceil(separation * sigma * N - 1e-9)));
}

SpikeTrain draw_spikes(const ExperimentConfig& c, long spacing, long radius, std::mt19937_64& rng) {
  const long n = static_cast<long>(c.grid_len);
  const long K = c.spike_count;
  std::uniform_real_distribution<double> magnitude(c.amp_min, c.amp_max);
  std::bernoulli_distribution positive(0.5);
  std::vector<long> locs;
  if (c.placement == Placement::Even) {
    const long last_start = n - 1 - radius - (K - 1) * spacing;
    if (last_start < radius) {
      throw InvalidArgument("grid_len " + std::to_string(n) + " cannot hold " + std::to_string(K) +
                            " spikes spaced " + std::to_string(spacing) + " with kernel radius " +
                            std::to_string(radius));
    }
    std::uniform_int_distribution<long> start(radius, last_start);
    const long s0 = start(rng);
    for (long i = 0; i < K; ++i) locs.push_back(s0 + i * spacing);
  } else {
    // Uniform over configurations with gaps >= spacing: draw K distinct points
    // from a shortened range and re-expand the gaps.
    const long slots = n - 2 * radius - (K - 1) * (spacing - 1);
    if (slots < K) {
      throw InvalidArgument("grid_len " + std::to_string(n) + " cannot hold " + std::to_string(K) +
                            " spikes with gaps " + std::to_string(spacing) + " and kernel radius " +
                            std::to_string(radius));
    }
    std::vector<long> all(static_cast<std::size_t>(slots));
    std::iota(all.begin(), all.end(), 0L);
    std::sample(all.begin(), all.end(), std::back_inserter(locs), K, rng);
    std::sort(locs.begin(), locs.end());
    for (long i = 0; i < K; ++i) locs[static_cast<std::size_t>(i)] += radius + i * (spacing - 1);
  }
  std::vector<Spike> spikes;
  for (long k : locs) {
    const double a = magnitude(rng);
    spikes.push_back({k, positive(rng) ? a : -a});
  }
  return SpikeTrain(std::move(spikes), c.grid_len);
}

struct Shared {
  const ExperimentConfig* config;
  Kernel kernel;
  AdmissibilityReport report;
  double nu;
  std::map<double, SampledKernel> sampled;  // by sigma
};

struct Synthesized {
  SpikeTrain truth;           // effective spikes seen by the recovery model
  std::vector<double> y;      // data handed to l1 and OMP
  std::vector<double> music_y;
  SampledKernel music_kernel;
  double delta = 0.0;
  double snr_db = 0.0;
};

Synthesized synthesize_trial(const Shared& sh, const SampledKernel& g, const SpikeTrain& spikes, double level,
                             std::uint64_t noise_seed) {
  const ExperimentConfig& c = *sh.config;
  NoiseSpec noise;
  if (c.noise == NoiseModel::Snr) {
    noise = GaussianSnr{level, noise_seed};
  } else {
    noise = L1Budget{level, noise_seed};
  }
  Synthesized out;
  if (!c.demodulation) {
    Measurements m = synthesize(spikes, g, noise, c.delta_mode);
    out.truth = spikes;
    out.y = m.y;
    out.music_y = m.y;
    out.music_kernel = g;
    out.delta = m.delta;
    out.snr_db = m.snr_db;
    return out;
  }

  // RF echoes are shifted copies of the modulated pulse. Demodulating the
  // echo at k_m leaves the envelope scaled by cos(2 pi f_c k_m / f_s) / 2.
  const DemodulationConfig& d = *c.demodulation;
  const SampledKernel h = modulate_kernel(g, d.carrier_hz, d.sample_hz);
  Measurements rf = synthesize(spikes, h, noise, DeltaMode::EtaL1);
  out.y = demodulate(rf.y, d.carrier_hz, d.sample_hz, d.fir);
  const double w = 2.0 * std::numbers::pi * d.carrier_hz / d.sample_hz;
  std::vector<Spike> eff;
  for (const Spike& s : spikes.spikes()) {
    eff.push_back({s.location, s.amplitude * std::cos(w * static_cast<double>(s.location)) / 2.0});
  }
  out.truth = SpikeTrain(std::move(eff), spikes.grid_len());
  const std::vector<double> model = convolve_same(out.truth.dense(), g);
  std::vector<double> eta(out.y.size());
  double l1 = 0.0;
  for (std::size_t k = 0; k < eta.size(); ++k) {
    eta[k] = out.y[k] - model[k];
    l1 += std::abs(eta[k]);
  }
  out.delta = c.delta_mode == DeltaMode::EtaL1 ? l1 : full_convolution_l1(eta, g);
  out.snr_db = rf.snr_db;
  if (c.music_domain == MusicDomain::Rf) {
    out.music_y = rf.y;
    out.music_kernel = h;
  } else {
    out.music_y = out.y;
    out.music_kernel = g;
  }
  return out;
}

void evaluate(TrialRecord& rec, const Shared& sh, const std::vector<double>* x_hat) {
  const ExperimentConfig& c = *sh.config;
  rec.loc_errors = localization_error(rec.truth, rec.estimate);
  rec.nearest = nearest_estimates(rec.truth, rec.estimate);
  rec.bounds = compute_bounds(sh.report, rec.sigma, c.N, rec.delta, rec.truth, sh.report.g0);
  const Partition part = partition_near_far(rec.truth, sh.report.epsilon, rec.sigma, c.N);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (!rec.has_amplitudes) {
    rec.l1_err = nan;
    rec.far_amp = nan;
    rec.lemma21_lhs = nan;
  } else {
    if (x_hat) {
      const std::vector<double> x = rec.truth.dense();
      rec.l1_err = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) rec.l1_err += std::abs((*x_hat)[k] - x[k]);
    } else {
      rec.l1_err = l1_distance(rec.truth, rec.estimate);
    }
    rec.far_amp = far_false_amplitude(rec.estimate, part);
    rec.lemma21_lhs = check_lemma21(rec.truth, rec.estimate, part, rec.bounds.weighted_d2_bound).lhs;
  }

  rec.checked = rec.method == Method::L1 && c.delta_mode == DeltaMode::EtaL1 &&
                check_separation(rec.truth, sh.nu, rec.sigma, c.N);
  if (!rec.checked) return;
  auto exceeds = [](double value, double bound) { return value > bound + 1e-9 * (1.0 + bound); };
  if (exceeds(rec.l1_err, rec.bounds.l1_bound)) rec.violations.push_back("l1");
  if (exceeds(rec.far_amp, rec.bounds.far_amp_bound)) rec.violations.push_back("far");
  for (std::size_t m = 0; m < rec.truth.size(); ++m) {
    const auto& b = rec.bounds.loc_bound_per_spike[m];
    if (b && exceeds(rec.loc_errors[m], *b)) {
      rec.violations.push_back("loc");
      break;
    }
  }
  if (exceeds(rec.lemma21_lhs, rec.bounds.weighted_d2_bound)) rec.violations.push_back("lemma21");
}

std::vector<TrialRecord> run_trial(const Shared& sh, const Cell& cell, std::size_t cell_index, int trial) {
  const ExperimentConfig& c = *sh.config;
  const SampledKernel& g = sh.sampled.at(cell.sigma);
  const std::uint64_t seed = trial_seed(c.seed, cell_index, trial);
  std::mt19937_64 rng(seed);
  const long spacing = spacing_samples(cell.separation, cell.sigma, c.N);
  const SpikeTrain spikes = draw_spikes(c, spacing, g.radius, rng);
  const std::uint64_t noise_seed = rng();
  const Synthesized data = synthesize_trial(sh, g, spikes, cell.level, noise_seed);

  std::vector<TrialRecord> out;
  for (Method method : c.methods) {
    TrialRecord rec;
    rec.cell = cell_index;
    rec.noise_level = cell.level;
    rec.snr_db = data.snr_db;
    rec.separation = cell.separation;
    rec.separation_samples = spacing;
    rec.sigma = cell.sigma;
    rec.method = method;
    rec.trial = trial;
    rec.seed = seed;
    rec.truth = data.truth;
    rec.delta = data.delta;
    const int order = static_cast<int>(data.truth.size());
    switch (method) {
      case Method::L1: {
        RecoveryProblem p;
        p.y = data.y;
        p.kernel = g;
        p.delta = data.delta;
        p.solver_tol = c.solver_tol;
        const RecoverySolution sol = solve_l1_deconvolution(p);
        rec.estimate = sol.estimate();
        if (sol.status != SolverStatus::Optimal) rec.status = to_string(sol.status);
        evaluate(rec, sh, &sol.x_hat);
        break;
      }
      case Method::Omp: {
        const OmpResult r = omp_deconvolution(data.y, g, {std::max(order, 1), 0.0});
        rec.estimate = r.estimate;
        if (r.rank_deficient) rec.status = "rank_deficient";
        evaluate(rec, sh, nullptr);
        break;
      }
      case Method::Music: {
        MusicConfig mc;
        mc.model_order = order;
        mc.deconv_regularization = c.music_regularization;
        mc.hankel_rows = c.music_hankel_rows;
        const MusicResult r = music_deconvolution(data.music_y, data.music_kernel, mc);
        std::vector<Spike> located;
        for (long k : r.locations) located.push_back({k, 1.0});
        rec.estimate = SpikeTrain(std::move(located), c.grid_len);
        rec.has_amplitudes = false;
        for (const auto& w : r.warnings) rec.status += (rec.status.empty() ? "" : "; ") + w;
        evaluate(rec, sh, nullptr);
        break;
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : sep) + p;
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw InvalidArgument("invalid experiment config: " + msg);
  };
  require(!sigmas.empty(), "sigmas must be nonempty");
  for (double s : sigmas) require(s > 0.0, "sigmas must be positive");
  require(N >= 1, "N must be >= 1");
  require(grid_len >= 1, "grid_len must be positive");
  require(spike_count >= 1, "spike_count must be >= 1");
  require(!separations.empty(), "separations must be nonempty");
  for (double s : separations) require(s > 0.0, "separations must be positive");
  require(amp_min > 0.0 && amp_max >= amp_min, "amplitude range must satisfy 0 < min <= max");
  require(!noise_levels().empty(), noise == NoiseModel::Snr ? "snr_db must be nonempty" : "deltas must be nonempty");
  for (double v : snr_db) require(std::isfinite(v), "snr_db values must be finite");
  for (double d : deltas) require(d >= 0.0 && std::isfinite(d), "deltas must be finite and >= 0");
  require(trials >= 1, "trials must be >= 1");
  require(!methods.empty(), "methods must be nonempty");
  require(trunc_tol > 0.0, "trunc_tol must be positive");
  require(solver_tol > 0.0, "solver_tol must be positive");
  require(nu >= 0.0, "nu must be >= 0");
  require(threads >= 0, "threads must be >= 0");
  if (demodulation) {
    require(demodulation->sample_hz > 0.0, "demodulation sample_hz must be positive");
    require(demodulation->carrier_hz > 0.0 && demodulation->carrier_hz < demodulation->sample_hz / 2.0,
            "demodulation carrier_hz must lie in (0, sample_hz / 2)");
  }
}

ExperimentConfig config_from_json(const json& j) {
  static const std::set<std::string> known = {
      "kernel",        "sigmas",      "N",          "grid_len",        "spike_count",          "separations",
      "placement",     "amplitude_range", "noise",  "snr_db",          "deltas",               "trials",
      "seed",          "methods",     "delta_mode", "trunc_tol",       "solver_tol",           "nu",
      "demodulation",  "music_domain", "music_regularization", "music_hankel_rows", "threads", "output_dir",
      "plots"};
  if (!j.is_object()) throw InvalidArgument("experiment config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw InvalidArgument("unknown experiment config key '" + key + "'");
  }
  ExperimentConfig c;
  try {
    c.kernel = get_or<std::string>(j, "kernel", c.kernel);
    c.sigmas = get_or<std::vector<double>>(j, "sigmas", c.sigmas);
    c.N = get_or<int>(j, "N", c.N);
    c.grid_len = get_or<std::size_t>(j, "grid_len", c.grid_len);
    c.spike_count = get_or<int>(j, "spike_count", c.spike_count);
    c.separations = get_or<std::vector<double>>(j, "separations", c.separations);
    const std::string placement = get_or<std::string>(j, "placement", to_string(c.placement));
    if (placement == "even") {
      c.placement = Placement::Even;
    } else if (placement == "min_gap") {
      c.placement = Placement::MinGap;
    } else {
      throw InvalidArgument("unknown placement '" + placement + "' (expected even or min_gap)");
    }
    if (j.contains("amplitude_range")) {
      const auto range = j.at("amplitude_range").get<std::vector<double>>();
      if (range.size() != 2) throw InvalidArgument("amplitude_range must have two entries");
      c.amp_min = range[0];
      c.amp_max = range[1];
    }
    const std::string noise = get_or<std::string>(j, "noise", to_string(c.noise));
    if (noise == "snr") {
      c.noise = NoiseModel::Snr;
    } else if (noise == "l1_budget") {
      c.noise = NoiseModel::L1Budget;
    } else {
      throw InvalidArgument("unknown noise model '" + noise + "' (expected snr or l1_budget)");
    }
    c.snr_db = get_or<std::vector<double>>(j, "snr_db", c.snr_db);
    c.deltas = get_or<std::vector<double>>(j, "deltas", c.deltas);
    c.trials = get_or<int>(j, "trials", c.trials);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(method_from(m.get<std::string>()));
    }
    c.delta_mode = delta_mode_from(get_or<std::string>(j, "delta_mode", to_string(c.delta_mode)));
    c.trunc_tol = get_or<double>(j, "trunc_tol", c.trunc_tol);
    c.solver_tol = get_or<double>(j, "solver_tol", c.solver_tol);
    c.nu = get_or<double>(j, "nu", c.nu);
    if (j.contains("demodulation") && !j.at("demodulation").is_null()) {
      const json& d = j.at("demodulation");
      DemodulationConfig dc;
      dc.carrier_hz = d.at("carrier_hz").get<double>();
      dc.sample_hz = d.at("sample_hz").get<double>();
      dc.fir.cutoff_hz = d.at("cutoff_hz").get<double>();
      dc.fir.transition_hz = d.at("transition_hz").get<double>();
      dc.fir.stopband_db = get_or<double>(d, "stopband_db", dc.fir.stopband_db);
      c.demodulation = dc;
    }
    const std::string domain = get_or<std::string>(j, "music_domain", "demodulated");
    if (domain == "demodulated") {
      c.music_domain = MusicDomain::Demodulated;
    } else if (domain == "rf") {
      c.music_domain = MusicDomain::Rf;
    } else {
      throw InvalidArgument("unknown music_domain '" + domain + "' (expected demodulated or rf)");
    }
    c.music_regularization = get_or<double>(j, "music_regularization", c.music_regularization);
    c.music_hankel_rows = get_or<int>(j, "music_hankel_rows", c.music_hankel_rows);
    c.threads = get_or<int>(j, "threads", c.threads);
    c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir);
    c.plots = get_or<bool>(j, "plots", c.plots);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  json j = {{"kernel", c.kernel},
            {"sigmas", c.sigmas},
            {"N", c.N},
            {"grid_len", c.grid_len},
            {"spike_count", c.spike_count},
            {"separations", c.separations},
            {"placement", to_string(c.placement)},
            {"amplitude_range", {c.amp_min, c.amp_max}},
            {"noise", to_string(c.noise)},
            {"snr_db", c.snr_db},
            {"deltas", c.deltas},
            {"trials", c.trials},
            {"seed", c.seed},
            {"methods", methods},
            {"delta_mode", to_string(c.delta_mode)},
            {"trunc_tol", c.trunc_tol},
            {"solver_tol", c.solver_tol},
            {"nu", c.nu},
            {"music_domain", c.music_domain == MusicDomain::Rf ? "rf" : "demodulated"},
            {"music_regularization", c.music_regularization},
            {"music_hankel_rows", c.music_hankel_rows},
            {"threads", c.threads},
            {"output_dir", c.output_dir},
            {"plots", c.plots}};
  if (c.demodulation) {
    j["demodulation"] = {{"carrier_hz", c.demodulation->carrier_hz},
                         {"sample_hz", c.demodulation->sample_hz},
                         {"cutoff_hz", c.demodulation->fir.cutoff_hz},
                         {"transition_hz", c.demodulation->fir.transition_hz},
                         {"stopband_db", c.demodulation->fir.stopband_db}};
  }
  return j;
}

int resolve_thread_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* cap = std::getenv("PULSEDECONV_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end != cap && *end == '\0' && v >= 1) n = std::min(n, static_cast<int>(v));
  }
  return n;
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  Shared sh{&config, Kernel::from_name(config.kernel), {}, 0.0, {}};
  sh.report = verify_admissibility(sh.kernel);
  if (!sh.report.passed) {
    throw InvalidArgument("kernel '" + config.kernel + "' failed the admissibility check: " +
                          join(sh.report.failures, "; "));
  }
  sh.nu = config.nu > 0.0 ? config.nu : sh.kernel.nominal_nu();
  for (double sigma : config.sigmas) {
    sh.sampled.emplace(sigma, sample_kernel(sh.kernel, sigma, config.N, config.trunc_tol, sh.report.C[0]));
  }

  const std::vector<Cell> cells = enumerate_cells(config);
  const std::size_t items = cells.size() * static_cast<std::size_t>(config.trials);
  std::vector<std::vector<TrialRecord>> results(items);
  std::vector<std::exception_ptr> errors(items);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items; i = next++) {
      const std::size_t cell = i / static_cast<std::size_t>(config.trials);
      const int trial = static_cast<int>(i % static_cast<std::size_t>(config.trials));
      try {
        results[i] = run_trial(sh, cells[cell], cell, trial);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::min<int>(resolve_thread_count(config.threads), static_cast<int>(std::max<std::size_t>(items, 1)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<TrialRecord> records;
  for (auto& r : results) {
    for (auto& rec : r) records.push_back(std::move(rec));
  }
  return records;
}

std::vector<SummaryRow> aggregate(const std::vector<TrialRecord>& records, NoiseModel noise) {
  std::vector<SummaryRow> rows;
  std::map<std::pair<std::size_t, Method>, std::size_t> index;
  std::vector<std::vector<double>> errors, snrs, fars, l1s, deltas;
  for (const TrialRecord& r : records) {
    const auto key = std::make_pair(r.cell, r.method);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, rows.size()).first;
      SummaryRow row;
      row.cell = r.cell;
      row.noise = noise;
      row.noise_level = r.noise_level;
      row.separation = r.separation;
      row.separation_samples = r.separation_samples;
      row.sigma = r.sigma;
      row.method = r.method;
      rows.push_back(row);
      errors.emplace_back();
      snrs.emplace_back();
      fars.emplace_back();
      l1s.emplace_back();
      deltas.emplace_back();
    }
    const std::size_t i = it->second;
    SummaryRow& row = rows[i];
    ++row.trials;
    for (double e : r.loc_errors) {
      ++row.spikes;
      if (std::isfinite(e)) {
        ++row.detections;
        errors[i].push_back(e);
      } else {
        ++row.misses;
      }
    }
    snrs[i].push_back(r.snr_db);
    deltas[i].push_back(r.delta);
    if (r.has_amplitudes) {
      fars[i].push_back(r.far_amp);
      l1s[i].push_back(r.l1_err);
    }
    if (!r.violations.empty()) ++row.violations;
    if (!r.checked) ++row.unchecked;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    SummaryRow& row = rows[i];
    row.mean_loc_error = mean_of(errors[i]);
    double var = 0.0;
    for (double e : errors[i]) var += (e - row.mean_loc_error) * (e - row.mean_loc_error);
    row.std_loc_error = errors[i].empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : std::sqrt(var / static_cast<double>(errors[i].size()));
    row.max_loc_error = errors[i].empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : *std::max_element(errors[i].begin(), errors[i].end());
    row.mean_snr_db = mean_of(snrs[i]);
    row.mean_far_amp = mean_of(fars[i]);
    row.mean_l1_err = mean_of(l1s[i]);
    row.mean_delta = mean_of(deltas[i]);
  }
  return rows;
}

OutputPaths default_output_paths(const std::filesystem::path& dir, bool plots) {
  return {dir / "trials.csv", dir / "summary.csv", plots ? dir / "plots" : std::filesystem::path{}};
}

void emit_outputs(const std::vector<TrialRecord>& records, const std::vector<SummaryRow>& summary,
                  const OutputPaths& paths) {
  const auto f = format_number;
  {
    std::ostringstream o;
    o << "snr_db,separation,sigma,method,trial,spike_index,true_loc,true_amp,nearest_est_loc,loc_error,delta,"
         "l1_err,l1_bound,loc_bound,far_amp,far_bound,lemma21_lhs,lemma21_bound,violation_flags\n";
    for (const TrialRecord& r : records) {
      const std::string flags = r.checked ? join(r.violations, "|") : "unchecked";
      for (std::size_t m = 0; m < r.truth.size(); ++m) {
        const auto& lb = r.bounds.loc_bound_per_spike[m];
        o << f(r.snr_db) << ',' << f(r.separation) << ',' << f(r.sigma) << ',' << to_string(r.method) << ','
          << r.trial << ',' << m << ',' << r.truth[m].location << ',' << f(r.truth[m].amplitude) << ','
          << (r.nearest[m] ? std::to_string(*r.nearest[m]) : std::string()) << ',' << f(r.loc_errors[m]) << ','
          << f(r.delta) << ',' << f(r.l1_err) << ',' << f(r.bounds.l1_bound) << ','
          << (lb ? f(*lb) : std::string("nan")) << ',' << f(r.far_amp) << ',' << f(r.bounds.far_amp_bound) << ','
          << f(r.lemma21_lhs) << ',' << f(r.bounds.weighted_d2_bound) << ',' << flags << '\n';
      }
    }
    write_text(paths.trials_csv, o.str());
  }
  {
    std::ostringstream o;
    o << "noise_model,noise_level,mean_snr_db,separation,separation_samples,sigma,method,trials,spikes,detections,"
         "misses,mean_loc_error,std_loc_error,max_loc_error,mean_far_amp,mean_l1_err,mean_delta,violations,"
         "unchecked\n";
    for (const SummaryRow& s : summary) {
      o << to_string(s.noise) << ',' << f(s.noise_level) << ',' << f(s.mean_snr_db) << ',' << f(s.separation) << ','
        << s.separation_samples << ',' << f(s.sigma) << ',' << to_string(s.method) << ',' << s.trials << ','
        << s.spikes << ',' << s.detections << ',' << s.misses << ',' << f(s.mean_loc_error) << ','
        << f(s.std_loc_error) << ',' << f(s.max_loc_error) << ',' << f(s.mean_far_amp) << ',' << f(s.mean_l1_err)
        << ',' << f(s.mean_delta) << ',' << s.violations << ',' << s.unchecked << '\n';
    }
    write_text(paths.summary_csv, o.str());
  }
  if (paths.plot_dir.empty() || summary.empty()) return;

  const bool snr_axis = summary.front().noise == NoiseModel::Snr;
  const std::string x_label = snr_axis ? "SNR (dB)" : "l1 noise budget";
  auto series_of = [&](double SummaryRow::*field) {
    std::map<std::tuple<double, double, int>, detail::PlotSeries> by_key;
    for (const SummaryRow& s : summary) {
      auto& series = by_key[{s.sigma, s.separation, static_cast<int>(s.method)}];
      if (series.label.empty()) {
        series.label = to_string(s.method) + " sep " + f(s.separation) + " sigma " + f(s.sigma);
      }
      series.x.push_back(s.noise_level);
      series.y.push_back(s.*field);
    }
    std::vector<detail::PlotSeries> out;
    for (auto& [key, s] : by_key) out.push_back(std::move(s));
    return out;
  };
  write_text(paths.plot_dir / "loc_error_mean.svg",
             detail::line_plot_svg("Mean localization error", x_label, "samples",
                                   series_of(&SummaryRow::mean_loc_error)));
  write_text(paths.plot_dir / "loc_error_std.svg",
             detail::line_plot_svg("Localization error standard deviation", x_label, "samples",
                                   series_of(&SummaryRow::std_loc_error)));
  write_text(paths.plot_dir / "far_amplitude.svg",
             detail::line_plot_svg("Mean false-detection amplitude far from the support", x_label, "amplitude",
                                   series_of(&SummaryRow::mean_far_amp)));
}

}  // namespace pulsedeconv
