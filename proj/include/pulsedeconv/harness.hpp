#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pulsedeconv/kernels.hpp"
#include "pulsedeconv/metrics.hpp"
#include "pulsedeconv/recovery.hpp"
#include "pulsedeconv/signal.hpp"

namespace pulsedeconv {

enum class Method { L1, Omp, Music };
enum class NoiseModel { Snr, L1Budget };
enum class Placement {
  Even,     ///< equally spaced at the cell separation, random offset
  MinGap    ///< uniformly random positions with at least the cell separation
};
enum class MusicDomain { Demodulated, Rf };

std::string to_string(Method m);
std::string to_string(NoiseModel m);
std::string to_string(Placement p);

struct DemodulationConfig {
  double carrier_hz = 0.0;
  double sample_hz = 0.0;
  FirSpec fir{};
};

struct ExperimentConfig {
  std::string kernel = "gaussian";
  std::vector<double> sigmas{1.0};
  int N = 4;
  std::size_t grid_len = 2048;
  int spike_count = 10;
  std::vector<double> separations{1.1, 1.5, 2.0};  ///< multiples of sigma * N
  Placement placement = Placement::Even;
  double amp_min = 5.0;
  double amp_max = 10.0;
  NoiseModel noise = NoiseModel::Snr;
  std::vector<double> snr_db{15.0, 20.0, 25.0, 30.0, 35.0};
  std::vector<double> deltas{};  ///< noise levels for NoiseModel::L1Budget
  int trials = 20;
  std::uint64_t seed = 1;
  std::vector<Method> methods{Method::L1};
  DeltaMode delta_mode = DeltaMode::EtaL1;
  double trunc_tol = 1e-2;
  double solver_tol = 1e-10;
  double nu = 0.0;  ///< separation constant for the bound checks; 0 uses the kernel's nominal value
  std::optional<DemodulationConfig> demodulation;
  MusicDomain music_domain = MusicDomain::Demodulated;
  double music_regularization = 1e-3;
  int music_hankel_rows = 0;
  int threads = 0;  ///< 0 uses the hardware concurrency; PULSEDECONV_THREADS caps either
  std::string output_dir = "results";
  bool plots = true;

  /// Throws InvalidArgument on empty lists, non-positive sizes and the like.
  void validate() const;
  const std::vector<double>& noise_levels() const { return noise == NoiseModel::Snr ? snr_db : deltas; }
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);

struct TrialRecord {
  std::size_t cell = 0;       ///< index over (sigma, separation, noise level)
  double noise_level = 0.0;   ///< configured SNR in dB or l1 budget
  double snr_db = 0.0;        ///< realized clean-to-noise power ratio
  double separation = 0.0;    ///< multiples of sigma * N
  long separation_samples = 0;
  double sigma = 0.0;
  Method method = Method::L1;
  int trial = 0;
  std::uint64_t seed = 0;
  SpikeTrain truth;
  SpikeTrain estimate;
  bool has_amplitudes = true;  ///< false for MUSIC, which only locates
  double delta = 0.0;
  std::vector<double> loc_errors;
  std::vector<std::optional<long>> nearest;
  double l1_err = 0.0;
  double far_amp = 0.0;
  double lemma21_lhs = 0.0;
  BoundSet bounds;
  bool checked = false;  ///< theorem preconditions hold and bounds were asserted
  std::vector<std::string> violations;
  std::string status;     ///< solver status or baseline warning, empty when clean
};

/// Runs every (sigma, separation, noise level) cell for config.trials trials
/// and every configured method. Output order is (cell, trial, method) and does
/// not depend on the worker count. Throws InvalidArgument if the kernel fails
/// the admissibility check.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& config);

struct SummaryRow {
  std::size_t cell = 0;
  NoiseModel noise = NoiseModel::Snr;
  double noise_level = 0.0;
  double mean_snr_db = 0.0;
  double separation = 0.0;
  long separation_samples = 0;
  double sigma = 0.0;
  Method method = Method::L1;
  int trials = 0;
  int spikes = 0;
  int detections = 0;
  int misses = 0;
  double mean_loc_error = 0.0;
  double std_loc_error = 0.0;  ///< population standard deviation over detections
  double max_loc_error = 0.0;
  double mean_far_amp = 0.0;
  double mean_l1_err = 0.0;
  double mean_delta = 0.0;
  int violations = 0;
  int unchecked = 0;
};

/// One row per (cell, method), in record order of first appearance.
std::vector<SummaryRow> aggregate(const std::vector<TrialRecord>& records, NoiseModel noise = NoiseModel::Snr);

struct OutputPaths {
  std::filesystem::path trials_csv;
  std::filesystem::path summary_csv;
  std::filesystem::path plot_dir;  ///< empty disables plots
};

OutputPaths default_output_paths(const std::filesystem::path& dir, bool plots = true);

void emit_outputs(const std::vector<TrialRecord>& records, const std::vector<SummaryRow>& summary,
                  const OutputPaths& paths);

/// Worker count: config value (or hardware concurrency) capped by PULSEDECONV_THREADS.
int resolve_thread_count(int requested);

}  // namespace pulsedeconv
