#include "pulsedeconv/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pulsedeconv/error.hpp"

namespace pulsedeconv {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

struct Row {
  long index;
  double value;
};

std::vector<Row> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    double idx = 0.0;
    double val = 0.0;
    const bool ok = comma != std::string::npos && parse_double(line.substr(0, comma), idx) &&
                    parse_double(line.substr(comma + 1), val);
    if (!ok) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 'index,value'");
    }
    if (idx != std::floor(idx)) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": index must be an integer");
    }
    rows.push_back({static_cast<long>(idx), val});
  }
  return rows;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<double> read_series_csv(const std::filesystem::path& path) {
  const std::vector<Row> rows = read_rows(path);
  std::vector<double> values(rows.size(), 0.0);
  std::vector<char> seen(rows.size(), 0);
  for (const Row& r : rows) {
    if (r.index < 0 || static_cast<std::size_t>(r.index) >= rows.size() || seen[static_cast<std::size_t>(r.index)]) {
      throw IoError(path.string() + ": indices must cover 0.." + std::to_string(rows.size()) + "-1 exactly once");
    }
    seen[static_cast<std::size_t>(r.index)] = 1;
    values[static_cast<std::size_t>(r.index)] = r.value;
  }
  return values;
}

void write_series_csv(const std::filesystem::path& path, std::span<const double> values, const std::string& value_name) {
  std::ofstream out = open_out(path);
  out << "index," << value_name << "\n";
  for (std::size_t k = 0; k < values.size(); ++k) out << k << "," << format_number(values[k]) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

void write_spikes_csv(const std::filesystem::path& path, const SpikeTrain& spikes) {
  std::ofstream out = open_out(path);
  out << "index,value\n";
  for (const Spike& s : spikes.spikes()) out << s.location << "," << format_number(s.amplitude) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

SpikeTrain read_spikes_csv(const std::filesystem::path& path, std::size_t grid_len) {
  std::vector<Spike> spikes;
  for (const Row& r : read_rows(path)) spikes.push_back({r.index, r.value});
  std::sort(spikes.begin(), spikes.end(), [](const Spike& a, const Spike& b) { return a.location < b.location; });
  return SpikeTrain(std::move(spikes), grid_len);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json to_json(const AdmissibilityReport& report) {
  return {{"C0", report.C[0]},           {"C1", report.C[1]},     {"C2", report.C[2]},
          {"C3", report.C[3]},           {"epsilon", report.epsilon}, {"beta", report.beta},
          {"nu", report.nu_empirical},   {"g0", report.g0},       {"passed", report.passed},
          {"failures", report.failures}};
}

nlohmann::json to_json(const SpikeTrain& spikes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Spike& s : spikes.spikes()) arr.push_back({{"location", s.location}, {"amplitude", s.amplitude}});
  return {{"grid_len", spikes.grid_len()}, {"spikes", arr}};
}

nlohmann::json to_json(const Measurements& m) {
  return {{"y", m.y},       {"delta", m.delta},   {"sigma", m.sigma},       {"N", m.N},
          {"seed", m.seed}, {"noise_l1", m.noise_l1}, {"snr_db", format_number(m.snr_db)}};
}

nlohmann::json to_json(const RecoverySolution& sol) {
  return {{"status", to_string(sol.status)},
          {"objective", sol.objective},
          {"dual_objective", sol.dual_objective},
          {"residual_l1", sol.residual_l1},
          {"iterations", sol.iterations},
          {"primal_infeasibility", sol.primal_infeasibility},
          {"dual_infeasibility", sol.dual_infeasibility},
          {"relative_gap", sol.relative_gap},
          {"support_floor", sol.support_floor},
          {"support_size", sol.support.size()}};
}

nlohmann::json to_json(const DualCertificate& cert) {
  return {{"kernel", cert.kernel.name()},    {"sigma", cert.sigma},
          {"nodes", cert.nodes},             {"signs", cert.signs},
          {"coeffs_a", cert.coeffs_a},       {"coeffs_b", cert.coeffs_b},
          {"condition_number", cert.condition_number}, {"system_residual", cert.system_residual}};
}

nlohmann::json to_json(const CertificateReport& r) {
  return {{"max_abs_q", r.max_abs_q},
          {"argmax_t", r.argmax_t},
          {"tail_bound", r.tail_bound},
          {"interpolation_residual", r.interpolation_residual},
          {"stationarity_residual", r.stationarity_residual},
          {"quadratic_violation", r.quadratic_violation},
          {"quadratic_violation_t", r.quadratic_violation_t},
          {"bounded", r.bounded},
          {"interpolates", r.interpolates},
          {"quadratic", r.quadratic},
          {"passed", r.passed}};
}

}  // namespace pulsedeconv
