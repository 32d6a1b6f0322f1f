#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pulsedeconv/certificate.hpp"
#include "pulsedeconv/kernels.hpp"
#include "pulsedeconv/recovery.hpp"
#include "pulsedeconv/signal.hpp"

namespace pulsedeconv {

/// Reads an "index,value" CSV (header optional). Indices must cover 0..n-1
/// exactly once; values are returned in index order.
std::vector<double> read_series_csv(const std::filesystem::path& path);

void write_series_csv(const std::filesystem::path& path, std::span<const double> values,
                      const std::string& value_name = "value");

/// Spikes as "index,value" rows, one per spike.
void write_spikes_csv(const std::filesystem::path& path, const SpikeTrain& spikes);
SpikeTrain read_spikes_csv(const std::filesystem::path& path, std::size_t grid_len);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Shortest round-trippable decimal form, "inf"/"-inf"/"nan" for non-finite values.
std::string format_number(double v);

nlohmann::json to_json(const AdmissibilityReport& report);
nlohmann::json to_json(const SpikeTrain& spikes);
nlohmann::json to_json(const Measurements& m);
/// Status record: objective, residual, iterations and solver diagnostics (no x_hat).
nlohmann::json to_json(const RecoverySolution& sol);
nlohmann::json to_json(const DualCertificate& cert);
nlohmann::json to_json(const CertificateReport& report);

}  // namespace pulsedeconv
