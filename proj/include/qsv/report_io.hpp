#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "qsv/calibrate_model.hpp"
#include "qsv/sensitivity.hpp"

namespace qsv {

enum class ReportFormat { csv, markdown, json };

/// "csv", "md"/"markdown", "json"/"json-like".
ReportFormat parse_report_format(const std::string& text);

// Structured text (JSON) documents. Each carries a "kind" field so `report`
// can render whichever one it is handed. EER is stored as a fraction at full
// precision and sizes in exact bytes.
std::string sweep_to_json(const SensitivityReport& report);
SensitivityReport sweep_from_json(const std::string& text);

std::string config_report_to_json(const ConfigReport& report);
ConfigReport config_report_from_json(const std::string& text);

std::string quant_config_to_json(const QuantConfig& config, const std::string& policy = "");
QuantConfig quant_config_from_json(const std::string& text);

std::string calibration_to_json(const CalibrationResult& calib, const Observer& observer);
CalibrationResult calibration_from_json(const std::string& text);

using AnyReport = std::variant<SensitivityReport, ConfigReport>;
AnyReport report_from_json(const std::string& text);

/// Table rendering: EER in percent with 3 decimals, size in MB (bytes / 1e6,
/// 3 decimals) plus the exact byte count.
std::string render(const SensitivityReport& report, ReportFormat format);
std::string render(const ConfigReport& report, ReportFormat format);
std::string render(const AnyReport& report, ReportFormat format);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace qsv
