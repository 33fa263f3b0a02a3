#include "qsv/report_io.hpp"

#include <cstdio>
#include <sstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "qsv/error.hpp"

namespace qsv {

using nlohmann::ordered_json;

ReportFormat parse_report_format(const std::string& text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "md" || text == "markdown") return ReportFormat::markdown;
  if (text == "json" || text == "json-like") return ReportFormat::json;
  throw Error("unknown report format '" + text + "' (expected csv, md or json)");
}

namespace {

ordered_json parse_doc(const std::string& text, const char* kind) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw Error(std::string("malformed JSON: ") + e.what());
  }
  if (kind && (!j.contains("kind") || j["kind"] != kind))
    throw Error(std::string("expected a '") + kind + "' document");
  return j;
}

template <typename T>
T field(const ordered_json& j, const char* key) {
  if (!j.contains(key)) throw Error(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const std::exception&) {
    throw Error(std::string("field '") + key + "' has the wrong type");
  }
}

ordered_json metadata_json(const Metadata& m) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

Metadata metadata_from(const ordered_json& j) {
  Metadata m;
  if (j.contains("metadata"))
    for (const auto& [k, v] : j["metadata"].items()) m[k] = v.is_string() ? v.get<std::string>() : v.dump();
  return m;
}

ordered_json result_json(const ConfigResult& r) { return {{"eer", r.eer}, {"size_bytes", r.size_bytes}}; }

ConfigResult result_from(const ordered_json& j) {
  return {field<double>(j, "eer"), field<std::uint64_t>(j, "size_bytes")};
}

ordered_json layers_json(const QuantConfig& q) {
  ordered_json a = ordered_json::array();
  for (auto l : q.layers) a.push_back(std::string(layer_id(l)));
  return a;
}

QuantConfig layers_from(const ordered_json& a) {
  QuantConfig q;
  for (const auto& v : a) {
    const auto l = parse_layer(v.get<std::string>());
    if (!q.layers.insert(l).second) throw Error("layer '" + v.get<std::string>() + "' listed twice");
  }
  return q;
}

ordered_json stats_json(const CalibStats& s) {
  ordered_json j = {{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"std", s.std()}, {"count", s.count}};
  if (!s.histogram.empty())
    j["histogram"] = {{"lo", s.hist_lo}, {"hi", s.hist_hi}, {"counts", s.histogram}};
  return j;
}

CalibStats stats_from(const std::string& name, const ordered_json& j) {
  CalibStats s(name);
  s.min = field<double>(j, "min");
  s.max = field<double>(j, "max");
  s.mean = field<double>(j, "mean");
  const double sd = field<double>(j, "std");
  s.count = field<std::uint64_t>(j, "count");
  if (sd < 0.0) throw Error("stats '" + name + "': negative std");
  if (s.count && s.min > s.max) throw Error("stats '" + name + "': min exceeds max");
  s.m2 = sd * sd * static_cast<double>(s.count);
  if (j.contains("histogram")) {
    const auto& h = j["histogram"];
    s.hist_lo = field<double>(h, "lo");
    s.hist_hi = field<double>(h, "hi");
    s.histogram = field<std::vector<std::uint64_t>>(h, "counts");
    s.bins = s.histogram.size();
  }
  return s;
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

struct TableRow {
  std::string label;
  double eer;
  std::uint64_t size;
};

std::string render_rows(const std::vector<TableRow>& rows, ReportFormat format, const std::string& note) {
  std::ostringstream os;
  if (format == ReportFormat::csv) {
    os << "quantized_layer,eer_percent,model_size_mb,model_size_bytes\n";
    for (const auto& r : rows)
      os << r.label << ',' << fixed3(100.0 * r.eer) << ',' << fixed3(r.size / 1e6) << ',' << r.size << '\n';
    return os.str();
  }
  std::size_t w0 = std::string("Quantized layer").size();
  for (const auto& r : rows) w0 = std::max(w0, r.label.size());
  const std::vector<std::string> heads = {"EER (%)", "Model Size (MB)", "Model Size (bytes)"};
  std::vector<std::size_t> w = {heads[0].size(), heads[1].size(), heads[2].size()};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({fixed3(100.0 * r.eer), fixed3(r.size / 1e6), std::to_string(r.size)});
    for (std::size_t i = 0; i < 3; ++i) w[i] = std::max(w[i], cells.back()[i].size());
  }
  auto pad = [](const std::string& s, std::size_t n, bool right) {
    const std::string fill(n - s.size(), ' ');
    return right ? fill + s : s + fill;
  };
  os << "| " << pad("Quantized layer", w0, false);
  for (std::size_t i = 0; i < 3; ++i) os << " | " << pad(heads[i], w[i], false);
  os << " |\n|" << std::string(w0 + 2, '-');
  for (std::size_t i = 0; i < 3; ++i) os << '|' << std::string(w[i] + 1, '-') << ':';
  os << "|\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    os << "| " << pad(rows[r].label, w0, false);
    for (std::size_t i = 0; i < 3; ++i) os << " | " << pad(cells[r][i], w[i], true);
    os << " |\n";
  }
  if (!note.empty()) os << '\n' << note << '\n';
  return os.str();
}

std::string join_layers(const QuantConfig& q) {
  std::string s;
  for (auto l : q.layers) s += (s.empty() ? "" : ", ") + std::string(layer_id(l));
  return s.empty() ? "(none)" : s;
}

}  // namespace

std::string sweep_to_json(const SensitivityReport& report) {
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"layer", std::string(layer_id(r.layer))},
                    {"eer", r.eer},
                    {"size_bytes", r.size_bytes},
                    {"delta_eer", r.delta_eer},
                    {"delta_size", r.delta_size}});
  ordered_json j = {{"kind", "sensitivity_sweep"},
                    {"metadata", metadata_json(report.metadata)},
                    {"baseline", {{"eer", report.baseline_eer}, {"size_bytes", report.baseline_size}}},
                    {"rows", rows}};
  return j.dump(2) + "\n";
}

SensitivityReport sweep_from_json(const std::string& text) {
  const auto j = parse_doc(text, "sensitivity_sweep");
  SensitivityReport report;
  report.metadata = metadata_from(j);
  const auto base = result_from(field<ordered_json>(j, "baseline"));
  report.baseline_eer = base.eer;
  report.baseline_size = base.size_bytes;
  std::set<LayerName> seen;
  for (const auto& r : field<ordered_json>(j, "rows")) {
    SensitivityRow row;
    row.layer = parse_layer(field<std::string>(r, "layer"));
    if (!seen.insert(row.layer).second) throw Error("sweep report lists layer '" + std::string(layer_id(row.layer)) + "' twice");
    row.eer = field<double>(r, "eer");
    row.size_bytes = field<std::uint64_t>(r, "size_bytes");
    row.delta_eer = r.contains("delta_eer") ? field<double>(r, "delta_eer") : row.eer - report.baseline_eer;
    row.delta_size = r.contains("delta_size")
                         ? field<std::int64_t>(r, "delta_size")
                         : static_cast<std::int64_t>(row.size_bytes) - static_cast<std::int64_t>(report.baseline_size);
    report.rows.push_back(row);
  }
  if (report.rows.size() != kAllLayers.size())
    throw Error("sweep report must have one row per layer (7), found " + std::to_string(report.rows.size()));
  for (std::size_t i = 0; i < kAllLayers.size(); ++i)
    if (report.rows[i].layer != kAllLayers[i]) throw Error("sweep report rows are not in network order");
  return report;
}

std::string config_report_to_json(const ConfigReport& report) {
  auto proposed = result_json(report.proposed);
  proposed["quantized"] = layers_json(report.quantized);
  ordered_json j = {{"kind", "config_evaluation"},
                    {"metadata", metadata_json(report.metadata)},
                    {"baseline", result_json(report.baseline)},
                    {"proposed", proposed}};
  return j.dump(2) + "\n";
}

ConfigReport config_report_from_json(const std::string& text) {
  const auto j = parse_doc(text, "config_evaluation");
  ConfigReport report;
  report.metadata = metadata_from(j);
  report.baseline = result_from(field<ordered_json>(j, "baseline"));
  const auto p = field<ordered_json>(j, "proposed");
  report.proposed = result_from(p);
  report.quantized = layers_from(field<ordered_json>(p, "quantized"));
  return report;
}

std::string quant_config_to_json(const QuantConfig& config, const std::string& policy) {
  QuantConfig rest;
  for (auto l : kAllLayers)
    if (!config.contains(l)) rest.layers.insert(l);
  ordered_json j = {{"kind", "quant_config"},
                    {"bits", config.bits},
                    {"weights", "symmetric per-output-channel int8"},
                    {"activations", "affine per-tensor int8"},
                    {"quantized", layers_json(config)},
                    {"float", layers_json(rest)}};
  if (!policy.empty()) j["policy"] = policy;
  return j.dump(2) + "\n";
}

QuantConfig quant_config_from_json(const std::string& text) {
  const auto j = parse_doc(text, "quant_config");
  auto q = layers_from(field<ordered_json>(j, "quantized"));
  q.bits = j.contains("bits") ? field<int>(j, "bits") : 8;
  if (q.bits != 8) throw Error("quant config: only 8-bit quantization is supported");
  return q;
}

std::string calibration_to_json(const CalibrationResult& calib, const Observer& observer) {
  ordered_json acts = ordered_json::object();
  for (const auto& [l, s] : calib.activations) {
    auto sj = stats_json(s);
    const auto range = finalize(s, observer);
    sj["range"] = {range.lo, range.hi};
    acts[std::string(layer_id(l))] = sj;
  }
  ordered_json ws = ordered_json::object();
  for (const auto& [name, s] : calib.weights) ws[name] = stats_json(s);
  ordered_json j = {{"kind", "calibration"}, {"observer", observer.str()}, {"activations", acts}, {"weights", ws}};
  return j.dump(2) + "\n";
}

CalibrationResult calibration_from_json(const std::string& text) {
  const auto j = parse_doc(text, "calibration");
  CalibrationResult calib;
  const auto acts = field<ordered_json>(j, "activations");
  for (const auto& [k, v] : acts.items()) calib.activations.emplace(parse_layer(k), stats_from(k, v));
  const auto ws = field<ordered_json>(j, "weights");
  for (const auto& [k, v] : ws.items()) calib.weights.emplace(k, stats_from(k, v));
  return calib;
}

AnyReport report_from_json(const std::string& text) {
  const auto j = parse_doc(text, nullptr);
  const auto kind = j.contains("kind") && j["kind"].is_string() ? j["kind"].get<std::string>() : "";
  if (kind == "sensitivity_sweep") return sweep_from_json(text);
  if (kind == "config_evaluation") return config_report_from_json(text);
  throw Error("not a report document (kind '" + kind + "')");
}

std::string render(const SensitivityReport& report, ReportFormat format) {
  if (format == ReportFormat::json) return sweep_to_json(report);
  std::vector<TableRow> rows = {{"No quantization", report.baseline_eer, report.baseline_size}};
  for (const auto& r : report.rows) rows.push_back({std::string(layer_label(r.layer)), r.eer, r.size_bytes});
  return render_rows(rows, format, "");
}

std::string render(const ConfigReport& report, ReportFormat format) {
  if (format == ReportFormat::json) return config_report_to_json(report);
  const std::vector<TableRow> rows = {{"No quantization", report.baseline.eer, report.baseline.size_bytes},
                                      {"Proposed", report.proposed.eer, report.proposed.size_bytes}};
  return render_rows(rows, format, "Proposed: int8 layers = " + join_layers(report.quantized));
}

std::string render(const AnyReport& report, ReportFormat format) {
  return std::visit([format](const auto& r) { return render(r, format); }, report);
}

std::string read_text(const std::filesystem::path& path) { return detail::read_file(path.string()); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  detail::write_file(path.string(), text);
}

}  // namespace qsv
