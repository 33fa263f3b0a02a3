#include <filesystem>

#include "doctest.h"
#include "published_sweep.hpp"
#include "qsv/error.hpp"
#include "qsv/report_io.hpp"

using namespace qsv;
using qsv::testing::published_sweep;

namespace {

SensitivityReport sample_sweep() {
  auto r = published_sweep();
  r.rows[3].eer = 1.0 / 3.0;
  r.rows[3].delta_eer = r.rows[3].eer - r.baseline_eer;
  r.metadata = {{"observer", "minmax"}, {"seed", "42"}};
  return r;
}

}  // namespace

TEST_CASE("sweep json roundtrip is exact") {
  const auto r = sample_sweep();
  const auto text = sweep_to_json(r);
  CHECK(sweep_from_json(text) == r);
  CHECK(sweep_to_json(sweep_from_json(text)) == text);
  CHECK(std::get<SensitivityReport>(report_from_json(text)) == r);
}

TEST_CASE("published sweep file") {
  const auto r = sweep_from_json(read_text(std::filesystem::path(QSV_TEST_DATA) / "published_sweep.json"));
  const auto expected = published_sweep();
  CHECK(r.baseline_eer == expected.baseline_eer);
  CHECK(r.baseline_size == expected.baseline_size);
  CHECK(r.rows == expected.rows);
}

TEST_CASE("config report and quant config roundtrip") {
  ConfigReport c{{0.0123, 130062}, QuantConfig{{LayerName::conv1d_1, LayerName::linear}}, {0.0150, 90000}, {{"k", "v"}}};
  const auto text = config_report_to_json(c);
  CHECK(config_report_from_json(text) == c);
  CHECK(std::get<ConfigReport>(report_from_json(text)) == c);

  const auto q = QuantConfig{{LayerName::se_res2block_1, LayerName::conv1d_2}};
  const auto qt = quant_config_to_json(q, "threshold:0.05");
  CHECK(quant_config_from_json(qt) == q);
  CHECK(qt.find("\"policy\": \"threshold:0.05\"") != std::string::npos);
  CHECK_THROWS_WITH_AS(report_from_json(qt), doctest::Contains("not a report"), Error);
}

TEST_CASE("calibration roundtrip") {
  CalibrationResult c;
  CalibStats a("conv1d_1", 16);
  a.observe(Tensor::vector({-1, 0.5f, 2, 2}));
  c.activations[LayerName::conv1d_1] = a;
  CalibStats w("linear.weight");
  w.observe(Tensor::vector({0.25f, -0.75f}));
  c.weights["linear.weight"] = w;
  const auto back = calibration_from_json(calibration_to_json(c, Observer::make_percentile(0.99, 16)));
  const auto& b = back.activations.at(LayerName::conv1d_1);
  CHECK(b.min == a.min);
  CHECK(b.max == a.max);
  CHECK(b.mean == a.mean);
  CHECK(b.count == a.count);
  CHECK(b.std() == doctest::Approx(a.std()).epsilon(1e-12));
  CHECK(b.histogram == a.histogram);
  CHECK(back.weights.at("linear.weight").min == -0.75);
}

TEST_CASE("rendering") {
  const auto r = published_sweep();
  const auto csv = render(r, ReportFormat::csv);
  CHECK(csv.rfind("quantized_layer,eer_percent,model_size_mb,model_size_bytes\n", 0) == 0);
  CHECK(csv.find("No quantization,1.665,63.571,63571000\n") != std::string::npos);
  CHECK(csv.find("3rd SE-Res2Block,1.766,53.381,53381000\n") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);

  const auto md = render(r, ReportFormat::markdown);
  CHECK(md.rfind("| Quantized layer", 0) == 0);
  CHECK(md.find("Attentive stat pooling") != std::string::npos);
  CHECK(md.find("|  1.680 |") == std::string::npos);
  std::size_t lines = 0, width = 0;
  for (std::size_t pos = 0, next; (next = md.find('\n', pos)) != std::string::npos && md[pos] == '|'; pos = next + 1) {
    if (lines++ == 0) width = next - pos;
    CHECK(next - pos == width);
  }
  CHECK(lines == 10);

  CHECK(render(r, ReportFormat::json) == sweep_to_json(r));
  const ConfigReport c{{0.01665, 1000}, QuantConfig::all(), {0.01739, 500}, {}};
  CHECK(render(c, ReportFormat::csv).find("Proposed,1.739,0.001,500") != std::string::npos);
  CHECK(parse_report_format("md") == ReportFormat::markdown);
  CHECK(parse_report_format("csv") == ReportFormat::csv);
  CHECK_THROWS_AS(parse_report_format("xml"), Error);
}

TEST_CASE("malformed documents") {
  CHECK_THROWS_WITH_AS(sweep_from_json("{"), doctest::Contains("malformed JSON"), Error);
  CHECK_THROWS_AS(sweep_from_json(config_report_to_json({})), Error);
  auto text = sweep_to_json(published_sweep());
  CHECK_THROWS_WITH_AS(sweep_from_json(text.replace(text.find("\"linear\""), 8, "\"conv1d_1\"")),
                       doctest::Contains("twice"), Error);
  auto r = published_sweep();
  r.rows.pop_back();
  CHECK_THROWS_WITH_AS(sweep_from_json(sweep_to_json(r)), doctest::Contains("(7)"), Error);
  std::swap(r.rows[0], r.rows[1]);
  r.rows.push_back(published_sweep().rows.back());
  CHECK_THROWS_WITH_AS(sweep_from_json(sweep_to_json(r)), doctest::Contains("order"), Error);
  CHECK_THROWS_WITH_AS(sweep_from_json(R"({"kind":"sensitivity_sweep","rows":[]})"), doctest::Contains("baseline"),
                       Error);
  CHECK_THROWS_AS(read_text("/nonexistent/report.json"), Error);
}
