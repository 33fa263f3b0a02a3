#include <filesystem>

#include "doctest.h"
#include "qsv/error.hpp"
#include "qsv/model_io.hpp"
#include "qsv/sensitivity.hpp"

using namespace qsv;

namespace {

std::map<LayerName, QuantParams> params_for(const QuantConfig& q) {
  std::map<LayerName, QuantParams> p;
  for (auto l : q.layers) p[l] = compute_params(-4.0, 4.0, Scheme::affine);
  return p;
}

}  // namespace

TEST_CASE("float model roundtrip") {
  ModelConfig cfg;
  cfg.dilations = {1, 5, 2};
  cfg.seed = 77;
  const auto w = init_model(cfg);
  const auto bytes = serialize_model(cfg, w);
  const auto file = parse_model(bytes);
  CHECK(file.config == cfg);
  CHECK(file.version == kModelFormatVersion);
  CHECK(file.to_weights() == w);
  for (const auto& r : file.records) CHECK_FALSE(r.quantized());
  CHECK(serialize_model(file.config, file.to_weights()) == bytes);
  CHECK(bytes.substr(0, 4) == "QSVM");
}

TEST_CASE("quantized records") {
  const ModelConfig cfg;
  const auto w = init_model(cfg);
  const QuantConfig q{{LayerName::se_res2block_2, LayerName::linear}};
  const auto ctx = prepare_quant(w, q, params_for(q));
  const auto file = parse_model(serialize_model(cfg, w, &ctx));
  std::size_t n_quant = 0;
  for (const auto& r : file.records) {
    const bool expect = is_quantizable_weight(r.name) && q.contains(layer_of(r.name));
    CHECK(r.quantized() == expect);
    if (!expect) continue;
    ++n_quant;
    CHECK(std::get<QuantizedTensor>(r.value) == ctx.layers.at(layer_of(r.name)).weights.at(r.name));
  }
  CHECK(n_quant == 5 + 2 + 1);
  const auto back = file.to_weights();
  CHECK(back.get("linear.weight") == dequantize(ctx.layers.at(LayerName::linear).weights.at("linear.weight")));
  CHECK(back.get("linear.bias") == w.get("linear.bias"));
}

TEST_CASE("file size is header plus records") {
  const ModelConfig cfg;
  const auto w = init_model(cfg);
  for (const auto& q : {QuantConfig{}, QuantConfig{{LayerName::conv1d_1}}, QuantConfig::all()}) {
    const auto ctx = prepare_quant(w, q, params_for(q));
    std::size_t expected = model_header_size(cfg);
    for (const auto& n : w.names())
      expected += record_size(n, w.get(n).shape(), is_quantizable_weight(n) && q.contains(layer_of(n)));
    CHECK(serialize_model(cfg, w, &ctx).size() == expected);
    CHECK(model_size(w, cfg, q) == expected);
  }
  CHECK(record_size("t", {1000}, false) == 4 + 1 + 2 + 4 + 4000);
  CHECK(record_size("t", {10, 100}, true) == 4 + 1 + 2 + 8 + 1080);
}

TEST_CASE("parse errors") {
  const ModelConfig cfg;
  const auto bytes = serialize_model(cfg, init_model(cfg));
  CHECK_THROWS_WITH_AS(parse_model("XXXX" + bytes.substr(4), "m.bin"), doctest::Contains("m.bin: bad magic"), Error);
  CHECK_THROWS_WITH_AS(parse_model(bytes.substr(0, bytes.size() - 3)), doctest::Contains("truncated"), Error);
  CHECK_THROWS_WITH_AS(parse_model(bytes + "x"), doctest::Contains("trailing"), Error);
  auto v2 = bytes;
  v2[4] = 9;
  CHECK_THROWS_WITH_AS(parse_model(v2), doctest::Contains("version"), Error);
  CHECK_THROWS_AS(parse_model(""), Error);
  CHECK_THROWS_AS(read_model("/nonexistent/model.qsvm"), Error);
}

TEST_CASE("write and read through a file") {
  const ModelConfig cfg;
  const auto w = init_model(cfg);
  const auto path = std::filesystem::temp_directory_path() / "qsv_test_model.qsvm";
  write_model(path, cfg, w);
  const auto f = read_model(path);
  CHECK(f.to_weights() == w);
  CHECK(std::filesystem::file_size(path) == model_size(w, cfg, {}));
  std::filesystem::remove(path);
}
