// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero
// if any fails.
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <unistd.h>

#include "eer_oracle.hpp"
#include "published_sweep.hpp"
#include "qsv/data_synth.hpp"
#include "qsv/kernels.hpp"
#include "qsv/model_io.hpp"
#include "qsv/quantization.hpp"
#include "qsv/report_io.hpp"
#include "qsv/sensitivity.hpp"

using namespace qsv;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

Tensor uniform_tensor(std::mt19937_64& rng, Shape shape, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<float>(u(rng));
  return Tensor(std::move(shape), std::move(v));
}

double rel_error(const Tensor& a, const Tensor& b) {
  double err = 0, mag = 1e-30;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    err = std::max(err, std::fabs(static_cast<double>(a.f32()[i]) - b.f32()[i]));
    mag = std::max(mag, std::fabs(static_cast<double>(b.f32()[i])));
  }
  return err / mag;
}

QuantizedTensor random_activation(std::mt19937_64& rng, Shape shape) {
  std::uniform_real_distribution<double> u(-4, 4);
  double lo = u(rng), hi = u(rng);
  if (lo > hi) std::swap(lo, hi);
  const auto x = uniform_tensor(rng, std::move(shape), lo - 0.5, hi + 0.5);
  return quantize(x, compute_params(std::min(lo, 0.0), std::max(hi, 0.0), Scheme::affine));
}

Outcome roundtrip_bound() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ends(-100, 100);
  std::size_t violations = 0, checked = 0;
  double worst = 0;
  for (int p = 0; p < 50; ++p) {
    double lo = ends(rng), hi = ends(rng);
    if (lo > hi) std::swap(lo, hi);
    const auto params = compute_params(lo, hi, p % 2 ? Scheme::symmetric : Scheme::affine);
    const double c = params.scale();
    const auto x = uniform_tensor(rng, {100000}, lo, hi);
    const auto back = dequantize(quantize(x, params));
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const double xi = x.f32()[i];
      if (xi < lo || xi > hi) continue;
      const double err = std::fabs(xi - back.f32()[i]);
      worst = std::max(worst, err / c);
      ++checked;
      if (err > c / 2 + 1e-6 * std::fabs(xi)) ++violations;
    }
  }
  const double secs = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu values, %zu violations, worst |err|/c = %.6f, %.2f s", checked, violations,
                worst, secs);
  return {violations == 0 && secs < 5.0, buf};
}

Outcome idempotence() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> ends(-10, 10);
  std::size_t mismatches = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t rows = 1 + rng() % 4, cols = 1 + rng() % 16;
    double lo = ends(rng), hi = ends(rng);
    if (lo > hi) std::swap(lo, hi);
    QuantParams params;
    if (t % 3 == 0) {
      std::vector<float> scales;
      std::vector<std::int32_t> zps;
      for (std::size_t r = 0; r < rows; ++r) {
        const auto p = compute_params(lo * (r + 1), hi * (r + 1), Scheme::affine);
        scales.push_back(p.scale());
        zps.push_back(p.zero_point());
      }
      params = QuantParams::per_channel(scales, zps);
    } else {
      params = compute_params(lo, hi, t % 3 == 1 ? Scheme::affine : Scheme::symmetric);
    }
    // Values reach past the range so clamping is exercised too.
    const auto x = uniform_tensor(rng, {rows, cols}, 2 * lo - 1, 2 * hi + 1);
    const auto q = quantize(x, params);
    if (!(quantize(dequantize(q), params) == q)) ++mismatches;
  }
  return {mismatches == 0, "10000 tensors, " + std::to_string(mismatches) + " mismatches"};
}

Outcome integer_kernels() {
  std::mt19937_64 rng(303);
  double worst = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t cin = 1 + rng() % 12, cout = 1 + rng() % 12;
    const auto b = uniform_tensor(rng, {cout}, -0.5, 0.5);
    if (t % 2 == 0) {
      const auto x = random_activation(rng, {cin * 4});
      const auto w = quantize_weight(uniform_tensor(rng, {cout, cin * 4}, -1, 1));
      worst = std::max(worst, rel_error(qlinear(x, w, b), linear(dequantize(x), dequantize(w), b)));
    } else {
      const std::size_t k = 1 + 2 * (rng() % 3), len = 8 + rng() % 40;
      const int dil = 1 + static_cast<int>(rng() % 3);
      const auto pad = rng() % 4 == 0 ? Padding::valid : Padding::same;
      const auto x = random_activation(rng, {cin, len});
      const auto w = quantize_weight(uniform_tensor(rng, {cout, cin, k}, -1, 1));
      worst = std::max(worst, rel_error(qconv1d(x, w, b, dil, pad), conv1d(dequantize(x), dequantize(w), b, dil, pad)));
    }
  }
  std::size_t inexact = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t cin = 1 + rng() % 6, cout = 1 + rng() % 6, len = 6 + rng() % 10;
    auto ints = [&](Shape s) {
      std::vector<float> v(shape_numel(s));
      for (auto& x : v) x = static_cast<float>(static_cast<int>(rng() % 31) - 15);
      return Tensor(std::move(s), std::move(v));
    };
    const auto xf = ints({cin, len}), wf = ints({cout, cin, 3}), bf = ints({cout});
    const auto x = quantize(xf, QuantParams::per_tensor(1, 0));
    const auto w = quantize(wf, QuantParams::per_channel(std::vector<float>(cout, 1), std::vector<std::int32_t>(cout, 0)));
    if (!(qconv1d(x, w, bf, 2, Padding::same) == conv1d(xf, wf, bf, 2, Padding::same))) ++inexact;
    const auto xv = ints({cin}), mv = ints({cout, cin});
    const auto wq = quantize(mv, QuantParams::per_channel(std::vector<float>(cout, 1), std::vector<std::int32_t>(cout, 0)));
    if (!(qlinear(quantize(xv, QuantParams::per_tensor(1, 0)), wq, bf) == linear(xv, mv, bf))) ++inexact;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "200 layers, worst relative error %.3g; %zu inexact integer cases of 100", worst,
                inexact);
  return {worst <= 1e-5 && inexact == 0, buf};
}

Outcome eer_oracle() {
  std::mt19937_64 rng(404);
  std::size_t mismatches = 0, not_invariant = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng() % 63;
    const int levels = 2 + static_cast<int>(rng() % 40);
    std::vector<ScoredTrial> v;
    for (std::size_t i = 0; i < n; ++i)
      v.push_back({static_cast<double>(rng() % levels) / levels * 2 - 1, (rng() & 1) != 0});
    v[0].target = true;
    v[1].target = false;
    const auto r = compute_eer(v);
    const auto o = testing::brute_force_eer(v);
    if (r.eer != o.eer || r.threshold != o.threshold) ++mismatches;
    auto mono = v;
    for (auto& s : mono) s.score = std::atan(5 * s.score) * 3 + 1;
    if (compute_eer(mono).eer != r.eer) ++not_invariant;
  }
  return {mismatches == 0 && not_invariant == 0, "500 sets, " + std::to_string(mismatches) + " oracle mismatches, " +
                                                     std::to_string(not_invariant) + " transform mismatches"};
}

std::string layer_set(const std::set<LayerName>& s) {
  std::string out = "{";
  for (auto l : s) out += (out.size() > 1 ? ", " : "") + std::string(layer_id(l));
  return out + "}";
}

Outcome published_selection() {
  const auto report = testing::published_sweep();
  const std::set<LayerName> expected{LayerName::se_res2block_2, LayerName::se_res2block_3};
  bool ok = true;
  std::string detail;
  for (const auto& p :
       {SelectionPolicy::threshold(0.05), SelectionPolicy::top_k_exclude(2), SelectionPolicy::budget(0.06)}) {
    const auto q = select(report, p);
    std::set<LayerName> excluded;
    for (auto l : kAllLayers)
      if (!q.contains(l)) excluded.insert(l);
    ok = ok && excluded == expected;
    detail += (detail.empty() ? "" : "; ") + p.str() + " excludes " + layer_set(excluded);
  }
  return {ok, detail};
}

Outcome size_accounting() {
  const ModelConfig cfg;
  const auto w = init_model(cfg);
  const auto base = static_cast<std::int64_t>(model_size(w, cfg, {}));
  auto saved = [&](unsigned mask) {
    QuantConfig q;
    for (unsigned i = 0; i < 7; ++i)
      if (mask >> i & 1) q.layers.insert(kAllLayers[i]);
    return base - static_cast<std::int64_t>(model_size(w, cfg, q));
  };
  std::size_t pairs = 0, broken = 0;
  for (unsigned a = 0; a < 128; ++a)
    for (unsigned b = 0; b < 128; ++b) {
      if (a & b) continue;
      ++pairs;
      if (saved(a | b) != saved(a) + saved(b)) ++broken;
    }
  const double ratio = static_cast<double>(model_size(w, cfg, QuantConfig::all())) / static_cast<double>(base);
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu disjoint pairs, %zu non-additive; all-int8 ratio %llu/%lld = %.4f (want 0.25..0.31)",
                pairs, broken, static_cast<unsigned long long>(model_size(w, cfg, QuantConfig::all())),
                static_cast<long long>(base), ratio);
  return {broken == 0 && ratio > 0.25 && ratio < 0.31, buf};
}

struct DeskRun {
  std::string json;
  double seconds;
  double baseline_eer;
};

// Default corpus and model, written to disk and read back as the CLI does.
DeskRun desk_run(const fs::path& dir, int jobs) {
  const auto t0 = Clock::now();
  const SpeakerDatasetSpec spec;
  fs::remove_all(dir);
  save_features(generate(spec), dir / "eval");
  save_features(generate(calibration_spec(spec), Split::calibration), dir / "calib");
  write_trials(dir / "trials.txt", build_trials(generate(spec), 500, 500, spec.seed));
  const ModelConfig cfg;
  write_model(dir / "model.qsvm", cfg, init_model(cfg));

  const auto file = read_model(dir / "model.qsvm");
  const auto weights = file.to_weights();
  const auto eval = load_features(dir / "eval");
  const auto calib = load_features(dir / "calib", Split::calibration);
  const auto trials = read_trials(dir / "trials.txt");
  const Experiment exp{weights, file.config, calib, eval, trials, Observer::minmax(), 0, jobs};
  const auto report = sweep(exp, {{"dataset_seed", std::to_string(spec.seed)}, {"model_seed", "1"}});
  return {sweep_to_json(report), seconds_since(t0), report.baseline_eer};
}

}  // namespace

int main() {
  omp_set_dynamic(0);
  const auto scratch = fs::temp_directory_path() / ("qsv_acceptance_" + std::to_string(::getpid()));

  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "quantization roundtrip bound", roundtrip_bound);
  report(2, "quantize idempotence", idempotence);
  report(3, "integer kernel equivalence", integer_kernels);
  report(4, "EER oracle and monotone invariance", eer_oracle);
  report(5, "published sweep selection", published_selection);
  report(6, "size accounting", size_accounting);

  DeskRun first{};
  report(7, "default end-to-end run", [&]() -> Outcome {
    first = desk_run(scratch / "a", 1);
    const auto second = desk_run(scratch / "b", 1);
    char buf[200];
    std::snprintf(buf, sizeof buf, "sweep %.2f s single-threaded, float EER %.3f%%, reruns %s", first.seconds,
                  100 * first.baseline_eer, first.json == second.json ? "bit-identical" : "differ");
    return {first.seconds < 60.0 && first.baseline_eer <= 0.05 && first.json == second.json, buf};
  });
  report(8, "sweep purity across job counts", [&]() -> Outcome {
    const auto four = desk_run(scratch / "c", 4);
    if (first.json.empty()) first = desk_run(scratch / "a", 1);
    return {four.json == first.json, four.json == first.json ? "--jobs 1 and --jobs 4 reports bit-identical"
                                                             : "--jobs 1 and --jobs 4 reports differ"};
  });

  fs::remove_all(scratch);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
