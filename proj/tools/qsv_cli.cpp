// qsv: post-training int8 quantization analysis of a small speaker
// verification model.
//
//   qsv gen-data   --out DIR                 synthetic calib/ + eval/ features and trials.txt
//   qsv init-model --out model.qsvm          deterministic float model
//   qsv calibrate  --model M --features DIR --out stats.json
//   qsv sweep      --model M --features DIR --calib DIR --trials T --out sweep.json
//   qsv select     --report sweep.json --policy threshold:0.05 --out qconfig.json
//   qsv eval       --model M --features DIR --calib DIR --trials T --config qconfig.json --out eval.json
//   qsv report     --in sweep.json --format md

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qsv/calibrate_model.hpp"
#include "qsv/data_synth.hpp"
#include "qsv/error.hpp"
#include "qsv/model_io.hpp"
#include "qsv/report_io.hpp"
#include "qsv/sensitivity.hpp"

namespace fs = std::filesystem;
using namespace qsv;

namespace {

struct Options {
  // gen-data
  std::string out;
  SpeakerDatasetSpec data;
  std::size_t n_target = 500;
  std::size_t n_nontarget = 500;
  // init-model
  ModelConfig model;
  // pipeline
  std::string model_path, features, calib, trials, config_path, report_path, write_model;
  std::string observer = "minmax";
  std::string policy = "threshold:0.05";
  std::string format;
  std::size_t max_utts = 0;
  int jobs = 1;
};

void require_file(const std::string& flag, const std::string& path) {
  if (!fs::is_regular_file(path)) throw Error(flag + ": no such file '" + path + "'");
}

void require_dir(const std::string& flag, const std::string& path) {
  if (!fs::is_directory(path)) throw Error(flag + ": no such directory '" + path + "'");
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    write_text(out, text);
}

std::string describe(const ModelConfig& c) {
  std::ostringstream os;
  os << "F=" << c.feat_dim << " C=" << c.channels << " scale=" << c.res2_scale << " K=" << c.kernel
     << " dilations=" << c.dilations[0] << ',' << c.dilations[1] << ',' << c.dilations[2]
     << " se=" << c.se_bottleneck << " attn=" << c.attn_bottleneck << " E=" << c.emb_dim;
  return os.str();
}

std::string describe(const FeatureSet& fs, std::size_t n_trials) {
  std::ostringstream os;
  os << fs.utterances.size() << " utterances, F=" << fs.feat_dim() << ", " << n_trials << " trials";
  return os.str();
}

struct Loaded {
  ModelFile file;
  ModelWeights weights;
  FeatureSet eval;
  FeatureSet calib;
  std::vector<Trial> trials;
};

Loaded load_pipeline(const Options& o) {
  require_file("--model", o.model_path);
  require_dir("--features", o.features);
  require_dir("--calib", o.calib);
  require_file("--trials", o.trials);
  Loaded l;
  l.file = read_model(o.model_path);
  l.weights = l.file.to_weights();
  l.eval = load_features(o.features, Split::evaluation);
  l.calib = load_features(o.calib, Split::calibration);
  l.trials = read_trials(o.trials);
  if (l.eval.feat_dim() != l.file.config.feat_dim || l.calib.feat_dim() != l.file.config.feat_dim)
    throw Error("feature dimension does not match the model's feat_dim " + std::to_string(l.file.config.feat_dim));
  return l;
}

Metadata pipeline_metadata(const Loaded& l, const Options& o) {
  return {{"model_seed", std::to_string(l.file.config.seed)},
          {"model_config", describe(l.file.config)},
          {"evaluation_data", describe(l.eval, l.trials.size())},
          {"calibration_utterances",
           std::to_string(o.max_utts ? std::min(o.max_utts, l.calib.utterances.size()) : l.calib.utterances.size())},
          {"quantization",
           "int8; weights symmetric per output channel, activations affine per tensor; "
           "a quantized layer quantizes both its weights and its kernel inputs"}};
}

void cmd_gen_data(const Options& o) {
  if (o.out.empty()) throw Error("--out is required");
  const fs::path root = o.out;
  const auto eval = generate(o.data, Split::evaluation);
  const auto calib = generate(calibration_spec(o.data), Split::calibration);
  const auto trials = build_trials(eval, o.n_target, o.n_nontarget, o.data.seed);
  fs::create_directories(root);
  save_features(eval, root / "eval");
  save_features(calib, root / "calib");
  write_trials(root / "trials.txt", trials);
  std::cout << "wrote " << eval.utterances.size() << " evaluation and " << calib.utterances.size()
            << " calibration utterances, " << trials.size() << " trials under " << root.string() << "\n";
}

void cmd_init_model(const Options& o) {
  if (o.out.empty()) throw Error("--out is required");
  const auto weights = init_model(o.model);
  write_model(o.out, o.model, weights);
  std::cout << "wrote " << o.out << " (" << weights.total_params() << " parameters)\n";
}

void cmd_calibrate(const Options& o) {
  require_file("--model", o.model_path);
  require_dir("--features", o.features);
  const auto observer = Observer::parse(o.observer);
  const auto file = read_model(o.model_path);
  const auto weights = file.to_weights();
  const auto data = load_features(o.features, Split::calibration);
  const std::set<LayerName> all(kAllLayers.begin(), kAllLayers.end());
  const auto calib = run_calibration(weights, file.config, data, all, observer, o.max_utts, o.jobs);
  emit(o.out, calibration_to_json(calib, observer));
}

void cmd_sweep(const Options& o) {
  const auto observer = Observer::parse(o.observer);
  const auto l = load_pipeline(o);
  Experiment exp{l.weights, l.file.config, l.calib, l.eval, l.trials, observer, o.max_utts, o.jobs};
  const auto report = sweep(exp, pipeline_metadata(l, o));
  emit(o.out, sweep_to_json(report));
  if (!o.out.empty() && o.out != "-") std::cout << render(report, ReportFormat::markdown);
}

void cmd_select(const Options& o) {
  require_file("--report", o.report_path);
  const auto policy = SelectionPolicy::parse(o.policy);
  const auto report = sweep_from_json(read_text(o.report_path));
  const auto q = select(report, policy);
  const auto json = quant_config_to_json(q, policy.str());
  if (!o.out.empty() && o.out != "-") write_text(o.out, json);
  std::cout << json;
}

void cmd_eval(const Options& o) {
  require_file("--config", o.config_path);
  const auto observer = Observer::parse(o.observer);
  const auto q = quant_config_from_json(read_text(o.config_path));
  const auto l = load_pipeline(o);
  Experiment exp{l.weights, l.file.config, l.calib, l.eval, l.trials, observer, o.max_utts, o.jobs};
  const auto report = compare_config(exp, q, pipeline_metadata(l, o));
  emit(o.out, config_report_to_json(report));
  if (!o.out.empty() && o.out != "-") std::cout << render(report, ReportFormat::markdown);
  if (!o.write_model.empty()) {
    const std::set<LayerName> layers = q.layers;
    std::map<LayerName, QuantParams> act;
    if (!layers.empty())
      act = activation_params(run_calibration(l.weights, l.file.config, l.calib, layers, observer, o.max_utts, o.jobs),
                              observer);
    const auto ctx = prepare_quant(l.weights, q, act);
    write_model(o.write_model, l.file.config, l.weights, &ctx);
  }
}

void cmd_report(const Options& o) {
  require_file("--in", o.report_path);
  const auto format = parse_report_format(o.format.empty() ? "md" : o.format);
  emit(o.out, render(report_from_json(read_text(o.report_path)), format));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-training int8 quantization analysis for a speaker verification model"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "Write synthetic calibration/evaluation features and a trial list");
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--seed", o.data.seed, "Dataset seed (calibration split uses seed+1)");
  gen->add_option("--speakers", o.data.n_speakers, "Speakers per split")->check(CLI::PositiveNumber);
  gen->add_option("--utts", o.data.utts_per_speaker, "Utterances per speaker")->check(CLI::PositiveNumber);
  gen->add_option("--frames", o.data.frames, "Frames per utterance")->check(CLI::PositiveNumber);
  gen->add_option("--feat-dim", o.data.feat_dim, "Feature dimension")->check(CLI::PositiveNumber);
  gen->add_option("--spread", o.data.spread, "Inter-speaker spread");
  gen->add_option("--noise", o.data.noise, "Per-frame noise scale");
  gen->add_option("--smooth", o.data.smoothing, "Moving-average window")->check(CLI::PositiveNumber);
  gen->add_option("--n-target", o.n_target, "Target trials");
  gen->add_option("--n-nontarget", o.n_nontarget, "Nontarget trials");

  auto* init = app.add_subcommand("init-model", "Write a deterministic float model file");
  init->add_option("--out", o.out, "Model file")->required();
  init->add_option("--seed", o.model.seed, "Weight seed");
  init->add_option("--feat-dim", o.model.feat_dim)->check(CLI::PositiveNumber);
  init->add_option("--channels", o.model.channels)->check(CLI::PositiveNumber);
  init->add_option("--res2-scale", o.model.res2_scale)->check(CLI::PositiveNumber);
  init->add_option("--se-bottleneck", o.model.se_bottleneck)->check(CLI::PositiveNumber);
  init->add_option("--attn-bottleneck", o.model.attn_bottleneck)->check(CLI::PositiveNumber);
  init->add_option("--emb-dim", o.model.emb_dim)->check(CLI::PositiveNumber);

  auto add_observer = [&](CLI::App* c) {
    c->add_option("--observer", o.observer, "minmax | percentile:<p>");
    c->add_option("--max-utts", o.max_utts, "Calibration utterances to use (0 = all)");
    c->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto add_pipeline = [&](CLI::App* c) {
    c->add_option("--model", o.model_path, "Model file")->required();
    c->add_option("--features", o.features, "Evaluation feature directory")->required();
    c->add_option("--calib", o.calib, "Calibration feature directory")->required();
    c->add_option("--trials", o.trials, "Trial list")->required();
    c->add_option("--out", o.out, "Structured report output (default stdout)");
    add_observer(c);
  };

  auto* cal = app.add_subcommand("calibrate", "Collect per-layer activation statistics");
  cal->add_option("--model", o.model_path, "Model file")->required();
  cal->add_option("--features", o.features, "Calibration feature directory")->required();
  cal->add_option("--out", o.out, "Statistics output (default stdout)");
  add_observer(cal);

  auto* sw = app.add_subcommand("sweep", "Quantize each layer alone and measure EER and size");
  add_pipeline(sw);

  auto* sel = app.add_subcommand("select", "Choose the layers to quantize from a sweep report");
  sel->add_option("--report", o.report_path, "Sweep report")->required();
  sel->add_option("--policy", o.policy, "threshold:<pp> | topk:<k> | budget:<pp>");
  sel->add_option("--out", o.out, "Quantization config output");

  auto* ev = app.add_subcommand("eval", "Evaluate a mixed-precision configuration against the baseline");
  add_pipeline(ev);
  ev->add_option("--config", o.config_path, "Quantization config")->required();
  ev->add_option("--write-model", o.write_model, "Also write the int8 model file");

  auto* rep = app.add_subcommand("report", "Render a stored report as csv, md or json");
  rep->add_option("--in,--report", o.report_path, "Report file")->required();
  rep->add_option("--format", o.format, "csv | md | json");
  rep->add_option("--out", o.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) cmd_gen_data(o);
    else if (*init) cmd_init_model(o);
    else if (*cal) cmd_calibrate(o);
    else if (*sw) cmd_sweep(o);
    else if (*sel) cmd_select(o);
    else if (*ev) cmd_eval(o);
    else if (*rep) cmd_report(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
