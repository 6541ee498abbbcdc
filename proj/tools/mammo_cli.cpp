// mammo: preprocessing, training, classification, segmentation and evaluation
// of MIAS-style mammograms.
//
// Exit status: 0 success, 1 usage error, 2 runtime or data error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mammo/cnn/checkpoint.hpp"
#include "mammo/errors.hpp"
#include "mammo/pipeline.hpp"
#include "mammo/pnm_io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what) : std::runtime_error(stage + ": " + what) {}
};

// Runs `fn`, prefixing any failure with the stage name.
template <class Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mammo::IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw mammo::IoError("cannot write " + path.string());
}

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_file, "Config file of 'section.key = value' lines")->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.overrides, "Override one config key (section.key=value); repeatable");
  cmd->add_option("--seed", opts.seed, "Random seed");
  cmd->add_option("--sigma", opts.sigma, "Noise standard deviation on the 0-255 scale");
}

// Config file first, then --set, then dedicated flags.
mammo::PipelineConfig build_config(const CommonOptions& opts) {
  try {
    mammo::PipelineConfig cfg;
    if (!opts.config_file.empty()) mammo::apply_config_text(cfg, slurp(opts.config_file));
    for (const auto& kv : opts.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw mammo::ArgumentError("--set expects key=value, got '" + kv + "'");
      mammo::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.sigma) cfg.noise_sigma = *opts.sigma;
    cfg.finalize();
    return cfg;
  } catch (const mammo::IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw mammo::ArgumentError(std::string("config: ") + e.what());
  }
}

void prepare_output_dir(const fs::path& dir, const mammo::PipelineConfig& cfg) {
  fs::create_directories(dir);
  write_text(dir / "config.txt", mammo::config_to_text(cfg));
}

mammo::GrayImage load_image(const fs::path& path) {
  return stage("read " + path.string(), [&] { return mammo::read_pgm_file(path); });
}

std::vector<mammo::cnn::Network> load_models(const std::vector<std::string>& paths) {
  std::vector<mammo::cnn::Network> models;
  for (const auto& p : paths) models.push_back(stage("load model " + p, [&] { return mammo::cnn::load_checkpoint_file(p); }));
  return models;
}

mammo::mias::LoadResult load_mias(const mammo::PipelineConfig& cfg) {
  auto loaded = stage("load dataset", [&] {
    return mammo::mias::load_dataset(cfg.data_dir, cfg.info_path, {cfg.load_max_side});
  });
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
  return loaded;
}

int run_preprocess(const fs::path& input, const fs::path& out_dir, const mammo::PipelineConfig& cfg) {
  const auto image = load_image(input);
  prepare_output_dir(out_dir, cfg);
  const auto r = stage("preprocess", [&] { return mammo::preprocess(image, cfg); });
  mammo::write_file(out_dir / "denoised.pgm", mammo::write_pgm(r.denoised));
  mammo::write_file(out_dir / "enhanced.pgm", mammo::write_pgm(r.enhanced));
  mammo::write_file(out_dir / "pectoral_removed.pgm", mammo::write_pgm(r.pectoral_removed));
  ordered_json j{{"input", input.string()},
                 {"width", r.working.width()},
                 {"height", r.working.height()},
                 {"pectoral_removed", r.pectoral_found}};
  std::cout << j.dump() << "\n";
  return 0;
}

int run_train(const fs::path& model_path, const mammo::PipelineConfig& cfg) {
  const auto loaded = load_mias(cfg);
  const auto samples = mammo::to_samples(loaded.items);
  auto result = stage("train", [&] { return mammo::cnn::train(samples, cfg.network(), cfg.train); });

  const fs::path dir = model_path.has_parent_path() ? model_path.parent_path() : fs::path(".");
  prepare_output_dir(dir, cfg);
  stage("write model", [&] { mammo::cnn::save_checkpoint_file(result.model, model_path); });
  std::string history;
  for (const auto& rec : result.history) history += mammo::cnn::to_json_line(rec) + "\n";
  write_text(dir / "history.jsonl", history);

  ordered_json summary{{"model", model_path.string()},
                       {"train_images", result.split.train.size()},
                       {"test_images", result.split.test.size()},
                       {"epochs", result.history.size()}};
  if (!result.history.empty()) {
    summary["final_loss"] = result.history.back().train_loss;
    if (result.history.back().test_accuracy) summary["test_accuracy"] = *result.history.back().test_accuracy;
  }
  std::cout << summary.dump() << "\n";
  return 0;
}

int run_classify(const std::vector<std::string>& model_paths, const std::vector<std::string>& inputs) {
  auto models = load_models(model_paths);
  for (const auto& in : inputs) {
    const auto image = load_image(in);
    const auto pred = stage("classify " + in, [&] { return mammo::cnn::ensemble_predict(models, image); });
    ordered_json j{{"file", in},
                   {"label", pred.label == 1 ? "abnormal" : "normal"},
                   {"p_abnormal", pred.probabilities.at(1)},
                   {"probabilities", pred.probabilities}};
    std::cout << j.dump() << "\n";
  }
  return 0;
}

int run_segment(const fs::path& input, const fs::path& out_dir, const std::string& gt_info,
                const mammo::PipelineConfig& cfg) {
  const auto image = load_image(input);
  prepare_output_dir(out_dir, cfg);
  const auto r = stage("segment", [&] { return mammo::segment(image, cfg); });
  const auto& base = r.pre.pectoral_removed;

  mammo::write_file(out_dir / "mask.pgm", mammo::write_pgm(r.mask));
  mammo::write_file(out_dir / "overlay.ppm", mammo::write_overlay_ppm(base, mammo::contour(r.mask)));
  mammo::write_file(out_dir / "tumor_map.pgm", mammo::write_pgm(r.tumor_map));
  std::string diag;
  for (const auto& d : r.contour.history) {
    diag += ordered_json{{"iteration", d.iteration}, {"area", d.area}, {"mean_abs_change", d.mean_abs_change}}.dump() + "\n";
  }
  write_text(out_dir / "phi_diagnostics.jsonl", diag);

  ordered_json summary{{"input", input.string()},
                       {"width", base.width()},
                       {"height", base.height()},
                       {"sfcm_iterations", r.clusters.iterations},
                       {"centers", r.clusters.centers},
                       {"levelset_iterations", r.contour.iterations},
                       {"mask_area", r.mask.count()}};
  if (!gt_info.empty()) {
    const double d = stage("ground truth", [&] {
      const auto records = mammo::mias::parse_info(slurp(gt_info));
      const std::string id = input.stem().string();
      std::vector<mammo::mias::Record> mine;
      for (const auto& rec : records)
        if (rec.id == id) mine.push_back(rec);
      if (mine.empty()) throw mammo::ArgumentError("no annotation for id " + id);
      const auto truth = mammo::mias::ground_truth_mask(mine, image.width(), image.height());
      return mammo::dice(r.mask, mammo::resize_mask_nearest(truth, r.mask.width(), r.mask.height()));
    });
    summary["dice"] = d;
    std::cout << "dice " << d << "\n";
  }
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int run_evaluate(const std::vector<std::string>& model_paths, const fs::path& report_path,
                 const mammo::PipelineConfig& cfg) {
  auto models = load_models(model_paths);
  const auto loaded = load_mias(cfg);
  const auto samples = mammo::to_samples(loaded.items);
  const auto split = stage("split", [&] {
    return mammo::cnn::stratified_split(samples, cfg.train.test_fraction, cfg.train.seed);
  });
  const auto eval = stage("evaluate", [&] { return mammo::evaluate(models, samples, split.test); });
  const auto evaluated = split.test.empty() ? samples.size() : split.test.size();

  auto report = ordered_json::parse(mammo::metrics::to_json(eval.report, eval.counts));
  report["evaluated_images"] = evaluated;
  report["majority_baseline"] = static_cast<double>(eval.majority_count) / static_cast<double>(evaluated);
  const std::string text = report.dump(2) + "\n";
  std::cout << text;
  if (!report_path.empty()) {
    prepare_output_dir(report_path.has_parent_path() ? report_path.parent_path() : fs::path("."), cfg);
    write_text(report_path, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mammogram classification and tumor segmentation"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string input, out, info, gt_info, data, profile;
  std::vector<std::string> models, inputs;
  std::optional<std::size_t> epochs;

  auto* pre = app.add_subcommand("preprocess", "Denoise, enhance and remove the pectoral muscle");
  pre->add_option("input", input, "Input PGM")->required()->check(CLI::ExistingFile);
  pre->add_option("-o,--output", out, "Output directory")->required();
  add_common(pre, common);

  auto* tr = app.add_subcommand("train", "Train the classifier on a MIAS directory");
  tr->add_option("--data", data, "Directory of <id>.pgm images")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--info", info, "MIAS annotation file")->required()->check(CLI::ExistingFile);
  tr->add_option("-o,--output", out, "Checkpoint path")->required();
  tr->add_option("--profile", profile, "Network profile")->check(CLI::IsMember({"desk", "full"}));
  tr->add_option("--epochs", epochs, "Training epochs");
  add_common(tr, common);

  auto* cl = app.add_subcommand("classify", "Print label and abnormal probability per image (JSON lines)");
  cl->add_option("--model", models, "Checkpoint; repeat for an ensemble vote")
      ->required()
      ->allow_extra_args(false)
      ->check(CLI::ExistingFile);
  cl->add_option("inputs", inputs, "Input PGMs")->required()->check(CLI::ExistingFile);

  auto* seg = app.add_subcommand("segment", "Segment the tumor region of one image");
  seg->add_option("input", input, "Input PGM")->required()->check(CLI::ExistingFile);
  seg->add_option("-o,--output", out, "Output directory")->required();
  seg->add_option("--gt", gt_info, "MIAS annotation file; prints Dice against the lesion circle")
      ->check(CLI::ExistingFile);
  add_common(seg, common);

  auto* ev = app.add_subcommand("evaluate", "Metric report on the held-out split");
  ev->add_option("--model", models, "Checkpoint; repeat for an ensemble vote")
      ->required()
      ->allow_extra_args(false)
      ->check(CLI::ExistingFile);
  ev->add_option("--data", data, "Directory of <id>.pgm images")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--info", info, "MIAS annotation file")->required()->check(CLI::ExistingFile);
  ev->add_option("-o,--output", out, "Also write the report to this file");
  add_common(ev, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    mammo::PipelineConfig cfg = build_config(common);
    if (!data.empty()) cfg.data_dir = data;
    if (!info.empty()) cfg.info_path = info;
    if (!profile.empty()) cfg.network_profile = profile;
    if (epochs) cfg.train.epochs = *epochs;
    if (!out.empty()) cfg.output_dir = out;

    if (*pre) return run_preprocess(input, out, cfg);
    if (*tr) return run_train(out, cfg);
    if (*cl) return run_classify(models, inputs);
    if (*seg) return run_segment(input, out, gt_info, cfg);
    if (*ev) return run_evaluate(models, out, cfg);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mammo::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
