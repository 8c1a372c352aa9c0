// igcam: CNN attribution maps (Grad-CAM, Grad-CAM++, Integrated Gradients,
// Integrated Grad-CAM) and their evaluation metrics, over bundled models.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "igcam/attribution.hpp"
#include "igcam/dataset.hpp"
#include "igcam/engine.hpp"
#include "igcam/error.hpp"
#include "igcam/evaluate.hpp"
#include "igcam/fixtures.hpp"
#include "igcam/image_io.hpp"
#include "igcam/metrics.hpp"
#include "igcam/model_io.hpp"
#include "igcam/postprocess.hpp"
#include "igcam/saliency_io.hpp"

namespace {

using namespace igcam;

struct CommonFlags {
  std::string model_path;
  std::string blob_path;
  std::string method = "integrated-grad-cam";
  std::string class_arg = "argmax";
  std::string layer = "last-conv";
  int steps = 50;
  std::string baseline = "black";
  std::string relu = "per-step";
  std::string score_mode = "probability";
  double keep_fraction = 0.15;
  int threads = 1;
};

void add_model_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--model", flags.model_path, "Bundle manifest (JSON)")
      ->required();
  cmd->add_option("--blob", flags.blob_path, "Weight blob (raw float64)")
      ->required();
}

int parse_class(const std::string& arg) {
  if (arg == "argmax") return kArgmaxClass;
  try {
    std::size_t pos = 0;
    const int value = std::stoi(arg, &pos);
    if (pos != arg.size()) throw std::invalid_argument(arg);
    return value;
  } catch (const std::exception&) {
    throw UsageError("--class must be an integer or 'argmax', got '" + arg + "'");
  }
}

std::string parse_layer(const std::string& arg) {
  return arg == "last-conv" ? std::string() : arg;
}

ReluPlacement parse_relu(const std::string& arg) {
  if (arg == "per-step") return ReluPlacement::per_step;
  if (arg == "final") return ReluPlacement::final_only;
  throw UsageError("--relu must be per-step or final, got '" + arg + "'");
}

ScoreMode parse_score_mode(const std::string& arg) {
  if (arg == "probability") return ScoreMode::probability;
  if (arg == "logit") return ScoreMode::logit;
  throw UsageError("--score must be logit or probability, got '" + arg + "'");
}

// "black", a numeric constant, or an image path.
BaselineSpec parse_baseline(const std::string& arg, const ModelBundle& model) {
  BaselineSpec spec;
  if (arg == "black") {
    spec.kind = BaselineSpec::Kind::black;
    return spec;
  }
  try {
    std::size_t pos = 0;
    const double value = std::stod(arg, &pos);
    if (pos == arg.size()) {
      spec.kind = BaselineSpec::Kind::constant;
      spec.value = value;
      return spec;
    }
  } catch (const std::exception&) {
    // fall through to the image-path reading
  }
  spec.kind = BaselineSpec::Kind::image;
  const auto [c, h, w] = model.input_shape;
  spec.image = load_image(arg, c, h, w);
  return spec;
}

ModelBundle load_model(const CommonFlags& flags) {
  return load_bundle(flags.model_path, flags.blob_path);
}

void warn(const std::string& message) {
  std::cerr << "warning: " << message << "\n";
}

int run_explain(const CommonFlags& flags, const std::string& image_path,
                const std::string& out_path, const std::string& overlay_path,
                const std::string& saliency_path, double blend, bool steps_given) {
  const ModelBundle model = load_model(flags);
  const auto [c, h, w] = model.input_shape;
  const Tensor image = load_image(image_path, c, h, w);

  AttributionRequest request;
  request.image = image;
  request.class_index = parse_class(flags.class_arg);
  request.tap_layer = parse_layer(flags.layer);
  request.method = method_from_name(flags.method);
  request.path.steps = flags.steps;
  request.path.baseline =
      make_baseline(parse_baseline(flags.baseline, model), image.shape());
  request.relu_placement = parse_relu(flags.relu);
  request.threads = flags.threads;

  if (steps_given && !method_uses_path(request.method)) {
    warn("--steps is ignored for method " + flags.method);
  }
  if (method_uses_path(request.method) &&
      request.path.baseline.values() == image.values()) {
    warn("baseline equals the input image; integrated maps are all-zero");
  }

  SaliencyMap map = attribute(model, request);
  if (!saliency_path.empty()) {
    SaliencyMap dump = map;
    if (dump.resolution == Resolution::feature) {
      dump = upsample_bilinear(dump, h, w);
    }
    save_saliency(dump, saliency_path);
  }

  SaliencyMap rendered_map = map;
  if (rendered_map.resolution == Resolution::feature) {
    rendered_map = upsample_bilinear(rendered_map, h, w);
  }
  rendered_map = normalize_max(absolute(rendered_map));
  save_heatmap(render(rendered_map, nullptr, 1.0), out_path);
  if (!overlay_path.empty()) {
    save_heatmap(render(rendered_map, &image, blend), overlay_path);
  }

  const int cls = map.class_index;
  const double psi = score(model, image, cls, parse_score_mode(flags.score_mode));
  std::printf("class=%d score=%.9f method=%s\n", cls, psi, flags.method.c_str());
  return 0;
}

EvalConfig eval_config(const CommonFlags& flags, const ModelBundle& model,
                       Method method) {
  EvalConfig config;
  config.method = method;
  config.steps = flags.steps;
  config.baseline = parse_baseline(flags.baseline, model);
  config.tap_layer = parse_layer(flags.layer);
  config.relu_placement = parse_relu(flags.relu);
  config.keep_fraction = flags.keep_fraction;
  config.score_mode = parse_score_mode(flags.score_mode);
  config.threads = flags.threads;
  return config;
}

void emit(const std::string& text, const std::string& report_path) {
  if (report_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(report_path, std::ios::trunc);
  if (!out) throw InputError("cannot write '" + report_path + "'");
  out << text;
}

int run_evaluate(const CommonFlags& flags, const std::string& dataset_path,
                 const std::string& report_path, bool class_given) {
  if (class_given) {
    warn("--class is ignored by evaluate; dataset labels are used");
  }
  const ModelBundle model = load_model(flags);
  const Dataset dataset = load_dataset_index(dataset_path);
  const MetricReport report = evaluate_dataset(
      model, dataset, eval_config(flags, model, method_from_name(flags.method)));

  std::ostringstream text;
  write_report(report, text);
  emit(text.str(), report_path);
  return 0;
}

std::vector<Method> parse_method_list(const std::string& arg) {
  std::vector<Method> methods;
  std::stringstream ss(arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) methods.push_back(method_from_name(item));
  }
  if (methods.empty()) throw UsageError("--method list is empty");
  return methods;
}

int run_compare(const CommonFlags& flags, const std::string& dataset_path,
                const std::string& image_path, const std::string& report_path,
                const std::string& out_path) {
  const ModelBundle model = load_model(flags);
  const std::vector<Method> methods = parse_method_list(flags.method);

  if (!dataset_path.empty()) {
    const Dataset dataset = load_dataset_index(dataset_path);
    std::ostringstream text;
    text << "# igcam compare report v1\n";
    for (Method m : methods) {
      const MetricReport report =
          evaluate_dataset(model, dataset, eval_config(flags, model, m));
      text << "method=" << method_name(m) << " images=" << report.image_count()
           << " skipped=" << report.skipped
           << " ebpg_mean_pct=" << format_metric(report.ebpg_mean_pct)
           << " bbox_mean_pct=" << format_metric(report.bbox_mean_pct)
           << " drop_pct=" << format_metric(report.drop_pct)
           << " increase_pct=" << format_metric(report.increase_pct)
           << " signed_increase_mean="
           << format_metric(report.signed_increase_mean) << "\n";
    }
    emit(text.str(), report_path);
    return 0;
  }

  // Single-image mode: one heatmap per method, side by side.
  const auto [c, h, w] = model.input_shape;
  const Tensor image = load_image(image_path, c, h, w);
  std::ostringstream text;
  text << "# igcam compare report v1\n";
  RenderedHeatmap strip;
  strip.width = w * static_cast<int>(methods.size());
  strip.height = h;
  strip.rgba.assign(static_cast<std::size_t>(strip.width) * strip.height * 4, 255);
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    AttributionRequest request;
    request.image = image;
    request.class_index = parse_class(flags.class_arg);
    request.tap_layer = parse_layer(flags.layer);
    request.method = methods[mi];
    request.path.steps = flags.steps;
    request.path.baseline =
        make_baseline(parse_baseline(flags.baseline, model), image.shape());
    request.relu_placement = parse_relu(flags.relu);
    request.threads = flags.threads;

    SaliencyMap map = attribute(model, request);
    if (map.resolution == Resolution::feature) {
      map = upsample_bilinear(map, h, w);
    }
    const RenderedHeatmap tile = render(normalize_max(absolute(map)), &image, 0.5);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t src = (static_cast<std::size_t>(y) * w + x) * 4;
        const std::size_t dst =
            (static_cast<std::size_t>(y) * strip.width + mi * w + x) * 4;
        for (int ch = 0; ch < 4; ++ch) strip.rgba[dst + ch] = tile.rgba[src + ch];
      }
    }
    const double psi =
        score(model, image, map.class_index, parse_score_mode(flags.score_mode));
    text << "method=" << method_name(methods[mi]) << " class=" << map.class_index
         << " score=" << format_metric(psi) << "\n";
  }
  if (!out_path.empty()) save_heatmap(strip, out_path);
  emit(text.str(), report_path);
  return 0;
}

int run_gen_fixture(const std::string& family, std::uint64_t seed,
                    const std::string& out_dir) {
  const Fixture fixture = make_fixture(family, seed);
  write_fixture(fixture, out_dir);
  std::printf("family=%s seed=%llu images=%zu out=%s\n", fixture.family.c_str(),
              static_cast<unsigned long long>(seed), fixture.images.size(),
              out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CNN attribution maps and evaluation metrics"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string image_path, dataset_path, out_path, overlay_path, saliency_path,
      report_path, family, out_dir;
  double blend = 0.5;
  std::uint64_t seed = 1;

  CLI::App* explain = app.add_subcommand(
      "explain", "Explain one image: heatmap PNG, optional overlay and dump");
  add_model_flags(explain, flags);
  explain->add_option("--image", image_path, "Input image (PNG)")->required();
  explain->add_option("--method", flags.method,
                      "grad-cam | grad-cam-pp | integrated-gradients | "
                      "integrated-grad-cam (default integrated-grad-cam)");
  explain->add_option("--class", flags.class_arg,
                      "Class index or 'argmax' (default argmax)");
  explain->add_option("--layer", flags.layer,
                      "Tap layer name or 'last-conv' (default last-conv)");
  CLI::Option* steps_opt = explain->add_option(
      "--steps", flags.steps, "Path steps m for integrated methods (default 50)");
  explain->add_option("--baseline", flags.baseline,
                      "'black', a constant in [0,1], or an image path "
                      "(default black)");
  explain->add_option("--relu", flags.relu,
                      "per-step | final ReLU placement (default per-step)");
  explain->add_option("--score", flags.score_mode,
                      "logit | probability reported score (default probability)");
  explain->add_option("--out", out_path, "Heatmap PNG path")->required();
  explain->add_option("--overlay", overlay_path, "Overlay PNG path");
  explain->add_option("--saliency", saliency_path, "Raw saliency dump path");
  explain->add_option("--blend", blend, "Overlay blend factor (default 0.5)");
  explain->add_option("--threads", flags.threads, "Worker threads (default 1)");

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "EBPG/Bbox/Drop/Increase metrics over a dataset");
  add_model_flags(evaluate, flags);
  evaluate->add_option("--dataset", dataset_path, "Dataset index file")
      ->required();
  evaluate->add_option("--method", flags.method, "Attribution method");
  CLI::Option* eval_class_opt =
      evaluate->add_option("--class", flags.class_arg, "Ignored; labels are used");
  evaluate->add_option("--layer", flags.layer, "Tap layer (default last-conv)");
  evaluate->add_option("--steps", flags.steps, "Path steps m (default 50)");
  evaluate->add_option("--baseline", flags.baseline, "Baseline (default black)");
  evaluate->add_option("--keep-fraction", flags.keep_fraction,
                       "Top-pixel keep fraction for Drop/Increase (default 0.15)");
  evaluate->add_option("--relu", flags.relu, "per-step | final (default per-step)");
  evaluate->add_option("--score", flags.score_mode,
                       "logit | probability confidence (default probability)");
  evaluate->add_option("--report", report_path, "Report path (default stdout)");
  evaluate->add_option("--threads", flags.threads, "Worker threads (default 1)");

  CLI::App* compare = app.add_subcommand(
      "compare", "Side-by-side methods on one dataset or image");
  add_model_flags(compare, flags);
  compare->add_option("--dataset", dataset_path, "Dataset index file");
  compare->add_option("--image", image_path, "Single input image");
  compare->add_option("--method", flags.method,
                      "Comma-separated method list (default all four)");
  compare->add_option("--class", flags.class_arg, "Class for single-image mode");
  compare->add_option("--layer", flags.layer, "Tap layer (default last-conv)");
  compare->add_option("--steps", flags.steps, "Path steps m (default 50)");
  compare->add_option("--baseline", flags.baseline, "Baseline (default black)");
  compare->add_option("--keep-fraction", flags.keep_fraction,
                      "Keep fraction (default 0.15)");
  compare->add_option("--relu", flags.relu, "per-step | final (default per-step)");
  compare->add_option("--score", flags.score_mode,
                      "logit | probability (default probability)");
  compare->add_option("--report", report_path, "Report path (default stdout)");
  compare->add_option("--out", out_path, "Composite strip PNG (image mode)");
  compare->add_option("--threads", flags.threads, "Worker threads (default 1)");

  CLI::App* gen = app.add_subcommand(
      "gen-fixture", "Generate a deterministic fixture bundle and dataset");
  gen->add_option("--family", family, "quadrant | dead-relu | gradcheck")
      ->required();
  gen->add_option("--seed", seed, "Generator seed (default 1)");
  gen->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return static_cast<int>(ErrorCategory::usage);
  }

  try {
    flags.method = app.got_subcommand(compare) && compare->count("--method") == 0
                       ? "grad-cam,grad-cam-pp,integrated-gradients,"
                         "integrated-grad-cam"
                       : flags.method;
    if (app.got_subcommand(explain)) {
      return run_explain(flags, image_path, out_path, overlay_path, saliency_path,
                         blend, steps_opt->count() > 0);
    }
    if (app.got_subcommand(evaluate)) {
      return run_evaluate(flags, dataset_path, report_path,
                          eval_class_opt->count() > 0);
    }
    if (app.got_subcommand(compare)) {
      if (dataset_path.empty() == image_path.empty()) {
        throw UsageError("compare needs exactly one of --dataset or --image");
      }
      return run_compare(flags, dataset_path, image_path, report_path, out_path);
    }
    if (app.got_subcommand(gen)) {
      return run_gen_fixture(family, seed, out_dir);
    }
    throw UsageError("no subcommand given");
  } catch (const Error& e) {
    std::cerr << "error: " << e.category_name() << ": " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
}
