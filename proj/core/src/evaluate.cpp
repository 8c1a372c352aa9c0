#include "igcam/evaluate.hpp"

#include <cmath>
#include <cstdio>

#include "igcam/error.hpp"
#include "igcam/image_io.hpp"
#include "igcam/metrics.hpp"
#include "igcam/parallel.hpp"
#include "igcam/postprocess.hpp"

namespace igcam {

namespace {

ImageRecord evaluate_one(const ModelBundle& model, const Dataset& dataset,
                         std::size_t index, const EvalConfig& config) {
  const DatasetRecord& rec = dataset.records[index];
  if (rec.label >= model.class_count) {
    throw ValidationError("dataset label " + std::to_string(rec.label) +
                          " out of range for class_count " +
                          std::to_string(model.class_count));
  }
  const auto [c, h, w] = model.input_shape;
  const Tensor image = load_image(dataset.image_path(index), c, h, w);

  const GroundTruth truth = load_mask(dataset.mask_path(index));
  if (truth.height != h || truth.width != w) {
    throw ValidationError("mask '" + dataset.mask_path(index).string() + "' is (" +
                          std::to_string(truth.height) + "," +
                          std::to_string(truth.width) + ") but the model input is (" +
                          std::to_string(h) + "," + std::to_string(w) + ")");
  }

  AttributionRequest request;
  request.image = image;
  request.class_index = rec.label;
  request.tap_layer = config.tap_layer;
  request.method = config.method;
  request.path.steps = config.steps;
  request.path.baseline = make_baseline(config.baseline, image.shape());
  request.relu_placement = config.relu_placement;
  SaliencyMap map = attribute(model, request);
  if (map.resolution == Resolution::feature) {
    map = upsample_bilinear(map, h, w);
  }
  // EBPG/Bbox read magnitudes and are scale-free; normalization only
  // standardizes what gets reported alongside.
  SaliencyMap measured = normalize_max(absolute(map));

  ImageRecord out;
  out.id = rec.image;
  out.class_index = rec.label;
  try {
    out.ebpg = ebpg(measured, truth);
    out.bbox = bbox_score(measured, truth);
  } catch (const UndefinedMetricError&) {
    out.ebpg.reset();
    out.bbox.reset();
  }

  const Tensor masked = threshold_top(image, measured, config.keep_fraction);
  out.psi_orig = score(model, image, rec.label, config.score_mode);
  out.psi_masked = score(model, masked, rec.label, config.score_mode);
  if (!(out.psi_orig > 0.0)) {
    throw ValidationError("confidence score for '" + rec.image +
                          "' is not positive; the drop term needs Psi(I) > 0");
  }
  const double diff = out.psi_orig - out.psi_masked;
  out.drop_term = diff > 0.0 ? diff / out.psi_orig : 0.0;
  out.increase_flag = out.psi_masked > out.psi_orig ? 1 : 0;
  out.sign = diff < 0.0 ? 1 : (diff > 0.0 ? -1 : 0);
  return out;
}

}  // namespace

MetricReport evaluate_dataset(const ModelBundle& model, const Dataset& dataset,
                              const EvalConfig& config) {
  if (dataset.records.empty()) {
    throw ValidationError("dataset is empty");
  }
  std::vector<ImageRecord> records(dataset.records.size());
  parallel_for(dataset.records.size(), config.threads, [&](std::size_t i) {
    records[i] = evaluate_one(model, dataset, i, config);
  });

  int skipped = 0;
  for (const ImageRecord& r : records) {
    if (!r.ebpg) ++skipped;
  }
  return aggregate_records(std::move(records), skipped);
}

MetricReport aggregate_records(std::vector<ImageRecord> records, int skipped) {
  MetricReport report;
  report.records = std::move(records);
  report.skipped = skipped;

  const double k = static_cast<double>(report.records.size());
  double ebpg_sum = 0.0, bbox_sum = 0.0, drop_sum = 0.0;
  int scored = 0, increases = 0, sign_sum = 0;
  for (const ImageRecord& r : report.records) {
    if (r.ebpg) {
      ebpg_sum += *r.ebpg;
      bbox_sum += *r.bbox;
      ++scored;
    }
    drop_sum += r.drop_term;
    increases += r.increase_flag;
    sign_sum += r.sign;
  }
  report.ebpg_mean_pct = scored ? 100.0 * ebpg_sum / scored : 0.0;
  report.bbox_mean_pct = scored ? 100.0 * bbox_sum / scored : 0.0;
  report.drop_pct = k > 0 ? 100.0 * drop_sum / k : 0.0;
  report.increase_pct = k > 0 ? 100.0 * increases / k : 0.0;
  report.signed_increase_mean = k > 0 ? 100.0 * sign_sum / k : 0.0;
  return report;
}

std::string format_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

void write_report(const MetricReport& report, std::ostream& out) {
  out << "# igcam metric report v1\n";
  for (const ImageRecord& r : report.records) {
    out << "image id=" << r.id << " class=" << r.class_index
        << " psi_orig=" << format_metric(r.psi_orig)
        << " psi_masked=" << format_metric(r.psi_masked)
        << " ebpg=" << (r.ebpg ? format_metric(*r.ebpg) : "na")
        << " bbox=" << (r.bbox ? format_metric(*r.bbox) : "na")
        << " drop=" << format_metric(r.drop_term)
        << " increase=" << r.increase_flag << "\n";
  }
  out << "aggregate images=" << report.image_count()
      << " skipped=" << report.skipped
      << " ebpg_mean_pct=" << format_metric(report.ebpg_mean_pct)
      << " bbox_mean_pct=" << format_metric(report.bbox_mean_pct)
      << " drop_pct=" << format_metric(report.drop_pct)
      << " increase_pct=" << format_metric(report.increase_pct)
      << " signed_increase_mean=" << format_metric(report.signed_increase_mean)
      << "\n";
}

}  // namespace igcam
