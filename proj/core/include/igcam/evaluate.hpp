#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "igcam/attribution.hpp"
#include "igcam/dataset.hpp"
#include "igcam/engine.hpp"
#include "igcam/model.hpp"

namespace igcam {

// Shared knobs for dataset evaluation. Defaults follow the usual conventions:
// 50 path steps, keep fraction 0.15, black baseline, last conv layer,
// softmax-probability confidence.
struct EvalConfig {
  Method method = Method::integrated_grad_cam;
  int steps = 50;
  BaselineSpec baseline;
  std::string tap_layer;  // empty: last conv
  ReluPlacement relu_placement = ReluPlacement::per_step;
  double keep_fraction = 0.15;
  ScoreMode score_mode = ScoreMode::probability;
  int threads = 1;
};

struct ImageRecord {
  std::string id;
  int class_index = 0;
  double psi_orig = 0.0;
  double psi_masked = 0.0;
  std::optional<double> ebpg;  // absent when the map carried no mass
  std::optional<double> bbox;
  double drop_term = 0.0;      // ReLU(psi - psi_masked) / psi
  int increase_flag = 0;       // strict increase indicator
  int sign = 0;                // sign(psi_masked - psi_orig)
};

// Per-image records plus the aggregates recomputable from them. EBPG/Bbox
// aggregate over the non-skipped images; Drop%/Increase% average over all K.
struct MetricReport {
  std::vector<ImageRecord> records;
  int skipped = 0;
  double ebpg_mean_pct = 0.0;
  double bbox_mean_pct = 0.0;
  double drop_pct = 0.0;
  double increase_pct = 0.0;
  double signed_increase_mean = 0.0;  // (100/K) sum sign(psi_masked - psi_orig)

  int image_count() const { return static_cast<int>(records.size()); }
};

// Computes the explanation map for every dataset image (explained class =
// dataset label), evaluates EBPG/Bbox against the masks and Drop/Increase
// against the model, and aggregates. Images run in parallel up to
// config.threads; records and aggregates are reduced in dataset order, so the
// report is identical for any thread count.
MetricReport evaluate_dataset(const ModelBundle& model, const Dataset& dataset,
                              const EvalConfig& config);

// Aggregation alone, for callers that produced the records themselves.
MetricReport aggregate_records(std::vector<ImageRecord> records, int skipped);

// Line-oriented report: one `image ...` line per record with key=value
// fields, then one `aggregate ...` line. Fixed 9-decimal formatting keeps the
// bytes reproducible.
void write_report(const MetricReport& report, std::ostream& out);

std::string format_metric(double v);

}  // namespace igcam
