#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "somn/calibration.hpp"
#include "somn/pretrain.hpp"
#include "somn/stager.hpp"

namespace somn {

struct SweepValue {
  double mean = 0.0;
  std::vector<double> per_seed;
};

struct SweepRow {
  double condition = 0.0;  // noise scale or training-subject count
  SweepValue template_f1, baseline_f1, template_ece, baseline_ece;
  // Ratios relative to the largest-condition row; meaningful for size sweeps.
  double template_f1_ratio = 1.0, baseline_f1_ratio = 1.0;
  double template_ece_ratio = 1.0, baseline_ece_ratio = 1.0;
};

struct SweepTable {
  std::string condition_name;
  int seed_count = 0;
  std::vector<SweepRow> rows;
};

// Evaluates both trained models on noise-injected copies of the test set.
// scales must include 0 (the clean reference); ref_std is computed once over
// the clean test epochs. Both models must have identical parameter counts.
SweepTable noise_sweep(const ModelGraph& template_model, const ModelGraph& baseline_model,
                       const EpochSet& test, std::span<const double> scales,
                       std::span<const std::uint64_t> seeds, int ece_bins);

struct SizeSweepConfig {
  const EpochSet* train = nullptr;  // subject-attributed training pool
  const EpochSet* val = nullptr;
  const EpochSet* test = nullptr;
  PretrainConfig pretrain_cfg;
  TargetSpec target;
  TrainOptions train_opts;
  int ece_bins = 15;
};

// For each training-subject count: subsample that many subjects (seeded), run
// the full template pipeline (pretrain + train) and the baseline training
// from scratch, and evaluate on the fixed test set. Rows carry ratio columns
// relative to the largest size.
SweepTable train_size_sweep(const SizeSweepConfig& cfg, std::span<const int> sizes,
                            std::span<const std::uint64_t> seeds);

// Epochs belonging to the given subjects, in original order.
EpochSet filter_by_subjects(const EpochSet& pool, const std::vector<std::string>& subjects);

}  // namespace somn
