#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "somn/model.hpp"
#include "somn/signal.hpp"

namespace somn {

struct TargetSpec;  // stager.hpp

struct FilterBankMeta {
  int epochs_trained = 0;
  double final_loss = 0.0;
  std::uint64_t seed = 0;
};

// K unit-norm template filters of length L learned by pre-training.
struct FilterBank {
  Matrix filters;  // K x L, unit-norm rows
  double sample_rate_hz = kEpochRateHz;
  FilterBankMeta meta;
};

struct PretrainConfig {
  int num_filters = 8;
  int filter_len = 150;  // 1.5 s at 100 Hz
  double lr = 0.05;
  double momentum = 0.9;
  int max_epochs = 40;
  int batch_size = 32;
  int patience = 10;  // epochs without a new best validation macro-F1
};

// CosineConv(K, L, stride 1, normalized) -> 1-max pool -> Dense(K -> 5) ->
// softmax cross-entropy. Filters start Gaussian, projected to unit norm.
ModelGraph build_pretrain_net(const PretrainConfig& cfg, std::uint64_t seed);

struct TrainHistoryRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;
};

struct PretrainOutput {
  FilterBank bank;
  std::vector<TrainHistoryRow> history;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
};

// Trains the pre-training net with SGD + row renormalization and returns the
// first-layer weights of the snapshot with the best validation macro-F1.
PretrainOutput pretrain(const EpochSet& train, const EpochSet& val, const PretrainConfig& cfg,
                        std::uint64_t seed);

struct TemplateMatch {
  int best_filter = -1;
  double best_score = 0.0;
  int best_lag = 0;
};

// Best |cosine| between any lag-aligned filter window and the waveform.
TemplateMatch match_template(const FilterBank& bank, std::span<const double> waveform);

// Builds the target architecture with first-layer stride 1 and the first pool
// window multiplied by the original stride, transplants the bank into the
// first convolution and randomly initializes the rest from the target seed.
ModelGraph transfer_filters(const FilterBank& bank, const TargetSpec& target);

}  // namespace somn
