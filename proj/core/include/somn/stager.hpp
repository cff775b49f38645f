#pragma once

#include <cstdint>
#include <vector>

#include "somn/metrics.hpp"
#include "somn/model.hpp"
#include "somn/pretrain.hpp"
#include "somn/signal.hpp"

namespace somn {

// One convolution block: conv -> max-pool -> relu.
struct ConvBlockSpec {
  int filters = 0;
  int filter_len = 0;
  int stride = 1;
  int pool_window = 1;
};

// A compact single-branch staging CNN. The first block is the transfer
// surface: with template initialization its stride becomes 1 and its pool
// window is multiplied by the original stride, leaving parameter shapes and
// counts untouched.
struct TargetSpec {
  ConvBlockSpec first_conv{8, 150, 6, 8};
  std::vector<ConvBlockSpec> trunk{{16, 7, 1, 4}};
  std::vector<int> head{64, kNumStages};  // dense sizes; relu between, none after the last
  int input_length = kEpochSamples;
  std::uint64_t seed = 0;

  static TargetSpec desk_default(std::uint64_t seed);
};

enum class InitMode { random, from_filterbank };

// random: the architecture as specified (baseline condition).
// from_filterbank: transfer_filters applied (template condition). Both draw
// the same random parameters from the spec seed before any transplant, so the
// conditions differ only in first-layer initialization and the stride rule.
ModelGraph build_target(const TargetSpec& spec, InitMode init,
                        const FilterBank* bank = nullptr);

struct TrainOptions {
  double lr = 0.01;
  double momentum = 0.9;
  int max_epochs = 100;
  int batch_size = 32;
  int patience = 10;
  // Annealing: the rate is multiplied by lr_decay at every milestone epoch.
  // Disabled by default (no milestones).
  double lr_decay = 1.0;
  std::vector<int> lr_milestones;
  // First epoch eligible for the best-snapshot rule. Schedules that cool the
  // rate late restrict snapshots to the settled phase.
  int snapshot_from_epoch = 0;
  // When false the model keeps its final-epoch parameters instead of being
  // restored to the best snapshot (used for warm-up phases).
  bool restore_best = true;
};

struct TrainResult {
  std::vector<TrainHistoryRow> history;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
};

// Minibatch SGD with momentum on softmax cross-entropy. The model is left at
// the parameter snapshot with the best validation macro-F1.
TrainResult train(ModelGraph& model, const EpochSet& train_set, const EpochSet& val_set,
                  const TrainOptions& opts);

// Deterministic forward pass over all epochs.
PredictionSet predict(const ModelGraph& model, const EpochSet& epochs);

// Packs epochs [begin, end) into a (batch, 1, length) tensor.
Tensor pack_epochs(const EpochSet& epochs, std::size_t begin, std::size_t end);

}  // namespace somn
