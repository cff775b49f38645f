#include "somn/pretrain.hpp"

#include <algorithm>
#include <cmath>

#include "somn/error.hpp"
#include "somn/rng.hpp"
#include "somn/stager.hpp"

namespace somn {

ModelGraph build_pretrain_net(const PretrainConfig& cfg, std::uint64_t seed) {
  require(cfg.num_filters >= 1, errc::invalid_config, "num_filters must be >= 1");
  require(cfg.filter_len > 1 && cfg.filter_len <= kEpochSamples, errc::invalid_config,
          "filter_len must be in (1, 3000]");
  require(cfg.batch_size >= 1 && cfg.max_epochs >= 0 && cfg.lr > 0.0, errc::invalid_config,
          "bad pretrain configuration");

  ModelGraph model;
  model.set_seed(seed);
  Rng rng(derive_seed(seed, "pretrain_init"));
  model.add(CosineConvLayer::random(cfg.num_filters, cfg.filter_len, /*stride=*/1,
                                    ConvMode::cosine_normalized, rng));
  model.add(std::make_unique<OneMaxPoolLayer>());
  model.add(DenseLayer::random(cfg.num_filters, kNumStages, rng));
  model.add(std::make_unique<SoftmaxCELayer>());
  return model;
}

namespace {

FilterBank extract_bank(const ModelGraph& model, int epochs_trained, double final_loss,
                        std::uint64_t seed) {
  const auto& first = dynamic_cast<const CosineConvLayer&>(model.layer(0));
  FilterBank bank;
  bank.filters = first.weight_matrix();
  bank.sample_rate_hz = kEpochRateHz;
  bank.meta = {epochs_trained, final_loss, seed};
  return bank;
}

}  // namespace

PretrainOutput pretrain(const EpochSet& train_set, const EpochSet& val_set,
                        const PretrainConfig& cfg, std::uint64_t seed) {
  require(!train_set.empty() && !val_set.empty(), errc::too_short,
          "pretrain needs non-empty train and validation sets");
  for (const auto& ep : train_set.epochs)
    require(static_cast<int>(ep.values.size()) == kEpochSamples, errc::shape_mismatch,
            "pretrain expects 3000-sample epochs");

  ModelGraph model = build_pretrain_net(cfg, seed);

  // Two phases. The hot phase uses small batches so that every filter keeps
  // receiving gradient and the bank spreads over the distinct patterns in the
  // data; the polish phase averages the 1-max pulls over large batches, which
  // settles each filter onto a clean waveform. Snapshot selection by best
  // validation macro-F1 runs over the polish phase.
  const int warm_epochs = cfg.max_epochs * 2 / 5;
  const int polish_epochs = cfg.max_epochs - warm_epochs;

  TrainOptions warm;
  warm.lr = cfg.lr;
  warm.momentum = cfg.momentum;
  warm.max_epochs = warm_epochs;
  warm.batch_size = cfg.batch_size;
  warm.patience = 0;  // no early stop while exploring
  warm.restore_best = false;
  TrainResult wr = train(model, train_set, val_set, warm);

  TrainOptions polish;
  polish.lr = cfg.lr;
  polish.momentum = cfg.momentum;
  polish.max_epochs = polish_epochs;
  // Full-batch polish: the 1-max pulls average over every training epoch, so
  // the filters settle onto the dataset-mean waveforms instead of wobbling
  // around them.
  polish.batch_size = static_cast<int>(train_set.size());
  polish.patience = 0;
  polish.lr_decay = 0.25;
  polish.lr_milestones = {polish_epochs / 2};
  TrainResult pr = train(model, train_set, val_set, polish);

  std::vector<TrainHistoryRow> history = std::move(wr.history);
  for (auto row : pr.history) {
    row.epoch += warm_epochs;
    history.push_back(row);
  }

  PretrainOutput out;
  const double final_loss = history.empty() ? 0.0 : history.back().train_loss;
  out.bank = extract_bank(model, static_cast<int>(history.size()), final_loss, seed);
  out.history = std::move(history);
  out.best_epoch = pr.best_epoch + warm_epochs;
  out.best_val_f1 = pr.best_val_f1;
  return out;
}

TemplateMatch match_template(const FilterBank& bank, std::span<const double> waveform) {
  const int len = static_cast<int>(waveform.size());
  require(len >= 1, errc::too_short, "empty waveform");
  require(len <= bank.filters.cols, errc::waveform_too_long,
          "waveform length " + std::to_string(len) + " exceeds filter length " +
              std::to_string(bank.filters.cols));

  double wf_norm2 = 0.0;
  for (double v : waveform) wf_norm2 += v * v;
  const double wf_norm = std::sqrt(wf_norm2);
  require(wf_norm > 0.0, errc::zero_filter, "zero waveform");

  TemplateMatch best;
  for (int k = 0; k < bank.filters.rows; ++k) {
    const double* row = bank.filters.row(k);
    for (int lag = 0; lag + len <= bank.filters.cols; ++lag) {
      double dot = 0.0, seg_norm2 = 0.0;
      for (int i = 0; i < len; ++i) {
        dot += row[lag + i] * waveform[static_cast<std::size_t>(i)];
        seg_norm2 += row[lag + i] * row[lag + i];
      }
      if (seg_norm2 <= 0.0) continue;
      const double score = std::abs(dot) / (std::sqrt(seg_norm2) * wf_norm);
      if (score > best.best_score) {
        best.best_score = score;
        best.best_filter = k;
        best.best_lag = lag;
      }
    }
  }
  return best;
}

ModelGraph transfer_filters(const FilterBank& bank, const TargetSpec& target) {
  return build_target(target, InitMode::from_filterbank, &bank);
}

}  // namespace somn
