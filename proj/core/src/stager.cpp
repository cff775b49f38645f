#include "somn/stager.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "somn/error.hpp"
#include "somn/rng.hpp"

namespace somn {

TargetSpec TargetSpec::desk_default(std::uint64_t seed) {
  TargetSpec spec;
  spec.seed = seed;
  return spec;
}

namespace {

void append_block(ModelGraph& model, const ConvBlockSpec& block, int in_channels, int stride,
                  int pool_window, Rng& rng) {
  model.add(ConvLayer::random(block.filters, in_channels, block.filter_len, stride, rng));
  model.add(std::make_unique<MaxPoolLayer>(pool_window));
  model.add(std::make_unique<ReluLayer>());
}

}  // namespace

ModelGraph build_target(const TargetSpec& spec, InitMode init, const FilterBank* bank) {
  require(!spec.head.empty() && spec.head.back() == kNumStages, errc::invalid_config,
          "target head must end in 5 classes");
  if (init == InitMode::from_filterbank) {
    require(bank != nullptr, errc::invalid_config, "from_filterbank requires a bank");
    require(bank->filters.rows == spec.first_conv.filters &&
                bank->filters.cols == spec.first_conv.filter_len,
            errc::shape_mismatch,
            "filter bank " + std::to_string(bank->filters.rows) + "x" +
                std::to_string(bank->filters.cols) + " does not match target first layer " +
                std::to_string(spec.first_conv.filters) + "x" +
                std::to_string(spec.first_conv.filter_len));
  }

  ModelGraph model;
  model.set_seed(spec.seed);
  Rng rng(derive_seed(spec.seed, "target_init"));

  // Template condition: stride 1, pool window scaled by the original stride.
  const bool transferred = init == InitMode::from_filterbank;
  const int stride = transferred ? 1 : spec.first_conv.stride;
  const int pool = transferred ? spec.first_conv.pool_window * spec.first_conv.stride
                               : spec.first_conv.pool_window;
  append_block(model, spec.first_conv, 1, stride, pool, rng);

  int channels = spec.first_conv.filters;
  for (const auto& block : spec.trunk) {
    append_block(model, block, channels, block.stride, block.pool_window, rng);
    channels = block.filters;
  }

  const ActShape conv_out = model.output_shape({1, spec.input_length});
  int features = conv_out.first * conv_out.second;
  for (std::size_t i = 0; i < spec.head.size(); ++i) {
    model.add(DenseLayer::random(features, spec.head[i], rng));
    if (i + 1 < spec.head.size()) model.add(std::make_unique<ReluLayer>());
    features = spec.head[i];
  }
  model.add(std::make_unique<SoftmaxCELayer>());

  if (transferred) {
    auto& first = dynamic_cast<ConvLayer&>(model.layer(0));
    for (int k = 0; k < bank->filters.rows; ++k)
      for (int l = 0; l < bank->filters.cols; ++l) first.weight(k, 0, l) = bank->filters.at(k, l);
  }
  return model;
}

Tensor pack_epochs(const EpochSet& epochs, std::size_t begin, std::size_t end) {
  require(begin < end && end <= epochs.size(), errc::shape_mismatch, "bad epoch range");
  const int len = static_cast<int>(epochs.epochs[begin].values.size());
  Tensor x(static_cast<int>(end - begin), 1, len);
  for (std::size_t e = begin; e < end; ++e) {
    const auto& vals = epochs.epochs[e].values;
    require(static_cast<int>(vals.size()) == len, errc::shape_mismatch,
            "epochs have inconsistent lengths");
    std::copy(vals.begin(), vals.end(), x.row(static_cast<int>(e - begin), 0));
  }
  return x;
}

PredictionSet predict(const ModelGraph& model, const EpochSet& epochs) {
  require(!epochs.empty(), errc::too_short, "predict on empty epoch set");
  const int n = static_cast<int>(epochs.size());
  PredictionSet out;
  out.logits = Matrix(n, kNumStages);
  out.probabilities = Matrix(n, kNumStages);
  out.predicted.resize(static_cast<std::size_t>(n));
  out.truth.resize(static_cast<std::size_t>(n));

  constexpr std::size_t kChunk = 64;
  for (std::size_t begin = 0; begin < epochs.size(); begin += kChunk) {
    const std::size_t end = std::min(epochs.size(), begin + kChunk);
    const Tensor logits = model.logits(pack_epochs(epochs, begin, end));
    require(logits.channels == kNumStages && logits.length == 1, errc::shape_mismatch,
            "model does not produce 5 logits");
    const Matrix probs = softmax_rows(logits);
    for (std::size_t e = begin; e < end; ++e) {
      const int r = static_cast<int>(e - begin);
      int best = 0;
      for (int c = 0; c < kNumStages; ++c) {
        out.logits.at(static_cast<int>(e), c) = logits.at(r, c, 0);
        out.probabilities.at(static_cast<int>(e), c) = probs.at(r, c);
        if (probs.at(r, c) > probs.at(r, best)) best = c;
      }
      out.predicted[e] = static_cast<SleepStage>(best);
      out.truth[e] = epochs.epochs[e].label;
    }
  }
  return out;
}

TrainResult train(ModelGraph& model, const EpochSet& train_set, const EpochSet& val_set,
                  const TrainOptions& opts) {
  require(!train_set.empty() && !val_set.empty(), errc::too_short,
          "training and validation sets must be non-empty");
  require(opts.batch_size >= 1 && opts.max_epochs >= 0, errc::invalid_config,
          "bad training options");

  TrainResult result;
  SgdOptimizer optimizer(model, opts.lr, opts.momentum);
  Rng shuffle_rng(derive_seed(model.seed(), "train_shuffle"));

  ModelGraph best = model;
  result.best_val_f1 = macro_f1(predict(model, val_set));
  result.best_epoch = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  ModelGraph::Grads grads = model.make_grads();

  int since_best = 0;
  double current_lr = opts.lr;
  for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    for (const int milestone : opts.lr_milestones) {
      if (epoch == milestone) {
        current_lr *= opts.lr_decay;
        optimizer.set_lr(current_lr);
      }
    }
    deterministic_shuffle(order, shuffle_rng);
    double loss_sum = 0.0;
    int steps = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(opts.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(opts.batch_size));
      const int bsize = static_cast<int>(end - begin);
      Tensor x(bsize, 1, static_cast<int>(train_set.epochs[order[begin]].values.size()));
      std::vector<int> labels(static_cast<std::size_t>(bsize));
      for (std::size_t i = begin; i < end; ++i) {
        const auto& ep = train_set.epochs[order[i]];
        std::copy(ep.values.begin(), ep.values.end(), x.row(static_cast<int>(i - begin), 0));
        labels[i - begin] = static_cast<int>(ep.label);
      }
      grads.zero();
      const double loss = model.loss_and_gradients(x, labels, grads);
      require(std::isfinite(loss), errc::diverged, "training loss is not finite");
      optimizer.step(model, grads);
      loss_sum += loss;
      ++steps;
    }

    const double val_f1 = macro_f1(predict(model, val_set));
    result.history.push_back({epoch, loss_sum / std::max(1, steps), val_f1});
    if (epoch == opts.snapshot_from_epoch) {
      // Earlier epochs are no longer eligible; restart the tracking here.
      result.best_val_f1 = val_f1;
      result.best_epoch = epoch;
      best = model;
      since_best = 0;
      continue;
    }
    if (val_f1 > result.best_val_f1) {
      result.best_val_f1 = val_f1;
      result.best_epoch = epoch;
      best = model;
      since_best = 0;
    } else {
      ++since_best;
      if (opts.patience > 0 && since_best >= opts.patience) break;
    }
  }
  if (opts.restore_best) model = best;
  return result;
}

}  // namespace somn
