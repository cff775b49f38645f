#include "somn/sweeps.hpp"

#include <algorithm>

#include "somn/error.hpp"
#include "somn/rng.hpp"

namespace somn {

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

SweepTable noise_sweep(const ModelGraph& template_model, const ModelGraph& baseline_model,
                       const EpochSet& test, std::span<const double> scales,
                       std::span<const std::uint64_t> seeds, int ece_bins) {
  require(!scales.empty() && std::find(scales.begin(), scales.end(), 0.0) != scales.end(),
          errc::invalid_config, "noise scales must include 0");
  require(!seeds.empty(), errc::invalid_config, "noise sweep needs at least one seed");
  require(template_model.param_count() == baseline_model.param_count(), errc::invalid_config,
          "template and baseline models must have identical parameter counts");

  const double ref_std = pooled_std(test);

  SweepTable table;
  table.condition_name = "noise_scale";
  table.seed_count = static_cast<int>(seeds.size());
  for (const double scale : scales) {
    SweepRow row;
    row.condition = scale;
    for (const std::uint64_t seed : seeds) {
      const EpochSet noisy = add_gaussian_noise(test, scale, ref_std, seed);
      const PredictionSet pt = predict(template_model, noisy);
      const PredictionSet pb = predict(baseline_model, noisy);
      row.template_f1.per_seed.push_back(macro_f1(pt));
      row.baseline_f1.per_seed.push_back(macro_f1(pb));
      row.template_ece.per_seed.push_back(ece(pt, ece_bins).ece);
      row.baseline_ece.per_seed.push_back(ece(pb, ece_bins).ece);
    }
    row.template_f1.mean = mean_of(row.template_f1.per_seed);
    row.baseline_f1.mean = mean_of(row.baseline_f1.per_seed);
    row.template_ece.mean = mean_of(row.template_ece.per_seed);
    row.baseline_ece.mean = mean_of(row.baseline_ece.per_seed);
    table.rows.push_back(std::move(row));
  }
  return table;
}

EpochSet filter_by_subjects(const EpochSet& pool, const std::vector<std::string>& subjects) {
  require(pool.subjects.size() == pool.epochs.size(), errc::invalid_config,
          "epoch set lacks subject attribution");
  EpochSet out;
  for (std::size_t i = 0; i < pool.epochs.size(); ++i) {
    if (std::find(subjects.begin(), subjects.end(), pool.subjects[i]) != subjects.end()) {
      out.epochs.push_back(pool.epochs[i]);
      out.subjects.push_back(pool.subjects[i]);
    }
  }
  return out;
}

SweepTable train_size_sweep(const SizeSweepConfig& cfg, std::span<const int> sizes,
                            std::span<const std::uint64_t> seeds) {
  require(cfg.train && cfg.val && cfg.test, errc::invalid_config, "size sweep needs data sets");
  require(!sizes.empty() && !seeds.empty(), errc::invalid_config,
          "size sweep needs sizes and seeds");
  require(cfg.train->subjects.size() == cfg.train->epochs.size(), errc::invalid_config,
          "training pool lacks subject attribution");

  std::vector<std::string> all_subjects;
  for (const auto& s : cfg.train->subjects) {
    if (std::find(all_subjects.begin(), all_subjects.end(), s) == all_subjects.end())
      all_subjects.push_back(s);
  }
  const int max_size = *std::max_element(sizes.begin(), sizes.end());
  require(max_size <= static_cast<int>(all_subjects.size()), errc::invalid_config,
          "requested more subjects than available");
  for (std::size_t i = 1; i < sizes.size(); ++i)
    require(sizes[i] <= sizes[i - 1], errc::invalid_config, "sizes must be non-increasing");
  for (const int s : sizes)
    require(s >= 1, errc::invalid_config, "sizes must be >= 1");

  SweepTable table;
  table.condition_name = "train_subjects";
  table.seed_count = static_cast<int>(seeds.size());

  for (const int size : sizes) {
    SweepRow row;
    row.condition = size;
    for (const std::uint64_t seed : seeds) {
      std::vector<std::string> shuffled = all_subjects;
      Rng rng(derive_seed(seed, "size_subsample"));
      deterministic_shuffle(shuffled, rng);
      shuffled.resize(static_cast<std::size_t>(size));
      const EpochSet subset = filter_by_subjects(*cfg.train, shuffled);
      require(!subset.empty(), errc::too_short, "subject subset has no epochs");

      const PretrainOutput pre = pretrain(subset, *cfg.val, cfg.pretrain_cfg,
                                          derive_seed(seed, "size_pretrain"));

      TargetSpec spec = cfg.target;
      spec.seed = derive_seed(seed, "size_target");
      ModelGraph tmpl = build_target(spec, InitMode::from_filterbank, &pre.bank);
      ModelGraph base = build_target(spec, InitMode::random);
      require(tmpl.param_count() == base.param_count(), errc::invalid_config,
              "template/baseline parameter counts diverged");
      train(tmpl, subset, *cfg.val, cfg.train_opts);
      train(base, subset, *cfg.val, cfg.train_opts);

      const PredictionSet pt = predict(tmpl, *cfg.test);
      const PredictionSet pb = predict(base, *cfg.test);
      row.template_f1.per_seed.push_back(macro_f1(pt));
      row.baseline_f1.per_seed.push_back(macro_f1(pb));
      row.template_ece.per_seed.push_back(ece(pt, cfg.ece_bins).ece);
      row.baseline_ece.per_seed.push_back(ece(pb, cfg.ece_bins).ece);
    }
    row.template_f1.mean = mean_of(row.template_f1.per_seed);
    row.baseline_f1.mean = mean_of(row.baseline_f1.per_seed);
    row.template_ece.mean = mean_of(row.template_ece.per_seed);
    row.baseline_ece.mean = mean_of(row.baseline_ece.per_seed);
    table.rows.push_back(std::move(row));
  }

  // Ratio columns relative to the largest size (the first row).
  const SweepRow& head = table.rows.front();
  for (auto& row : table.rows) {
    row.template_f1_ratio = head.template_f1.mean != 0.0 ? row.template_f1.mean / head.template_f1.mean : 0.0;
    row.baseline_f1_ratio = head.baseline_f1.mean != 0.0 ? row.baseline_f1.mean / head.baseline_f1.mean : 0.0;
    row.template_ece_ratio = head.template_ece.mean != 0.0 ? row.template_ece.mean / head.template_ece.mean : 0.0;
    row.baseline_ece_ratio = head.baseline_ece.mean != 0.0 ? row.baseline_ece.mean / head.baseline_ece.mean : 0.0;
  }
  return table;
}

}  // namespace somn
