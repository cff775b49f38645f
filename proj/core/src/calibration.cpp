#include "somn/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "somn/error.hpp"

namespace somn {

std::vector<double> confidence(const PredictionSet& p) {
  std::vector<double> out(static_cast<std::size_t>(p.size()));
  for (int i = 0; i < p.size(); ++i) {
    double mx = p.probabilities.at(i, 0);
    for (int c = 1; c < kNumStages; ++c) mx = std::max(mx, p.probabilities.at(i, c));
    out[static_cast<std::size_t>(i)] = mx;
  }
  return out;
}

CalibrationReport ece(const PredictionSet& p, int num_bins) {
  require(p.size() >= 1, errc::too_short, "ECE of empty prediction set");
  require(num_bins >= 1, errc::invalid_config, "ECE needs at least one bin");

  CalibrationReport report;
  report.num_bins = num_bins;
  report.bins.resize(static_cast<std::size_t>(num_bins));
  for (int m = 0; m < num_bins; ++m) {
    report.bins[static_cast<std::size_t>(m)].lo = static_cast<double>(m) / num_bins;
    report.bins[static_cast<std::size_t>(m)].hi = static_cast<double>(m + 1) / num_bins;
  }

  const std::vector<double> conf = confidence(p);
  std::vector<double> conf_sum(static_cast<std::size_t>(num_bins), 0.0);
  std::vector<int> correct(static_cast<std::size_t>(num_bins), 0);
  for (int i = 0; i < p.size(); ++i) {
    const double c = conf[static_cast<std::size_t>(i)];
    // Right-closed bins: confidence c lands in bin ceil(c * M) - 1. The ceil
    // can round across a representable edge (0.9 * 10 > 9), so nudge until
    // lo < c <= hi holds against the stored bin edges.
    int m = static_cast<int>(std::ceil(c * num_bins)) - 1;
    m = std::clamp(m, 0, num_bins - 1);
    while (m > 0 && c <= static_cast<double>(m) / num_bins) --m;
    while (m < num_bins - 1 && c > static_cast<double>(m + 1) / num_bins) ++m;
    auto& bin = report.bins[static_cast<std::size_t>(m)];
    ++bin.count;
    conf_sum[static_cast<std::size_t>(m)] += c;
    if (p.predicted[static_cast<std::size_t>(i)] == p.truth[static_cast<std::size_t>(i)])
      ++correct[static_cast<std::size_t>(m)];
  }

  double total = 0.0;
  for (int m = 0; m < num_bins; ++m) {
    auto& bin = report.bins[static_cast<std::size_t>(m)];
    if (bin.count == 0) continue;
    bin.mean_confidence = conf_sum[static_cast<std::size_t>(m)] / bin.count;
    bin.accuracy = static_cast<double>(correct[static_cast<std::size_t>(m)]) / bin.count;
    bin.included = bin.count >= 50;
    total += static_cast<double>(bin.count) / p.size() *
             std::abs(bin.accuracy - bin.mean_confidence);
  }
  report.ece = total;
  return report;
}

double mean_nll(const PredictionSet& p, double temperature) {
  require(temperature > 0.0, errc::invalid_config, "temperature must be > 0");
  double total = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    double mx = p.logits.at(i, 0) / temperature;
    for (int c = 1; c < kNumStages; ++c) mx = std::max(mx, p.logits.at(i, c) / temperature);
    double sum = 0.0;
    for (int c = 0; c < kNumStages; ++c) sum += std::exp(p.logits.at(i, c) / temperature - mx);
    const double log_z = mx + std::log(sum);
    const int y = static_cast<int>(p.truth[static_cast<std::size_t>(i)]);
    total += log_z - p.logits.at(i, y) / temperature;
  }
  return total / p.size();
}

double fit_temperature(const PredictionSet& val) {
  require(val.size() >= 1, errc::too_short, "fit_temperature needs predictions");
  for (std::size_t i = 0; i < val.logits.v.size(); ++i)
    require(std::isfinite(val.logits.v[i]), errc::non_finite, "non-finite logit");

  constexpr double kLo = 0.05, kHi = 20.0, kTol = 1e-4;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

  double a = kLo, b = kHi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = mean_nll(val, c);
  double fd = mean_nll(val, d);
  while (b - a > kTol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = mean_nll(val, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = mean_nll(val, d);
    }
  }
  const double t_gold = (a + b) / 2.0;

  // T = 1 and the interval bounds always compete with the golden result; in a
  // saturated monotone case the bound wins the tie so the limit is returned
  // exactly.
  double best_t = t_gold;
  double best_nll = mean_nll(val, t_gold);
  for (double cand : {1.0, kHi, kLo}) {
    const double nll = mean_nll(val, cand);
    if (nll <= best_nll) {
      best_nll = nll;
      best_t = cand;
    }
  }
  return best_t;
}

PredictionSet apply_temperature(const PredictionSet& p, double temperature) {
  require(temperature > 0.0, errc::invalid_config, "temperature must be > 0");
  PredictionSet out = p;
  for (int i = 0; i < p.size(); ++i) {
    double mx = p.logits.at(i, 0) / temperature;
    for (int c = 1; c < kNumStages; ++c) mx = std::max(mx, p.logits.at(i, c) / temperature);
    double sum = 0.0;
    for (int c = 0; c < kNumStages; ++c) {
      const double e = std::exp(p.logits.at(i, c) / temperature - mx);
      out.probabilities.at(i, c) = e;
      sum += e;
    }
    for (int c = 0; c < kNumStages; ++c) out.probabilities.at(i, c) /= sum;
  }
  return out;  // predicted labels untouched: argmax is scale-invariant
}

}  // namespace somn
