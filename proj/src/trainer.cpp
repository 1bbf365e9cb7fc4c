#include "specnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace specnet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t argmax(const Tensor32& t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] > t[best]) best = i;
  return best;
}

struct Example {
  const Tensor32* pixels;
  std::size_t label;
};

struct LossAccuracy {
  double loss = 0;
  double accuracy = 0;
};

LossAccuracy evaluate(const Network<float>& net, std::span<const Example> examples) {
  LossAccuracy out;
  if (examples.empty()) return out;
  std::size_t correct = 0;
  for (const Example& e : examples) {
    const auto r = forward(net, *e.pixels);
    out.loss += cross_entropy(r.probs, e.label);
    correct += argmax(r.probs) == e.label ? 1 : 0;
  }
  out.loss /= static_cast<double>(examples.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
  return out;
}

}  // namespace

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("training.learning_rate must be > 0");
  if (patience < 1) throw ConfigError("training.patience must be >= 1");
  if (folds < 2) throw ConfigError("training.folds must be >= 2");
  if (max_epochs < 1) throw ConfigError("training.max_epochs must be >= 1");
  if (!(min_delta >= 0.0)) throw ConfigError("training.min_delta must be >= 0");
  if (workers < 1) throw ConfigError("training.workers must be >= 1");
}

std::vector<std::vector<std::size_t>> kfold_partition(std::span<const std::size_t> labels, std::size_t k,
                                                      std::uint64_t seed, bool stratified) {
  if (k < 2) throw ConfigError("folds must be >= 2, got " + std::to_string(k));
  if (labels.size() < k) {
    throw DatasetError("cannot split " + std::to_string(labels.size()) + " samples into " + std::to_string(k) +
                       " folds");
  }
  std::vector<std::vector<std::size_t>> groups;
  if (stratified) {
    const std::size_t classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    groups.resize(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
    for (std::size_t c = 0; c < classes; ++c) {
      if (!groups[c].empty() && groups[c].size() < k) {
        throw DatasetError("class " + std::to_string(c) + " has " + std::to_string(groups[c].size()) +
                           " samples, fewer than the " + std::to_string(k) + " folds required for stratification");
      }
    }
  } else {
    groups.emplace_back(labels.size());
    std::iota(groups[0].begin(), groups[0].end(), 0);
  }

  std::vector<std::vector<std::size_t>> parts(k);
  std::size_t deal = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Rng rng = make_rng(seed, "folds", {g});
    std::shuffle(groups[g].begin(), groups[g].end(), rng);
    for (std::size_t idx : groups[g]) parts[deal++ % k].push_back(idx);
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

std::vector<FoldSplit> kfold_split(const LabeledDataset& dataset, std::size_t k, std::uint64_t seed,
                                   bool stratified) {
  if (k < 3) {
    throw ConfigError("training.folds must be >= 3 so that each fold has distinct test, validation and training parts");
  }
  const auto labels = dataset.labels();
  const auto parts = kfold_partition(labels, k, seed, stratified);
  std::vector<FoldSplit> splits(k);
  for (std::size_t i = 0; i < k; ++i) {
    FoldSplit& s = splits[i];
    s.fold = i;
    s.test = parts[i];
    s.validation = parts[(i + 1) % k];
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i || j == (i + 1) % k) continue;
      s.train.insert(s.train.end(), parts[j].begin(), parts[j].end());
    }
    std::sort(s.train.begin(), s.train.end());
  }
  return splits;
}

FoldSplit resubstitution_split(const LabeledDataset& dataset) {
  FoldSplit s;
  s.train.resize(dataset.size());
  std::iota(s.train.begin(), s.train.end(), 0);
  s.validation = s.train;
  s.test = s.train;
  s.resubstitution = true;
  return s;
}

EarlyStopping::EarlyStopping(std::size_t patience, double min_delta)
    : patience_(patience), min_delta_(min_delta), best_loss_(std::numeric_limits<double>::infinity()) {
  if (patience_ < 1) throw ConfigError("early stopping patience must be >= 1");
}

bool EarlyStopping::observe(std::size_t epoch, double validation_loss, const Network<float>& net) {
  const bool improved =
      best_epoch_ == 0 ? std::isfinite(validation_loss) : validation_loss < best_loss_ - min_delta_;
  if (improved) {
    best_loss_ = validation_loss;
    best_epoch_ = epoch;
    stale_epochs_ = 0;
    best_parameters_ = snapshot_parameters(net);
  } else {
    ++stale_epochs_;
  }
  return improved;
}

void EarlyStopping::restore(Network<float>& net) const {
  if (best_parameters_.empty()) throw StateError("early stopping has no recorded best epoch to restore");
  restore_parameters(net, best_parameters_);
}

std::size_t leaked_samples(const FoldReport& report) {
  if (report.resubstitution) return 0;
  std::set<std::size_t> held_out(report.validation_indices.begin(), report.validation_indices.end());
  held_out.insert(report.test_indices.begin(), report.test_indices.end());
  std::size_t leaked = 0;
  for (std::size_t s : report.augmented_sources) leaked += held_out.count(s);
  return leaked;
}

double evaluate_accuracy(const Network<float>& net, const LabeledDataset& dataset,
                         std::span<const std::size_t> indices, const SpectralPCA* pca) {
  if (indices.empty()) throw DatasetError("evaluate_accuracy: no samples");
  std::size_t correct = 0;
  for (std::size_t i : indices) {
    const Sample& s = dataset.samples.at(i);
    const auto r = pca ? forward(net, apply_pca(*pca, s.image).pixels) : forward(net, s.image.pixels);
    correct += argmax(r.probs) == s.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

double evaluate_accuracy(const Network<float>& net, const LabeledDataset& dataset, const SpectralPCA* pca) {
  std::vector<std::size_t> all(dataset.size());
  std::iota(all.begin(), all.end(), 0);
  return evaluate_accuracy(net, dataset, all, pca);
}

FoldResult train_fold(const NetworkConfig& architecture, const LabeledDataset& dataset, const FoldSplit& split,
                      const TrainingConfig& cfg, const EpochObserver& observer) {
  cfg.validate();
  dataset.validate();
  if (split.train.empty() || split.validation.empty()) {
    throw DatasetError("fold " + std::to_string(split.fold) + ": empty training or validation split");
  }
  if (!split.resubstitution) {
    std::set<std::size_t> train(split.train.begin(), split.train.end());
    for (std::size_t v : split.validation) {
      if (train.count(v)) {
        throw DatasetError("fold " + std::to_string(split.fold) + ": sample " + std::to_string(v) +
                           " is in both the training and validation splits");
      }
    }
  }
  const auto t_fold = Clock::now();

  // Post-split augmentation: only the training part is ever transformed.
  const TrainingSplit training_split = make_training_split(dataset, split.train);
  std::vector<Sample> training =
      cfg.augment ? augment_split(training_split, cfg.augmentation) : training_split.samples();

  FoldReport report;
  std::optional<SpectralPCA> pca;
  report.fold = split.fold;
  report.resubstitution = split.resubstitution;
  report.validation_indices = split.validation;
  report.test_indices = split.test;
  report.training_samples = training.size();
  for (const Sample& s : training) {
    if (s.provenance == Provenance::augmented) report.augmented_sources.push_back(s.source_index);
  }

  auto held_out = [&](std::span<const std::size_t> idx) {
    std::vector<Sample> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(dataset.samples.at(i));
    return out;
  };
  std::vector<Sample> validation = held_out(split.validation);
  std::vector<Sample> test = held_out(split.test);

  if (cfg.pca) {
    std::vector<MultispectralImage> fit_images;
    for (const Sample& s : training_split.samples()) fit_images.push_back(s.image);
    pca = fit_pca(fit_images);
    for (auto* group : {&training, &validation, &test}) {
      for (Sample& s : *group) s.image = apply_pca(*pca, s.image);
    }
  }

  auto examples_of = [](const std::vector<Sample>& samples) {
    std::vector<Example> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) out.push_back({&s.image.pixels, s.label});
    return out;
  };
  const std::vector<Example> train_ex = examples_of(training);
  const std::vector<Example> val_ex = examples_of(validation);
  const std::vector<Example> test_ex = examples_of(test);

  NetworkConfig config = architecture;
  const Shape& input = training.front().image.pixels.shape();
  config.height = input[0];
  config.width = input[1];
  config.channels = input[2];
  Rng init_rng = make_rng(cfg.seed, "init", {split.fold});
  Network<float> net = build<float>(config, init_rng);
  BackpropState<float> state(net);
  EarlyStopping stopper(cfg.patience, cfg.min_delta);

  const std::size_t n = train_ex.size();
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t_epoch = Clock::now();
    if (cfg.batch_size != 0) {
      Rng shuffle_rng = make_rng(cfg.seed, "shuffle", {split.fold, epoch});
      std::shuffle(order.begin(), order.end(), shuffle_rng);
    }
    double loss_sum = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      for (std::size_t j = start; j < stop; ++j) {
        const Example& e = train_ex[order[j]];
        Rng dropout_rng = make_rng(cfg.seed, "dropout", {split.fold, epoch, j});
        const auto fr = forward(net, *e.pixels, Mode::train, dropout_rng);
        const double loss = cross_entropy(fr.probs, e.label);
        if (!std::isfinite(loss) || !std::isfinite(fr.logits[argmax(fr.logits)])) {
          throw DivergenceError(epoch, "training diverged: non-finite loss in epoch " + std::to_string(epoch));
        }
        loss_sum += loss;
        correct += argmax(fr.probs) == e.label ? 1 : 0;
        backward(net, fr.cache, e.label, state);
      }
      sgd_step(net, state, cfg.learning_rate);
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(n);
    m.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    const LossAccuracy val = evaluate(net, val_ex);
    m.val_loss = val.loss;
    m.val_accuracy = val.accuracy;
    if (!std::isfinite(m.val_loss)) {
      throw DivergenceError(epoch, "training diverged: non-finite validation loss in epoch " + std::to_string(epoch));
    }
    m.seconds = seconds_since(t_epoch);
    report.curve.push_back(m);
    if (observer) observer(m);
    stopper.observe(epoch, m.val_loss, net);
    if (stopper.should_stop()) break;
  }

  stopper.restore(net);
  report.epochs_run = report.curve.size();
  report.best_epoch = stopper.best_epoch();
  report.best_val_loss = report.curve[report.best_epoch - 1].val_loss;
  report.best_val_accuracy = report.curve[report.best_epoch - 1].val_accuracy;
  double epoch_seconds = 0;
  for (const auto& m : report.curve) epoch_seconds += m.seconds;
  report.mean_epoch_seconds = epoch_seconds / static_cast<double>(report.epochs_run);

  if (!test_ex.empty()) {
    const auto t_test = Clock::now();
    report.test_accuracy = evaluate(net, test_ex).accuracy;
    report.inference_ms_per_image = 1e3 * seconds_since(t_test) / static_cast<double>(test_ex.size());
  } else {
    report.test_accuracy = std::numeric_limits<double>::quiet_NaN();
  }
  report.total_seconds = seconds_since(t_fold);
  return FoldResult{std::move(report), std::move(net), std::move(pca)};
}

double select_learning_rate(std::span<const GridRow> table) {
  const GridRow* best = nullptr;
  for (const GridRow& row : table) {
    if (row.diverged) continue;
    if (best == nullptr || row.val_accuracy > best->val_accuracy ||
        (row.val_accuracy == best->val_accuracy && row.learning_rate < best->learning_rate)) {
      best = &row;
    }
  }
  if (best == nullptr) throw DivergenceError(0, "grid search: every learning-rate candidate diverged");
  return best->learning_rate;
}

GridResult grid_search(std::span<const double> candidates, const NetworkConfig& architecture,
                       const LabeledDataset& dataset, const TrainingConfig& cfg) {
  if (candidates.size() < 2) throw ConfigError("grid search needs at least 2 learning-rate candidates");
  std::vector<double> rates(candidates.begin(), candidates.end());
  std::sort(rates.begin(), rates.end());
  rates.erase(std::unique(rates.begin(), rates.end()), rates.end());
  for (double r : rates) {
    if (!(r > 0.0)) throw ConfigError("grid search learning rates must be > 0");
  }

  const auto splits = kfold_split(dataset, cfg.folds, cfg.seed, cfg.stratified);
  GridResult result;
  for (double rate : rates) {
    TrainingConfig c = cfg;
    c.learning_rate = rate;
    GridRow row{rate, 0.0, false};
    try {
      row.val_accuracy = train_fold(architecture, dataset, splits.front(), c).report.best_val_accuracy;
    } catch (const DivergenceError&) {
      row.diverged = true;
    }
    result.table.push_back(row);
  }
  result.best_learning_rate = select_learning_rate(result.table);
  return result;
}

MeanSd mean_sd(std::span<const double> values) {
  MeanSd out;
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

std::string format_mean_sd(const MeanSd& fraction) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f (%.1f)", 100.0 * fraction.mean, 100.0 * fraction.sd);
  return buf;
}

}  // namespace specnet
