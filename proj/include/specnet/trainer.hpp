#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specnet/dataio.hpp"
#include "specnet/network.hpp"
#include "specnet/preprocess.hpp"

namespace specnet {

struct TrainingConfig {
  double learning_rate = 1e-4;
  std::size_t max_epochs = 100;
  std::size_t batch_size = 16;  // 0: one update per epoch over the full training set
  std::size_t patience = 10;
  double min_delta = 1e-6;      // improvement threshold on validation loss
  std::size_t folds = 10;
  std::uint64_t seed = 7;
  bool augment = true;
  bool pca = false;
  bool stratified = true;
  std::size_t workers = 1;      // folds trained concurrently by run_cv
  AugmentationPolicy augmentation;

  // Throws ConfigError naming the key.
  void validate() const;
};

// Disjoint, covering partition of [0, labels.size()) into k parts. When
// stratified, each class is shuffled and dealt round-robin, continuing the
// deal position across classes, so per-class and total part sizes each
// differ by at most one. Throws DatasetError if a class has fewer than k
// samples under stratification.
std::vector<std::vector<std::size_t>> kfold_partition(std::span<const std::size_t> labels, std::size_t k,
                                                      std::uint64_t seed, bool stratified);

struct FoldSplit {
  std::size_t fold = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  // Validation and test deliberately reuse the training samples (used to
  // train a final model on everything).
  bool resubstitution = false;
};

// Fold i tests on part i, validates on part (i + 1) mod k and trains on the
// rest. Requires k >= 3.
std::vector<FoldSplit> kfold_split(const LabeledDataset& dataset, std::size_t k, std::uint64_t seed,
                                   bool stratified);

FoldSplit resubstitution_split(const LabeledDataset& dataset);

// Patience-based early stopping on validation loss. Epochs are 1-based.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience, double min_delta = 1e-6);

  // Records the epoch; snapshots the parameters when the loss improves on the
  // best so far by more than min_delta. Returns true on improvement.
  bool observe(std::size_t epoch, double validation_loss, const Network<float>& net);

  bool should_stop() const noexcept { return stale_epochs_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_loss_; }
  void restore(Network<float>& net) const;

 private:
  std::size_t patience_;
  double min_delta_;
  std::size_t best_epoch_ = 0;
  double best_loss_;
  std::size_t stale_epochs_ = 0;
  std::vector<Tensor32> best_parameters_;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double train_accuracy = 0;
  double val_accuracy = 0;
  double seconds = 0;
};

struct FoldReport {
  std::size_t fold = 0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::vector<EpochMetrics> curve;
  double best_val_loss = 0;
  double best_val_accuracy = 0;
  double test_accuracy = 0;
  double inference_ms_per_image = 0;
  double mean_epoch_seconds = 0;
  double total_seconds = 0;
  std::size_t training_samples = 0;  // after augmentation

  // Leakage audit: source indices behind every augmented training sample,
  // and the held-out index sets.
  std::vector<std::size_t> augmented_sources;
  std::vector<std::size_t> validation_indices;
  std::vector<std::size_t> test_indices;
  bool resubstitution = false;
};

// Augmented samples whose source lies in the fold's validation or test set.
std::size_t leaked_samples(const FoldReport& report);

struct FoldResult {
  FoldReport report;
  Network<float> network;            // best-validation parameters
  std::optional<SpectralPCA> pca;    // basis applied to inputs when cfg.pca
};

using EpochObserver = std::function<void(const EpochMetrics&)>;

// Trains on split.train (augmented after the split when cfg.augment) with
// early stopping on split.validation, restores the best epoch and scores
// split.test. Input extents of `architecture` are taken from the data (3
// channels when cfg.pca). Throws DivergenceError on a non-finite loss.
FoldResult train_fold(const NetworkConfig& architecture, const LabeledDataset& dataset, const FoldSplit& split,
                      const TrainingConfig& cfg, const EpochObserver& observer = {});

// Top-1 accuracy of `net` on dataset[indices]; images are projected with
// `pca` when given.
double evaluate_accuracy(const Network<float>& net, const LabeledDataset& dataset,
                         std::span<const std::size_t> indices, const SpectralPCA* pca = nullptr);

// Over every sample.
double evaluate_accuracy(const Network<float>& net, const LabeledDataset& dataset,
                         const SpectralPCA* pca = nullptr);

struct GridRow {
  double learning_rate = 0;
  double val_accuracy = 0;
  bool diverged = false;
};

struct GridResult {
  double best_learning_rate = 0;
  std::vector<GridRow> table;  // ascending learning rate
};

// Highest validation accuracy; ties go to the smaller learning rate.
// Throws DivergenceError when every row diverged.
double select_learning_rate(std::span<const GridRow> table);

// Trains fold 0 once per distinct candidate with a shared seed.
GridResult grid_search(std::span<const double> candidates, const NetworkConfig& architecture,
                       const LabeledDataset& dataset, const TrainingConfig& cfg);

struct MeanSd {
  double mean = 0;
  double sd = 0;  // sample SD (divisor n - 1); 0 for n == 1
};

MeanSd mean_sd(std::span<const double> values);

// Percent with one decimal: "95.0 (7.1)".
std::string format_mean_sd(const MeanSd& fraction);

struct RunReport {
  std::vector<FoldReport> folds;
  MeanSd test_accuracy;
  double total_seconds = 0;
  double mean_epoch_seconds = 0;
  std::optional<GridResult> grid;
};

using FoldCallback = std::function<void(const FoldResult&)>;

// k-fold cross-validation. Folds run on cfg.workers threads; the report is
// identical for any worker count. The callback runs once per fold (serialized).
RunReport run_cv(const NetworkConfig& architecture, const LabeledDataset& dataset, const TrainingConfig& cfg,
                 const FoldCallback& on_fold = {});

}  // namespace specnet
