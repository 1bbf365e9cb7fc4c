#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "specnet/trainer.hpp"

namespace specnet {

RunReport run_cv(const NetworkConfig& architecture, const LabeledDataset& dataset, const TrainingConfig& cfg,
                 const FoldCallback& on_fold) {
  cfg.validate();
  dataset.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto splits = kfold_split(dataset, cfg.folds, cfg.seed, cfg.stratified);

  std::vector<std::optional<FoldReport>> reports(splits.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  // Each fold is a pure function of (seed, fold), so scheduling order does
  // not affect the results.
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= splits.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        FoldResult r = train_fold(architecture, dataset, splits[i], cfg);
        if (on_fold) {
          std::lock_guard lock(callback_mutex);
          on_fold(r);
        }
        reports[i] = std::move(r.report);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const std::size_t threads = std::min(cfg.workers, splits.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  RunReport run;
  std::vector<double> accuracies;
  double epoch_seconds = 0;
  for (auto& r : reports) {
    accuracies.push_back(r->test_accuracy);
    epoch_seconds += r->mean_epoch_seconds;
    run.folds.push_back(std::move(*r));
  }
  run.test_accuracy = mean_sd(accuracies);
  run.mean_epoch_seconds = epoch_seconds / static_cast<double>(run.folds.size());
  run.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

}  // namespace specnet
