#pragma once

// CSV and JSON artifacts written by the command-line tool.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "specnet/benchmark.hpp"
#include "specnet/trainer.hpp"

namespace specnet {

// epoch,train_loss,val_loss,train_acc,val_acc
void write_curve_csv(const std::filesystem::path& path, const FoldReport& report);

// lr,val_acc (diverged candidates are written with val_acc "nan")
void write_grid_csv(const std::filesystem::path& path, const GridResult& grid);

struct InferenceRow {
  std::string method;
  std::string dataset;
  TimingStats timing;
};

// method,dataset,ms_per_image,sd_ms,repetitions
void write_inference_csv(const std::filesystem::path& path, const std::vector<InferenceRow>& rows);

struct TrainingTimeRow {
  std::string method;
  std::string dataset;
  double seconds_per_epoch = 0;
  double total_seconds = 0;
};

// method,dataset,seconds_per_epoch,total_seconds
void write_training_csv(const std::filesystem::path& path, const std::vector<TrainingTimeRow>& rows);

nlohmann::json fold_json(const FoldReport& report);
nlohmann::json run_summary_json(const RunReport& run);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace specnet
