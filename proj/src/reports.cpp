#include "specnet/reports.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "specnet/errors.hpp"

namespace specnet {

namespace {

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void write_curve_csv(const std::filesystem::path& path, const FoldReport& report) {
  std::ostringstream s;
  s << "epoch,train_loss,val_loss,train_acc,val_acc\n";
  for (const auto& m : report.curve) {
    s << m.epoch << ',' << number(m.train_loss) << ',' << number(m.val_loss) << ',' << number(m.train_accuracy)
      << ',' << number(m.val_accuracy) << '\n';
  }
  write_text(path, s.str());
}

void write_grid_csv(const std::filesystem::path& path, const GridResult& grid) {
  std::ostringstream s;
  s << "lr,val_acc\n";
  for (const auto& row : grid.table) {
    s << number(row.learning_rate) << ',' << (row.diverged ? "nan" : number(row.val_accuracy)) << '\n';
  }
  write_text(path, s.str());
}

void write_inference_csv(const std::filesystem::path& path, const std::vector<InferenceRow>& rows) {
  std::ostringstream s;
  s << "method,dataset,ms_per_image,sd_ms,repetitions\n";
  for (const auto& r : rows) {
    s << r.method << ',' << r.dataset << ',' << number(r.timing.mean_ms) << ',' << number(r.timing.sd_ms) << ','
      << r.timing.repetitions << '\n';
  }
  write_text(path, s.str());
}

void write_training_csv(const std::filesystem::path& path, const std::vector<TrainingTimeRow>& rows) {
  std::ostringstream s;
  s << "method,dataset,seconds_per_epoch,total_seconds\n";
  for (const auto& r : rows) {
    s << r.method << ',' << r.dataset << ',' << number(r.seconds_per_epoch) << ',' << number(r.total_seconds)
      << '\n';
  }
  write_text(path, s.str());
}

nlohmann::json fold_json(const FoldReport& r) {
  return {{"fold", r.fold},
          {"best_epoch", r.best_epoch},
          {"epochs_run", r.epochs_run},
          {"best_val_loss", r.best_val_loss},
          {"best_val_accuracy", r.best_val_accuracy},
          {"test_accuracy", r.test_accuracy},
          {"inference_ms_per_image", r.inference_ms_per_image},
          {"mean_epoch_seconds", r.mean_epoch_seconds},
          {"total_seconds", r.total_seconds},
          {"training_samples", r.training_samples},
          {"augmented_samples", r.augmented_sources.size()},
          {"leaked_samples", leaked_samples(r)}};
}

nlohmann::json run_summary_json(const RunReport& run) {
  nlohmann::json folds = nlohmann::json::array();
  std::size_t leaked = 0;
  for (const auto& f : run.folds) {
    folds.push_back(fold_json(f));
    leaked += leaked_samples(f);
  }
  nlohmann::json j = {{"folds", run.folds.size()},
                      {"test_accuracy", format_mean_sd(run.test_accuracy)},
                      {"test_accuracy_mean", run.test_accuracy.mean},
                      {"test_accuracy_sd", run.test_accuracy.sd},
                      {"mean_epoch_seconds", run.mean_epoch_seconds},
                      {"total_seconds", run.total_seconds},
                      {"leaked_samples", leaked},
                      {"per_fold", folds}};
  if (run.grid) {
    nlohmann::json table = nlohmann::json::array();
    for (const auto& row : run.grid->table) {
      table.push_back({{"lr", row.learning_rate}, {"val_acc", row.val_accuracy}, {"diverged", row.diverged}});
    }
    j["grid"] = {{"best_learning_rate", run.grid->best_learning_rate}, {"table", table}};
  }
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace specnet
