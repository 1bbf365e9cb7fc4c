// specnet: dataset generation, augmentation, PCA, training, cross-validation,
// grid search, evaluation and benchmarking from the command line.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "specnet/benchmark.hpp"
#include "specnet/config_json.hpp"
#include "specnet/dataio.hpp"
#include "specnet/errors.hpp"
#include "specnet/network.hpp"
#include "specnet/preprocess.hpp"
#include "specnet/reports.hpp"
#include "specnet/runspec.hpp"
#include "specnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace specnet;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kData = 3, kDivergence = 4, kIo = 5 };

std::string num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// Flags shared by the run-spec driven commands. Unset flags leave the run
// spec (or its defaults) untouched.
struct Overrides {
  std::string spec;
  std::string manifest;
  bool synthetic = false;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> preset;
  std::optional<double> learning_rate;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> folds;
  std::optional<bool> augment;
  std::optional<bool> pca;
  std::optional<bool> stratified;
  std::optional<std::size_t> per_class;
};

void add_common(CLI::App* cmd, Overrides& o) {
  const RunSpec d;
  cmd->add_option("--spec", o.spec, "run spec (JSON, versioned schema)");
  cmd->add_option("--manifest", o.manifest, "dataset manifest; replaces the run spec's data source");
  cmd->add_flag("--synthetic", o.synthetic, "use the synthetic generator as the data source");
  cmd->add_option("--out", o.out, "output directory")->default_str(d.output.string());
  cmd->add_option("--seed", o.seed, "seed for every random stream")->default_str(std::to_string(d.training.seed));
  cmd->add_option("--workers", o.workers, "folds trained concurrently")
      ->default_str(std::to_string(default_workers()));
  cmd->add_option("--preset", o.preset, "network preset: paper, desk or tiny")->default_str(d.preset);
  cmd->add_option("--lr", o.learning_rate, "learning rate")->default_str(num(d.training.learning_rate));
  cmd->add_option("--epochs", o.epochs, "maximum epochs")->default_str(std::to_string(d.training.max_epochs));
  cmd->add_option("--batch-size", o.batch_size, "mini-batch size, 0 for full batch")
      ->default_str(std::to_string(d.training.batch_size));
  cmd->add_option("--patience", o.patience, "early-stopping patience in epochs")
      ->default_str(std::to_string(d.training.patience));
  cmd->add_option("--folds", o.folds, "cross-validation folds")->default_str(std::to_string(d.training.folds));
  cmd->add_option("--augment", o.augment, "augment training splits (true/false)")->default_str("true");
  cmd->add_option("--pca", o.pca, "project inputs to 3 PCA channels (true/false)")->default_str("false");
  cmd->add_option("--stratified", o.stratified, "class-stratified folds (true/false)")->default_str("true");
  cmd->add_option("--per-class", o.per_class, "synthetic samples per class")
      ->default_str(std::to_string(d.synthetic_spec.per_class));
}

RunSpec resolve(const Overrides& o) {
  RunSpec spec = o.spec.empty() ? RunSpec{} : load_run_spec(o.spec);
  if (o.spec.empty()) spec.training.workers = default_workers();
  if (!o.manifest.empty()) {
    spec.manifest = o.manifest;
    spec.synthetic = false;
  }
  if (o.synthetic) {
    spec.synthetic = true;
    spec.manifest.clear();
  }
  if (!spec.synthetic && spec.manifest.empty()) spec.synthetic = true;
  if (!o.out.empty()) spec.output = o.out;
  if (o.seed) spec.set_seed(*o.seed);
  if (o.workers) spec.training.workers = *o.workers;
  if (o.preset) spec.preset = *o.preset;
  if (o.learning_rate) spec.training.learning_rate = *o.learning_rate;
  if (o.epochs) spec.training.max_epochs = *o.epochs;
  if (o.batch_size) spec.training.batch_size = *o.batch_size;
  if (o.patience) spec.training.patience = *o.patience;
  if (o.folds) spec.training.folds = *o.folds;
  if (o.augment) spec.training.augment = *o.augment;
  if (o.pca) spec.training.pca = *o.pca;
  if (o.stratified) spec.training.stratified = *o.stratified;
  if (o.per_class) spec.synthetic_spec.per_class = *o.per_class;
  spec.validate();
  return spec;
}

void make_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::string dataset_label(const RunSpec& spec) {
  return spec.synthetic ? "synthetic" : spec.manifest.parent_path().filename().string();
}

NetworkConfig architecture_for(const RunSpec& spec, const LabeledDataset& data) {
  const Shape& s = data.samples.front().image.pixels.shape();
  NetworkConfig config = spec.network_for(s[0], s[1], spec.training.pca ? 3 : s[2]);
  config.class_count = std::max<std::size_t>(config.class_count, data.class_names.size());
  return config;
}

LabeledDataset load_nonempty(const RunSpec& spec) {
  LabeledDataset data = load_run_data(spec);
  if (data.size() == 0) throw DatasetError("dataset is empty");
  return data;
}

void print_epoch(const EpochMetrics& m) {
  std::printf("epoch %3zu  train_loss %.5f  val_loss %.5f  train_acc %.4f  val_acc %.4f  (%.2fs)\n", m.epoch,
              m.train_loss, m.val_loss, m.train_accuracy, m.val_accuracy, m.seconds);
  std::fflush(stdout);
}

std::string fold_name(std::size_t fold, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fold_%02zu%s", fold, ext);
  return buf;
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  std::string shape = "32x32x8";
  std::size_t per_class = 64;
  std::uint64_t seed = 7;
  double noise = 0.15;
  std::string payload = "f32";
  std::string out;
};

SyntheticSpec parse_shape(const std::string& text, SyntheticSpec s) {
  std::size_t h = 0, w = 0, c = 0;
  char x1 = 0, x2 = 0;
  std::istringstream in(text);
  if (!(in >> h >> x1 >> w >> x2 >> c) || x1 != 'x' || x2 != 'x' || !in.eof() || h == 0 || w == 0 || c == 0) {
    throw ConfigError("--shape: expected HxWxC with positive extents, got '" + text + "'");
  }
  s.height = h;
  s.width = w;
  s.channels = c;
  return s;
}

int cmd_gen(const GenArgs& a) {
  if (a.per_class < 1) throw ConfigError("--per-class must be >= 1");
  SyntheticSpec spec = parse_shape(a.shape, {});
  spec.per_class = a.per_class;
  spec.seed = a.seed;
  spec.noise_sd = a.noise;
  const PayloadKind kind = a.payload == "u16" ? PayloadKind::u16 : PayloadKind::f32;
  const LabeledDataset data = generate_synthetic(spec);
  make_output_dir(a.out);
  const fs::path manifest = write_dataset(a.out, data, kind);
  std::printf("wrote %zu samples of shape %zux%zux%zu to %s\n", data.size(), spec.height, spec.width,
              spec.channels, manifest.string().c_str());
  return kOk;
}

// ---- augment ---------------------------------------------------------------

int cmd_augment(const Overrides& o, const std::vector<double>& angles) {
  RunSpec spec = resolve(o);
  if (!angles.empty()) spec.training.augmentation.rotation_angles_deg = angles;
  const LabeledDataset data = load_nonempty(spec);
  LabeledDataset out;
  out.class_names = data.class_names;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Sample& s = data.samples[i];
    out.samples.push_back({s.image, s.label, s.provenance, i});
    for (auto& fake : augment(s.image, spec.training.augmentation)) {
      out.samples.push_back({std::move(fake), s.label, Provenance::augmented, i});
    }
  }
  make_output_dir(spec.output);
  const fs::path manifest = write_dataset(spec.output, out);
  std::printf("wrote %zu samples (%zu source, %zu fakes each) to %s\n", out.size(), data.size(),
              spec.training.augmentation.transforms().size(), manifest.string().c_str());
  return kOk;
}

// ---- pca -------------------------------------------------------------------

int cmd_pca(const Overrides& o, bool project) {
  const RunSpec spec = resolve(o);
  const LabeledDataset data = load_nonempty(spec);
  std::vector<MultispectralImage> images;
  for (const auto& s : data.samples) images.push_back(s.image);
  const SpectralPCA pca = fit_pca(images);
  make_output_dir(spec.output);
  write_pca(spec.output / "basis.spca", pca);
  std::printf("%zu -> 3 channels; explained variance %.6g %.6g %.6g\n", pca.channels(),
              pca.explained_variance[0], pca.explained_variance[1], pca.explained_variance[2]);
  if (project) {
    LabeledDataset projected = data;
    for (auto& s : projected.samples) s.image = apply_pca(pca, s.image);
    const fs::path manifest = write_dataset(spec.output / "projected", projected);
    std::printf("projected dataset: %s\n", manifest.string().c_str());
  }
  return kOk;
}

// ---- train -----------------------------------------------------------------

int cmd_train(const Overrides& o, bool no_holdout, std::size_t fold) {
  const RunSpec spec = resolve(o);
  const LabeledDataset data = load_nonempty(spec);
  const NetworkConfig arch = architecture_for(spec, data);
  FoldSplit split;
  if (no_holdout) {
    split = resubstitution_split(data);
  } else {
    auto splits = kfold_split(data, spec.training.folds, spec.training.seed, spec.training.stratified);
    if (fold >= splits.size()) throw ConfigError("--fold must be < training.folds");
    split = splits[fold];
  }
  make_output_dir(spec.output);
  write_json(spec.output / "run_spec.json", to_json(spec));
  const FoldResult r = train_fold(arch, data, split, spec.training, print_epoch);
  write_checkpoint(spec.output / "best.spnw", r.network);
  if (r.pca) write_pca(spec.output / "basis.spca", *r.pca);
  write_curve_csv(spec.output / "curve.csv", r.report);
  write_json(spec.output / "summary.json", fold_json(r.report));
  std::printf("best epoch %zu of %zu; test accuracy %.4f\n", r.report.best_epoch, r.report.epochs_run,
              r.report.test_accuracy);
  return kOk;
}

// ---- cv --------------------------------------------------------------------

int cmd_cv(const Overrides& o) {
  const RunSpec spec = resolve(o);
  const LabeledDataset data = load_nonempty(spec);
  const NetworkConfig arch = architecture_for(spec, data);
  make_output_dir(spec.output);
  write_json(spec.output / "run_spec.json", to_json(spec));
  const RunReport run = run_cv(arch, data, spec.training, [&](const FoldResult& r) {
    write_curve_csv(spec.output / fold_name(r.report.fold, ".csv"), r.report);
    write_checkpoint(spec.output / fold_name(r.report.fold, ".spnw"), r.network);
    if (r.pca) write_pca(spec.output / fold_name(r.report.fold, ".spca"), *r.pca);
    std::printf("fold %zu: best epoch %zu of %zu, test accuracy %.4f\n", r.report.fold, r.report.best_epoch,
                r.report.epochs_run, r.report.test_accuracy);
    std::fflush(stdout);
  });
  write_json(spec.output / "summary.json", run_summary_json(run));
  write_training_csv(spec.output / "training_times.csv",
                     {{"specnet-" + spec.preset, dataset_label(spec), run.mean_epoch_seconds, run.total_seconds}});
  std::printf("test accuracy mean (SD): %s\n", format_mean_sd(run.test_accuracy).c_str());
  return kOk;
}

// ---- grid ------------------------------------------------------------------

int cmd_grid(const Overrides& o, const std::vector<double>& rates) {
  RunSpec spec = resolve(o);
  if (!rates.empty()) spec.grid_learning_rates = rates;
  const LabeledDataset data = load_nonempty(spec);
  const NetworkConfig arch = architecture_for(spec, data);
  make_output_dir(spec.output);
  write_json(spec.output / "run_spec.json", to_json(spec));
  const GridResult grid = grid_search(spec.grid_learning_rates, arch, data, spec.training);
  write_grid_csv(spec.output / "grid.csv", grid);
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : grid.table) {
    std::printf("lr %-10g val_acc %s\n", row.learning_rate, row.diverged ? "diverged" : num(row.val_accuracy).c_str());
    table.push_back({{"lr", row.learning_rate}, {"val_acc", row.val_accuracy}, {"diverged", row.diverged}});
  }
  write_json(spec.output / "summary.json", {{"best_learning_rate", grid.best_learning_rate}, {"table", table}});
  std::printf("best learning rate %g\n", grid.best_learning_rate);
  return kOk;
}

// ---- eval ------------------------------------------------------------------

int cmd_eval(const std::string& checkpoint, const std::string& manifest, const std::string& pca_path) {
  const Network<float> net = read_checkpoint<float>(checkpoint);
  const LabeledDataset data = load_dataset(manifest);
  if (data.size() == 0) throw DatasetError(manifest + ": no samples");
  std::optional<SpectralPCA> pca;
  if (!pca_path.empty()) pca = read_pca(pca_path);
  const double acc = evaluate_accuracy(net, data, pca ? &*pca : nullptr);
  std::printf("accuracy %.6f over %zu images\n", acc, data.size());
  return kOk;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string pipeline = "both";
  std::string checkpoint;
  std::string pca_path;
  std::size_t train_epochs = 1;
  std::optional<std::size_t> warmup;
  std::optional<std::size_t> repetitions;
};

int cmd_bench(const Overrides& o, const BenchArgs& a) {
  RunSpec spec = resolve(o);
  if (a.warmup) spec.bench.warmup = *a.warmup;
  if (a.repetitions) spec.bench.repetitions = *a.repetitions;
  if (spec.bench.repetitions < 1) throw ConfigError("--repetitions must be >= 1");
  std::vector<Pipeline> pipelines;
  if (a.pipeline == "both") {
    pipelines = {Pipeline::direct, Pipeline::pca};
  } else {
    pipelines = {parse_pipeline(a.pipeline)};
  }
  const bool wants_pca = pipelines.back() == Pipeline::pca;

  const LabeledDataset data = load_nonempty(spec);
  std::vector<MultispectralImage> images;
  for (const auto& s : data.samples) images.push_back(s.image);
  const std::size_t data_channels = images.front().channels();

  // Both pipelines classify with one network; it sees the 3-channel PCA
  // representation whenever a basis is involved.
  std::optional<Network<float>> net;
  if (!a.checkpoint.empty()) net.emplace(read_checkpoint<float>(a.checkpoint));
  const std::size_t net_channels =
      net ? net->config().channels : (wants_pca || spec.training.pca ? 3 : data_channels);
  std::optional<SpectralPCA> pca;
  if (net_channels != data_channels || wants_pca) {
    pca = a.pca_path.empty() ? fit_pca(images) : read_pca(a.pca_path);
    if (net_channels != 3) {
      throw DimensionError("bench: network expects " + std::to_string(net_channels) +
                           " channels but the pca pipeline produces 3");
    }
  }
  if (!net) {
    NetworkConfig arch = spec.network_for(images.front().height(), images.front().width(), net_channels);
    Rng rng = make_rng(spec.training.seed, "init", {0});
    net.emplace(build<float>(arch, rng));
  }

  make_output_dir(spec.output);
  std::vector<InferenceRow> rows;
  const std::string method = "specnet-" + spec.preset;
  if (pipelines.size() == 2) {
    const PipelineComparison cmp = benchmark_pipelines(*net, images, *pca, spec.bench);
    rows.push_back({method + "-direct", dataset_label(spec), cmp.direct});
    rows.push_back({method + "-pca", dataset_label(spec), cmp.pca});
  } else {
    const TimingStats t = benchmark(*net, images, pipelines[0], pca ? &*pca : nullptr, spec.bench);
    rows.push_back({method + "-" + std::string(pipeline_name(pipelines[0])), dataset_label(spec), t});
  }
  for (const auto& r : rows) {
    write_inference_csv(spec.output / ("inference_" + r.method.substr(method.size() + 1) + ".csv"), {r});
    std::printf("%-24s %.4f ms/image (sd %.4f, %zu reps)\n", r.method.c_str(), r.timing.mean_ms, r.timing.sd_ms,
                r.timing.repetitions);
  }
  write_inference_csv(spec.output / "inference_times.csv", rows);

  if (a.train_epochs > 0) {
    TrainingConfig cfg = spec.training;
    cfg.max_epochs = a.train_epochs;
    cfg.pca = net_channels != data_channels;
    NetworkConfig arch = architecture_for(spec, data);
    const auto splits = kfold_split(data, cfg.folds, cfg.seed, cfg.stratified);
    const FoldResult r = train_fold(arch, data, splits.front(), cfg);
    write_training_csv(spec.output / "training_times.csv",
                       {{method, dataset_label(spec), r.report.mean_epoch_seconds, r.report.total_seconds}});
    std::printf("training: %.3f s/epoch, %.3f s total over %zu epochs\n", r.report.mean_epoch_seconds,
                r.report.total_seconds, r.report.epochs_run);
  }
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return kDivergence;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const ConfigError*>(&e)) return kUsage;
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const DatasetError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const DegenerateError*>(&e)) {
    return kData;
  }
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multispectral image CNN: data, training, evaluation and timing"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 2 usage, 3 data/format, 4 divergence, 5 I/O.");

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "write a synthetic dataset (MSI files + manifest.csv)");
  c_gen->add_option("--shape", gen.shape, "image shape HxWxC")->capture_default_str();
  c_gen->add_option("--per-class", gen.per_class, "samples per class")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  c_gen->add_option("--noise", gen.noise, "pixel noise SD")->capture_default_str();
  c_gen->add_option("--payload", gen.payload, "MSI payload encoding")
      ->check(CLI::IsMember({"f32", "u16"}))
      ->capture_default_str();
  c_gen->add_option("--out", gen.out, "output directory")->required();

  Overrides aug_o;
  std::vector<double> aug_angles;
  auto* c_aug = app.add_subcommand("augment", "write every image plus its flipped/rotated fakes");
  add_common(c_aug, aug_o);
  c_aug->add_option("--angles", aug_angles, "rotation angles in degrees")->delimiter(',')->default_str(
      "-90,-60,-30,0,30,60,90");

  Overrides pca_o;
  bool pca_project = false;
  auto* c_pca = app.add_subcommand("pca", "fit the 3-component spectral PCA basis");
  add_common(c_pca, pca_o);
  c_pca->add_flag("--project", pca_project, "also write the projected 3-channel dataset");

  Overrides train_o;
  bool no_holdout = false;
  std::size_t train_fold_index = 0;
  auto* c_train = app.add_subcommand("train", "train one fold with early stopping and save the best checkpoint");
  add_common(c_train, train_o);
  c_train->add_flag("--no-holdout", no_holdout, "train, validate and test on every sample");
  c_train->add_option("--fold", train_fold_index, "fold to train")->capture_default_str();

  Overrides cv_o;
  auto* c_cv = app.add_subcommand("cv", "k-fold cross-validation");
  add_common(c_cv, cv_o);

  Overrides grid_o;
  std::vector<double> grid_rates;
  auto* c_grid = app.add_subcommand("grid", "learning-rate grid search on fold 0");
  add_common(c_grid, grid_o);
  c_grid->add_option("--lrs", grid_rates, "candidate learning rates")->delimiter(',')->default_str(
      "0.01,0.001,0.0001,1e-05");

  std::string eval_ckpt, eval_manifest, eval_pca;
  auto* c_eval = app.add_subcommand("eval", "top-1 accuracy of a checkpoint on a manifest");
  c_eval->add_option("--checkpoint", eval_ckpt, "network checkpoint")->required();
  c_eval->add_option("--manifest", eval_manifest, "dataset manifest")->required();
  c_eval->add_option("--basis", eval_pca, "PCA basis applied before classification");

  Overrides bench_o;
  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "per-image classification and per-epoch training times");
  add_common(c_bench, bench_o);
  c_bench->add_option("--pipeline", bench.pipeline, "direct, pca or both (interleaved)")
      ->check(CLI::IsMember({"direct", "pca", "both"}))
      ->capture_default_str();
  c_bench->add_option("--checkpoint", bench.checkpoint, "network checkpoint (default: freshly initialized)");
  c_bench->add_option("--basis", bench.pca_path, "PCA basis file (default: fitted on the data)");
  c_bench->add_option("--train-epochs", bench.train_epochs, "epochs timed for the training CSV, 0 to skip")
      ->capture_default_str();
  c_bench->add_option("--warmup", bench.warmup, "warm-up passes")->default_str("10");
  c_bench->add_option("--repetitions", bench.repetitions, "measured passes")->default_str("100");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*c_gen) return cmd_gen(gen);
    if (*c_aug) return cmd_augment(aug_o, aug_angles);
    if (*c_pca) return cmd_pca(pca_o, pca_project);
    if (*c_train) return cmd_train(train_o, no_holdout, train_fold_index);
    if (*c_cv) return cmd_cv(cv_o);
    if (*c_grid) return cmd_grid(grid_o, grid_rates);
    if (*c_eval) return cmd_eval(eval_ckpt, eval_manifest, eval_pca);
    if (*c_bench) return cmd_bench(bench_o, bench);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  }
  return kUsage;
}
