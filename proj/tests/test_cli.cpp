#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using oracle::file_text;
using oracle::run_cli;

namespace {

struct Scratch {
  fs::path dir = oracle::scratch_dir("cli");
  ~Scratch() { fs::remove_all(dir); }
  std::string p(const std::string& rel) const { return (dir / rel).string(); }
};

void write(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

}  // namespace

TEST_CASE("help and usage errors") {
  Scratch s;
  const auto log = s.dir / "log.txt";
  for (const char* cmd : {"gen", "augment", "pca", "train", "cv", "grid", "eval", "bench"}) {
    CHECK(run_cli(std::string(cmd) + " --help", log) == 0);
    const std::string help = file_text(log);
    CHECK(help.find("--") != std::string::npos);
    if (std::string(cmd) == "cv") {
      CHECK(help.find("--workers") != std::string::npos);
      CHECK(help.find("0.0001") != std::string::npos);  // default learning rate shown
    }
  }
  CHECK(run_cli("", log) == 2);
  CHECK(run_cli("cv --no-such-flag", log) == 2);
  CHECK(run_cli("gen --out " + s.p("g") + " --per-class 0", log) == 2);
  CHECK(file_text(log).find("per-class") != std::string::npos);
  CHECK(run_cli("gen --out " + s.p("g") + " --shape 4x4", log) == 2);
}

TEST_CASE("gen writes a deterministic dataset") {
  Scratch s;
  const auto log = s.dir / "log.txt";
  REQUIRE(run_cli("gen --shape 32x32x8 --per-class 64 --seed 7 --out " + s.p("a"), log) == 0);
  REQUIRE(run_cli("gen --shape 32x32x8 --per-class 64 --seed 7 --out " + s.p("b"), log) == 0);
  CHECK(count_files(s.dir / "a", ".msi") == 256);
  CHECK(fs::exists(s.dir / "a" / "manifest.csv"));
  for (const auto& e : fs::directory_iterator(s.dir / "a")) {
    CHECK(oracle::file_bytes(e.path()) == oracle::file_bytes(s.dir / "b" / e.path().filename()));
  }
}

TEST_CASE("cv from a run spec writes curves and a mean (SD) summary") {
  Scratch s;
  const auto log = s.dir / "log.txt";
  write(s.dir / "run.json", R"({
    "version": 1,
    "data": {"synthetic": {"height": 8, "width": 8, "channels": 4, "per_class": 4}},
    "output": "cv",
    "network": {"preset": "tiny"},
    "training": {"folds": 3, "max_epochs": 2, "augment": false, "learning_rate": 0.001}
  })");
  REQUIRE(run_cli("cv --spec " + s.p("run.json") + " --workers 2", log) == 0);
  CHECK(count_files(s.dir / "cv", ".csv") == 3 + 1);  // fold curves + training times
  CHECK(file_text(s.dir / "cv" / "fold_00.csv").rfind("epoch,train_loss,val_loss,train_acc,val_acc\n", 0) == 0);
  const auto summary = nlohmann::json::parse(file_text(s.dir / "cv" / "summary.json"));
  const std::string acc = summary.at("test_accuracy");
  CHECK(acc.find(" (") != std::string::npos);
  CHECK(summary.at("folds") == 3);
  CHECK(file_text(log).find("mean (SD)") != std::string::npos);

  // Flags win over the run spec.
  REQUIRE(run_cli("cv --spec " + s.p("run.json") + " --folds 4 --out " + s.p("cv4"), log) == 0);
  CHECK(nlohmann::json::parse(file_text(s.dir / "cv4" / "summary.json")).at("folds") == 4);
}

TEST_CASE("a memorized checkpoint evaluates to accuracy 1 on its training images") {
  Scratch s;
  const auto log = s.dir / "log.txt";
  REQUIRE(run_cli("gen --shape 8x8x3 --per-class 1 --out " + s.p("four"), log) == 0);
  write(s.dir / "run.json", R"({
    "version": 1,
    "network": {"preset": "tiny", "dropout_post_pool": 0, "dropout_post_fc": 0},
    "training": {"max_epochs": 300, "patience": 300, "batch_size": 0, "augment": false, "learning_rate": 0.05}
  })");
  REQUIRE(run_cli("train --spec " + s.p("run.json") + " --manifest " + s.p("four/manifest.csv") +
                      " --no-holdout --out " + s.p("mem"),
                  log) == 0);
  REQUIRE(run_cli("eval --checkpoint " + s.p("mem/best.spnw") + " --manifest " + s.p("four/manifest.csv"), log) == 0);
  CHECK(file_text(log).find("accuracy 1.000000 over 4 images") != std::string::npos);
}

TEST_CASE("exit codes name the failure class") {
  Scratch s;
  const auto log = s.dir / "log.txt";
  CHECK(run_cli("cv --manifest " + s.p("missing.csv") + " --out " + s.p("o"), log) == 5);
  CHECK(file_text(log).find("missing.csv") != std::string::npos);

  REQUIRE(run_cli("gen --shape 8x8x3 --per-class 4 --out " + s.p("d"), log) == 0);
  {
    std::ofstream corrupt(s.dir / "d" / "class0_00000.msi", std::ios::binary);
    corrupt << "MSI1";
  }
  CHECK(run_cli("cv --manifest " + s.p("d/manifest.csv") + " --out " + s.p("o"), log) == 3);
  CHECK(file_text(log).find("class0_00000.msi") != std::string::npos);

  write(s.dir / "bad.json", R"({"version": 1, "training": {"patience": 0}, "data": {"synthetic": {}}})");
  CHECK(run_cli("cv --spec " + s.p("bad.json"), log) == 2);
  CHECK(file_text(log).find("training.patience") != std::string::npos);

  REQUIRE(run_cli("gen --shape 8x8x3 --per-class 4 --out " + s.p("ok"), log) == 0);
  CHECK(run_cli("train --manifest " + s.p("ok/manifest.csv") + " --preset tiny --folds 4 --augment false --lr 1e30 "
                "--epochs 20 --out " + s.p("div"),
                log) == 4);
  CHECK(file_text(log).find("epoch") != std::string::npos);
}

TEST_CASE("augment, pca, grid and bench artifacts") {
  Scratch s;
  const auto log = s.dir / "log.txt";
  REQUIRE(run_cli("gen --shape 8x8x6 --per-class 3 --out " + s.p("d"), log) == 0);
  const std::string data = " --manifest " + s.p("d/manifest.csv");

  REQUIRE(run_cli("augment" + data + " --out " + s.p("aug"), log) == 0);
  CHECK(count_files(s.dir / "aug", ".msi") == 12 * 28);

  REQUIRE(run_cli("pca" + data + " --project --out " + s.p("pca"), log) == 0);
  CHECK(fs::exists(s.dir / "pca" / "basis.spca"));
  CHECK(count_files(s.dir / "pca" / "projected", ".msi") == 12);

  REQUIRE(run_cli("grid" + data + " --preset tiny --folds 3 --epochs 1 --augment false --lrs 0.01,0.001 --out " +
                      s.p("grid"),
                  log) == 0);
  CHECK(file_text(s.dir / "grid" / "grid.csv").rfind("lr,val_acc\n", 0) == 0);

  for (const char* p : {"direct", "pca"}) {
    REQUIRE(run_cli("bench" + data + " --preset tiny --folds 3 --pipeline " + p +
                        " --warmup 2 --repetitions 5 --out " + s.p("bench"),
                    log) == 0);
    const std::string csv = file_text(s.dir / "bench" / (std::string("inference_") + p + ".csv"));
    CHECK(csv.rfind("method,dataset,ms_per_image,sd_ms,repetitions\n", 0) == 0);
  }
  CHECK(file_text(s.dir / "bench" / "training_times.csv").rfind("method,dataset,seconds_per_epoch,total_seconds\n",
                                                                 0) == 0);
}
