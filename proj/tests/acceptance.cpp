// Acceptance run: one PASS/FAIL line per criterion; exits non-zero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "json.hpp"
#include "oracles.hpp"
#include "specnet/dataio.hpp"
#include "specnet/kernels.hpp"
#include "specnet/network.hpp"
#include "specnet/preprocess.hpp"
#include "specnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace specnet;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_err(double a, double n) {
  const double scale = std::max(std::abs(a), std::abs(n));
  return scale < 1e-10 ? std::abs(a - n) : std::abs(a - n) / scale;
}

Tensor64 uniform_tensor(const Shape& s, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor64 t(s);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

double dot(const Tensor64& a, const Tensor64& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double worst_fd(Tensor64& x, const Tensor64& analytic, const std::function<double()>& f, double h) {
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f();
    x[i] = keep - h;
    const double down = f();
    x[i] = keep;
    worst = std::max(worst, rel_err(analytic[i], (up - down) / (2 * h)));
  }
  return worst;
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
  // End to end: every parameter of the tiny preset (dropout off) in f64.
  NetworkConfig cfg = NetworkConfig::tiny();
  cfg.dropout_post_pool = cfg.dropout_post_fc = 0;
  Rng rng = make_rng(2024, "init");
  Network<double> net = build<double>(cfg, rng);
  std::mt19937_64 gen(77);
  for (auto* p : net.parameters()) {
    if (p->rank() == 1) *p = uniform_tensor(p->shape(), gen, -0.1, 0.1);
  }
  std::size_t checked = 0, passed = 0;
  double worst_e2e = 0;
  for (std::size_t label = 0; label < 2; ++label) {
    const Tensor64 img = uniform_tensor(cfg.input_shape(), gen, 0, 1);
    BackpropState<double> state(net);
    backward(net, forward(net, img).cache, label, state);
    auto loss = [&] { return cross_entropy(forward(net, img).probs, label); };
    auto params = net.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
      Tensor64& t = *params[p];
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double keep = t[i];
        t[i] = keep + 1e-6;
        const double up = loss();
        t[i] = keep - 1e-6;
        const double down = loss();
        t[i] = keep;
        const double e = rel_err(state.gradients[p][i], (up - down) / 2e-6);
        worst_e2e = std::max(worst_e2e, e);
        ++checked;
        passed += e < 1e-4;
      }
    }
  }

  // Per layer: gradients of a random linear functional of each layer's output.
  // Conv and dense outputs are linear in each single input or parameter, so a
  // wide step leaves no truncation error and keeps cancellation small; relu and
  // max-pool are piecewise linear and take a narrow step to stay off kinks.
  const double linear_h = 1e-2, kink_h = 1e-5;
  double worst_layer = 0;
  {
    ConvLayer<double> conv(4, 3, 2);
    conv.kernel = uniform_tensor(conv.kernel.shape(), gen);
    conv.bias = uniform_tensor(conv.bias.shape(), gen);
    Tensor64 x = uniform_tensor(Shape{8, 8, 2}, gen);
    const Tensor64 r = uniform_tensor(conv.output_shape(x.shape()), gen);
    const auto g = conv_backward(conv, x, r);
    auto f = [&] { return dot(conv_forward(conv, x), r); };
    worst_layer = std::max({worst_layer, worst_fd(x, g.input, f, linear_h),
                            worst_fd(conv.kernel, g.kernel, f, linear_h), worst_fd(conv.bias, g.bias, f, linear_h)});
  }
  {
    DenseLayer<double> dense(32, 16);
    dense.weights = uniform_tensor(dense.weights.shape(), gen);
    dense.bias = uniform_tensor(dense.bias.shape(), gen);
    Tensor64 x = uniform_tensor(Shape{32}, gen);
    const Tensor64 r = uniform_tensor(Shape{16}, gen);
    const auto g = dense_backward(dense, x, r);
    auto f = [&] { return dot(dense_forward(dense, x), r); };
    worst_layer = std::max({worst_layer, worst_fd(x, g.input, f, linear_h),
                            worst_fd(dense.weights, g.weights, f, linear_h), worst_fd(dense.bias, g.bias, f, linear_h)});
  }
  {
    Tensor64 x = uniform_tensor(Shape{8, 8, 4}, gen);
    const Tensor64 r = uniform_tensor(Shape{4, 4, 4}, gen);
    PoolRecord rec;
    maxpool_forward(MaxPoolLayer{}, x, rec);
    const Tensor64 g = maxpool_backward(rec, r);
    auto f = [&] {
      PoolRecord tmp;
      return dot(maxpool_forward(MaxPoolLayer{}, x, tmp), r);
    };
    worst_layer = std::max(worst_layer, worst_fd(x, g, f, kink_h));
  }
  {
    Tensor64 x = uniform_tensor(Shape{64}, gen);
    const Tensor64 r = uniform_tensor(Shape{64}, gen);
    const Tensor64 g = relu_backward(x, r);
    auto f = [&] { return dot(relu_forward(x), r); };
    worst_layer = std::max(worst_layer, worst_fd(x, g, f, kink_h));
  }
  return {passed == checked && worst_layer < 1e-5,
          fmt("%zu/%zu parameters within 1e-4 (worst %.2e); per-layer worst %.2e < 1e-5", passed, checked,
              worst_e2e, worst_layer)};
}

Outcome conv_oracle() {
  std::mt19937_64 rng(50);
  std::size_t instances = 0, exact = 0, runs = 0;
  std::vector<kernels::Isa> isas{kernels::Isa::scalar};
  if (kernels::isa_available(kernels::Isa::avx2)) isas.push_back(kernels::Isa::avx2);
  const kernels::Isa before = kernels::active_isa();
  while (instances < 50) {
    const std::size_t h = 1 + rng() % 9, w = 1 + rng() % 9, c = 1 + rng() % 4, f = 4;
    const std::size_t k = 1 + 2 * (rng() % 3), stride = 1 + rng() % 2, pad = rng() % 3;
    if (h + 2 * pad < k || w + 2 * pad < k) continue;
    if ((h + 2 * pad - k) % stride || (w + 2 * pad - k) % stride) continue;
    ++instances;
    ConvLayer<float> layer(f, k, c, stride, pad);
    std::uniform_real_distribution<float> u(-1, 1);
    for (auto& v : layer.kernel.data()) v = u(rng);
    for (auto& v : layer.bias.data()) v = u(rng);
    Tensor32 x(Shape{h, w, c});
    for (auto& v : x.data()) v = u(rng);
    std::size_t oh = 0, ow = 0;
    const auto expect = oracle::conv2d(std::vector<float>(x.data().begin(), x.data().end()), h, w, c,
                                       std::vector<float>(layer.kernel.data().begin(), layer.kernel.data().end()),
                                       std::vector<float>(layer.bias.data().begin(), layer.bias.data().end()), f, k,
                                       stride, pad, oh, ow);
    for (kernels::Isa isa : isas) {
      kernels::set_active_isa(isa);
      const Tensor32 y = conv_forward(layer, x);
      ++runs;
      exact += y.shape() == Shape{oh, ow, f} && std::equal(expect.begin(), expect.end(), y.data().begin());
    }
  }
  kernels::set_active_isa(before);
  return {exact == runs, fmt("%zu/%zu bit-identical (%zu instances x %zu kernel variants)", exact, runs, instances,
                             isas.size())};
}

Outcome shape_audit() {
  const std::vector<std::pair<std::size_t, std::size_t>> blocks{{32, 2}, {64, 2}, {128, 3}, {256, 3}};
  const NetworkPlan a = plan_network(NetworkConfig::paper(128, 128, 16));
  const NetworkPlan b = plan_network(NetworkConfig::paper(128, 60, 42));
  const auto oa = oracle::trace_vgg(128, 128, blocks, 3);
  const auto ob = oracle::trace_vgg(128, 60, blocks, 3);
  const bool ok = a.flatten_width == 16384 && oa.flatten_width == 16384 && b.flatten_width == 6144 &&
                  ob.flatten_width == 6144 && a.weighted_layers == 13 && b.weighted_layers == 13 &&
                  oa.weighted_layers == 13;
  return {ok, fmt("flatten %zu / %zu (oracle %zu / %zu), weighted layers %zu (oracle %zu)", a.flatten_width,
                  b.flatten_width, oa.flatten_width, ob.flatten_width, a.weighted_layers, oa.weighted_layers)};
}

Outcome desk_learning() {
  const fs::path dir = oracle::scratch_dir("accept_cv");
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  const std::string args = "cv --synthetic --preset desk --folds 5 --patience 10 --lr 0.01 --augment false "
                           "--workers " + std::to_string(workers) + " --out " + (dir / "cv").string();
  const int rc = oracle::run_cli(args, dir / "log.txt");
  if (rc != 0) return {false, fmt("cv exited with %d: %s", rc, oracle::file_text(dir / "log.txt").c_str())};
  const auto summary = nlohmann::json::parse(oracle::file_text(dir / "cv" / "summary.json"));
  const double mean = summary.at("test_accuracy_mean");
  const std::string shown = summary.at("test_accuracy");
  std::size_t curves = 0;
  for (const auto& e : fs::directory_iterator(dir / "cv")) curves += e.path().filename().string().rfind("fold_", 0) == 0 && e.path().extension() == ".csv";
  fs::remove_all(dir);
  return {mean >= 0.95 && summary.at("folds") == 5 && curves == 5 && shown.find('(') != std::string::npos,
          fmt("mean (SD) test accuracy %s %% over 5 folds (>= 95.0 required)", shown.c_str())};
}

Outcome augmentation_contract() {
  const LabeledDataset ds = generate_synthetic(SyntheticSpec{});
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  const auto samples = augment_split(make_training_split(ds, all));
  std::vector<std::size_t> fakes(ds.size(), 0);
  bool labels_ok = true;
  for (const Sample& s : samples) {
    if (s.provenance != Provenance::augmented) continue;
    ++fakes[s.source_index];
    labels_ok = labels_ok && s.label == ds.samples[s.source_index].label;
  }
  const bool all27 = std::all_of(fakes.begin(), fakes.end(), [](std::size_t n) { return n == 27; });
  bool involution = true;
  for (const Sample& s : ds.samples) {
    for (Flip f : {Flip::horizontal, Flip::vertical, Flip::both}) {
      involution = involution && apply_transform(apply_transform(s.image, {f, 0}), {f, 0}) == s.image;
    }
  }

  // Full cross-validation run with augmentation: the tool's own audit plus an
  // independent recount from the fold reports.
  const fs::path dir = oracle::scratch_dir("accept_aug");
  const int rc = oracle::run_cli("cv --synthetic --per-class 10 --preset desk --folds 5 --epochs 1 --augment true "
                                 "--lr 0.01 --workers 1 --out " + (dir / "cv").string(),
                                 dir / "log.txt");
  std::size_t cli_leaked = 1, cli_augmented = 0;
  if (rc == 0) {
    const auto summary = nlohmann::json::parse(oracle::file_text(dir / "cv" / "summary.json"));
    cli_leaked = summary.at("leaked_samples");
    for (const auto& f : summary.at("per_fold")) cli_augmented += f.at("augmented_samples").get<std::size_t>();
  }
  fs::remove_all(dir);

  SyntheticSpec small;
  small.per_class = 10;
  const LabeledDataset sd = generate_synthetic(small);
  TrainingConfig cfg;
  cfg.folds = 5;
  cfg.max_epochs = 1;
  cfg.learning_rate = 0.01;
  const RunReport run = run_cv(NetworkConfig::desk(32, 32, 8), sd, cfg);
  std::size_t leaked = 0, augmented = 0;
  for (const auto& f : run.folds) {
    std::set<std::size_t> held(f.validation_indices.begin(), f.validation_indices.end());
    held.insert(f.test_indices.begin(), f.test_indices.end());
    for (std::size_t src : f.augmented_sources) leaked += held.count(src);
    augmented += f.augmented_sources.size();
  }
  const bool ok = all27 && labels_ok && involution && rc == 0 && cli_leaked == 0 && cli_augmented > 0 &&
                  leaked == 0 && augmented > 0;
  return {ok, fmt("27 fakes for each of %zu images: %s; labels kept: %s; flips involutive: %s; "
                  "leakage over full cv runs: tool %zu of %zu fakes, recount %zu of %zu",
                  ds.size(), all27 ? "yes" : "no", labels_ok ? "yes" : "no", involution ? "yes" : "no", cli_leaked,
                  cli_augmented, leaked, augmented)};
}

Outcome xavier_statistics() {
  Rng rng = make_rng(6, "xavier");
  const std::size_t n = 1000000;
  const Tensor64 w = xavier_init<double>(InitSpec{144, 288}, Shape{n}, rng);
  double mean = 0;
  for (double v : w.data()) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (double v : w.data()) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double sigma = std::sqrt(2.0 / 432.0);
  const double sd_dev = std::abs(sd / sigma - 1);
  const double mean_z = std::abs(mean) / (sigma / std::sqrt(static_cast<double>(n)));
  return {sd_dev < 0.01 && mean_z < 4,
          fmt("SD %.6f vs %.6f (%.3f%% off), mean %.2e = %.2f standard errors", sd, sigma, 100 * sd_dev, mean, mean_z)};
}

Outcome softmax_identities() {
  const Tensor64 uniform = softmax(Tensor64(Shape{4}, 0.0));
  const double l = cross_entropy(uniform, 0);
  const bool ln4 = std::abs(l - std::log(4.0)) < 1e-9;

  // Network output error against central differences of softmax-CE in the logits.
  Rng rng = make_rng(3, "init");
  const Network<double> net = build<double>(NetworkConfig::tiny(), rng);
  std::mt19937_64 gen(5);
  double worst = 0;
  for (std::size_t label = 0; label < 4; ++label) {
    const Tensor64 img = uniform_tensor(net.config().input_shape(), gen, 0, 1);
    const auto fr = forward(net, img);
    BackpropState<double> state(net);
    backward(net, fr.cache, label, state);
    const Tensor64& delta = state.errors.back();
    for (std::size_t i = 0; i < 4; ++i) {
      Tensor64 up = fr.logits, down = fr.logits;
      up[i] += 1e-5;
      down[i] -= 1e-5;
      const double fd = (cross_entropy(softmax(up), label) - cross_entropy(softmax(down), label)) / 2e-5;
      worst = std::max(worst, std::abs(delta[i] - fd));
    }
  }

  const Tensor64 big = softmax(Tensor64(Shape{4}, std::vector<double>{1e4, -1e4, 0, 1e4 - 1}));
  const Tensor32 bigf = softmax(Tensor32(Shape{4}, std::vector<float>{1e4f, -1e4f, 0, 1e4f}));
  bool stable = true;
  double sum = 0;
  for (double v : big.data()) {
    stable = stable && std::isfinite(v);
    sum += v;
  }
  for (float v : bigf.data()) stable = stable && std::isfinite(v);
  stable = stable && std::abs(sum - 1) < 1e-12 && std::abs(big[0] - 1 / (1 + std::exp(-1.0))) < 1e-12 &&
           std::abs(bigf[0] - 0.5f) < 1e-6f && std::isfinite(cross_entropy(big, 1));
  return {ln4 && worst < 1e-7 && stable,
          fmt("|L - ln 4| = %.1e; |delta - fd| worst %.1e; logits of magnitude 1e4 finite: %s", std::abs(l - std::log(4.0)),
              worst, stable ? "yes" : "no")};
}

Outcome pca_optimality() {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  std::size_t instances = 0, beaten = 0, comparisons = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t c = 3 + rng() % 6;
    // Correlated spectra: random mixing of independent sources.
    std::vector<std::vector<double>> mix(c, std::vector<double>(c));
    for (auto& row : mix)
      for (auto& v : row) v = nd(rng);
    std::vector<MultispectralImage> images;
    std::vector<std::vector<double>> rows;
    for (int im = 0; im < 2; ++im) {
      Tensor32 t(Shape{6, 7, c});
      for (std::size_t p = 0; p < 42; ++p) {
        std::vector<double> src(c);
        for (std::size_t j = 0; j < c; ++j) src[j] = nd(rng) * (1.0 + static_cast<double>(j));
        for (std::size_t i = 0; i < c; ++i) {
          double v = 0.5;
          for (std::size_t j = 0; j < c; ++j) v += 0.05 * mix[i][j] * src[j];
          t[p * c + i] = static_cast<float>(v);
        }
      }
      for (std::size_t p = 0; p < 42; ++p) rows.emplace_back(t.data().begin() + p * c, t.data().begin() + (p + 1) * c);
      images.emplace_back(std::move(t));
    }
    const SpectralPCA pca = fit_pca(images);
    std::vector<std::vector<double>> basis(pca.components.begin(), pca.components.end());
    const double best = oracle::reconstruction_error(rows, pca.mean, basis);
    bool ok = true;
    for (int trial = 0; trial < 100; ++trial) {
      const double other = oracle::reconstruction_error(rows, pca.mean, oracle::random_orthonormal(c, 3, rng));
      ++comparisons;
      const bool not_worse = best <= other * (1 + 1e-9) + 1e-12;
      beaten += !not_worse;
      ok = ok && not_worse;
    }
    instances += ok;
  }

  // C = 3: the projection is a rotation of the centred spectra.
  std::mt19937_64 g2(9);
  std::uniform_real_distribution<float> u(0, 1);
  Tensor32 t(Shape{5, 6, 3});
  for (auto& v : t.data()) v = u(g2);
  const MultispectralImage img(t);
  const std::vector<MultispectralImage> one{img};
  const MultispectralImage proj = apply_pca(fit_pca(one), img);
  double worst = 0;
  for (std::size_t a = 0; a < 30; ++a) {
    for (std::size_t b = a + 1; b < 30; ++b) {
      double d0 = 0, d1 = 0;
      for (std::size_t k = 0; k < 3; ++k) {
        const double x = double(t[a * 3 + k]) - t[b * 3 + k];
        const double y = double(proj.pixels[a * 3 + k]) - proj.pixels[b * 3 + k];
        d0 += x * x;
        d1 += y * y;
      }
      worst = std::max(worst, std::abs(std::sqrt(d0) - std::sqrt(d1)));
    }
  }

  Tensor32 wide(Shape{128, 60, 42});
  for (auto& v : wide.data()) v = u(g2);
  const MultispectralImage big(std::move(wide));
  const std::vector<MultispectralImage> bigs{big};
  const Shape reduced = apply_pca(fit_pca(bigs), big).pixels.shape();
  const bool shape_ok = reduced == Shape{128, 60, 3} &&
                        plan_network(NetworkConfig::paper(128, 60, 3)).flatten_width == 6144;
  return {instances == 20 && worst < 1e-6 && shape_ok,
          fmt("%zu/20 instances optimal against all 100 random projections (%zu/%zu comparisons lost); "
              "C=3 distance drift %.1e; 128x60x42 -> %s",
              instances, beaten, comparisons, worst, reduced.to_string().c_str())};
}

Outcome fold_laws() {
  bool ok = true;
  std::ostringstream detail;
  struct Case {
    std::size_t n;
    bool stratified;
  };
  for (Case c : {Case{10, false}, Case{10, true}, Case{512, true}, Case{513, true}, Case{512, false}}) {
    std::vector<std::size_t> labels(c.n);
    // n = 10 with stratification uses a single class: every class must hold
    // at least k samples.
    for (std::size_t i = 0; i < c.n; ++i) labels[i] = (c.n == 10 && c.stratified) ? 0 : i % 4;
    const auto parts = kfold_partition(labels, 10, 7, c.stratified);
    const auto again = kfold_partition(labels, 10, 7, c.stratified);
    const auto r = oracle::check_partition(parts, labels);
    // The per-class gap law binds stratified partitions only.
    const bool good = parts.size() == 10 && r.disjoint && r.covering && r.max_total_gap <= 1 &&
                      (!c.stratified || r.max_class_gap <= 1) && parts == again;
    ok = ok && good;
    detail << "n=" << c.n << (c.stratified ? "/strat" : "/plain") << ":" << (good ? "ok" : "BAD") << " ";
  }
  return {ok, detail.str() + "(disjoint, covering, size gap <= 1, per-class gap <= 1 when stratified, seed-deterministic)"};
}

Outcome early_stopping() {
  Rng rng = make_rng(10, "init");
  Network<float> net = build<float>(NetworkConfig::tiny(), rng);
  std::mt19937_64 gen(1);
  EarlyStopping stop(5);
  const double losses[] = {1.0, 0.9, 0.95, 0.96, 0.97, 0.98, 0.99};
  std::uint64_t hash_at_2 = 0;
  std::size_t epoch = 0;
  for (double l : losses) {
    ++epoch;
    std::normal_distribution<float> nd;
    for (auto* p : net.parameters())
      for (auto& v : p->data()) v = nd(gen);
    if (epoch == 2) hash_at_2 = oracle::fnv1a(serialize_checkpoint(net));
    stop.observe(epoch, l, net);
    if (stop.should_stop()) break;
  }
  const std::uint64_t last = oracle::fnv1a(serialize_checkpoint(net));
  stop.restore(net);
  const std::uint64_t restored = oracle::fnv1a(serialize_checkpoint(net));
  return {epoch == 7 && stop.best_epoch() == 2 && restored == hash_at_2 && last != hash_at_2,
          fmt("stopped after epoch %zu, best epoch %zu, restored hash %016llx (epoch-2 %016llx)", epoch,
              stop.best_epoch(), static_cast<unsigned long long>(restored),
              static_cast<unsigned long long>(hash_at_2))};
}

Outcome timing_harness() {
  const fs::path dir = oracle::scratch_dir("accept_bench");
  const std::string data = (dir / "data").string();
  const auto log = dir / "log.txt";
  if (oracle::run_cli("gen --shape 32x32x64 --per-class 8 --out " + data, log) != 0) {
    return {false, "gen failed: " + oracle::file_text(log)};
  }
  // The same network (tiny preset on the 3-channel PCA representation) serves
  // both pipelines; only the preprocessing differs.
  const std::string common = "bench --manifest " + data + "/manifest.csv --preset tiny --pca true --folds 5 "
                             "--warmup 10 --repetitions 300 --out ";
  auto mean_ms = [](const fs::path& csv, std::size_t row) {
    std::istringstream in(oracle::file_text(csv));
    std::string line;
    std::getline(in, line);
    if (line != "method,dataset,ms_per_image,sd_ms,repetitions") return -1.0;
    for (std::size_t i = 0; i <= row; ++i) std::getline(in, line);
    std::istringstream cells(line);
    std::string cell;
    for (int c = 0; c < 3; ++c) std::getline(cells, cell, ',');
    return std::stod(cell);
  };
  const int rc_direct = oracle::run_cli(common + (dir / "direct").string() + " --pipeline direct", log);
  const int rc_pca = oracle::run_cli(common + (dir / "pca").string() + " --pipeline pca --train-epochs 0", log);
  const int rc_both = oracle::run_cli(common + (dir / "both").string() + " --pipeline both --train-epochs 0", log);
  if (rc_direct || rc_pca || rc_both) return {false, "bench failed: " + oracle::file_text(log)};

  const double direct = mean_ms(dir / "direct" / "inference_direct.csv", 0);
  const double pca = mean_ms(dir / "pca" / "inference_pca.csv", 0);
  const double both_direct = mean_ms(dir / "both" / "inference_times.csv", 0);
  const double both_pca = mean_ms(dir / "both" / "inference_times.csv", 1);
  std::istringstream train(oracle::file_text(dir / "direct" / "training_times.csv"));
  std::string header, row;
  std::getline(train, header);
  std::getline(train, row);
  const bool train_ok = header == "method,dataset,seconds_per_epoch,total_seconds" && !row.empty();
  fs::remove_all(dir);
  const bool ok = direct > 0 && pca >= direct && both_pca >= both_direct && train_ok;
  return {ok, fmt("separate runs: pca %.4f ms >= direct %.4f ms; interleaved: pca %.4f ms >= direct %.4f ms; "
                  "training CSV %s",
                  pca, direct, both_pca, both_direct, train_ok ? "ok" : "missing")};
}

Outcome round_trips() {
  const fs::path dir = oracle::scratch_dir("accept_rt");
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<float> u(-2, 2);
  std::size_t msi_ok = 0, ckpt_ok = 0, pca_ok = 0;
  for (int i = 0; i < 100; ++i) {
    // MSI, alternating payload encodings.
    const std::size_t h = 1 + rng() % 12, w = 1 + rng() % 12, c = 1 + rng() % 16;
    Tensor32 t(Shape{h, w, c});
    const bool u16 = i % 2 == 1;
    for (auto& v : t.data()) v = u16 ? static_cast<float>(rng() % 65536) / 65535.0f : u(rng);
    std::vector<float> bands;
    if (rng() % 2) {
      for (std::size_t k = 0; k < c; ++k) bands.push_back(400.0f + 7.5f * static_cast<float>(k) + u(rng));
    }
    const MultispectralImage img(std::move(t), bands);
    const PayloadKind kind = u16 ? PayloadKind::u16 : PayloadKind::f32;
    write_msi(dir / "x.msi", img, kind);
    const auto bytes = oracle::file_bytes(dir / "x.msi");
    const MultispectralImage back = read_msi(dir / "x.msi");
    write_msi(dir / "y.msi", back, kind);
    msi_ok += (u16 || back == img) && oracle::file_bytes(dir / "y.msi") == bytes;

    // Checkpoints of random small architectures in both precisions.
    NetworkConfig cfg;
    cfg.height = 4 + rng() % 9;
    cfg.width = 4 + rng() % 9;
    cfg.channels = 1 + rng() % 5;
    cfg.conv_blocks = {{1 + rng() % 4, 1 + rng() % 2}};
    if (rng() % 2 && cfg.height >= 8 && cfg.width >= 8) cfg.conv_blocks.push_back({1 + rng() % 4, 1});
    cfg.fc_sizes = {1 + rng() % 8, 4};
    cfg.relu_on_output = rng() % 2;
    Rng init = make_rng(static_cast<std::uint64_t>(i), "init");
    bool ck;
    if (i % 2) {
      const auto net = build<double>(cfg, init);
      write_checkpoint(dir / "n.spnw", net);
      const auto back_net = read_checkpoint<double>(dir / "n.spnw");
      ck = back_net.config() == cfg && snapshot_parameters(back_net) == snapshot_parameters(net) &&
           serialize_checkpoint(back_net) == oracle::file_bytes(dir / "n.spnw");
    } else {
      const auto net = build<float>(cfg, init);
      write_checkpoint(dir / "n.spnw", net);
      const auto back_net = read_checkpoint<float>(dir / "n.spnw");
      ck = back_net.config() == cfg && snapshot_parameters(back_net) == snapshot_parameters(net) &&
           serialize_checkpoint(back_net) == oracle::file_bytes(dir / "n.spnw");
    }
    ckpt_ok += ck;

    // PCA bases (values drawn as f32, the stored precision).
    SpectralPCA p;
    const std::size_t pc = 3 + rng() % 40;
    for (std::size_t k = 0; k < pc; ++k) p.mean.push_back(u(rng));
    for (auto& comp : p.components)
      for (std::size_t k = 0; k < pc; ++k) comp.push_back(u(rng));
    for (auto& v : p.explained_variance) v = std::abs(u(rng));
    write_pca(dir / "b.spca", p);
    const SpectralPCA q = read_pca(dir / "b.spca");
    write_pca(dir / "c.spca", q);
    pca_ok += q.mean == p.mean && q.components == p.components && q.explained_variance == p.explained_variance &&
              oracle::file_bytes(dir / "b.spca") == oracle::file_bytes(dir / "c.spca");
  }
  fs::remove_all(dir);
  return {msi_ok == 100 && ckpt_ok == 100 && pca_ok == 100,
          fmt("MSI %zu/100, checkpoints %zu/100, PCA bases %zu/100 bit-exact", msi_ok, ckpt_ok, pca_ok)};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;  // 0: no limit
  Outcome (*run)();
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "gradient correctness", 60, gradient_check},
      {2, "convolution oracle equivalence", 5, conv_oracle},
      {3, "paper architecture shape audit", 1, shape_audit},
      {4, "desk-scale learning", 600, desk_learning},
      {5, "augmentation contract", 0, augmentation_contract},
      {6, "Xavier statistics", 5, xavier_statistics},
      {7, "softmax/cross-entropy identities", 0, softmax_identities},
      {8, "PCA optimality and isometry", 0, pca_optimality},
      {9, "fold laws", 0, fold_laws},
      {10, "early stopping semantics", 0, early_stopping},
      {11, "timing harness", 0, timing_harness},
      {12, "round trips", 0, round_trips},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit_s > 0 && s >= c.time_limit_s) {
      o.pass = false;
      o.detail += fmt(" [over the %.0f s limit]", c.time_limit_s);
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
