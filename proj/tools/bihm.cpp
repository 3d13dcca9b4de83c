// bihm: train, evaluate, sample from and inspect bidirectional Helmholtz machines.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bihm/checkpoint.hpp"
#include "bihm/dataset.hpp"
#include "bihm/errors.hpp"
#include "bihm/estimators.hpp"
#include "bihm/image.hpp"
#include "bihm/metrics.hpp"
#include "bihm/oracle.hpp"
#include "bihm/sampling.hpp"
#include "bihm/training.hpp"

namespace fs = std::filesystem;
using namespace bihm;

namespace {

std::vector<Index> parse_sizes(const std::string& text, const char* what) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v < 1) throw ArgumentError(std::string(what) + ": bad size '" + item + "'");
    out.push_back(static_cast<Index>(v));
  }
  if (out.empty()) throw ArgumentError(std::string(what) + ": no sizes given");
  return out;
}

std::string join_sizes(const std::vector<Index>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) out += (i ? "," : "") + std::to_string(sizes[i]);
  return out;
}

// Escape a message so it stays on one line inside double quotes.
std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out + "\"";
}

struct Geometry {
  int width = 0;
  int height = 0;
};

Geometry image_geometry(Index dim, int width, int height) {
  if (width > 0 && height > 0) {
    if (static_cast<Index>(width) * height != dim) {
      throw ShapeError("--width x --height = " + std::to_string(width * height) + " but the model has " +
                       std::to_string(dim) + " visible units");
    }
    return {width, height};
  }
  const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
  if (static_cast<Index>(side) * side != dim) {
    throw ArgumentError(std::to_string(dim) + " visible units are not a square image; pass --width and --height");
  }
  return {side, side};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string numbered(const std::string& stem, std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%04zu", i);
  return stem + buf + ext;
}

// ---- train

struct TrainArgs {
  std::string data;
  std::string valid;
  std::string layers = "300,200,100";
  std::string out = "model.bihm";
  std::string metrics;
  bool keep_best = false;
  std::uint64_t init_seed = 0;
  TrainConfig cfg;
};

void run_train(const TrainArgs& a) {
  const BinaryDataset train_set = load_dataset(a.data);
  BinaryDataset valid_set;
  if (!a.valid.empty()) valid_set = load_dataset(a.valid);
  std::vector<Index> sizes = {static_cast<Index>(train_set.cols())};
  for (Index s : parse_sizes(a.layers, "--layers")) sizes.push_back(s);

  const std::uint64_t init_seed = a.init_seed != 0 ? a.init_seed : a.cfg.seed;
  BihmModel model = init_model(sizes, init_seed);
  if (!a.metrics.empty()) {
    std::error_code ec;
    fs::remove(a.metrics, ec);
  }
  const Matrix train_x = train_set.to_matrix();
  const Matrix valid_x = valid_set.rows() > 0 ? valid_set.to_matrix() : Matrix();

  Metadata meta = {{"layers", join_sizes(sizes)},       {"k", std::to_string(a.cfg.k_train)},
                   {"lr", format_number(a.cfg.learning_rate)}, {"batch", std::to_string(a.cfg.batch_size)},
                   {"l1", format_number(a.cfg.l1_lambda)}, {"seed", std::to_string(a.cfg.seed)},
                   {"data", fs::path(a.data).filename().string()}};
  double best = -INFINITY;
  TrainResult result = train(std::move(model), train_x, valid_x, a.cfg, [&](const EpochMetrics& m, const BihmModel& cur) {
    if (!a.metrics.empty()) append_metrics(a.metrics, m);
    std::cerr << "epoch " << m.epoch << " train_logptilde=" << format_number(m.train_log_ptilde);
    if (m.valid_log_ptilde) std::cerr << " valid_logptilde=" << format_number(*m.valid_log_ptilde);
    if (m.two_log_z) std::cerr << " two_log_z=" << format_number(*m.two_log_z);
    std::cerr << " seconds=" << format_number(m.seconds) << '\n';
    const double score = m.valid_log_ptilde.value_or(m.train_log_ptilde);
    if (a.keep_best && !(score > best)) return;
    best = score;
    meta["epoch"] = std::to_string(m.epoch);
    save_checkpoint(cur, meta, a.out);
  });
  const EpochMetrics& last = result.history.back();
  std::cout << "model=" << a.out << " epochs=" << last.epoch << " updates=" << last.updates
            << " train_logptilde=" << format_number(last.train_log_ptilde);
  if (last.valid_log_ptilde) std::cout << " valid_logptilde=" << format_number(*last.valid_log_ptilde);
  std::cout << '\n';
}

// ---- eval / zest

struct EvalArgs {
  std::string model;
  std::string data;
  std::size_t k = 1000;
  std::string estimator = "pstar";
  std::size_t z_outer = 100000;
  std::size_t z_inner = 1;
  std::uint64_t seed = 1;
  double log_z2 = std::nan("");
};

void run_eval(const EvalArgs& a) {
  const Checkpoint ck = load_checkpoint(a.model);
  const BinaryDataset data = load_dataset(a.data);
  if (static_cast<Index>(data.cols()) != ck.model.visible_dim()) {
    throw ShapeError("dataset has " + std::to_string(data.cols()) + " columns, model expects " +
                     std::to_string(ck.model.visible_dim()));
  }
  Rng rng(a.seed);
  Rng z_rng = rng.split();
  const DatasetEvaluation ev = evaluate_dataset(ck.model, data.to_matrix(), a.k, rng);
  std::cout << "estimator=" << a.estimator << " n=" << ev.num_datapoints << " k=" << a.k;
  if (a.estimator == "ptilde") {
    std::cout << " mean_logptilde=" << format_number(ev.mean_log_ptilde.value)
              << " std_error=" << format_number(ev.mean_log_ptilde.std_error);
  } else if (a.estimator == "p") {
    std::cout << " mean_logp=" << format_number(ev.mean_log_p.value)
              << " std_error=" << format_number(ev.mean_log_p.std_error);
  } else {
    EstimateWithError z;
    if (std::isnan(a.log_z2)) {
      z = est_log_z2(ck.model, {a.z_outer, a.z_inner}, z_rng);
    } else {
      z.value = a.log_z2;
    }
    const double value = ev.mean_log_ptilde.value - z.value;
    const double se = std::hypot(ev.mean_log_ptilde.std_error, z.std_error);
    std::cout << " mean_logpstar=" << format_number(value) << " std_error=" << format_number(se)
              << " mean_logptilde=" << format_number(ev.mean_log_ptilde.value)
              << " log_z2=" << format_number(z.value) << " log_z2_std_error=" << format_number(z.std_error);
  }
  std::cout << " ess_pct=" << format_number(ev.mean_ess_percent) << '\n';
}

struct ZestArgs {
  std::string model;
  std::size_t k_outer = 100000;
  std::size_t k_inner = 1;
  std::uint64_t seed = 1;
};

void run_zest(const ZestArgs& a) {
  const Checkpoint ck = load_checkpoint(a.model);
  Rng rng(a.seed);
  const EstimateWithError z = est_log_z2(ck.model, {a.k_outer, a.k_inner}, rng);
  std::cout << "log_z2=" << format_number(z.value) << " std_error=" << format_number(z.std_error)
            << " neg_two_log_z=" << format_number(-z.value) << " samples=" << z.num_samples << '\n';
}

// ---- sample / inpaint

struct SampleArgs {
  std::string model;
  std::size_t count = 16;
  std::size_t gibbs = 10;
  GibbsConfig gibbs_cfg;
  bool binary = false;
  std::string out = "samples";
  int width = 0;
  int height = 0;
  std::uint64_t seed = 1;
};

void write_rows_csv(const fs::path& path, const std::vector<Vector>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const Vector& r : rows) {
    for (Index i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_number(r[i]);
    out << '\n';
  }
}

void run_sample(const SampleArgs& a) {
  const Checkpoint ck = load_checkpoint(a.model);
  const Geometry g = image_geometry(ck.model.visible_dim(), a.width, a.height);
  ensure_dir(a.out);
  Rng rng(a.seed);
  GibbsConfig cfg = a.gibbs_cfg;
  std::vector<Vector> rows;
  for (std::size_t i = 0; i < a.count; ++i) {
    JointSample s = sample_p(ck.model, rng);
    GibbsState state{std::move(s.x), std::move(s.h)};
    if (a.gibbs > 0) {
      cfg.num_sweeps = a.gibbs;
      state = gibbs_sample(ck.model, state, cfg, rng);
    }
    Vector img = a.binary ? state.x : expected_visible(ck.model, state);
    write_pgm({img.data(), static_cast<std::size_t>(img.size())}, g.width, g.height,
              fs::path(a.out) / numbered("sample", i, ".pgm"));
    rows.push_back(std::move(img));
  }
  write_rows_csv(fs::path(a.out) / "samples.csv", rows);
  std::cout << "wrote " << a.count << " samples to " << a.out << '\n';
}

struct InpaintArgs {
  std::string model;
  std::string image;
  std::string mask;
  std::size_t gibbs = 10;
  std::size_t count = 1;
  GibbsConfig gibbs_cfg;
  std::string out = "inpainted";
  std::uint64_t seed = 1;
};

// PGM pixels >= 128 read as 1.
Vector binarize(const GrayImage& img) {
  Vector v(static_cast<Index>(img.pixels.size()));
  for (std::size_t i = 0; i < img.pixels.size(); ++i) v[static_cast<Index>(i)] = img.pixels[i] >= 128 ? 1.0 : 0.0;
  return v;
}

void run_inpaint(const InpaintArgs& a) {
  const Checkpoint ck = load_checkpoint(a.model);
  const GrayImage image = read_pgm(a.image);
  const GrayImage mask = read_pgm(a.mask);
  if (image.width != mask.width || image.height != mask.height) throw ShapeError("image and mask sizes differ");
  if (static_cast<Index>(image.pixels.size()) != ck.model.visible_dim()) {
    throw ShapeError("image has " + std::to_string(image.pixels.size()) + " pixels, model expects " +
                     std::to_string(ck.model.visible_dim()));
  }
  const Vector x = binarize(image);
  const Vector m = binarize(mask);
  ensure_dir(a.out);
  GibbsConfig cfg = a.gibbs_cfg;
  cfg.num_sweeps = std::max<std::size_t>(a.gibbs, 1);
  Rng rng(a.seed);
  for (std::size_t i = 0; i < a.count; ++i) {
    Vector filled = x;
    Vector expected = x;
    if (a.gibbs > 0) {
      const GibbsState s = inpaint_chain(ck.model, x, m, cfg, rng);
      filled = s.x;
      const Vector mean = expected_visible(ck.model, s);
      for (Index j = 0; j < x.size(); ++j) expected[j] = m[j] != 0.0 ? x[j] : mean[j];
    }
    write_pgm({filled.data(), static_cast<std::size_t>(filled.size())}, image.width, image.height,
              fs::path(a.out) / numbered("inpaint", i, ".pgm"));
    write_pgm({expected.data(), static_cast<std::size_t>(expected.size())}, image.width, image.height,
              fs::path(a.out) / numbered("inpaint_expected", i, ".pgm"));
  }
  std::cout << "wrote " << a.count << " completions to " << a.out << '\n';
}

// ---- oracle

struct OracleArgs {
  std::string dims = "6,4,3";
  std::uint64_t seed = 1;
  std::string checks = "all";
  std::size_t k = 100000;
  double scale = 1.5;
};

BihmModel seeded_model(const std::vector<Index>& sizes, std::uint64_t seed, double scale) {
  BihmModel model(sizes);
  Rng rng(seed);
  Vector flat(model.num_parameters());
  for (Index i = 0; i < flat.size(); ++i) flat[i] = scale * (2.0 * rng.uniform() - 1.0);
  assign_parameters(model, flat);
  return model;
}

bool report(const char* name, bool ok, const std::string& detail) {
  std::cout << "check=" << name << " status=" << (ok ? "PASS" : "FAIL") << ' ' << detail << '\n';
  return ok;
}

int run_oracle(const OracleArgs& a) {
  const std::vector<Index> sizes = parse_sizes(a.dims, "--dims");
  if (sizes.size() < 2) throw ArgumentError("--dims needs a visible size and at least one latent size");
  const BihmModel model = seeded_model(sizes, a.seed, a.scale);
  const bool all = a.checks == "all";
  Rng rng(a.seed ^ 0x9e3779b97f4a7c15ULL);
  const OracleReport rep = oracle_report(model);
  bool ok = true;
  std::cout << "dims=" << a.dims << " seed=" << a.seed << " log_z2=" << format_number(rep.log_z2)
            << " bhattacharyya=" << format_number(rep.bhattacharyya) << '\n';

  if (all || a.checks == "bound") {
    double worst_gap = -INFINITY;
    double worst_identity = 0.0;
    for (std::size_t i = 0; i < rep.log_ptilde_by_x.size(); ++i) {
      const double lpt = rep.log_ptilde_by_x[i];
      const double lps = lpt - rep.log_z2;
      worst_gap = std::max({worst_gap, lpt - lps, lpt - rep.log_p_by_x[i]});
      const Vector x = config_from_index(i, model.visible_dim());
      worst_identity = std::max(worst_identity, std::abs(exact_log_pstar(model, x) - (lpt + 2.0 * rep.bhattacharyya)));
    }
    ok &= report("bound", rep.log_z2 <= 0.0 && worst_gap <= 0.0 && worst_identity <= 1e-10,
                 "log_z2=" + format_number(rep.log_z2) + " max_ptilde_excess=" + format_number(worst_gap) +
                     " identity_error=" + format_number(worst_identity));
  }
  if (all || a.checks == "z") {
    const EstimateWithError z = est_log_z2(model, {a.k, 1}, rng);
    const double dev = std::abs(z.value - rep.log_z2);
    ok &= report("z", dev <= 3.0 * z.std_error,
                 "estimate=" + format_number(z.value) + " exact=" + format_number(rep.log_z2) +
                     " std_error=" + format_number(z.std_error));
  }
  if (all || a.checks == "grad") {
    const Vector x = config_from_index(rng.below(std::uint64_t{1} << model.visible_dim()), model.visible_dim());
    const Vector g = exact_grad_log_ptilde(model, x).flatten();
    Vector theta = flatten_parameters(model);
    BihmModel probe = model;
    Vector fd(theta.size());
    const double h = 1e-5;
    for (Index i = 0; i < theta.size(); ++i) {
      const double orig = theta[i];
      theta[i] = orig + h;
      assign_parameters(probe, theta);
      const double up = exact_log_ptilde(probe, x);
      theta[i] = orig - h;
      assign_parameters(probe, theta);
      const double down = exact_log_ptilde(probe, x);
      theta[i] = orig;
      fd[i] = (up - down) / (2.0 * h);
    }
    const double rel = (fd - g).lpNorm<Eigen::Infinity>() / g.lpNorm<Eigen::Infinity>();
    const Vector est = minibatch_gradient(model, x.transpose(), a.k, rng).flatten();
    const double cos = est.dot(g) / (est.norm() * g.norm());
    ok &= report("grad", rel <= 1e-6 && cos >= 0.99,
                 "fd_rel_error=" + format_number(rel) + " minibatch_cosine=" + format_number(cos));
  }
  if (all || a.checks == "gibbs") {
    GibbsConfig cfg;
    const std::size_t chains = std::min<std::size_t>(a.k, 20000);
    std::vector<double> counts(rep.log_ptilde_by_x.size(), 0.0);
    for (std::size_t c = 0; c < chains; ++c) {
      counts[index_from_config(gibbs_sample(model, std::nullopt, cfg, rng).x)] += 1.0;
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      tv += 0.5 * std::abs(counts[i] / static_cast<double>(chains) - std::exp(rep.log_ptilde_by_x[i] - rep.log_z2));
    }
    ok &= report("gibbs", tv <= 0.05, "chains=" + std::to_string(chains) + " tv=" + format_number(tv));
  }
  return ok ? 0 : 1;
}

// ---- convert

void run_convert(const std::string& in, const std::string& out) {
  save_dataset(load_dataset(in), out, dataset_format_from_path(out));
  std::cout << "wrote " << out << '\n';
}

void add_gibbs_options(CLI::App* cmd, GibbsConfig& cfg) {
  cmd->add_option("--prop-k", cfg.proposals_per_step, "Candidates per resampling step")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--ptilde-k", cfg.ptilde_k, "Samples per p~*(x) estimate in visible updates")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bidirectional Helmholtz machines: training, evaluation, sampling"};
  app.require_subcommand(1);
  app.failure_message([](const CLI::App*, const CLI::Error& e) {
    return "error kind=usage message=" + quote(e.what()) + "\n";
  });

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--data", ta.data, "Training data (.bbm, .amat, .csv)")->required();
  train_cmd->add_option("--valid", ta.valid, "Validation data");
  train_cmd->add_option("--layers", ta.layers, "Latent layer sizes, bottom to top")->capture_default_str();
  train_cmd->add_option("--k", ta.cfg.k_train, "Importance samples per datapoint")->capture_default_str();
  train_cmd->add_option("--lr", ta.cfg.learning_rate, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--batch", ta.cfg.batch_size, "Minibatch size")->capture_default_str();
  train_cmd->add_option("--epochs", ta.cfg.epochs, "Epochs in the first phase")->capture_default_str();
  train_cmd->add_option("--l1", ta.cfg.l1_lambda, "L1 penalty on weights")->capture_default_str();
  train_cmd->add_option("--seed", ta.cfg.seed, "Run seed")->capture_default_str();
  train_cmd->add_option("--init-seed", ta.init_seed, "Initialization seed (default: --seed)");
  train_cmd->add_option("--out", ta.out, "Checkpoint path")->capture_default_str();
  train_cmd->add_option("--metrics", ta.metrics, "Per-epoch metrics CSV");
  train_cmd->add_flag("--keep-best", ta.keep_best, "Only overwrite the checkpoint when the validation score improves");
  train_cmd->add_option("--finetune-epochs", ta.cfg.finetune_epochs, "Epochs in the fine-tuning phase")
      ->capture_default_str();
  train_cmd->add_option("--finetune-k", ta.cfg.finetune_k, "Samples per datapoint when fine-tuning")
      ->capture_default_str();
  train_cmd->add_option("--finetune-lr", ta.cfg.finetune_learning_rate, "Learning rate when fine-tuning")
      ->capture_default_str();
  train_cmd->add_option("--z-every", ta.cfg.z_every, "Estimate log Z^2 every N epochs (0 = never)")
      ->capture_default_str();
  train_cmd->add_option("--z-outer", ta.cfg.z_k_outer, "Outer samples for the periodic log Z^2 estimate")
      ->capture_default_str();
  train_cmd->add_option("--eval-k", ta.cfg.eval_k, "Samples per datapoint for metrics (0 = training K)")
      ->capture_default_str();
  train_cmd->add_option("--train-metric-rows", ta.cfg.train_metric_rows, "Training rows used for metrics (0 = all)")
      ->capture_default_str();

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Estimate mean log-likelihood on a dataset");
  eval_cmd->add_option("--model", ea.model, "Checkpoint")->required();
  eval_cmd->add_option("--data", ea.data, "Dataset")->required();
  eval_cmd->add_option("--k", ea.k, "Importance samples per datapoint")->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--estimator", ea.estimator, "ptilde, p or pstar")
      ->capture_default_str()
      ->check(CLI::IsMember({"ptilde", "p", "pstar"}));
  eval_cmd->add_option("--z-outer", ea.z_outer, "Outer samples for log Z^2")->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--z-inner", ea.z_inner, "Inner samples for log Z^2")->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--log-z2", ea.log_z2, "Use this log Z^2 instead of estimating it");
  eval_cmd->add_option("--seed", ea.seed, "Seed")->capture_default_str();

  ZestArgs za;
  auto* zest_cmd = app.add_subcommand("zest", "Estimate log Z^2");
  zest_cmd->add_option("--model", za.model, "Checkpoint")->required();
  zest_cmd->add_option("--k-outer", za.k_outer, "Outer samples")->capture_default_str()->check(CLI::PositiveNumber);
  zest_cmd->add_option("--k-inner", za.k_inner, "Inner samples")->capture_default_str()->check(CLI::PositiveNumber);
  zest_cmd->add_option("--seed", za.seed, "Seed")->capture_default_str();

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "Draw samples and write them as PGM images");
  sample_cmd->add_option("--model", sa.model, "Checkpoint")->required();
  sample_cmd->add_option("--count", sa.count, "Number of samples")->capture_default_str();
  sample_cmd->add_option("--gibbs", sa.gibbs, "Gibbs sweeps after the ancestral draw (0 = plain p samples)")
      ->capture_default_str();
  add_gibbs_options(sample_cmd, sa.gibbs_cfg);
  auto* expected_flag = sample_cmd->add_flag("--expected", "Write expected pixel values (default)");
  sample_cmd->add_flag("--binary", sa.binary, "Write binary samples")->excludes(expected_flag);
  sample_cmd->add_option("--out", sa.out, "Output directory")->capture_default_str();
  sample_cmd->add_option("--width", sa.width, "Image width");
  sample_cmd->add_option("--height", sa.height, "Image height");
  sample_cmd->add_option("--seed", sa.seed, "Seed")->capture_default_str();

  InpaintArgs ia;
  auto* inpaint_cmd = app.add_subcommand("inpaint", "Fill the unobserved pixels of an image");
  inpaint_cmd->add_option("--model", ia.model, "Checkpoint")->required();
  inpaint_cmd->add_option("--image", ia.image, "Binary PGM (pixels >= 128 are 1)")->required();
  inpaint_cmd->add_option("--mask", ia.mask, "PGM; pixels >= 128 are observed")->required();
  inpaint_cmd->add_option("--gibbs", ia.gibbs, "Gibbs sweeps")->capture_default_str();
  inpaint_cmd->add_option("--count", ia.count, "Independent completions")->capture_default_str();
  add_gibbs_options(inpaint_cmd, ia.gibbs_cfg);
  inpaint_cmd->add_option("--out", ia.out, "Output directory")->capture_default_str();
  inpaint_cmd->add_option("--seed", ia.seed, "Seed")->capture_default_str();

  OracleArgs oa;
  auto* oracle_cmd = app.add_subcommand("oracle", "Compare estimators with exact enumeration on a random tiny model");
  oracle_cmd->add_option("--dims", oa.dims, "Layer sizes, visible first")->capture_default_str();
  oracle_cmd->add_option("--seed", oa.seed, "Model seed")->capture_default_str();
  oracle_cmd->add_option("--checks", oa.checks, "all, z, bound, grad or gibbs")
      ->capture_default_str()
      ->check(CLI::IsMember({"all", "z", "bound", "grad", "gibbs"}));
  oracle_cmd->add_option("--k", oa.k, "Samples for the stochastic checks")->capture_default_str()->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--scale", oa.scale, "Parameters drawn from [-scale, scale]")->capture_default_str();

  std::string conv_in;
  std::string conv_out;
  auto* convert_cmd = app.add_subcommand("convert", "Convert a dataset between .amat, .csv and .bbm");
  convert_cmd->add_option("--in", conv_in, "Input dataset")->required();
  convert_cmd->add_option("--out", conv_out, "Output dataset")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error kind=usage message=" << quote(e.what()) << '\n';
    return 2;
  }

  try {
    if (*train_cmd) run_train(ta);
    if (*eval_cmd) run_eval(ea);
    if (*zest_cmd) run_zest(za);
    if (*sample_cmd) run_sample(sa);
    if (*inpaint_cmd) run_inpaint(ia);
    if (*oracle_cmd) return run_oracle(oa);
    if (*convert_cmd) run_convert(conv_in, conv_out);
  } catch (const Error& e) {
    std::cerr << "error kind=" << e.kind() << " message=" << quote(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error kind=internal message=" << quote(e.what()) << '\n';
    return 1;
  }
  return 0;
}
