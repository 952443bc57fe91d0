// crossdenoise: data preparation, weighted training, component ablation and
// (alpha, beta) landscape analysis for implicit-feedback denoising.
//
// Subcommands:
//   prepare   parse + binarize a ratings file, write an 8:1:1 split
//   train     train a backbone under a weighting strategy, emit reports
//   ablate    one run per component combination, shared seeds
//   sweep     (alpha, beta) grid or 3x3 stencil Hessian verdicts
//
// Every command writes a manifest.json into --out; rerunning with
// --from-manifest <manifest> reproduces the CSV/SVG artifacts byte for byte.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "crossdenoise/common.hpp"
#include "crossdenoise/dataset.hpp"
#include "crossdenoise/io.hpp"
#include "crossdenoise/landscape.hpp"
#include "crossdenoise/metrics.hpp"
#include "crossdenoise/parallel.hpp"
#include "crossdenoise/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& p : split_csv_list(text)) {
    try {
      out.push_back(std::stod(p));
    } catch (const std::exception&) {
      throw UsageError(std::string("bad ") + what + " value: " + p);
    }
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& p : split_csv_list(text)) {
    try {
      out.push_back(std::stoull(p));
    } catch (const std::exception&) {
      throw UsageError("bad seed value: " + p);
    }
  }
  return out;
}

cdn::ComponentToggles parse_components(const std::string& text) {
  cdn::ComponentToggles t{false, false, false};
  for (const auto& p : split_csv_list(text)) {
    if (p == "bw") t.base_weight = true;
    else if (p == "if") t.item_factor = true;
    else if (p == "uf") t.user_factor = true;
    else throw UsageError("unknown component '" + p + "' (expected bw, if, uf)");
  }
  if ((t.item_factor || t.user_factor) && !t.base_weight)
    throw UsageError("components: if/uf require bw");
  return t;
}

char parse_delimiter(const std::string& text) {
  if (text == "tab" || text == "\\t") return '\t';
  if (text == "comma") return ',';
  if (text.size() == 1) return text[0];
  throw UsageError("bad delimiter '" + text + "' (use tab, comma, or one character)");
}

// ------------------------------------------------------------- manifests

json digest_inputs(const std::vector<fs::path>& paths) {
  json j = json::object();
  for (const auto& p : paths) j[p.string()] = cdn::file_digest(p);
  return j;
}

void write_manifest(const fs::path& out_dir, const std::string& command, const json& config,
                    const json& inputs, const std::vector<std::string>& artifacts,
                    const std::vector<std::uint64_t>& seeds) {
  json m;
  m["tool"] = "crossdenoise";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["config"] = config;
  m["inputs"] = inputs;
  m["seeds"] = seeds;
  m["artifacts"] = artifacts;
  cdn::write_text_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

json load_manifest(const fs::path& path, const std::string& expected_command) {
  json m = json::parse(cdn::read_text_file(path));
  if (m.value("command", "") != expected_command)
    throw UsageError("manifest " + path.string() + " is for command '" +
                     m.value("command", "") + "', not '" + expected_command + "'");
  return m;
}

void verify_manifest_inputs(const json& manifest) {
  for (auto it = manifest["inputs"].begin(); it != manifest["inputs"].end(); ++it) {
    std::string path = it.key();
    std::string digest = cdn::file_digest(path);
    if (digest != it.value().get<std::string>())
      throw UsageError("input changed since the manifest was written: " + path);
  }
}

// ------------------------------------------------------------- prepare

struct PrepareParams {
  std::string input;
  std::string delimiter = "tab";
  double threshold = 3.0;
  std::string ratios = "8,1,1";
  std::uint64_t seed = 17;
  std::string out = "prepared";
};

json to_json(const PrepareParams& p) {
  json j;
  j["input"] = p.input;
  j["delimiter"] = p.delimiter;
  j["threshold"] = p.threshold;
  j["ratios"] = p.ratios;
  j["seed"] = p.seed;
  return j;
}

void from_json_into(const json& j, PrepareParams& p) {
  p.input = j.at("input");
  p.delimiter = j.at("delimiter");
  p.threshold = j.at("threshold");
  p.ratios = j.at("ratios");
  p.seed = j.at("seed");
}

int run_prepare(const PrepareParams& p) {
  if (!fs::exists(p.input)) throw UsageError("input file not found: " + p.input);
  cdn::ParseConfig pc;
  pc.delimiter = parse_delimiter(p.delimiter);
  std::vector<int> ratios;
  for (double r : parse_double_list(p.ratios, "ratio")) ratios.push_back(static_cast<int>(r));

  auto ratings = cdn::parse_ratings_file(p.input, pc);
  auto ds = cdn::binarize(ratings, p.threshold);
  auto split = cdn::split_dataset(ds, p.seed, ratios);
  fs::path out(p.out);
  cdn::save_split(split, out);

  write_manifest(out, "prepare", to_json(p), digest_inputs({p.input}),
                 {"train.tsv", "valid.tsv", "test.tsv"}, {p.seed});
  std::printf("prepared %s: %u users, %u items | train %zu, valid %zu, test %zu (%zu before TP filter)\n",
              p.out.c_str(), ds.num_users, ds.num_items, split.train.interactions.size(),
              split.valid.interactions.size(), split.test.interactions.size(),
              split.unfiltered_test_size);
  return 0;
}

// ------------------------------------------------------------- train

struct TrainKnobs {
  std::string model = "gmf";
  std::string weighting = "ecdf";
  std::string components = "bw,if,uf";
  double alpha = 1.0;
  double beta = 1.0;
  double lr = 1e-3;
  int batch_size = 2048;
  int negative_ratio = 1;
  int dim = 32;
  int epochs = 200;
  int patience = 10;
  double rho = 0.7;
  double corruption = 0.5;
  double weight_decay = 0.0;
  std::string eval_ks = "50,100";
  int selection_k = 50;
};

void add_knob_options(CLI::App* cmd, TrainKnobs& k) {
  cmd->add_option("--model", k.model, "backbone: gmf, neumf, cdae")
      ->check(CLI::IsMember({"gmf", "neumf", "cdae"}));
  cmd->add_option("--weighting", k.weighting, "base weighting: ecdf, uniform, gmm, topk, linear")
      ->check(CLI::IsMember({"ecdf", "uniform", "gmm", "topk", "linear"}));
  cmd->add_option("--components", k.components, "active components, subset of bw,if,uf");
  cmd->add_option("--alpha", k.alpha, "reputation lower bound");
  cmd->add_option("--beta", k.beta, "reputation upper bound");
  cmd->add_option("--lr", k.lr, "learning rate");
  cmd->add_option("--batch-size", k.batch_size, "mini-batch size");
  cmd->add_option("--neg-ratio", k.negative_ratio, "negatives per positive");
  cmd->add_option("--dim", k.dim, "embedding size");
  cmd->add_option("--epochs", k.epochs, "max epochs");
  cmd->add_option("--patience", k.patience, "early stopping patience");
  cmd->add_option("--rho", k.rho, "remember rate for topk weighting");
  cmd->add_option("--corruption", k.corruption, "CDAE corruption rate");
  cmd->add_option("--weight-decay", k.weight_decay, "optional L2 coefficient");
  cmd->add_option("--eval-ks", k.eval_ks, "metric cutoffs, e.g. 50,100");
  cmd->add_option("--selection-k", k.selection_k, "early stopping uses Recall@this");
}

json to_json(const TrainKnobs& k) {
  json j;
  j["model"] = k.model;
  j["weighting"] = k.weighting;
  j["components"] = k.components;
  j["alpha"] = k.alpha;
  j["beta"] = k.beta;
  j["lr"] = k.lr;
  j["batch_size"] = k.batch_size;
  j["negative_ratio"] = k.negative_ratio;
  j["dim"] = k.dim;
  j["epochs"] = k.epochs;
  j["patience"] = k.patience;
  j["rho"] = k.rho;
  j["corruption"] = k.corruption;
  j["weight_decay"] = k.weight_decay;
  j["eval_ks"] = k.eval_ks;
  j["selection_k"] = k.selection_k;
  return j;
}

void from_json_into(const json& j, TrainKnobs& k) {
  k.model = j.at("model");
  k.weighting = j.at("weighting");
  k.components = j.at("components");
  k.alpha = j.at("alpha");
  k.beta = j.at("beta");
  k.lr = j.at("lr");
  k.batch_size = j.at("batch_size");
  k.negative_ratio = j.at("negative_ratio");
  k.dim = j.at("dim");
  k.epochs = j.at("epochs");
  k.patience = j.at("patience");
  k.rho = j.at("rho");
  k.corruption = j.at("corruption");
  k.weight_decay = j.at("weight_decay");
  k.eval_ks = j.at("eval_ks");
  k.selection_k = j.at("selection_k");
}

cdn::TrainConfig make_train_config(const TrainKnobs& k, std::uint64_t seed, int workers) {
  if (k.alpha > k.beta) throw UsageError("--alpha must not exceed --beta");
  if (k.alpha < 0.0) throw UsageError("--alpha must be >= 0");
  cdn::TrainConfig cfg;
  cfg.model = cdn::model_kind_from_string(k.model);
  cfg.alpha = k.alpha;
  cfg.beta = k.beta;
  cfg.lr = k.lr;
  cfg.batch_size = k.batch_size;
  cfg.negative_ratio = k.negative_ratio;
  cfg.embedding_dim = k.dim;
  cfg.max_epochs = k.epochs;
  cfg.patience = k.patience;
  cfg.seed = seed;
  cfg.strategy.strategy = cdn::weight_strategy_from_string(k.weighting);
  cfg.strategy.remember_rate = k.rho;
  cfg.components = parse_components(k.components);
  cfg.weight_decay = k.weight_decay;
  cfg.cdae_corruption = k.corruption;
  cfg.eval_ks.clear();
  for (double kk : parse_double_list(k.eval_ks, "eval-k"))
    cfg.eval_ks.push_back(static_cast<int>(kk));
  cfg.selection_k = k.selection_k;
  cfg.workers = workers;
  cfg.validate();
  return cfg;
}

struct TrainParams {
  std::string split_dir;
  TrainKnobs knobs;
  std::string seeds;  // empty: use `seed`
  std::uint64_t seed = 17;
  std::string out = "run";
  int workers = 0;
  bool dump_weights = false;
};

json to_json(const TrainParams& p) {
  json j;
  j["split_dir"] = p.split_dir;
  j["knobs"] = to_json(p.knobs);
  j["seeds"] = p.seeds;
  j["seed"] = p.seed;
  j["workers"] = p.workers;
  j["dump_weights"] = p.dump_weights;
  return j;
}

void from_json_into(const json& j, TrainParams& p) {
  p.split_dir = j.at("split_dir");
  from_json_into(j.at("knobs"), p.knobs);
  p.seeds = j.at("seeds");
  p.seed = j.at("seed");
  p.workers = j.at("workers");
  p.dump_weights = j.at("dump_weights");
}

std::vector<fs::path> split_files(const std::string& dir) {
  return {fs::path(dir) / "train.tsv", fs::path(dir) / "valid.tsv", fs::path(dir) / "test.tsv"};
}

void print_epochs(const std::vector<cdn::EpochReport>& reports, int selection_k) {
  for (const auto& r : reports) {
    std::printf("  epoch %3d  loss %.6f  R@%d %.4f  N@%d %.4f", r.epoch, r.train_loss,
                selection_k, r.recall, selection_k, r.ndcg);
    if (r.tp_weight && r.fp_weight)
      std::printf("  tp_w %.4f  fp_w %.4f", *r.tp_weight, *r.fp_weight);
    std::printf("  %.2fs\n", r.seconds);
  }
}

int run_train(const TrainParams& p) {
  if (!fs::exists(fs::path(p.split_dir) / "train.tsv"))
    throw UsageError("split dir missing train.tsv: " + p.split_dir);
  auto seeds = p.seeds.empty() ? std::vector<std::uint64_t>{p.seed} : parse_seed_list(p.seeds);
  if (seeds.empty()) throw UsageError("no seeds given");
  int workers = cdn::resolve_workers(p.workers);
  // validates flag combinations before any compute
  make_train_config(p.knobs, seeds[0], workers);

  cdn::DataSplit split = cdn::load_split(p.split_dir);
  cdn::RankingContext test_ctx = cdn::make_ranking_context(split.train, split.test, false);
  fs::path out(p.out);
  fs::create_directories(out);

  std::vector<std::string> artifacts;
  std::vector<double> recall_sum, ndcg_sum;
  std::vector<int> eval_ks;
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    cdn::TrainConfig cfg = make_train_config(p.knobs, seeds[si], workers);
    eval_ks = cfg.eval_ks;
    std::printf("train seed %llu (%zu/%zu) model=%s weighting=%s alpha=%g beta=%g\n",
                static_cast<unsigned long long>(seeds[si]), si + 1, seeds.size(),
                p.knobs.model.c_str(), p.knobs.weighting.c_str(), cfg.alpha, cfg.beta);
    cdn::TrainResult res = cdn::train(split, cfg);
    print_epochs(res.reports, cfg.selection_k);
    std::printf("  best epoch %d, validation R@%d %.4f\n", res.best_epoch, cfg.selection_k,
                res.best_score);

    std::string tag = "seed" + std::to_string(seeds[si]);
    cdn::write_text_file(out / ("epochs_" + tag + ".csv"), cdn::epoch_reports_csv(res.reports));
    cdn::save_model(*res.model, out / ("model_" + tag + ".bin"));
    cdn::MetricsReport test = cdn::evaluate_ranking(*res.model, test_ctx, cfg.eval_ks, workers);
    cdn::write_text_file(out / ("metrics_" + tag + ".csv"), test.to_csv());
    cdn::write_text_file(out / ("per_user_" + tag + ".json"), test.to_json());
    artifacts.push_back("epochs_" + tag + ".csv");
    artifacts.push_back("model_" + tag + ".bin");
    artifacts.push_back("metrics_" + tag + ".csv");
    artifacts.push_back("per_user_" + tag + ".json");

    if (recall_sum.empty()) {
      recall_sum.assign(cfg.eval_ks.size(), 0.0);
      ndcg_sum.assign(cfg.eval_ks.size(), 0.0);
    }
    for (std::size_t j = 0; j < cfg.eval_ks.size(); ++j) {
      recall_sum[j] += test.recall_mean[j];
      ndcg_sum[j] += test.ndcg_mean[j];
    }

    if (p.dump_weights) {
      res.final_table.save(out / ("weights_" + tag + ".tsv"));
      artifacts.push_back("weights_" + tag + ".tsv");
    }
  }

  std::string summary = "metric,K,value\n";
  for (std::size_t j = 0; j < eval_ks.size(); ++j)
    summary += cdn::csv_row({"recall", std::to_string(eval_ks[j]),
                             cdn::fmt_fixed(recall_sum[j] / double(seeds.size()), 6)});
  for (std::size_t j = 0; j < eval_ks.size(); ++j)
    summary += cdn::csv_row({"ndcg", std::to_string(eval_ks[j]),
                             cdn::fmt_fixed(ndcg_sum[j] / double(seeds.size()), 6)});
  cdn::write_text_file(out / "metrics_summary.csv", summary);
  artifacts.push_back("metrics_summary.csv");

  write_manifest(out, "train", to_json(p), digest_inputs(split_files(p.split_dir)), artifacts,
                 seeds);
  std::printf("wrote %zu artifacts to %s\n", artifacts.size() + 1, p.out.c_str());
  return 0;
}

// ------------------------------------------------------------- ablate

struct AblateParams {
  std::string split_dir;
  TrainKnobs knobs;
  std::string grid = "default";  // or ";"-separated combos like "bw,if;bw,if,uf"
  std::string seeds = "17,18,19";
  std::uint64_t seed = 17;
  std::string out = "ablation";
  int workers = 0;
};

json to_json(const AblateParams& p) {
  json j;
  j["split_dir"] = p.split_dir;
  j["knobs"] = to_json(p.knobs);
  j["grid"] = p.grid;
  j["seeds"] = p.seeds;
  j["seed"] = p.seed;
  j["workers"] = p.workers;
  return j;
}

void from_json_into(const json& j, AblateParams& p) {
  p.split_dir = j.at("split_dir");
  from_json_into(j.at("knobs"), p.knobs);
  p.grid = j.at("grid");
  p.seeds = j.at("seeds");
  p.seed = j.at("seed");
  p.workers = j.at("workers");
}

std::vector<cdn::ComponentToggles> parse_ablation_grid(const std::string& text) {
  if (text.empty() || text == "default") return cdn::default_ablation_grid();
  std::vector<cdn::ComponentToggles> grid;
  std::string cur;
  auto flush = [&]() {
    grid.push_back(parse_components(cur));
    cur.clear();
  };
  for (char c : text) {
    if (c == ';') flush();
    else cur += c;
  }
  flush();
  return grid;
}

int run_ablate(const AblateParams& p) {
  if (!fs::exists(fs::path(p.split_dir) / "train.tsv"))
    throw UsageError("split dir missing train.tsv: " + p.split_dir);
  auto seeds = p.seeds.empty() ? std::vector<std::uint64_t>{p.seed} : parse_seed_list(p.seeds);
  if (seeds.empty()) throw UsageError("no seeds given");
  int workers = cdn::resolve_workers(p.workers);
  cdn::TrainConfig base = make_train_config(p.knobs, seeds[0], workers);

  cdn::DataSplit split = cdn::load_split(p.split_dir);
  auto rows = cdn::ablate(split, base, parse_ablation_grid(p.grid), seeds);

  auto mark = [](bool on) { return std::string(on ? "1" : "0"); };
  std::vector<std::string> header = {"bw", "if", "uf"};
  for (int k : base.eval_ks) header.push_back("recall@" + std::to_string(k));
  for (int k : base.eval_ks) header.push_back("ndcg@" + std::to_string(k));
  std::string table = cdn::csv_row(header);
  std::string per_seed = cdn::csv_row({"bw", "if", "uf", "seed", "metric", "K", "value"});
  for (const auto& row : rows) {
    std::vector<std::string> fields = {mark(row.toggles.base_weight),
                                       mark(row.toggles.item_factor),
                                       mark(row.toggles.user_factor)};
    for (double v : row.recall_mean) fields.push_back(cdn::fmt_fixed(v, 6));
    for (double v : row.ndcg_mean) fields.push_back(cdn::fmt_fixed(v, 6));
    table += cdn::csv_row(fields);
    for (std::size_t si = 0; si < row.seeds.size(); ++si)
      for (std::size_t j = 0; j < base.eval_ks.size(); ++j) {
        auto seed_str = std::to_string(row.seeds[si]);
        auto k_str = std::to_string(base.eval_ks[j]);
        per_seed += cdn::csv_row({mark(row.toggles.base_weight), mark(row.toggles.item_factor),
                                  mark(row.toggles.user_factor), seed_str, "recall", k_str,
                                  cdn::fmt_fixed(row.per_seed_test[si].recall_mean[j], 6)});
        per_seed += cdn::csv_row({mark(row.toggles.base_weight), mark(row.toggles.item_factor),
                                  mark(row.toggles.user_factor), seed_str, "ndcg", k_str,
                                  cdn::fmt_fixed(row.per_seed_test[si].ndcg_mean[j], 6)});
      }
  }

  fs::path out(p.out);
  cdn::write_text_file(out / "ablation.csv", table);
  cdn::write_text_file(out / "ablation_per_seed.csv", per_seed);
  write_manifest(out, "ablate", to_json(p), digest_inputs(split_files(p.split_dir)),
                 {"ablation.csv", "ablation_per_seed.csv"}, seeds);
  std::printf("%s", table.c_str());
  return 0;
}

// ------------------------------------------------------------- sweep

struct SweepParams {
  std::string split_dir;
  TrainKnobs knobs;
  std::string alphas = "0,1,2,3,4,5";
  std::string betas = "0,1,2,3,4,5";
  std::string seeds = "17,18,19";
  std::uint64_t seed = 17;
  bool stencil = false;
  std::string anchors;  // "a:b;a:b" pairs for stencil mode
  double step = 0.01;
  int cell_epochs = 40;
  std::string out = "sweep";
  int workers = 0;
};

json to_json(const SweepParams& p) {
  json j;
  j["split_dir"] = p.split_dir;
  j["knobs"] = to_json(p.knobs);
  j["alphas"] = p.alphas;
  j["betas"] = p.betas;
  j["seeds"] = p.seeds;
  j["seed"] = p.seed;
  j["stencil"] = p.stencil;
  j["anchors"] = p.anchors;
  j["step"] = p.step;
  j["cell_epochs"] = p.cell_epochs;
  j["workers"] = p.workers;
  return j;
}

void from_json_into(const json& j, SweepParams& p) {
  p.split_dir = j.at("split_dir");
  from_json_into(j.at("knobs"), p.knobs);
  p.alphas = j.at("alphas");
  p.betas = j.at("betas");
  p.seeds = j.at("seeds");
  p.seed = j.at("seed");
  p.stencil = j.at("stencil");
  p.anchors = j.at("anchors");
  p.step = j.at("step");
  p.cell_epochs = j.at("cell_epochs");
  p.workers = j.at("workers");
}

std::vector<std::pair<double, double>> parse_anchors(const std::string& text) {
  std::vector<std::pair<double, double>> anchors;
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) return;
    auto colon = cur.find(':');
    if (colon == std::string::npos) throw UsageError("anchor needs alpha:beta, got " + cur);
    anchors.emplace_back(std::stod(cur.substr(0, colon)), std::stod(cur.substr(colon + 1)));
    cur.clear();
  };
  for (char c : text) {
    if (c == ';') flush();
    else if (!std::isspace(static_cast<unsigned char>(c))) cur += c;
  }
  flush();
  return anchors;
}

int run_sweep(const SweepParams& p) {
  if (!fs::exists(fs::path(p.split_dir) / "train.tsv"))
    throw UsageError("split dir missing train.tsv: " + p.split_dir);
  auto seeds = p.seeds.empty() ? std::vector<std::uint64_t>{p.seed} : parse_seed_list(p.seeds);
  if (seeds.empty()) throw UsageError("no seeds given");
  int workers = cdn::resolve_workers(p.workers);
  cdn::TrainConfig base = make_train_config(p.knobs, seeds[0], workers);
  cdn::DataSplit split = cdn::load_split(p.split_dir);

  fs::path out(p.out);
  fs::create_directories(out);
  std::vector<std::string> artifacts;

  if (p.stencil) {
    auto anchors = parse_anchors(p.anchors);
    if (anchors.empty()) throw UsageError("--stencil needs --anchors \"a:b;a:b\"");
    auto verdicts =
        cdn::stencil_verdicts(split, base, anchors, p.step, seeds, workers, p.cell_epochs);
    cdn::write_text_file(out / "verdicts.csv", cdn::verdicts_csv(verdicts));
    artifacts.push_back("verdicts.csv");
    for (const auto& v : verdicts)
      std::printf("anchor (%.3f, %.3f): H11=%.4g det=%.4g -> %s\n", v.alpha, v.beta, v.h11,
                  v.det_h, cdn::to_string(v.classification).c_str());
  } else {
    auto alphas = parse_double_list(p.alphas, "alpha");
    auto betas = parse_double_list(p.betas, "beta");
    auto surface = cdn::sweep(split, base, alphas, betas, seeds, workers, p.cell_epochs);
    cdn::write_text_file(out / "surface.csv", cdn::surface_csv(surface));
    cdn::write_text_file(out / "surface.svg", cdn::surface_svg(surface));
    artifacts.push_back("surface.csv");
    artifacts.push_back("surface.svg");
    std::printf("%s", cdn::surface_csv(surface).c_str());
  }

  write_manifest(out, "sweep", to_json(p), digest_inputs(split_files(p.split_dir)), artifacts,
                 seeds);
  return 0;
}

// ------------------------------------------------------------- wiring

template <class Params>
void apply_manifest(const std::string& manifest_path, const std::string& command, Params& params,
                    const CLI::App* cmd, std::string* out_field, int* workers_field) {
  if (manifest_path.empty()) return;
  json m = load_manifest(manifest_path, command);
  std::string cli_out = *out_field;
  int cli_workers = workers_field ? *workers_field : 0;
  from_json_into(m.at("config"), params);
  if (cmd->count("--out")) *out_field = cli_out;
  if (workers_field && cmd->count("--workers")) *workers_field = cli_workers;
  verify_manifest_inputs(m);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CrossDenoise: entity-aware denoising for implicit-feedback recommenders"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file with [subcommand] sections");

  PrepareParams prep;
  std::string prep_manifest;
  auto* cmd_prepare = app.add_subcommand("prepare", "binarize ratings and write an 8:1:1 split");
  cmd_prepare->fallthrough();
  cmd_prepare->add_option("--input", prep.input, "ratings file (user, item, rating[, ts])");
  cmd_prepare->add_option("--delimiter", prep.delimiter, "tab, comma, or one character");
  cmd_prepare->add_option("--threshold", prep.threshold, "ratings <= threshold are noise");
  cmd_prepare->add_option("--ratios", prep.ratios, "train,valid,test ratio");
  cmd_prepare->add_option("--seed", prep.seed, "split seed");
  cmd_prepare->add_option("--out", prep.out, "output directory");
  cmd_prepare->add_option("--from-manifest", prep_manifest, "rerun from a manifest");

  TrainParams tr;
  std::string tr_manifest;
  auto* cmd_train = app.add_subcommand("train", "train one backbone under a weighting strategy");
  cmd_train->fallthrough();
  cmd_train->add_option("--split", tr.split_dir, "prepared split directory")->required(false);
  add_knob_options(cmd_train, tr.knobs);
  cmd_train->add_option("--seed", tr.seed, "single seed");
  cmd_train->add_option("--seeds", tr.seeds, "comma list of seeds (overrides --seed)");
  cmd_train->add_option("--out", tr.out, "output directory");
  cmd_train->add_option("--workers", tr.workers, "worker threads (0 = auto)")
      ->envname("CROSSDENOISE_WORKERS");
  cmd_train->add_flag("--dump-weights", tr.dump_weights,
                      "write the final per-pair weight table per seed");
  cmd_train->add_option("--from-manifest", tr_manifest, "rerun from a manifest");

  AblateParams ab;
  std::string ab_manifest;
  auto* cmd_ablate = app.add_subcommand("ablate", "component ablation with shared seeds");
  cmd_ablate->fallthrough();
  cmd_ablate->add_option("--split", ab.split_dir, "prepared split directory");
  add_knob_options(cmd_ablate, ab.knobs);
  cmd_ablate->add_option("--grid", ab.grid,
                         "\";\"-separated component combos, or \"default\" for the full table");
  cmd_ablate->add_option("--seed", ab.seed, "single seed (when --seeds is absent)");
  cmd_ablate->add_option("--seeds", ab.seeds, "comma list of seeds");
  cmd_ablate->add_option("--out", ab.out, "output directory");
  cmd_ablate->add_option("--workers", ab.workers, "worker threads (0 = auto)")
      ->envname("CROSSDENOISE_WORKERS");
  cmd_ablate->add_option("--from-manifest", ab_manifest, "rerun from a manifest");

  SweepParams sw;
  std::string sw_manifest;
  auto* cmd_sweep = app.add_subcommand("sweep", "(alpha, beta) landscape or stencil verdicts");
  cmd_sweep->fallthrough();
  cmd_sweep->add_option("--split", sw.split_dir, "prepared split directory");
  add_knob_options(cmd_sweep, sw.knobs);
  cmd_sweep->add_option("--seed", sw.seed, "single seed (when --seeds is absent)");
  cmd_sweep->add_option("--alphas", sw.alphas, "comma list of alpha grid values");
  cmd_sweep->add_option("--betas", sw.betas, "comma list of beta grid values");
  cmd_sweep->add_option("--seeds", sw.seeds, "comma list of seeds per point");
  cmd_sweep->add_flag("--stencil", sw.stencil, "3x3 Hessian stencil mode");
  cmd_sweep->add_option("--anchors", sw.anchors, "stencil anchors \"a:b;a:b\"");
  cmd_sweep->add_option("--step", sw.step, "stencil step size");
  cmd_sweep->add_option("--cell-epochs", sw.cell_epochs, "max epochs per sweep cell");
  cmd_sweep->add_option("--out", sw.out, "output directory");
  cmd_sweep->add_option("--workers", sw.workers, "worker threads (0 = auto)")
      ->envname("CROSSDENOISE_WORKERS");
  cmd_sweep->add_option("--from-manifest", sw_manifest, "rerun from a manifest");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_prepare->parsed()) {
      apply_manifest(prep_manifest, "prepare", prep, cmd_prepare, &prep.out, nullptr);
      return run_prepare(prep);
    }
    if (cmd_train->parsed()) {
      apply_manifest(tr_manifest, "train", tr, cmd_train, &tr.out, &tr.workers);
      return run_train(tr);
    }
    if (cmd_ablate->parsed()) {
      if (cmd_ablate->count("--seed") && !cmd_ablate->count("--seeds"))
        ab.seeds = std::to_string(ab.seed);
      apply_manifest(ab_manifest, "ablate", ab, cmd_ablate, &ab.out, &ab.workers);
      return run_ablate(ab);
    }
    if (cmd_sweep->parsed()) {
      if (cmd_sweep->count("--seed") && !cmd_sweep->count("--seeds"))
        sw.seeds = std::to_string(sw.seed);
      apply_manifest(sw_manifest, "sweep", sw, cmd_sweep, &sw.out, &sw.workers);
      return run_sweep(sw);
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const cdn::ContractError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
