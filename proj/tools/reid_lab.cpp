// Experiment driver: synth / train / evaluate / rerank / gradcheck / compare.
// Configuration is a single JSON document with strict unknown-key rejection
// so hyperparameter typos fail loudly instead of silently using defaults.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "reidlab/gradcheck.hpp"
#include "reidlab/rank_eval.hpp"
#include "reidlab/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace reidlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;       // assertion / acceptance failure
constexpr int kExitValidation = 2; // bad config or inputs

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument("config: unknown key '" + key + "' in " +
                                  where);
  }
}

struct DatasetSource {
  std::optional<SyntheticSpec> synthetic;
  std::string market_dir;
  std::string dataset_file;
  std::string query_features;
  std::string gallery_features;
};

struct ModelConfig {
  std::vector<int> hidden = {64};
  int feature_dim = 32;
  std::string activation = "relu";
  int latent_dim = 16;  // VIB mode; default half the feature width
};

struct EvalConfig {
  int max_rank = 10;
  bool rerank = false;
  int k1 = 20;
  int k2 = 6;
  double lambda = 0.3;
  bool use_protocol_mask = true;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  DatasetSource dataset;
  ModelConfig model;
  std::vector<LossTerm> loss_terms = {{LossVariant::kPlainXent, 0.0}};
  double alpha = 1.0;
  double base_lr = 5e-4;
  int epochs = 60;
  int batch_size = 32;
  int vib_samples = 1;
  EvalConfig eval;
  std::vector<std::string> compare_variants = {"xent", "ls", "cp", "vib"};
  double beta_ls = 0.1;
  double beta_cp = 0.085;
  double beta_vib = 0.01;
};

SyntheticSpec parse_synthetic(const json& j) {
  check_keys(j, "dataset.synthetic",
             {"num_identities", "samples_per_identity", "feature_dim",
              "confusable_pairs", "sigma_within", "delta_pair", "delta_far",
              "num_cameras", "disjoint_train_test"});
  SyntheticSpec s;
  s.num_identities = j.value("num_identities", s.num_identities);
  s.samples_per_identity = j.value("samples_per_identity", s.samples_per_identity);
  s.feature_dim = j.value("feature_dim", s.feature_dim);
  s.confusable_pairs = j.value("confusable_pairs", s.confusable_pairs);
  s.sigma_within = j.value("sigma_within", s.sigma_within);
  s.delta_pair = j.value("delta_pair", s.delta_pair);
  s.delta_far = j.value("delta_far", s.delta_far);
  s.num_cameras = j.value("num_cameras", s.num_cameras);
  s.disjoint_train_test = j.value("disjoint_train_test", s.disjoint_train_test);
  s.validate();
  return s;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  json j = json::parse(in);
  check_keys(j, "top level",
             {"seed", "dataset", "model", "train", "eval", "compare"});
  ExperimentConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);

  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    check_keys(d, "dataset",
               {"synthetic", "market_dir", "dataset_file", "query_features",
                "gallery_features"});
    int sources = 0;
    if (d.contains("synthetic")) {
      cfg.dataset.synthetic = parse_synthetic(d["synthetic"]);
      ++sources;
    }
    if (d.contains("market_dir")) {
      cfg.dataset.market_dir = d["market_dir"].get<std::string>();
      ++sources;
    }
    if (d.contains("dataset_file")) {
      cfg.dataset.dataset_file = d["dataset_file"].get<std::string>();
      ++sources;
    }
    if (d.contains("query_features") || d.contains("gallery_features")) {
      cfg.dataset.query_features = d.value("query_features", "");
      cfg.dataset.gallery_features = d.value("gallery_features", "");
      ++sources;
    }
    if (sources != 1)
      throw std::invalid_argument("config: dataset needs exactly one source");
  } else {
    cfg.dataset.synthetic = SyntheticSpec{};
  }

  if (j.contains("model")) {
    const json& m = j["model"];
    check_keys(m, "model", {"hidden", "feature_dim", "activation", "latent_dim"});
    if (m.contains("hidden")) cfg.model.hidden = m["hidden"].get<std::vector<int>>();
    cfg.model.feature_dim = m.value("feature_dim", cfg.model.feature_dim);
    cfg.model.activation = m.value("activation", cfg.model.activation);
    cfg.model.latent_dim = m.value("latent_dim", cfg.model.feature_dim / 2);
  }

  if (j.contains("train")) {
    const json& t = j["train"];
    check_keys(t, "train",
               {"variants", "alpha", "base_lr", "epochs", "batch_size",
                "vib_samples", "beta_ls", "beta_cp", "beta_vib"});
    cfg.alpha = t.value("alpha", cfg.alpha);
    cfg.base_lr = t.value("base_lr", cfg.base_lr);
    cfg.epochs = t.value("epochs", cfg.epochs);
    cfg.batch_size = t.value("batch_size", cfg.batch_size);
    cfg.vib_samples = t.value("vib_samples", cfg.vib_samples);
    cfg.beta_ls = t.value("beta_ls", cfg.beta_ls);
    cfg.beta_cp = t.value("beta_cp", cfg.beta_cp);
    cfg.beta_vib = t.value("beta_vib", cfg.beta_vib);
    if (t.contains("variants")) {
      cfg.loss_terms.clear();
      for (const auto& name : t["variants"]) {
        const LossVariant v = loss_variant_from_name(name.get<std::string>());
        double beta = 0.0;
        if (v == LossVariant::kLabelSmoothing) beta = cfg.beta_ls;
        if (v == LossVariant::kConfidencePenalty) beta = cfg.beta_cp;
        if (v == LossVariant::kVib) beta = cfg.beta_vib;
        cfg.loss_terms.push_back({v, beta});
      }
    }
  }

  if (j.contains("eval")) {
    const json& e = j["eval"];
    check_keys(e, "eval",
               {"max_rank", "rerank", "k1", "k2", "lambda", "protocol_mask"});
    cfg.eval.max_rank = e.value("max_rank", cfg.eval.max_rank);
    cfg.eval.rerank = e.value("rerank", cfg.eval.rerank);
    cfg.eval.k1 = e.value("k1", cfg.eval.k1);
    cfg.eval.k2 = e.value("k2", cfg.eval.k2);
    cfg.eval.lambda = e.value("lambda", cfg.eval.lambda);
    cfg.eval.use_protocol_mask = e.value("protocol_mask", cfg.eval.use_protocol_mask);
  }

  if (j.contains("compare")) {
    const json& c = j["compare"];
    check_keys(c, "compare", {"variants"});
    if (c.contains("variants"))
      cfg.compare_variants = c["variants"].get<std::vector<std::string>>();
  }
  return cfg;
}

Dataset load_dataset_from(const ExperimentConfig& cfg) {
  if (cfg.dataset.synthetic)
    return generate_confusable(*cfg.dataset.synthetic, cfg.seed);
  if (!cfg.dataset.market_dir.empty()) {
    if (!fs::is_directory(cfg.dataset.market_dir))
      throw std::invalid_argument("config: dataset path does not exist: " +
                                  cfg.dataset.market_dir);
    return load_market_dir(cfg.dataset.market_dir);
  }
  if (!cfg.dataset.dataset_file.empty()) {
    if (!fs::is_regular_file(cfg.dataset.dataset_file))
      throw std::invalid_argument("config: dataset path does not exist: " +
                                  cfg.dataset.dataset_file);
    return load_dataset(cfg.dataset.dataset_file);
  }
  throw std::invalid_argument("config: this command needs a trainable dataset");
}

std::size_t input_dim_of(const Dataset& ds, const PipelineConfig& pipeline) {
  const Sample& first = !ds.train.empty() ? ds.train.front() : ds.query.front();
  RngStream unused(0);
  return prepare_input(first, pipeline, false, unused).size();
}

EncoderSpec make_encoder_spec(const ExperimentConfig& cfg, std::size_t input_dim,
                              bool vib) {
  EncoderSpec spec;
  spec.layer_sizes.push_back(static_cast<int>(input_dim));
  for (int h : cfg.model.hidden) spec.layer_sizes.push_back(h);
  spec.layer_sizes.push_back(cfg.model.feature_dim);
  spec.activation = activation_from_name(cfg.model.activation);
  spec.vib_head = vib;
  spec.latent_dim = vib ? cfg.model.latent_dim : 0;
  spec.validate();
  return spec;
}

TrainConfig make_train_config(const ExperimentConfig& cfg,
                              std::vector<LossTerm> terms) {
  TrainConfig tc;
  tc.loss.terms = std::move(terms);
  tc.loss.alpha = cfg.alpha;
  tc.base_lr = cfg.base_lr;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.seed = cfg.seed;
  tc.vib_samples = cfg.vib_samples;
  return tc;
}

bool has_vib_term(const std::vector<LossTerm>& terms) {
  for (const auto& t : terms)
    if (t.variant == LossVariant::kVib) return true;
  return false;
}

void write_train_report_csv(const std::string& path, const TrainReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << "epoch,mean_loss,mean_predicted_entropy,mean_sigma,lr\n";
  for (const auto& r : report.epochs)
    out << r.epoch << ',' << r.mean_loss << ',' << r.mean_predicted_entropy
        << ',' << r.mean_sigma << ',' << r.lr << '\n';
}

FeatureSet features_of(const EncoderModel& model,
                       const std::vector<Sample>& samples, bool vib) {
  FeatureSet fs;
  fs.features = extract_features(
      model, samples, vib ? FeatureMode::kVibMean : FeatureMode::kDeterministic);
  for (const auto& s : samples) {
    fs.ids.push_back(s.identity);
    fs.cameras.push_back(s.camera);
  }
  return fs;
}

struct EvalInputs {
  FeatureSet query;
  FeatureSet gallery;
};

EvalReport run_eval(const EvalInputs& in, const EvalConfig& eval,
                    bool reranked) {
  RealMatrix dist = l2_distance_matrix(in.query.features, in.gallery.features);
  if (reranked) {
    const int n = static_cast<int>(in.query.features.rows + in.gallery.features.rows);
    const int k1 = std::min(eval.k1, n - 1);  // desk-scale clamp
    const int k2 = std::min(eval.k2, k1);
    dist = k_reciprocal_rerank(in.query.features, in.gallery.features, k1, k2,
                               eval.lambda);
  }
  MatchMask mask = eval.use_protocol_mask
                       ? protocol_mask(in.query.meta(), in.gallery.meta())
                       : MatchMask(in.query.features.rows,
                                   in.gallery.features.rows, true);
  const int max_rank =
      std::min<int>(eval.max_rank, static_cast<int>(in.gallery.features.rows));
  return evaluate_ranking(dist, mask, in.query.ids, in.gallery.ids, max_rank);
}

void write_eval_outputs(const fs::path& out_dir, const EvalInputs& in,
                        const EvalConfig& eval) {
  EvalReport raw = run_eval(in, eval, false);
  write_metrics_csv((out_dir / "metrics.csv").string(), raw);
  write_cmc_csv((out_dir / "cmc.csv").string(), raw);
  write_cmc_svg((out_dir / "cmc.svg").string(), raw);
  std::printf("mAP %.6f  rank1 %.6f  (%d queries)\n", raw.map,
              raw.cmc.empty() ? 0.0 : raw.cmc[0], raw.num_queries_evaluated);
  if (eval.rerank) {
    EvalReport rr = run_eval(in, eval, true);
    std::ofstream app(out_dir / "metrics.csv", std::ios::app);
    app.precision(17);
    app << "mAP_rerank," << rr.map << '\n';
    for (std::size_t k = 0; k < rr.cmc.size(); ++k)
      app << "rank" << (k + 1) << "_rerank," << rr.cmc[k] << '\n';
    std::printf("mAP(rerank) %.6f  rank1(rerank) %.6f\n", rr.map,
                rr.cmc.empty() ? 0.0 : rr.cmc[0]);
  }
}

// ---- subcommands ------------------------------------------------------

int cmd_synth(const std::string& config_path, std::uint64_t seed_override,
              bool seed_set, const std::string& out_file) {
  ExperimentConfig cfg =
      config_path.empty() ? ExperimentConfig{} : parse_config(config_path);
  if (!cfg.dataset.synthetic.has_value())
    cfg.dataset.synthetic = SyntheticSpec{};
  if (seed_set) cfg.seed = seed_override;
  const Dataset ds = generate_confusable(*cfg.dataset.synthetic, cfg.seed);
  save_dataset(ds, out_file);
  std::printf("wrote %s (train %zu, query %zu, gallery %zu)\n",
              out_file.c_str(), ds.train.size(), ds.query.size(),
              ds.gallery.size());
  return kExitOk;
}

int cmd_train(const std::string& config_path, std::uint64_t seed_override,
              bool seed_set, const std::string& out_dir) {
  ExperimentConfig cfg =
      config_path.empty() ? ExperimentConfig{} : parse_config(config_path);
  if (seed_set) cfg.seed = seed_override;
  const Dataset ds = load_dataset_from(cfg);
  if (ds.train.empty())
    throw std::invalid_argument("train: dataset has no train split");

  TrainConfig tc = make_train_config(cfg, cfg.loss_terms);
  const bool vib = has_vib_term(cfg.loss_terms);
  const EncoderSpec spec =
      make_encoder_spec(cfg, input_dim_of(ds, tc.pipeline), vib);
  tc.validate();

  const TrainResult result = train(ds, spec, tc);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  OptimizerState opt;  // fresh state is enough for inference checkpoints
  save_checkpoint((out / "checkpoint.bin").string(), result.model, result.head,
                  opt);
  write_train_report_csv((out / "train_report.csv").string(), result.report);
  if (!ds.query.empty()) {
    save_features((out / "features_query.txt").string(),
                  features_of(result.model, ds.query, vib));
    save_features((out / "features_gallery.txt").string(),
                  features_of(result.model, ds.gallery, vib));
  }
  std::printf("final loss %.6f  entropy %.6f\n",
              result.report.epochs.back().mean_loss,
              result.report.epochs.back().mean_predicted_entropy);
  return kExitOk;
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint,
                 const std::string& query_features,
                 const std::string& gallery_features, const EvalConfig& flags,
                 const std::vector<std::string>& set_flags,
                 const std::string& out_dir) {
  ExperimentConfig cfg =
      config_path.empty() ? ExperimentConfig{} : parse_config(config_path);
  EvalConfig eval = cfg.eval;
  for (const auto& f : set_flags) {
    if (f == "rerank") eval.rerank = flags.rerank;
    if (f == "k1") eval.k1 = flags.k1;
    if (f == "k2") eval.k2 = flags.k2;
    if (f == "lambda") eval.lambda = flags.lambda;
    if (f == "max_rank") eval.max_rank = flags.max_rank;
  }

  EvalInputs in;
  if (!query_features.empty() || !gallery_features.empty()) {
    if (query_features.empty() || gallery_features.empty())
      throw std::invalid_argument(
          "evaluate: need both --query-features and --gallery-features");
    in.query = load_features(query_features);
    in.gallery = load_features(gallery_features);
  } else if (!cfg.dataset.query_features.empty()) {
    in.query = load_features(cfg.dataset.query_features);
    in.gallery = load_features(cfg.dataset.gallery_features);
  } else {
    if (checkpoint.empty())
      throw std::invalid_argument(
          "evaluate: need --checkpoint when evaluating from a dataset");
    const Dataset ds = load_dataset_from(cfg);
    if (ds.query.empty())
      throw std::invalid_argument("evaluate: dataset has no query split");
    EncoderModel model;
    ClassifierHead head;
    OptimizerState opt;
    load_checkpoint(checkpoint, model, head, opt);
    in.query = features_of(model, ds.query, model.spec.vib_head);
    in.gallery = features_of(model, ds.gallery, model.spec.vib_head);
  }
  if (in.query.features.cols != in.gallery.features.cols)
    throw std::invalid_argument("evaluate: query/gallery feature dim mismatch");

  fs::create_directories(out_dir);
  write_eval_outputs(out_dir, in, eval);
  return kExitOk;
}

int cmd_rerank(const std::string& query_features,
               const std::string& gallery_features, int k1, int k2,
               double lambda, const std::string& out_dir) {
  EvalInputs in;
  in.query = load_features(query_features);
  in.gallery = load_features(gallery_features);
  const int n = static_cast<int>(in.query.features.rows + in.gallery.features.rows);
  k1 = std::min(k1, n - 1);
  k2 = std::min(k2, k1);
  const RealMatrix dist =
      k_reciprocal_rerank(in.query.features, in.gallery.features, k1, k2, lambda);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  {
    std::ofstream dcsv(out / "reranked_distances.csv");
    dcsv.precision(17);
    for (std::size_t i = 0; i < dist.rows; ++i) {
      for (std::size_t j = 0; j < dist.cols; ++j)
        dcsv << (j ? "," : "") << dist.at(i, j);
      dcsv << '\n';
    }
  }
  MatchMask mask = protocol_mask(in.query.meta(), in.gallery.meta());
  const int max_rank = std::min<int>(10, static_cast<int>(dist.cols));
  EvalReport report =
      evaluate_ranking(dist, mask, in.query.ids, in.gallery.ids, max_rank);
  write_metrics_csv((out / "metrics_rerank.csv").string(), report);
  std::printf("mAP(rerank) %.6f\n", report.map);
  return kExitOk;
}

int cmd_gradcheck(const std::string& only, bool inject_fault) {
  std::vector<GradCheckCase> cases = loss_gradchecks(12345, inject_fault);
  const std::vector<GradCheckCase> model_cases =
      model_gradchecks(12345, inject_fault);
  cases.insert(cases.end(), model_cases.begin(), model_cases.end());

  bool any = false, all_pass = true;
  std::printf("%-18s %-12s %-10s %s\n", "case", "max_rel_err", "tolerance",
              "status");
  for (const auto& c : cases) {
    if (!only.empty() && c.name.find(only) == std::string::npos) continue;
    any = true;
    all_pass = all_pass && c.pass;
    std::printf("%-18s %-12.3e %-10.0e %s\n", c.name.c_str(), c.max_rel_err,
                c.tolerance, c.pass ? "ok" : "FAIL");
  }
  if (!any) {
    std::fprintf(stderr, "gradcheck: no case matches --only %s\n", only.c_str());
    return kExitValidation;
  }
  return all_pass ? kExitOk : kExitFail;
}

int cmd_compare(const std::string& config_path, std::uint64_t seed_override,
                bool seed_set, const std::string& out_dir) {
  ExperimentConfig cfg =
      config_path.empty() ? ExperimentConfig{} : parse_config(config_path);
  if (seed_set) cfg.seed = seed_override;
  if (cfg.compare_variants.size() < 2)
    throw std::invalid_argument("compare: need at least 2 variants");
  const Dataset ds = load_dataset_from(cfg);
  if (ds.train.empty() || ds.query.empty())
    throw std::invalid_argument("compare: dataset needs train and query splits");

  struct Row {
    std::string variant;
    double map, rank1, entropy;
  };
  std::vector<Row> rows;
  for (const std::string& name : cfg.compare_variants) {
    const LossVariant v = loss_variant_from_name(name);
    std::vector<LossTerm> terms;
    if (v == LossVariant::kPlainXent)
      terms = {{v, 0.0}};
    else if (v == LossVariant::kLabelSmoothing)
      terms = {{v, cfg.beta_ls}};
    else if (v == LossVariant::kConfidencePenalty)
      terms = {{v, cfg.beta_cp}};
    else
      terms = {{v, cfg.beta_vib}};

    TrainConfig tc = make_train_config(cfg, terms);
    const bool vib = v == LossVariant::kVib;
    const EncoderSpec spec =
        make_encoder_spec(cfg, input_dim_of(ds, tc.pipeline), vib);
    const TrainResult result = train(ds, spec, tc);

    EvalInputs in;
    in.query = features_of(result.model, ds.query, vib);
    in.gallery = features_of(result.model, ds.gallery, vib);
    const EvalReport report = run_eval(in, cfg.eval, cfg.eval.rerank);
    rows.push_back({name, report.map, report.cmc.empty() ? 0.0 : report.cmc[0],
                    result.report.epochs.back().mean_predicted_entropy});
  }

  std::printf("%-8s %-10s %-10s %s\n", "variant", "mAP", "rank1",
              "pred_entropy");
  for (const auto& r : rows)
    std::printf("%-8s %-10.6f %-10.6f %.6f\n", r.variant.c_str(), r.map,
                r.rank1, r.entropy);

  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / "compare.csv");
  csv.precision(17);
  csv << "variant,mAP,rank1,pred_entropy\n";
  for (const auto& r : rows)
    csv << r.variant << ',' << r.map << ',' << r.rank1 << ',' << r.entropy
        << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"re-identification confidence-regularization lab"};
  app.require_subcommand(1);

  std::string config_path, out_path = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* sub, bool with_seed = true) {
    sub->add_option("--config", config_path, "JSON experiment config");
    sub->add_option("--out", out_path, "output directory (or file for synth)");
    if (with_seed)
      sub->add_option("--seed", seed, "seed override")
          ->each([&](const std::string&) { seed_set = true; });
  };

  CLI::App* synth = app.add_subcommand("synth", "emit a synthetic dataset file");
  add_common(synth);

  CLI::App* trn = app.add_subcommand("train", "train a model");
  add_common(trn);

  CLI::App* eva = app.add_subcommand("evaluate", "rank and score features");
  add_common(eva, false);
  std::string checkpoint, query_features, gallery_features;
  EvalConfig eval_flags;
  eva->add_option("--checkpoint", checkpoint, "model checkpoint");
  eva->add_option("--query-features", query_features, "query feature file");
  eva->add_option("--gallery-features", gallery_features, "gallery feature file");
  auto* f_rerank = eva->add_flag("--rerank", eval_flags.rerank);
  auto* f_k1 = eva->add_option("--k1", eval_flags.k1);
  auto* f_k2 = eva->add_option("--k2", eval_flags.k2);
  auto* f_lambda = eva->add_option("--lambda", eval_flags.lambda);
  auto* f_maxrank = eva->add_option("--max-rank", eval_flags.max_rank);

  CLI::App* rr = app.add_subcommand("rerank", "k-reciprocal re-ranking");
  rr->add_option("--query-features", query_features)->required();
  rr->add_option("--gallery-features", gallery_features)->required();
  int rr_k1 = 20, rr_k2 = 6;
  double rr_lambda = 0.3;
  rr->add_option("--k1", rr_k1);
  rr->add_option("--k2", rr_k2);
  rr->add_option("--lambda", rr_lambda);
  rr->add_option("--out", out_path);

  CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference audit");
  std::string only;
  bool inject_fault = false;
  gc->add_option("--only", only, "restrict to matching case names");
  gc->add_flag("--inject-fault", inject_fault)->group("");  // test hook

  CLI::App* cmp = app.add_subcommand("compare", "train and score loss variants");
  add_common(cmp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_name() == "CallForHelp" ? kExitOk : kExitValidation;
  }

  try {
    if (synth->parsed()) return cmd_synth(config_path, seed, seed_set, out_path);
    if (trn->parsed()) return cmd_train(config_path, seed, seed_set, out_path);
    if (eva->parsed()) {
      std::vector<std::string> set_flags;
      if (*f_rerank) set_flags.push_back("rerank");
      if (*f_k1) set_flags.push_back("k1");
      if (*f_k2) set_flags.push_back("k2");
      if (*f_lambda) set_flags.push_back("lambda");
      if (*f_maxrank) set_flags.push_back("max_rank");
      return cmd_evaluate(config_path, checkpoint, query_features,
                          gallery_features, eval_flags, set_flags, out_path);
    }
    if (rr->parsed())
      return cmd_rerank(query_features, gallery_features, rr_k1, rr_k2,
                        rr_lambda, out_path);
    if (gc->parsed()) return cmd_gradcheck(only, inject_fault);
    if (cmp->parsed()) return cmd_compare(config_path, seed, seed_set, out_path);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFail;
  }
  return kExitValidation;
}
