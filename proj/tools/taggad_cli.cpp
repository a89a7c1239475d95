// Command-line front end: train once on labeled source graphs, then score
// arbitrary target graphs zero-shot; plus utilities for synthetic benchmarks,
// anomaly injection, disassortativity metrics and ranking evaluation.
//
// Exit codes: 0 success, 2 input/validation error, 3 numerical failure.

#include <CLI11.hpp>

#include <charconv>
#include <iostream>

#include "taggad/taggad.hpp"

namespace {

using nlohmann::json;
using namespace taggad;

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ValidationError(what + ": unknown key '" + it.key() + "'");
  }
}

void apply_train_config_file(const json& j, TrainConfig& cfg) {
  reject_unknown_keys(j, {"epochs", "learning_rate", "beta1", "beta2", "epsilon",
                          "num_hops", "hidden_dim", "margin", "n_k", "latent_dim",
                          "bottleneck_dim", "seed", "score_pool_cap", "pair_cap"},
                      "train config");
  if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
  if (j.contains("learning_rate"))
    cfg.adam.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("beta1")) cfg.adam.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) cfg.adam.beta2 = j.at("beta2").get<double>();
  if (j.contains("epsilon")) cfg.adam.epsilon = j.at("epsilon").get<double>();
  if (j.contains("num_hops")) cfg.num_hops = j.at("num_hops").get<int>();
  if (j.contains("hidden_dim")) cfg.hidden_dim = j.at("hidden_dim").get<int>();
  if (j.contains("margin")) cfg.margin = j.at("margin").get<double>();
  if (j.contains("n_k")) cfg.n_k = j.at("n_k").get<int>();
  if (j.contains("latent_dim")) cfg.latent_dim = j.at("latent_dim").get<int>();
  if (j.contains("bottleneck_dim"))
    cfg.bottleneck_dim = j.at("bottleneck_dim").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
  if (j.contains("score_pool_cap"))
    cfg.score_pool_cap = j.at("score_pool_cap").get<int64_t>();
  if (j.contains("pair_cap")) cfg.pair_cap = j.at("pair_cap").get<int64_t>();
}

void apply_infer_config_file(const json& j, InferConfig& cfg) {
  reject_unknown_keys(j, {"anomaly_ratio", "k_vote", "n_k", "tau", "eps_stab",
                          "tsa_steps", "tsa_lr", "grid_points", "seed"},
                      "infer config");
  if (j.contains("anomaly_ratio"))
    cfg.anomaly_ratio = j.at("anomaly_ratio").get<double>();
  if (j.contains("k_vote")) cfg.k_vote = j.at("k_vote").get<int>();
  if (j.contains("n_k")) cfg.n_k = j.at("n_k").get<int>();
  if (j.contains("tau")) cfg.tau = j.at("tau").get<double>();
  if (j.contains("eps_stab")) cfg.eps_stab = j.at("eps_stab").get<double>();
  if (j.contains("tsa_steps")) cfg.tsa_steps = j.at("tsa_steps").get<int>();
  if (j.contains("tsa_lr")) cfg.tsa_lr = j.at("tsa_lr").get<double>();
  if (j.contains("grid_points")) cfg.grid_points = j.at("grid_points").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
}

json infer_config_to_json(const InferConfig& c) {
  return json{{"anomaly_ratio", c.anomaly_ratio}, {"k_vote", c.k_vote},
              {"n_k", c.n_k},                     {"tau", c.tau},
              {"eps_stab", c.eps_stab},           {"tsa_steps", c.tsa_steps},
              {"tsa_lr", c.tsa_lr},               {"grid_points", c.grid_points},
              {"seed", c.seed}};
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << content;
}

json report_to_json(const DisassortReport& r) {
  json j{{"nd", r.nd},
         {"sd", r.sd},
         {"ad", r.ad},
         {"h_node_source", r.h_node_source},
         {"h_node_target", r.h_node_target},
         {"h_struct_source", r.h_struct_source},
         {"h_struct_target", r.h_struct_target},
         {"n_source", r.n_source},
         {"n_target", r.n_target}};
  if (r.ad_star) j["ad_star"] = *r.ad_star;
  return j;
}

// ---------------------------------------------------------------- commands

int cmd_train(const std::vector<std::string>& source_dirs,
              const std::string& config_path, const std::string& out_path,
              const json& flag_overrides, int log_every) {
  TrainConfig cfg;
  if (!config_path.empty()) apply_train_config_file(load_json_file(config_path), cfg);
  apply_train_config_file(flag_overrides, cfg);  // flags beat the file

  std::vector<Graph> sources;
  for (const auto& dir : source_dirs) sources.push_back(load_graph(dir));
  if (cfg.epochs == 0)
    std::cerr << "warning: --epochs 0, writing an artifact with untrained parameters\n";

  auto result = train(sources, cfg);
  for (size_t e = 0; e < result.history.size(); ++e) {
    if (log_every > 0 && (e % size_t(log_every) == 0 || e + 1 == result.history.size()))
      std::cout << "epoch " << e << " loss=" << fmt(result.history[e].total)
                << " high=" << fmt(result.history[e].high)
                << " low=" << fmt(result.history[e].low) << "\n";
  }
  save_artifact(result.artifact, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_infer(const std::string& artifact_path, const std::string& target_dir,
              const std::string& config_path, const std::string& out_path,
              const std::string& report_path, const json& flag_overrides) {
  InferConfig cfg;
  if (!config_path.empty()) apply_infer_config_file(load_json_file(config_path), cfg);
  apply_infer_config_file(flag_overrides, cfg);

  ModelArtifact art = load_artifact(artifact_path);
  Graph target = load_graph(target_dir);
  auto res = infer(art, target, cfg);

  std::ostringstream csv;
  csv << "node_id,rs,as,s_ad,final\n";
  for (int i = 0; i < target.num_nodes; ++i)
    csv << i << ',' << fmt(res.channels.rs_raw.values[size_t(i)]) << ','
        << fmt(res.channels.as_raw.values[size_t(i)]) << ','
        << fmt(res.fused.values[size_t(i)]) << ','
        << fmt(res.final_scores.values[size_t(i)]) << '\n';
  write_text_file(out_path, csv.str());

  json report = report_to_json(res.report);
  report["fusion_weights"] = {{"w_nd", res.fusion.w_nd},
                              {"w_sd", res.fusion.w_sd},
                              {"tau", res.fusion.tau},
                              {"eps_stab", res.fusion.eps_stab}};
  report["reliability_weights"] = res.reliability.weights;
  report["reliability_degenerate"] = res.reliability.degenerate_single_class;
  report["m_per_channel"] = res.pseudo.m;
  report["k_vote"] = res.pseudo.k_vote;
  report["voted_positives"] =
      int(std::count(res.pseudo.voted.begin(), res.pseudo.voted.end(), 1));
  report["isolated_nodes"] = res.channels.isolated_nodes;
  report["zero_norm_terms"] = res.channels.zero_norm_terms;
  report["config"] = infer_config_to_json(cfg);
  std::string rpath = report_path.empty() ? out_path + ".report.json" : report_path;
  write_text_file(rpath, report.dump(2) + "\n");
  std::cout << "wrote " << out_path << " and " << rpath << "\n";
  return 0;
}

int cmd_metrics(const std::string& artifact_path,
                const std::vector<std::string>& target_dirs,
                const std::string& out_path, const json& flag_overrides) {
  InferConfig cfg;
  apply_infer_config_file(flag_overrides, cfg);
  ModelArtifact art = load_artifact(artifact_path);

  std::vector<DisassortReport> reports;
  std::vector<std::string> names;
  for (const auto& dir : target_dirs) {
    Graph target = load_graph(dir);
    auto channels = compute_target_channels(art, target, cfg);
    reports.push_back(target_disassort(art, channels, cfg.grid_points));
    names.push_back(target.name);
  }
  if (reports.size() >= 2) {
    std::vector<double> ads;
    for (const auto& r : reports) ads.push_back(r.ad);
    auto stars = ad_star(ads);
    for (size_t i = 0; i < reports.size(); ++i) reports[i].ad_star = stars[i];
  }

  json out;
  if (reports.size() == 1) {
    out = report_to_json(reports[0]);
    out["target"] = names[0];
  } else {
    out = json::array();
    for (size_t i = 0; i < reports.size(); ++i) {
      json r = report_to_json(reports[i]);
      r["target"] = names[i];
      out.push_back(r);
    }
  }
  json wrapped{{"reports", out}, {"config", infer_config_to_json(cfg)}};
  std::string text = wrapped.dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else {
    write_text_file(out_path, text);
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
  json j = load_json_file(spec_path);
  reject_unknown_keys(j, {"num_nodes", "num_blocks", "intra_block_edge_prob",
                          "inter_block_edge_prob", "feature_dim",
                          "feature_domain_shift", "anomaly_ratio", "seed"},
                      "synthetic spec");
  SyntheticDomainSpec spec = j.get<SyntheticDomainSpec>();
  Graph g = generate_synthetic_domain(spec);
  save_graph(g, out_dir);
  json echo = spec;
  write_text_file((std::filesystem::path(out_dir) / "spec.json").string(),
                  echo.dump(2) + "\n");
  std::cout << "wrote " << out_dir << " (" << g.num_nodes << " nodes, "
            << g.num_undirected_edges() << " edges, " << g.num_anomalies()
            << " anomalies)\n";
  return 0;
}

int cmd_inject(const std::string& in_dir, const std::string& out_dir,
               int num_cliques, int clique_size, int attr_targets,
               int candidate_pool, uint64_t seed) {
  Graph g = load_graph(in_dir);
  if (num_cliques > 0)
    g = inject_structural_anomalies(g, num_cliques, clique_size,
                                    mix_seed(seed, 1));
  if (attr_targets > 0)
    g = inject_attribute_anomalies(g, attr_targets,
                                   std::min(candidate_pool, g.num_nodes - 1),
                                   mix_seed(seed, 2));
  save_graph(g, out_dir);
  json echo{{"num_cliques", num_cliques},
            {"clique_size", clique_size},
            {"attr_targets", attr_targets},
            {"candidate_pool", candidate_pool},
            {"seed", seed}};
  write_text_file((std::filesystem::path(out_dir) / "inject.json").string(),
                  echo.dump(2) + "\n");
  std::cout << "wrote " << out_dir << " (" << g.num_anomalies()
            << " labeled anomalies)\n";
  return 0;
}

std::vector<double> read_score_column(const std::string& path,
                                      const std::string& column) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  std::vector<double> out;
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    return f;
  };
  auto header = split(line);
  int col = -1;
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == column) col = int(i);
  int lineno = 1;
  if (col < 0) {
    // no header: single column of floats, first line included
    out.push_back(detail::parse_double(detail::trim(line), path, lineno));
    while (std::getline(in, line)) {
      ++lineno;
      auto sv = detail::trim(line);
      if (!sv.empty()) out.push_back(detail::parse_double(sv, path, lineno));
    }
    return out;
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto fields = split(line);
    if (int(fields.size()) <= col)
      throw ParseError(path + ":" + std::to_string(lineno) + ": missing column '" +
                       column + "'");
    out.push_back(
        detail::parse_double(detail::trim(fields[size_t(col)]), path, lineno));
  }
  return out;
}

std::vector<int> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<int> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto sv = detail::trim(line);
    if (sv.empty()) continue;
    long v = detail::parse_int(sv, path, lineno);
    if (v != 0 && v != 1)
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": label must be 0 or 1");
    out.push_back(int(v));
  }
  return out;
}

int cmd_eval(const std::string& scores_path, const std::string& labels_path,
             const std::string& column, const std::string& out_path) {
  auto scores = read_score_column(scores_path, column);
  auto labels = read_label_file(labels_path);
  require(scores.size() == labels.size(),
          "eval: " + std::to_string(scores.size()) + " scores vs " +
              std::to_string(labels.size()) + " labels");
  double roc = auroc(scores, labels);
  double prc = auprc(scores, labels);
  std::cout << "auroc=" << fmt(roc) << " auprc=" << fmt(prc) << "\n";
  if (!out_path.empty()) {
    json j{{"auroc", roc},
           {"auprc", prc},
           {"n", scores.size()},
           {"config", {{"scores", scores_path}, {"labels", labels_path},
                       {"column", column}}}};
    write_text_file(out_path, j.dump(2) + "\n");
  }
  return 0;
}

int cmd_ablate(const std::string& artifact_path,
               const std::vector<std::string>& target_dirs,
               const std::vector<std::string>& variant_names,
               const std::vector<uint64_t>& seeds, const std::string& out_path,
               const std::string& summary_path, const json& flag_overrides) {
  InferConfig cfg;
  apply_infer_config_file(flag_overrides, cfg);
  ModelArtifact art = load_artifact(artifact_path);
  std::vector<Graph> targets;
  for (const auto& dir : target_dirs) targets.push_back(load_graph(dir));
  std::vector<Variant> variants;
  for (const auto& name : variant_names) variants.push_back(variant_from_name(name));

  auto results = run_ablation(art, targets, variants, seeds, cfg);

  std::ostringstream csv;
  csv << "dataset,variant,seed,auroc,auprc,runtime_ms\n";
  for (const auto& r : results)
    csv << r.dataset << ',' << r.variant << ',' << r.seed << ',' << fmt(r.auroc)
        << ',' << fmt(r.auprc) << ',' << fmt(r.runtime_ms) << '\n';
  write_text_file(out_path, csv.str());

  // per-variant mean and standard deviation over all (dataset, seed) cells
  json summary = json::object();
  for (const auto& name : variant_names) {
    std::vector<double> rocs, prcs;
    for (const auto& r : results)
      if (r.variant == name) {
        rocs.push_back(r.auroc);
        prcs.push_back(r.auprc);
      }
    auto mean_std = [](const std::vector<double>& v) {
      double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      double sd = v.size() > 1 ? std::sqrt(ss / double(v.size() - 1)) : 0.0;
      return std::pair<double, double>(mean, sd);
    };
    auto [roc_m, roc_s] = mean_std(rocs);
    auto [prc_m, prc_s] = mean_std(prcs);
    summary[name] = {{"auroc_mean", roc_m},
                     {"auroc_std", roc_s},
                     {"auprc_mean", prc_m},
                     {"auprc_std", prc_s},
                     {"runs", rocs.size()}};
  }
  json wrapped{{"variants", summary},
               {"seeds", seeds},
               {"config", infer_config_to_json(cfg)}};
  if (!summary_path.empty()) write_text_file(summary_path, wrapped.dump(2) + "\n");
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_sweep_k(const std::string& artifact_path, const std::string& target_dir,
                const std::vector<int>& k_values,
                const std::vector<uint64_t>& seeds, const std::string& out_path,
                const json& flag_overrides) {
  InferConfig cfg;
  apply_infer_config_file(flag_overrides, cfg);
  ModelArtifact art = load_artifact(artifact_path);
  Graph target = load_graph(target_dir);
  auto rows = sweep_k(art, target, k_values, seeds, cfg);
  std::ostringstream csv;
  csv << "k_vote,auroc,auprc,voted_positives\n";
  for (const auto& r : rows)
    csv << r.k_vote << ',' << fmt(r.auroc_mean) << ',' << fmt(r.auprc_mean) << ','
        << r.voted_positives << '\n';
  write_text_file(out_path, csv.str());
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TA-GGAD: train-once, zero-shot graph anomaly detection"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train on labeled source graphs");
  std::vector<std::string> source_dirs;
  std::string config_path, out_path;
  int log_every = 1;
  train_cmd->add_option("--sources", source_dirs, "source graph directories")
      ->required()
      ->expected(-1);
  train_cmd->add_option("--config", config_path, "JSON config file");
  train_cmd->add_option("--out", out_path, "output artifact path")->required();
  train_cmd->add_option("--log-every", log_every, "print losses every N epochs");
  double t_lr = -1, t_margin = -1;
  int t_epochs = -1, t_hops = -1, t_hidden = -1, t_nk = -1, t_latent = -1;
  int64_t t_seed = -1;
  train_cmd->add_option("--epochs", t_epochs, "training epochs (default 300)");
  train_cmd->add_option("--lr", t_lr, "Adam learning rate (default 5e-3)");
  train_cmd->add_option("--num-hops", t_hops, "propagation depth l (default 4)");
  train_cmd->add_option("--hidden-dim", t_hidden, "hidden width d_h (default 64)");
  train_cmd->add_option("--margin", t_margin, "contrastive margin (default 0.1)");
  train_cmd->add_option("--n-k", t_nk, "residual score sample size (default 256)");
  train_cmd->add_option("--latent-dim", t_latent, "PCA latent width d_u (default 64)");
  train_cmd->add_option("--seed", t_seed, "global seed (default 0)");

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "score one target graph zero-shot");
  std::string i_artifact, i_target, i_config, i_out, i_report;
  infer_cmd->add_option("--artifact", i_artifact, "trained artifact")->required();
  infer_cmd->add_option("--target", i_target, "target graph directory")->required();
  infer_cmd->add_option("--config", i_config, "JSON config file");
  infer_cmd->add_option("--out", i_out, "output scores.csv")->required();
  infer_cmd->add_option("--report", i_report,
                        "report JSON path (default <out>.report.json)");
  double i_ratio = -1, i_tau = -1, i_tsa_lr = -1;
  int i_kvote = -1, i_nk = -1, i_tsa_steps = -1, i_grid = -1;
  int64_t i_seed = -1;
  infer_cmd->add_option("--anomaly-ratio", i_ratio,
                        "assumed anomaly ratio for top-M (default 0.05)");
  infer_cmd->add_option("--k-vote", i_kvote, "voting threshold (default 1)");
  infer_cmd->add_option("--n-k", i_nk, "residual score sample size (default 256)");
  infer_cmd->add_option("--tau", i_tau, "ADA sharpness (default 1.0)");
  infer_cmd->add_option("--tsa-steps", i_tsa_steps, "TSA descent steps (default 200)");
  infer_cmd->add_option("--tsa-lr", i_tsa_lr, "TSA learning rate (default 0.5)");
  infer_cmd->add_option("--grid-points", i_grid, "KDE grid size (default 512)");
  infer_cmd->add_option("--seed", i_seed, "inference seed (default 0)");

  // metrics
  auto* metrics_cmd =
      app.add_subcommand("metrics", "ND/SD/AD disassortativity report");
  std::string m_artifact, m_out;
  std::vector<std::string> m_targets;
  int64_t m_seed = -1;
  int m_nk = -1, m_grid = -1;
  metrics_cmd->add_option("--artifact", m_artifact, "trained artifact")->required();
  metrics_cmd->add_option("--target", m_targets, "target graph directories")
      ->required()
      ->expected(-1);
  metrics_cmd->add_option("--out", m_out, "write report JSON here (default stdout)");
  metrics_cmd->add_option("--n-k", m_nk, "residual score sample size");
  metrics_cmd->add_option("--grid-points", m_grid, "KDE grid size");
  metrics_cmd->add_option("--seed", m_seed, "scoring seed");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic domain");
  std::string s_spec, s_out;
  synth_cmd->add_option("--spec", s_spec, "SyntheticDomainSpec JSON")->required();
  synth_cmd->add_option("--out", s_out, "output graph directory")->required();

  // inject
  auto* inject_cmd = app.add_subcommand("inject", "inject anomalies into a graph");
  std::string j_in, j_out;
  int j_cliques = 0, j_clique_size = 10, j_attr = 0, j_pool = 50;
  uint64_t j_seed = 0;
  inject_cmd->add_option("--in", j_in, "input graph directory")->required();
  inject_cmd->add_option("--out", j_out, "output graph directory")->required();
  inject_cmd->add_option("--cliques", j_cliques, "number of injected cliques");
  inject_cmd->add_option("--clique-size", j_clique_size, "clique size (default 10)");
  inject_cmd->add_option("--attr-targets", j_attr, "number of attribute anomalies");
  inject_cmd->add_option("--pool", j_pool, "attribute candidate pool (default 50)");
  inject_cmd->add_option("--seed", j_seed, "injection seed");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "AUROC/AUPRC of a score file");
  std::string e_scores, e_labels, e_column = "final", e_out;
  eval_cmd->add_option("--scores", e_scores, "scores CSV")->required();
  eval_cmd->add_option("--labels", e_labels, "labels file (one 0/1 per line)")
      ->required();
  eval_cmd->add_option("--column", e_column, "score column name (default final)");
  eval_cmd->add_option("--out", e_out, "optional JSON output");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "run ablation variants");
  std::string a_artifact, a_out, a_summary;
  std::vector<std::string> a_targets;
  std::vector<std::string> a_variants = {"full", "no_ada_tsa", "ada_only",
                                         "tsa_only"};
  std::vector<uint64_t> a_seeds = {0, 1, 2, 3, 4};
  double a_ratio = -1;
  int a_kvote = -1;
  ablate_cmd->add_option("--artifact", a_artifact, "trained artifact")->required();
  ablate_cmd->add_option("--target", a_targets, "target graph directories")
      ->required()
      ->expected(-1);
  ablate_cmd->add_option("--variants", a_variants, "variants to run")
      ->delimiter(',');
  ablate_cmd->add_option("--seeds", a_seeds, "inference seeds")->delimiter(',');
  ablate_cmd->add_option("--out", a_out, "results CSV path")->required();
  ablate_cmd->add_option("--summary", a_summary, "summary JSON path");
  ablate_cmd->add_option("--anomaly-ratio", a_ratio, "assumed anomaly ratio");
  ablate_cmd->add_option("--k-vote", a_kvote, "voting threshold");

  // sweep-k
  auto* sweep_cmd = app.add_subcommand("sweep-k", "K-vote sensitivity sweep");
  std::string k_artifact, k_target, k_out;
  std::vector<int> k_values = {1, 2, 3};
  std::vector<uint64_t> k_seeds = {0, 1, 2, 3, 4};
  double k_ratio = -1;
  sweep_cmd->add_option("--artifact", k_artifact, "trained artifact")->required();
  sweep_cmd->add_option("--target", k_target, "target graph directory")->required();
  sweep_cmd->add_option("--k-values", k_values, "thresholds to sweep")
      ->delimiter(',');
  sweep_cmd->add_option("--seeds", k_seeds, "inference seeds")->delimiter(',');
  sweep_cmd->add_option("--out", k_out, "sweep CSV path")->required();
  sweep_cmd->add_option("--anomaly-ratio", k_ratio, "assumed anomaly ratio");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train_cmd) {
      json flags = json::object();
      if (t_epochs >= 0) flags["epochs"] = t_epochs;
      if (t_lr >= 0) flags["learning_rate"] = t_lr;
      if (t_hops >= 0) flags["num_hops"] = t_hops;
      if (t_hidden >= 0) flags["hidden_dim"] = t_hidden;
      if (t_margin >= 0) flags["margin"] = t_margin;
      if (t_nk >= 0) flags["n_k"] = t_nk;
      if (t_latent >= 0) flags["latent_dim"] = t_latent;
      if (t_seed >= 0) flags["seed"] = uint64_t(t_seed);
      return cmd_train(source_dirs, config_path, out_path, flags, log_every);
    }
    if (*infer_cmd) {
      json flags = json::object();
      if (i_ratio >= 0) flags["anomaly_ratio"] = i_ratio;
      if (i_kvote >= 0) flags["k_vote"] = i_kvote;
      if (i_nk >= 0) flags["n_k"] = i_nk;
      if (i_tau >= 0) flags["tau"] = i_tau;
      if (i_tsa_steps >= 0) flags["tsa_steps"] = i_tsa_steps;
      if (i_tsa_lr >= 0) flags["tsa_lr"] = i_tsa_lr;
      if (i_grid >= 0) flags["grid_points"] = i_grid;
      if (i_seed >= 0) flags["seed"] = uint64_t(i_seed);
      return cmd_infer(i_artifact, i_target, i_config, i_out, i_report, flags);
    }
    if (*metrics_cmd) {
      json flags = json::object();
      if (m_nk >= 0) flags["n_k"] = m_nk;
      if (m_grid >= 0) flags["grid_points"] = m_grid;
      if (m_seed >= 0) flags["seed"] = uint64_t(m_seed);
      return cmd_metrics(m_artifact, m_targets, m_out, flags);
    }
    if (*synth_cmd) return cmd_synth(s_spec, s_out);
    if (*inject_cmd)
      return cmd_inject(j_in, j_out, j_cliques, j_clique_size, j_attr, j_pool,
                        j_seed);
    if (*eval_cmd) return cmd_eval(e_scores, e_labels, e_column, e_out);
    if (*ablate_cmd) {
      json flags = json::object();
      if (a_ratio >= 0) flags["anomaly_ratio"] = a_ratio;
      if (a_kvote >= 0) flags["k_vote"] = a_kvote;
      return cmd_ablate(a_artifact, a_targets, a_variants, a_seeds, a_out,
                        a_summary, flags);
    }
    if (*sweep_cmd) {
      json flags = json::object();
      if (k_ratio >= 0) flags["anomaly_ratio"] = k_ratio;
      return cmd_sweep_k(k_artifact, k_target, k_values, k_seeds, k_out, flags);
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
