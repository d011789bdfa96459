#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "riskgraph/backends.hpp"
#include "riskgraph/episode.hpp"
#include "riskgraph/errors.hpp"
#include "riskgraph/metrics.hpp"
#include "riskgraph/rng.hpp"
#include "riskgraph/run_config.hpp"

namespace fs = std::filesystem;
using namespace riskgraph;

namespace {

struct CommonFlags {
  std::optional<uint64_t> seed;
  std::optional<std::string> config;
  std::optional<double> dt;
  std::optional<std::string> sp_mode;
  std::optional<double> threshold;
  std::optional<double> gamma;
  std::optional<double> alpha_pos;
  std::optional<std::string> backend;
  std::optional<std::string> rules;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--seed", f.seed, "master RNG seed");
  cmd->add_option("--config", f.config, "key = value config file; flags win");
  cmd->add_option("--dt", f.dt, "distance threshold DT in meters");
  cmd->add_option("--sp-mode", f.sp_mode, "clamped | paper-literal")
      ->check(CLI::IsMember({"clamped", "paper-literal", "paper_literal"}));
  cmd->add_option("--threshold", f.threshold, "detection threshold");
  cmd->add_option("--gamma", f.gamma, "focal loss focusing exponent");
  cmd->add_option("--alpha-pos", f.alpha_pos, "positive class weight");
  cmd->add_option("--backend", f.backend, "mock | http | safe-prompt | ltl")
      ->check(CLI::IsMember({"mock", "http", "safe-prompt", "ltl"}));
  cmd->add_option("--rules", f.rules, "LTL rule set JSON file");
  cmd->add_option("--out", f.out, "output directory");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig cfg;
  if (f.config) cfg = RunConfig::load(*f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.dt) cfg.graph.dt = *f.dt;
  if (f.sp_mode) cfg.graph.sp_mode = sp_mode_from_string(*f.sp_mode);
  if (f.threshold) cfg.detection_threshold = *f.threshold;
  if (f.gamma) cfg.trainer.gamma = *f.gamma;
  if (f.alpha_pos) cfg.trainer.alpha_pos = *f.alpha_pos;
  if (f.backend) cfg.backend = *f.backend;
  if (f.rules) cfg.rules_path = *f.rules;
  if (f.out) cfg.out_dir = *f.out;
  cfg.trainer.seed = cfg.seed;
  cfg.model.seed = cfg.seed;
  return cfg;
}

fs::path prepare_out(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  cfg.write((dir / "run_config.txt").string());
  return dir;
}

SceneSpec base_spec(const RunConfig& cfg) {
  SceneSpec spec;
  spec.min_objects = cfg.objects_min;
  spec.max_objects = cfg.objects_max;
  return spec;
}

AnnotationCache load_cache(const std::string& path) {
  if (path.empty()) return builtin_risk_table();
  return AnnotationCache::load(path);
}

std::shared_ptr<LlmClient> make_llm_client(const RunConfig& cfg) {
  if (cfg.llm_url.empty())
    fail(ErrorCode::BadConfig, "HTTP backend needs llm_url in the config");
  if (!std::getenv(kApiKeyEnvVar))
    fail(ErrorCode::BadConfig,
         std::string("HTTP backend needs the ") + kApiKeyEnvVar + " environment variable");
  return std::make_shared<HttpLlmClient>(cfg.llm_url, cfg.llm_model);
}

std::vector<GraphTensors> to_tensors(const std::vector<SafetyGraph>& graphs) {
  std::vector<GraphTensors> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(GraphTensors::from_graph(g));
  return out;
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const RunConfig& cfg) {
  const fs::path dir = prepare_out(cfg);
  DatasetSplit split = generate_dataset(cfg.n_scenes, cfg.split, cfg.seed, base_spec(cfg));
  write_scenes_jsonl(split.train, (dir / "scenes_train.jsonl").string());
  write_scenes_jsonl(split.val, (dir / "scenes_val.jsonl").string());
  write_scenes_jsonl(split.test, (dir / "scenes_test.jsonl").string());
  size_t hazard = 0;
  for (const Scene* s : split.all())
    if (s->hazard_injected) ++hazard;
  std::cout << "wrote " << split.train.size() << "/" << split.val.size() << "/"
            << split.test.size() << " scenes (" << hazard << " hazard-injected) to " << dir
            << "\n";
  return 0;
}

int cmd_annotate(const RunConfig& cfg, const std::string& extend_path) {
  const fs::path dir = prepare_out(cfg);
  AnnotationCache cache;
  if (!extend_path.empty()) cache = AnnotationCache::load(extend_path);

  if (cfg.backend == "http") {
    HttpAnnotationBackend backend(make_llm_client(cfg));
    std::vector<std::pair<std::string, std::string>> pairs;
    const auto& kinds = Catalog::instance().kinds();
    for (size_t i = 0; i < kinds.size(); ++i)
      for (size_t j = i; j < kinds.size(); ++j) pairs.emplace_back(kinds[i].name, kinds[j].name);
    annotate_pairs(pairs, backend, cache, 4);
    std::cout << "annotated " << pairs.size() << " pairs via " << backend.id() << "\n";
  } else {
    cache = builtin_risk_table();
    std::cout << "built deterministic builtin table (" << cache.size() << " pairs)\n";
  }
  cache.save((dir / "annotations.json").string());
  return 0;
}

int cmd_build_graphs(const RunConfig& cfg, const std::string& data_dir,
                     const std::string& annotations) {
  const fs::path dir = prepare_out(cfg);
  const AnnotationCache cache = load_cache(annotations);
  std::vector<SafetyGraph> all;
  for (const char* part : {"train", "val", "test"}) {
    const fs::path in = fs::path(data_dir) / (std::string("scenes_") + part + ".jsonl");
    if (!fs::exists(in)) fail(ErrorCode::IoError, "missing " + in.string());
    std::vector<SafetyGraph> graphs;
    for (const auto& scene : read_scenes_jsonl(in.string()))
      graphs.push_back(build_graph(scene, cache, cfg.graph));
    write_graphs_jsonl(graphs, (dir / (std::string("graphs_") + part + ".jsonl")).string());
    all.insert(all.end(), graphs.begin(), graphs.end());
  }
  const LabelStats stats = label_stats(all);
  std::cout << "edges " << stats.edge_count << ", hazardous " << stats.positive_count << " ("
            << stats.positive_rate * 100.0 << "%)\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& graphs_dir) {
  const fs::path dir = prepare_out(cfg);
  auto train_graphs =
      to_tensors(read_graphs_jsonl((fs::path(graphs_dir) / "graphs_train.jsonl").string()));
  auto val_graphs =
      to_tensors(read_graphs_jsonl((fs::path(graphs_dir) / "graphs_val.jsonl").string()));

  ModelConfig mc = cfg.model;
  mc.node_dim = static_cast<int>(node_feature_dim());
  mc.edge_dim = static_cast<int>(edge_feature_dim());
  Parameters params = init_model(mc);

  TrainResult result = train(params, train_graphs, val_graphs, cfg.trainer);
  save_checkpoint(result.params, (dir / "model.ckpt").string());

  std::ofstream hist((dir / "history.csv").string(), std::ios::binary);
  hist << "epoch,train_loss,val_loss,val_recall,val_precision\n";
  for (size_t e = 0; e < result.history.epochs.size(); ++e) {
    const auto& s = result.history.epochs[e];
    hist << e << "," << s.train_loss << "," << s.val_loss << "," << s.val_recall << ","
         << s.val_precision << "\n";
  }
  std::cout << "trained " << result.history.epochs.size() << " epochs, best epoch "
            << result.history.best_epoch << ", checkpoint " << (dir / "model.ckpt") << "\n";
  return 0;
}

int cmd_eval_model(const RunConfig& cfg, const std::string& graphs_dir,
                   const std::string& model_path, bool threshold_given) {
  const fs::path dir = prepare_out(cfg);
  const Parameters model = load_checkpoint(model_path);
  auto graphs = read_graphs_jsonl((fs::path(graphs_dir) / "graphs_test.jsonl").string());

  std::vector<double> scores;
  std::vector<uint8_t> labels;
  for (const auto& g : graphs) {
    if (g.edges.empty()) continue;
    ForwardResult fr = forward(model, GraphTensors::from_graph(g));
    for (size_t e = 0; e < g.edges.size(); ++e) {
      scores.push_back(fr.p(static_cast<Eigen::Index>(e)));
      labels.push_back(g.edges[e].label ? 1 : 0);
    }
  }

  const auto curve = pr_curve(scores, labels);
  write_pr_csv(curve, (dir / "pr_curve.csv").string());
  write_pr_svg(curve, (dir / "pr_curve.svg").string());

  std::ostringstream report;
  report.setf(std::ios::fixed);
  report.precision(4);
  if (threshold_given) {
    size_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      const bool flag = scores[i] >= cfg.detection_threshold;
      if (flag && labels[i]) ++tp;
      else if (flag) ++fp;
      else if (labels[i]) ++fn;
    }
    const double precision = tp + fp ? static_cast<double>(tp) / (tp + fp) : 1.0;
    const double recall = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
    report << "threshold " << cfg.detection_threshold << "\nprecision " << precision
           << "\nrecall " << recall << "\nflagged " << (tp + fp) << "\n";
  } else {
    const ThresholdChoice choice = select_threshold(curve, cfg.recall_target);
    report << "recall_target " << cfg.recall_target << "\nthreshold " << choice.threshold
           << "\nprecision " << choice.point.precision << "\nrecall " << choice.point.recall
           << "\ntarget_met " << (choice.target_met ? "true" : "false") << "\n";
  }
  std::ofstream((dir / "threshold_report.txt").string(), std::ios::binary) << report.str();
  std::cout << report.str();
  return 0;
}

std::vector<LtlRule> rules_for(const RunConfig& cfg) {
  if (!cfg.rules_path.empty()) return load_rules(cfg.rules_path);
  return full_rule_set();
}

int cmd_run_episode(const RunConfig& cfg, const std::string& scenes_file, int scene_index,
                    const std::string& task_name, const std::string& model_path,
                    const std::string& hazard_source) {
  const fs::path dir = prepare_out(cfg);

  Scene scene;
  if (!scenes_file.empty()) {
    auto scenes = read_scenes_jsonl(scenes_file);
    if (scene_index < 0 || static_cast<size_t>(scene_index) >= scenes.size())
      fail(ErrorCode::BadConfig, "scene index out of range");
    scene = scenes[static_cast<size_t>(scene_index)];
  } else {
    SceneSpec spec = base_spec(cfg);
    spec.agent_policy = AgentPlacement::near_hazard;
    scene = generate_scene(spec, cfg.seed);
  }

  const AnnotationCache cache = builtin_risk_table();
  EpisodeConfig ec = cfg.episode_config();

  std::optional<Parameters> model;
  if (!model_path.empty()) model = load_checkpoint(model_path);

  if (!hazard_source.empty()) {
    ec.hazard_source = hazard_source_from_string(hazard_source);
  } else if (cfg.backend == "ltl") {
    ec.hazard_source = HazardSource::ltl;
  } else if (cfg.backend == "safe-prompt") {
    ec.hazard_source = HazardSource::prompt_only;
  } else {
    ec.hazard_source = model ? HazardSource::graphormer : HazardSource::none;
  }
  if (ec.hazard_source == HazardSource::ltl) ec.rules = rules_for(cfg);

  std::unique_ptr<PlanBackend> backend;
  if (cfg.backend == "http") {
    backend = std::make_unique<HttpPlanner>(make_llm_client(cfg), false);
  } else {
    backend = std::make_unique<MockPlanner>(cfg.backend == "safe-prompt" ||
                                            ec.hazard_source == HazardSource::prompt_only);
  }

  const TaskSpec& task = task_by_name(task_name);
  EpisodeTrace trace =
      run_episode(scene, task, *backend, model ? &*model : nullptr, cache, ec);
  trace.save((dir / "trace.json").string());
  std::cout << "episode " << scene.id << " task " << task.name << ": success "
            << (trace.task_success ? "yes" : "no") << ", notices "
            << (trace.safety_noticed ? "yes" : "no") << ", handled "
            << (trace.safety_handled ? "yes" : "no") << ", replans " << trace.replans.size()
            << "\n";
  return 0;
}

int cmd_eval_plan(const RunConfig& cfg, const std::string& model_path, int n_scenes,
                  bool write_traces) {
  const fs::path dir = prepare_out(cfg);
  const Parameters model = load_checkpoint(model_path);
  const AnnotationCache cache = builtin_risk_table();

  std::vector<Scene> scenes;
  for (int i = 0; i < n_scenes; ++i) {
    SceneSpec spec = base_spec(cfg);
    static const RoomType kRooms[] = {RoomType::kitchen, RoomType::living_room,
                                      RoomType::bedroom, RoomType::bathroom};
    spec.room_type = kRooms[i % 4];
    spec.agent_policy = AgentPlacement::near_hazard;
    Scene s = generate_scene(spec, mix_seed(cfg.seed ^ 0x5eedfeedULL, static_cast<uint64_t>(i)));
    s.id = "episode_scene_" + std::to_string(i);
    scenes.push_back(std::move(s));
  }

  std::vector<EpisodeTrace> traces;
  const BaselineReport report =
      compare_baselines(scenes, benchmark_tasks(), model, cache, cfg.episode_config(), 1,
                        write_traces ? &traces : nullptr);
  std::ofstream((dir / "baselines.txt").string(), std::ios::binary) << report.to_text_table();
  std::ofstream((dir / "baselines.csv").string(), std::ios::binary) << report.to_csv();
  if (write_traces) {
    const fs::path tdir = dir / "traces";
    fs::create_directories(tdir);
    for (const auto& t : traces)
      t.save((tdir / (t.backend_id + "_" + t.scene_id + "_" + t.task_name + ".json")).string());
  }
  std::cout << report.to_text_table();
  return 0;
}

int cmd_bench(const RunConfig& cfg, const std::string& model_path, int entities, int runs) {
  const fs::path dir = prepare_out(cfg);
  const AnnotationCache cache = builtin_risk_table();
  Parameters model;
  if (!model_path.empty()) {
    model = load_checkpoint(model_path);
  } else {
    ModelConfig mc = cfg.model;
    mc.node_dim = static_cast<int>(node_feature_dim());
    mc.edge_dim = static_cast<int>(edge_feature_dim());
    model = init_model(mc);
  }
  const BenchReport report =
      run_bench(model, cache, cfg.graph, model_path, entities, runs);
  std::cout << report.to_text();
  (void)dir;  // bench writes no timing artifacts; timings are not reproducible bytes
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riskgraph: risk-aware task planning over spatio-semantic safety graphs"};
  app.set_version_flag("--version", RISKGRAPH_VERSION);
  app.require_subcommand(1);

  CommonFlags common;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic scene dataset");
  add_common(gen, common);
  int gen_scenes = 120;
  std::string gen_split = "90,15,15";
  gen->add_option("--scenes", gen_scenes, "number of scenes");
  gen->add_option("--split", gen_split, "train,val,test sizes");

  auto* ann = app.add_subcommand("annotate", "build or extend the risk annotation cache");
  add_common(ann, common);
  std::string ann_extend;
  ann->add_option("--extend", ann_extend, "existing cache file to extend");

  auto* bg = app.add_subcommand("build-graphs", "label scenes into safety graphs");
  add_common(bg, common);
  std::string bg_data = "out", bg_annotations;
  bg->add_option("--data", bg_data, "directory containing scenes_*.jsonl");
  bg->add_option("--annotations", bg_annotations, "annotation cache (builtin when omitted)");

  auto* tr = app.add_subcommand("train", "train the edge-risk model");
  add_common(tr, common);
  std::string tr_graphs = "out";
  int tr_epochs = -1;
  double tr_lr = -1.0;
  tr->add_option("--graphs", tr_graphs, "directory containing graphs_*.jsonl");
  tr->add_option("--epochs", tr_epochs, "training epochs");
  tr->add_option("--learning-rate", tr_lr, "Adam learning rate");

  auto* em = app.add_subcommand("eval-model", "PR curve and threshold selection");
  add_common(em, common);
  std::string em_graphs = "out", em_model = "out/model.ckpt";
  double em_recall_target = -1.0;
  em->add_option("--graphs", em_graphs, "directory containing graphs_test.jsonl");
  em->add_option("--model", em_model, "model checkpoint");
  em->add_option("--recall-target", em_recall_target, "recall target for threshold selection");

  auto* re = app.add_subcommand("run-episode", "execute one plan in the simulator");
  add_common(re, common);
  std::string re_scenes, re_task = "prepare_meal", re_model, re_source;
  int re_index = 0;
  re->add_option("--scenes-file", re_scenes, "scene JSONL (generated when omitted)");
  re->add_option("--scene-index", re_index, "scene row in the file");
  re->add_option("--task", re_task, "benchmark task name");
  re->add_option("--model", re_model, "model checkpoint");
  re->add_option("--hazard-source", re_source, "graphormer | ltl | none | prompt_only");
  bool re_timings = false;
  re->add_flag("--timings", re_timings, "record stage timings (trace bytes become run-dependent)");

  auto* ep = app.add_subcommand("eval-plan", "baseline comparison table");
  add_common(ep, common);
  std::string ep_model = "out/model.ckpt";
  int ep_scenes = 20;
  bool ep_traces = false;
  ep->add_option("--model", ep_model, "model checkpoint");
  ep->add_option("--scenes", ep_scenes, "hazard-injected scenes per backend");
  ep->add_flag("--write-traces", ep_traces, "write every episode trace");

  auto* be = app.add_subcommand("bench", "five-stage timing benchmark");
  add_common(be, common);
  std::string be_model;
  int be_entities = 50, be_runs = 10;
  be->add_option("--model", be_model, "model checkpoint (timed when given)");
  be->add_option("--entities", be_entities, "scene size");
  be->add_option("--runs", be_runs, "timed repetitions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage error
  }

  try {
    RunConfig cfg = resolve(common);
    if (gen->parsed()) {
      cfg.n_scenes = gen_scenes;
      if (std::sscanf(gen_split.c_str(), "%d,%d,%d", &cfg.split[0], &cfg.split[1],
                      &cfg.split[2]) != 3)
        fail(ErrorCode::BadConfig, "--split must be a,b,c");
      return cmd_gen_data(cfg);
    }
    if (ann->parsed()) return cmd_annotate(cfg, ann_extend);
    if (bg->parsed()) return cmd_build_graphs(cfg, bg_data, bg_annotations);
    if (tr->parsed()) {
      if (tr_epochs > 0) cfg.trainer.epochs = tr_epochs;
      if (tr_lr > 0) cfg.trainer.learning_rate = tr_lr;
      return cmd_train(cfg, tr_graphs);
    }
    if (em->parsed()) {
      if (em_recall_target > 0) cfg.recall_target = em_recall_target;
      return cmd_eval_model(cfg, em_graphs, em_model, common.threshold.has_value());
    }
    if (re->parsed()) {
      cfg.record_timings = re_timings;
      return cmd_run_episode(cfg, re_scenes, re_index, re_task, re_model, re_source);
    }
    if (ep->parsed()) return cmd_eval_plan(cfg, ep_model, ep_scenes, ep_traces);
    if (be->parsed()) return cmd_bench(cfg, be_model, be_entities, be_runs);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
