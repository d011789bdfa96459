#include "riskgraph/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "riskgraph/errors.hpp"

namespace riskgraph {

std::vector<PRPoint> pr_curve(const std::vector<double>& scores,
                              const std::vector<uint8_t>& labels) {
  if (scores.size() != labels.size()) fail(ErrorCode::BadConfig, "score/label length mismatch");
  if (scores.empty()) fail(ErrorCode::BadConfig, "empty score list");
  const size_t total_pos =
      static_cast<size_t>(std::count_if(labels.begin(), labels.end(), [](uint8_t y) { return y != 0; }));
  if (total_pos == 0) fail(ErrorCode::NoPositives, "PR curve needs at least one positive label");
  const size_t total = scores.size();

  std::vector<size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  std::vector<PRPoint> curve;
  auto push_point = [&](double threshold, size_t tp, size_t flagged) {
    PRPoint p;
    p.threshold = threshold;
    p.tp = tp;
    p.fp = flagged - tp;
    p.fn = total_pos - tp;
    p.tn = total - flagged - p.fn;
    p.precision = flagged == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(flagged);
    p.recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    curve.push_back(p);
  };

  // zero-flag endpoint above the maximum score
  push_point(scores[order.front()] + 1.0, 0, 0);

  size_t tp = 0, flagged = 0, i = 0;
  while (i < total) {
    const double threshold = scores[order[i]];
    while (i < total && scores[order[i]] == threshold) {
      ++flagged;
      if (labels[order[i]]) ++tp;
      ++i;
    }
    push_point(threshold, tp, flagged);
  }
  return curve;
}

ThresholdChoice select_threshold(const std::vector<PRPoint>& curve, double recall_target) {
  if (curve.empty()) fail(ErrorCode::BadConfig, "empty PR curve");
  ThresholdChoice choice;
  const PRPoint* best = nullptr;
  for (const auto& p : curve) {
    if (p.recall < recall_target) continue;
    if (!best || p.threshold > best->threshold ||
        (p.threshold == best->threshold && p.precision > best->precision))
      best = &p;
  }
  if (best) {
    choice.target_met = true;
  } else {
    // unachievable target: lowest threshold, flagged as a warning
    best = &curve.front();
    for (const auto& p : curve)
      if (p.threshold < best->threshold) best = &p;
  }
  choice.threshold = best->threshold;
  choice.point = *best;
  return choice;
}

void write_pr_csv(const std::vector<PRPoint>& curve, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  f << "threshold,tp,fp,tn,fn,precision,recall\n";
  for (const auto& p : curve)
    f << p.threshold << "," << p.tp << "," << p.fp << "," << p.tn << "," << p.fn << ","
      << p.precision << "," << p.recall << "\n";
}

void write_pr_svg(const std::vector<PRPoint>& curve, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  const int w = 480, h = 360, margin = 48;
  auto sx = [&](double recall) { return margin + recall * (w - 2 * margin); };
  auto sy = [&](double precision) { return h - margin - precision * (h - 2 * margin); };
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\">\n";
  f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  f << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\"" << w - margin
    << "\" y2=\"" << h - margin << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
    << h - margin << "\" stroke=\"black\"/>\n";
  f << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">recall</text>\n";
  f << "<text x=\"14\" y=\"" << h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << h / 2 << ")\">precision</text>\n";
  f << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"";
  for (const auto& p : curve) f << sx(p.recall) << "," << sy(p.precision) << " ";
  f << "\"/>\n</svg>\n";
}

std::string MetricRow::snr_text() const {
  if (!snr) return "n/a";
  std::ostringstream os;
  os.precision(1);
  os << std::fixed << *snr;
  return os.str();
}

std::string MetricRow::rhs_text() const {
  if (!rhs) return "n/a";
  std::ostringstream os;
  os.precision(1);
  os << std::fixed << *rhs;
  return os.str();
}

namespace {

MetricRow metric_row(const std::vector<const EpisodeTrace*>& traces) {
  MetricRow row;
  row.episodes = traces.size();
  if (traces.empty()) return row;
  size_t success = 0, hazard = 0, noticed = 0, handled = 0;
  for (const EpisodeTrace* t : traces) {
    if (t->task_success) ++success;
    if (t->hazard_present()) {
      ++hazard;
      if (t->safety_noticed) ++noticed;
      if (t->safety_handled) ++handled;
    }
  }
  row.hazard_episodes = hazard;
  row.tsr = 100.0 * static_cast<double>(success) / static_cast<double>(traces.size());
  if (hazard > 0) {
    row.snr = 100.0 * static_cast<double>(noticed) / static_cast<double>(hazard);
    row.rhs = 100.0 * static_cast<double>(handled) / static_cast<double>(hazard);
  }
  return row;
}

}  // namespace

PlanningMetrics planning_metrics(const std::vector<EpisodeTrace>& traces) {
  if (traces.empty()) fail(ErrorCode::BadConfig, "planning metrics over zero episodes");
  PlanningMetrics m;
  std::vector<const EpisodeTrace*> all;
  std::map<std::string, std::vector<const EpisodeTrace*>> by_cx;
  for (const auto& t : traces) {
    all.push_back(&t);
    by_cx[to_string(t.complexity)].push_back(&t);
  }
  m.overall = metric_row(all);
  for (const auto& [cx, list] : by_cx) m.by_complexity[cx] = metric_row(list);
  return m;
}

std::string BaselineReport::to_text_table() const {
  std::ostringstream os;
  os << std::left;
  os.setf(std::ios::fixed);
  os.precision(1);
  auto line = [&] {
    os << "+" << std::string(15, '-') << "+" << std::string(14, '-') << "+"
       << std::string(8, '-') << "+" << std::string(8, '-') << "+" << std::string(8, '-')
       << "+\n";
  };
  line();
  os << "| " << std::setw(13) << "backend" << " | " << std::setw(12) << "complexity" << " | "
     << std::setw(6) << "TSR" << " | " << std::setw(6) << "SNR" << " | " << std::setw(6)
     << "RHS" << " |\n";
  line();
  for (const auto& row : rows) {
    auto print = [&](const std::string& cx, const MetricRow& r) {
      std::ostringstream tsr;
      tsr.setf(std::ios::fixed);
      tsr.precision(1);
      tsr << r.tsr;
      os << "| " << std::setw(13) << row.backend << " | " << std::setw(12) << cx << " | "
         << std::setw(6) << tsr.str() << " | " << std::setw(6) << r.snr_text() << " | "
         << std::setw(6) << r.rhs_text() << " |\n";
    };
    for (const char* cx : {"simple", "intermediate", "complex"}) {
      auto it = row.metrics.by_complexity.find(cx);
      if (it != row.metrics.by_complexity.end()) print(cx, it->second);
    }
    print("overall", row.metrics.overall);
    line();
  }
  return os.str();
}

std::string BaselineReport::to_csv() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "backend,complexity,episodes,hazard_episodes,tsr,snr,rhs\n";
  for (const auto& row : rows) {
    auto print = [&](const std::string& cx, const MetricRow& r) {
      os << row.backend << "," << cx << "," << r.episodes << "," << r.hazard_episodes << ","
         << r.tsr << "," << (r.snr ? std::to_string(*r.snr) : "n/a") << ","
         << (r.rhs ? std::to_string(*r.rhs) : "n/a") << "\n";
    };
    for (const char* cx : {"simple", "intermediate", "complex"}) {
      auto it = row.metrics.by_complexity.find(cx);
      if (it != row.metrics.by_complexity.end()) print(cx, it->second);
    }
    print("overall", row.metrics.overall);
  }
  return os.str();
}

BaselineReport compare_baselines(const std::vector<Scene>& scenes,
                                 const std::vector<TaskSpec>& tasks, const Parameters& model,
                                 const AnnotationCache& cache, const EpisodeConfig& base_config,
                                 int parallelism, std::vector<EpisodeTrace>* traces_out) {
  struct Variant {
    std::string name;
    HazardSource source;
    bool safe_prompting;
    const std::vector<LtlRule>* rules;
  };
  const std::vector<Variant> variants = {
      {"llm_only", HazardSource::none, false, nullptr},
      {"safe_prompting", HazardSource::prompt_only, true, nullptr},
      {"ltl_full", HazardSource::ltl, false, &full_rule_set()},
      {"ltl_partial", HazardSource::ltl, false, &partial_rule_set()},
      {"graphormer", HazardSource::graphormer, false, nullptr},
  };

  BaselineReport report;
  for (const auto& variant : variants) {
    EpisodeConfig cfg = base_config;
    cfg.hazard_source = variant.source;
    if (variant.rules) cfg.rules = *variant.rules;

    std::vector<EpisodeTrace> traces(scenes.size() * tasks.size());
    auto run_scene = [&](size_t si) {
      for (size_t ti = 0; ti < tasks.size(); ++ti) {
        MockPlanner backend(variant.safe_prompting);  // one backend per episode
        traces[si * tasks.size() + ti] =
            run_episode(scenes[si], tasks[ti], backend, &model, cache, cfg);
      }
    };

    if (parallelism > 1) {
      std::vector<std::future<void>> jobs;
      std::atomic<size_t> next{0};
      const int workers = std::min<int>(parallelism, static_cast<int>(scenes.size()));
      for (int w = 0; w < workers; ++w)
        jobs.push_back(std::async(std::launch::async, [&] {
          for (size_t si = next.fetch_add(1); si < scenes.size(); si = next.fetch_add(1))
            run_scene(si);
        }));
      for (auto& j : jobs) j.get();
    } else {
      for (size_t si = 0; si < scenes.size(); ++si) run_scene(si);
    }

    BaselineRow row;
    row.backend = variant.name;
    row.metrics = planning_metrics(traces);
    report.rows.push_back(std::move(row));
    if (traces_out)
      traces_out->insert(traces_out->end(), traces.begin(), traces.end());
  }
  return report;
}

namespace {

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

std::string BenchReport::to_text() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "Stage timings (median of " << runs << " runs, " << scene_entities
     << "-entity scene, seconds)\n";
  os << "  Retrieve Object Information  " << stages.retrieve_object_info << "\n";
  os << "  Build Environment Graph      " << stages.build_environment_graph << "\n";
  os << "  Receive Safety Notice        " << stages.receive_safety_notice << "\n";
  os << "  Generate Task Sequence       " << stages.generate_task_sequence
     << "  (mock backend; excluded from LLM-latency comparison)\n";
  os << "  Parse Task Sequence          " << stages.parse_task_sequence << "\n";
  os << "  Checkpoint load              " << checkpoint_load << "\n";
  return os.str();
}

BenchReport run_bench(const Parameters& model, const AnnotationCache& cache,
                      const GraphConfig& graph_config, const std::string& checkpoint_path,
                      int entities, int runs) {
  if (runs < 1) fail(ErrorCode::BadConfig, "bench needs at least one run");

  SceneSpec spec;
  spec.room_type = RoomType::kitchen;
  spec.min_objects = entities - 3;  // robot + injected agents fill the rest
  spec.max_objects = entities - 3;
  spec.agent_policy = AgentPlacement::near_hazard;
  const Scene scene = generate_scene(spec, 20250901);
  const TaskSpec& task = task_by_name("prepare_meal");

  BenchReport report;
  report.scene_entities = static_cast<int>(scene.entities.size());
  report.runs = runs;

  std::vector<double> retrieve, build, notice, generate, parse, load;
  for (int r = 0; r < runs + 1; ++r) {  // first run warms caches and is discarded
    using clock = std::chrono::steady_clock;
    auto elapsed = [](clock::time_point t0) {
      return std::chrono::duration<double>(clock::now() - t0).count();
    };

    auto t0 = clock::now();
    const std::string summary = scene_summary(scene);
    const double t_retrieve = elapsed(t0);

    t0 = clock::now();
    const SafetyGraph graph = build_graph(scene, cache, graph_config);
    const double t_build = elapsed(t0);

    double t_load = 0.0;
    const Parameters* active = &model;
    Parameters loaded;
    if (!checkpoint_path.empty()) {
      t0 = clock::now();
      loaded = load_checkpoint(checkpoint_path);
      t_load = elapsed(t0);
      active = &loaded;
    }

    t0 = clock::now();
    const auto notices = detect_hazards(graph, *active, 0.21, cache);
    const double t_notice = elapsed(t0);

    MockPlanner backend;
    PlanningContext ctx;
    ctx.scene = &scene;
    ctx.scene_summary = summary;
    t0 = clock::now();
    const TaskPlan plan = backend.initial_plan(task, ctx);
    const double t_generate = elapsed(t0);

    const std::string text = render_plan(plan);
    t0 = clock::now();
    parse_plan(text, task.name);
    const double t_parse = elapsed(t0);

    if (r == 0) continue;
    retrieve.push_back(t_retrieve);
    build.push_back(t_build);
    notice.push_back(t_notice);
    generate.push_back(t_generate);
    parse.push_back(t_parse);
    load.push_back(t_load);
  }

  report.stages.retrieve_object_info = median(retrieve);
  report.stages.build_environment_graph = median(build);
  report.stages.receive_safety_notice = median(notice);
  report.stages.generate_task_sequence = median(generate);
  report.stages.parse_task_sequence = median(parse);
  report.checkpoint_load = median(load);
  return report;
}

}  // namespace riskgraph
