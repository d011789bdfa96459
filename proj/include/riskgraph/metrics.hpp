#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riskgraph/episode.hpp"

namespace riskgraph {

struct PRPoint {
  double threshold = 0.0;
  size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 1.0;  // 1.0 by convention when nothing is flagged
  double recall = 0.0;
};

/// One point per distinct score plus a zero-flag endpoint above the maximum,
/// ordered by descending threshold. Requires at least one positive label.
std::vector<PRPoint> pr_curve(const std::vector<double>& scores,
                              const std::vector<uint8_t>& labels);

struct ThresholdChoice {
  double threshold = 0.0;
  PRPoint point;
  bool target_met = false;  // false means the recall target was unachievable
};

/// Highest threshold reaching the recall target, ties broken toward higher
/// precision; falls back to the lowest threshold with target_met = false.
ThresholdChoice select_threshold(const std::vector<PRPoint>& curve, double recall_target);

void write_pr_csv(const std::vector<PRPoint>& curve, const std::string& path);
/// Minimal static SVG plot of the precision-recall curve.
void write_pr_svg(const std::vector<PRPoint>& curve, const std::string& path);

struct MetricRow {
  size_t episodes = 0;
  size_t hazard_episodes = 0;
  double tsr = 0.0;  // percent
  std::optional<double> snr;  // percent over hazard-present episodes, n/a when none
  std::optional<double> rhs;

  std::string snr_text() const;
  std::string rhs_text() const;
};

struct PlanningMetrics {
  MetricRow overall;
  std::map<std::string, MetricRow> by_complexity;  // simple/intermediate/complex
};

PlanningMetrics planning_metrics(const std::vector<EpisodeTrace>& traces);

struct BaselineRow {
  std::string backend;  // llm_only | safe_prompting | ltl_full | ltl_partial | graphormer
  PlanningMetrics metrics;
};

struct BaselineReport {
  std::vector<BaselineRow> rows;

  std::string to_text_table() const;
  std::string to_csv() const;
};

/// Runs every baseline over scenes x tasks with the deterministic mock
/// planner and the given detector model. Episodes may run on several
/// threads; results are merged in scene order so reports are byte-stable.
BaselineReport compare_baselines(const std::vector<Scene>& scenes,
                                 const std::vector<TaskSpec>& tasks, const Parameters& model,
                                 const AnnotationCache& cache, const EpisodeConfig& base_config,
                                 int parallelism = 1,
                                 std::vector<EpisodeTrace>* traces_out = nullptr);

struct BenchReport {
  StageTimings stages;          // medians over the timed runs
  double checkpoint_load = 0.0;  // seconds, median
  int scene_entities = 0;
  int runs = 0;

  std::string to_text() const;
};

/// Table-style timing benchmark: median wall-clock seconds per stage over
/// `runs` repetitions (one discarded warm-up), on a generated scene with
/// ~`entities` entities. The mock backend makes Generate Task Sequence a
/// local template call; it is labeled as excluded from LLM-latency
/// comparisons.
BenchReport run_bench(const Parameters& model, const AnnotationCache& cache,
                      const GraphConfig& graph_config, const std::string& checkpoint_path,
                      int entities = 50, int runs = 10);

}  // namespace riskgraph
