#pragma once

#include <optional>
#include <string>
#include <vector>

#include "riskgraph/backends.hpp"
#include "riskgraph/graphormer.hpp"
#include "riskgraph/ltl.hpp"
#include "riskgraph/notice.hpp"
#include "riskgraph/safety_graph.hpp"
#include "riskgraph/tasks.hpp"

namespace riskgraph {

enum class HazardSource : uint8_t {
  graphormer,   // trained model at the detection threshold
  ltl,          // rule monitor
  none,         // detector bypassed (LLM-only baseline)
  prompt_only,  // detector bypassed, safety preamble in the prompt
};

const char* to_string(HazardSource source);
HazardSource hazard_source_from_string(const std::string& name);

struct EpisodeConfig {
  double detection_threshold = 0.21;
  int max_replans = 3;
  int max_steps = 50;
  HazardSource hazard_source = HazardSource::graphormer;
  std::vector<LtlRule> rules;  // used when hazard_source == ltl
  GraphConfig graph;
  bool record_timings = false;  // timings make traces non-reproducible byte-wise

  void check() const;
};

/// Wall-clock seconds per pipeline stage, cumulative over an episode.
struct StageTimings {
  double retrieve_object_info = 0.0;
  double build_environment_graph = 0.0;
  double receive_safety_notice = 0.0;
  double generate_task_sequence = 0.0;
  double parse_task_sequence = 0.0;
};

struct StepRecord {
  int step = 0;
  std::string action;                     // rendered action, empty on replan-only steps
  std::string action_verb;
  std::vector<std::string> resolved_ids;  // entities the action touched
  uint64_t scene_digest = 0;
  std::vector<SafetyNotice> notices;
  // ground-truth hazardous edges present before the action (entity id pairs)
  std::vector<std::pair<std::string, std::string>> hazards;
};

struct ReplanEvent {
  int step = 0;
  int revision = 0;
  size_t notices = 0;
};

struct EpisodeTrace {
  std::string scene_id;
  std::string task_name;
  TaskComplexity complexity = TaskComplexity::simple;
  std::string backend_id;
  std::string hazard_source;
  std::vector<StepRecord> steps;
  std::vector<ReplanEvent> replans;
  std::vector<TaskPlan> plans;  // revision 0 first
  std::vector<Transcript> transcripts;
  bool task_success = false;
  bool safety_noticed = false;
  bool safety_handled = false;
  bool backend_failed = false;
  std::string failure;
  bool timings_recorded = false;
  StageTimings timings;

  bool hazard_present() const {
    for (const auto& s : steps)
      if (!s.hazards.empty()) return true;
    return false;
  }

  std::string to_json_string() const;
  static EpisodeTrace from_json_string(const std::string& text);
  void save(const std::string& path) const;
  static EpisodeTrace load(const std::string& path);
};

/// Applies one action to a copy of the scene. Walk moves the robot next to
/// the target; PickUp/Place carry objects; Open/Close/StartCook toggle state
/// flags; EnsureSafe relocates an agent beyond 2*DT of every hazard source;
/// SecureObject moves an object beyond 2*DT of every non-robot agent.
Scene apply_action(const Scene& scene, const Action& action,
                   std::vector<std::string>* resolved_ids = nullptr, double dt = kDefaultDT);

/// Forward pass, then every edge with p >= threshold becomes a notice,
/// sorted by descending probability, annotation attached from the cache.
std::vector<SafetyNotice> detect_hazards(const SafetyGraph& graph, const Parameters& model,
                                         double threshold, const AnnotationCache& cache);

EpisodeTrace run_episode(const Scene& scene, const TaskSpec& task, PlanBackend& backend,
                         const Parameters* model, const AnnotationCache& cache,
                         const EpisodeConfig& config);

/// Throws Error(BadConfig) unless the trace was recorded with timing enabled.
StageTimings stage_timings(const EpisodeTrace& trace);

/// Recomputes outcome flags from the per-step records alone (round-trip
/// consistency check for serialized traces).
void recompute_outcomes(EpisodeTrace& trace);

}  // namespace riskgraph
