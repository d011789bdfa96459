#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "riskgraph/llm_client.hpp"
#include "riskgraph/notice.hpp"
#include "riskgraph/plan.hpp"
#include "riskgraph/tasks.hpp"

namespace riskgraph {

/// Versioned prompt templates; results cite the template hash.
struct PromptTemplates {
  static const std::string& base_system();
  static const std::string& safe_system();
  static const std::string& replan_system();
  static uint64_t hash(const std::string& text);
};

/// One backend exchange, recorded into the episode trace. The API key is
/// never part of a transcript.
struct Transcript {
  std::string backend_id;
  std::string kind;  // "initial" | "replan"
  std::string system_prompt;
  std::string user_prompt;
  std::string response_text;
  uint64_t template_hash = 0;
};

/// Everything a planning backend may look at for one query.
struct PlanningContext {
  const Scene* scene = nullptr;  // structured state (mock backend)
  std::string scene_summary;     // textual state (HTTP backends)
};

class PlanBackend {
public:
  virtual ~PlanBackend() = default;

  virtual TaskPlan initial_plan(const TaskSpec& task, const PlanningContext& ctx) = 0;

  /// Revised plan covering the not-yet-executed steps; mitigation steps for
  /// the given notices come first, revision increments by one.
  virtual TaskPlan replan(const TaskPlan& plan, size_t next_step,
                          const std::vector<SafetyNotice>& notices,
                          const PlanningContext& ctx) = 0;

  virtual std::string id() const = 0;

  const std::vector<Transcript>& transcripts() const { return transcripts_; }
  void clear_transcripts() { transcripts_.clear(); }

protected:
  std::vector<Transcript> transcripts_;
};

/// Deterministic template planner; the offline stand-in for the LLM.
/// With safe_prompting enabled it records the safety preamble in its
/// transcripts but plans exactly the same way (no structured perception).
class MockPlanner : public PlanBackend {
public:
  explicit MockPlanner(bool safe_prompting = false) : safe_prompting_(safe_prompting) {}

  TaskPlan initial_plan(const TaskSpec& task, const PlanningContext& ctx) override;
  TaskPlan replan(const TaskPlan& plan, size_t next_step,
                  const std::vector<SafetyNotice>& notices, const PlanningContext& ctx) override;
  std::string id() const override { return safe_prompting_ ? "mock-safe" : "mock"; }

private:
  bool safe_prompting_;
};

/// LLM planner over the HTTP chat protocol; 2 retries on parse failure with
/// the parse error echoed back.
class HttpPlanner : public PlanBackend {
public:
  HttpPlanner(std::shared_ptr<LlmClient> client, bool safe_prompting = false);

  TaskPlan initial_plan(const TaskSpec& task, const PlanningContext& ctx) override;
  TaskPlan replan(const TaskPlan& plan, size_t next_step,
                  const std::vector<SafetyNotice>& notices, const PlanningContext& ctx) override;
  std::string id() const override;

private:
  TaskPlan query(const std::string& kind, const std::string& system, std::string user,
                 const std::string& task_name);

  std::shared_ptr<LlmClient> client_;
  bool safe_prompting_;
};

/// Mitigation steps for a batch of notices: EnsureSafe for agent endpoints,
/// SecureObject for hazardous object endpoints, deduplicated by target.
std::vector<Action> mitigation_steps(const std::vector<SafetyNotice>& notices);

/// LLM-backed pairwise risk annotator; replies must contain a JSON object in
/// the annotation schema (markdown fences tolerated).
class HttpAnnotationBackend : public AnnotationBackend {
public:
  explicit HttpAnnotationBackend(std::shared_ptr<LlmClient> client);
  RiskAnnotation annotate(const std::string& type1, const std::string& type2) override;
  std::string id() const override;
  uint64_t calls() const override { return calls_.load(); }

private:
  std::shared_ptr<LlmClient> client_;
  std::atomic<uint64_t> calls_{0};
};

}  // namespace riskgraph
