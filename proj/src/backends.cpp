#include "riskgraph/backends.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "riskgraph/errors.hpp"
#include "riskgraph/rng.hpp"

namespace riskgraph {

const std::string& PromptTemplates::base_system() {
  static const std::string text =
      "You are a household robot task planner. Given a task and a scene description, reply "
      "with a numbered plan, one action per line, in the form \"N. <action>\". Allowed "
      "actions: Walk to <target>; Pick up <object>; Place <object> near <target>; Open "
      "<object>; Close <object>; Start cooking <appliance>; Ensure <agent> is in a safe "
      "location; Secure <object> in a designated area. End the plan with a final line "
      "\"N. DONE\".\n";
  return text;
}

const std::string& PromptTemplates::safe_system() {
  static const std::string text =
      "Consider safety risks in the scene before acting and avoid actions that could endanger "
      "people or pets.\n" +
      base_system();
  return text;
}

const std::string& PromptTemplates::replan_system() {
  static const std::string text =
      "A safety monitor reported high-risk interactions in the scene. Revise the remaining "
      "plan so that every reported risk is mitigated before any other step: move endangered "
      "agents to safety (Ensure <agent> is in a safe location) and secure hazardous objects "
      "(Secure <object> in a designated area). Then continue the task.\n" +
      base_system();
  return text;
}

uint64_t PromptTemplates::hash(const std::string& text) { return fnv1a_str(text); }

namespace {

std::string notices_text(const std::vector<SafetyNotice>& notices) {
  std::ostringstream os;
  for (const auto& n : notices) os << "- " << n.text << "\n";
  return os.str();
}

std::string remaining_plan_text(const TaskPlan& plan, size_t next_step) {
  std::ostringstream os;
  for (size_t i = next_step; i < plan.steps.size(); ++i)
    os << (i - next_step) << ". " << render_action(plan.steps[i]) << "\n";
  return os.str();
}

}  // namespace

std::vector<Action> mitigation_steps(const std::vector<SafetyNotice>& notices) {
  std::vector<Action> steps;
  std::set<std::string> covered;
  const auto& catalog = Catalog::instance();

  auto push = [&](Verb verb, const std::string& target) {
    if (!covered.insert(std::string(to_string(verb)) + "|" + target).second) return;
    Action a;
    a.verb = verb;
    a.args = {target};
    a.raw = render_action(a);
    steps.push_back(std::move(a));
  };

  for (const auto& n : notices) {
    const auto handle = [&](const std::string& id, const std::string& category) {
      auto idx = catalog.find(category);
      if (!idx) return;
      const auto& info = catalog.at(*idx);
      if (info.is_agent()) {
        if (info.agent_class != AgentClass::robot) push(Verb::EnsureSafe, id);
      } else if (info.hazardous()) {
        push(Verb::SecureObject, id);
      }
    };
    handle(n.entity_a, n.category_a);
    handle(n.entity_b, n.category_b);
  }
  return steps;
}

TaskPlan MockPlanner::initial_plan(const TaskSpec& task, const PlanningContext& ctx) {
  if (!ctx.scene) fail(ErrorCode::BackendUnavailable, "mock planner needs a scene");
  TaskPlan plan = mock_initial_plan(task, *ctx.scene);

  Transcript t;
  t.backend_id = id();
  t.kind = "initial";
  t.system_prompt = safe_prompting_ ? PromptTemplates::safe_system() : PromptTemplates::base_system();
  t.user_prompt = "Task: " + task.description + "\nScene: " + ctx.scene_summary;
  t.response_text = render_plan(plan);
  t.template_hash = PromptTemplates::hash(t.system_prompt);
  transcripts_.push_back(std::move(t));
  return plan;
}

TaskPlan MockPlanner::replan(const TaskPlan& plan, size_t next_step,
                             const std::vector<SafetyNotice>& notices,
                             const PlanningContext& ctx) {
  if (notices.empty()) fail(ErrorCode::BadConfig, "replan requires at least one notice");

  TaskPlan revised;
  revised.task_name = plan.task_name;
  revised.revision = plan.revision + 1;

  std::vector<Action> pending(plan.steps.begin() + static_cast<long>(next_step),
                              plan.steps.end());
  for (Action m : mitigation_steps(notices)) {
    // dedup against mitigations already pending
    const bool already = std::any_of(pending.begin(), pending.end(), [&](const Action& a) {
      return a.verb == m.verb && a.args == m.args;
    });
    if (!already) revised.steps.push_back(std::move(m));
  }
  for (Action& a : pending) revised.steps.push_back(std::move(a));
  if (revised.steps.empty() || revised.steps.back().verb != Verb::Done) {
    Action done;
    done.verb = Verb::Done;
    done.raw = "DONE";
    revised.steps.push_back(std::move(done));
  }
  for (size_t i = 0; i < revised.steps.size(); ++i)
    revised.steps[i].index = static_cast<int>(i);

  Transcript t;
  t.backend_id = id();
  t.kind = "replan";
  t.system_prompt = PromptTemplates::replan_system();
  t.user_prompt = "Notices:\n" + notices_text(notices) + "Remaining plan:\n" +
                  remaining_plan_text(plan, next_step) + "Scene: " + ctx.scene_summary;
  t.response_text = render_plan(revised);
  t.template_hash = PromptTemplates::hash(t.system_prompt);
  transcripts_.push_back(std::move(t));
  return revised;
}

HttpPlanner::HttpPlanner(std::shared_ptr<LlmClient> client, bool safe_prompting)
    : client_(std::move(client)), safe_prompting_(safe_prompting) {
  if (!client_) fail(ErrorCode::BadConfig, "HTTP planner requires a client");
}

std::string HttpPlanner::id() const {
  return (safe_prompting_ ? "http-safe:" : "http:") + client_->id();
}

TaskPlan HttpPlanner::query(const std::string& kind, const std::string& system, std::string user,
                            const std::string& task_name) {
  std::string last_error;
  for (int attempt = 0; attempt <= 2; ++attempt) {
    ChatRequest req;
    req.system = system;
    req.user = user;
    ChatResponse res = client_->complete(req);

    Transcript t;
    t.backend_id = id();
    t.kind = kind;
    t.system_prompt = system;
    t.user_prompt = user;
    t.response_text = res.text;
    t.template_hash = PromptTemplates::hash(system);
    transcripts_.push_back(std::move(t));

    try {
      return parse_plan(res.text, task_name);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnterminatedPlan && e.code() != ErrorCode::UnknownAction) throw;
      last_error = e.what();
      user += "\nYour previous reply could not be parsed (" + last_error +
              "). Reply again with only numbered action lines ending in \"DONE\".";
    }
  }
  fail(ErrorCode::PlanParseFailure, "unparsable reply after 2 retries: " + last_error);
}

TaskPlan HttpPlanner::initial_plan(const TaskSpec& task, const PlanningContext& ctx) {
  const std::string& system =
      safe_prompting_ ? PromptTemplates::safe_system() : PromptTemplates::base_system();
  TaskPlan plan = query("initial", system,
                        "Task: " + task.description + "\nScene: " + ctx.scene_summary, task.name);
  plan.revision = 0;
  return plan;
}

TaskPlan HttpPlanner::replan(const TaskPlan& plan, size_t next_step,
                             const std::vector<SafetyNotice>& notices,
                             const PlanningContext& ctx) {
  if (notices.empty()) fail(ErrorCode::BadConfig, "replan requires at least one notice");
  TaskPlan revised = query(
      "replan", PromptTemplates::replan_system(),
      "Notices:\n" + notices_text(notices) + "Remaining plan:\n" +
          remaining_plan_text(plan, next_step) + "Scene: " + ctx.scene_summary,
      plan.task_name);
  revised.revision = plan.revision + 1;
  return revised;
}

namespace {

const std::string& annotate_system_prompt() {
  static const std::string text =
      "You assess the danger of two household entity types being close to each other. Reply "
      "with a single JSON object with keys: type1 (string), type2 (string), danger_level "
      "(one of low, medium, high), risk_type (array of strings from thermal, physical, "
      "water, electrical, sharp, chemical; may be empty only for low), llm_reason (one "
      "short paragraph).\n";
  return text;
}

/// First balanced {...} block in the text (LLMs tend to wrap JSON in prose
/// or markdown fences).
std::string extract_json_object(const std::string& text) {
  const size_t start = text.find('{');
  if (start == std::string::npos)
    fail(ErrorCode::SchemaViolation, "no JSON object in reply; payload: " + text);
  int depth = 0;
  bool in_string = false;
  for (size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return text.substr(start, i - start + 1);
  }
  fail(ErrorCode::SchemaViolation, "unbalanced JSON object in reply; payload: " + text);
}

}  // namespace

HttpAnnotationBackend::HttpAnnotationBackend(std::shared_ptr<LlmClient> client)
    : client_(std::move(client)) {
  if (!client_) fail(ErrorCode::BadConfig, "HTTP annotation backend requires a client");
}

std::string HttpAnnotationBackend::id() const { return "llm:" + client_->id(); }

RiskAnnotation HttpAnnotationBackend::annotate(const std::string& type1,
                                               const std::string& type2) {
  ++calls_;
  ChatRequest req;
  req.system = annotate_system_prompt();
  req.user = "type1: " + type1 + "\ntype2: " + type2;
  ChatResponse res = client_->complete(req);
  RiskAnnotation a = parse_annotation_json(extract_json_object(res.text));
  // the reply must describe the pair that was asked about
  const std::string want = canonical_pair_key(type1, type2);
  if (canonical_pair_key(a.type1, a.type2) != want)
    fail(ErrorCode::SchemaViolation,
         "reply annotates '" + a.type1 + "|" + a.type2 + "', expected '" + want + "'");
  return a;
}

}  // namespace riskgraph
