#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "riskgraph/backends.hpp"
#include "riskgraph/errors.hpp"
#include "riskgraph/ltl.hpp"
#include "riskgraph/rng.hpp"
#include "riskgraph/tasks.hpp"

using namespace riskgraph;

namespace {

std::vector<Verb> verbs_of(const TaskPlan& plan) {
  std::vector<Verb> out;
  for (const auto& a : plan.steps) out.push_back(a.verb);
  return out;
}

Scene hazard_kitchen(uint64_t seed = 7) {
  SceneSpec spec;
  spec.room_type = RoomType::kitchen;
  spec.agent_policy = AgentPlacement::near_hazard;
  return generate_scene(spec, seed);
}

SafetyNotice make_notice(const Scene& scene, const std::string& agent_kind,
                         const std::string& object_kind) {
  static const AnnotationCache cache = builtin_risk_table();
  SafetyNotice n;
  for (const auto& e : scene.entities) {
    if (e.category_name() == agent_kind && n.entity_a.empty()) {
      n.entity_a = e.id;
      n.category_a = agent_kind;
    }
    if (e.category_name() == object_kind && n.entity_b.empty()) {
      n.entity_b = e.id;
      n.category_b = object_kind;
    }
  }
  REQUIRE_FALSE(n.entity_a.empty());
  REQUIRE_FALSE(n.entity_b.empty());
  n.probability = 0.97;
  n.annotation = cache.get(agent_kind, object_kind);
  n.text = render_notice(n);
  return n;
}

}  // namespace

TEST_CASE("parse_plan handles the minimal two-line plan") {
  const TaskPlan plan = parse_plan("0. Walk to kitchen\n1. DONE");
  REQUIRE(plan.steps.size() == 2);
  CHECK(plan.steps[0].verb == Verb::Walk);
  CHECK(plan.steps[0].args == std::vector<std::string>{"kitchen"});
  CHECK(plan.steps[1].verb == Verb::Done);
  CHECK(plan.steps[1].args.empty());
  CHECK(plan.steps[0].index == 0);
  CHECK(plan.steps[1].index == 1);
}

TEST_CASE("parse_plan maps the safety phrases") {
  const TaskPlan plan = parse_plan(
      "0. Ensure child is in a safe location\n"
      "1. Secure knife in a designated area\n"
      "2. DONE");
  REQUIRE(plan.steps.size() == 3);
  CHECK(plan.steps[0].verb == Verb::EnsureSafe);
  CHECK(plan.steps[0].args == std::vector<std::string>{"child"});
  CHECK(plan.steps[1].verb == Verb::SecureObject);
  CHECK(plan.steps[1].args == std::vector<std::string>{"knife"});
}

TEST_CASE("parse_plan accepts the full replanned example sequence") {
  const TaskPlan plan = parse_plan(
      "0. Walk to kitchen\n"
      "1. Ensure child is in a safe location\n"
      "2. Secure knife in a designated area\n"
      "3. Gather ingredients\n"
      "4. Start cooking\n"
      "5. DONE");
  CHECK(verbs_of(plan) == std::vector<Verb>{Verb::Walk, Verb::EnsureSafe, Verb::SecureObject,
                                            Verb::PickUp, Verb::StartCook, Verb::Done});
}

TEST_CASE("parse_plan error paths") {
  try {
    parse_plan("");
    FAIL("expected UnterminatedPlan");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnterminatedPlan);
  }
  try {
    parse_plan("0. Walk to kitchen\n1. Gather ingredients");
    FAIL("expected UnterminatedPlan");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnterminatedPlan);
  }
  try {
    parse_plan("0. Frobnicate the widget\n1. DONE");
    FAIL("expected UnknownAction");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownAction);
    CHECK(std::string(e.what()).find("Frobnicate") != std::string::npos);
  }
}

TEST_CASE("surrounding prose is skipped, unparseable numbered lines are not") {
  const TaskPlan plan = parse_plan(
      "Here is the plan you asked for:\n"
      "0. Walk to kitchen\n"
      "1. DONE\n"
      "Let me know if anything is unclear.");
  CHECK(plan.steps.size() == 2);
}

TEST_CASE("HandleSafetyIssue normalizes by argument class") {
  const TaskPlan plan = parse_plan(
      "0. Handle safety issue for Baby\n"
      "1. Handle safety issue for Knife\n"
      "2. Handle safety issue for Gizmo_7\n"
      "3. DONE");
  CHECK(plan.steps[0].verb == Verb::EnsureSafe);
  CHECK(plan.steps[1].verb == Verb::SecureObject);
  CHECK(plan.steps[2].verb == Verb::HandleSafetyIssue);  // unknown name stays as-is
}

TEST_CASE("parse after render is the identity on the action grammar") {
  Rng rng(4711);
  static const std::vector<std::string> kNames = {"Knife_0", "Baby_2",  "Fridge_1",
                                                  "Pan_3",   "Apple_4", "kitchen"};
  for (int trial = 0; trial < 500; ++trial) {
    TaskPlan plan;
    plan.task_name = "roundtrip";
    const int n = 1 + static_cast<int>(rng.next_below(6));
    for (int i = 0; i < n; ++i) {
      Action a;
      switch (rng.next_below(8)) {
        case 0: a.verb = Verb::Walk; a.args = {kNames[rng.next_below(6)]}; break;
        case 1: a.verb = Verb::PickUp; a.args = {kNames[rng.next_below(5)]}; break;
        case 2:
          a.verb = Verb::Place;
          a.args = {kNames[rng.next_below(5)], kNames[rng.next_below(5)]};
          break;
        case 3: a.verb = Verb::Open; a.args = {kNames[rng.next_below(5)]}; break;
        case 4: a.verb = Verb::Close; a.args = {kNames[rng.next_below(5)]}; break;
        case 5: a.verb = Verb::StartCook; if (rng.next_bool(0.5)) a.args = {"Pan_3"}; break;
        case 6: a.verb = Verb::EnsureSafe; a.args = {"Baby_2"}; break;
        default: a.verb = Verb::SecureObject; a.args = {"Knife_0"}; break;
      }
      a.index = i;
      a.raw = render_action(a);
      plan.steps.push_back(std::move(a));
    }
    Action done;
    done.verb = Verb::Done;
    done.index = n;
    done.raw = "DONE";
    plan.steps.push_back(done);

    const TaskPlan back = parse_plan(render_plan(plan), plan.task_name);
    REQUIRE(back.steps.size() == plan.steps.size());
    for (size_t i = 0; i < plan.steps.size(); ++i) {
      CHECK(back.steps[i].verb == plan.steps[i].verb);
      CHECK(back.steps[i].args == plan.steps[i].args);
    }
  }
}

TEST_CASE("mock initial plan for the cooking task has the documented shape") {
  const Scene scene = hazard_kitchen();
  MockPlanner mock;
  PlanningContext ctx;
  ctx.scene = &scene;
  ctx.scene_summary = scene_summary(scene);
  const TaskPlan plan = mock.initial_plan(task_by_name("prepare_meal"), ctx);
  CHECK(verbs_of(plan) ==
        std::vector<Verb>{Verb::Walk, Verb::PickUp, Verb::StartCook, Verb::Done});
  CHECK(plan.steps[0].args == std::vector<std::string>{"kitchen"});
  CHECK(plan.revision == 0);

  // deterministic: same inputs, identical plan bytes
  MockPlanner mock2;
  CHECK(render_plan(mock2.initial_plan(task_by_name("prepare_meal"), ctx)) == render_plan(plan));
}

TEST_CASE("safe-prompting mock records the safety preamble but plans identically") {
  const Scene scene = hazard_kitchen();
  PlanningContext ctx;
  ctx.scene = &scene;
  ctx.scene_summary = scene_summary(scene);
  MockPlanner plain(false), safe(true);
  const TaskPlan a = plain.initial_plan(task_by_name("tidy_up"), ctx);
  const TaskPlan b = safe.initial_plan(task_by_name("tidy_up"), ctx);
  CHECK(render_plan(a) == render_plan(b));
  REQUIRE(plain.transcripts().size() == 1);
  REQUIRE(safe.transcripts().size() == 1);
  CHECK(safe.transcripts()[0].system_prompt != plain.transcripts()[0].system_prompt);
  CHECK(safe.transcripts()[0].system_prompt.find("safety") != std::string::npos);
  CHECK(safe.transcripts()[0].template_hash !=
        plain.transcripts()[0].template_hash);  // version-pinned templates
}

TEST_CASE("mock replan inserts mitigations before the pending steps") {
  const Scene scene = hazard_kitchen();
  MockPlanner mock;
  PlanningContext ctx;
  ctx.scene = &scene;
  ctx.scene_summary = scene_summary(scene);
  const TaskPlan plan = mock.initial_plan(task_by_name("prepare_meal"), ctx);
  const SafetyNotice notice = make_notice(scene, "Baby", "Knife");

  const TaskPlan revised = mock.replan(plan, 1, {notice}, ctx);  // step 0 already executed
  CHECK(revised.revision == plan.revision + 1);
  const auto vs = verbs_of(revised);
  // EnsureSafe(Baby) then SecureObject(Knife) ahead of the cooking steps
  REQUIRE(vs.size() >= 5);
  CHECK(vs[0] == Verb::EnsureSafe);
  CHECK(revised.steps[0].args[0] == notice.entity_a);
  CHECK(vs[1] == Verb::SecureObject);
  CHECK(revised.steps[1].args[0] == notice.entity_b);
  const auto cook = std::find(vs.begin(), vs.end(), Verb::StartCook);
  REQUIRE(cook != vs.end());
  CHECK(std::distance(vs.begin(), cook) > 1);

  // pending original steps survive in order (subsequence property)
  size_t cursor = 0;
  for (size_t i = 1; i < plan.steps.size(); ++i) {
    bool found = false;
    for (; cursor < revised.steps.size(); ++cursor)
      if (revised.steps[cursor] == plan.steps[i]) {
        found = true;
        ++cursor;
        break;
      }
    CHECK(found);
  }

  // replanning again with the same notices adds no duplicate mitigations
  const TaskPlan again = mock.replan(revised, 0, {notice}, ctx);
  CHECK(again.revision == revised.revision + 1);
  CHECK(verbs_of(again) == verbs_of(revised));
}

TEST_CASE("ltl_evaluate distance rules") {
  Scene scene;
  scene.id = "ltl";
  scene.room_type = RoomType::kitchen;
  const auto& catalog = Catalog::instance();
  auto put = [&](const std::string& kind, double x) {
    Entity e;
    e.category = catalog.require(kind);
    e.id = kind + "_" + std::to_string(scene.entities.size());
    e.position = {x, 0.0, 0.0};
    e.is_agent = catalog.at(e.category).is_agent();
    e.attributes = catalog.at(e.category).attrs;
    scene.entities.push_back(e);
  };
  put("Baby", 0.0);
  put("Knife", 0.3);
  put("Robot", 3.0);

  LtlRule rule{"child_knife", "Child", "Knife", 1.0, "child near knife"};

  const SafetySignal unsafe = ltl_evaluate({rule}, scene);
  CHECK_FALSE(unsafe.safe);
  REQUIRE(unsafe.violated_rules.size() == 1);
  CHECK(unsafe.violated_rules[0] == "child_knife");
  CHECK(unsafe.safe == unsafe.violated_rules.empty());

  // empty rule set: the vacuous monitor reports safe everywhere
  CHECK(ltl_evaluate({}, scene).safe);

  // out of range
  scene.entities[0].position[0] = -1.2;  // 1.5m from the knife
  CHECK(ltl_evaluate({rule}, scene).safe);
}

TEST_CASE("ltl monitoring is monotone in the rule set") {
  Rng rng(31337);
  for (int trial = 0; trial < 50; ++trial) {
    SceneSpec spec;
    spec.room_type = RoomType::kitchen;
    spec.agent_policy = rng.next_bool(0.5) ? AgentPlacement::near_hazard : AgentPlacement::random;
    const Scene scene = generate_scene(spec, rng.next_u64());
    std::vector<LtlRule> base(partial_rule_set().begin(),
                              partial_rule_set().begin() +
                                  static_cast<long>(rng.next_below(8)));
    std::vector<LtlRule> extended = base;
    extended.insert(extended.end(), full_rule_set().begin(), full_rule_set().end());
    const SafetySignal small = ltl_evaluate(base, scene);
    const SafetySignal big = ltl_evaluate(extended, scene);
    if (!small.safe) CHECK_FALSE(big.safe);  // adding rules never turns unsafe into safe
    for (const auto& id : small.violated_rules)
      CHECK(std::count(big.violated_rules.begin(), big.violated_rules.end(), id) >= 1);
  }
}

TEST_CASE("full rule set covers every hazardous kind, partial stays in the kitchen") {
  const auto& full = full_rule_set();
  for (const auto& k : Catalog::instance().kinds()) {
    if (k.is_agent() || !k.hazardous()) continue;
    const bool covered = std::any_of(full.begin(), full.end(), [&](const LtlRule& r) {
      return r.object_pattern == k.name && r.subject_pattern == "Baby";
    });
    CHECK(covered);
  }
  const auto& partial = partial_rule_set();
  const bool bathroom_covered = std::any_of(partial.begin(), partial.end(), [](const LtlRule& r) {
    return r.object_pattern == "HairDryer";
  });
  CHECK_FALSE(bathroom_covered);  // the blind spot the full set does not have
}

TEST_CASE("rule sets round-trip through JSON and match the reference files") {
  const std::string text = rules_to_json_string(full_rule_set());
  const auto back = rules_from_json_string(text);
  REQUIRE(back.size() == full_rule_set().size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == full_rule_set()[i].id);
    CHECK(back[i].max_distance == full_rule_set()[i].max_distance);
  }

  auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  const std::string root(RISKGRAPH_SOURCE_DIR);
  CHECK(slurp(root + "/data/rules_full.json") == rules_to_json_string(full_rule_set()));
  CHECK(slurp(root + "/data/rules_partial.json") == rules_to_json_string(partial_rule_set()));
  CHECK(slurp(root + "/data/tasks.json") == tasks_to_json_string());
}

TEST_CASE("benchmark tasks span the three complexity levels") {
  const auto& tasks = benchmark_tasks();
  REQUIRE(tasks.size() == 5);
  int simple = 0, intermediate = 0, complex_count = 0;
  for (const auto& t : tasks) {
    if (t.complexity == TaskComplexity::simple) ++simple;
    if (t.complexity == TaskComplexity::intermediate) ++intermediate;
    if (t.complexity == TaskComplexity::complex) ++complex_count;
  }
  CHECK(simple == 2);         // spatial reorganization
  CHECK(intermediate == 2);   // object manipulation
  CHECK(complex_count == 1);  // cooking
  CHECK(task_by_name("prepare_meal").description == "Cook the meal.");
}
