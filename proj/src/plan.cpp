#include "riskgraph/plan.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "riskgraph/catalog.hpp"
#include "riskgraph/errors.hpp"

namespace riskgraph {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string strip_article(std::string s) {
  s = trim(s);
  const std::string l = lower(s);
  for (const char* art : {"the ", "a ", "an "})
    if (l.rfind(art, 0) == 0) return trim(s.substr(std::string(art).size()));
  return s;
}

std::string strip_trailing_punct(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == '!')) s.pop_back();
  return trim(s);
}

/// Splits "X <sep> Y" at the first of the given separator words.
bool split_on(const std::string& phrase, std::initializer_list<const char*> seps,
              std::string& left, std::string& right) {
  const std::string l = lower(phrase);
  size_t best = std::string::npos;
  size_t sep_len = 0;
  for (const char* sep : seps) {
    const std::string pat = std::string(" ") + sep + " ";
    const size_t pos = l.find(pat);
    if (pos != std::string::npos && pos < best) {
      best = pos;
      sep_len = pat.size();
    }
  }
  if (best == std::string::npos) return false;
  left = trim(phrase.substr(0, best));
  right = trim(phrase.substr(best + sep_len));
  return true;
}

/// True when the name resolves to an agent kind in the catalog.
enum class NameClass { agent, object, unknown };

NameClass classify_name(const std::string& name) {
  auto idx = Catalog::instance().find(name);
  if (!idx) return NameClass::unknown;
  return Catalog::instance().at(*idx).is_agent() ? NameClass::agent : NameClass::object;
}

Action parse_phrase(const std::string& phrase_in, const std::string& raw_line) {
  const std::string phrase = strip_trailing_punct(trim(phrase_in));
  const std::string l = lower(phrase);
  Action a;
  a.raw = raw_line;

  auto rest_after = [&](const char* prefix) {
    return strip_article(phrase.substr(std::string(prefix).size()));
  };

  if (l == "done") {
    a.verb = Verb::Done;
    return a;
  }
  if (l.rfind("walk to ", 0) == 0) {
    a.verb = Verb::Walk;
    a.args = {rest_after("walk to ")};
    return a;
  }
  if (l.rfind("go to ", 0) == 0) {
    a.verb = Verb::Walk;
    a.args = {rest_after("go to ")};
    return a;
  }
  if (l.rfind("pick up ", 0) == 0) {
    a.verb = Verb::PickUp;
    a.args = {rest_after("pick up ")};
    return a;
  }
  if (l.rfind("gather ", 0) == 0) {
    a.verb = Verb::PickUp;
    a.args = {rest_after("gather ")};
    return a;
  }
  if (l.rfind("place ", 0) == 0 || l.rfind("put ", 0) == 0) {
    a.verb = Verb::Place;
    const std::string rest =
        l.rfind("place ", 0) == 0 ? rest_after("place ") : rest_after("put ");
    std::string obj, target;
    if (split_on(rest, {"in", "on", "at", "near", "into", "onto"}, obj, target))
      a.args = {strip_article(obj), strip_article(target)};
    else
      a.args = {strip_article(rest)};
    return a;
  }
  if (l.rfind("open ", 0) == 0) {
    a.verb = Verb::Open;
    a.args = {rest_after("open ")};
    return a;
  }
  if (l.rfind("close ", 0) == 0) {
    a.verb = Verb::Close;
    a.args = {rest_after("close ")};
    return a;
  }
  if (l.rfind("start cooking", 0) == 0 || l.rfind("start cook", 0) == 0) {
    a.verb = Verb::StartCook;
    const size_t n = l.rfind("start cooking", 0) == 0 ? 13 : 10;
    const std::string rest = strip_article(trim(phrase.substr(n)));
    if (!rest.empty()) a.args = {rest};
    return a;
  }
  if (l.rfind("ensure ", 0) == 0) {
    a.verb = Verb::EnsureSafe;
    std::string subject = rest_after("ensure ");
    std::string left, right;
    if (split_on(subject, {"is", "stays", "remains"}, left, right)) subject = left;
    a.args = {strip_article(subject)};
    return a;
  }
  if (l.rfind("secure ", 0) == 0) {
    a.verb = Verb::SecureObject;
    std::string object = rest_after("secure ");
    std::string left, right;
    if (split_on(object, {"in", "at", "inside"}, left, right)) object = left;
    a.args = {strip_article(object)};
    return a;
  }
  if (l.rfind("handle safety issue", 0) == 0) {
    std::string rest = trim(phrase.substr(19));
    if (lower(rest).rfind("for ", 0) == 0) rest = rest.substr(4);
    if (!rest.empty() && rest.front() == ':') rest = rest.substr(1);
    rest = strip_article(trim(rest));
    // Fig. 4 verb, normalized when the argument class is known
    switch (classify_name(rest)) {
      case NameClass::agent: a.verb = Verb::EnsureSafe; break;
      case NameClass::object: a.verb = Verb::SecureObject; break;
      case NameClass::unknown: a.verb = Verb::HandleSafetyIssue; break;
    }
    a.args = {rest};
    return a;
  }
  fail(ErrorCode::UnknownAction, "cannot map line: '" + raw_line + "'");
}

}  // namespace

const char* to_string(Verb verb) {
  switch (verb) {
    case Verb::Walk: return "Walk";
    case Verb::PickUp: return "PickUp";
    case Verb::Place: return "Place";
    case Verb::Open: return "Open";
    case Verb::Close: return "Close";
    case Verb::StartCook: return "StartCook";
    case Verb::HandleSafetyIssue: return "HandleSafetyIssue";
    case Verb::EnsureSafe: return "EnsureSafe";
    case Verb::SecureObject: return "SecureObject";
    case Verb::Done: return "Done";
  }
  return "?";
}

TaskPlan parse_plan(const std::string& text, const std::string& task_name) {
  TaskPlan plan;
  plan.task_name = task_name;

  std::istringstream in(text);
  std::string line;
  bool done_seen = false;
  while (!done_seen && std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    // numbered step: "N." or "N)"
    size_t digits = 0;
    while (digits < t.size() && std::isdigit(static_cast<unsigned char>(t[digits]))) ++digits;
    if (digits == 0 || digits >= t.size() || (t[digits] != '.' && t[digits] != ')'))
      continue;  // surrounding prose
    const std::string phrase = trim(t.substr(digits + 1));
    if (phrase.empty()) fail(ErrorCode::UnknownAction, "empty step: '" + line + "'");
    Action a = parse_phrase(phrase, t);
    a.index = static_cast<int>(plan.steps.size());
    done_seen = a.verb == Verb::Done;
    plan.steps.push_back(std::move(a));
  }
  if (!done_seen) fail(ErrorCode::UnterminatedPlan, "no DONE step found");
  return plan;
}

std::string render_action(const Action& a) {
  auto arg = [&](size_t i) { return i < a.args.size() ? a.args[i] : std::string(); };
  switch (a.verb) {
    case Verb::Walk: return "Walk to " + arg(0);
    case Verb::PickUp: return "Pick up " + arg(0);
    case Verb::Place:
      return a.args.size() > 1 ? "Place " + arg(0) + " near " + arg(1) : "Place " + arg(0);
    case Verb::Open: return "Open " + arg(0);
    case Verb::Close: return "Close " + arg(0);
    case Verb::StartCook:
      return a.args.empty() ? "Start cooking" : "Start cooking " + arg(0);
    case Verb::HandleSafetyIssue: return "Handle safety issue for " + arg(0);
    case Verb::EnsureSafe: return "Ensure " + arg(0) + " is in a safe location";
    case Verb::SecureObject: return "Secure " + arg(0) + " in a designated area";
    case Verb::Done: return "DONE";
  }
  return "?";
}

std::string render_plan(const TaskPlan& plan) {
  std::ostringstream os;
  for (size_t i = 0; i < plan.steps.size(); ++i)
    os << i << ". " << render_action(plan.steps[i]) << "\n";
  return os.str();
}

}  // namespace riskgraph
