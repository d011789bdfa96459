#include "riskgraph/run_config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "riskgraph/errors.hpp"

namespace riskgraph {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

EpisodeConfig RunConfig::episode_config() const {
  EpisodeConfig e;
  e.detection_threshold = detection_threshold;
  e.max_replans = max_replans;
  e.max_steps = max_steps;
  e.graph = graph;
  e.record_timings = record_timings;
  return e;
}

std::string RunConfig::to_text() const {
  std::map<std::string, std::string> kv;
  kv["seed"] = std::to_string(seed);
  kv["n_scenes"] = std::to_string(n_scenes);
  kv["split"] = std::to_string(split[0]) + "," + std::to_string(split[1]) + "," +
                std::to_string(split[2]);
  kv["objects_min"] = std::to_string(objects_min);
  kv["objects_max"] = std::to_string(objects_max);
  kv["dt"] = fmt(graph.dt);
  kv["sp_mode"] = to_string(graph.sp_mode);
  kv["label_threshold"] = fmt(graph.label_threshold);
  kv["edge_policy"] = graph.edge_policy == EdgePolicy::complete ? "complete" : "radius";
  kv["radius"] = fmt(graph.radius);
  kv["layers"] = std::to_string(model.layers);
  kv["heads"] = std::to_string(model.heads);
  kv["hidden_dim"] = std::to_string(model.hidden_dim);
  kv["ff_dim"] = std::to_string(model.ff_dim);
  kv["learning_rate"] = fmt(trainer.learning_rate);
  kv["epochs"] = std::to_string(trainer.epochs);
  kv["gamma"] = fmt(trainer.gamma);
  kv["alpha_pos"] = fmt(trainer.alpha_pos);
  kv["clip_norm"] = fmt(trainer.clip_norm);
  kv["threshold"] = fmt(detection_threshold);
  kv["max_replans"] = std::to_string(max_replans);
  kv["max_steps"] = std::to_string(max_steps);
  kv["recall_target"] = fmt(recall_target);
  kv["backend"] = backend;
  kv["rules"] = rules_path;
  kv["llm_url"] = llm_url;
  kv["llm_model"] = llm_model;
  kv["out"] = out_dir;
  kv["timings"] = record_timings ? "true" : "false";
  kv["tool_version"] = RISKGRAPH_VERSION;

  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
  return os.str();
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto to_u64 = [&] { return std::stoull(value); };
  auto to_int = [&] { return std::stoi(value); };
  auto to_dbl = [&] { return std::stod(value); };
  try {
    if (key == "seed") seed = to_u64();
    else if (key == "n_scenes") n_scenes = to_int();
    else if (key == "split") {
      std::array<int, 3> s{};
      if (std::sscanf(value.c_str(), "%d,%d,%d", &s[0], &s[1], &s[2]) != 3)
        fail(ErrorCode::BadConfig, "split must be a,b,c");
      split = s;
    } else if (key == "objects_min") objects_min = to_int();
    else if (key == "objects_max") objects_max = to_int();
    else if (key == "dt") graph.dt = to_dbl();
    else if (key == "sp_mode") graph.sp_mode = sp_mode_from_string(value);
    else if (key == "label_threshold") graph.label_threshold = to_dbl();
    else if (key == "edge_policy")
      graph.edge_policy = value == "radius" ? EdgePolicy::radius : EdgePolicy::complete;
    else if (key == "radius") graph.radius = to_dbl();
    else if (key == "layers") model.layers = to_int();
    else if (key == "heads") model.heads = to_int();
    else if (key == "hidden_dim") model.hidden_dim = to_int();
    else if (key == "ff_dim") model.ff_dim = to_int();
    else if (key == "learning_rate") trainer.learning_rate = to_dbl();
    else if (key == "epochs") trainer.epochs = to_int();
    else if (key == "gamma") trainer.gamma = to_dbl();
    else if (key == "alpha_pos") trainer.alpha_pos = to_dbl();
    else if (key == "clip_norm") trainer.clip_norm = to_dbl();
    else if (key == "threshold") detection_threshold = to_dbl();
    else if (key == "max_replans") max_replans = to_int();
    else if (key == "max_steps") max_steps = to_int();
    else if (key == "recall_target") recall_target = to_dbl();
    else if (key == "backend") backend = value;
    else if (key == "rules") rules_path = value;
    else if (key == "llm_url") llm_url = value;
    else if (key == "llm_model") llm_model = value;
    else if (key == "out") out_dir = value;
    else if (key == "timings") record_timings = value == "true" || value == "1";
    else if (key == "tool_version") {}  // informational
    else fail(ErrorCode::BadConfig, "unknown config key '" + key + "'");
  } catch (const std::invalid_argument&) {
    fail(ErrorCode::BadConfig, "bad value for '" + key + "': " + value);
  } catch (const std::out_of_range&) {
    fail(ErrorCode::BadConfig, "value out of range for '" + key + "': " + value);
  }
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot open config " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::BadConfig,
           "config line " + std::to_string(lineno) + " is not 'key = value'");
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  f << to_text();
}

}  // namespace riskgraph
