#pragma once

#include <array>
#include <string>

#include "riskgraph/episode.hpp"
#include "riskgraph/graphormer.hpp"
#include "riskgraph/safety_graph.hpp"

namespace riskgraph {

/// Merged run configuration. Loaded from a key = value config file, then
/// overridden by CLI flags; every run writes the resolved form next to its
/// outputs so it can be replayed byte-for-byte.
struct RunConfig {
  uint64_t seed = 1;

  // dataset
  int n_scenes = 120;
  std::array<int, 3> split = {90, 15, 15};
  int objects_min = 12;
  int objects_max = 17;

  GraphConfig graph;
  ModelConfig model;      // node_dim/edge_dim filled from the encoding at run time
  TrainConfig trainer;
  double detection_threshold = 0.21;
  int max_replans = 3;
  int max_steps = 50;
  double recall_target = 0.90;

  std::string backend = "mock";  // mock | http | safe-prompt | ltl
  std::string rules_path;
  std::string llm_url;
  std::string llm_model = "default";
  std::string out_dir = "out";
  bool record_timings = false;

  EpisodeConfig episode_config() const;

  /// Sorted key = value text, including the tool version.
  std::string to_text() const;
  void set(const std::string& key, const std::string& value);
  static RunConfig load(const std::string& path);
  void write(const std::string& path) const;
};

}  // namespace riskgraph
