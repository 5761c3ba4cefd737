#pragma once

#include <filesystem>
#include <iosfwd>

#include "vstitch/estimation.hpp"
#include "vstitch/grid.hpp"
#include "vstitch/objectives.hpp"
#include "vstitch/pipeline.hpp"
#include "vstitch/synth.hpp"

namespace vstitch {

/// Everything the command-line tool can configure. Defaults are the
/// published hyperparameters.
struct AppConfig {
  GridShape grid{};
  WarpObjectiveConfig warp{};
  EstimatorOptions estimator{};
  PipelineConfig pipeline{};
  SceneSpec scene{};

  void validate() const;
};

/// INI text: sections [grid], [warp], [estimator], [smoothing], [pipeline],
/// [scene], [scene_rig], [scene_ref], [scene_tgt]. Missing keys keep their
/// defaults; unknown sections or keys are rejected. Throws InvalidArgument.
AppConfig parse_config(std::istream& in);
AppConfig load_config(const std::filesystem::path& path);
/// Writes every key, so the output parses back to the same config.
void write_config(std::ostream& out, const AppConfig& cfg);

}  // namespace vstitch
