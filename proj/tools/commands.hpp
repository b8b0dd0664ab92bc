// Copyright 2026 The midigap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "midigap/synth.hpp"
#include "midigap/vapor.hpp"

namespace midigap::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// What a command did: inputs, seeds, outputs, and stage timings, plus a
/// short human-readable summary for stdout.
struct RunRecord {
  std::string command;
  Json inputs = Json::object();
  Json seeds = Json::object();
  Json timings = Json::object();
  std::vector<std::string> outputs;
  std::string summary;
};

void write_manifest(const fs::path& path, const RunRecord& record);

struct SynthArgs {
  SynthSpec spec;
  fs::path out_dir;
};

struct PartitionArgs {
  fs::path data;
  std::string method = "kmeans";
  int subsample_length = 20;
  double eps = 0.5;
  int min_pts = 3;
  int k_max = 0;
  std::uint64_t seed = 0;
  fs::path out;
};

struct FitArgs {
  fs::path data;
  std::optional<fs::path> partition;
  bool framed = false;
  std::optional<int> length;
  double var_floor = 1e-8;
  fs::path out;
};

struct PredictArgs {
  fs::path model;
  std::optional<int> mode;                 // mixture: regress this mode's mean
  std::optional<std::vector<int>> path;    // chain: regress along this modal path
  std::optional<fs::path> frames_from;     // framed: dataset whose frame poses ground the model
  int demo = 0;
  std::uint64_t seed = 0;
  fs::path out;
};

struct UpdateArgs {
  fs::path model;
  fs::path constraints;
  std::uint64_t seed = 0;
  int samples = 1000;
  double z = 1.96;
  double q = 1.0;
  std::optional<double> d_uni;
  fs::path out;
  fs::path report;
};

struct OptimizeArgs {
  fs::path model;
  std::string chain = "ur5";
  std::optional<std::vector<double>> q0;
  PathOptions path;
  double q_norm = 1.0;
  fs::path out_dir;
};

struct EvalArgs {
  fs::path predicted;
  fs::path reference;
  std::optional<fs::path> model;
  int mode = 0;
  std::optional<fs::path> partition;
  std::optional<fs::path> labels_from;
  fs::path out;
};

struct PipelineArgs {
  fs::path config;
  fs::path out_dir;
};

RunRecord run_synth(const SynthArgs& args);
RunRecord run_partition(const PartitionArgs& args);
RunRecord run_fit(const FitArgs& args);
RunRecord run_predict(const PredictArgs& args);
RunRecord run_update(const UpdateArgs& args);
RunRecord run_optimize(const OptimizeArgs& args);
RunRecord run_eval(const EvalArgs& args);
RunRecord run_pipeline(const PipelineArgs& args);

/// Built-in chain name or chain description file.
KinematicChain load_kinematic_chain(const std::string& name_or_path);

}  // namespace midigap::cli
