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
#include <string>
#include <string_view>
#include <vector>

#include "midigap/digap.hpp"
#include "midigap/vapor.hpp"

namespace midigap {

enum class SynthFamily {
  kSine,
  kPiecewiseLinear,
  kOscillatory,
  kNonStationary,
  kChaotic,
  kDiscontinuous,
  kMultiModePose,
  kArmTraced,
};

std::string to_string(SynthFamily family);
SynthFamily parse_synth_family(std::string_view name);

/// kIid draws independent noise per step; kSmooth draws a random
/// low-frequency curve per demo with the same pointwise standard deviation.
enum class NoiseKind { kIid, kSmooth };

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);

struct SynthSpec {
  SynthFamily family = SynthFamily::kSine;
  int n_demos = 5;
  int length = 100;
  double noise = 0.05;
  NoiseKind noise_kind = NoiseKind::kIid;
  std::uint64_t seed = 0;
  double sample_rate_hz = 20.0;
  // multimode pose
  int modes = 3;
  double separation = 0.1;    // metres between neighbouring modes
  bool second_half_only = false;  // modes differ only in y over the second half
  bool object_frame = false;      // demos recorded relative to a random object frame
  // arm traced
  std::string chain = "panda";
  double joint_excursion = 0.5;   // radians between start and goal per joint
};

struct Dataset {
  ManifoldSpec spec;
  double sample_rate_hz = 20.0;
  std::vector<Trajectory> demos;
  std::vector<Trajectory> truth;      // noiseless counterpart of each demo
  std::vector<int> labels;            // 0-based modes, empty when unimodal
  std::vector<FramePoses> frames;     // per demo, empty when unframed
  std::vector<JointTrajectory> joints;  // arm-traced joint ground truth
};

Dataset generate(const SynthSpec& spec);

/// Noiseless scalar target of a one-dimensional family at phase s in [0, 1].
double family_value(SynthFamily family, double s, int length);

/// Corner points (s, value) of the piecewise-linear family.
std::vector<std::pair<double, double>> piecewise_linear_knots();

}  // namespace midigap
