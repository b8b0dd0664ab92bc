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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "midigap/constraint.hpp"
#include "midigap/kinematics.hpp"
#include "midigap/mixture.hpp"
#include "midigap/partition.hpp"
#include "midigap/synth.hpp"
#include "midigap/vapor.hpp"

namespace midigap {

// Every file is line-delimited JSON: a header object carrying "schema" and
// "version", then one record per line. Doubles are written in shortest
// round-trip form, so load -> save reproduces the bytes.

inline constexpr int kSchemaVersion = 1;

/// Writes to a sibling temporary file, then renames over the target.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Schema name from a file's header line ("midigap/dataset", ...).
std::string schema_of(const std::string& text);

std::string serialize_dataset(const Dataset& data);
Dataset parse_dataset(const std::string& text);

std::string serialize_mixture(const MiDiGaP& model);
MiDiGaP parse_mixture(const std::string& text);

std::string serialize_skill_chain(const SkillChain& chain);
SkillChain parse_skill_chain(const std::string& text);

std::string serialize_framed(const FramedDiGaP& model);
FramedDiGaP parse_framed(const std::string& text);

/// Partition records carry 1-based mode ids keyed by demo id.
std::string serialize_partition(const Partition& partition, std::span<const Trajectory> demos);
Partition parse_partition(const std::string& text, std::vector<std::string>* demo_ids = nullptr);

/// Custom regions have no file representation.
std::string serialize_constraints(std::span<const Constraint> constraints);
std::vector<Constraint> parse_constraints(const std::string& text);

std::string serialize_kinematic_chain(const KinematicChain& chain);
KinematicChain parse_kinematic_chain(const std::string& text);

std::string serialize_joint_path(const KinematicChain& chain, const PathResult& path, double nll);

}  // namespace midigap
