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

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "midigap/error.hpp"
#include "midigap/io.hpp"
#include "midigap/kinematics.hpp"
#include "midigap/metrics.hpp"
#include "midigap/partition.hpp"
#include "midigap/synth.hpp"
#include "midigap/updating.hpp"

namespace midigap {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("midigap_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SynthSpec synth(SynthFamily family, double noise, std::uint64_t seed = 1) {
  SynthSpec s;
  s.family = family;
  s.noise = noise;
  s.seed = seed;
  return s;
}

Trajectory line1d(const std::vector<double>& xs) {
  std::vector<Eigen::VectorXd> pts;
  for (double x : xs) pts.push_back(Eigen::VectorXd::Constant(1, x));
  return Trajectory(ManifoldSpec::euclidean(1), pts);
}

TEST(Generate, NoiselessSineEqualsTruth) {
  const Dataset d = generate(synth(SynthFamily::kSine, 0.0));
  ASSERT_EQ(d.demos.size(), 5u);
  for (std::size_t n = 0; n < d.demos.size(); ++n) {
    for (std::size_t t = 0; t < d.demos[n].length(); ++t) EXPECT_EQ(d.demos[n][t], d.truth[n][t]);
  }
  EXPECT_NEAR(d.truth[0][25][0], std::sin(2.0 * std::numbers::pi * 25.0 / 99.0), 1e-12);
}

TEST(Generate, MultimodeLabelsAreBalanced) {
  SynthSpec s = synth(SynthFamily::kMultiModePose, 0.01);
  s.n_demos = 15;
  s.modes = 3;
  const Dataset d = generate(s);
  std::vector<int> counts(3, 0);
  for (int l : d.labels) ++counts[static_cast<std::size_t>(l)];
  EXPECT_EQ(counts, (std::vector<int>{5, 5, 5}));
  EXPECT_EQ(d.spec, ManifoldSpec::pose());
}

TEST(Generate, PiecewiseLinearHitsKnots) {
  for (const auto& [s, v] : piecewise_linear_knots()) {
    EXPECT_DOUBLE_EQ(family_value(SynthFamily::kPiecewiseLinear, s, 100), v);
  }
}

TEST(Generate, DeterministicPerSeed) {
  for (const SynthFamily f : {SynthFamily::kChaotic, SynthFamily::kMultiModePose, SynthFamily::kArmTraced}) {
    const std::string a = serialize_dataset(generate(synth(f, 0.02, 5)));
    EXPECT_EQ(a, serialize_dataset(generate(synth(f, 0.02, 5))));
    EXPECT_NE(a, serialize_dataset(generate(synth(f, 0.02, 6))));
  }
}

TEST(Generate, ArmTracedCarriesJointTruth) {
  SynthSpec s = synth(SynthFamily::kArmTraced, 0.0);
  s.chain = "ur5";
  const Dataset d = generate(s);
  const KinematicChain chain = builtin_chain("ur5");
  ASSERT_EQ(d.joints.size(), d.demos.size());
  for (std::size_t t = 0; t < d.demos[0].length(); t += 10) {
    EXPECT_LT(ManifoldSpec::pose().distance(fk(chain, d.joints[0][t]), d.demos[0][t]), 1e-12);
  }
}

TEST(Generate, InvalidSpecsAreErrors) {
  SynthSpec s = synth(SynthFamily::kSine, 0.1);
  s.n_demos = 1;
  EXPECT_THROW(generate(s), Error);
  s.n_demos = 5;
  s.length = 1;
  EXPECT_THROW(generate(s), Error);
  s.length = 10;
  s.noise = -0.1;
  EXPECT_THROW(generate(s), Error);
  EXPECT_THROW(parse_synth_family("fractal"), Error);
}

TEST(Evaluate, IdenticalConstantAndLinear) {
  const Trajectory ramp = line1d({0, 1, 2, 3, 4, 5});
  const MetricsReport same = evaluate(ramp, ramp);
  EXPECT_DOUBLE_EQ(*same.rmse, 0.0);
  EXPECT_DOUBLE_EQ(*same.total_acceleration, 0.0);
  EXPECT_FALSE(same.resampled);
  EXPECT_DOUBLE_EQ(total_acceleration(line1d({2, 2, 2, 2}), 20.0), 0.0);
}

TEST(Evaluate, AccelerationOracle) {
  Rng rng(3);
  std::vector<Eigen::VectorXd> pts;
  for (int t = 0; t < 30; ++t) pts.push_back(Eigen::Vector3d(standard_normal(rng), standard_normal(rng), 0.1 * t));
  const Trajectory traj(ManifoldSpec::euclidean(3), pts);
  double oracle = 0.0;
  for (std::size_t t = 1; t + 1 < pts.size(); ++t) oracle += (pts[t + 1] - 2.0 * pts[t] + pts[t - 1]).norm() * 400.0;
  EXPECT_NEAR(total_acceleration(traj, 20.0), oracle, 1e-9 * oracle);
}

TEST(Evaluate, ResamplesAndRecords) {
  const MetricsReport r = evaluate(line1d({0, 2, 4}), line1d({0, 1, 2, 3, 4}));
  EXPECT_TRUE(r.resampled);
  EXPECT_NEAR(*r.rmse, 0.0, 1e-12);
}

TEST(Evaluate, SpecMismatchIsTyped) {
  try {
    evaluate(line1d({0, 1}), Trajectory(ManifoldSpec::euclidean(2), {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSpecMismatch);
  }
}

TEST(Satisfies, ChecksEveryPoint) {
  const Constraint above(HalfSpace{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), 0.0});
  EXPECT_TRUE(satisfies(line1d({0, 1, 2}), above));
  EXPECT_FALSE(satisfies(line1d({0, -1, 2}), above));
}

TEST(Io, DatasetRoundTripIsByteIdentical) {
  SynthSpec s = synth(SynthFamily::kMultiModePose, 0.01);
  s.object_frame = true;
  s.n_demos = 6;
  for (const SynthFamily f : {SynthFamily::kSine, SynthFamily::kMultiModePose, SynthFamily::kArmTraced}) {
    s.family = f;
    const std::string text = serialize_dataset(generate(s));
    EXPECT_EQ(schema_of(text), "midigap/dataset");
    EXPECT_EQ(serialize_dataset(parse_dataset(text)), text);
  }
}

TEST(Io, ModelRoundTripsAreByteIdentical) {
  SynthSpec s = synth(SynthFamily::kMultiModePose, 0.01);
  s.n_demos = 9;
  s.length = 30;
  const Dataset d = generate(s);
  const Partition p = make_partition(d.labels, ClusterMethod::kKMeansBic, 20);
  const MiDiGaP m = fit_mixture(d.demos, p);
  const std::string mix = serialize_mixture(m);
  EXPECT_EQ(serialize_mixture(parse_mixture(mix)), mix);

  const std::string part = serialize_partition(p, d.demos);
  std::vector<std::string> ids;
  const Partition back = parse_partition(part, &ids);
  EXPECT_EQ(back.labels, p.labels);
  EXPECT_EQ(ids.size(), d.demos.size());
  EXPECT_EQ(serialize_partition(back, d.demos), part);

  const SkillChain chain = sequence_skills({m, m});
  const std::string ch = serialize_skill_chain(chain);
  EXPECT_EQ(serialize_skill_chain(parse_skill_chain(ch)), ch);
}

TEST(Io, FramedRoundTripIsByteIdentical) {
  SynthSpec s = synth(SynthFamily::kMultiModePose, 0.01);
  s.object_frame = true;
  s.modes = 1;
  s.length = 20;
  const Dataset d = generate(s);
  FramedDiGaP framed = fit_framed(d.demos, d.frames);
  framed.windows[framed.frames.begin()->first] = {2, 10};
  const std::string text = serialize_framed(framed);
  EXPECT_EQ(serialize_framed(parse_framed(text)), text);
}

TEST(Io, ConstraintsRoundTrip) {
  OccupancyGrid grid;
  grid.dims = {2, 1, 1};
  grid.values = {0.25, 0.75};
  HalfSpaceSet set;
  set.planes.push_back({Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0, 0, 1), 0.0});
  set.planes.push_back({Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(1, 0, 0), 0.0});
  set.d_safe = 0.05;
  set.d_uni = 0.1;
  const std::vector<Constraint> cs{Constraint(ReachSphere{Eigen::Vector3d(0, 0, 0.3), 0.85}),
                                   Constraint(HalfSpace{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0, 0, 1), 0.02}),
                                   Constraint(set), Constraint(SelfCollision{Eigen::Vector3d::Zero(), 0.1}),
                                   Constraint(grid)};
  const std::string text = serialize_constraints(cs);
  const std::vector<Constraint> back = parse_constraints(text);
  ASSERT_EQ(back.size(), cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) EXPECT_EQ(back[i].name(), cs[i].name());
  EXPECT_EQ(serialize_constraints(back), text);
  const std::vector<Constraint> custom{Constraint(CustomRegion{[](const Eigen::VectorXd&) { return true; }})};
  EXPECT_THROW(serialize_constraints(custom), Error);
}

TEST(Io, ShippedChainFilesMatchBuiltins) {
  for (const auto& name : builtin_chain_names()) {
    const std::string text = read_text(fs::path(MIDIGAP_DATA_DIR) / "chains" / (name + ".jsonl"));
    EXPECT_EQ(text, serialize_kinematic_chain(builtin_chain(name))) << name;
    EXPECT_EQ(serialize_kinematic_chain(parse_kinematic_chain(text)), text);
  }
}

TEST(Io, MalformedInputIsAnIoError) {
  for (const std::string bad : {std::string(""), std::string("not json\n"),
                                std::string("{\"schema\":\"midigap/dataset\",\"version\":99}\n"),
                                std::string("{\"schema\":\"midigap/mixture\",\"version\":1}\n")}) {
    try {
      parse_dataset(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kIo) << bad;
    }
  }
}

TEST(Io, AtomicWriteReplacesContent) {
  const fs::path dir = scratch_dir("atomic");
  write_text_atomic(dir / "a.txt", "first");
  write_text_atomic(dir / "a.txt", "second");
  EXPECT_EQ(read_text(dir / "a.txt"), "second");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1);
  fs::remove_all(dir);
}

#ifdef MIDIGAP_CLI

int run(const std::string& args) {
  const int status = std::system((std::string(MIDIGAP_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, UsageErrorsAndHelp) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("fit --bogus"), 2);
}

TEST(Cli, FitOnOneDemoReportsInsufficientDemos) {
  const fs::path dir = scratch_dir("cli_fit");
  Dataset d = generate(synth(SynthFamily::kSine, 0.05));
  d.demos.resize(1);
  d.truth.resize(1);
  write_text_atomic(dir / "one.jsonl", serialize_dataset(d));
  EXPECT_EQ(run("fit --data " + (dir / "one.jsonl").string() + " --out " + (dir / "m.jsonl").string()),
            static_cast<int>(ErrorCode::kInsufficientDemos));
  fs::remove_all(dir);
}

TEST(Cli, EvalWithMismatchedSpecIsTyped) {
  const fs::path dir = scratch_dir("cli_eval");
  write_text_atomic(dir / "a.jsonl", serialize_dataset(generate(synth(SynthFamily::kSine, 0.0))));
  write_text_atomic(dir / "b.jsonl", serialize_dataset(generate(synth(SynthFamily::kMultiModePose, 0.0))));
  EXPECT_EQ(run("eval --predicted " + (dir / "a.jsonl").string() + " --reference " + (dir / "b.jsonl").string() +
                " --out " + (dir / "e.json").string()),
            static_cast<int>(ErrorCode::kSpecMismatch));
  fs::remove_all(dir);
}

TEST(Cli, StagesChainTogether) {
  const fs::path dir = scratch_dir("cli_stages");
  const std::string d = dir.string();
  ASSERT_EQ(run("synth --family multimode_pose --demos 9 --length 40 --noise 0.01 --seed 3 --out " + d), 0);
  ASSERT_EQ(run("partition --data " + d + "/dataset.jsonl --out " + d + "/partition.jsonl"), 0);
  ASSERT_EQ(run("fit --data " + d + "/dataset.jsonl --partition " + d + "/partition.jsonl --out " + d + "/model.jsonl"), 0);
  ASSERT_EQ(run("predict --model " + d + "/model.jsonl --mode 1 --out " + d + "/pred.jsonl"), 0);
  ASSERT_EQ(run("eval --predicted " + d + "/pred.jsonl --reference " + d + "/truth.jsonl --partition " + d +
                "/partition.jsonl --labels-from " + d + "/dataset.jsonl --out " + d + "/eval.json"),
            0);
  EXPECT_NE(read_text(dir / "eval.json").find("\"ari\": 1.0"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "model.jsonl.manifest.json"));
  fs::remove_all(dir);
}

TEST(Cli, PipelineRecoversModesAndIsReproducible) {
  const fs::path a = scratch_dir("pipe_a");
  const fs::path b = scratch_dir("pipe_b");
  const std::string config = std::string(MIDIGAP_DATA_DIR) + "/configs/three_mode.json";
  ASSERT_EQ(run("pipeline --config " + config + " --out " + a.string()), 0);
  ASSERT_EQ(run("pipeline --config " + config + " --out " + b.string()), 0);
  EXPECT_NE(read_text(a / "metrics.json").find("\"ari\": 1.0"), std::string::npos);
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.insert(e.path().filename().string());
  EXPECT_TRUE(names.count("manifest.json"));
  for (const auto& name : names) {
    if (name == "manifest.json") continue;  // wall-clock timings differ
    EXPECT_EQ(read_text(a / name), read_text(b / name)) << name;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

#endif

}  // namespace
}  // namespace midigap
