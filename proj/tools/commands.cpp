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

#include "commands.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "midigap/error.hpp"
#include "midigap/io.hpp"
#include "midigap/metrics.hpp"
#include "midigap/mixture.hpp"
#include "midigap/partition.hpp"
#include "midigap/random.hpp"
#include "midigap/updating.hpp"

#ifndef MIDIGAP_VERSION
#define MIDIGAP_VERSION "unknown"
#endif

namespace midigap::cli {

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Json vec_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

void write_json(const fs::path& path, const Json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

Dataset load_dataset(const fs::path& path) { return parse_dataset(read_text(path)); }

ClusterMethod method_of(const std::string& name) { return parse_cluster_method(name); }

Partition partition_demos(std::span<const Trajectory> demos, ClusterMethod method, int subsample, int k_max,
                          double eps, int min_pts, std::uint64_t seed) {
  const VectorSet vectors = vectorize(demos, subsample);
  ClusterOptions options;
  options.k_max = k_max;
  options.seed = seed;
  switch (method) {
    case ClusterMethod::kGmmBic: return cluster_gmm_bic(vectors, options);
    case ClusterMethod::kKMeansBic: return cluster_kmeans_bic(vectors, options);
    case ClusterMethod::kDbscan: return cluster_dbscan(vectors, eps, min_pts);
  }
  fail(ErrorCode::kInvalidArgument, "unknown clustering method");
}

Json report_json(const std::vector<ModeUpdateReport>& reports) {
  Json modes = Json::array();
  for (std::size_t m = 0; m < reports.size(); ++m) {
    const ModeUpdateReport& r = reports[m];
    modes.push_back(Json{{"mode", m + 1},
                         {"prior_before", r.prior_before},
                         {"prior_after", r.prior_after},
                         {"ci_passed", r.ci_passed},
                         {"evidence", r.evidence}});
  }
  return modes;
}

Eigen::VectorXd default_q0(const KinematicChain& chain) { return 0.5 * (chain.lower() + chain.upper()); }

Eigen::VectorXd q0_of(const KinematicChain& chain, const std::optional<std::vector<double>>& q0) {
  if (!q0) return default_q0(chain);
  if (static_cast<int>(q0->size()) != chain.dof()) {
    fail(ErrorCode::kInvalidArgument, "q0 needs " + std::to_string(chain.dof()) + " values for chain " + chain.name());
  }
  return Eigen::Map<const Eigen::VectorXd>(q0->data(), chain.dof());
}

SynthSpec synth_spec_from(const Json& j, std::uint64_t seed) {
  SynthSpec s;
  s.family = parse_synth_family(j.value("family", "multimode_pose"));
  s.n_demos = j.value("demos", s.n_demos);
  s.length = j.value("length", s.length);
  s.noise = j.value("noise", s.noise);
  s.noise_kind = parse_noise_kind(j.value("noise_kind", "iid"));
  s.sample_rate_hz = j.value("sample_rate_hz", s.sample_rate_hz);
  s.modes = j.value("modes", s.modes);
  s.separation = j.value("separation", s.separation);
  s.second_half_only = j.value("second_half_only", s.second_half_only);
  s.object_frame = j.value("object_frame", s.object_frame);
  s.chain = j.value("chain", s.chain);
  s.joint_excursion = j.value("joint_excursion", s.joint_excursion);
  s.seed = seed;
  return s;
}

std::vector<Constraint> constraints_from(const Json& records) {
  std::string text = Json{{"schema", "midigap/constraints"}, {"version", kSchemaVersion}}.dump() + "\n";
  for (const Json& r : records) text += r.dump() + "\n";
  return parse_constraints(text);
}

Dataset single_trajectory(const Trajectory& traj, double rate) {
  Dataset d;
  d.spec = traj.spec();
  d.sample_rate_hz = rate;
  d.demos.push_back(traj);
  return d;
}

}  // namespace

void write_manifest(const fs::path& path, const RunRecord& record) {
  Json m{{"tool", "midigap"},
         {"version", MIDIGAP_VERSION},
         {"command", record.command},
         {"inputs", record.inputs},
         {"seeds", record.seeds},
         {"outputs", record.outputs},
         {"timings_s", record.timings}};
  write_json(path, m);
}

KinematicChain load_kinematic_chain(const std::string& name_or_path) {
  for (const std::string& name : builtin_chain_names()) {
    if (name == name_or_path) return builtin_chain(name);
  }
  return parse_kinematic_chain(read_text(name_or_path));
}

RunRecord run_synth(const SynthArgs& args) {
  Stopwatch clock;
  RunRecord rec;
  rec.command = "synth";
  const Dataset data = generate(args.spec);
  ensure_dir(args.out_dir);
  Dataset truth = data;
  truth.demos = data.truth;
  write_text_atomic(args.out_dir / "dataset.jsonl", serialize_dataset(data));
  write_text_atomic(args.out_dir / "truth.jsonl", serialize_dataset(truth));
  rec.inputs = Json{{"family", to_string(args.spec.family)},
                    {"demos", args.spec.n_demos},
                    {"length", args.spec.length},
                    {"noise", args.spec.noise},
                    {"noise_kind", to_string(args.spec.noise_kind)}};
  rec.seeds["synth"] = args.spec.seed;
  rec.outputs = {(args.out_dir / "dataset.jsonl").string(), (args.out_dir / "truth.jsonl").string()};
  rec.timings["synth"] = clock.seconds();
  rec.summary = "wrote " + std::to_string(data.demos.size()) + " demos of " + to_string(args.spec.family);
  return rec;
}

RunRecord run_partition(const PartitionArgs& args) {
  Stopwatch clock;
  RunRecord rec;
  rec.command = "partition";
  const Dataset data = load_dataset(args.data);
  const Partition p = partition_demos(data.demos, method_of(args.method), args.subsample_length, args.k_max,
                                      args.eps, args.min_pts, args.seed);
  write_text_atomic(args.out, serialize_partition(p, data.demos));
  rec.inputs = Json{{"data", args.data.string()},
                    {"method", args.method},
                    {"subsample_length", args.subsample_length},
                    {"k_max", args.k_max},
                    {"eps", args.eps},
                    {"min_pts", args.min_pts}};
  rec.seeds["partition"] = args.seed;
  rec.outputs = {args.out.string()};
  rec.timings["partition"] = clock.seconds();
  rec.summary = "modes " + std::to_string(p.parts);
  if (!data.labels.empty()) {
    rec.summary += ", ARI " + std::to_string(adjusted_rand_index(p.labels, data.labels));
  }
  return rec;
}

RunRecord run_fit(const FitArgs& args) {
  Stopwatch clock;
  RunRecord rec;
  rec.command = "fit";
  const Dataset data = load_dataset(args.data);
  FitOptions options;
  options.var_floor = args.var_floor;
  options.length = args.length;
  options.sample_rate_hz = data.sample_rate_hz;
  rec.inputs = Json{{"data", args.data.string()}, {"framed", args.framed}, {"var_floor", args.var_floor}};
  if (args.framed) {
    if (data.frames.empty()) fail(ErrorCode::kInvalidArgument, "dataset has no frame poses for a framed fit");
    const FramedDiGaP model = fit_framed(data.demos, data.frames, options);
    write_text_atomic(args.out, serialize_framed(model));
    rec.summary = "framed model over " + std::to_string(model.frames.size()) + " frames";
  } else {
    MiDiGaP model;
    if (args.partition) {
      std::vector<std::string> ids;
      const Partition p = parse_partition(read_text(*args.partition), &ids);
      for (std::size_t i = 0; i < ids.size() && i < data.demos.size(); ++i) {
        if (ids[i] != data.demos[i].demo_id()) {
          fail(ErrorCode::kInvalidArgument, "partition demo order does not match the dataset");
        }
      }
      model = fit_mixture(data.demos, p, options);
      rec.inputs["partition"] = args.partition->string();
    } else {
      model.modes.push_back({1.0, fit(data.demos, options)});
      model.provenance = "single";
    }
    write_text_atomic(args.out, serialize_mixture(model));
    rec.summary = "mixture with " + std::to_string(model.modes.size()) + " modes, T = " +
                  std::to_string(model.length());
  }
  rec.outputs = {args.out.string()};
  rec.timings["fit"] = clock.seconds();
  return rec;
}

RunRecord run_predict(const PredictArgs& args) {
  Stopwatch clock;
  RunRecord rec;
  rec.command = "predict";
  const std::string text = read_text(args.model);
  const std::string schema = schema_of(text);
  Rng rng(args.seed);
  Trajectory out;
  double rate = 20.0;
  if (schema == "midigap/mixture") {
    const MiDiGaP model = parse_mixture(text);
    rate = model.modes.front().model.sample_rate_hz();
    if (args.mode) {
      if (*args.mode < 1 || *args.mode > static_cast<int>(model.modes.size())) {
        fail(ErrorCode::kInvalidArgument, "mode must lie in 1.." + std::to_string(model.modes.size()));
      }
      out = predict(model.modes[static_cast<std::size_t>(*args.mode - 1)].model);
    } else {
      out = regress(model, rng);
    }
  } else if (schema == "midigap/skill_chain") {
    const SkillChain chain = parse_skill_chain(text);
    rate = chain.skills.front().modes.front().model.sample_rate_hz();
    ModalPath path;
    if (args.path) {
      for (int m : *args.path) path.modes.push_back(m - 1);
      path.probability = modal_path_probability(chain, path.modes);
    } else {
      path = sample_modal_path(chain, rng);
    }
    out = regress_chain(chain, path);
  } else if (schema == "midigap/framed") {
    if (!args.frames_from) fail(ErrorCode::kInvalidArgument, "framed models need --frames-from to fix frame poses");
    const FramedDiGaP model = parse_framed(text);
    const Dataset data = load_dataset(*args.frames_from);
    if (data.frames.empty() || args.demo < 0 || args.demo >= static_cast<int>(data.frames.size())) {
      fail(ErrorCode::kInvalidArgument, "--frames-from dataset lacks frame poses for the requested demo");
    }
    const DiGaP world = to_world(model, data.frames[static_cast<std::size_t>(args.demo)]);
    rate = world.sample_rate_hz();
    out = predict(world);
  } else {
    fail(ErrorCode::kIo, "cannot predict from a " + schema + " file");
  }
  out.set_demo_id("prediction");
  write_text_atomic(args.out, serialize_dataset(single_trajectory(out, rate)));
  rec.inputs = Json{{"model", args.model.string()}};
  rec.seeds["predict"] = args.seed;
  rec.outputs = {args.out.string()};
  rec.timings["predict"] = clock.seconds();
  rec.summary = "predicted " + std::to_string(out.length()) + " steps";
  return rec;
}

RunRecord run_update(const UpdateArgs& args) {
  Stopwatch clock;
  RunRecord rec;
  rec.command = "update";
  const std::string text = read_text(args.model);
  const std::vector<Constraint> constraints = parse_constraints(read_text(args.constraints));
  UpdateOptions options;
  options.z = args.z;
  options.q = args.q;
  options.n_samples = args.samples;
  options.d_uni = args.d_uni;
  Json report = Json::array();
  const std::string schema = schema_of(text);
  if (schema == "midigap/mixture") {
    MiDiGaP model = parse_mixture(text);
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      options.seed = derive_seed(args.seed, c);
      UpdateResult r = apply_constraint(model, constraints[c], options);
      report.push_back(Json{{"constraint", constraints[c].name()}, {"modes", report_json(r.report)}});
      model = std::move(r.model);
    }
    write_text_atomic(args.out, serialize_mixture(model));
  } else if (schema == "midigap/skill_chain") {
    SkillChain chain = parse_skill_chain(text);
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      options.seed = derive_seed(args.seed, c);
      ChainUpdateResult r = update_chain(chain, constraints[c], options);
      Json skills = Json::array();
      for (const auto& s : r.reports) skills.push_back(report_json(s));
      report.push_back(Json{{"constraint", constraints[c].name()}, {"skills", skills}});
      chain = std::move(r.chain);
    }
    write_text_atomic(args.out, serialize_skill_chain(chain));
  } else {
    fail(ErrorCode::kIo, "cannot update a " + schema + " file");
  }
  write_json(args.report, report);
  rec.inputs = Json{{"model", args.model.string()},
                    {"constraints", args.constraints.string()},
                    {"samples", args.samples},
                    {"z", args.z},
                    {"q", args.q}};
  rec.seeds["update"] = args.seed;
  rec.outputs = {args.out.string(), args.report.string()};
  rec.timings["update"] = clock.seconds();
  rec.summary = "applied " + std::to_string(constraints.size()) + " constraints";
  return rec;
}

RunRecord run_optimize(const OptimizeArgs& args) {
  Stopwatch clock;
  RunRecord rec;
  rec.command = "optimize";
  const KinematicChain chain = load_kinematic_chain(args.chain);
  const Eigen::VectorXd q0 = q0_of(chain, args.q0);
  const std::string text = read_text(args.model);
  const std::string schema = schema_of(text);
  ensure_dir(args.out_dir);
  Json report = Json::object();
  report["chain"] = chain.name();
  report["q0"] = vec_json(q0);
  Json timings = Json::array();
  if (schema == "midigap/mixture") {
    const MiDiGaP model = parse_mixture(text);
    const ModalOptimization r = modal_update_from_optimization(chain, model, q0, args.path, args.q_norm);
    Json modes = Json::array();
    for (std::size_t m = 0; m < r.paths.size(); ++m) {
      const PathResult& p = r.paths[m];
      Json entry{{"mode", m + 1},
                 {"prior_before", r.report[m].prior_before},
                 {"prior_after", r.report[m].prior_after},
                 {"feasible", p.feasible}};
      if (!p.joints.empty()) {
        const DiGaP target = pose_block(model.modes[m].model);
        const double nll = trajectory_nll(target, p.ee_path);
        entry["max_violation"] = p.max_violation;
        entry["objective"] = p.objective;
        entry["nll"] = nll;
        const fs::path file = args.out_dir / ("joint_path_mode_" + std::to_string(m + 1) + ".jsonl");
        write_text_atomic(file, serialize_joint_path(chain, p, nll));
        rec.outputs.push_back(file.string());
        timings.push_back(p.seconds);
      }
      modes.push_back(entry);
    }
    report["modes"] = modes;
    const fs::path posterior = args.out_dir / "posterior.jsonl";
    write_text_atomic(posterior, serialize_mixture(r.model));
    rec.outputs.push_back(posterior.string());
  } else if (schema == "midigap/skill_chain") {
    const SkillChain skills = parse_skill_chain(text);
    const ChainOptimization r = modal_update_from_optimization(chain, skills, q0, args.path, args.q_norm);
    Json paths = Json::array();
    for (std::size_t k = 0; k < r.paths.size(); ++k) {
      Json modes = Json::array();
      for (int m : r.paths[k].modes) modes.push_back(m + 1);
      double violation = 0.0;
      for (const PathResult& p : r.solutions[k]) {
        violation = std::max(violation, p.max_violation);
        timings.push_back(p.seconds);
      }
      paths.push_back(Json{{"modes", modes},
                           {"probability", r.paths[k].probability},
                           {"evidence", r.path_evidence[k]},
                           {"max_violation", violation}});
    }
    report["paths"] = paths;
    const fs::path posterior = args.out_dir / "posterior.jsonl";
    write_text_atomic(posterior, serialize_skill_chain(r.chain));
    rec.outputs.push_back(posterior.string());
  } else {
    fail(ErrorCode::kIo, "cannot optimize against a " + schema + " file");
  }
  const fs::path report_path = args.out_dir / "optimize_report.json";
  write_json(report_path, report);
  rec.outputs.push_back(report_path.string());
  rec.inputs = Json{{"model", args.model.string()},
                    {"chain", args.chain},
                    {"lambda_q", args.path.lambda_q},
                    {"lambda_e", args.path.lambda_e},
                    {"z", args.path.z},
                    {"max_outer", args.path.max_outer}};
  rec.timings["optimize"] = clock.seconds();
  rec.timings["per_path"] = timings;
  rec.summary = report.dump();
  return rec;
}

RunRecord run_eval(const EvalArgs& args) {
  Stopwatch clock;
  RunRecord rec;
  rec.command = "eval";
  const Dataset predicted = load_dataset(args.predicted);
  const Dataset reference = load_dataset(args.reference);
  const MetricsReport m = evaluate(predicted.demos.front(), reference.demos.front(), reference.sample_rate_hz);
  Json out = Json::object();
  out["rmse"] = *m.rmse;
  out["resampled"] = m.resampled;
  if (m.total_acceleration) {
    out["total_acceleration"] = *m.total_acceleration;
    out["reference_acceleration"] = *m.reference_acceleration;
  }
  if (args.model) {
    const MiDiGaP model = parse_mixture(read_text(*args.model));
    if (args.mode < 1 || args.mode > static_cast<int>(model.modes.size())) {
      fail(ErrorCode::kInvalidArgument, "mode must lie in 1.." + std::to_string(model.modes.size()));
    }
    out["nll"] = trajectory_nll(model.modes[static_cast<std::size_t>(args.mode - 1)].model, predicted.demos.front());
  }
  if (args.partition && args.labels_from) {
    const Partition p = parse_partition(read_text(*args.partition));
    const Dataset labelled = load_dataset(*args.labels_from);
    out["ari"] = adjusted_rand_index(p.labels, labelled.labels);
  }
  write_json(args.out, out);
  rec.inputs = Json{{"predicted", args.predicted.string()}, {"reference", args.reference.string()}};
  rec.outputs = {args.out.string()};
  rec.timings["eval"] = clock.seconds();
  rec.summary = out.dump();
  return rec;
}

RunRecord run_pipeline(const PipelineArgs& args) {
  Stopwatch total;
  RunRecord rec;
  rec.command = "pipeline";
  Json config;
  try {
    config = Json::parse(read_text(args.config));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kIo, std::string("malformed config: ") + e.what());
  }
  const std::uint64_t root = config.value("seed", std::uint64_t{0});
  rec.inputs = Json{{"config", args.config.string()}, {"config_contents", config}};
  rec.seeds["root"] = root;
  ensure_dir(args.out_dir);
  auto out = [&](const std::string& name) {
    rec.outputs.push_back((args.out_dir / name).string());
    return args.out_dir / name;
  };

  Stopwatch stage;
  const SynthSpec spec = synth_spec_from(config.value("synth", Json::object()), derive_seed(root, 1));
  rec.seeds["synth"] = spec.seed;
  const Dataset data = generate(spec);
  Dataset truth = data;
  truth.demos = data.truth;
  write_text_atomic(out("dataset.jsonl"), serialize_dataset(data));
  write_text_atomic(out("truth.jsonl"), serialize_dataset(truth));
  rec.timings["synth"] = stage.seconds();

  stage = Stopwatch();
  const Json pc = config.value("partition", Json::object());
  const std::uint64_t partition_seed = derive_seed(root, 2);
  rec.seeds["partition"] = partition_seed;
  const Partition partition =
      partition_demos(data.demos, method_of(pc.value("method", "kmeans")),
                      pc.value("subsample_length", kDefaultSubsampleLength), pc.value("k_max", 0),
                      pc.value("eps", kDefaultDbscanEps), pc.value("min_pts", kDefaultDbscanMinPts), partition_seed);
  write_text_atomic(out("partition.jsonl"), serialize_partition(partition, data.demos));
  rec.timings["partition"] = stage.seconds();

  stage = Stopwatch();
  const Json fc = config.value("fit", Json::object());
  FitOptions fit_options;
  fit_options.var_floor = fc.value("var_floor", fit_options.var_floor);
  fit_options.sample_rate_hz = data.sample_rate_hz;
  MiDiGaP model = fit_mixture(data.demos, partition, fit_options);
  write_text_atomic(out("model.jsonl"), serialize_mixture(model));
  rec.timings["fit"] = stage.seconds();

  Json metrics = Json::object();
  metrics["modes_found"] = partition.parts;
  if (!data.labels.empty()) metrics["ari"] = adjusted_rand_index(partition.labels, data.labels);
  Json per_mode = Json::array();
  const auto members = partition.members();
  for (std::size_t m = 0; m < model.modes.size(); ++m) {
    const Trajectory mean = predict(model.modes[m].model);
    const Trajectory& reference = data.truth[static_cast<std::size_t>(members[m].front())];
    const MetricsReport r = evaluate(mean, reference, data.sample_rate_hz);
    Json entry{{"mode", m + 1}, {"prior", model.modes[m].prior}, {"rmse_to_truth", *r.rmse}};
    if (r.total_acceleration) {
      entry["total_acceleration"] = *r.total_acceleration;
      entry["reference_acceleration"] = *r.reference_acceleration;
    }
    per_mode.push_back(entry);
  }
  metrics["per_mode"] = per_mode;

  if (config.contains("update")) {
    stage = Stopwatch();
    const Json uc = config["update"];
    UpdateOptions options;
    options.n_samples = uc.value("samples", options.n_samples);
    options.z = uc.value("z", options.z);
    options.q = uc.value("q", options.q);
    const std::vector<Constraint> constraints = constraints_from(uc.value("constraints", Json::array()));
    Json report = Json::array();
    for (std::size_t c = 0; c < constraints.size(); ++c) {
      options.seed = derive_seed(root, 3 + c);
      rec.seeds["update_" + std::to_string(c)] = options.seed;
      UpdateResult r = apply_constraint(model, constraints[c], options);
      report.push_back(Json{{"constraint", constraints[c].name()}, {"modes", report_json(r.report)}});
      model = std::move(r.model);
    }
    write_text_atomic(out("posterior.jsonl"), serialize_mixture(model));
    write_json(out("update_report.json"), report);
    metrics["update"] = report;
    rec.timings["update"] = stage.seconds();
  }

  if (config.contains("optimize")) {
    stage = Stopwatch();
    const Json oc = config["optimize"];
    const KinematicChain chain = load_kinematic_chain(oc.value("chain", "ur5"));
    std::optional<std::vector<double>> q0;
    if (oc.contains("q0")) q0 = oc["q0"].get<std::vector<double>>();
    PathOptions options;
    options.lambda_q = oc.value("lambda_q", options.lambda_q);
    options.z = oc.value("z", options.z);
    const ModalOptimization r =
        modal_update_from_optimization(chain, model, q0_of(chain, q0), options, oc.value("q", 1.0));
    Json modes = Json::array();
    for (std::size_t m = 0; m < r.paths.size(); ++m) {
      const PathResult& p = r.paths[m];
      Json entry{{"mode", m + 1}, {"prior_after", r.report[m].prior_after}, {"feasible", p.feasible}};
      if (!p.joints.empty()) {
        const double nll = trajectory_nll(pose_block(model.modes[m].model), p.ee_path);
        entry["max_violation"] = p.max_violation;
        entry["nll"] = nll;
        write_text_atomic(out("joint_path_mode_" + std::to_string(m + 1) + ".jsonl"),
                          serialize_joint_path(chain, p, nll));
      }
      modes.push_back(entry);
    }
    model = r.model;
    write_text_atomic(out("optimized.jsonl"), serialize_mixture(model));
    metrics["optimize"] = Json{{"chain", chain.name()}, {"modes", modes}};
    rec.timings["optimize"] = stage.seconds();
  }

  write_json(out("metrics.json"), metrics);
  rec.timings["total"] = total.seconds();
  std::ostringstream summary;
  summary << "modes " << partition.parts;
  if (metrics.contains("ari")) summary << ", ARI " << metrics["ari"].get<double>();
  rec.summary = summary.str();
  return rec;
}

}  // namespace midigap::cli
