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

#include "midigap/io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "midigap/error.hpp"

namespace midigap {

namespace {

using Json = nlohmann::ordered_json;

Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json to_json(const RigidTransform& t) {
  Eigen::Quaterniond r = t.rotation.normalized();
  if (r.w() < 0.0) r.coeffs() = -r.coeffs();
  return Json{{"position", to_json(Eigen::VectorXd(t.translation))}, {"quaternion", to_json(quaternion_to_wxyz(r))}};
}

[[noreturn]] void malformed(const std::string& what) { fail(ErrorCode::kIo, "malformed file: " + what); }

const Json& field(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) malformed(std::string("missing field '") + key + "'");
  return *it;
}

Eigen::VectorXd vector_of(const Json& j) {
  if (!j.is_array()) malformed("expected a numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) malformed("expected a numeric array");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::VectorXd vector_of(const Json& j, Eigen::Index size, const char* what) {
  Eigen::VectorXd v = vector_of(j);
  if (v.size() != size) malformed(std::string(what) + " needs " + std::to_string(size) + " entries");
  return v;
}

RigidTransform transform_of(const Json& j) {
  RigidTransform t;
  t.translation = vector_of(field(j, "position"), 3, "position");
  t.rotation = quaternion_from_wxyz(vector_of(field(j, "quaternion"), 4, "quaternion")).normalized();
  return t;
}

double number(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) malformed(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

int integer(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer()) malformed(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

std::string text_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) malformed(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::string lines(const Json& header, const std::vector<Json>& records) {
  std::string out = header.dump() + "\n";
  for (const Json& r : records) out += r.dump() + "\n";
  return out;
}

Json header(const std::string& schema) { return Json{{"schema", schema}, {"version", kSchemaVersion}}; }

struct Document {
  Json header;
  std::vector<Json> records;
};

Document parse_document(const std::string& text, const std::string& schema) {
  Document doc;
  std::istringstream in(text);
  std::string line;
  std::size_t number_of_line = 0;
  while (std::getline(in, line)) {
    ++number_of_line;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      malformed("line " + std::to_string(number_of_line) + ": " + e.what());
    }
    if (!j.is_object()) malformed("line " + std::to_string(number_of_line) + " is not an object");
    if (doc.header.is_null()) {
      doc.header = std::move(j);
    } else {
      doc.records.push_back(std::move(j));
    }
  }
  if (doc.header.is_null()) malformed("empty file");
  const std::string found = text_field(doc.header, "schema");
  if (found != schema) fail(ErrorCode::kIo, "expected a " + schema + " file, found " + found);
  if (integer(doc.header, "version") != kSchemaVersion) {
    fail(ErrorCode::kIo, "unsupported " + schema + " version " + std::to_string(integer(doc.header, "version")));
  }
  return doc;
}

Json digap_header_fields(Json j, const DiGaP& model) {
  j["manifold"] = model.spec().to_string();
  j["sample_rate_hz"] = model.sample_rate_hz();
  j["length"] = model.length();
  return j;
}

Json step_record(Json key, std::size_t t, const GaussianStep& step) {
  key["t"] = t;
  key["mean"] = to_json(step.mean);
  key["var"] = to_json(step.var);
  return key;
}

// Collects steps keyed by t and checks that 0..T-1 appear exactly once.
class StepCollector {
 public:
  void add(const Json& record, const ManifoldSpec& spec) {
    const int t = integer(record, "t");
    if (t < 0) malformed("negative step index");
    GaussianStep s{vector_of(field(record, "mean"), spec.ambient_dim(), "mean"),
                   vector_of(field(record, "var"), spec.tangent_dim(), "var")};
    if (!steps_.emplace(t, std::move(s)).second) malformed("duplicate step " + std::to_string(t));
  }

  DiGaP build(const ManifoldSpec& spec, double rate, std::size_t expected) const {
    if (steps_.size() != expected) malformed("expected " + std::to_string(expected) + " steps");
    std::vector<GaussianStep> out;
    for (const auto& [t, s] : steps_) {
      if (t != static_cast<int>(out.size())) malformed("step indices are not contiguous");
      out.push_back(s);
    }
    for (GaussianStep& s : out) spec.canonicalize(s.mean);
    return DiGaP(spec, std::move(out), rate);
  }

 private:
  std::map<int, GaussianStep> steps_;
};

MiDiGaP mixture_from(const Json& head, const std::vector<const Json*>& records) {
  const ManifoldSpec spec = ManifoldSpec::parse(text_field(head, "manifold"));
  const double rate = number(head, "sample_rate_hz");
  const int modes = integer(head, "modes");
  const int length = integer(head, "length");
  if (modes < 1 || length < 1) malformed("mixture needs at least one mode and one step");
  std::vector<double> priors(static_cast<std::size_t>(modes), -1.0);
  std::vector<StepCollector> steps(static_cast<std::size_t>(modes));
  for (const Json* r : records) {
    const int m = integer(*r, "mode");
    if (m < 0 || m >= modes) malformed("mode index out of range");
    if (r->contains("prior")) {
      priors[static_cast<std::size_t>(m)] = number(*r, "prior");
    } else {
      steps[static_cast<std::size_t>(m)].add(*r, spec);
    }
  }
  MiDiGaP model;
  model.provenance = head.contains("provenance") ? text_field(head, "provenance") : "";
  for (int m = 0; m < modes; ++m) {
    const auto k = static_cast<std::size_t>(m);
    if (priors[k] < 0.0) malformed("mode " + std::to_string(m) + " lacks a prior");
    model.modes.push_back({priors[k], steps[k].build(spec, rate, static_cast<std::size_t>(length))});
  }
  validate(model);
  return model;
}

std::vector<Json> mixture_records(const MiDiGaP& model, const Json& prefix) {
  std::vector<Json> out;
  for (std::size_t m = 0; m < model.modes.size(); ++m) {
    Json key = prefix;
    key["mode"] = m;
    Json prior = key;
    prior["prior"] = model.modes[m].prior;
    out.push_back(prior);
    const DiGaP& d = model.modes[m].model;
    for (std::size_t t = 0; t < d.length(); ++t) out.push_back(step_record(key, t, d.step(t)));
  }
  return out;
}

Json mixture_header_fields(Json j, const MiDiGaP& model) {
  j = digap_header_fields(std::move(j), model.modes.front().model);
  j["modes"] = model.modes.size();
  j["provenance"] = model.provenance;
  return j;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(Eigen::VectorXd(m.row(r).transpose())));
  return rows;
}

Eigen::MatrixXd matrix_of(const Json& j) {
  if (!j.is_array() || j.empty()) malformed("expected a non-empty matrix");
  const Eigen::VectorXd first = vector_of(j[0]);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), first.size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    m.row(static_cast<Eigen::Index>(r)) = vector_of(j[r], first.size(), "matrix row").transpose();
  }
  return m;
}

}  // namespace

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) fail(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kIo, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string schema_of(const std::string& text) {
  const std::string first = text.substr(0, text.find('\n'));
  try {
    return text_field(Json::parse(first), "schema");
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("header: ") + e.what());
  }
}

std::string serialize_dataset(const Dataset& data) {
  if (data.demos.empty()) fail(ErrorCode::kInvalidArgument, "cannot write an empty dataset");
  Json head = header("midigap/dataset");
  head["manifold"] = data.spec.to_string();
  head["sample_rate_hz"] = data.sample_rate_hz;
  head["demos"] = data.demos.size();
  const bool pose = data.spec.starts_with_pose();
  std::vector<Json> records;
  for (std::size_t i = 0; i < data.demos.size(); ++i) {
    const Trajectory& demo = data.demos[i];
    if (!(demo.spec() == data.spec)) fail(ErrorCode::kSpecMismatch, "demo manifold differs from the dataset's");
    for (std::size_t t = 0; t < demo.length(); ++t) {
      Json r{{"demo_id", demo.demo_id()}, {"t", t}};
      const Eigen::VectorXd& x = demo[t];
      if (pose) {
        r["position"] = to_json(Eigen::VectorXd(x.head<3>()));
        r["quaternion"] = to_json(Eigen::VectorXd(x.segment<4>(3)));
        r["aux"] = to_json(Eigen::VectorXd(x.tail(x.size() - 7)));
      } else {
        r["coords"] = to_json(x);
      }
      if (t == 0 && !data.frames.empty()) {
        Json frames = Json::object();
        for (const auto& [name, pose_of_frame] : data.frames.at(i)) frames[name] = to_json(pose_of_frame);
        r["frame_poses"] = frames;
      }
      if (t == 0 && !data.labels.empty()) r["label"] = data.labels.at(i) + 1;
      if (!data.joints.empty()) r["joints"] = to_json(data.joints.at(i).at(t));
      records.push_back(std::move(r));
    }
  }
  return lines(head, records);
}

Dataset parse_dataset(const std::string& text) {
  const Document doc = parse_document(text, "midigap/dataset");
  Dataset data;
  data.spec = ManifoldSpec::parse(text_field(doc.header, "manifold"));
  data.sample_rate_hz = number(doc.header, "sample_rate_hz");
  const bool pose = data.spec.starts_with_pose();
  struct Pending {
    std::map<int, Eigen::VectorXd> points;
    std::map<int, Eigen::VectorXd> joints;
    std::optional<int> label;
    std::optional<FramePoses> frames;
  };
  std::vector<std::string> order;
  std::map<std::string, Pending> demos;
  for (const Json& r : doc.records) {
    const std::string id = text_field(r, "demo_id");
    const int t = integer(r, "t");
    if (t < 0) malformed("negative step index");
    auto [it, inserted] = demos.try_emplace(id);
    if (inserted) order.push_back(id);
    Eigen::VectorXd x;
    if (pose) {
      const Eigen::VectorXd aux = r.contains("aux") ? vector_of(r["aux"]) : Eigen::VectorXd();
      x.resize(7 + aux.size());
      x.head<3>() = vector_of(field(r, "position"), 3, "position");
      x.segment<4>(3) = vector_of(field(r, "quaternion"), 4, "quaternion");
      x.tail(aux.size()) = aux;
    } else {
      x = vector_of(field(r, "coords"));
    }
    if (x.size() != data.spec.ambient_dim()) malformed("record width does not match " + data.spec.to_string());
    if (!it->second.points.emplace(t, std::move(x)).second) malformed("duplicate step for demo " + id);
    if (r.contains("joints")) it->second.joints[t] = vector_of(r["joints"]);
    if (r.contains("label")) it->second.label = integer(r, "label") - 1;
    if (r.contains("frame_poses") && !it->second.frames) {
      FramePoses poses;
      for (const auto& [name, value] : r["frame_poses"].items()) poses[name] = transform_of(value);
      it->second.frames = std::move(poses);
    }
  }
  for (const std::string& id : order) {
    Pending& p = demos[id];
    std::vector<Eigen::VectorXd> points;
    for (auto& [t, x] : p.points) {
      if (t != static_cast<int>(points.size())) malformed("demo " + id + " has non-contiguous steps");
      points.push_back(std::move(x));
    }
    data.demos.emplace_back(data.spec, std::move(points), id);
    if (p.label) data.labels.push_back(*p.label);
    if (p.frames) data.frames.push_back(std::move(*p.frames));
    if (!p.joints.empty()) {
      JointTrajectory joints;
      for (auto& [t, q] : p.joints) joints.push_back(std::move(q));
      if (joints.size() != data.demos.back().length()) malformed("demo " + id + " has partial joint records");
      data.joints.push_back(std::move(joints));
    }
  }
  const std::size_t n = data.demos.size();
  if (n == 0) malformed("dataset without demos");
  if ((!data.labels.empty() && data.labels.size() != n) || (!data.frames.empty() && data.frames.size() != n) ||
      (!data.joints.empty() && data.joints.size() != n)) {
    malformed("labels, frame poses and joints must be given for all demos or none");
  }
  return data;
}

std::string serialize_mixture(const MiDiGaP& model) {
  validate(model);
  return lines(mixture_header_fields(header("midigap/mixture"), model), mixture_records(model, Json::object()));
}

MiDiGaP parse_mixture(const std::string& text) {
  const Document doc = parse_document(text, "midigap/mixture");
  std::vector<const Json*> records;
  for (const Json& r : doc.records) records.push_back(&r);
  return mixture_from(doc.header, records);
}

std::string serialize_skill_chain(const SkillChain& chain) {
  Json head = header("midigap/skill_chain");
  head["skills"] = chain.skills.size();
  head["provenance"] = chain.provenance;
  std::vector<Json> records;
  for (std::size_t j = 0; j < chain.skills.size(); ++j) {
    records.push_back(mixture_header_fields(Json{{"skill", j}}, chain.skills[j]));
    for (Json& r : mixture_records(chain.skills[j], Json{{"skill", j}})) records.push_back(std::move(r));
  }
  records.push_back(Json{{"initial", to_json(chain.transitions.initial)}});
  for (std::size_t j = 0; j < chain.transitions.matrices.size(); ++j) {
    records.push_back(Json{{"transition", j}, {"matrix", matrix_json(chain.transitions.matrices[j])}});
  }
  return lines(head, records);
}

SkillChain parse_skill_chain(const std::string& text) {
  const Document doc = parse_document(text, "midigap/skill_chain");
  const int skills = integer(doc.header, "skills");
  if (skills < 1) malformed("chain without skills");
  std::vector<const Json*> heads(static_cast<std::size_t>(skills), nullptr);
  std::vector<std::vector<const Json*>> bodies(static_cast<std::size_t>(skills));
  Transitions transitions;
  std::map<int, Eigen::MatrixXd> matrices;
  bool have_initial = false;
  for (const Json& r : doc.records) {
    if (r.contains("initial")) {
      transitions.initial = vector_of(r["initial"]);
      have_initial = true;
    } else if (r.contains("transition")) {
      matrices[integer(r, "transition")] = matrix_of(field(r, "matrix"));
    } else {
      const int j = integer(r, "skill");
      if (j < 0 || j >= skills) malformed("skill index out of range");
      if (r.contains("mode")) {
        bodies[static_cast<std::size_t>(j)].push_back(&r);
      } else {
        heads[static_cast<std::size_t>(j)] = &r;
      }
    }
  }
  if (!have_initial) malformed("chain lacks initial probabilities");
  std::vector<MiDiGaP> parsed;
  for (std::size_t j = 0; j < heads.size(); ++j) {
    if (!heads[j]) malformed("skill " + std::to_string(j) + " lacks its header record");
    parsed.push_back(mixture_from(*heads[j], bodies[j]));
  }
  for (const auto& [j, m] : matrices) {
    if (j != static_cast<int>(transitions.matrices.size())) malformed("transition indices are not contiguous");
    transitions.matrices.push_back(m);
  }
  SkillChain chain = make_chain(std::move(parsed), std::move(transitions));
  chain.provenance = doc.header.contains("provenance") ? text_field(doc.header, "provenance") : "";
  return chain;
}

std::string serialize_framed(const FramedDiGaP& model) {
  if (model.frames.empty()) fail(ErrorCode::kInvalidArgument, "framed model without frames");
  Json head = digap_header_fields(header("midigap/framed"), model.frames.begin()->second);
  Json names = Json::array();
  for (const auto& [name, d] : model.frames) names.push_back(name);
  head["frames"] = names;
  std::vector<Json> records;
  for (const auto& [name, window] : model.windows) {
    records.push_back(Json{{"frame", name}, {"window", Json::array({window.first, window.last})}});
  }
  for (const auto& [name, d] : model.frames) {
    for (std::size_t t = 0; t < d.length(); ++t) records.push_back(step_record(Json{{"frame", name}}, t, d.step(t)));
  }
  return lines(head, records);
}

FramedDiGaP parse_framed(const std::string& text) {
  const Document doc = parse_document(text, "midigap/framed");
  const ManifoldSpec spec = ManifoldSpec::parse(text_field(doc.header, "manifold"));
  const double rate = number(doc.header, "sample_rate_hz");
  const int length = integer(doc.header, "length");
  std::map<std::string, StepCollector> steps;
  for (const Json& name : field(doc.header, "frames")) steps[name.get<std::string>()];
  FramedDiGaP model;
  for (const Json& r : doc.records) {
    const std::string name = text_field(r, "frame");
    if (!steps.contains(name)) malformed("record for undeclared frame " + name);
    if (r.contains("window")) {
      const Json& w = r["window"];
      if (!w.is_array() || w.size() != 2) malformed("window needs [first, last]");
      model.windows[name] = {w[0].get<int>(), w[1].get<int>()};
    } else {
      steps[name].add(r, spec);
    }
  }
  for (const auto& [name, collector] : steps) {
    model.frames.emplace(name, collector.build(spec, rate, static_cast<std::size_t>(length)));
  }
  return model;
}

std::string serialize_partition(const Partition& partition, std::span<const Trajectory> demos) {
  if (demos.size() != partition.labels.size()) {
    fail(ErrorCode::kInvalidArgument, "partition and demo count differ");
  }
  Json head = header("midigap/partition");
  head["method"] = to_string(partition.method);
  head["modes"] = partition.parts;
  head["subsample_length"] = partition.subsample_length;
  head["distance_evaluations"] = partition.distance_evaluations;
  Json bic = Json::array();
  for (const BicEntry& e : partition.bic_table) {
    Json row{{"k", e.k}, {"valid", e.valid}};
    if (e.valid) {
      row["log_likelihood"] = e.log_likelihood;
      row["bic"] = e.bic;
    }
    bic.push_back(row);
  }
  head["bic"] = bic;
  std::vector<Json> records;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    records.push_back(Json{{"demo_id", demos[i].demo_id()}, {"mode", partition.labels[i] + 1}});
  }
  return lines(head, records);
}

Partition parse_partition(const std::string& text, std::vector<std::string>* demo_ids) {
  const Document doc = parse_document(text, "midigap/partition");
  std::vector<int> labels;
  for (const Json& r : doc.records) {
    labels.push_back(integer(r, "mode") - 1);
    if (demo_ids) demo_ids->push_back(text_field(r, "demo_id"));
  }
  Partition p = make_partition(std::move(labels), parse_cluster_method(text_field(doc.header, "method")),
                               integer(doc.header, "subsample_length"));
  if (doc.header.contains("distance_evaluations")) {
    p.distance_evaluations = doc.header["distance_evaluations"].get<std::size_t>();
  }
  if (doc.header.contains("bic")) {
    for (const Json& row : doc.header["bic"]) {
      BicEntry e;
      e.k = integer(row, "k");
      e.valid = row.value("valid", false);
      if (e.valid) {
        e.log_likelihood = number(row, "log_likelihood");
        e.bic = number(row, "bic");
      }
      p.bic_table.push_back(e);
    }
  }
  return p;
}

std::string serialize_constraints(std::span<const Constraint> constraints) {
  std::vector<Json> records;
  for (const Constraint& c : constraints) {
    Json r{{"type", c.name()}};
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, ReachSphere>) {
            r["center"] = to_json(k.center);
            r["radius"] = k.radius;
          } else if constexpr (std::is_same_v<K, HalfSpace>) {
            r["point"] = to_json(k.point);
            r["normal"] = to_json(k.normal);
            r["d_safe"] = k.d_safe;
          } else if constexpr (std::is_same_v<K, HalfSpaceSet>) {
            Json planes = Json::array();
            for (const HalfSpace& h : k.planes) planes.push_back(Json{{"point", to_json(h.point)}, {"normal", to_json(h.normal)}});
            r["planes"] = planes;
            r["d_safe"] = k.d_safe;
            if (k.d_uni) r["d_uni"] = *k.d_uni;
          } else if constexpr (std::is_same_v<K, SelfCollision>) {
            r["base"] = to_json(k.base);
            r["d_min"] = k.d_min;
          } else if constexpr (std::is_same_v<K, OccupancyGrid>) {
            r["dims"] = Json::array({k.dims[0], k.dims[1], k.dims[2]});
            r["origin"] = to_json(Eigen::VectorXd(k.origin));
            r["cell_size"] = k.cell_size;
            r["threshold"] = k.threshold;
            r["values"] = k.values;
          } else {
            fail(ErrorCode::kInvalidArgument, "custom region '" + k.name + "' cannot be written to a file");
          }
        },
        c.kind());
    records.push_back(std::move(r));
  }
  return lines(header("midigap/constraints"), records);
}

std::vector<Constraint> parse_constraints(const std::string& text) {
  const Document doc = parse_document(text, "midigap/constraints");
  std::vector<Constraint> out;
  for (const Json& r : doc.records) {
    const std::string type = text_field(r, "type");
    if (type == "reach") {
      out.emplace_back(ReachSphere{vector_of(field(r, "center")), number(r, "radius")});
    } else if (type == "half_space") {
      out.emplace_back(HalfSpace{vector_of(field(r, "point")), vector_of(field(r, "normal")), number(r, "d_safe")});
    } else if (type == "half_space_set") {
      HalfSpaceSet set;
      for (const Json& p : field(r, "planes")) {
        set.planes.push_back({vector_of(field(p, "point")), vector_of(field(p, "normal")), 0.0});
      }
      set.d_safe = number(r, "d_safe");
      if (r.contains("d_uni")) set.d_uni = number(r, "d_uni");
      out.emplace_back(std::move(set));
    } else if (type == "self_collision") {
      out.emplace_back(SelfCollision{vector_of(field(r, "base")), number(r, "d_min")});
    } else if (type == "occupancy") {
      OccupancyGrid grid;
      const Json& dims = field(r, "dims");
      if (!dims.is_array() || dims.size() != 3) malformed("occupancy dims need three entries");
      for (int k = 0; k < 3; ++k) grid.dims[static_cast<std::size_t>(k)] = dims[static_cast<std::size_t>(k)].get<int>();
      grid.origin = vector_of(field(r, "origin"), 3, "origin");
      grid.cell_size = number(r, "cell_size");
      grid.threshold = number(r, "threshold");
      grid.values = field(r, "values").get<std::vector<double>>();
      out.emplace_back(std::move(grid));
    } else {
      malformed("unknown constraint type '" + type + "'");
    }
  }
  return out;
}

std::string serialize_kinematic_chain(const KinematicChain& chain) {
  Json head = header("midigap/kinematic_chain");
  head["name"] = chain.name();
  head["ee_offset"] = to_json(chain.ee_offset());
  std::vector<Json> records;
  for (const Joint& j : chain.joints()) {
    records.push_back(Json{{"joint", j.name},
                           {"type", "revolute"},
                           {"axis", to_json(Eigen::VectorXd(j.axis))},
                           {"origin", to_json(j.origin)},
                           {"lower", j.lower},
                           {"upper", j.upper}});
  }
  return lines(head, records);
}

KinematicChain parse_kinematic_chain(const std::string& text) {
  const Document doc = parse_document(text, "midigap/kinematic_chain");
  std::vector<Joint> joints;
  for (const Json& r : doc.records) {
    if (r.value("type", "revolute") != "revolute") malformed("only revolute joints are supported");
    Joint j;
    j.name = text_field(r, "joint");
    j.axis = vector_of(field(r, "axis"), 3, "axis");
    j.origin = transform_of(field(r, "origin"));
    j.lower = number(r, "lower");
    j.upper = number(r, "upper");
    joints.push_back(std::move(j));
  }
  return KinematicChain(text_field(doc.header, "name"), std::move(joints), transform_of(field(doc.header, "ee_offset")));
}

std::string serialize_joint_path(const KinematicChain& chain, const PathResult& path, double nll) {
  Json head = header("midigap/joint_trajectory");
  head["chain"] = chain.name();
  head["feasible"] = path.feasible;
  head["max_violation"] = path.max_violation;
  head["objective"] = path.objective;
  head["nll"] = nll;
  head["outer_iterations"] = path.outer_iterations;
  std::vector<Json> records;
  for (std::size_t t = 0; t < path.joints.size(); ++t) {
    const Eigen::VectorXd& x = path.ee_path[t];
    records.push_back(Json{{"t", t},
                           {"q", to_json(path.joints[t])},
                           {"position", to_json(Eigen::VectorXd(x.head<3>()))},
                           {"quaternion", to_json(Eigen::VectorXd(x.segment<4>(3)))}});
  }
  return lines(head, records);
}

}  // namespace midigap
