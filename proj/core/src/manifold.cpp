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

#include "midigap/manifold.hpp"

#include <cmath>
#include <sstream>

#include "midigap/error.hpp"

namespace midigap {

namespace {

// Below this |<q_a, q_b>| the relative rotation is a half turn and the
// rotation-vector log has no unique sign.
constexpr double kHalfTurnDot = 1e-12;
constexpr double kUnitTolerance = 1e-9;

}  // namespace

struct ManifoldSpec::Layout {
  std::vector<Factor> factors;
  std::vector<int> ambient_offsets;
  std::vector<int> tangent_offsets;
  int ambient_dim = 0;
  int tangent_dim = 0;
  bool has_quaternion = false;

  explicit Layout(std::vector<Factor> f) : factors(std::move(f)) {
    for (const Factor& factor : factors) {
      if (factor.kind == FactorKind::kEuclidean && factor.dim <= 0) {
        fail(ErrorCode::kInvalidArgument, "Euclidean factor needs a positive dimension");
      }
      ambient_offsets.push_back(ambient_dim);
      tangent_offsets.push_back(tangent_dim);
      ambient_dim += factor.ambient_dim();
      tangent_dim += factor.tangent_dim();
      has_quaternion = has_quaternion || factor.kind == FactorKind::kQuaternion;
    }
  }
};

ManifoldSpec::ManifoldSpec() : layout_(std::make_shared<const Layout>(std::vector<Factor>{})) {}

ManifoldSpec::ManifoldSpec(std::vector<Factor> factors)
    : layout_(std::make_shared<const Layout>(std::move(factors))) {}

ManifoldSpec ManifoldSpec::euclidean(int dim) { return ManifoldSpec({Factor::euclidean(dim)}); }

ManifoldSpec ManifoldSpec::quaternion() { return ManifoldSpec({Factor::quaternion()}); }

ManifoldSpec ManifoldSpec::pose() {
  return ManifoldSpec({Factor::euclidean(3), Factor::quaternion()});
}

ManifoldSpec ManifoldSpec::parse(std::string_view text) {
  std::vector<Factor> factors;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('x', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view token = text.substr(pos, end - pos);
    if (token == "S3") {
      factors.push_back(Factor::quaternion());
    } else if (token.size() >= 2 && token[0] == 'R') {
      int dim = 0;
      for (char c : token.substr(1)) {
        if (c < '0' || c > '9') fail(ErrorCode::kInvalidArgument, "bad manifold token");
        dim = dim * 10 + (c - '0');
      }
      factors.push_back(Factor::euclidean(dim));
    } else {
      fail(ErrorCode::kInvalidArgument, "bad manifold description '" + std::string(text) + "'");
    }
    pos = end + 1;
  }
  if (factors.empty()) fail(ErrorCode::kInvalidArgument, "empty manifold description");
  return ManifoldSpec(std::move(factors));
}

ManifoldSpec ManifoldSpec::power(int copies) const {
  std::vector<Factor> factors;
  factors.reserve(layout_->factors.size() * static_cast<std::size_t>(copies));
  for (int i = 0; i < copies; ++i) {
    factors.insert(factors.end(), layout_->factors.begin(), layout_->factors.end());
  }
  return ManifoldSpec(std::move(factors));
}

ManifoldSpec ManifoldSpec::concat(const ManifoldSpec& other) const {
  std::vector<Factor> factors = layout_->factors;
  factors.insert(factors.end(), other.layout_->factors.begin(), other.layout_->factors.end());
  return ManifoldSpec(std::move(factors));
}

std::span<const Factor> ManifoldSpec::factors() const { return layout_->factors; }
std::size_t ManifoldSpec::factor_count() const { return layout_->factors.size(); }
int ManifoldSpec::ambient_dim() const { return layout_->ambient_dim; }
int ManifoldSpec::tangent_dim() const { return layout_->tangent_dim; }
int ManifoldSpec::ambient_offset(std::size_t f) const { return layout_->ambient_offsets.at(f); }
int ManifoldSpec::tangent_offset(std::size_t f) const { return layout_->tangent_offsets.at(f); }
bool ManifoldSpec::has_quaternion() const { return layout_->has_quaternion; }

bool ManifoldSpec::starts_with_pose() const {
  const auto& f = layout_->factors;
  return f.size() >= 2 && f[0] == Factor::euclidean(3) && f[1].kind == FactorKind::kQuaternion;
}

std::string ManifoldSpec::to_string() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < layout_->factors.size(); ++i) {
    if (i > 0) out << 'x';
    const Factor& f = layout_->factors[i];
    if (f.kind == FactorKind::kQuaternion) {
      out << "S3";
    } else {
      out << 'R' << f.dim;
    }
  }
  return out.str();
}

bool ManifoldSpec::operator==(const ManifoldSpec& other) const {
  return layout_ == other.layout_ || layout_->factors == other.layout_->factors;
}

Eigen::Quaterniond quaternion_from_wxyz(const Eigen::Ref<const Eigen::VectorXd>& block) {
  return Eigen::Quaterniond(block[0], block[1], block[2], block[3]);
}

Eigen::Vector4d quaternion_to_wxyz(const Eigen::Quaterniond& q) {
  return {q.w(), q.x(), q.y(), q.z()};
}

Eigen::Vector3d quaternion_log(const Eigen::Quaterniond& q_in) {
  Eigen::Quaterniond q = q_in;
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Eigen::Vector3d v = q.vec();
  const double s = v.norm();
  if (s < 1e-12) {
    // angle ~ 2 s, so angle * axis ~ 2 v
    return 2.0 * v / q.w();
  }
  const double angle = 2.0 * std::atan2(s, q.w());
  return (angle / s) * v;
}

Eigen::Quaterniond quaternion_exp(const Eigen::Vector3d& rotation_vector) {
  const double angle = rotation_vector.norm();
  const double half = 0.5 * angle;
  // sin(half) / angle, with its Taylor expansion near zero
  const double k = angle < 1e-8 ? 0.5 - angle * angle / 48.0 : std::sin(half) / angle;
  Eigen::Quaterniond q(std::cos(half), k * rotation_vector.x(), k * rotation_vector.y(),
                       k * rotation_vector.z());
  q.normalize();
  return q;
}

Eigen::VectorXd ManifoldSpec::log(const Eigen::VectorXd& base, const Eigen::VectorXd& p) const {
  Eigen::VectorXd v(layout_->tangent_dim);
  for (std::size_t f = 0; f < layout_->factors.size(); ++f) {
    const Factor& factor = layout_->factors[f];
    const int a = layout_->ambient_offsets[f];
    const int t = layout_->tangent_offsets[f];
    if (factor.kind == FactorKind::kEuclidean) {
      v.segment(t, factor.dim) = p.segment(a, factor.dim) - base.segment(a, factor.dim);
      continue;
    }
    const Eigen::Quaterniond qb = quaternion_from_wxyz(base.segment<4>(a));
    Eigen::Quaterniond qp = quaternion_from_wxyz(p.segment<4>(a));
    const double dot = qb.coeffs().dot(qp.coeffs());
    if (std::abs(dot) < kHalfTurnDot) {
      fail(ErrorCode::kInvalidArgument,
           "log map undefined: quaternions are a half turn apart");
    }
    if (dot < 0.0) qp.coeffs() = -qp.coeffs();
    v.segment<3>(t) = quaternion_log(qb.conjugate() * qp);
  }
  return v;
}

Eigen::VectorXd ManifoldSpec::exp(const Eigen::VectorXd& base, const Eigen::VectorXd& v) const {
  Eigen::VectorXd p(layout_->ambient_dim);
  for (std::size_t f = 0; f < layout_->factors.size(); ++f) {
    const Factor& factor = layout_->factors[f];
    const int a = layout_->ambient_offsets[f];
    const int t = layout_->tangent_offsets[f];
    if (factor.kind == FactorKind::kEuclidean) {
      p.segment(a, factor.dim) = base.segment(a, factor.dim) + v.segment(t, factor.dim);
      continue;
    }
    const Eigen::Quaterniond qb = quaternion_from_wxyz(base.segment<4>(a));
    Eigen::Quaterniond q = qb * quaternion_exp(v.segment<3>(t));
    q.normalize();
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    p.segment<4>(a) = quaternion_to_wxyz(q);
  }
  return p;
}

double ManifoldSpec::distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  return log(a, b).norm();
}

void ManifoldSpec::canonicalize(Eigen::VectorXd& coords) const {
  for (std::size_t f = 0; f < layout_->factors.size(); ++f) {
    if (layout_->factors[f].kind != FactorKind::kQuaternion) continue;
    auto block = coords.segment<4>(layout_->ambient_offsets[f]);
    const double norm = block.norm();
    if (!(norm > 0.0)) fail(ErrorCode::kInvalidArgument, "zero quaternion");
    // already-unit blocks are left bit-identical so that canonicalization is idempotent
    if (std::abs(norm - 1.0) > 1e-14) block /= norm;
    if (block[0] < 0.0) block = -block;
  }
}

Eigen::VectorXd ManifoldSpec::identity() const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(layout_->ambient_dim);
  for (std::size_t f = 0; f < layout_->factors.size(); ++f) {
    if (layout_->factors[f].kind == FactorKind::kQuaternion) p[layout_->ambient_offsets[f]] = 1.0;
  }
  return p;
}

ManifoldPoint::ManifoldPoint(ManifoldSpec spec, Eigen::VectorXd coords)
    : spec_(std::move(spec)), coords_(std::move(coords)) {
  if (coords_.size() != spec_.ambient_dim()) {
    fail(ErrorCode::kSpecMismatch, "point has " + std::to_string(coords_.size()) +
                                       " coordinates, manifold " + spec_.to_string() + " needs " +
                                       std::to_string(spec_.ambient_dim()));
  }
  if (!coords_.allFinite()) fail(ErrorCode::kInvalidArgument, "non-finite point coordinates");
  for (std::size_t f = 0; f < spec_.factor_count(); ++f) {
    if (spec_.factors()[f].kind != FactorKind::kQuaternion) continue;
    const double norm = coords_.segment<4>(spec_.ambient_offset(f)).norm();
    if (std::abs(norm - 1.0) > kUnitTolerance) {
      fail(ErrorCode::kInvalidArgument, "quaternion block is not unit length");
    }
  }
  spec_.canonicalize(coords_);
}

ManifoldPoint ManifoldPoint::normalized(ManifoldSpec spec, Eigen::VectorXd coords) {
  if (coords.size() != spec.ambient_dim()) {
    fail(ErrorCode::kSpecMismatch, "point dimension does not match manifold " + spec.to_string());
  }
  spec.canonicalize(coords);
  return ManifoldPoint(std::move(spec), std::move(coords));
}

namespace {

void require_same_spec(const ManifoldSpec& a, const ManifoldSpec& b) {
  if (!(a == b)) {
    fail(ErrorCode::kSpecMismatch, "manifold mismatch: " + a.to_string() + " vs " + b.to_string());
  }
}

}  // namespace

TangentVector log_map(const ManifoldPoint& base, const ManifoldPoint& p) {
  require_same_spec(base.spec(), p.spec());
  return {base, base.spec().log(base.coords(), p.coords())};
}

ManifoldPoint exp_map(const ManifoldPoint& base, const TangentVector& v) {
  require_same_spec(base.spec(), v.base.spec());
  if (v.coords.size() != base.spec().tangent_dim()) {
    fail(ErrorCode::kSpecMismatch, "tangent vector dimension mismatch");
  }
  return ManifoldPoint::normalized(base.spec(), base.spec().exp(base.coords(), v.coords));
}

double geodesic_distance(const ManifoldPoint& a, const ManifoldPoint& b) {
  require_same_spec(a.spec(), b.spec());
  return a.spec().distance(a.coords(), b.coords());
}

Eigen::VectorXd weighted_frechet_mean(const ManifoldSpec& spec,
                                      std::span<const Eigen::VectorXd> points,
                                      std::span<const double> weights,
                                      const Eigen::VectorXd& init, const FrechetOptions& options,
                                      int* iterations) {
  if (points.empty() || points.size() != weights.size()) {
    fail(ErrorCode::kInvalidArgument, "weighted mean needs one weight per point");
  }
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) fail(ErrorCode::kInvalidArgument, "weights sum to zero");

  Eigen::VectorXd mean = init;
  Eigen::VectorXd step(spec.tangent_dim());
  double norm = 0.0;
  for (int it = 1; it <= options.max_iter; ++it) {
    step.setZero();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (weights[i] == 0.0) continue;
      step += weights[i] * spec.log(mean, points[i]);
    }
    step /= total;
    norm = step.norm();
    if (norm < options.tol) {
      if (iterations) *iterations = it;
      return mean;
    }
    mean = spec.exp(mean, step);
  }
  throw ConvergenceError("Frechet mean did not converge", mean, norm);
}

FrechetResult frechet_mean(std::span<const ManifoldPoint> points, const FrechetOptions& options) {
  if (points.empty()) fail(ErrorCode::kInvalidArgument, "Frechet mean of an empty set");
  const ManifoldSpec& spec = points.front().spec();
  std::vector<Eigen::VectorXd> coords;
  coords.reserve(points.size());
  for (const ManifoldPoint& p : points) {
    require_same_spec(spec, p.spec());
    coords.push_back(p.coords());
  }
  const std::vector<double> weights(points.size(), 1.0);
  int iterations = 0;
  Eigen::VectorXd mean =
      weighted_frechet_mean(spec, coords, weights, coords.front(), options, &iterations);

  Eigen::VectorXd gradient = Eigen::VectorXd::Zero(spec.tangent_dim());
  for (const auto& c : coords) gradient += spec.log(mean, c);
  gradient /= static_cast<double>(coords.size());
  return {ManifoldPoint::normalized(spec, std::move(mean)), iterations, gradient.norm()};
}

Eigen::VectorXd geodesic_interpolate(const ManifoldSpec& spec, const Eigen::VectorXd& a,
                                     const Eigen::VectorXd& b, double s) {
  if (s == 0.0) return a;
  if (s == 1.0) return b;
  return spec.exp(a, s * spec.log(a, b));
}

}  // namespace midigap
