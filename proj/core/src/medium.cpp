#include "bcwave/medium.hpp"

#include "bcwave/io.hpp"
#include "bcwave/parallel.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

namespace bcwave {

bool GridGeometry::contains(Vec2 p, double slack) const {
  return p.x1 >= x1_min - slack && p.x1 <= x1_max() + slack && p.x2 >= x2_min - slack &&
         p.x2 <= x2_max() + slack;
}

GridGeometry GridGeometry::half_space(double half_width, double depth, double spacing) {
  if (!(half_width > 0 && depth > 0 && spacing > 0)) {
    throw ConfigError("half_space grid needs positive width, depth and spacing");
  }
  GridGeometry g;
  g.d1 = g.d2 = spacing;
  g.n1 = static_cast<std::size_t>(std::llround(2.0 * half_width / spacing)) + 1;
  g.n2 = static_cast<std::size_t>(std::llround(depth / spacing)) + 1;
  g.x1_min = -spacing * static_cast<double>(g.n1 - 1) / 2.0;
  g.x2_min = -spacing * static_cast<double>(g.n2 - 1);
  return g;
}

SpeedModel SpeedModel::constant(double c) {
  if (!(c > 0)) throw ConfigError("constant speed must be positive");
  std::ostringstream name;
  name << "constant(" << c << ")";
  return {name.str(), [c](Vec2) { return c; }};
}

SpeedModel SpeedModel::layered(double c0, double gradient) {
  std::ostringstream name;
  name << "layered(" << c0 << "," << gradient << ")";
  return {name.str(), [c0, gradient](Vec2 p) { return c0 + gradient * p.x2; }};
}

SpeedModel SpeedModel::lens() {
  return {"lens", [](Vec2 p) {
            const double r2 = p.x1 * p.x1 + (p.x2 - 0.375) * (p.x2 - 0.375);
            return 1.0 + 0.5 * p.x2 - 0.5 * std::exp(-4.0 * r2);
          }};
}

SpeedField::SpeedField(GridGeometry geometry, std::vector<double> values)
    : geometry_(geometry), values_(std::move(values)) {
  if (geometry_.n1 < 2 || geometry_.n2 < 2) throw ConfigError("speed grid needs at least 2x2 nodes");
  if (values_.size() != geometry_.size()) throw ConfigError("speed values do not match grid size");
  for (double v : values_) {
    if (!(v > 0) || !std::isfinite(v)) throw ConfigError("wave speed must be strictly positive");
  }
}

SpeedField SpeedField::sample(const SpeedModel& model, const GridGeometry& geometry) {
  std::vector<double> values(geometry.size());
  for (std::size_t k = 0; k < geometry.n2; ++k) {
    for (std::size_t i = 0; i < geometry.n1; ++i) {
      values[geometry.index(i, k)] = model(geometry.node(i, k));
    }
  }
  return SpeedField(geometry, std::move(values));
}

double SpeedField::max_speed() const { return *std::max_element(values_.begin(), values_.end()); }
double SpeedField::min_speed() const { return *std::min_element(values_.begin(), values_.end()); }

namespace {

double bilinear(const GridGeometry& g, std::span<const double> v, Vec2 p) {
  const double u = std::clamp((p.x1 - g.x1_min) / g.d1, 0.0, static_cast<double>(g.n1 - 1));
  const double w = std::clamp((p.x2 - g.x2_min) / g.d2, 0.0, static_cast<double>(g.n2 - 1));
  auto i = static_cast<std::size_t>(u);
  auto k = static_cast<std::size_t>(w);
  if (i >= g.n1 - 1) i = g.n1 - 2;
  if (k >= g.n2 - 1) k = g.n2 - 2;
  const double fu = u - static_cast<double>(i);
  const double fw = w - static_cast<double>(k);
  const double v00 = v[g.index(i, k)];
  const double v10 = v[g.index(i + 1, k)];
  const double v01 = v[g.index(i, k + 1)];
  const double v11 = v[g.index(i + 1, k + 1)];
  return (1 - fw) * ((1 - fu) * v00 + fu * v10) + fw * ((1 - fu) * v01 + fu * v11);
}

}  // namespace

double SpeedField::eval(Vec2 p) const {
  if (!geometry_.contains(p)) {
    std::ostringstream msg;
    msg << "point (" << p.x1 << ", " << p.x2 << ") outside speed grid";
    throw DomainError(msg.str());
  }
  return bilinear(geometry_, values_, p);
}

double SpeedField::eval_clamped(Vec2 p) const { return bilinear(geometry_, values_, p); }

SpeedFunction SpeedField::as_function() const {
  return [self = *this](Vec2 p) { return self.eval_clamped(p); };
}

double eval_speed(const SpeedField& field, Vec2 p) { return field.eval(p); }

void SpeedField::save(const std::filesystem::path& header_path) const {
  auto payload = header_path;
  payload.replace_extension(".bin");
  io::write_f64(payload, values_);
  std::ostringstream os;
  os.precision(17);
  os << "bcwave-speed-field 1\n"
     << "x1_min " << geometry_.x1_min << "\n"
     << "x2_min " << geometry_.x2_min << "\n"
     << "d1 " << geometry_.d1 << "\n"
     << "d2 " << geometry_.d2 << "\n"
     << "n1 " << geometry_.n1 << "\n"
     << "n2 " << geometry_.n2 << "\n"
     << "payload " << payload.filename().string() << "\n"
     << "hash " << io::hex(io::hash_doubles(values_)) << "\n";
  io::write_text(header_path, os.str());
}

SpeedField SpeedField::load(const std::filesystem::path& header_path) {
  std::istringstream in(io::read_text(header_path));
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "bcwave-speed-field" || version != 1) {
    throw IntegrityError(header_path.string() + ": not a speed field header");
  }
  GridGeometry g;
  std::string key, payload, hash;
  while (in >> key) {
    if (key == "x1_min") in >> g.x1_min;
    else if (key == "x2_min") in >> g.x2_min;
    else if (key == "d1") in >> g.d1;
    else if (key == "d2") in >> g.d2;
    else if (key == "n1") in >> g.n1;
    else if (key == "n2") in >> g.n2;
    else if (key == "payload") in >> payload;
    else if (key == "hash") in >> hash;
    else throw IntegrityError(header_path.string() + ": unknown key " + key);
  }
  auto values = io::read_f64(header_path.parent_path() / payload, g.size());
  if (!hash.empty() && io::hex(io::hash_doubles(values)) != hash) {
    throw ProvenanceError(header_path.string() + ": payload hash mismatch");
  }
  return SpeedField(g, std::move(values));
}

void SpeedField::export_csv(const std::filesystem::path& path) const {
  std::ostringstream os;
  os.precision(17);
  os << "x1,x2,c\n";
  for (std::size_t k = 0; k < geometry_.n2; ++k) {
    for (std::size_t i = 0; i < geometry_.n1; ++i) {
      const Vec2 p = geometry_.node(i, k);
      os << p.x1 << ',' << p.x2 << ',' << at(i, k) << '\n';
    }
  }
  io::write_text(path, os.str());
}

double DistanceField::eval(Vec2 p) const { return bilinear(geometry, values, p); }

// ---------------------------------------------------------------------------
// Fast marching

namespace {

enum class NodeState : unsigned char { Far, Trial, Known };

struct HeapEntry {
  double value;
  std::size_t index;
  bool operator>(const HeapEntry& o) const { return value > o.value; }
};

}  // namespace

DistanceField eikonal_distance(const SpeedField& field, const EikonalSource& source) {
  const GridGeometry& g = field.geometry();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> t(g.size(), inf);
  std::vector<NodeState> state(g.size(), NodeState::Far);
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap;

  auto seed = [&](std::size_t idx, double value) {
    if (value < t[idx]) {
      t[idx] = value;
      state[idx] = NodeState::Trial;
      heap.push({value, idx});
    }
  };

  if (const auto* ps = std::get_if<PointSource>(&source)) {
    const Vec2 p = ps->point;
    if (!g.contains(p, 1e-9)) throw DomainError("eikonal point source outside grid");
    const auto i0 = static_cast<long>(std::lround((p.x1 - g.x1_min) / g.d1));
    const auto k0 = static_cast<long>(std::lround((p.x2 - g.x2_min) / g.d2));
    const double slow_p = 1.0 / field.eval_clamped(p);
    for (long dk = -1; dk <= 1; ++dk) {
      for (long di = -1; di <= 1; ++di) {
        const long i = i0 + di, k = k0 + dk;
        if (i < 0 || k < 0 || i >= static_cast<long>(g.n1) || k >= static_cast<long>(g.n2)) continue;
        const auto ui = static_cast<std::size_t>(i), uk = static_cast<std::size_t>(k);
        const Vec2 q = g.node(ui, uk);
        const double slow_q = 1.0 / field.at(ui, uk);
        seed(g.index(ui, uk), (q - p).norm() * 0.5 * (slow_p + slow_q));
      }
    }
  } else {
    const auto& seg = std::get<BoundarySegment>(source);
    const std::size_t top = g.n2 - 1;
    bool any = false;
    for (std::size_t i = 0; i < g.n1; ++i) {
      const double x = g.node(i, top).x1;
      if (x >= seg.x1_lo - 1e-9 && x <= seg.x1_hi + 1e-9) {
        seed(g.index(i, top), 0.0);
        any = true;
      }
    }
    if (!any) throw DomainError("eikonal boundary segment contains no grid node");
  }

  const double h1 = g.d1, h2 = g.d2;
  auto solve_node = [&](std::size_t i, std::size_t k) {
    double a = inf, b = inf;
    if (i > 0 && state[g.index(i - 1, k)] == NodeState::Known) a = std::min(a, t[g.index(i - 1, k)]);
    if (i + 1 < g.n1 && state[g.index(i + 1, k)] == NodeState::Known) a = std::min(a, t[g.index(i + 1, k)]);
    if (k > 0 && state[g.index(i, k - 1)] == NodeState::Known) b = std::min(b, t[g.index(i, k - 1)]);
    if (k + 1 < g.n2 && state[g.index(i, k + 1)] == NodeState::Known) b = std::min(b, t[g.index(i, k + 1)]);
    const double f = 1.0 / field.at(i, k);
    double best = std::min(a + h1 * f, b + h2 * f);
    if (std::isfinite(a) && std::isfinite(b)) {
      const double p1 = 1.0 / (h1 * h1), p2 = 1.0 / (h2 * h2);
      const double qa = p1 + p2;
      const double qb = -2.0 * (a * p1 + b * p2);
      const double qc = a * a * p1 + b * b * p2 - f * f;
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0) {
        const double root = (-qb + std::sqrt(disc)) / (2.0 * qa);
        if (root >= std::max(a, b)) best = std::min(best, root);
      }
    }
    return best;
  };

  while (!heap.empty()) {
    const HeapEntry top = heap.top();
    heap.pop();
    if (state[top.index] == NodeState::Known || top.value > t[top.index]) continue;
    state[top.index] = NodeState::Known;
    const std::size_t i = top.index % g.n1;
    const std::size_t k = top.index / g.n1;
    const std::array<std::pair<long, long>, 4> nbrs{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
    for (auto [di, dk] : nbrs) {
      const long ni = static_cast<long>(i) + di, nk = static_cast<long>(k) + dk;
      if (ni < 0 || nk < 0 || ni >= static_cast<long>(g.n1) || nk >= static_cast<long>(g.n2)) continue;
      const auto ui = static_cast<std::size_t>(ni), uk = static_cast<std::size_t>(nk);
      const std::size_t idx = g.index(ui, uk);
      if (state[idx] == NodeState::Known) continue;
      const double candidate = solve_node(ui, uk);
      if (candidate < t[idx]) {
        t[idx] = candidate;
        state[idx] = NodeState::Trial;
        heap.push({candidate, idx});
      }
    }
  }
  return DistanceField{g, std::move(t)};
}

// ---------------------------------------------------------------------------
// Geodesics

Vec2 GeodesicPath::point_at(double s_query) const {
  if (points.empty()) throw DomainError("empty geodesic path");
  if (s_query <= s.front()) return points.front();
  if (s_query >= s.back()) return points.back();
  const auto k = static_cast<std::size_t>((s_query - s.front()) / ds);
  const std::size_t k0 = std::min(k, points.size() - 2);
  const double f = (s_query - s[k0]) / (s[k0 + 1] - s[k0]);
  return (1 - f) * points[k0] + f * points[k0 + 1];
}

namespace {

struct GeoState {
  Vec2 x, v;
};

GeoState geodesic_rhs(const SpeedFunction& speed, const GeoState& st, double eps) {
  const double lx_p = std::log(speed({st.x.x1 + eps, st.x.x2}));
  const double lx_m = std::log(speed({st.x.x1 - eps, st.x.x2}));
  const double lz_p = std::log(speed({st.x.x1, st.x.x2 + eps}));
  const double lz_m = std::log(speed({st.x.x1, st.x.x2 - eps}));
  const Vec2 grad{(lx_p - lx_m) / (2 * eps), (lz_p - lz_m) / (2 * eps)};
  // Christoffel symbols of c^-2 dx^2 contracted with v twice.
  const double gv = grad.dot(st.v);
  const double vv = st.v.dot(st.v);
  return {st.v, (2.0 * gv) * st.v - vv * grad};
}

}  // namespace

GeodesicPath trace_geodesic(const SpeedFunction& speed, double y, double s_max, double ds,
                            const GeodesicOptions& options) {
  if (!(ds > 0)) throw ConfigError("geodesic step must be positive");
  if (!(s_max >= 0)) throw ConfigError("geodesic length must be non-negative");
  GeodesicPath path;
  path.base = y;
  path.ds = ds;
  GeoState st{{y, 0.0}, {0.0, -speed({y, 0.0})}};
  path.s.push_back(0.0);
  path.points.push_back(st.x);
  path.velocities.push_back(st.v);
  const auto steps = static_cast<std::size_t>(std::llround(s_max / ds));
  const double eps = options.fd_step;
  for (std::size_t n = 1; n <= steps; ++n) {
    const GeoState k1 = geodesic_rhs(speed, st, eps);
    const GeoState s2{st.x + (0.5 * ds) * k1.x, st.v + (0.5 * ds) * k1.v};
    const GeoState k2 = geodesic_rhs(speed, s2, eps);
    const GeoState s3{st.x + (0.5 * ds) * k2.x, st.v + (0.5 * ds) * k2.v};
    const GeoState k3 = geodesic_rhs(speed, s3, eps);
    const GeoState s4{st.x + ds * k3.x, st.v + ds * k3.v};
    const GeoState k4 = geodesic_rhs(speed, s4, eps);
    GeoState next{st.x + (ds / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
                  st.v + (ds / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
    const bool outside = next.x.x2 > 1e-12 || (options.extent && !options.extent->contains(next.x));
    if (outside) {
      path.truncated = true;
      break;
    }
    st = next;
    path.s.push_back(static_cast<double>(n) * ds);
    path.points.push_back(st.x);
    path.velocities.push_back(st.v);
  }
  return path;
}

double cut_length(const GeodesicPath& path, const DistanceField& distance_to_gamma, double tol) {
  if (path.points.empty()) return 0.0;
  for (std::size_t k = 0; k < path.points.size(); ++k) {
    const double d = distance_to_gamma.eval(path.points[k]);
    if (std::abs(d - path.s[k]) > tol) return k == 0 ? 0.0 : path.s[k - 1];
  }
  return path.s.back();
}

Matrix boundary_distances(const SpeedField& field, std::span<const double> ys,
                          std::span<const double> xs) {
  const GridGeometry& g = field.geometry();
  if (std::abs(g.x2_max()) > 1e-9) throw ConfigError("boundary distances need a grid whose top row is x2 = 0");
  Matrix table(static_cast<Eigen::Index>(ys.size()), static_cast<Eigen::Index>(xs.size()));
  parallel_for(ys.size(), [&](std::size_t r) {
    const DistanceField d = eikonal_distance(field, PointSource{{ys[r], 0.0}});
    for (std::size_t j = 0; j < xs.size(); ++j) {
      table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = d.eval({xs[j], 0.0});
    }
  });
  return table;
}

}  // namespace bcwave
