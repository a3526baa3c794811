#include "bcwave/reconstruct.hpp"

#include "bcwave/io.hpp"
#include "bcwave/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace bcwave {

HarmonicFunction HarmonicFunction::one() {
  return {"1", [](Vec2) { return 1.0; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
}

HarmonicFunction HarmonicFunction::x1() {
  return {"x1", [](Vec2 p) { return p.x1; }, [](double x) { return x; }, [](double) { return 0.0; }};
}

HarmonicFunction HarmonicFunction::x2() {
  return {"x2", [](Vec2 p) { return p.x2; }, [](double) { return 0.0; }, [](double) { return 1.0; }};
}

HarmonicFunction HarmonicFunction::polynomial(int degree, bool imaginary) {
  if (degree < 0) throw ConfigError("harmonic polynomial degree must be non-negative");
  auto part = [imaginary](std::complex<double> z) { return imaginary ? z.imag() : z.real(); };
  HarmonicFunction h;
  h.name = std::string(imaginary ? "Im" : "Re") + "(z^" + std::to_string(degree) + ")";
  h.value = [=](Vec2 p) { return part(std::pow(std::complex<double>(p.x1, p.x2), degree)); };
  h.boundary_value = [=](double x) { return part(std::pow(std::complex<double>(x, 0.0), degree)); };
  // d/dx2 z^n = i n z^(n-1).
  h.boundary_dx2 = [=](double x) {
    if (degree == 0) return 0.0;
    const std::complex<double> d = std::complex<double>(0.0, degree) * std::pow(std::complex<double>(x, 0.0), degree - 1);
    return part(d);
  };
  return h;
}

TraceMoments TraceMoments::from(const TraceSet& traces) {
  const auto& lat = traces.lattice();
  const std::size_t nth = lat.nt_half();
  Eigen::RowVectorXd w(static_cast<Eigen::Index>(nth));
  for (std::size_t k = 0; k < nth; ++k) {
    const double trap = (k == 0 || k + 1 == nth) ? 0.5 * lat.dt_r : lat.dt_r;
    w(static_cast<Eigen::Index>(k)) = trap * (lat.T - lat.time(k));
  }
  TraceMoments out;
  out.lattice = lat;
  out.trace_fingerprint = traces.fingerprint();
  out.moments.resize(static_cast<Eigen::Index>(traces.size()), static_cast<Eigen::Index>(lat.nx()));
  parallel_for(traces.size(), [&](std::size_t n) {
    const Matrix tr = traces.trace(n);
    out.moments.row(static_cast<Eigen::Index>(n)) = w * tr.topRows(static_cast<Eigen::Index>(nth));
  });
  return out;
}

Vector b_functional_row(const HarmonicFunction& phi, const TraceMoments& moments, const BasisSpec& basis) {
  if (static_cast<std::size_t>(moments.moments.rows()) != basis.size()) {
    throw IntegrityError("trace moments and basis have different sizes");
  }
  const auto& lat = basis.lattice();
  std::vector<double> p(lat.nt()), q(lat.nx());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = basis.params().T - lat.t[k];
  for (std::size_t l = 0; l < q.size(); ++l) q[l] = phi.boundary_value(lat.x[l]);
  const Matrix src = basis.inner_products(p, q);
  Vector row = Eigen::Map<const Eigen::VectorXd>(src.data(), src.size());

  const auto& rl = moments.lattice;
  const std::size_t nx = rl.nx();
  Eigen::VectorXd wx(static_cast<Eigen::Index>(nx));
  bool any = false;
  for (std::size_t c = 0; c < nx; ++c) {
    const double trap = (c == 0 || c + 1 == nx) ? 0.5 * rl.dx_r : rl.dx_r;
    const double d = phi.boundary_dx2(rl.position(c));
    wx(static_cast<Eigen::Index>(c)) = trap * d;
    any = any || d != 0.0;
  }
  if (any) row -= moments.moments * wx;
  return row;
}

double b_functional(const Vector& coeffs, const HarmonicFunction& phi, const TraceMoments& moments,
                    const BasisSpec& basis) {
  if (static_cast<std::size_t>(coeffs.size()) != basis.size()) throw IntegrityError("b_functional: coefficient size mismatch");
  return coeffs.dot(b_functional_row(phi, moments, basis));
}

double point_value_harmonic(const CapSource& cap, const HarmonicFunction& phi, const TraceMoments& moments,
                            const BasisSpec& basis, double threshold) {
  const double denom = b_functional(cap.psi, HarmonicFunction::one(), moments, basis);
  if (!(std::abs(denom) > threshold)) {
    std::ostringstream msg;
    msg << "degenerate cap at (y, s) = (" << cap.cap.y << ", " << cap.cap.s << "): B(psi, 1) = " << denom;
    throw NumericalError(msg.str());
  }
  return b_functional(cap.psi, phi, moments, basis) / denom;
}

double point_value_wavefield(const CapSource& cap, const Vector& coeffs, const ConnectingMatrix& K, double threshold) {
  if (static_cast<std::size_t>(coeffs.size()) != K.size() || static_cast<std::size_t>(cap.psi.size()) != K.size()) {
    throw IntegrityError("point_value_wavefield: size mismatch");
  }
  if (!(std::abs(cap.volume) > threshold)) {
    std::ostringstream msg;
    msg << "degenerate cap at (y, s) = (" << cap.cap.y << ", " << cap.cap.s << "): volume " << cap.volume;
    throw NumericalError(msg.str());
  }
  return cap.psi.dot(K.K * coeffs) / cap.volume;
}

// ---------------------------------------------------------------------------

std::size_t TransformSamples::usable_count() const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return p.usable(); }));
}

void TransformSamples::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot write " + path.string());
  out.precision(17);
  out << "# h=" << h << " alpha=" << alpha << " ny=" << ys.size() << " ns=" << ss.size() << "\n";
  out << "y,s,phi1,phi2,c_est,volume,flags\n";
  for (const auto& p : points) {
    out << p.y << ',' << p.s << ',' << p.phi1 << ',' << p.phi2 << ',' << p.c_est << ',' << p.volume << ','
        << p.flags << '\n';
  }
}

TransformSamples TransformSamples::read_csv(const std::filesystem::path& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  std::getline(in, line);
  TransformSamples t;
  std::size_t ny = 0, ns = 0;
  if (std::sscanf(line.c_str(), "# h=%lf alpha=%lf ny=%zu ns=%zu", &t.h, &t.alpha, &ny, &ns) != 4) {
    throw IntegrityError("malformed transform CSV header in " + path.string());
  }
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TransformPoint p;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::string c_est;
    ls >> p.y >> p.s >> p.phi1 >> p.phi2 >> c_est >> p.volume >> p.flags;
    if (!ls) throw IntegrityError("malformed transform CSV row in " + path.string());
    p.c_est = c_est == "nan" || c_est == "-nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(c_est);
    t.points.push_back(p);
  }
  if (t.points.size() != ny * ns) throw IntegrityError("transform CSV has the wrong number of rows");
  for (std::size_t i = 0; i < ny; ++i) t.ys.push_back(t.points[i * ns].y);
  for (std::size_t j = 0; j < ns; ++j) t.ss.push_back(t.points[j].s);
  return t;
}

void CapTable::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "caps.csv");
  if (!out) throw IntegrityError("cannot write " + (dir / "caps.csv").string());
  out.precision(17);
  out << "# h=" << h << " alpha=" << alpha << " ny=" << ys.size() << " ns=" << ss.size() << " n=" << psi.cols()
      << " traces=" << io::hex(trace_fingerprint) << "\n";
  out << "y,s,volume,flags\n";
  for (std::size_t i = 0; i < ys.size(); ++i) {
    for (std::size_t j = 0; j < ss.size(); ++j) {
      const std::size_t p = i * ss.size() + j;
      out << ys[i] << ',' << ss[j] << ',' << volumes[p] << ',' << flags[p] << '\n';
    }
  }
  io::write_matrix(dir / "psi.bin", psi);
}

CapTable CapTable::load(const std::filesystem::path& dir) {
  std::istringstream in(io::read_text(dir / "caps.csv"));
  std::string line;
  std::getline(in, line);
  CapTable t;
  std::size_t ny = 0, ns = 0, n = 0;
  char hex[32] = {};
  if (std::sscanf(line.c_str(), "# h=%lf alpha=%lf ny=%zu ns=%zu n=%zu traces=%16s", &t.h, &t.alpha, &ny, &ns, &n,
                  hex) != 6) {
    throw IntegrityError("malformed cap table header in " + (dir / "caps.csv").string());
  }
  t.trace_fingerprint = std::stoull(hex, nullptr, 16);
  std::getline(in, line);
  std::vector<double> yrow, srow;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double y = 0, s = 0, v = 0;
    unsigned f = 0;
    ls >> y >> s >> v >> f;
    if (!ls) throw IntegrityError("malformed cap table row");
    yrow.push_back(y);
    srow.push_back(s);
    t.volumes.push_back(v);
    t.flags.push_back(f);
  }
  if (t.volumes.size() != ny * ns) throw IntegrityError("cap table has the wrong number of rows");
  for (std::size_t i = 0; i < ny; ++i) t.ys.push_back(yrow[i * ns]);
  for (std::size_t j = 0; j < ns; ++j) t.ss.push_back(srow[j]);
  t.psi = io::read_matrix(dir / "psi.bin", ny * ns, n);
  return t;
}

CapTable compute_caps(const TransformInputs& in, std::vector<double> ys, std::vector<double> ss, double h,
                      double alpha) {
  if (!in.K || !in.basis || !in.distances) throw ConfigError("compute_caps: missing inputs");
  const BasisSpec& basis = *in.basis;
  if (in.K->size() != basis.size()) throw IntegrityError("compute_caps: K and basis sizes differ");
  CapTable out;
  out.ys = std::move(ys);
  out.ss = std::move(ss);
  out.h = h;
  out.alpha = alpha;
  out.trace_fingerprint = in.K->trace_fingerprint;
  const std::size_t ny = out.ys.size(), ns = out.ss.size();
  out.psi = Matrix::Zero(static_cast<Eigen::Index>(ny * ns), static_cast<Eigen::Index>(basis.size()));
  out.volumes.assign(ny * ns, 0.0);
  out.flags.assign(ny * ns, 0u);

  const Matrix bvec = b_vector(basis);
  const Matrix sym = symmetric_part(*in.K);
  for (std::size_t j = 0; j < ns; ++j) {
    std::optional<CapSolver> solver;
    try {
      solver.emplace(sym, bvec, basis, out.ss[j], alpha);
    } catch (const NumericalError&) {
      for (std::size_t i = 0; i < ny; ++i) out.flags[i * ns + j] |= kDegenerateCap;
      continue;
    }
    parallel_for(ny, [&](std::size_t i) {
      const std::size_t p = i * ns + j;
      CapSource cap;
      try {
        cap = solver->solve(out.ys[i], h, *in.distances);
      } catch (const NumericalError&) {
        out.flags[p] |= kDegenerateCap;
        return;
      }
      out.volumes[p] = cap.volume;
      if (!(cap.volume > 1e-14)) out.flags[p] |= kDegenerateCap;
      out.psi.row(static_cast<Eigen::Index>(p)) = cap.psi.transpose();
    });
  }
  return out;
}

TransformSamples transform_from_caps(const CapTable& caps, const TraceMoments& moments, const BasisSpec& basis) {
  if (moments.trace_fingerprint != caps.trace_fingerprint) {
    throw ProvenanceError("caps and trace moments come from different trace sets");
  }
  if (static_cast<std::size_t>(caps.psi.cols()) != basis.size()) {
    throw IntegrityError("transform_from_caps: cap and basis sizes differ");
  }
  TransformSamples out;
  out.ys = caps.ys;
  out.ss = caps.ss;
  out.h = caps.h;
  out.alpha = caps.alpha;
  const std::size_t ny = out.ys.size(), ns = out.ss.size();
  out.points.resize(ny * ns);
  const Vector row1 = b_functional_row(HarmonicFunction::x1(), moments, basis);
  const Vector row2 = b_functional_row(HarmonicFunction::x2(), moments, basis);
  const Vector v1 = caps.psi * row1, v2 = caps.psi * row2;
  for (std::size_t i = 0; i < ny; ++i) {
    for (std::size_t j = 0; j < ns; ++j) {
      const std::size_t p = i * ns + j;
      TransformPoint& pt = out.at(i, j);
      pt.y = out.ys[i];
      pt.s = out.ss[j];
      pt.flags = caps.flags[p];
      pt.volume = caps.volumes[p];
      if (pt.flags & kDegenerateCap) continue;
      pt.phi1 = v1(static_cast<Eigen::Index>(p)) / pt.volume;
      pt.phi2 = v2(static_cast<Eigen::Index>(p)) / pt.volume;
      if (!(pt.phi2 < 0.0)) pt.flags |= kOutsideDomain;
    }
  }
  for (std::size_t i = 0; i < ny; ++i) {
    const TransformPoint* last = nullptr;
    for (std::size_t j = 0; j < ns; ++j) {
      TransformPoint& p = out.at(i, j);
      if (!p.usable()) continue;
      if (last && !(p.phi2 < last->phi2)) p.flags |= kNonMonotone;
      last = &p;
    }
  }
  return out;
}

TransformSamples build_transform(const TransformInputs& in, std::vector<double> ys, std::vector<double> ss,
                                 double h, double alpha) {
  if (!in.moments) throw ConfigError("build_transform: missing inputs");
  if (in.K && in.moments->trace_fingerprint != in.K->trace_fingerprint) {
    throw ProvenanceError("K and trace moments come from different trace sets");
  }
  const CapTable caps = compute_caps(in, std::move(ys), std::move(ss), h, alpha);
  return transform_from_caps(caps, *in.moments, *in.basis);
}

void speed_from_transform(TransformSamples& samples, const SplineOptions& options) {
  const std::size_t ns = samples.ss.size();
  for (std::size_t i = 0; i < samples.ys.size(); ++i) {
    std::vector<double> s, p1, p2;
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < ns; ++j) {
      const auto& p = samples.at(i, j);
      if (!p.usable()) continue;
      s.push_back(p.s);
      p1.push_back(p.phi1);
      p2.push_back(p.phi2);
      idx.push_back(j);
    }
    if (s.size() < 4) {
      for (std::size_t j = 0; j < ns; ++j) {
        samples.at(i, j).flags |= kNoSpeed;
        samples.at(i, j).c_est = std::numeric_limits<double>::quiet_NaN();
      }
      continue;
    }
    const SmoothingSpline f1(s, p1, options), f2(s, p2, options);
    for (std::size_t j = 0; j < ns; ++j) {
      auto& p = samples.at(i, j);
      if (!p.usable()) {
        p.c_est = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      p.c_est = std::hypot(f1.derivative(p.s), f2.derivative(p.s));
    }
  }
}

}  // namespace bcwave
