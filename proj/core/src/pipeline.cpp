#include "bcwave/pipeline.hpp"

#include "bcwave/boundary_ops.hpp"
#include "bcwave/control.hpp"
#include "bcwave/io.hpp"
#include "bcwave/reconstruct.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace bcwave {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

bool is_multiple(double value, double step) {
  const double q = value / step;
  return std::abs(q - std::round(q)) < 1e-7;
}

std::vector<double> range(double lo, double hi, double step) {
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = lo + step * static_cast<double>(k);
  return out;
}

json medium_json(const MediumSpec& m) {
  json j;
  j["kind"] = m.kind;
  if (m.kind == "constant") j["c"] = m.c;
  if (m.kind == "layered") {
    j["c0"] = m.c0;
    j["gradient"] = m.gradient;
  }
  if (m.kind == "file") j["path"] = m.path;
  return j;
}

json forward_json(const PipelineConfig& c) {
  json j;
  j["medium"] = medium_json(c.medium);
  for (auto [k, v] : {std::pair{"T", c.T}, {"t0", c.t0}, {"ls", c.ls}, {"lr", c.lr}, {"dts", c.dts}, {"dxs", c.dxs},
                      {"a", c.a}, {"dxr", c.dxr}, {"dtr", c.dtr}}) {
    j[k] = v;
  }
  j["solver"] = {{"dx", c.dx}, {"cfl", c.cfl}};
  return j;
}

json caps_json(const PipelineConfig& c) {
  json j;
  j["grid"] = {{"y_min", c.y_min}, {"y_max", c.y_max}, {"y_step", c.y_step},
               {"s_min", c.s_min}, {"s_max", c.s_max}, {"s_step", c.s_step}};
  j["h"] = c.h;
  j["alpha"] = c.alpha;
  return j;
}

double number(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("config: missing key '") + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace

void PipelineConfig::validate() const {
  const std::vector<std::string> kinds = {"constant", "layered", "lens", "file"};
  if (std::find(kinds.begin(), kinds.end(), medium.kind) == kinds.end()) {
    throw ConfigError("unknown medium kind '" + medium.kind + "'");
  }
  if (medium.kind == "constant" && !(medium.c > 0)) throw ConfigError("constant speed must be positive");
  if (medium.kind == "file" && medium.path.empty()) throw ConfigError("file medium needs a path");
  for (auto [name, v] : {std::pair{"T", T}, {"ls", ls}, {"lr", lr}, {"dts", dts}, {"dxs", dxs}, {"a", a},
                         {"dxr", dxr}, {"dtr", dtr}, {"h", h}, {"alpha", alpha}, {"dx", dx}, {"y_step", y_step},
                         {"s_step", s_step}}) {
    if (!(v > 0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
  }
  if (!(t0 >= 0)) throw ConfigError("t0 must be non-negative");
  if (ls > lr) throw ConfigError("ls must not exceed lr");
  if (!is_multiple(h, dts)) throw ConfigError("h must be an integral multiple of dts");
  if (!(cfl > 0) || cfl > kCflLimit) throw ConfigError("cfl must lie in (0, 0.5]");
  if (y_min > y_max || s_min > s_max) throw ConfigError("reconstruction grid bounds are reversed");
  if (y_min < -ls - 1e-12 || y_max > ls + 1e-12) throw ConfigError("reconstruction grid leaves the source interval");
  if (!(s_min > 0)) throw ConfigError("reconstruction depths must be positive");
  if (s_max + h > T + 1e-12) throw ConfigError("s_max + h must not exceed T");
  if (!is_multiple(y_max - y_min, y_step) || !is_multiple(s_max - s_min, s_step)) {
    throw ConfigError("reconstruction grid steps must divide the ranges");
  }
  if (spline_lambda && !(*spline_lambda >= 0)) throw ConfigError("spline_lambda must be non-negative");
  basis_params().validate();
}

BasisParams PipelineConfig::basis_params() const {
  BasisParams p;
  p.T = T;
  p.t_first = dts;
  p.t_last = dts * std::floor(T / dts - 1.0 + 1e-9);
  p.dt_s = dts;
  p.half_width = ls;
  p.dx_s = dxs;
  p.a = a;
  p.quad_dt = dtr;
  p.quad_dx = dxr;
  return p;
}

ReceiverLattice PipelineConfig::receiver_lattice() const {
  ReceiverLattice lat;
  lat.dt_r = dtr;
  lat.dx_r = dxr;
  lat.T = T;
  lat.half_width = lr;
  return lat;
}

std::vector<double> PipelineConfig::ys() const { return range(y_min, y_max, y_step); }
std::vector<double> PipelineConfig::ss() const { return range(s_min, s_max, s_step); }

std::string PipelineConfig::to_json() const {
  json j = forward_json(*this);
  const json caps = caps_json(*this);
  for (const auto& [k, v] : caps.items()) j[k] = v;
  j["spline_lambda"] = spline_lambda ? json(*spline_lambda) : json(nullptr);
  j["output"] = output;
  return j.dump(2) + "\n";
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  try {
    const json& m = j.at("medium");
    c.medium.kind = m.at("kind").get<std::string>();
    if (c.medium.kind == "constant") c.medium.c = m.value("c", 1.0);
    if (c.medium.kind == "layered") {
      c.medium.c0 = number(m, "c0");
      c.medium.gradient = number(m, "gradient");
    }
    if (c.medium.kind == "file") c.medium.path = m.at("path").get<std::string>();
    c.T = number(j, "T");
    c.t0 = number(j, "t0");
    c.ls = number(j, "ls");
    c.lr = number(j, "lr");
    c.dts = number(j, "dts");
    c.dxs = number(j, "dxs");
    c.a = number(j, "a");
    c.dxr = number(j, "dxr");
    c.dtr = number(j, "dtr");
    const json& g = j.at("grid");
    c.y_min = number(g, "y_min");
    c.y_max = number(g, "y_max");
    c.y_step = number(g, "y_step");
    c.s_min = number(g, "s_min");
    c.s_max = number(g, "s_max");
    c.s_step = number(g, "s_step");
    c.h = number(j, "h");
    c.alpha = number(j, "alpha");
    if (j.contains("spline_lambda") && !j.at("spline_lambda").is_null()) c.spline_lambda = number(j, "spline_lambda");
    const json& s = j.at("solver");
    c.dx = number(s, "dx");
    c.cfl = s.contains("cfl") ? number(s, "cfl") : 0.4;
    c.output = j.value("output", std::string("artifacts"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return from_json(io::read_text(path));
}

void PipelineConfig::save(const fs::path& path) const { io::write_text(path, to_json()); }

SpeedFunction medium_speed(const MediumSpec& spec) {
  if (spec.kind == "constant") return SpeedModel::constant(spec.c).speed;
  if (spec.kind == "layered") return SpeedModel::layered(spec.c0, spec.gradient).speed;
  if (spec.kind == "lens") return SpeedModel::lens().speed;
  if (spec.kind == "file") return SpeedField::load(spec.path).as_function();
  throw ConfigError("unknown medium kind '" + spec.kind + "'");
}

ForwardSetup forward_setup(const PipelineConfig& config) {
  const SpeedFunction speed = medium_speed(config.medium);
  // The padding depends on the fastest speed on the grid it pads, so grow until stable.
  double c_max = 1.0;
  for (int pass = 0; pass < 4; ++pass) {
    const SimGrid grid = covering_grid(config.lr, -config.t0, 2.0 * config.T, c_max, config.dx, config.dtr, config.cfl);
    std::vector<double> values(grid.space.size());
    for (std::size_t k = 0; k < grid.space.n2; ++k) {
      for (std::size_t i = 0; i < grid.space.n1; ++i) values[grid.space.index(i, k)] = speed(grid.space.node(i, k));
    }
    SpeedField field(grid.space, std::move(values));
    if (field.max_speed() <= c_max * (1.0 + 1e-12)) return {grid, std::move(field)};
    c_max = field.max_speed();
  }
  throw ConfigError("could not size a simulation grid for this medium");
}

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::simulate: return "simulate";
    case Stage::connect: return "connect";
    case Stage::caps: return "caps";
    case Stage::reconstruct: return "reconstruct";
    case Stage::speed: return "speed";
  }
  return "?";
}

Stage parse_stage(const std::string& name) {
  for (Stage s : kAllStages) {
    if (stage_name(s) == name) return s;
  }
  throw ConfigError("unknown stage '" + name + "'");
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kManifest = "stage.manifest";

std::string stage_key(const PipelineConfig& c, Stage s) {
  json j = forward_json(c);
  if (s >= Stage::caps) j["caps"] = caps_json(c);
  if (s >= Stage::speed) j["spline_lambda"] = c.spline_lambda ? json(*c.spline_lambda) : json(nullptr);
  return io::hex(io::fnv1a(j.dump()));
}

std::map<std::string, std::string> hash_outputs(const fs::path& stage_dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(stage_dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(stage_dir)) {
    if (!e.is_regular_file() || e.path().filename() == kManifest) continue;
    out[fs::relative(e.path(), stage_dir).generic_string()] = io::hex(io::hash_file(e.path()));
  }
  return out;
}

struct Manifest {
  std::string stage, config, input;
  std::map<std::string, std::string> outputs;
};

Manifest read_manifest(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  Manifest m;
  std::string word;
  int version = 0;
  in >> word >> version;
  if (word != "bcwave-stage" || version != 1) throw IntegrityError("not a stage manifest: " + path.string());
  std::string key;
  while (in >> key) {
    if (key == "stage") {
      in >> m.stage;
    } else if (key == "config") {
      in >> m.config;
    } else if (key == "input") {
      in >> m.input;
    } else if (key == "output") {
      std::string file, hash;
      in >> file >> hash;
      m.outputs[file] = hash;
    } else {
      throw IntegrityError("unknown manifest key '" + key + "' in " + path.string());
    }
  }
  return m;
}

void write_manifest(const fs::path& path, const Manifest& m) {
  std::ostringstream out;
  out << "bcwave-stage 1\nstage " << m.stage << "\nconfig " << m.config << "\ninput " << m.input << "\n";
  for (const auto& [file, hash] : m.outputs) out << "output " << file << ' ' << hash << "\n";
  io::write_text(path, out.str());
}

std::string upstream_hash(const fs::path& dir, Stage s) {
  if (s == Stage::simulate) return "none";
  const Stage up = static_cast<Stage>(static_cast<int>(s) - 1);
  const fs::path path = dir / stage_name(up) / kManifest;
  if (!fs::exists(path)) {
    throw ConfigError("stage '" + stage_name(s) + "' needs the outputs of '" + stage_name(up) + "' in " + dir.string());
  }
  return io::hex(io::hash_file(path));
}

// Outputs on disk must be exactly the recorded ones.
void verify_outputs(const fs::path& stage_dir, const Manifest& m) {
  const auto now = hash_outputs(stage_dir);
  if (now != m.outputs) {
    throw ProvenanceError("outputs of stage '" + m.stage + "' in " + stage_dir.string() +
                          " no longer match their manifest; rerun with --fresh");
  }
}

void verify_upstream(const fs::path& dir, Stage s) {
  if (s == Stage::simulate) return;
  const Stage up = static_cast<Stage>(static_cast<int>(s) - 1);
  const fs::path up_dir = dir / stage_name(up);
  verify_outputs(up_dir, read_manifest(up_dir / kManifest));
}

BoundaryDistanceTable distance_table(const PipelineConfig& config, const ForwardSetup& setup,
                                     const BasisSpec& basis) {
  std::vector<double> ys = config.ys();
  std::vector<double> xs(basis.locations().begin(), basis.locations().end());
  if (config.medium.kind == "constant") {
    BoundaryDistanceTable t = BoundaryDistanceTable::euclidean(ys, xs);
    t.d /= config.medium.c;
    return t;
  }
  BoundaryDistanceTable t;
  t.d = boundary_distances(setup.field, ys, xs);
  t.centres = std::move(ys);
  t.points = std::move(xs);
  return t;
}

void execute(const PipelineConfig& config, const fs::path& dir, Stage stage) {
  const fs::path out = dir / stage_name(stage);
  const BasisSpec basis(config.basis_params());
  switch (stage) {
    case Stage::simulate: {
      const ForwardSetup setup = forward_setup(config);
      const TraceSet traces = record_ndmap(setup.field, basis, setup.grid, config.receiver_lattice());
      traces.save(out / "traces");
      break;
    }
    case Stage::connect: {
      const TraceSet traces = TraceSet::load(dir / "simulate" / "traces");
      const GramMatrix G(basis);
      const ConnectingMatrix K = assemble_K(traces, basis, G);
      fs::create_directories(out);
      K.save(out / "K.bin");
      break;
    }
    case Stage::caps: {
      const ConnectingMatrix K = ConnectingMatrix::load(dir / "connect" / "K.bin");
      const ForwardSetup setup = forward_setup(config);
      const BoundaryDistanceTable table = distance_table(config, setup, basis);
      const double alpha = config.alpha * K.K.trace() / static_cast<double>(K.size());
      TransformInputs in{&K, nullptr, &basis, &table};
      const CapTable caps = compute_caps(in, config.ys(), config.ss(), config.h, alpha);
      caps.save(out);
      break;
    }
    case Stage::reconstruct: {
      const CapTable caps = CapTable::load(dir / "caps");
      const TraceSet traces = TraceSet::load(dir / "simulate" / "traces");
      const TraceMoments moments = TraceMoments::from(traces);
      const TransformSamples t = transform_from_caps(caps, moments, basis);
      fs::create_directories(out);
      t.write_csv(out / "transform.csv");
      break;
    }
    case Stage::speed: {
      TransformSamples t = TransformSamples::read_csv(dir / "reconstruct" / "transform.csv");
      SplineOptions opts;
      opts.lambda = config.spline_lambda;
      speed_from_transform(t, opts);
      fs::create_directories(out);
      t.write_csv(out / "recon.csv");
      break;
    }
  }
}

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
  if (dynamic_cast<const ProvenanceError*>(&e)) return "provenance";
  if (dynamic_cast<const IntegrityError*>(&e)) return "integrity";
  return "error";
}

}  // namespace

StageReport run_stage(const PipelineConfig& config, const fs::path& dir, Stage stage, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  StageReport report{stage};
  try {
    config.validate();
    fs::create_directories(dir);
    fs::remove(dir / "error.json");
    config.save(dir / "config.json");
    const fs::path out = dir / stage_name(stage);
    const fs::path manifest = out / kManifest;
    const std::string key = stage_key(config, stage);
    const std::string input = upstream_hash(dir, stage);
    verify_upstream(dir, stage);

    bool run = options.fresh || !fs::exists(manifest);
    if (!run) {
      const Manifest m = read_manifest(manifest);
      if (m.config != key) {
        run = true;  // configuration changed: the stage is stale, not corrupt
      } else {
        if (m.input != input) {
          throw ProvenanceError("stage '" + stage_name(stage) + "' was built from different upstream outputs; rerun with --fresh");
        }
        verify_outputs(out, m);
        report.resumed = true;
      }
    }
    if (run) {
      fs::remove_all(out);
      execute(config, dir, stage);
      write_manifest(manifest, {stage_name(stage), key, input, hash_outputs(out)});
    }
  } catch (const std::exception& e) {
    json err = {{"stage", stage_name(stage)}, {"kind", error_kind(e)}, {"message", e.what()}};
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream(dir / "error.json") << err.dump(2) << "\n";
    throw;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<StageReport> run_pipeline(const PipelineConfig& config, const fs::path& dir, const RunOptions& options) {
  std::vector<StageReport> reports;
  bool rerun = options.fresh;
  for (Stage s : kAllStages) {
    reports.push_back(run_stage(config, dir, s, {rerun}));
    rerun = rerun || !reports.back().resumed;
  }
  return reports;
}

// ---------------------------------------------------------------------------

std::vector<fs::path> emit_plots(const fs::path& dir) {
  bool any = false;
  if (fs::exists(dir)) {
    for (Stage s : kAllStages) any = any || fs::exists(dir / stage_name(s) / kManifest);
  }
  if (!any) throw ConfigError("nothing to plot in " + dir.string());
  std::vector<std::string> missing;
  for (const fs::path& p : {dir / "config.json", dir / "speed" / "recon.csv"}) {
    if (!fs::exists(p)) missing.push_back(fs::relative(p, dir).generic_string());
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("missing stage outputs in " + dir.string() + ": " + list);
  }
  const PipelineConfig config = PipelineConfig::load(dir / "config.json");
  const TransformSamples t = TransformSamples::read_csv(dir / "speed" / "recon.csv");
  const SpeedFunction speed = medium_speed(config.medium);
  const fs::path plots = dir / "plots";
  std::vector<fs::path> written;
  auto open = [&](const fs::path& rel) {
    fs::create_directories((plots / rel).parent_path());
    written.push_back(plots / rel);
    std::ofstream f(plots / rel);
    if (!f) throw IntegrityError("cannot write " + (plots / rel).string());
    f.precision(12);
    return f;
  };

  const double ds = std::min(config.s_step, config.h) / 4.0;
  const double s_end = config.s_max + config.h;
  std::vector<GeodesicPath> paths;
  for (double y : t.ys) paths.push_back(trace_geodesic(speed, y, s_end + 2.0 * ds, ds));

  {
    auto f = open("model/speed.csv");
    f << "x1,x2,c\n";
    const double step = std::max(config.dx * 2.0, 0.0125);
    const double x_lo = config.y_min - 0.25, x_hi = config.y_max + 0.25;
    for (double x2 = 0.0; x2 >= -config.T - 1e-12; x2 -= step) {
      for (double x1 = x_lo; x1 <= x_hi + 1e-12; x1 += step) f << x1 << ',' << x2 << ',' << speed({x1, x2}) << '\n';
    }
    auto g = open("model/geodesics.csv");
    g << "y,s,x1,x2\n";
    for (std::size_t i = 0; i < t.ys.size(); ++i) {
      for (std::size_t k = 0; k < paths[i].points.size(); ++k) {
        g << t.ys[i] << ',' << paths[i].s[k] << ',' << paths[i].points[k].x1 << ',' << paths[i].points[k].x2 << '\n';
      }
    }
  }
  {
    auto f = open("coordinates/points.csv");
    f << "y,s,est_x1,est_x2,ref_x1,ref_x2,flags\n";
    for (std::size_t i = 0; i < t.ys.size(); ++i) {
      for (std::size_t j = 0; j < t.ss.size(); ++j) {
        const auto& p = t.at(i, j);
        const Vec2 ref = paths[i].point_at(p.s + t.h / 2.0);
        f << p.y << ',' << p.s << ',' << p.phi1 << ',' << p.phi2 << ',' << ref.x1 << ',' << ref.x2 << ',' << p.flags
          << '\n';
      }
    }
  }
  {
    auto f = open("comparison/points.csv");
    f << "est_x1,est_x2,c_est,c_true,flags\n";
    for (const auto& p : t.points) {
      if (!p.usable()) continue;
      f << p.phi1 << ',' << p.phi2 << ',' << p.c_est << ',' << speed({p.phi1, p.phi2}) << ',' << p.flags << '\n';
    }
  }
  for (std::size_t i = 0; i < t.ys.size(); ++i) {
    std::ostringstream name;
    name << "slices/slice_" << i << ".csv";
    auto f = open(name.str());
    f << "# y=" << t.ys[i] << "\ns,c_est,c_true_at_estimate,c_true_on_geodesic,flags\n";
    for (std::size_t j = 0; j < t.ss.size(); ++j) {
      const auto& p = t.at(i, j);
      const double at_est = p.usable() ? speed({p.phi1, p.phi2}) : std::nan("");
      f << p.s << ',' << p.c_est << ',' << at_est << ',' << speed(paths[i].point_at(p.s + t.h / 2.0)) << ','
        << p.flags << '\n';
    }
  }
  return written;
}

}  // namespace bcwave
