#include "minsec/runner.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "minsec/energy.hpp"
#include "minsec/oracle.hpp"
#include "minsec/solver.hpp"

namespace minsec {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string timestamp_utc() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int requested_threads() {
  const char* env = std::getenv("MINSEC_THREADS");
  if (!env) return 1;
  char* end = nullptr;
  long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1)
    fail(ErrorCode::InvalidArgument,
         "MINSEC_THREADS must be a positive integer");
  return static_cast<int>(n);
}

std::filesystem::path resolve_output_dir(const RunConfig& cfg) {
  const char* env = std::getenv("MINSEC_OUTPUT_DIR");
  std::filesystem::path dir = env ? env : cfg.output_directory.c_str();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    fail(ErrorCode::Io, "cannot create output directory: " + dir.string());
  return dir;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) fail(ErrorCode::Io, "cannot open for writing: " + p.string());
  return out;
}

SurfaceMesh build_surface(const SurfaceSpec& spec) {
  switch (spec.kind) {
    case SurfaceSpec::Kind::Icosphere:
      return make_icosphere(spec.subdivisions, spec.radius);
    case SurfaceSpec::Kind::FlatTorus:
      return make_flat_torus(spec.n, spec.m, spec.a, spec.b);
    case SurfaceSpec::Kind::Disk:
      return make_disk(spec.rings, spec.radius).mesh;
    case SurfaceSpec::Kind::File:
      return load_mesh_file(spec.path);
  }
  fail(ErrorCode::InvalidArgument, "unknown surface preset");
}

Connection build_connection(const RunConfig& cfg, const SurfaceMesh& mesh) {
  switch (cfg.connection) {
    case ConnectionKind::Constructed:
      return make_connection(mesh, cfg.euler_number, cfg.fiber_length);
    case ConnectionKind::LeviCivita: {
      Connection conn = levi_civita_connection(mesh, cfg.fiber_length);
      if (conn.euler != cfg.euler_number)
        fail(ErrorCode::InvalidArgument,
             "euler_number " + std::to_string(cfg.euler_number) +
                 " does not match the metric connection's " +
                 std::to_string(conn.euler));
      return conn;
    }
    case ConnectionKind::File: {
      std::ifstream in(cfg.connection_path);
      if (!in)
        fail(ErrorCode::Io,
             "cannot open connection file: " + cfg.connection_path);
      Connection conn = load_connection(mesh, in);
      if (conn.euler != cfg.euler_number)
        fail(ErrorCode::InvalidArgument,
             "euler_number " + std::to_string(cfg.euler_number) +
                 " does not match the connection file's " +
                 std::to_string(conn.euler));
      return conn;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown connection kind");
}

const char* preset_name(SurfaceSpec::Kind kind) {
  switch (kind) {
    case SurfaceSpec::Kind::Icosphere: return "icosphere";
    case SurfaceSpec::Kind::FlatTorus: return "flat_torus";
    case SurfaceSpec::Kind::Disk: return "disk";
    case SurfaceSpec::Kind::File: return "file";
  }
  return "?";
}

const char* connection_name(ConnectionKind kind) {
  switch (kind) {
    case ConnectionKind::Constructed: return "constructed";
    case ConnectionKind::LeviCivita: return "levi-civita";
    case ConnectionKind::File: return "file";
  }
  return "?";
}

} // namespace

void run_pipeline(const RunConfig& cfg) {
  int threads = requested_threads();
  std::filesystem::path dir = resolve_output_dir(cfg);

  SurfaceMesh mesh = build_surface(cfg.surface);
  Connection conn = build_connection(cfg, mesh);

  SearchResult search = outer_search(conn, cfg.solver);

  EvalOptions opts;
  opts.refinement_depth = cfg.solver.refinement_depth;
  EnergyReport energies =
      evaluate_energies(search.section, cfg.energy_lambdas, opts);

  struct HConeEntry {
    HConeReport report;
    std::string error;
  };
  std::vector<HConeEntry> hcones;
  std::vector<std::pair<int, std::vector<ProfilePoint>>> profiles;
  std::vector<double> radii;
  for (int i = 1; i <= 8; ++i) radii.push_back(i * cfg.hcone_radius / 8.0);
  for (const SingularityRecord& sing : search.singularities) {
    HConeEntry entry;
    try {
      entry.report =
          extract_hcone(search.section, sing, cfg.hcone_lambdas,
                        cfg.hcone_radius);
    } catch (const Error& e) {
      entry.report.singularity_face = sing.face;
      entry.error = e.what();
    }
    hcones.push_back(std::move(entry));
    try {
      profiles.emplace_back(
          sing.face,
          mass_ratio_profile(search.section, sing.face, radii, opts));
    } catch (const Error&) {
      // radius reaches past the mesh; the profile is simply omitted
    }
  }

  {
    std::ofstream out = open_out(dir / "section.csv");
    save_section(search.section, out);
  }
  {
    std::ofstream out = open_out(dir / "singularities.csv");
    out << "face,index,x,y,z,member_faces\n";
    for (const SingularityRecord& s : search.singularities) {
      out << s.face << "," << s.index << "," << fmt17(s.position.x()) << ","
          << fmt17(s.position.y()) << "," << fmt17(s.position.z()) << ",";
      for (size_t i = 0; i < s.member_faces.size(); ++i)
        out << (i ? ";" : "") << s.member_faces[i];
      out << "\n";
    }
  }
  {
    std::ofstream out = open_out(dir / "energy_trace.csv");
    out << "iteration,energy\n";
    for (const TraceEntry& t : search.trace)
      out << t.iteration << "," << fmt17(t.energy) << "\n";
  }
  {
    std::ofstream out = open_out(dir / "profile.csv");
    out << "singularity_face,t,mass,ratio\n";
    for (const auto& [face, points] : profiles)
      for (const ProfilePoint& p : points)
        out << face << "," << fmt17(p.t) << "," << fmt17(p.mass) << ","
            << fmt17(p.ratio) << "\n";
  }

  ordered_json j;
  j["timestamp"] = timestamp_utc();
  j["threads"] = threads;
  j["config"] = {{"surface", preset_name(cfg.surface.kind)},
                 {"connection", connection_name(cfg.connection)},
                 {"euler_number", cfg.euler_number},
                 {"fiber_length", conn.fiber_length},
                 {"multistart", cfg.solver.multistart},
                 {"seed", cfg.solver.seed}};
  j["volume"] = search.volume;
  j["topology"] = {{"euler", search.topology.euler},
                   {"genus", search.topology.genus},
                   {"singularity_count", search.topology.singularity_count},
                   {"indices", search.topology.indices},
                   {"chi", search.topology.chi},
                   {"orientable", search.topology.orientable}};
  j["energy"] = {{"volume", energies.volume},
                 {"twisting", energies.twisting},
                 {"singular_faces", energies.singular_faces},
                 {"refinement_depth", energies.refinement_depth}};
  j["energy"]["lambda_table"] = ordered_json::array();
  for (const LambdaEntry& e : energies.lambda_table)
    j["energy"]["lambda_table"].push_back(
        {{"lambda", e.lambda}, {"value", e.value}});
  j["singularities"] = ordered_json::array();
  for (const SingularityRecord& s : search.singularities)
    j["singularities"].push_back(
        {{"face", s.face},
         {"index", s.index},
         {"position", {s.position.x(), s.position.y(), s.position.z()}},
         {"member_faces", s.member_faces}});
  j["starts"] = ordered_json::array();
  for (const StartSummary& s : search.starts) {
    ordered_json js = {{"start", s.start},
                       {"accepted_moves", s.accepted_moves},
                       {"singularities", s.singularities}};
    if (std::isfinite(s.volume)) js["volume"] = s.volume;
    else js["volume"] = nullptr;
    j["starts"].push_back(std::move(js));
  }
  j["hcones"] = ordered_json::array();
  for (const HConeEntry& h : hcones) {
    ordered_json jh;
    jh["singularity_face"] = h.report.singularity_face;
    if (!h.error.empty()) {
      jh["error"] = h.error;
    } else {
      jh["radius"] = h.report.radius;
      jh["lambdas"] = h.report.lambdas;
      jh["k"] = h.report.k;
      jh["rms"] = h.report.rms;
      jh["grid_size"] = h.report.grid_size;
    }
    j["hcones"].push_back(std::move(jh));
  }

  std::ofstream out = open_out(dir / "report.json");
  out << j.dump(2) << "\n";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
    case ErrorCode::Io:
      return 2;
    case ErrorCode::NonManifold:
    case ErrorCode::InconsistentOrientation:
    case ErrorCode::Inconsistency:
      return 3;
  }
  return 3;
}

namespace {

template <class Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

} // namespace

int run_command(const std::string& config_path) {
  return guarded([&]() {
    RunConfig cfg = load_config_file(config_path);
    run_pipeline(cfg);
    return 0;
  });
}

int verify_oracles_command() {
  return guarded([&]() {
    double tol = 1e-8;
    if (const char* env = std::getenv("MINSEC_ORACLE_TOL")) {
      char* end = nullptr;
      tol = std::strtod(env, &end);
      if (end == env || *end != '\0' || !(tol > 0.0))
        fail(ErrorCode::InvalidArgument,
             "MINSEC_ORACLE_TOL must be a positive number");
    }
    std::vector<OracleResult> results = verify_all_oracles(tol);

    std::printf("%-20s %16s %16s %16s %7s  %s\n", "oracle", "analytic",
                "quadrature", "discrete", "order", "status");
    bool all_pass = true;
    for (const OracleResult& r : results) {
      std::printf("%-20s %16.10g %16.10g %16.10g %7.2f  %s\n", r.name.c_str(),
                  r.analytic, r.quadrature, r.discrete, r.order,
                  r.pass ? "PASS" : "FAIL");
      if (!r.pass) std::printf("  %s\n", r.detail.c_str());
      all_pass = all_pass && r.pass;
    }

    const char* env = std::getenv("MINSEC_OUTPUT_DIR");
    std::filesystem::path dir = env ? env : ".";
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
      fail(ErrorCode::Io, "cannot create output directory: " + dir.string());
    ordered_json j;
    j["timestamp"] = timestamp_utc();
    j["tolerance"] = tol;
    j["oracles"] = ordered_json::array();
    for (const OracleResult& r : results)
      j["oracles"].push_back({{"name", r.name},
                              {"analytic", r.analytic},
                              {"quadrature", r.quadrature},
                              {"discrete", r.discrete},
                              {"order", r.order},
                              {"pass", r.pass},
                              {"detail", r.detail}});
    std::ofstream out = open_out(dir / "oracles.json");
    out << j.dump(2) << "\n";

    if (!all_pass) {
      std::cerr << "oracle mismatch\n";
      return 1;
    }
    std::printf("all oracles passed\n");
    return 0;
  });
}

int mesh_info_command(const std::string& mesh_path) {
  return guarded([&]() {
    SurfaceMesh mesh = load_mesh_file(mesh_path);
    double min_len = mesh.edge_length.minCoeff();
    double max_len = mesh.edge_length.maxCoeff();
    std::printf("vertices:  %d\n", mesh.vertex_count());
    std::printf("edges:     %d\n", mesh.edge_count());
    std::printf("faces:     %d\n", mesh.face_count());
    std::printf("euler:     %d\n", mesh.euler_characteristic());
    std::printf("genus:     %d\n", mesh.genus);
    std::printf("closed:    %s\n", mesh.closed ? "yes" : "no");
    std::printf("area:      %.10g\n", mesh.total_area());
    std::printf("edge len:  [%.10g, %.10g]\n", min_len, max_len);
    return 0;
  });
}

} // namespace minsec
