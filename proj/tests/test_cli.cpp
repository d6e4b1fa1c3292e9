#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "minsec/mesh.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* cli_path() { return std::getenv("MINSEC_CLI_PATH"); }

// runs `env <cli> args` with streams captured; returns the exit code
int run_cli(const std::string& env, const std::string& args,
            const fs::path& stdout_file, const fs::path& stderr_file) {
  std::string cmd = env + (env.empty() ? "" : " ") + "\"" +
                    std::string(cli_path()) + "\" " + args + " > \"" +
                    stdout_file.string() + "\" 2> \"" + stderr_file.string() +
                    "\"";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::path("cli_scratch") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const char* kTorusConfig =
    "[surface]\n"
    "preset = flat_torus\n"
    "n = 8\n"
    "m = 8\n"
    "[bundle]\n"
    "euler_number = 0\n"
    "connection = constructed\n"
    "[solver]\n"
    "multistart = 1\n"
    "outer_move_budget = 1\n"
    "max_inner_iterations = 100\n"
    "seed = 7\n";

const char* kSphereConfig =
    "[surface]\n"
    "preset = icosphere\n"
    "subdivisions = 3\n"
    "[bundle]\n"
    "euler_number = 2\n"
    "connection = levi-civita\n"
    "[solver]\n"
    "multistart = 1\n"
    "outer_move_budget = 2\n"
    "max_inner_iterations = 150\n"
    "seed = 7\n"
    "[hcone]\n"
    "radius = 0.6\n"
    "lambdas = 2, 4\n";

} // namespace

TEST_CASE("cli rejects empty and malformed invocations") {
  REQUIRE(cli_path());
  fs::path dir = scratch("argparse");
  CHECK(run_cli("", "", dir / "o", dir / "e") == 2);
  CHECK(run_cli("", "--help", dir / "o", dir / "e") == 0);
  CHECK(slurp(dir / "o").find("run") != std::string::npos);
  CHECK(run_cli("", "no-such-command", dir / "o", dir / "e") == 2);
  CHECK(run_cli("", "run", dir / "o", dir / "e") == 2); // missing config arg
}

TEST_CASE("cli mesh-info prints statistics and flags missing files") {
  REQUIRE(cli_path());
  fs::path dir = scratch("meshinfo");
  minsec::SurfaceMesh m = minsec::make_icosphere(1, 1.0);
  {
    std::ofstream out(dir / "sphere.mesh");
    minsec::save_mesh(m, out);
  }
  CHECK(run_cli("", "mesh-info \"" + (dir / "sphere.mesh").string() + "\"",
                dir / "o", dir / "e") == 0);
  std::string text = slurp(dir / "o");
  CHECK(text.find("vertices:  42") != std::string::npos);
  CHECK(text.find("closed:    yes") != std::string::npos);
  CHECK(text.find("genus:     0") != std::string::npos);
  CHECK(run_cli("", "mesh-info \"" + (dir / "missing.mesh").string() + "\"",
                dir / "o", dir / "e") == 2);
  CHECK(slurp(dir / "e").find("error:") != std::string::npos);
}

TEST_CASE("cli verify-oracles writes its report and honors the tolerance") {
  REQUIRE(cli_path());
  fs::path dir = scratch("oracles");
  std::string env = "MINSEC_OUTPUT_DIR=\"" + dir.string() + "\"";
  CHECK(run_cli(env, "verify-oracles", dir / "o", dir / "e") == 0);
  CHECK(slurp(dir / "o").find("all oracles passed") != std::string::npos);
  REQUIRE(fs::exists(dir / "oracles.json"));
  json j = json::parse(slurp(dir / "oracles.json"));
  CHECK(j["oracles"].size() >= 3);
  for (const auto& r : j["oracles"]) CHECK(r["pass"].get<bool>());

  // unattainable tolerance: honest failure, exit code 1
  CHECK(run_cli(env + " MINSEC_ORACLE_TOL=1e-16", "verify-oracles", dir / "o",
                dir / "e") == 1);
  CHECK(slurp(dir / "e").find("oracle mismatch") != std::string::npos);

  // malformed tolerance: usage error
  CHECK(run_cli(env + " MINSEC_ORACLE_TOL=abc", "verify-oracles", dir / "o",
                dir / "e") == 2);
}

TEST_CASE("cli run produces the full output set on a flat torus") {
  REQUIRE(cli_path());
  fs::path dir = scratch("torusrun");
  write_file(dir / "run.ini", kTorusConfig);
  std::string env = "MINSEC_OUTPUT_DIR=\"" + (dir / "out").string() + "\"";
  CHECK(run_cli(env, "run \"" + (dir / "run.ini").string() + "\"", dir / "o",
                dir / "e") == 0);
  for (const char* name :
       {"report.json", "section.csv", "singularities.csv", "energy_trace.csv",
        "profile.csv"})
    CHECK(fs::exists(dir / "out" / name));
  json j = json::parse(slurp(dir / "out" / "report.json"));
  CHECK(j["volume"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(j["topology"]["singularity_count"].get<int>() == 0);
  CHECK(j["topology"]["orientable"].get<bool>());
  CHECK(j["singularities"].empty());
  CHECK(j["threads"].get<int>() == 1);
}

TEST_CASE("cli run reports the singularity and its cone analysis") {
  REQUIRE(cli_path());
  fs::path dir = scratch("sphererun");
  write_file(dir / "run.ini", kSphereConfig);
  std::string env = "MINSEC_OUTPUT_DIR=\"" + (dir / "out").string() + "\"" +
                    " MINSEC_THREADS=2";
  CHECK(run_cli(env, "run \"" + (dir / "run.ini").string() + "\"", dir / "o",
                dir / "e") == 0);
  json j = json::parse(slurp(dir / "out" / "report.json"));
  CHECK(j["threads"].get<int>() == 2);
  CHECK(j["topology"]["singularity_count"].get<int>() == 1);
  REQUIRE(j["topology"]["indices"].size() == 1);
  CHECK(j["topology"]["indices"][0].get<int>() == 2);
  CHECK(j["volume"].get<double>() > 4.0 * 3.14159);
  REQUIRE(j["hcones"].size() == 1);
  CHECK_FALSE(j["hcones"][0].contains("error"));
  CHECK(j["hcones"][0]["k"].get<int>() == 2);
  CHECK(j["hcones"][0]["rms"].size() == 2);

  std::string sing = slurp(dir / "out" / "singularities.csv");
  CHECK(sing.find("face,index,x,y,z,member_faces") != std::string::npos);
  CHECK(sing.find("\n") != std::string::npos);
  std::string prof = slurp(dir / "out" / "profile.csv");
  CHECK(prof.find("singularity_face,t,mass,ratio") != std::string::npos);
}

TEST_CASE("cli run is reproducible modulo the timestamp") {
  REQUIRE(cli_path());
  fs::path dir = scratch("repeat");
  write_file(dir / "run.ini", kTorusConfig);
  for (const char* sub : {"a", "b"}) {
    std::string env =
        "MINSEC_OUTPUT_DIR=\"" + (dir / sub).string() + "\"";
    CHECK(run_cli(env, "run \"" + (dir / "run.ini").string() + "\"", dir / "o",
                  dir / "e") == 0);
  }
  CHECK(slurp(dir / "a" / "section.csv") == slurp(dir / "b" / "section.csv"));
  auto strip = [](const std::string& text) {
    std::stringstream in(text), out;
    std::string line;
    while (std::getline(in, line))
      if (line.find("\"timestamp\"") == std::string::npos) out << line << "\n";
    return out.str();
  };
  CHECK(strip(slurp(dir / "a" / "report.json")) ==
        strip(slurp(dir / "b" / "report.json")));
}

TEST_CASE("cli run surfaces config and environment errors") {
  REQUIRE(cli_path());
  fs::path dir = scratch("badruns");
  std::string env = "MINSEC_OUTPUT_DIR=\"" + (dir / "out").string() + "\"";

  CHECK(run_cli(env, "run \"" + (dir / "nope.ini").string() + "\"", dir / "o",
                dir / "e") == 2);
  CHECK(slurp(dir / "e").find("cannot open") != std::string::npos);

  write_file(dir / "odd.ini",
             "[surface]\npreset = flat_torus\n[bundle]\neuler_number = 3\n");
  CHECK(run_cli(env, "run \"" + (dir / "odd.ini").string() + "\"", dir / "o",
                dir / "e") == 2);
  CHECK(slurp(dir / "e").find("even") != std::string::npos);

  write_file(dir / "unknown.ini",
             "[surface]\npreset = flat_torus\nwhatever = 3\n");
  CHECK(run_cli(env, "run \"" + (dir / "unknown.ini").string() + "\"",
                dir / "o", dir / "e") == 2);
  CHECK(slurp(dir / "e").find("unknown key") != std::string::npos);

  write_file(dir / "mismatch.ini",
             "[surface]\npreset = icosphere\nsubdivisions = 1\n"
             "[bundle]\neuler_number = 0\nconnection = levi-civita\n");
  CHECK(run_cli(env, "run \"" + (dir / "mismatch.ini").string() + "\"",
                dir / "o", dir / "e") == 2);
  CHECK(slurp(dir / "e").find("does not match") != std::string::npos);

  write_file(dir / "tiny.ini", kTorusConfig);
  CHECK(run_cli(env + " MINSEC_THREADS=0",
                "run \"" + (dir / "tiny.ini").string() + "\"", dir / "o",
                dir / "e") == 2);
  CHECK(slurp(dir / "e").find("MINSEC_THREADS") != std::string::npos);
}
