#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "kurv/cli.hpp"
#include "kurv/report.hpp"

using namespace kurv;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = 0;
  std::string out, err;
  json envelope;  // parsed when --json was passed and stdout held JSON
};

RunResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  RunResult r;
  r.code = cli::run_command(args, out, err);
  r.out = out.str();
  r.err = err.str();
  if (!r.out.empty() && r.out.front() == '{')
    r.envelope = json::parse(r.out);
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() /
                   ("kurv_cli_test_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("fnv1a64 matches the reference vectors") {
  CHECK(report::fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(report::fnv1a64_hex("a") == "af63dc4c8601ec8c");
  CHECK(report::fnv1a64_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("report envelope round-trips losslessly") {
  report::ReportEnvelope env;
  env.command = "certify";
  env.params = {{"model", "x"}, {"tol", 0.1}, {"tiny", 1e-300}};
  env.seeds = {11, 0xffffffffffffffffULL};
  env.payload = {{"values", {1.0, -0.0, 0.30000000000000004}},
                 {"hole", nullptr}};
  env.exit_status = 2;
  report::finalize(env);
  CHECK_FALSE(env.timestamp.empty());
  CHECK(env.determinism_hash.size() == 16);

  const json j = env;
  const auto back = json::parse(j.dump()).get<report::ReportEnvelope>();
  CHECK(back.schema_version == env.schema_version);
  CHECK(back.command == env.command);
  CHECK(back.params == env.params);
  CHECK(back.seeds == env.seeds);
  CHECK(back.timestamp == env.timestamp);
  CHECK(back.elapsed_seconds == env.elapsed_seconds);
  CHECK(back.payload == env.payload);
  CHECK(back.exit_status == env.exit_status);
  CHECK(back.determinism_hash == env.determinism_hash);
  CHECK(json(back).dump() == j.dump());
}

TEST_CASE("determinism hash ignores the volatile fields") {
  report::ReportEnvelope a, b;
  a.command = b.command = "analyze";
  a.payload = b.payload = {{"x", 1.5}};
  a.timestamp = "2001-01-01T00:00:00Z";
  b.timestamp = "2031-12-31T23:59:59Z";
  b.elapsed_seconds = 55.0;
  report::finalize(a);
  report::finalize(b);
  CHECK(report::canonical_form(a) == report::canonical_form(b));
  CHECK(a.determinism_hash == b.determinism_hash);

  b.payload["x"] = 1.5000000000000002;
  report::finalize(b);
  CHECK(a.determinism_hash != b.determinism_hash);
}

TEST_CASE("models list reports the whole catalog") {
  const auto r = run({"--json", "models", "list"});
  REQUIRE(r.code == 0);
  REQUIRE(r.envelope.contains("payload"));
  const auto& ms = r.envelope["payload"]["models"];
  REQUIRE(ms.size() >= 6);
  std::vector<std::string> names;
  for (const auto& m : ms) names.push_back(m["name"]);
  for (const char* want :
       {"product_poincare", "translation_family", "moebius_family",
        "sheared_poincare", "flat", "random_jet"})
    CHECK(std::find(names.begin(), names.end(), want) != names.end());

  const auto plain = run({"models", "list"});
  CHECK(plain.code == 0);
  CHECK(plain.out.find("sheared_poincare") != std::string::npos);
}

TEST_CASE("certify: product bisectional pairs stay at zero, exit 2") {
  const auto r = run({"--json", "certify", "--model", "product_poincare",
                      "--quantity", "hbc", "--k-min", "1", "--k-max", "100",
                      "--samples", "400", "--points", "2", "--seed", "5"});
  CHECK(r.code == 2);
  const auto& cert = r.envelope["payload"]["certificate"];
  CHECK(cert["certified"] == false);
  CHECK(cert["k0"].is_null());
  CHECK(cert["sample_mode"] == "pairs");
  for (const auto& s : cert["sup_per_k"])
    CHECK(std::abs(s.get<double>()) <= 1e-9);
  CHECK(r.envelope["exit_status"] == 2);
}

TEST_CASE("certify: product sectional certifies at the window start") {
  const auto r = run({"--json", "certify", "--model", "product_poincare",
                      "--quantity", "hsc", "--k-min", "1", "--k-max", "64",
                      "--samples", "400", "--points", "2", "--seed", "5"});
  CHECK(r.code == 0);
  const auto& cert = r.envelope["payload"]["certificate"];
  CHECK(cert["certified"] == true);
  CHECK(cert["k0"].get<double>() == 1.0);
  CHECK(cert["empirical"] == true);
}

TEST_CASE("identical invocations produce identical envelopes") {
  const std::vector<std::string> argv = {
      "--json",    "certify", "--model",  "sheared_poincare",
      "--quantity", "hsc",    "--k-min",  "1",
      "--k-max",   "16",      "--samples", "300",
      "--points",  "2",       "--seed",   "11"};
  const auto a = run(argv);
  const auto b = run(argv);
  REQUIRE(a.code == 0);
  CHECK(a.envelope["determinism_hash"] == b.envelope["determinism_hash"]);
  CHECK(a.envelope["payload"].dump() == b.envelope["payload"].dump());

  auto argv2 = argv;
  argv2.back() = "12";
  const auto c = run(argv2);
  CHECK(a.envelope["determinism_hash"] != c.envelope["determinism_hash"]);
}

TEST_CASE("the parameter echo reproduces a run bit-identically") {
  const auto first =
      run({"--json", "certify", "--model", "sheared_poincare", "--quantity",
           "hsc", "--k-min", "2", "--k-max", "32", "--samples", "250",
           "--points", "2", "--seed", "77", "--tol", "1e-4"});
  REQUIRE(first.code == 0);
  const auto& p = first.envelope["params"];

  std::vector<std::string> argv = {"--json", "certify"};
  for (const char* key : {"model", "quantity", "k-min", "k-max", "samples",
                          "points", "seed", "tol"}) {
    std::string jkey(key);
    std::replace(jkey.begin(), jkey.end(), '-', '_');
    const auto& v = p.at(jkey);
    argv.push_back("--" + std::string(key));
    argv.push_back(v.is_string() ? v.get<std::string>() : v.dump());
  }
  const auto second = run(argv);
  CHECK(second.envelope["determinism_hash"] ==
        first.envelope["determinism_hash"]);
  CHECK(second.envelope["payload"].dump() == first.envelope["payload"].dump());
}

TEST_CASE("ke solve writes the grid files") {
  TempDir tmp;
  const auto r = run({"--json", "--out", tmp.path.string(), "ke", "solve",
                      "--radius", "0.5", "--grid", "33"});
  REQUIRE(r.code == 0);
  CHECK(r.envelope["payload"]["residual"].get<double>() <= 1e-10);
  CHECK(r.envelope["payload"]["iterations"].get<int>() <= 15);

  REQUIRE(fs::exists(tmp.path / "liouville.json"));
  REQUIRE(fs::exists(tmp.path / "liouville.csv"));
  std::ifstream jf(tmp.path / "liouville.json");
  const auto stored = json::parse(jf);
  CHECK(stored["determinism_hash"] == r.envelope["determinism_hash"]);

  std::ifstream cf(tmp.path / "liouville.csv");
  std::string line;
  int rows = -1;  // minus the header
  while (std::getline(cf, line))
    if (!line.empty()) ++rows;
  CHECK(rows == r.envelope["payload"]["interior_nodes"].get<int>());
}

TEST_CASE("config file presets flags, explicit flags win") {
  TempDir tmp;
  const auto cfg = tmp.path / "cfg.json";
  std::ofstream(cfg) << R"({"seed": 7, "samples": 123, "nonsense": true})";

  const auto preset = run({"--config", cfg.string(), "--json", "griffiths",
                           "--model", "flat"});
  REQUIRE(preset.code == 0);
  CHECK(preset.envelope["params"]["seed"].get<std::uint64_t>() == 7);
  CHECK(preset.envelope["params"]["samples"].get<int>() == 123);

  const auto overridden = run({"--config", cfg.string(), "--json",
                               "griffiths", "--model", "flat", "--seed",
                               "99"});
  CHECK(overridden.envelope["params"]["seed"].get<std::uint64_t>() == 99);
  CHECK(overridden.envelope["params"]["samples"].get<int>() == 123);

  const auto bad = run({"--config", (tmp.path / "absent.json").string(),
                        "models", "list"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("config") != std::string::npos);
}

TEST_CASE("verify identities passes on every builtin model") {
  // random_jet exercises the k lift: its omega_k only turns positive well
  // above k = 1, and the oracle/reality checks invert the metric
  for (const char* name : {"product_poincare", "translation_family",
                           "moebius_family", "sheared_poincare", "flat",
                           "random_jet"}) {
    const auto r = run({"--json", "verify", "identities", "--model", name,
                        "--points", "5"});
    CHECK(r.code == 0);
    CHECK(r.envelope["payload"]["all_pass"] == true);
    for (const auto& c : r.envelope["payload"]["checks"])
      if (c["enforced"] == true) CHECK(c["pass"] == true);
  }
}

TEST_CASE("analyze reports blocks, positivity and named directions") {
  const auto r = run({"--json", "analyze", "--model", "sheared_poincare",
                      "--point", "(0.1,-0.05) ; (-0.2,0.3)", "--k", "3"});
  REQUIRE(r.code == 0);
  const auto& pl = r.envelope["payload"];
  CHECK(pl["omega"]["horizontal_positive"] == true);
  CHECK(pl["omega"]["vertical_positive"] == true);
  CHECK(pl["directions"]["hsc_vertical"].get<double>() < 0.0);
  CHECK(pl["directions"]["hsc_horizontal"].get<double>() < 0.0);
  CHECK(pl["oracle_gap"].get<double>() <= 1e-10);
  CHECK(pl["block_max"].size() == 7);
}

TEST_CASE("asymptotics emits the deviation table") {
  TempDir tmp;
  const auto r = run({"--json", "--out", tmp.path.string(), "asymptotics",
                      "--model", "product_poincare", "--point", "",
                      "--k-grid", "geometric:100:1e6:9"});
  REQUIRE(r.code == 0);
  CHECK(r.envelope["payload"]["pass"] == true);
  CHECK(r.envelope["payload"]["k_grid"].size() == 9);
  CHECK(r.envelope["payload"]["laws"]["hh"]["exact"] == true);

  std::ifstream cf(tmp.path / "asymptotics.csv");
  std::string line;
  int rows = -1;
  while (std::getline(cf, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 9);
}

TEST_CASE("ke identities surfaces the precondition gate") {
  const auto good = run({"--json", "ke", "identities", "--model",
                         "translation_family", "--points", "8"});
  REQUIRE(good.code == 0);
  CHECK(good.envelope["payload"]["det"]["max_residual"].get<double>() <=
        1e-13);
  CHECK(good.envelope["payload"]["trace"]["gated_off"] == 0);
  CHECK(good.envelope["payload"]["trace"]["max_residual_checked"]
            .get<double>() <= 1e-8);

  const auto gated = run({"--json", "ke", "identities", "--model",
                          "sheared_poincare", "--points", "4", "--samples",
                          "500"});
  REQUIRE(gated.code == 0);
  CHECK(gated.envelope["payload"]["trace"]["gated_off"] == 4);
  CHECK(gated.envelope["payload"]["trace"]["max_residual_checked"].is_null());
  CHECK(gated.envelope["payload"]["corollary"]["verdict"] == "negative");
}

TEST_CASE("usage and runtime errors exit 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"certify", "--model", "no_such_model"}).code == 1);
  CHECK(run({"certify", "--model", "flat", "--quantity", "sectional"}).code ==
        1);
  CHECK(run({"analyze", "--model", "flat", "--point", "bogus"}).code == 1);
  CHECK(run({"analyze", "--model", "flat", "--param", "m=two"}).code == 1);
  CHECK(run({"asymptotics", "--model", "flat", "--k-grid",
             "geometric:10:1"}).code == 1);
  CHECK(run({"ke", "solve", "--radius", "1.5"}).code == 1);

  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("certify") != std::string::npos);
}
