#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "robctl/cli.hpp"
#include "robctl/config.hpp"

using namespace robctl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("robctl_unit_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Run {
  int code;
  std::string out, err;
};

Run invoke(const Scenario& s) {
  std::ostringstream o, e;
  const int c = run(s, o, e);
  return {c, o.str(), e.str()};
}

std::string write_config(const TempDir& d, const std::string& name, const std::string& text) {
  const fs::path p = d.path / name;
  write_atomic(p, text);
  return p.string();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("sha256 known answers") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  }

  TEST_CASE("reference configs round trip") {
    for (const std::string m : {"merton", "heston"}) {
      const ModelConfig c = parse_config(reference_config_text(m));
      CHECK(model_name(c) == m);
      CHECK(to_json(c).dump(2) + "\n" == reference_config_text(m));
    }
    CHECK_THROWS(reference_config_text("black-scholes"));
  }

  TEST_CASE("config errors name the fields") {
    auto fields_of = [](const std::string& text) {
      try {
        parse_config(text);
      } catch (const ConfigError& e) {
        return e.fields;
      }
      return std::vector<std::string>{};
    };
    json j = json::parse(reference_config_text("heston"));
    j.erase("kappa");
    j["extra"] = 1;
    j["rho"] = "half";
    const auto f = fields_of(j.dump());
    REQUIRE(f.size() == 3);
    auto has = [&](const std::string& key) {
      for (const auto& s : f)
        if (s.rfind(key + ":", 0) == 0) return true;
      return false;
    };
    CHECK(has("kappa"));
    CHECK(has("extra"));
    CHECK(has("rho"));
    CHECK_FALSE(fields_of("{").empty());
    CHECK_FALSE(fields_of(R"({"model":"sabr"})").empty());
    CHECK_FALSE(fields_of("[1,2]").empty());
  }

  TEST_CASE("atomic writes") {
    TempDir d;
    const fs::path p = d.path / "out.txt";
    write_atomic(p, "first");
    write_atomic(p, "second");
    CHECK(read_file(p) == "second");
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(d.path)) ++n;
    CHECK(n == 1);
    CHECK_THROWS_AS(read_file(d.path / "missing.json"), ConfigError);
  }

  TEST_CASE("seed precedence") {
    ::unsetenv("RCTL_SEED");
    CHECK(resolve_seed(std::nullopt) == 42);
    ::setenv("RCTL_SEED", "9", 1);
    CHECK(resolve_seed(std::nullopt) == 9);
    CHECK(resolve_seed(5) == 5);
    ::setenv("RCTL_SEED", "nine", 1);
    CHECK_THROWS_AS(resolve_seed(std::nullopt), ConfigError);
    ::unsetenv("RCTL_SEED");
  }

  TEST_CASE("closed-form output") {
    TempDir d;
    Scenario s;
    s.command = "closed-form";
    s.config = write_config(d, "h.json", reference_config_text("heston"));
    s.grid = "0:1:3,x1,p0.04";
    const Run r = invoke(s);
    REQUIRE(r.code == kOk);
    const json j = json::parse(r.out);
    CHECK(j["meta"]["command"] == "closed-form");
    CHECK(j["meta"]["model"] == "heston");
    CHECK(j["meta"]["config_sha256"] == sha256_hex(reference_config_text("heston")));
    CHECK(j["meta"]["version"] == version());
    CHECK(j["result"]["rows"].size() == 3);
    CHECK(j["result"]["rows"][0]["W"].get<double>() == doctest::Approx(-0.95346402378207585));

    s.format = "csv";
    const Run c = invoke(s);
    CHECK(c.code == kOk);
    CHECK(c.out.rfind("# robctl ", 0) == 0);
  }

  TEST_CASE("exit codes and error bodies") {
    TempDir d;
    Scenario s;
    s.command = "closed-form";
    s.config = write_config(d, "bad.json", R"({"model":"merton"})");
    Run r = invoke(s);
    CHECK(r.code == kValidation);
    CHECK(r.out.empty());
    const json e = json::parse(r.err);
    CHECK(e["error"]["exit_code"] == 2);
    CHECK_FALSE(e["error"]["fields"].empty());

    s.config = (d.path / "missing.json").string();
    CHECK(invoke(s).code == kValidation);

    // Feller violation is a validation failure, not a numeric one
    json h = json::parse(reference_config_text("heston"));
    h["sigma"] = 1.0;
    s.config = write_config(d, "feller.json", h.dump());
    CHECK(invoke(s).code == kValidation);

    // too few outer iterations to converge
    Scenario f;
    f.command = "fixed-point";
    f.config = write_config(d, "h.json", reference_config_text("heston"));
    f.nt = 20;
    f.nv = 10;
    f.max_iters = 1;
    f.tol = 1e-14;
    r = invoke(f);
    CHECK(r.code == kNumeric);
    CHECK(json::parse(r.err)["error"]["exit_code"] == 4);

    // a small run is fine; a single path is not
    Scenario m;
    m.command = "simulate";
    m.config = write_config(d, "m.json", reference_config_text("merton"));
    m.paths = 2000;
    m.steps = 50;
    CHECK(invoke(m).code == kOk);
    m.paths = 1;
    CHECK(invoke(m).code == kValidation);

    Scenario u;
    u.command = "moments";
    u.config = f.config;
    u.which = "nope";
    CHECK(invoke(u).code == kValidation);
  }

  TEST_CASE("simulate is reproducible and writes files atomically") {
    TempDir d;
    Scenario s;
    s.command = "simulate";
    s.config = write_config(d, "h.json", reference_config_text("heston"));
    s.paths = 2000;
    s.steps = 40;
    s.seed = 11;
    s.output = (d.path / "a.json").string();
    s.dump = (d.path / "paths.bin").string();
    REQUIRE(invoke(s).code == kOk);
    s.output = (d.path / "b.json").string();
    s.threads = 3;
    REQUIRE(invoke(s).code == kOk);
    CHECK(read_file(d.path / "a.json") == read_file(d.path / "b.json"));
    CHECK(read_file(d.path / "paths.bin").substr(0, 4) == "RCTL");
    const json side = json::parse(read_file(d.path / "paths.bin.json"));
    CHECK(side.contains("meta"));
    const json a = json::parse(read_file(d.path / "a.json"));
    CHECK(a["meta"]["seed"] == 11);
    CHECK(std::abs(a["result"]["z_score"].get<double>()) <= 3);
  }

  TEST_CASE("plot data") {
    TempDir d;
    Scenario s;
    s.command = "closed-form";
    s.config = write_config(d, "h.json", reference_config_text("heston"));
    s.output = (d.path / "cf.json").string();
    REQUIRE(invoke(s).code == kOk);
    const json j = json::parse(read_file(s.output));
    const std::string csv = emit_plot_data(j, "g3");
    CHECK(csv.find("\nt,g3,riccati_residual\n") != std::string::npos);
    CHECK_THROWS_AS(emit_plot_data(j, "history"), ConfigError);
    CHECK_THROWS_AS(emit_plot_data(j, "saddle"), ConfigError);
    CHECK_THROWS_AS(emit_plot_data(json::object(), "g3"), ConfigError);

    Scenario p;
    p.command = "plot-data";
    p.input = s.output;
    p.kind = "g3";
    const Run r = invoke(p);
    CHECK(r.code == kOk);
    CHECK(r.out == csv);
  }
}
