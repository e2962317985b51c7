#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "kinetics/run_config.hpp"
#include "kinetics/runner.hpp"

using namespace kinetics;

TEST_CASE("config round trip") {
  RunConfig c;
  c.delta = 0.02;
  c.cycle_k = {3, 9};
  c.suite = "paper";
  CHECK(config_from_json(nlohmann::json::parse(to_json(c).dump())) == c);
  CHECK_FALSE(config_from_json(to_json(RunConfig{})) == c);
}

TEST_CASE("config files and overrides") {
  const auto path = (std::filesystem::temp_directory_path() / "kinetics_config_test.json").string();
  {
    std::ofstream os(path);
    os << R"({"delta": 0.03, "nx": 16, "wall_shape": "cosine"})";
  }
  auto c = load_config(path);
  CHECK(c.delta == 0.03);
  CHECK(c.nx == 16);
  CHECK(c.nt == RunConfig{}.nt);
  apply_override(c, "nx", "24");
  apply_override(c, "cycle_k", "2,4,8");
  apply_override(c, "mass_fix", "false");
  CHECK(c.nx == 24);
  CHECK(c.cycle_k == std::vector<std::size_t>{2, 4, 8});
  CHECK_FALSE(c.mass_fix);
  CHECK_THROWS_AS(apply_override(c, "nx", "-3"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "bogus", "1"), ConfigError);
  {
    std::ofstream os(path);
    os << R"({"delta": 0.03, "colour": 1})";
  }
  CHECK_THROWS_AS(load_config(path), ConfigError);
  {
    std::ofstream os(path);
    os << R"({"delta": "big"})";
  }
  CHECK_THROWS_AS(load_config(path), ConfigError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path), ConfigError);
}

TEST_CASE("validation") {
  CHECK_NOTHROW(validate(RunConfig{}));
  auto bad = [](auto edit) {
    RunConfig c;
    edit(c);
    return c;
  };
  CHECK_THROWS_AS(validate(bad([](RunConfig& c) { c.beta = 3.0; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](RunConfig& c) { c.delta = 0.7; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](RunConfig& c) { c.nv = 9; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](RunConfig& c) { c.gamma_time_stride = 5; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](RunConfig& c) { c.suite = "everything"; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](RunConfig& c) { c.wall_shape = "square"; })), ConfigError);
}

TEST_CASE("runner exit codes") {
  std::ostringstream log;
  RunConfig c;
  c.beta = 2.0;
  CHECK(run_guarded("steady", c, log) == exit_config);
  CHECK(run_guarded("unknown", RunConfig{}, log) == exit_config);
  CHECK(run_guarded("print-config", RunConfig{}, log) == exit_pass);
  CHECK(log.str().find("\"delta\"") != std::string::npos);
}

TEST_CASE("thread count from the environment") {
  RunConfig c;
  c.threads = 3;
  unsetenv("KINETICS_THREADS");
  CHECK(effective_threads(c) == 3);
  setenv("KINETICS_THREADS", "1", 1);
  CHECK(effective_threads(c) == 1);
  setenv("KINETICS_THREADS", "x", 1);
  CHECK_THROWS_AS(effective_threads(c), ConfigError);
  unsetenv("KINETICS_THREADS");
}
