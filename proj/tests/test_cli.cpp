#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"
#include "vesselsynth/commands.hpp"
#include "vesselsynth/mask_fitting.hpp"
#include "vesselsynth/raster.hpp"
#include "vesselsynth/serialization.hpp"
#include "vesselsynth/vessel_metrics.hpp"

using namespace vsynth;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> csv_lines(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

std::vector<double> csv_numbers(const std::string& line) {
  std::vector<double> v;
  std::istringstream in(line);
  std::string cell;
  std::getline(in, cell, ',');
  while (std::getline(in, cell, ',')) v.push_back(std::stod(cell));
  return v;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(call({}).code == cli::kUsage);
  CHECK(call({"bogus"}).code == cli::kUsage);
  CHECK(call({"synth"}).code == cli::kUsage);
  CHECK(call({"synth", "--count", "x", "--out", "/tmp/x"}).code == cli::kUsage);
  CHECK(call({"--help"}).code == cli::kOk);
  const auto v = call({"--version"});
  CHECK(v.code == cli::kOk);
  CHECK(v.out.find(VESSELSYNTH_VERSION) != std::string::npos);
}

TEST_CASE("synth writes masks, manifests and an index") {
  const auto dir = oracle::scratch_dir("cli_synth");
  auto r = call({"synth", "--count", "2", "--seed", "3", "--size", "128", "--depth", "3", "--out", (dir / "a").string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"index.json", "run_manifest.json", "sample_00000_mask.pgm", "sample_00001_manifest.json"})
    CHECK(fs::exists(dir / "a" / f));
  const auto index = nlohmann::json::parse(read_file(dir / "a" / "index.json"));
  CHECK(index["samples"].size() == 2);
  CHECK(index["samples"][1]["seed"] == 4);
  const auto run = nlohmann::json::parse(read_file(dir / "a" / "run_manifest.json"));
  CHECK(run["tool"] == "vesselsynth");
  CHECK(run["version"] == VESSELSYNTH_VERSION);
  CHECK(run["config"]["seed"] == 3);

  r = call({"synth", "--count", "0", "--out", (dir / "z").string()});
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(read_file(dir / "z" / "index.json"))["samples"].empty());

  CHECK(call({"synth", "--order", "7", "--out", (dir / "q").string()}).code == cli::kUsage);
  write_file_atomic(dir / "file", "x");
  CHECK(call({"synth", "--count", "1", "--out", (dir / "file" / "sub").string()}).code == cli::kIo);
}

TEST_CASE("config file values are overridden by explicit flags") {
  const auto dir = oracle::scratch_dir("cli_config");
  write_file_atomic(dir / "cfg.json", R"({"count": 3, "seed": 10, "size": 96, "depth": 2})");
  auto r = call({"synth", "--config", (dir / "cfg.json").string(), "--count", "1", "--out", (dir / "o").string()});
  REQUIRE(r.code == 0);
  const auto run = nlohmann::json::parse(read_file(dir / "o" / "run_manifest.json"));
  CHECK(run["config"]["count"] == 1);
  CHECK(run["config"]["seed"] == 10);
  CHECK(run["config"]["size"] == 96);

  CHECK(call({"synth", "--config", (dir / "missing.json").string(), "--out", "x"}).code == cli::kIo);
  write_file_atomic(dir / "bad.json", "{oops");
  CHECK(call({"synth", "--config", (dir / "bad.json").string(), "--out", "x"}).code == cli::kUsage);
}

TEST_CASE("fit command writes a loadable report") {
  const auto dir = oracle::scratch_dir("cli_fit");
  REQUIRE(call({"synth", "--count", "1", "--seed", "2", "--size", "128", "--depth", "3", "--out", dir.string()}).code == 0);
  const auto target = (dir / "sample_00000_mask.pgm").string();
  auto r = call({"fit", "--target", target, "--budget", "200", "--out", (dir / "fit" / "report.json").string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "fit" / "report.pgm"));
  CHECK(fs::exists(dir / "fit" / "run_manifest.json"));
  const auto report = fit_report_from_json(nlohmann::json::parse(read_file(dir / "fit" / "report.json")));
  CHECK(report.rendered == load_pgm(dir / "fit" / "report.pgm"));
  CHECK(report.iou == iou(report.rendered, load_pgm(target)));

  CHECK(call({"fit", "--target", target, "--order", "7", "--out", (dir / "r.json").string()}).code == cli::kUsage);
  write_file_atomic(dir / "garbled.pgm", "P5\n10 10\n255\nshort");
  r = call({"fit", "--target", (dir / "garbled.pgm").string(), "--out", (dir / "r.json").string()});
  CHECK(r.code == cli::kIo);
  CHECK(r.err.find("PGM") != std::string::npos);
  CHECK(call({"fit", "--target", (dir / "none.pgm").string(), "--out", (dir / "r.json").string()}).code == cli::kIo);
}

TEST_CASE("eval rows, mean row and mismatches") {
  const auto dir = oracle::scratch_dir("cli_eval");
  REQUIRE(call({"synth", "--count", "3", "--size", "96", "--depth", "2", "--out", (dir / "a").string()}).code == 0);
  REQUIRE(call({"synth", "--count", "3", "--seed", "50", "--size", "96", "--depth", "2", "--out", (dir / "b").string()}).code == 0);
  REQUIRE(call({"eval", "--pred", (dir / "a").string(), "--gt", (dir / "a").string(), "--out", (dir / "same.csv").string()}).code == 0);
  auto lines = csv_lines(dir / "same.csv");
  REQUIRE(lines.size() == 5);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto v = csv_numbers(lines[i]);
    CHECK(v[0] == 1.0);
    CHECK(v[2] == 0.0);
  }

  REQUIRE(call({"eval", "--pred", (dir / "a").string(), "--gt", (dir / "b").string(), "--out", (dir / "ab.csv").string(), "--workers", "3"}).code == 0);
  lines = csv_lines(dir / "ab.csv");
  REQUIRE(lines.size() == 5);
  CHECK(lines[4].rfind("mean,", 0) == 0);
  const auto mean = csv_numbers(lines[4]);
  for (std::size_t c = 0; c < mean.size(); ++c) {
    double s = 0;
    for (int i = 1; i <= 3; ++i) s += csv_numbers(lines[i])[c];
    CHECK(std::abs(mean[c] - s / 3.0) <= 1.5e-6);
  }

  fs::create_directories(dir / "c");
  fs::copy_file(dir / "a" / "sample_00000_mask.pgm", dir / "c" / "sample_00000_mask.pgm");
  fs::copy_file(dir / "a" / "sample_00000_mask.pgm", dir / "c" / "extra.pgm");
  auto r = call({"eval", "--pred", (dir / "a").string(), "--gt", (dir / "c").string(), "--out", (dir / "x.csv").string()});
  CHECK(r.code == cli::kMismatch);
  CHECK(r.err.find("extra.pgm") != std::string::npos);
  CHECK(r.err.find("sample_00002_mask.pgm") != std::string::npos);

  fs::create_directories(dir / "d");
  fs::copy_file(dir / "a" / "sample_00000_mask.pgm", dir / "d" / "other.pgm");
  CHECK(call({"eval", "--pred", (dir / "a").string(), "--gt", (dir / "d").string(), "--out", (dir / "x.csv").string()}).code == cli::kMismatch);

  fs::create_directories(dir / "e");
  fs::create_directories(dir / "f");
  save_pgm(RasterMask(8, 8), dir / "e" / "m.pgm");
  save_pgm(RasterMask(9, 8), dir / "f" / "m.pgm");
  CHECK(call({"eval", "--pred", (dir / "e").string(), "--gt", (dir / "f").string(), "--out", (dir / "x.csv").string()}).code == cli::kMismatch);
}

TEST_CASE("bench-order shape and validation") {
  const auto dir = oracle::scratch_dir("cli_bench");
  const auto out = (dir / "t.csv").string();
  REQUIRE(call({"bench-order", "--orders", "3,5", "--count", "2", "--size", "128", "--depth", "3", "--budget", "100", "--out", out}).code == 0);
  const auto lines = csv_lines(out);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "method,order,iou,ssim,mse");
  CHECK(lines[1].rfind("CB,3,", 0) == 0);
  CHECK(lines[2].rfind("QB5,5,", 0) == 0);
  for (int i = 1; i <= 2; ++i) {
    const double v = csv_numbers(lines[i])[1];
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(fs::exists(dir / "run_manifest.json"));
  CHECK(call({"bench-order", "--orders", "3,9", "--out", out}).code == cli::kUsage);
  CHECK(call({"bench-order", "--orders", "3,3", "--out", out}).code == cli::kUsage);
  CHECK(call({"bench-order", "--orders", "a", "--out", out}).code == cli::kUsage);
}

TEST_CASE("diffuse-check prints both tables") {
  auto r = call({"diffuse-check", "--steps", "20", "--samples", "50"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("t,beta,alpha_bar,sigma,signal_plus_noise\n1,0.000100,", 0) == 0);
  CHECK(r.out.find("t,mean,variance,expected_variance,relative_error") != std::string::npos);
  CHECK(call({"diffuse-check", "--sigma", "bogus"}).code == cli::kUsage);
  CHECK(call({"diffuse-check", "--beta-start", "2"}).code == cli::kUsage);

  const auto dir = oracle::scratch_dir("cli_diffuse");
  REQUIRE(call({"diffuse-check", "--steps", "10", "--samples", "10", "--out", dir.string()}).code == 0);
  CHECK(fs::exists(dir / "schedule.csv"));
  CHECK(fs::exists(dir / "variance.csv"));
  CHECK(fs::exists(dir / "run_manifest.json"));
}
