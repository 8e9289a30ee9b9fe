#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

// The tool path arrives via the ARTIC_TOOL environment variable (set by ctest).
const char* tool_path() { return std::getenv("ARTIC_TOOL"); }

int run(const std::string& args) {
  const std::string cmd = std::string(tool_path()) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

bool dirs_identical(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), a));
  }
  std::size_t b_count = 0;
  for (const auto& entry : fs::recursive_directory_iterator(b)) {
    if (entry.is_regular_file()) ++b_count;
  }
  if (b_count != rel.size()) return false;
  for (const auto& r : rel) {
    if (!fs::exists(b / r)) return false;
    if (slurp(a / r) != slurp(b / r)) return false;
  }
  return true;
}

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "artic_cli_tests";
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("cli: gen-corpus is deterministic directory-for-directory" * doctest::skip(tool_path() == nullptr)) {
  const auto root = scratch();
  const auto a = root / "gen_a";
  const auto b = root / "gen_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const std::string small = "--speakers 2 --sentences 4 --target-sentences 3 --eval-sentences 2";
  REQUIRE(run("gen-corpus --seed 7 " + small + " --run-dir " + a.string()) == 0);
  REQUIRE(run("gen-corpus --seed 7 " + small + " --run-dir " + b.string()) == 0);
  CHECK(dirs_identical(a, b));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("cli: config file mirrors flags" * doctest::skip(tool_path() == nullptr)) {
  const auto root = scratch();
  const auto a = root / "cfg_a";
  const auto b = root / "cfg_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const auto cfg_path = root / "gen.cfg";
  {
    std::ofstream os(cfg_path);
    os << "speakers=2\nsentences=4\ntarget-sentences=3\neval-sentences=2\nseed=11\n";
  }
  REQUIRE(run("gen-corpus --config " + cfg_path.string() + " --run-dir " + a.string()) == 0);
  REQUIRE(run("gen-corpus --seed 11 --speakers 2 --sentences 4 --target-sentences 3 "
              "--eval-sentences 2 --run-dir " +
              b.string()) == 0);
  CHECK(dirs_identical(a, b));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("cli: evaluate before training artifacts exist fails with the missing-artifact code" *
          doctest::skip(tool_path() == nullptr)) {
  const auto root = scratch();
  const auto corpus_dir = root / "eval_corpus";
  fs::remove_all(corpus_dir);
  REQUIRE(run("gen-corpus --seed 3 --speakers 2 --sentences 3 --target-sentences 3 "
              "--eval-sentences 2 --run-dir " +
              corpus_dir.string()) == 0);
  const int code = run("evaluate --oracle " + (root / "nope_oracle.ck").string() +
                       " --train-classifier " + (root / "nope_cls.ck").string() + " --corpus " +
                       (corpus_dir / "target_eval").string());
  CHECK(code == 66);  // missing artifact
  fs::remove_all(corpus_dir);
}

TEST_CASE("cli: unknown flags and bad configs use distinct exit codes" *
          doctest::skip(tool_path() == nullptr)) {
  const int unknown_flag = run("gen-corpus --definitely-not-a-flag 3");
  CHECK(unknown_flag != 0);
  const int bad_value = run("gen-corpus --speakers 0 --sentences 1 --run-dir /tmp/artic_badcfg");
  CHECK(bad_value == 65);  // contract violation
  CHECK(unknown_flag != bad_value);
  const int no_sub = run("");
  CHECK(no_sub != 0);
  fs::remove_all("/tmp/artic_badcfg");
}

TEST_CASE("cli: verify-losses prints per-property lines and exits zero" *
          doctest::skip(tool_path() == nullptr)) {
  const auto root = scratch();
  const auto out = root / "verify_out.txt";
  const std::string cmd =
      std::string(tool_path()) + " verify-losses --seed 5 > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("PASS mle-gradient-identity") != std::string::npos);
  CHECK(text.find("PASS grad-l_total") != std::string::npos);
  CHECK(text.find("PASS sampler-gof-alpha25") != std::string::npos);
  CHECK(text.find("FAIL") == std::string::npos);
  fs::remove(out);
}

TEST_CASE("cli: help enumerates every flag" * doctest::skip(tool_path() == nullptr)) {
  const auto root = scratch();
  const auto out = root / "help_out.txt";
  const int rc = std::system((std::string(tool_path()) + " reproduce --help > " + out.string()).c_str());
  CHECK(WEXITSTATUS(rc) == 0);
  const std::string text = slurp(out);
  for (const char* flag : {"--beta", "--gamma", "--lambda", "--seed", "--mix-ratio", "--config"}) {
    CHECK(text.find(flag) != std::string::npos);
  }
  fs::remove(out);
}
