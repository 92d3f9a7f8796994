#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "apgaps/cli.hpp"

using namespace apgaps;
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

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "apgaps_cli_test";
  fs::create_directories(dir);
  return dir / name;
}
}  // namespace

TEST_CASE("fnv1a reference values") {
  CHECK(cli::fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(cli::fnv1a("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("hunt csv") {
  const auto r = call({"hunt", "--q", "3", "--a", "2", "--limit", "100", "--max-gap", "6"});
  REQUIRE(r.code == cli::kExitOk);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() >= 3);
  CHECK(ls[0].rfind("# tool=apgaps version=1.0.0 command=hunt config_hash=", 0) == 0);
  CHECK(ls[1] == "p_r,p_r1,gap,ratio");
  CHECK(ls[2].rfind("23,29,6,", 0) == 0);

  const auto four = call({"hunt", "--q", "4", "--a", "1", "--limit", "100", "--max-gap", "4"});
  CHECK(lines(four.out)[2].rfind("13,17,4,", 0) == 0);
}

TEST_CASE("config hash tracks the configuration") {
  const auto a = call({"hunt", "--limit", "100"});
  const auto b = call({"hunt", "--limit", "101"});
  const auto a2 = call({"hunt", "--limit", "100"});
  CHECK(lines(a.out)[0] != lines(b.out)[0]);
  CHECK(lines(a.out)[0] == lines(a2.out)[0]);
  const fs::path f = scratch("hash.csv");
  REQUIRE(call({"--out", f.string(), "hunt", "--limit", "100"}).code == 0);
  CHECK(slurp(f) == a.out);
}

TEST_CASE("rho csv") {
  const auto r = call({"rho", "--u-max", "3", "--step", "0.00390625"});
  REQUIRE(r.code == 0);
  const auto ls = lines(r.out);
  CHECK(ls[1] == "u,rho");
  CHECK(ls[2] == "0,1");
  CHECK(ls.size() == 2 + 3 * 256 + 1);
}

TEST_CASE("json envelope") {
  const auto r = call({"--format", "json", "sieve", "--limit", "30"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["schema_version"] == 1);
  CHECK(j["tool"] == "apgaps");
  CHECK(j["command"] == "sieve");
  CHECK(j["config_hash"].get<std::string>().size() == 16);
  CHECK(j["result"]["pi"] == 10);
}

TEST_CASE("report json") {
  const auto r = call({"report", "--H", "10000", "--all"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  const auto& res = j["result"];
  CHECK(res.contains("plan"));
  CHECK(res.contains("class_balance"));
  REQUIRE(res.contains("functional"));
  for (const char* key : {"L_measured", "L_predicted", "bracket", "moment2", "theta_moments", "S_count"}) {
    CHECK(res["functional"].contains(key));
  }
}

TEST_CASE("build-q plan round trip") {
  const fs::path f = scratch("plan.json");
  REQUIRE(call({"--format", "json", "--out", f.string(), "build-q", "--q", "3", "--a", "2", "--H", "30", "--Q", "210"})
              .code == 0);
  const ModulusPlan plan = cli::plan_from_json(slurp(f));
  CHECK(plan.q == 3);
  CHECK(plan.a == 2);
  CHECK(plan.Q.value() == 210u);
  const auto via_file = call({"moments", "--plan", f.string(), "--shifts", "11,17", "--N", "1000", "--eps-prime", "0.05"});
  const auto direct = call({"moments", "--Q", "210", "--H", "30", "--shifts", "11,17", "--N", "1000", "--eps-prime", "0.05"});
  REQUIRE(via_file.code == 0);
  CHECK(lines(via_file.out)[2] == lines(direct.out)[2]);
}

TEST_CASE("config file with flag override") {
  const fs::path cfg = scratch("hunt.cfg");
  {
    std::ofstream f(cfg);
    f << "# toy hunt\nq=4\na=1\nlimit=100\nmax-gap=4\n";
  }
  const auto m = cli::read_config_file(cfg);
  CHECK(m.at("q") == "4");
  CHECK(m.size() == 4);
  const auto r = call({"--config", cfg.string(), "hunt"});
  REQUIRE(r.code == 0);
  CHECK(lines(r.out)[2].rfind("13,17,4,", 0) == 0);
  const auto over = call({"--config", cfg.string(), "hunt", "--limit", "16"});
  REQUIRE(over.code == 0);
  CHECK(lines(over.out).size() == 2);  // 17 > 16 so no pair
}

TEST_CASE("trace output") {
  const fs::path f = scratch("trace.csv");
  const auto r = call({"moments", "--Q", "210", "--H", "30", "--shifts", "11,17", "--N", "100", "--eps-prime", "0.05",
                       "--theta-h", "11", "--trace", f.string()});
  REQUIRE(r.code == 0);
  const auto ls = lines(slurp(f));
  CHECK(ls[0] == "n,lambda,theta_11");
  CHECK(ls.size() == 101);
  CHECK(ls[1].rfind("101,", 0) == 0);
}

TEST_CASE("exit codes") {
  CHECK(call({}).code == cli::kExitUsage);
  CHECK(call({"hunt", "--no-such-flag"}).code == cli::kExitUsage);
  CHECK(call({"nonsense"}).code == cli::kExitUsage);
  CHECK(call({"--format", "xml", "sieve", "--limit", "10"}).code == cli::kExitUsage);
  CHECK(call({"build-q", "--H", "100"}).code == cli::kExitDomain);
  CHECK(call({"moments", "--Q", "6", "--H", "30", "--shifts", "3", "--N", "100", "--eps-prime", "0.05"}).code ==
        cli::kExitDomain);
  const auto big = call({"moments", "--Q", "614889782588491410", "--H", "60", "--shifts", "53", "--N", "1000",
                         "--eps-prime", "0.05"});
  CHECK(big.code == cli::kExitResource);
  CHECK_FALSE(big.err.empty());
}

TEST_CASE("repeated runs are byte identical") {
  const std::vector<std::vector<std::string>> commands{
      {"moments", "--Q", "6", "--H", "30", "--shifts", "5,11", "--N", "20000", "--eps-prime", "0.05", "--samples",
       "5000"},
      {"--format", "json", "functional", "--Q", "210", "--H", "30", "--shifts", "11,17", "--N", "5000",
       "--eps-prime", "0.05"},
      {"hunt", "--q", "4", "--a", "1", "--limit", "200000", "--max-gap", "8"},
  };
  for (const auto& cmd : commands) {
    const fs::path a = scratch("rep_a"), b = scratch("rep_b");
    auto ca = cmd, cb = cmd;
    ca.insert(ca.begin(), {"--out", a.string()});
    cb.insert(cb.begin(), {"--out", b.string()});
    REQUIRE(call(ca).code == 0);
    REQUIRE(call(cb).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK_FALSE(slurp(a).empty());
  }
}

TEST_CASE("installed binary") {
  const char* bin = std::getenv("APGAPS_BIN");
  if (bin == nullptr) return;
  const std::string quiet = " > /dev/null 2>&1";
  int status = std::system((std::string(bin) + " hunt --limit 100" + quiet).c_str());
  CHECK(WEXITSTATUS(status) == cli::kExitOk);
  status = std::system((std::string(bin) + " hunt --what" + quiet).c_str());
  CHECK(WEXITSTATUS(status) == cli::kExitUsage);
  status = std::system((std::string(bin) + " build-q --H 100" + quiet).c_str());
  CHECK(WEXITSTATUS(status) == cli::kExitDomain);
}
