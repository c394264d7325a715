#include <doctest.h>

#include "brw/cli.hpp"
#include "brw/io.hpp"
#include "brw/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace brw;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::path("cli_scratch") / name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    std::string config(const json& j) const {
        const fs::path p = dir / "config.json";
        std::ofstream(p) << j.dump(2);
        return p.string();
    }
    std::string out() const { return (dir / "out").string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json tail_config(std::uint64_t seed) {
    return json{{"kind", "tail"},
                {"seed", seed},
                {"reps", 400},
                {"k", 3},
                {"sites", {1, 2}},
                {"params", {{"n", 10}, {"theta", 0.0}, {"family", "binary"}}}};
}

}  // namespace

TEST_CASE("params_from_config builds families and explicit laws") {
    const auto p = params_from_config(
        json{{"params", {{"n", 50}, {"theta", -1.0}, {"family", "binary"}}}});
    CHECK(p.n == 50);
    CHECK(p.theta == -1.0);
    CHECK(p.offspring.mean == doctest::Approx(0.98).epsilon(1e-15));
    CHECK(p.step.range == 1);

    const json explicit_cfg = {
        {"params",
         {{"n", 10},
          {"offspring", {{"probs", {{"0", 0.5}, {"2", 0.5}}}}},
          {"step", {{"probs", {{"-1", 0.25}, {"0", 0.5}, {"1", 0.25}}}}}}}};
    const auto q = params_from_config(explicit_cfg);
    CHECK(q.offspring.mean == doctest::Approx(1.0));
    CHECK(q.step.variance == doctest::Approx(0.5));

    CHECK_THROWS_AS(params_from_config(json{{"kind", "tail"}}), ConfigError);
    CHECK_THROWS_AS(params_from_config(json{{"params", {{"theta", 1.0}}}}),
                    ConfigError);
}

TEST_CASE("run tail: report, files, exit code") {
    Scratch sc("tail_basic");
    CliOptions opts;
    opts.config_path = sc.config(tail_config(42));
    opts.out_dir = sc.out();
    CHECK(cmd_run(opts) == kExitPass);

    const json manifest = json::parse(slurp(fs::path(sc.out()) / "manifest.json"));
    CHECK(manifest["pass"].get<bool>());
    CHECK(manifest["checks"].size() == 2);
    for (const auto& c : manifest["checks"]) {
        CHECK(c["pass"].get<bool>());
        CHECK(c["target_source"].get<std::string>() == "dp_table");
        CHECK(c["tolerance"].get<double>() > 0.0);
    }
    CHECK(manifest["config"]["kind"].get<std::string>() == "tail");
    CHECK(fs::exists(fs::path(sc.out()) / "tail.csv"));
    const std::string csv = slurp(fs::path(sc.out()) / "tail.csv");
    CHECK(csv.rfind("site,estimate,stderr,dp_u,sigmas_off\n", 0) == 0);
}

TEST_CASE("identical configs reproduce byte for byte") {
    Scratch a("repro_a"), b("repro_b");
    CliOptions oa, ob;
    oa.config_path = a.config(tail_config(7));
    oa.out_dir = a.out();
    ob.config_path = b.config(tail_config(7));
    ob.out_dir = b.out();
    REQUIRE(cmd_run(oa) == kExitPass);
    REQUIRE(cmd_run(ob) == kExitPass);
    CHECK(slurp(fs::path(a.out()) / "tail.csv") ==
          slurp(fs::path(b.out()) / "tail.csv"));
    CHECK(slurp(fs::path(a.out()) / "manifest.json") ==
          slurp(fs::path(b.out()) / "manifest.json"));
}

TEST_CASE("command-line seed overrides the config seed") {
    Scratch a("seed_a"), b("seed_b");
    CliOptions oa, ob;
    oa.config_path = a.config(tail_config(7));
    oa.out_dir = a.out();
    ob.config_path = b.config(tail_config(7));
    ob.out_dir = b.out();
    ob.seed = 8;
    ob.seed_set = true;
    REQUIRE(cmd_run(oa) == kExitPass);
    REQUIRE(cmd_run(ob) == kExitPass);
    CHECK(slurp(fs::path(a.out()) / "tail.csv") !=
          slurp(fs::path(b.out()) / "tail.csv"));
}

TEST_CASE("config errors exit with the usage code") {
    Scratch sc("bad_configs");
    CliOptions opts;
    opts.out_dir = sc.out();

    auto missing_seed = tail_config(1);
    missing_seed.erase("seed");
    opts.config_path = sc.config(missing_seed);
    CHECK(cmd_run(opts) == kExitConfig);

    auto unknown = tail_config(1);
    unknown["kind"] = "frobnicate";
    opts.config_path = sc.config(unknown);
    CHECK(cmd_run(opts) == kExitConfig);

    const fs::path broken = sc.dir / "broken.json";
    std::ofstream(broken) << "{ not json";
    opts.config_path = broken.string();
    CHECK(cmd_run(opts) == kExitConfig);

    opts.config_path = (sc.dir / "no_such_file.json").string();
    CHECK(cmd_run(opts) == kExitConfig);

    opts.config_path.clear();
    CHECK(cmd_run(opts) == kExitConfig);
}

TEST_CASE("negative scaled thresholds are reported as certain") {
    Scratch sc("tail_zero");
    auto cfg = tail_config(3);
    cfg.erase("sites");
    cfg["x"] = {0.0};
    CliOptions opts;
    opts.config_path = sc.config(cfg);
    opts.out_dir = sc.out();
    CHECK(cmd_run(opts) == kExitPass);
    const json manifest = json::parse(slurp(fs::path(sc.out()) / "manifest.json"));
    CHECK(manifest["checks"][0]["value"].get<double>() == 1.0);
    CHECK(manifest["checks"][0]["target"].get<double>() == 1.0);
}

TEST_CASE("exact identity sweep passes") {
    Scratch sc("verify");
    CliOptions opts;
    opts.out_dir = sc.out();
    opts.exact = true;
    CHECK(cmd_verify(opts) == kExitPass);
    const json manifest = json::parse(slurp(fs::path(sc.out()) / "manifest.json"));
    CHECK(manifest["pass"].get<bool>());
    CHECK(manifest["checks"].size() == 6);  // two checks per instance
    bool saw_exact_table = false;
    for (const auto& t : manifest["tables"])
        if (t.get<std::string>().rfind("w_exact_", 0) == 0) saw_exact_table = true;
    CHECK(saw_exact_table);
}

TEST_CASE("extinction run against the root of the generating function") {
    Scratch sc("extinction");
    const json cfg = {{"kind", "extinction"},
                      {"seed", 11},
                      {"reps", 200},
                      {"cap", 20000},
                      {"params", {{"n", 20}, {"theta", 1.0}, {"family", "binary"}}}};
    CliOptions opts;
    opts.config_path = sc.config(cfg);
    opts.out_dir = sc.out();
    CHECK(cmd_run(opts) == kExitPass);
    CHECK(fs::exists(fs::path(sc.out()) / "extinction.csv"));
}

TEST_CASE("small convergence table runs end to end") {
    Scratch sc("table");
    const json cfg = {{"kind", "tail_vs_psi"},
                      {"theta", -1.0},
                      {"n_list", {100, 400}},
                      {"x_list", {0.5}},
                      {"rel_tol", 0.5},
                      {"params", {{"family", "binary"}}}};
    CliOptions opts;
    opts.config_path = sc.config(cfg);
    opts.out_dir = sc.out();
    CHECK(cmd_table(opts) == kExitPass);
    const json manifest = json::parse(slurp(fs::path(sc.out()) / "manifest.json"));
    CHECK(manifest["pass"].get<bool>());
    CHECK(fs::exists(fs::path(sc.out()) / "tail_vs_psi.csv"));

    auto bad = cfg;
    bad["kind"] = "tail_vs_nothing";
    opts.config_path = sc.config(bad);
    CHECK(cmd_table(opts) == kExitConfig);

    auto shuffled = cfg;
    shuffled["n_list"] = {400, 100};
    opts.config_path = sc.config(shuffled);
    CHECK(cmd_table(opts) == kExitConfig);
}
