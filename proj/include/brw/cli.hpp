#pragma once

#include "brw/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace brw {

inline constexpr const char* kToolName = "brwlab";
inline constexpr const char* kToolVersion = "1.0.0";

// Exit codes shared by every verb.
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitResource = 3;

struct CliOptions {
    std::string config_path;
    std::string out_dir = "brwlab_out";
    std::uint64_t seed = 0;
    bool seed_set = false;  // --seed given, overrides the config value
    int threads = 0;        // 0 = leave the OpenMP default alone
    bool exact = false;     // rational mode where supported
};

// Builds simulation parameters from a config object: either
// {"family": "binary"|"geometric-truncated", "theta": .., "n": ..} or
// explicit {"offspring": .., "step": ..} laws (model JSON format).
BrwParams params_from_config(const nlohmann::json& config);

// Experiment runner (verb `run`). Dispatches on config["kind"] in {tail,
// extinction, speed, fixed_point, fkpp, wave, verify}; writes manifest.json
// plus CSV tables into out_dir (atomic temp+rename); prints one line per
// embedded check. Returns an exit code.
int cmd_run(const CliOptions& opts);

// Convergence tables (verb `table`): config["kind"] in {tail_vs_fkpp,
// tail_vs_psi, critical_tail}. Compares scaled tail values against their
// limit targets over config["n_list"] and reports the trend verdict.
int cmd_table(const CliOptions& opts);

// Exact identity sweep (verb `verify`): rational-arithmetic stopped-path and
// per-generation mean checks over a small family/depth sweep.
int cmd_verify(const CliOptions& opts);

// Quick battery over every module (verb `selftest`).
int cmd_selftest(const CliOptions& opts);

}  // namespace brw
