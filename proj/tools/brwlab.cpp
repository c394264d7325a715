#include "brw/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for near-critical branching random walks",
                 brw::kToolName};
    app.require_subcommand(1);

    brw::CliOptions opts;
    if (const char* env = std::getenv("BRWLAB_THREADS")) {
        opts.threads = std::atoi(env);
        if (opts.threads < 0) opts.threads = 0;
    }

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opts.config_path,
                                  "JSON experiment description");
        if (needs_config) c->required();
        sub->add_option("--seed", opts.seed,
                        "replicate stream seed (overrides the config)");
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--threads", opts.threads,
                        "worker threads (0 = library default)");
    };

    auto* run = app.add_subcommand("run", "run one experiment from a config");
    add_common(run, true);
    auto* table =
        app.add_subcommand("table", "convergence table over a list of n");
    add_common(table, true);
    auto* verify =
        app.add_subcommand("verify", "exact rational identity sweep");
    add_common(verify, false);
    verify->add_flag("--exact", opts.exact,
                     "also write the exact rational recursion tables");
    auto* self =
        app.add_subcommand("selftest", "fast built-in oracle battery");
    add_common(self, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? brw::kExitPass : brw::kExitConfig;
    }

    CLI::App* sub = app.get_subcommands().front();
    opts.seed_set = sub->count("--seed") > 0;
    if (sub == run) return brw::cmd_run(opts);
    if (sub == table) return brw::cmd_table(opts);
    if (sub == verify) return brw::cmd_verify(opts);
    if (sub == self) return brw::cmd_selftest(opts);
    return brw::kExitConfig;
}
