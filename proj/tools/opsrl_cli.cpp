// Command-line front end: learning runs, baseline sweeps, and environment
// dumps, with a key=value config file mirroring every flag (flags win).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "opsrl/envs.hpp"
#include "opsrl/harness.hpp"

namespace {

opsrl::AgentKind parse_agent(const std::string& name) {
    if (name == "opsrl") return opsrl::AgentKind::Opsrl;
    if (name == "optcmdp") return opsrl::AgentKind::OptCmdp;
    if (name == "ucrl") return opsrl::AgentKind::UcrlUnconstrained;
    if (name == "baseline") return opsrl::AgentKind::FixedBaseline;
    throw CLI::ValidationError("agent", "unknown agent '" + name + "'");
}

struct CliOptions {
    std::string env = "media";
    std::string agent = "opsrl";
    std::int64_t episodes = 5000;
    int seeds = 5;
    std::vector<std::uint64_t> seed_list;
    std::uint64_t master_seed = 90210;
    double delta = 0.1;
    std::string out;
    double baseline_frac = 0.2;
    bool emit_plots = false;
    std::string k0 = "adaptive";
    bool dump_lp = false;
    bool sequential = false;

    opsrl::MediaParams media;
    opsrl::InventoryParams inventory;
    std::uint64_t random_seed = 1;
    int random_states = 4;
    int random_actions = 3;
    int random_horizon = 4;
    double random_budget_frac = 0.75;
};

void add_common(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--env", opt.env, "Environment: media | inventory | random")
        ->check(CLI::IsMember({"media", "inventory", "random"}));
    cmd->add_option("--episodes", opt.episodes, "Episodes per seed")->check(CLI::PositiveNumber);
    cmd->add_option("--seeds", opt.seeds, "Number of seeds")->check(CLI::PositiveNumber);
    cmd->add_option("--seed-list", opt.seed_list,
                    "Explicit seed values (overrides --seeds/--master-seed)");
    cmd->add_option("--master-seed", opt.master_seed,
                    "Master seed the per-seed streams derive from");
    cmd->add_option("--delta", opt.delta, "Confidence failure probability")
        ->check(CLI::Range(1e-12, 1.0));
    cmd->add_option("--out", opt.out, "Output directory");
    cmd->add_option("--baseline-frac", opt.baseline_frac,
                    "Baseline budget fraction (stricter CMDP budget = frac * budget)");
    cmd->add_flag("--emit-plots", opt.emit_plots, "Write SVG regret plots next to the CSVs");
    cmd->add_option("--k0", opt.k0, "Warm-start mode: adaptive | fixed:N");
    cmd->add_flag("--dump-lp", opt.dump_lp,
                  "Dump the planning LP and the first extended LP as text");
    cmd->add_flag("--sequential", opt.sequential,
                  "Run seeds sequentially instead of in parallel");

    cmd->add_option("--media-cap", opt.media.buffer_cap, "Media: buffer capacity");
    cmd->add_option("--media-mu-fast", opt.media.mu_fast, "Media: fast service rate");
    cmd->add_option("--media-mu-slow", opt.media.mu_slow, "Media: slow service rate");
    cmd->add_option("--media-gamma", opt.media.gamma, "Media: playback rate");
    cmd->add_option("--media-horizon", opt.media.horizon, "Media: horizon");
    cmd->add_option("--media-budget-frac", opt.media.budget_frac,
                    "Media: budget as a fraction of H");
    cmd->add_option("--inventory-capacity", opt.inventory.capacity, "Inventory: capacity");
    cmd->add_option("--inventory-horizon", opt.inventory.horizon, "Inventory: horizon");
    cmd->add_option("--inventory-budget-frac", opt.inventory.budget_frac,
                    "Inventory: budget as a fraction of H");
    cmd->add_option("--random-seed", opt.random_seed, "Random env: model seed");
    cmd->add_option("--random-states", opt.random_states, "Random env: states");
    cmd->add_option("--random-actions", opt.random_actions, "Random env: actions");
    cmd->add_option("--random-horizon", opt.random_horizon, "Random env: horizon");
    cmd->add_option("--random-budget-frac", opt.random_budget_frac,
                    "Random env: budget fraction");
}

opsrl::RunConfig to_run_config(const CliOptions& opt) {
    opsrl::RunConfig config;
    config.env.kind = opt.env;
    config.env.media = opt.media;
    config.env.inventory = opt.inventory;
    config.env.random_seed = opt.random_seed;
    config.env.random_states = opt.random_states;
    config.env.random_actions = opt.random_actions;
    config.env.random_horizon = opt.random_horizon;
    config.env.random_budget_frac = opt.random_budget_frac;
    config.agent = parse_agent(opt.agent);
    config.episodes = opt.episodes;
    config.num_seeds = opt.seeds;
    config.seeds = opt.seed_list;
    config.master_seed = opt.master_seed;
    config.delta = opt.delta;
    config.out_dir = opt.out;
    config.baseline_frac = opt.baseline_frac;
    config.emit_plots = opt.emit_plots;
    config.dump_lp = opt.dump_lp;
    config.parallel_seeds = !opt.sequential;
    if (opt.k0 != "adaptive") {
        if (opt.k0.rfind("fixed:", 0) != 0)
            throw CLI::ValidationError("k0", "expected 'adaptive' or 'fixed:N'");
        config.fixed_k0 = std::stoll(opt.k0.substr(6));
    }
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular constrained-MDP safe-exploration toolkit"};
    app.set_config("--config", "",
                   "Key=value config file mirroring the flags, with a [run] or "
                   "[sweep] section (or dotted keys like run.episodes); flags "
                   "given on the command line override the file");
    app.require_subcommand(1);

    CliOptions opt;
    std::vector<double> fractions;
    std::string dump_path;

    CLI::App* run = app.add_subcommand("run", "Run one agent and emit regret CSVs");
    run->add_option("--agent", opt.agent, "Agent: opsrl | optcmdp | ucrl | baseline")
        ->check(CLI::IsMember({"opsrl", "optcmdp", "ucrl", "baseline"}));
    add_common(run, opt);

    CLI::App* sweep =
        app.add_subcommand("sweep", "Run OPSRL across baseline budget fractions");
    sweep->add_option("--fractions", fractions, "Baseline fractions to sweep")->required();
    add_common(sweep, opt);

    CLI::App* dump = app.add_subcommand("dump-env", "Write a plain-text model dump");
    dump->add_option("--env", opt.env, "Environment: media | inventory | random")
        ->check(CLI::IsMember({"media", "inventory", "random"}));
    dump->add_option("--out-file", dump_path, "Destination file (stdout if omitted)");
    dump->add_option("--media-gamma", opt.media.gamma, "Media: playback rate");
    dump->add_option("--random-seed", opt.random_seed, "Random env: model seed");
    dump->add_option("--random-states", opt.random_states, "Random env: states");
    dump->add_option("--random-actions", opt.random_actions, "Random env: actions");
    dump->add_option("--random-horizon", opt.random_horizon, "Random env: horizon");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const opsrl::RunConfig config = to_run_config(opt);
            if (config.out_dir.empty()) throw std::runtime_error("run requires --out");
            const opsrl::ExperimentResult result = opsrl::run_experiment(config);
            opsrl::emit_outputs(result, config);
            const auto rows = opsrl::aggregate(result.per_seed);
            std::printf("%s on %s: %lld episodes x %zu seeds\n",
                        opsrl::agent_name(config.agent), config.env.kind.c_str(),
                        static_cast<long long>(config.episodes), result.seeds.size());
            std::printf("  optimal value V_r*=%.6f (V_c*=%.6f, budget %.6f)\n",
                        result.optimal_value_r, result.optimal_value_c, result.budget);
            std::printf("  final cumulative optimality regret (mean)  %.6f\n",
                        rows.back().opt_mean);
            std::printf("  final cumulative constraint regret (mean)  %.6f\n",
                        rows.back().cons_mean);
            for (std::size_t i = 0; i < result.per_seed.size(); ++i)
                std::printf("  seed %zu: switch episode %lld\n", i,
                            static_cast<long long>(result.per_seed[i].switch_episode));
            std::printf("  outputs in %s\n", config.out_dir.c_str());
        } else if (sweep->parsed()) {
            opsrl::RunConfig config = to_run_config(opt);
            if (config.out_dir.empty()) throw std::runtime_error("sweep requires --out");
            const auto entries = opsrl::baseline_sweep(config, fractions);
            for (const auto& entry : entries) {
                if (!entry.feasible) {
                    std::printf("fraction %.4f: stricter CMDP infeasible, skipped\n",
                                entry.fraction);
                    continue;
                }
                std::printf("fraction %.4f: csv %s, switch episodes:", entry.fraction,
                            entry.csv_path.c_str());
                for (std::int64_t s : entry.switch_episodes)
                    std::printf(" %lld", static_cast<long long>(s));
                std::printf("\n");
            }
        } else if (dump->parsed()) {
            opsrl::EnvConfig env;
            env.kind = opt.env;
            env.media = opt.media;
            env.inventory = opt.inventory;
            env.random_seed = opt.random_seed;
            env.random_states = opt.random_states;
            env.random_actions = opt.random_actions;
            env.random_horizon = opt.random_horizon;
            env.random_budget_frac = opt.random_budget_frac;
            const std::string text = opsrl::model_to_text(opsrl::build_env(env));
            if (dump_path.empty()) {
                std::cout << text;
            } else {
                std::ofstream out(dump_path);
                out << text;
            }
        }
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
    return 0;
}
