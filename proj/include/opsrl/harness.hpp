#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opsrl/agents.hpp"
#include "opsrl/cmdp.hpp"
#include "opsrl/envs.hpp"

namespace opsrl {

struct EnvConfig {
    std::string kind = "media"; // media | inventory | random
    MediaParams media;
    InventoryParams inventory;
    std::uint64_t random_seed = 1;
    int random_states = 4;
    int random_actions = 3;
    int random_horizon = 4;
    double random_budget_frac = 0.75;
};

/// Builds the configured environment; fills `normalization` for inventory.
TabularCmdp build_env(const EnvConfig& env, InventoryNormalization* normalization = nullptr);

struct RunConfig {
    EnvConfig env;
    AgentKind agent = AgentKind::Opsrl;
    std::int64_t episodes = 5000;
    std::vector<std::uint64_t> seeds; // derived from master_seed when empty
    int num_seeds = 5;
    std::uint64_t master_seed = 90210;
    double delta = 0.1;
    std::string out_dir; // empty => no file outputs
    double baseline_frac = 0.2;
    bool emit_plots = false;
    std::optional<std::int64_t> fixed_k0; // adaptive when unset
    bool dump_lp = false;
    bool parallel_seeds = true;
};

/// Per-episode regret bookkeeping. Optimality gaps are exact policy
/// evaluations under the true model, never sampled returns. The
/// unconstrained columns measure the same policies against the optimum of
/// the unconstrained problem (relevant for the UCRL baseline).
struct RegretRecord {
    std::int64_t episode = 0;
    double opt_gap = 0.0;
    double cum_opt_regret = 0.0;
    double cons_excess = 0.0; // max(0, V_c - budget)
    double cum_cons_regret = 0.0;
    bool used_baseline = false;
    double opt_gap_unconstrained = 0.0;
    double cum_opt_regret_unconstrained = 0.0;
    double value_r = 0.0; // exact V_r of the deployed policy
    double value_c = 0.0; // exact V_c of the deployed policy
};

struct SeedRunResult {
    std::uint64_t seed = 0;
    std::vector<RegretRecord> records;
    std::int64_t switch_episode = -1; // first non-baseline episode, -1 if never
};

struct ExperimentResult {
    std::vector<SeedRunResult> per_seed;
    double optimal_value_r = 0.0;
    double optimal_value_c = 0.0;
    double unconstrained_value_r = 0.0;
    double unconstrained_value_c = 0.0; // exact V_c of the unconstrained optimum
    double baseline_value_r = 0.0;
    double baseline_value_c = 0.0;
    double budget = 0.0;
    InventoryNormalization inventory_normalization;
    std::vector<std::uint64_t> seeds;
};

/// Runs the configured agent for `episodes` per seed and returns the exact
/// per-episode regret records. Seeds execute as independent workers; the
/// record streams are deterministic functions of (config, seed), independent
/// of scheduling. When out_dir is set it is probed for writability before
/// any episode runs.
ExperimentResult run_experiment(const RunConfig& config);

struct AggregateRow {
    std::int64_t episode = 0;
    double opt_mean = 0.0, opt_min = 0.0, opt_max = 0.0;
    double cons_mean = 0.0, cons_min = 0.0, cons_max = 0.0;
    double used_baseline_frac = 0.0;
};

/// Elementwise mean/min/max envelope of the cumulative regret columns.
/// Throws on ragged inputs.
std::vector<AggregateRow> aggregate(const std::vector<SeedRunResult>& runs);

/// Writes the per-agent CSV (plus the vs-unconstrained CSV for UCRL), the
/// run metadata file, and optional SVG plots into config.out_dir.
void emit_outputs(const ExperimentResult& result, const RunConfig& config);

struct SweepEntry {
    double fraction = 0.0;
    bool feasible = false; // stricter baseline CMDP solvable
    std::string csv_path;
    std::vector<std::int64_t> switch_episodes; // per seed, -1 if never
};

/// Runs OPSRL once per baseline fraction with shared seeds; infeasible
/// stricter problems are skipped with a warning entry.
std::vector<SweepEntry> baseline_sweep(const RunConfig& config,
                                       const std::vector<double>& fractions);

const char* agent_name(AgentKind kind);

} // namespace opsrl
