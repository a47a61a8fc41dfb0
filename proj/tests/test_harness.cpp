#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "opsrl/harness.hpp"

using namespace opsrl;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

RunConfig small_random_config() {
    RunConfig config;
    config.env.kind = "random";
    config.env.random_seed = 11;
    config.env.random_states = 3;
    config.env.random_actions = 2;
    config.env.random_horizon = 3;
    config.env.random_budget_frac = 0.9;
    config.episodes = 20;
    config.num_seeds = 2;
    config.master_seed = 99;
    config.delta = 0.1;
    config.baseline_frac = 0.5;
    return config;
}

} // namespace

TEST_CASE("fixed-baseline runs have a constant gap and exactly linear regret") {
    RunConfig config = small_random_config();
    config.agent = AgentKind::FixedBaseline;
    const ExperimentResult result = run_experiment(config);
    for (const auto& run : result.per_seed) {
        const double gap = result.baseline_value_r - result.optimal_value_r;
        CHECK(gap >= -1e-9);
        for (const auto& rec : run.records) {
            CHECK(rec.opt_gap == doctest::Approx(gap).epsilon(1e-12));
            CHECK(rec.cum_opt_regret ==
                  doctest::Approx(gap * rec.episode).epsilon(1e-9));
            CHECK(rec.used_baseline);
        }
        CHECK(run.switch_episode == -1);
    }
}

TEST_CASE("aggregation") {
    RunConfig config = small_random_config();
    config.agent = AgentKind::OptCmdp;
    const ExperimentResult result = run_experiment(config);
    SUBCASE("single seed collapses the envelope onto the run") {
        const std::vector<SeedRunResult> one = {result.per_seed[0]};
        const std::vector<AggregateRow> rows = aggregate(one);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            CHECK(rows[k].opt_mean == rows[k].opt_min);
            CHECK(rows[k].opt_mean == rows[k].opt_max);
            CHECK(rows[k].opt_mean ==
                  doctest::Approx(result.per_seed[0].records[k].cum_opt_regret));
        }
    }
    SUBCASE("identical seeds give a zero-width envelope") {
        const std::vector<SeedRunResult> twins = {result.per_seed[0], result.per_seed[0]};
        for (const auto& row : aggregate(twins)) {
            CHECK(row.opt_min == row.opt_max);
            CHECK(row.cons_min == row.cons_max);
        }
    }
    SUBCASE("ragged inputs are rejected") {
        std::vector<SeedRunResult> ragged = result.per_seed;
        ragged[1].records.pop_back();
        CHECK_THROWS_AS(aggregate(ragged), std::invalid_argument);
    }
    SUBCASE("cumulative columns are running sums and nondecreasing") {
        for (const auto& run : result.per_seed) {
            double opt = 0.0, cons = 0.0;
            for (const auto& rec : run.records) {
                opt += rec.opt_gap;
                cons += rec.cons_excess;
                CHECK(rec.cum_opt_regret == doctest::Approx(opt));
                CHECK(rec.cum_cons_regret == doctest::Approx(cons));
                CHECK(rec.cons_excess >= 0.0);
            }
        }
    }
}

TEST_CASE("csv emission and end-to-end determinism") {
    RunConfig config = small_random_config();
    config.agent = AgentKind::OptCmdp;
    config.episodes = 3;
    const fs::path dir_a = fs::temp_directory_path() / "opsrl_test_out_a";
    const fs::path dir_b = fs::temp_directory_path() / "opsrl_test_out_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    config.out_dir = dir_a.string();
    emit_outputs(run_experiment(config), config);
    config.out_dir = dir_b.string();
    emit_outputs(run_experiment(config), config);

    const std::string csv_a = read_file(dir_a / "optcmdp.csv");
    const std::string csv_b = read_file(dir_b / "optcmdp.csv");
    CHECK(csv_a == csv_b);
    // Header plus one line per episode.
    CHECK(std::count(csv_a.begin(), csv_a.end(), '\n') == 4);
    CHECK(csv_a.rfind("episode,opt_regret_mean,opt_regret_min,opt_regret_max,"
                      "cons_regret_mean,cons_regret_min,cons_regret_max,"
                      "used_baseline_frac\n",
                      0) == 0);
    CHECK(fs::exists(dir_a / "optcmdp_run_metadata.txt"));
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("unwritable output directories fail before the run starts") {
    RunConfig config = small_random_config();
    // A regular file used as a directory path cannot be created.
    const fs::path blocker = fs::temp_directory_path() / "opsrl_blocker_file";
    std::ofstream(blocker).put('x');
    config.out_dir = (blocker / "sub").string();
    CHECK_THROWS(run_experiment(config));
    fs::remove(blocker);
}

TEST_CASE("optcmdp on media violates the budget during early learning") {
    RunConfig config;
    config.env.kind = "media";
    config.agent = AgentKind::OptCmdp;
    config.episodes = 200;
    config.num_seeds = 1;
    config.master_seed = 90210;
    const ExperimentResult result = run_experiment(config);
    CHECK(result.per_seed[0].records.back().cum_cons_regret > 0.0);
}

TEST_CASE("ucrl optimality columns are measured against both optima") {
    RunConfig config = small_random_config();
    config.agent = AgentKind::UcrlUnconstrained;
    const ExperimentResult result = run_experiment(config);
    CHECK(result.unconstrained_value_r <= result.optimal_value_r + 1e-9);
    for (const auto& run : result.per_seed)
        for (const auto& rec : run.records) {
            // vs-unconstrained gap is never below the vs-constrained one.
            CHECK(rec.opt_gap_unconstrained >= rec.opt_gap - 1e-9);
            CHECK(rec.opt_gap_unconstrained >= -1e-9);
        }
}

TEST_CASE("opsrl emits plots and lp dumps on request") {
    RunConfig config = small_random_config();
    config.agent = AgentKind::Opsrl;
    config.emit_plots = true;
    config.dump_lp = true;
    const fs::path dir = fs::temp_directory_path() / "opsrl_test_out_plots";
    fs::remove_all(dir);
    config.out_dir = dir.string();
    emit_outputs(run_experiment(config), config);
    CHECK(fs::exists(dir / "opsrl.csv"));
    CHECK(fs::exists(dir / "opsrl_opt_regret.svg"));
    CHECK(fs::exists(dir / "opsrl_cons_regret.svg"));
    CHECK(fs::exists(dir / "lp_dump_plan.txt"));
    CHECK(fs::exists(dir / "lp_dump_extended_k1.txt"));
    fs::remove_all(dir);
}

TEST_CASE("baseline sweep") {
    RunConfig config = small_random_config();
    config.episodes = 10;
    SUBCASE("an empty fraction list is an error") {
        CHECK_THROWS_AS(baseline_sweep(config, {}), std::invalid_argument);
    }
    SUBCASE("fractions run with shared seeds and record switch episodes") {
        const fs::path dir = fs::temp_directory_path() / "opsrl_test_sweep";
        fs::remove_all(dir);
        config.out_dir = dir.string();
        const std::vector<SweepEntry> entries = baseline_sweep(config, {0.3, 0.6});
        REQUIRE(entries.size() == 2);
        for (const auto& entry : entries) {
            CHECK(entry.feasible);
            CHECK(entry.switch_episodes.size() == 2);
            CHECK(fs::exists(entry.csv_path));
        }
        fs::remove_all(dir);
    }
    SUBCASE("an infeasible stricter problem is skipped with a warning") {
        // Constraint costs near 1 make tiny budgets unattainable.
        RunConfig hard = config;
        hard.env.random_seed = 2;
        hard.env.random_budget_frac = 0.9;
        const fs::path dir = fs::temp_directory_path() / "opsrl_test_sweep_warn";
        fs::remove_all(dir);
        hard.out_dir = dir.string();
        const std::vector<SweepEntry> entries = baseline_sweep(hard, {1e-6});
        REQUIRE(entries.size() == 1);
        CHECK_FALSE(entries[0].feasible);
        CHECK(fs::exists(dir / "sweep_warnings.txt"));
        fs::remove_all(dir);
    }
}
