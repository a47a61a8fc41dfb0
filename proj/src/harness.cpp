#include "opsrl/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include "opsrl/cmdp_lp.hpp"
#include "opsrl/confidence.hpp"
#include "opsrl/rng.hpp"

namespace opsrl {

namespace fs = std::filesystem;

const char* agent_name(AgentKind kind) {
    switch (kind) {
    case AgentKind::Opsrl: return "opsrl";
    case AgentKind::OptCmdp: return "optcmdp";
    case AgentKind::UcrlUnconstrained: return "ucrl";
    case AgentKind::FixedBaseline: return "baseline";
    }
    return "unknown";
}

TabularCmdp build_env(const EnvConfig& env, InventoryNormalization* normalization) {
    if (env.kind == "media") return build_media(env.media);
    if (env.kind == "inventory") return build_inventory(env.inventory, normalization);
    if (env.kind == "random")
        return build_random(env.random_seed, env.random_states, env.random_actions,
                            env.random_horizon, env.random_budget_frac);
    throw std::invalid_argument("unknown environment kind: " + env.kind);
}

namespace {

// Locale-independent shortest-round-trip formatting; keeps CSV output
// byte-identical across runs and platforms.
std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<std::uint64_t> resolve_seeds(const RunConfig& config) {
    if (!config.seeds.empty()) return config.seeds;
    std::vector<std::uint64_t> seeds(config.num_seeds);
    for (int i = 0; i < config.num_seeds; ++i)
        seeds[i] = split_seed(config.master_seed, static_cast<std::uint64_t>(i));
    return seeds;
}

struct TrueValues {
    double optimal_r, optimal_c;
    double unconstrained_r, unconstrained_c;
    double baseline_r, baseline_c;
    Policy optimal_policy;
    Policy baseline_policy;
};

SeedRunResult run_one_seed(const RunConfig& config, const TabularCmdp& model,
                           const TrueValues& truth, std::uint64_t seed) {
    const int S = model.num_states, A = model.num_actions, H = model.horizon;
    SeedRunResult result;
    result.seed = seed;
    result.records.reserve(config.episodes);

    std::optional<Policy> baseline;
    double baseline_value = 0.0;
    if (config.agent == AgentKind::Opsrl || config.agent == AgentKind::FixedBaseline) {
        baseline = truth.baseline_policy;
        baseline_value = truth.baseline_c;
    }
    Agent agent(config.agent, S, A, H, model.initial_state, model.objective_cost,
                model.constraint_cost, model.budget, baseline, baseline_value,
                config.fixed_k0);
    ConfidenceState conf =
        make_confidence_state(S, A, H, config.episodes, config.delta);

    double cum_opt = 0.0, cum_cons = 0.0, cum_opt_unc = 0.0;
    for (std::int64_t k = 1; k <= config.episodes; ++k) {
        const SelectionOutcome outcome = agent.select(conf);
        double value_r, value_c;
        if (outcome.used_baseline) {
            value_r = truth.baseline_r;
            value_c = truth.baseline_c;
        } else {
            value_r = policy_value(model, outcome.policy, model.objective_cost);
            value_c = policy_value(model, outcome.policy, model.constraint_cost);
        }
        RegretRecord rec;
        rec.episode = k;
        rec.opt_gap = value_r - truth.optimal_r;
        rec.cons_excess = std::max(0.0, value_c - model.budget);
        rec.opt_gap_unconstrained = value_r - truth.unconstrained_r;
        rec.used_baseline = outcome.used_baseline;
        rec.value_r = value_r;
        rec.value_c = value_c;
        cum_opt += rec.opt_gap;
        cum_cons += rec.cons_excess;
        cum_opt_unc += rec.opt_gap_unconstrained;
        rec.cum_opt_regret = cum_opt;
        rec.cum_cons_regret = cum_cons;
        rec.cum_opt_regret_unconstrained = cum_opt_unc;
        result.records.push_back(rec);
        if (!outcome.used_baseline && result.switch_episode < 0)
            result.switch_episode = k;

        Rng episode_rng(split_seed(seed, static_cast<std::uint64_t>(k)));
        const EpisodeTrace trace = sample_episode(model, outcome.policy, episode_rng);
        update(conf, trace);
    }
    return result;
}

void write_lp_dumps(const RunConfig& config, const TabularCmdp& model) {
    const fs::path dir(config.out_dir);
    {
        const LinearProgram lp = build_cmdp_lp(model, model.objective_cost,
                                               model.constraint_cost, model.budget);
        std::ofstream out(dir / "lp_dump_plan.txt");
        const int S = model.num_states, A = model.num_actions;
        out << lp_to_text(lp, [S, A](int j) {
            const int h = j / (S * A), rem = j % (S * A);
            return "w[h" + std::to_string(h) + ",s" + std::to_string(rem / A) + ",a" +
                   std::to_string(rem % A) + "]";
        });
    }
    {
        ConfidenceState conf = make_confidence_state(
            model.num_states, model.num_actions, model.horizon, config.episodes,
            config.delta);
        const std::vector<double> p_hat = empirical_model(conf);
        const BonusTable bonus = bonuses(conf);
        const LinearProgram lp = build_extended_lp(
            p_hat, bonus.beta, model.objective_cost, model.constraint_cost, model.budget,
            model.num_states, model.num_actions, model.horizon, model.initial_state);
        std::ofstream out(dir / "lp_dump_extended_k1.txt");
        const int S = model.num_states, A = model.num_actions;
        out << lp_to_text(lp, [S, A](int j) {
            const int t = j % S;
            const int b = j / S;
            const int h = b / (S * A), rem = b % (S * A);
            return "z[h" + std::to_string(h) + ",s" + std::to_string(rem / A) + ",a" +
                   std::to_string(rem % A) + ",t" + std::to_string(t) + "]";
        });
    }
}

} // namespace

ExperimentResult run_experiment(const RunConfig& config) {
    if (config.episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    if (!(config.delta > 0.0 && config.delta < 1.0))
        throw std::invalid_argument("delta must lie in (0,1)");
    const std::vector<std::uint64_t> seeds = resolve_seeds(config);
    if (seeds.empty()) throw std::invalid_argument("seed list must be non-empty");

    // Pre-flight: fail on an unwritable output directory before any episode.
    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        const fs::path probe = fs::path(config.out_dir) / ".write_probe";
        std::ofstream probe_stream(probe);
        if (!probe_stream) throw std::runtime_error("output directory is not writable: " +
                                                    config.out_dir);
        probe_stream.close();
        fs::remove(probe);
    }

    ExperimentResult result;
    TabularCmdp model = build_env(config.env, &result.inventory_normalization);
    result.budget = model.budget;
    result.seeds = seeds;

    const PlanResult plan = plan_cmdp(model);
    TrueValues truth;
    truth.optimal_policy = plan.policy;
    truth.optimal_r = plan.value;
    truth.optimal_c = plan.constraint_value;
    truth.unconstrained_r = unconstrained_optimum(model, model.objective_cost);
    {
        // Exact V_c of the (deterministic) unconstrained optimum, needed for
        // the UCRL asymptotic-excess diagnostics. Greedy extraction mirrors
        // unconstrained_optimum.
        const int S = model.num_states, A = model.num_actions, H = model.horizon;
        Policy greedy;
        greedy.horizon = H;
        greedy.num_states = S;
        greedy.num_actions = A;
        greedy.probs.assign(static_cast<std::size_t>(H) * S * A, 0.0);
        std::vector<double> v_next(S, 0.0), v_here(S, 0.0);
        std::vector<std::vector<int>> best_actions(H, std::vector<int>(S, 0));
        for (int h = H - 1; h >= 0; --h) {
            for (int s = 0; s < S; ++s) {
                double best = 0.0;
                int best_a = 0;
                for (int a = 0; a < A; ++a) {
                    double q = model.objective_cost[model.sa(s, a)];
                    for (int t = 0; t < S; ++t) q += model.p(s, a, t) * v_next[t];
                    if (a == 0 || q < best) {
                        best = q;
                        best_a = a;
                    }
                }
                v_here[s] = best;
                best_actions[h][s] = best_a;
            }
            v_next.swap(v_here);
        }
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s)
                greedy.probs[greedy.hsa(h, s, best_actions[h][s])] = 1.0;
        result.unconstrained_value_c =
            policy_value(model, greedy, model.constraint_cost);
    }
    truth.unconstrained_c = result.unconstrained_value_c;

    if (config.agent == AgentKind::Opsrl || config.agent == AgentKind::FixedBaseline) {
        auto [baseline_policy, baseline_value] =
            make_baseline(model, config.baseline_frac * model.budget);
        truth.baseline_policy = std::move(baseline_policy);
        truth.baseline_c = baseline_value;
        truth.baseline_r =
            policy_value(model, truth.baseline_policy, model.objective_cost);
    } else {
        truth.baseline_r = truth.baseline_c = 0.0;
        truth.baseline_policy = Policy{};
    }

    result.optimal_value_r = truth.optimal_r;
    result.optimal_value_c = truth.optimal_c;
    result.unconstrained_value_r = truth.unconstrained_r;
    result.baseline_value_r = truth.baseline_r;
    result.baseline_value_c = truth.baseline_c;

    if (!config.out_dir.empty() && config.dump_lp) write_lp_dumps(config, model);

    result.per_seed.resize(seeds.size());
    if (config.parallel_seeds && seeds.size() > 1) {
        std::vector<std::future<SeedRunResult>> futures;
        futures.reserve(seeds.size());
        for (std::uint64_t seed : seeds)
            futures.push_back(std::async(std::launch::async, run_one_seed,
                                         std::cref(config), std::cref(model),
                                         std::cref(truth), seed));
        for (std::size_t i = 0; i < futures.size(); ++i)
            result.per_seed[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < seeds.size(); ++i)
            result.per_seed[i] = run_one_seed(config, model, truth, seeds[i]);
    }
    return result;
}

std::vector<AggregateRow> aggregate(const std::vector<SeedRunResult>& runs) {
    if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
    const std::size_t K = runs.front().records.size();
    for (const auto& run : runs)
        if (run.records.size() != K)
            throw std::invalid_argument("aggregate: ragged runs (episode counts differ)");
    std::vector<AggregateRow> rows(K);
    const double n = static_cast<double>(runs.size());
    for (std::size_t k = 0; k < K; ++k) {
        AggregateRow& row = rows[k];
        row.episode = runs.front().records[k].episode;
        double opt_sum = 0.0, cons_sum = 0.0, used = 0.0;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const RegretRecord& rec = runs[i].records[k];
            if (i == 0) {
                row.opt_min = row.opt_max = rec.cum_opt_regret;
                row.cons_min = row.cons_max = rec.cum_cons_regret;
            } else {
                row.opt_min = std::min(row.opt_min, rec.cum_opt_regret);
                row.opt_max = std::max(row.opt_max, rec.cum_opt_regret);
                row.cons_min = std::min(row.cons_min, rec.cum_cons_regret);
                row.cons_max = std::max(row.cons_max, rec.cum_cons_regret);
            }
            opt_sum += rec.cum_opt_regret;
            cons_sum += rec.cum_cons_regret;
            used += rec.used_baseline ? 1.0 : 0.0;
        }
        row.opt_mean = opt_sum / n;
        row.cons_mean = cons_sum / n;
        row.used_baseline_frac = used / n;
    }
    return rows;
}

namespace {

void write_csv(const fs::path& path, const std::vector<AggregateRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "episode,opt_regret_mean,opt_regret_min,opt_regret_max,cons_regret_mean,"
           "cons_regret_min,cons_regret_max,used_baseline_frac\n";
    for (const auto& row : rows) {
        out << row.episode << ',' << format_double(row.opt_mean) << ','
            << format_double(row.opt_min) << ',' << format_double(row.opt_max) << ','
            << format_double(row.cons_mean) << ',' << format_double(row.cons_min) << ','
            << format_double(row.cons_max) << ',' << format_double(row.used_baseline_frac)
            << '\n';
    }
}

// Minimal SVG polyline plot of the mean curve with a min/max envelope.
void write_svg(const fs::path& path, const std::vector<AggregateRow>& rows,
               bool constraint_metric, const std::string& title) {
    const double width = 640.0, height = 400.0, margin = 46.0;
    double y_max = 1e-12;
    for (const auto& r : rows)
        y_max = std::max(y_max, constraint_metric ? r.cons_max : r.opt_max);
    const double x_span = static_cast<double>(rows.size());
    const auto x_at = [&](std::size_t i) {
        return margin + (width - 2 * margin) * (static_cast<double>(i + 1) / x_span);
    };
    const auto y_at = [&](double v) {
        return height - margin - (height - 2 * margin) * (v / y_max);
    };
    const auto polyline = [&](auto value_of, const char* color, const char* dash) {
        std::ostringstream p;
        p << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\""
          << (dash[0] ? std::string(" stroke-dasharray=\"") + dash + "\"" : "")
          << " points=\"";
        const std::size_t stride = std::max<std::size_t>(1, rows.size() / 1280);
        for (std::size_t i = 0; i < rows.size(); i += stride)
            p << format_double(x_at(i)) << ',' << format_double(y_at(value_of(rows[i])))
              << ' ';
        p << "\"/>\n";
        return p.str();
    };
    std::ofstream out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title
        << "</text>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
        << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << margin << "\" y=\"" << margin - 8 << "\" font-size=\"11\">"
        << format_double(y_max) << "</text>\n";
    out << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 16
        << "\" font-size=\"11\" text-anchor=\"end\">" << rows.size() << "</text>\n";
    if (constraint_metric) {
        out << polyline([](const AggregateRow& r) { return r.cons_min; }, "#9ecae1", "3,3");
        out << polyline([](const AggregateRow& r) { return r.cons_max; }, "#9ecae1", "3,3");
        out << polyline([](const AggregateRow& r) { return r.cons_mean; }, "#08519c", "");
    } else {
        out << polyline([](const AggregateRow& r) { return r.opt_min; }, "#a1d99b", "3,3");
        out << polyline([](const AggregateRow& r) { return r.opt_max; }, "#a1d99b", "3,3");
        out << polyline([](const AggregateRow& r) { return r.opt_mean; }, "#006d2c", "");
    }
    out << "</svg>\n";
}

std::vector<AggregateRow> aggregate_unconstrained(const std::vector<SeedRunResult>& runs) {
    // Reuses the envelope code by rewriting the cumulative optimality column.
    std::vector<SeedRunResult> shadow = runs;
    for (auto& run : shadow)
        for (auto& rec : run.records) {
            rec.cum_opt_regret = rec.cum_opt_regret_unconstrained;
            rec.opt_gap = rec.opt_gap_unconstrained;
        }
    return aggregate(shadow);
}

} // namespace

void emit_outputs(const ExperimentResult& result, const RunConfig& config) {
    if (config.out_dir.empty())
        throw std::invalid_argument("emit_outputs: no output directory configured");
    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);
    const std::vector<AggregateRow> rows = aggregate(result.per_seed);
    const std::string base = agent_name(config.agent);
    write_csv(dir / (base + ".csv"), rows);
    if (config.agent == AgentKind::UcrlUnconstrained)
        write_csv(dir / (base + "_vs_unconstrained.csv"),
                  aggregate_unconstrained(result.per_seed));

    {
        std::ofstream meta(dir / (base + "_run_metadata.txt"));
        meta << "agent=" << base << "\n";
        meta << "env=" << config.env.kind << "\n";
        meta << "episodes=" << config.episodes << "\n";
        meta << "delta=" << format_double(config.delta) << "\n";
        meta << "baseline_frac=" << format_double(config.baseline_frac) << "\n";
        meta << "master_seed=" << config.master_seed << "\n";
        meta << "k0_mode="
             << (config.fixed_k0 ? "fixed:" + std::to_string(*config.fixed_k0)
                                 : std::string("adaptive"))
             << "\n";
        meta << "budget=" << format_double(result.budget) << "\n";
        meta << "optimal_value_r=" << format_double(result.optimal_value_r) << "\n";
        meta << "optimal_value_c=" << format_double(result.optimal_value_c) << "\n";
        meta << "unconstrained_value_r=" << format_double(result.unconstrained_value_r)
             << "\n";
        meta << "unconstrained_value_c=" << format_double(result.unconstrained_value_c)
             << "\n";
        meta << "baseline_value_r=" << format_double(result.baseline_value_r) << "\n";
        meta << "baseline_value_c=" << format_double(result.baseline_value_c) << "\n";
        if (config.env.kind == "inventory") {
            meta << "inventory_revenue_min="
                 << format_double(result.inventory_normalization.revenue_min) << "\n";
            meta << "inventory_revenue_max="
                 << format_double(result.inventory_normalization.revenue_max) << "\n";
            meta << "inventory_cost_min="
                 << format_double(result.inventory_normalization.cost_min) << "\n";
            meta << "inventory_cost_max="
                 << format_double(result.inventory_normalization.cost_max) << "\n";
        }
        if (config.env.kind == "media") {
            meta << "media_gamma=" << format_double(config.env.media.gamma) << "\n";
            meta << "media_mu_fast=" << format_double(config.env.media.mu_fast) << "\n";
            meta << "media_mu_slow=" << format_double(config.env.media.mu_slow) << "\n";
        }
        for (std::size_t i = 0; i < result.per_seed.size(); ++i) {
            meta << "seed_" << i << "=" << result.per_seed[i].seed << "\n";
            meta << "switch_episode_seed_" << i << "=" << result.per_seed[i].switch_episode
                 << "\n";
        }
    }

    if (config.emit_plots) {
        write_svg(dir / (base + "_opt_regret.svg"), rows, false,
                  base + std::string(": cumulative optimality regret"));
        write_svg(dir / (base + "_cons_regret.svg"), rows, true,
                  base + std::string(": cumulative constraint regret"));
    }
}

std::vector<SweepEntry> baseline_sweep(const RunConfig& config,
                                       const std::vector<double>& fractions) {
    if (fractions.empty())
        throw std::invalid_argument("baseline sweep: fraction list must be non-empty");
    std::vector<SweepEntry> entries;
    for (double frac : fractions) {
        SweepEntry entry;
        entry.fraction = frac;
        RunConfig sub = config;
        sub.agent = AgentKind::Opsrl;
        sub.baseline_frac = frac;
        sub.out_dir.clear();
        try {
            const ExperimentResult result = run_experiment(sub);
            entry.feasible = true;
            for (const auto& run : result.per_seed)
                entry.switch_episodes.push_back(run.switch_episode);
            if (!config.out_dir.empty()) {
                fs::create_directories(config.out_dir);
                std::ostringstream name;
                name << "opsrl_frac_" << format_double(frac) << ".csv";
                const fs::path path = fs::path(config.out_dir) / name.str();
                write_csv(path, aggregate(result.per_seed));
                entry.csv_path = path.string();
            }
        } catch (const std::runtime_error& err) {
            entry.feasible = false;
            if (!config.out_dir.empty()) {
                fs::create_directories(config.out_dir);
                std::ofstream warn(fs::path(config.out_dir) / "sweep_warnings.txt",
                                   std::ios::app);
                warn << "fraction " << format_double(frac) << " skipped: " << err.what()
                     << "\n";
            }
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

} // namespace opsrl
