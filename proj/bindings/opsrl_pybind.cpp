// Python bindings for the core operations: environment construction, exact
// evaluation, occupancy transforms, CMDP planning, and full learning runs.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <stdexcept>

#include "opsrl/agents.hpp"
#include "opsrl/cmdp.hpp"
#include "opsrl/cmdp_lp.hpp"
#include "opsrl/confidence.hpp"
#include "opsrl/envs.hpp"
#include "opsrl/harness.hpp"
#include "opsrl/rng.hpp"

namespace py = pybind11;
using namespace opsrl;

namespace {

py::array_t<double> make_array(const std::vector<double>& data,
                               const std::vector<py::ssize_t>& shape) {
    py::array_t<double> arr(shape);
    std::memcpy(arr.mutable_data(), data.data(), data.size() * sizeof(double));
    return arr;
}

std::vector<double> from_array(const py::array_t<double>& arr, std::size_t expected,
                               const char* what) {
    const auto buf = arr.request();
    if (static_cast<std::size_t>(buf.size) != expected)
        throw std::invalid_argument(std::string(what) + ": expected " +
                                    std::to_string(expected) + " entries, got " +
                                    std::to_string(buf.size));
    py::array_t<double> contiguous = py::array_t<double>::ensure(arr);
    std::vector<double> out(expected);
    std::memcpy(out.data(), contiguous.data(), expected * sizeof(double));
    return out;
}

AgentKind agent_from_name(const std::string& name) {
    if (name == "opsrl") return AgentKind::Opsrl;
    if (name == "optcmdp") return AgentKind::OptCmdp;
    if (name == "ucrl") return AgentKind::UcrlUnconstrained;
    if (name == "baseline") return AgentKind::FixedBaseline;
    throw std::invalid_argument("unknown agent '" + name + "'");
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Tabular constrained-MDP safe-exploration toolkit (C++ core)";

    py::class_<TabularCmdp>(m, "TabularCmdp")
        .def(py::init([](py::array_t<double> transition, py::array_t<double> objective,
                         py::array_t<double> constraint, int horizon, double budget,
                         int initial_state) {
                 const auto buf = transition.request();
                 if (buf.ndim != 3 || buf.shape[0] != buf.shape[2])
                     throw std::invalid_argument("transition must have shape (S, A, S)");
                 TabularCmdp model;
                 model.num_states = static_cast<int>(buf.shape[0]);
                 model.num_actions = static_cast<int>(buf.shape[1]);
                 model.horizon = horizon;
                 model.budget = budget;
                 model.initial_state = initial_state;
                 const std::size_t sa =
                     static_cast<std::size_t>(model.num_states) * model.num_actions;
                 model.transition = from_array(transition, sa * model.num_states, "transition");
                 model.objective_cost = from_array(objective, sa, "objective_cost");
                 model.constraint_cost = from_array(constraint, sa, "constraint_cost");
                 validate_model(model);
                 return model;
             }),
             py::arg("transition"), py::arg("objective_cost"), py::arg("constraint_cost"),
             py::arg("horizon"), py::arg("budget"), py::arg("initial_state") = 0)
        .def_readonly("num_states", &TabularCmdp::num_states)
        .def_readonly("num_actions", &TabularCmdp::num_actions)
        .def_readonly("horizon", &TabularCmdp::horizon)
        .def_readonly("budget", &TabularCmdp::budget)
        .def_readonly("initial_state", &TabularCmdp::initial_state)
        .def_property_readonly("transition",
                               [](const TabularCmdp& model) {
                                   return make_array(model.transition,
                                                     {model.num_states, model.num_actions,
                                                      model.num_states});
                               })
        .def_property_readonly("objective_cost",
                               [](const TabularCmdp& model) {
                                   return make_array(model.objective_cost,
                                                     {model.num_states, model.num_actions});
                               })
        .def_property_readonly("constraint_cost",
                               [](const TabularCmdp& model) {
                                   return make_array(model.constraint_cost,
                                                     {model.num_states, model.num_actions});
                               })
        .def("__repr__", [](const TabularCmdp& model) {
            return "<TabularCmdp S=" + std::to_string(model.num_states) + " A=" +
                   std::to_string(model.num_actions) + " H=" +
                   std::to_string(model.horizon) + ">";
        });

    py::class_<Policy>(m, "Policy")
        .def(py::init([](py::array_t<double> probs) {
                 const auto buf = probs.request();
                 if (buf.ndim != 3)
                     throw std::invalid_argument("policy must have shape (H, S, A)");
                 Policy policy;
                 policy.horizon = static_cast<int>(buf.shape[0]);
                 policy.num_states = static_cast<int>(buf.shape[1]);
                 policy.num_actions = static_cast<int>(buf.shape[2]);
                 policy.probs = from_array(
                     probs,
                     static_cast<std::size_t>(policy.horizon) * policy.num_states *
                         policy.num_actions,
                     "policy");
                 return policy;
             }),
             py::arg("probs"))
        .def_readonly("horizon", &Policy::horizon)
        .def_readonly("num_states", &Policy::num_states)
        .def_readonly("num_actions", &Policy::num_actions)
        .def_property_readonly("probs", [](const Policy& policy) {
            return make_array(policy.probs,
                              {policy.horizon, policy.num_states, policy.num_actions});
        });

    m.def(
        "build_media",
        [](int buffer_cap, double mu_fast, double mu_slow, double gamma, int horizon,
           double budget_frac) {
            MediaParams params;
            params.buffer_cap = buffer_cap;
            params.mu_fast = mu_fast;
            params.mu_slow = mu_slow;
            params.gamma = gamma;
            params.horizon = horizon;
            params.budget_frac = budget_frac;
            return build_media(params);
        },
        py::arg("buffer_cap") = 20, py::arg("mu_fast") = 0.9, py::arg("mu_slow") = 0.1,
        py::arg("gamma") = 0.5, py::arg("horizon") = 10, py::arg("budget_frac") = 0.5,
        "Media streaming benchmark CMDP");

    m.def(
        "build_inventory",
        [](int capacity, int horizon, double budget_frac) {
            InventoryParams params;
            params.capacity = capacity;
            params.horizon = horizon;
            params.budget_frac = budget_frac;
            return build_inventory(params);
        },
        py::arg("capacity") = 6, py::arg("horizon") = 7, py::arg("budget_frac") = 0.5,
        "Inventory control benchmark CMDP");

    m.def("build_random", &build_random, py::arg("seed"), py::arg("num_states"),
          py::arg("num_actions"), py::arg("horizon"), py::arg("budget_frac"),
          "Seeded random CMDP fixture");

    m.def("model_to_text", &model_to_text, py::arg("model"));

    m.def(
        "evaluate_policy",
        [](const TabularCmdp& model, const Policy& policy, py::array_t<double> cost) {
            const std::size_t sa =
                static_cast<std::size_t>(model.num_states) * model.num_actions;
            const ValueTable table =
                evaluate_policy(model, policy, from_array(cost, sa, "cost"));
            return make_array(table.v, {model.horizon + 1, model.num_states});
        },
        py::arg("model"), py::arg("policy"), py::arg("cost"),
        "Exact V^h(s) table under an arbitrary (S, A) cost");

    m.def(
        "policy_value",
        [](const TabularCmdp& model, const Policy& policy, py::array_t<double> cost) {
            const std::size_t sa =
                static_cast<std::size_t>(model.num_states) * model.num_actions;
            return policy_value(model, policy, from_array(cost, sa, "cost"));
        },
        py::arg("model"), py::arg("policy"), py::arg("cost"));

    m.def(
        "occupancy_of_policy",
        [](const TabularCmdp& model, const Policy& policy) {
            const OccupancyMeasure occ = occupancy_of_policy(model, policy);
            return make_array(occ.w, {occ.horizon, occ.num_states, occ.num_actions});
        },
        py::arg("model"), py::arg("policy"));

    m.def(
        "policy_from_occupancy",
        [](py::array_t<double> w) {
            const auto buf = w.request();
            if (buf.ndim != 3)
                throw std::invalid_argument("occupancy must have shape (H, S, A)");
            OccupancyMeasure occ;
            occ.horizon = static_cast<int>(buf.shape[0]);
            occ.num_states = static_cast<int>(buf.shape[1]);
            occ.num_actions = static_cast<int>(buf.shape[2]);
            occ.w = from_array(w,
                               static_cast<std::size_t>(occ.horizon) * occ.num_states *
                                   occ.num_actions,
                               "occupancy");
            return policy_from_occupancy(occ);
        },
        py::arg("w"));

    m.def(
        "sample_episode",
        [](const TabularCmdp& model, const Policy& policy, std::uint64_t seed) {
            Rng rng(seed);
            const EpisodeTrace trace = sample_episode(model, policy, rng);
            py::dict out;
            out["states"] = py::cast(trace.states);
            out["actions"] = py::cast(trace.actions);
            out["objective_costs"] = py::cast(trace.objective_costs);
            out["constraint_costs"] = py::cast(trace.constraint_costs);
            return out;
        },
        py::arg("model"), py::arg("policy"), py::arg("seed"));

    m.def(
        "plan_cmdp",
        [](const TabularCmdp& model) {
            const PlanResult plan = plan_cmdp(model);
            py::dict out;
            out["policy"] = py::cast(plan.policy);
            out["value"] = plan.value;
            out["constraint_value"] = plan.constraint_value;
            return out;
        },
        py::arg("model"),
        "Solve the known-model CMDP through the occupancy LP; raises on infeasible");

    m.def(
        "make_baseline",
        [](const TabularCmdp& model, double target_value) {
            auto [policy, value] = make_baseline(model, target_value);
            py::dict out;
            out["policy"] = py::cast(policy);
            out["value"] = value;
            return out;
        },
        py::arg("model"), py::arg("target_value"));

    m.def(
        "run_experiment",
        [](const std::string& env, const std::string& agent, std::int64_t episodes,
           int num_seeds, std::uint64_t master_seed, double delta, double baseline_frac,
           py::object fixed_k0, bool parallel_seeds) {
            RunConfig config;
            config.env.kind = env;
            config.agent = agent_from_name(agent);
            config.episodes = episodes;
            config.num_seeds = num_seeds;
            config.master_seed = master_seed;
            config.delta = delta;
            config.baseline_frac = baseline_frac;
            config.parallel_seeds = parallel_seeds;
            if (!fixed_k0.is_none()) config.fixed_k0 = fixed_k0.cast<std::int64_t>();
            const ExperimentResult result = run_experiment(config);
            py::list seeds_out;
            for (const auto& run : result.per_seed) {
                const py::ssize_t K = static_cast<py::ssize_t>(run.records.size());
                py::array_t<double> cum_opt(K), cum_cons(K), value_r(K), value_c(K);
                py::array_t<bool> used(K);
                for (py::ssize_t k = 0; k < K; ++k) {
                    const RegretRecord& rec = run.records[static_cast<std::size_t>(k)];
                    cum_opt.mutable_at(k) = rec.cum_opt_regret;
                    cum_cons.mutable_at(k) = rec.cum_cons_regret;
                    value_r.mutable_at(k) = rec.value_r;
                    value_c.mutable_at(k) = rec.value_c;
                    used.mutable_at(k) = rec.used_baseline;
                }
                py::dict entry;
                entry["seed"] = run.seed;
                entry["switch_episode"] = run.switch_episode;
                entry["cum_opt_regret"] = cum_opt;
                entry["cum_cons_regret"] = cum_cons;
                entry["value_r"] = value_r;
                entry["value_c"] = value_c;
                entry["used_baseline"] = used;
                seeds_out.append(entry);
            }
            py::dict out;
            out["per_seed"] = seeds_out;
            out["optimal_value_r"] = result.optimal_value_r;
            out["optimal_value_c"] = result.optimal_value_c;
            out["unconstrained_value_r"] = result.unconstrained_value_r;
            out["baseline_value_r"] = result.baseline_value_r;
            out["baseline_value_c"] = result.baseline_value_c;
            out["budget"] = result.budget;
            return out;
        },
        py::arg("env") = "media", py::arg("agent") = "opsrl", py::arg("episodes") = 1000,
        py::arg("num_seeds") = 5, py::arg("master_seed") = 90210, py::arg("delta") = 0.1,
        py::arg("baseline_frac") = 0.2, py::arg("fixed_k0") = py::none(),
        py::arg("parallel_seeds") = true,
        "Run a learning experiment and return exact per-episode regret records");
}
