#pragma once

#include <cstdint>

#include "opsrl/cmdp.hpp"

namespace opsrl {

/// Media streaming control: the state is the buffer length 0..buffer_cap,
/// action 0 requests the slow service (success rate mu_slow) and action 1 the
/// fast service (success rate mu_fast). Playback drains the buffer with
/// probability gamma per step. Objective cost 1{s = 0} penalizes an empty
/// buffer; constraint cost 1{a = fast} limits fast-service usage to the
/// budget, which defaults to H/2. gamma has no stated reference value and is
/// an artifact parameter.
struct MediaParams {
    int buffer_cap = 20;
    double mu_fast = 0.9;
    double mu_slow = 0.1;
    double gamma = 0.5;
    int horizon = 10;
    double budget_frac = 0.5; // budget = budget_frac * horizon
};

TabularCmdp build_media(const MediaParams& params = {});

/// Single-product inventory control over a week. The state is the stock level
/// 0..capacity; the action is the purchase amount, with illegal purchases
/// (overflowing the capacity) remapped to the largest legal amount. Demand is
/// drawn from the weights below renormalized over support {0..4}. Revenue
/// 8*(units sold) and cost 4 + 2a + s are min-max normalized into [0,1] over
/// the legal state-action pairs; the objective cost is 1 - normalized
/// revenue, so minimizing it maximizes revenue.
struct InventoryParams {
    int capacity = 6;
    int horizon = 7;
    double demand_weights[5] = {0.3, 0.2, 0.2, 0.05, 0.05}; // renormalized to sum 1
    double revenue_unit = 8.0;
    double purchase_fixed = 4.0;
    double purchase_var = 2.0;
    double holding_coeff = 1.0;
    double budget_frac = 0.5;
};

/// Normalization constants used to map raw revenue/cost into [0,1]; recorded
/// in run metadata so raw values can be reconstructed.
struct InventoryNormalization {
    double revenue_min = 0.0;
    double revenue_max = 0.0;
    double cost_min = 0.0;
    double cost_max = 0.0;
};

TabularCmdp build_inventory(const InventoryParams& params = {},
                            InventoryNormalization* normalization = nullptr);

/// Seeded random CMDP for property tests: rows are normalized positive
/// uniforms, costs are uniform in [0,1], budget = budget_frac * H. Identical
/// seeds produce identical models.
TabularCmdp build_random(std::uint64_t seed, int num_states, int num_actions, int horizon,
                         double budget_frac);

/// Plain-text matrix dump of a model (transition rows, costs, scalars) for
/// external verification.
std::string model_to_text(const TabularCmdp& model);

} // namespace opsrl
