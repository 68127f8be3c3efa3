#pragma once

#include <map>
#include <utility>
#include <vector>

#include "ecodrive/dp.hpp"
#include "ecodrive/route.hpp"

namespace ecodrive {

struct HorizonInfeasible : std::runtime_error {
    HorizonInfeasible(int stage_, const std::string& what)
        : std::runtime_error(what), stage(stage_) {}
    int stage;
};

/// Per-position tightening of the admissible velocity set, applied on top of
/// the model's route mask (a shrinkage, never an expansion).
struct BoundsOverride {
    double v_lo = 0.0;
    double v_hi = std::numeric_limits<double>::infinity();
    bool collapse = false;  // creep-only (signal treated as stop)
};

using OverrideMap = std::map<int, BoundsOverride>;  // keyed by position

/// Route velocity mask at `pos` with any override applied (shrink-only; the
/// creep node always stays admissible).
std::vector<std::uint8_t> admissible_mask(const StageModel& model, int pos,
                                          const OverrideMap& overrides);

/// Largest admissible velocity node under admissible_mask().
double top_admissible_speed(const StageModel& model, int pos, const OverrideMap& overrides);

struct HorizonSolution {
    int control = -1;
    double t_eng_nm = 0.0;
    double t_bsg_nm = 0.0;
    double cost = 0.0;                // predicted cost-to-go incl. terminal value
    std::vector<double> v_pred;       // positions k+1 .. k+N_H (when requested)
    std::vector<double> soc_pred;
};

/// One receding-horizon solve: backward recursion over `horizon` stages from
/// position `start_pos`, with the full-route value table as terminal cost.
/// Throws HorizonInfeasible when no admissible control exists at the root.
HorizonSolution solve_horizon(const StageModel& model, const ValueTable& vt, int start_pos,
                              int horizon, double v, double soc,
                              const OverrideMap& overrides = {},
                              bool want_prediction = false);

struct PassInGreen {
    bool feasible = false;
    int window = -1;          // index into the window list
    double t_early = 0.0;     // arrival-time envelope, seconds from now
    double t_late = 0.0;
};

/// Arrival-time envelope test: earliest arrival via max acceleration then
/// cruise at v_max, latest via max braking then cruise at v_min; a window is
/// reachable iff it intersects the envelope. Windows are (t_open, t_close)
/// relative to now.
PassInGreen pass_in_green_feasible(double v_now, double dist_m,
                                   const std::vector<std::pair<double, double>>& windows,
                                   double v_min, double v_max, double a_min, double a_max);

struct EcoAndDirective {
    double v_off_min = 0.0;
    double v_off_max = 0.0;
    bool feasible = false;
    bool treat_as_stop = false;
};

/// SPaT-aware speed-window selection: minimal speed-limit shrinkage that
/// steers the mean-speed arrival into a reachable green window, or
/// treat-as-stop when no window is reachable.
EcoAndDirective eco_and_offsets(const SignalState& state, double v_now, double dist_m,
                                const std::vector<std::pair<double, double>>& windows,
                                double v_min, double v_max, double a_min, double a_max);

/// Phase-only line-of-sight rule: beyond `los_range_m` or on red/yellow the
/// signal is a stop; on green within range it is ignored.
EcoAndDirective los_constraints(const SignalState& state, double dist_m, double los_range_m);

/// Braking-envelope recursion v_{s+1}^2 = v_s^2 - 2|a_min|dd, clamped at
/// `target_limit` once reached; element i bounds the velocity i+1 stages ahead.
std::vector<double> shape_constraints(double v_now, double target_limit, double dd_m,
                                      double a_min, int n_stages);

}  // namespace ecodrive
