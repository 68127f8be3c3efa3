#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecodrive {

struct GridBounds : std::runtime_error {
    explicit GridBounds(const std::string& what) : std::runtime_error(what) {}
};

struct InfeasibleTransition : std::runtime_error {
    explicit InfeasibleTransition(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kInfCost = std::numeric_limits<double>::infinity();

struct GridSpec {
    double distance_step_m = 10.0;
    double velocity_step_mps = 1.36;
    double soc_step = 0.02;
    double eng_torque_step_nm = 13.2;
    double bsg_torque_step_nm = 4.2;
    double velocity_min_mps = 0.5;  // creep node, always admissible (stop handling)
    double velocity_max_mps = 18.0;
    double soc_min = 0.30;
    double soc_max = 0.70;
    double accel_min_mps2 = -2.4;
    double accel_max_mps2 = 2.4;
};

struct CostWeights {
    double gamma = 0.7;            // in (0,1): fuel vs travel-time weight
    double mdot_norm_kgps = 0.0;   // <=0: model picks mid-speed cruise fuel rate
    double stop_dwell_s = 2.0;
};

/// Weighted fuel/time stage cost for a step of duration t_s.
double stage_cost(double fuel_rate_kgps, double t_s, const CostWeights& w);

struct StageTransition {
    double v_next = 0.0;
    double soc_next = 0.0;
    double time_s = 0.0;   // includes any stop dwell at the arrival position
    double fuel_kg = 0.0;
    double brake_n = 0.0;
    double cost = 0.0;
};

/// SoC-independent part of a node transition (fast solver path).
struct StageKernel {
    double v_next = 0.0;
    double time_s = 0.0;    // includes stop dwell
    double travel_s = 0.0;  // moving time only
    double fuel_kg = 0.0;
    double brake_n = 0.0;
    double cost = 0.0;
};

/// Spatial stage problem as seen by the backward-recursion solver: global
/// velocity/SoC node grids, per-position admissible velocity masks, and the
/// stage transition. Positions are 1-based: stage s joins position s to s+1,
/// s = 1..num_stages().
class StageModel {
public:
    virtual ~StageModel() = default;
    virtual int num_stages() const = 0;
    virtual const std::vector<double>& velocity_nodes() const = 0;
    virtual const std::vector<double>& soc_nodes() const = 0;
    virtual int num_controls() const = 0;
    virtual std::vector<std::uint8_t> velocity_mask(int pos) const = 0;
    /// Transition from (v, soc) at stage s under control c. `v_clamp_hi` is the
    /// largest admissible velocity at position s+1; the friction brake absorbs
    /// any excess as a nonnegative slack. Returns nullopt when infeasible.
    virtual std::optional<StageTransition> step(int stage, double v, double soc, int control,
                                                double v_clamp_hi) const = 0;

    /// Optional fast path for the backward recursions: models whose dynamics
    /// depend on SoC only through the charge bookkeeping can expose the
    /// SoC-independent part of a node transition plus a per-node SoC rate,
    /// letting the solvers hoist everything else out of the SoC loop.
    virtual bool has_kernel() const { return false; }
    /// SoC-independent transition part from velocity node `v_node`;
    /// `travel_s` excludes any stop dwell (SoC drifts only while moving).
    virtual std::optional<StageKernel> step_kernel(int /*stage*/, int /*v_node*/,
                                                   int /*control*/,
                                                   double /*v_clamp_hi*/) const {
        return std::nullopt;
    }
    /// d(SoC)/dt at (velocity node, control, SoC node); NaN when the battery
    /// cannot meet the electrical demand.
    virtual double soc_rate(int /*v_node*/, int /*control*/, int /*soc_node*/) const {
        return std::numeric_limits<double>::quiet_NaN();
    }
};

/// Tabular value function V_pos(v, soc) with companion argmin policy.
struct ValueTable {
    std::vector<double> vel_nodes;
    std::vector<double> soc_nodes;
    int stages = 0;  // N; tables cover positions 1..N+1
    std::vector<std::vector<double>> cost;      // [pos-1][iv * nsoc + isoc]
    std::vector<std::vector<std::int32_t>> policy;  // [pos-1], -1 = none
    std::uint64_t route_hash = 0;
    std::uint64_t config_hash = 0;

    std::size_t node_index(std::size_t iv, std::size_t isoc) const {
        return iv * soc_nodes.size() + isoc;
    }
    /// Bilinear interpolation; +inf when any supporting corner is infeasible
    /// or the query leaves the grid hull (solver-internal convention).
    double value_interp(int pos, double v, double soc) const;
    /// Same, but throws GridBounds outside the hull (public query contract).
    double query(int pos, double v, double soc) const;
};

struct DpOptions {
    double terminal_soc_target = 0.5;
    double terminal_soc_band = 0.02;  // one soc grid step
    /// Optional custom terminal cost; overrides the SoC-band rule when set.
    std::function<double(double v, double soc)> terminal_cost;
};

struct DpResult {
    ValueTable table;
    std::optional<int> empty_stage;  // first stage whose feasible set is empty
};

/// Full-horizon backward recursion (positions N+1 down to 1).
DpResult solve_dp(const StageModel& model, const DpOptions& opt);

/// One backward-recursion layer for stage s: per admissible (velocity, SoC)
/// node, the best stage-cost-plus-interpolated-tail against `next_layer` and
/// its argmin. `clamp_hi` is the brake-clamp target at position s+1.
/// `policy_out` may be null. Returns true when any node is feasible.
bool solve_layer(const StageModel& model, int s, const std::vector<std::uint8_t>& mask,
                 double clamp_hi, const std::vector<double>& next_layer,
                 std::vector<double>& cost_out, std::vector<std::int32_t>* policy_out);

/// Bilinear weights helper shared by value interpolation and policy replay.
struct CellWeights {
    std::size_t i0, i1, j0, j1;
    double w00, w01, w10, w11;
    bool inside;
};
CellWeights cell_weights(const std::vector<double>& xs, const std::vector<double>& ys, double x,
                         double y);

}  // namespace ecodrive
