#pragma once

#include <utility>

#include "ecodrive/dp.hpp"
#include "ecodrive/powertrain.hpp"
#include "ecodrive/route.hpp"

namespace ecodrive {

/// Route resampled onto stage boundaries. Positions are 1-based; position p
/// sits at boundary distance d(p) = boundaries[p-1].
struct DiscretizedRoute {
    std::vector<double> boundaries_m;    // N+1 entries, strictly increasing
    std::vector<SegmentLimits> limits;   // per position
    std::vector<double> dwell_s;         // per position (stop-sign / red-light dwell)
    std::vector<std::uint8_t> collapse;  // per position: creep-only velocity set
    std::vector<int> signal_index;       // per position, -1 if none
    std::vector<TrafficSignal> signals;  // copy of the route's signal list
    int stages() const { return static_cast<int>(boundaries_m.size()) - 1; }
};

/// Build a uniform discretization with `grid.distance_step_m`; stop signs (and
/// signals, when `signals_as_stops`) snap to the nearest stage boundary.
DiscretizedRoute discretize_route(const RouteProfile& route, const GridSpec& grid,
                                  const CostWeights& weights, bool signals_as_stops);

struct ControlPair {
    double t_eng_nm;
    double t_bsg_nm;
};

/// Production stage model: the mild-hybrid plant on a discretized route.
/// Immutable after construction; step() is pure and thread-safe.
class EcoModel final : public StageModel {
public:
    EcoModel(DiscretizedRoute disc, VehicleParams veh, PowertrainMaps maps, BatteryParams batt,
             GridSpec grid, CostWeights weights, double mass_scale = 1.0,
             int control_coarsen = 1);

    int num_stages() const override { return disc_.stages(); }
    const std::vector<double>& velocity_nodes() const override { return vel_nodes_; }
    const std::vector<double>& soc_nodes() const override { return soc_nodes_; }
    int num_controls() const override { return static_cast<int>(controls_.size()); }
    std::vector<std::uint8_t> velocity_mask(int pos) const override;
    std::optional<StageTransition> step(int stage, double v, double soc, int control,
                                        double v_clamp_hi) const override;
    bool has_kernel() const override { return true; }
    std::optional<StageKernel> step_kernel(int stage, int v_node, int control,
                                           double v_clamp_hi) const override;
    double soc_rate(int v_node, int control, int soc_node) const override;

    /// Transition with explicit torque values (policy replay path).
    std::optional<StageTransition> step_torques(int stage, double v, double soc,
                                                double t_eng_nm, double t_bsg_nm,
                                                double v_clamp_hi) const;

    /// Throwing variant of step() for the public transition contract.
    StageTransition transition(int stage, double v, double soc, int control,
                               double v_clamp_hi) const;

    ControlPair control(int c) const { return controls_[c]; }
    const DiscretizedRoute& route() const { return disc_; }
    const GridSpec& grid() const { return grid_; }
    const CostWeights& weights() const { return weights_; }
    const VehicleParams& vehicle() const { return veh_; }
    const PowertrainMaps& maps() const { return maps_; }
    const BatteryParams& battery() const { return batt_; }
    double mass_scale() const { return mass_scale_; }
    double creep_speed() const { return vel_nodes_.front(); }
    /// Highest admissible velocity node value at `pos` (brake clamp target).
    double clamp_speed(int pos) const;

    /// Steady-cruise fuel rate on flat ground at speed v (cost normalization).
    double cruise_fuel_rate(double v_mps) const;

private:
    struct NodeCache {
        int gear;
        double omega_eng;
        std::vector<std::uint8_t> valid;  // per control
        std::vector<double> force_n;      // traction force, brake excluded
        std::vector<double> fuel_kgps;
        std::vector<double> bsg_power_w;
        std::vector<double> soc_rate;  // [control * nsoc + soc_node], 1/s; NaN infeasible
    };

    std::optional<StageKernel> kernel_math(int stage, double v, double force_n,
                                           double fuel_kgps, double v_clamp_hi) const;

    std::optional<StageTransition> integrate(int stage, double v, double soc, double force_n,
                                             double fuel_kgps, double bsg_power_w,
                                             double v_clamp_hi) const;

    DiscretizedRoute disc_;
    VehicleParams veh_;
    PowertrainMaps maps_;
    BatteryParams batt_;
    GridSpec grid_;
    CostWeights weights_;
    double mass_scale_;
    double mass_kg_;
    std::vector<double> vel_nodes_;
    std::vector<double> soc_nodes_;
    std::vector<ControlPair> controls_;
    std::vector<NodeCache> cache_;  // per velocity node
};

}  // namespace ecodrive
