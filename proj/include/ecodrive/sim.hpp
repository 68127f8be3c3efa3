#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "ecodrive/model.hpp"
#include "ecodrive/rollout.hpp"
#include "ecodrive/route.hpp"

namespace ecodrive {

struct DegenerateComparison : std::runtime_error {
    explicit DegenerateComparison(const std::string& what) : std::runtime_error(what) {}
};

enum class Mode { FullDp, Rollout, RolloutEcoAnd, RolloutLos, BaselineDriver };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& name);

struct RunRecord {
    std::vector<double> d_m, t_s, v_mps, soc, t_eng_nm, t_bsg_nm, brake_n, fuel_cum_kg;
    double fuel_kg = 0.0;
    double time_s = 0.0;
    double soc_initial = 0.0;
    double soc_terminal = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    bool ok = true;
    std::string note;
};

struct SimOptions {
    Mode mode = Mode::Rollout;
    int horizon = 20;
    double los_range_m = 100.0;
    double v0 = -1.0;  // <0: start at creep speed
    double soc0 = 0.5;
    std::uint64_t seed = 0;
};

/// Forward pass replaying the stored DP policy (bilinearly interpolated
/// control torques) through the model's plant. With the model the table was
/// solved on this is the full-route optimal trajectory; with a perturbed
/// model it is the base-policy replay of the cost-improvement study.
RunRecord extract_trajectory(const EcoModel& model, const ValueTable& vt, double v0,
                             double soc0);

/// Receding-horizon closed loop: re-solves an N_H-stage rollout problem at
/// every stage, applies the first-step controls to the plant, and handles
/// stop-sign dwell and red-light waits. For the SPaT-aware modes the model
/// must be discretized with signals pass-through.
RunRecord closed_loop_run(const EcoModel& model, const ValueTable& vt,
                          const SpatScenario& scenario, const SimOptions& opt);

struct DriverOptions {
    double aggressiveness = 0.7;  // scales comfort accel/decel use
    double los_range_m = 100.0;
    double stop_dwell_s = 2.0;
    double soc0 = 0.5;
    double dt_s = 0.1;
};

/// Time-domain heuristic line-of-sight driver with a production-style torque
/// split: the behavioral baseline of the comparison studies.
RunRecord baseline_driver_run(const VehicleParams& veh, const PowertrainMaps& maps,
                              const BatteryParams& batt, const RouteProfile& route,
                              const SpatScenario& scenario, const DriverOptions& opt);

/// gamma * m_f / mdot_norm + (1 - gamma) * tau over the whole run.
double cumulative_cost(const RunRecord& r, const CostWeights& w);

/// Normalized cost error |(J - J_perturbed) / (J_orig - J_perturbed)|.
double error_metric(double j, double j_orig, double j_perturbed);

struct SampleStats {
    double mean = 0.0;
    double sd = 0.0;
    int n = 0;
};
SampleStats sample_stats(const std::vector<double>& xs);

/// One-sided Welch t-test p-value for H1: mean(a) < mean(b).
double welch_one_sided_p(const std::vector<double>& a, const std::vector<double>& b);

/// Standard-normal-kernel density with Silverman bandwidth, written as
/// (x, density) CSV rows.
void kde_export(const std::vector<double>& samples, const std::filesystem::path& file);

struct MonteCarloRow {
    std::uint64_t seed = 0;
    Mode mode = Mode::Rollout;
    double fuel_kg = 0.0;
    double time_s = 0.0;
    double soc_terminal = 0.0;
    double cost = 0.0;
    bool ok = true;
};

struct MonteCarloSummary {
    std::vector<MonteCarloRow> rows;  // ordered by (seed, mode)
    std::map<Mode, SampleStats> fuel;
    std::map<Mode, SampleStats> time;
    std::vector<double> samples(Mode m, bool fuel_not_time) const;
};

/// Seeded departure-time Monte Carlo over the route; runs are independent
/// and execute on a thread pool, aggregation is seed-ordered.
MonteCarloSummary monte_carlo(const RouteProfile& route, const EcoModel& model,
                              const ValueTable& vt, const std::vector<Mode>& modes,
                              int num_seeds, const SimOptions& base,
                              const DriverOptions& driver);

/// Bisect driver aggressiveness until the mean travel time over the seed set
/// matches `target_time_s` within `rel_tol`.
double calibrate_aggressiveness(const VehicleParams& veh, const PowertrainMaps& maps,
                                const BatteryParams& batt, const RouteProfile& route,
                                int num_seeds, const DriverOptions& base,
                                double target_time_s, double rel_tol = 0.05);

struct ParetoRow {
    double gamma;
    double fuel_kg;
    double time_s;
};

/// Full-route DP per gamma (signals as stops), trajectory totals per row.
std::vector<ParetoRow> pareto_sweep(const std::vector<double>& gammas,
                                    const RouteProfile& route, const VehicleParams& veh,
                                    const PowertrainMaps& maps, const BatteryParams& batt,
                                    const GridSpec& grid, const CostWeights& base_weights);

}  // namespace ecodrive
