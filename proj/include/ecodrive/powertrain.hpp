#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "ecodrive/maps.hpp"

namespace ecodrive {

/// Demanded electrical power exceeds what the battery can source at the
/// present open-circuit voltage (negative discriminant in the equivalent
/// circuit equation).
struct PowerExceedsCapability : std::runtime_error {
    explicit PowerExceedsCapability(const std::string& what) : std::runtime_error(what) {}
};

struct VehicleParams {
    double mass_kg = 1850.0;
    double wheel_radius_m = 0.335;
    double drag_cd = 0.32;
    double frontal_area_m2 = 2.25;
    double air_density = 1.20;
    double rolling_cr0 = 0.009;
    double rolling_cr1 = 1.2e-4;  // s/m, speed-linear term of C_r(v)
    double gravity = 9.81;
    double final_drive = 2.87;
    double belt_ratio = 2.5;
};

struct BatteryParams {
    Curve1D voc;               // open-circuit voltage vs SoC fraction
    double r0_ohm = 0.05;
    double capacity_ah = 8.0;
    double bias_current_a = 12.0;
    double soc_min = 0.30;
    double soc_max = 0.70;
};

struct PowertrainMaps {
    std::vector<Table2D> fuel_map;   // per gear: (engine speed rad/s, torque Nm) -> kg/s
    Table2D bsg_eff;                 // (bsg speed rad/s, torque Nm) -> (0,1]
    Table2D trans_eff;               // (turbine speed rad/s, torque Nm) -> (0,1]
    std::vector<Table2D> slip_map;   // per gear: (engine speed, torque) -> rad/s
    std::vector<double> gear_ratios; // strictly decreasing, 6 entries
    std::vector<double> upshift_mps; // 5 thresholds, strictly increasing
    Curve1D eng_torque_min;          // vs vehicle speed m/s
    Curve1D eng_torque_max;
    Curve1D bsg_torque_min;
    Curve1D bsg_torque_max;
    double omega_idle = 78.0;        // rad/s
    double omega_stall = 90.0;       // rad/s
};

struct PlantOutput {
    double fuel_rate_kgps = 0.0;
    double battery_current_a = 0.0;  // signed, discharge positive
    double wheel_force_n = 0.0;
    double engine_speed_radps = 0.0;
    int gear = 1;
    double brake_force_n = 0.0;
};

struct DrivelineSpeeds {
    double engine_radps;
    double turbine_radps;
    int gear;
};

/// Aerodynamic drag + rolling resistance + grade force, Newtons.
double road_load(double v_mps, double grade_rad, const VehicleParams& p);

/// Gear from the static speed-threshold shift schedule (1-based).
int gear_select(double v_mps, const PowertrainMaps& maps);

/// Turbine/engine speeds through the torque-converter slip model.
/// `stopped` marks engine shut-off while stationary.
DrivelineSpeeds driveline_speeds(double v_mps, double eng_torque_nm, const PowertrainMaps& maps,
                                 const VehicleParams& p, bool stopped = false);

/// Fuel flow from the map, with overrun fuel cutoff and zero flow at zero speed.
double fuel_rate(int gear, double engine_radps, double eng_torque_nm,
                 const PowertrainMaps& maps);

/// Electrical power (W) demanded (+) or returned (-) by the BSG.
double bsg_power(double bsg_torque_nm, double engine_radps, const PowertrainMaps& maps,
                 const VehicleParams& p);

/// Battery current including the auxiliary bias term, Amperes.
/// Throws PowerExceedsCapability when the discriminant is negative.
double battery_current(double soc, double bsg_power_w, const BatteryParams& b);

/// Net longitudinal force at the wheels from the combined crank torque,
/// minus the friction brake force.
double wheel_force(double eng_torque_nm, double bsg_torque_nm, double v_mps,
                   double brake_force_n, const PowertrainMaps& maps, const VehicleParams& p);

/// Synthetic analytic surrogate maps (Willans-line fuel model, parabolic
/// efficiency surfaces). Stand-ins for unavailable calibration data; any map
/// can be replaced by a CSV with the same schema.
PowertrainMaps synthetic_maps();
BatteryParams synthetic_battery();
VehicleParams default_vehicle();

/// Write all maps of `m` as CSV files under `dir` / load them back.
void write_maps_csv(const PowertrainMaps& m, const std::filesystem::path& dir);
PowertrainMaps load_maps_csv(const std::filesystem::path& dir);

}  // namespace ecodrive
