#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecodrive {

struct RouteBounds : std::runtime_error {
    explicit RouteBounds(const std::string& what) : std::runtime_error(what) {}
};

enum class Phase { Green, Yellow, Red };

struct TrafficSignal {
    double position_m = 0.0;
    double cycle_s = 90.0;
    double green_s = 40.0;
    double yellow_s = 4.0;
    double red_s = 46.0;
    double initial_offset_s = 0.0;  // phase of this signal at departure, in [0, cycle)
    double dsrc_range_m = 300.0;
};

struct Waypoint {
    double d_m = 0.0;
    double v_min_mps = 0.0;
    double v_max_mps = 0.0;
    double grade_rad = 0.0;
};

struct RouteProfile {
    std::vector<Waypoint> waypoints;  // distances strictly increasing, first at 0
    std::vector<double> stop_signs_m;
    std::vector<TrafficSignal> signals;
    double length_m = 0.0;
};

/// One Monte Carlo draw: every signal shifted by the same departure offset so
/// pairwise phase differences are preserved.
struct SpatScenario {
    double departure_offset_s = 0.0;
};

struct SegmentLimits {
    double v_min_mps;
    double v_max_mps;
    double grade_rad;
};

struct SignalState {
    Phase phase;
    double time_remaining_s;
};

/// Limits of the segment containing distance d (left-closed intervals).
SegmentLimits limits_at(const RouteProfile& route, double d_m);

/// Phase and time-to-phase-change of `sig` at trip time t under `scenario`.
SignalState signal_state(const TrafficSignal& sig, const SpatScenario& scenario, double t_s);

/// Start of the next green window at or after trip time t (0 if green now).
double time_to_green(const TrafficSignal& sig, const SpatScenario& scenario, double t_s);

/// Green windows [t_open, t_close) intersecting [t_s, t_s + span_s].
std::vector<std::pair<double, double>> green_windows(const TrafficSignal& sig,
                                                     const SpatScenario& scenario, double t_s,
                                                     double span_s);

/// Deterministic seeded draw of the departure offset ~ U(0, t_cyc).
SpatScenario randomize_departure(const RouteProfile& route, std::uint64_t seed);

/// Invariant checks; returns human-readable violations (empty when valid).
std::vector<std::string> validate_route(const RouteProfile& route);

/// JSON route document I/O (schema_version field is mandatory).
RouteProfile load_route(const std::filesystem::path& file);
void save_route(const RouteProfile& route, const std::filesystem::path& file);

}  // namespace ecodrive
