#include "ecodrive/route.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

namespace ecodrive {

SegmentLimits limits_at(const RouteProfile& route, double d_m) {
    if (d_m < 0.0 || d_m > route.length_m)
        throw RouteBounds("distance " + std::to_string(d_m) + " outside [0, " +
                          std::to_string(route.length_m) + "]");
    // Last waypoint with d <= d_m (left-closed segments).
    const Waypoint* seg = &route.waypoints.front();
    for (const auto& wp : route.waypoints) {
        if (wp.d_m <= d_m) seg = &wp;
        else break;
    }
    return {seg->v_min_mps, seg->v_max_mps, seg->grade_rad};
}

SignalState signal_state(const TrafficSignal& sig, const SpatScenario& scenario, double t_s) {
    const double cyc = sig.cycle_s;
    double phase_t = std::fmod(t_s + sig.initial_offset_s + scenario.departure_offset_s, cyc);
    if (phase_t < 0.0) phase_t += cyc;
    if (phase_t < sig.green_s) return {Phase::Green, sig.green_s - phase_t};
    if (phase_t < sig.green_s + sig.yellow_s)
        return {Phase::Yellow, sig.green_s + sig.yellow_s - phase_t};
    return {Phase::Red, cyc - phase_t};
}

double time_to_green(const TrafficSignal& sig, const SpatScenario& scenario, double t_s) {
    const SignalState st = signal_state(sig, scenario, t_s);
    if (st.phase == Phase::Green) return 0.0;
    if (st.phase == Phase::Yellow) return st.time_remaining_s + sig.red_s;
    return st.time_remaining_s;
}

std::vector<std::pair<double, double>> green_windows(const TrafficSignal& sig,
                                                     const SpatScenario& scenario, double t_s,
                                                     double span_s) {
    std::vector<std::pair<double, double>> out;
    double t_open = t_s + time_to_green(sig, scenario, t_s);
    if (t_open == t_s) {
        // Currently green: window opened in the past, closes at remaining time.
        const SignalState st = signal_state(sig, scenario, t_s);
        out.emplace_back(t_s, t_s + st.time_remaining_s);
        t_open = t_s + st.time_remaining_s + sig.yellow_s + sig.red_s;
    }
    while (t_open <= t_s + span_s) {
        out.emplace_back(t_open, t_open + sig.green_s);
        t_open += sig.cycle_s;
    }
    return out;
}

SpatScenario randomize_departure(const RouteProfile& route, std::uint64_t seed) {
    double cyc = 90.0;
    if (!route.signals.empty()) cyc = route.signals.front().cycle_s;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, cyc);
    return {dist(rng)};
}

std::vector<std::string> validate_route(const RouteProfile& route) {
    std::vector<std::string> v;
    if (route.length_m <= 0.0) v.push_back("route length must be positive");
    if (route.waypoints.empty()) {
        v.push_back("route has no waypoints");
        return v;
    }
    if (route.waypoints.front().d_m != 0.0) v.push_back("first waypoint must be at d=0");
    for (std::size_t i = 0; i < route.waypoints.size(); ++i) {
        const auto& wp = route.waypoints[i];
        if (i > 0 && wp.d_m <= route.waypoints[i - 1].d_m)
            v.push_back("waypoint " + std::to_string(i) + ": distances not strictly increasing");
        if (!(wp.v_min_mps > 0.0 && wp.v_min_mps <= wp.v_max_mps))
            v.push_back("waypoint " + std::to_string(i) + ": need 0 < v_min <= v_max");
    }
    for (std::size_t i = 0; i < route.stop_signs_m.size(); ++i) {
        const double d = route.stop_signs_m[i];
        if (d < 0.0 || d > route.length_m)
            v.push_back("stop sign " + std::to_string(i) + " outside route");
    }
    for (std::size_t i = 0; i < route.signals.size(); ++i) {
        const auto& s = route.signals[i];
        const std::string tag = "signal " + std::to_string(i);
        if (s.position_m < 0.0 || s.position_m > route.length_m)
            v.push_back(tag + " outside route");
        if (std::abs(s.green_s + s.yellow_s + s.red_s - s.cycle_s) > 1e-9)
            v.push_back(tag + ": phase durations do not sum to cycle time");
        if (s.green_s < 0 || s.yellow_s < 0 || s.red_s < 0)
            v.push_back(tag + ": negative phase duration");
        if (s.initial_offset_s < 0.0 || s.initial_offset_s >= s.cycle_s)
            v.push_back(tag + ": initial offset outside [0, cycle)");
    }
    return v;
}

RouteProfile load_route(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open route file: " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("route file " + file.string() + ": " + e.what());
    }
    if (!j.contains("schema_version"))
        throw std::runtime_error("route file missing schema_version field");
    if (j["schema_version"].get<int>() != 1)
        throw std::runtime_error("unsupported route schema_version");
    RouteProfile r;
    r.length_m = j.at("length_m").get<double>();
    for (const auto& w : j.at("waypoints")) {
        Waypoint wp;
        wp.d_m = w.at("d_m").get<double>();
        wp.v_min_mps = w.at("v_min_mps").get<double>();
        wp.v_max_mps = w.at("v_max_mps").get<double>();
        wp.grade_rad = w.value("grade_rad", 0.0);
        r.waypoints.push_back(wp);
    }
    for (const auto& d : j.value("stop_signs_m", nlohmann::json::array()))
        r.stop_signs_m.push_back(d.get<double>());
    for (const auto& s : j.value("signals", nlohmann::json::array())) {
        TrafficSignal sig;
        sig.position_m = s.at("position_m").get<double>();
        sig.cycle_s = s.at("cycle_s").get<double>();
        sig.green_s = s.at("green_s").get<double>();
        sig.yellow_s = s.at("yellow_s").get<double>();
        sig.red_s = s.at("red_s").get<double>();
        sig.initial_offset_s = s.value("initial_offset_s", 0.0);
        sig.dsrc_range_m = s.value("dsrc_range_m", 300.0);
        r.signals.push_back(sig);
    }
    return r;
}

void save_route(const RouteProfile& route, const std::filesystem::path& file) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["length_m"] = route.length_m;
    j["waypoints"] = nlohmann::json::array();
    for (const auto& wp : route.waypoints)
        j["waypoints"].push_back({{"d_m", wp.d_m},
                                  {"v_min_mps", wp.v_min_mps},
                                  {"v_max_mps", wp.v_max_mps},
                                  {"grade_rad", wp.grade_rad}});
    j["stop_signs_m"] = route.stop_signs_m;
    j["signals"] = nlohmann::json::array();
    for (const auto& s : route.signals)
        j["signals"].push_back({{"position_m", s.position_m},
                                {"cycle_s", s.cycle_s},
                                {"green_s", s.green_s},
                                {"yellow_s", s.yellow_s},
                                {"red_s", s.red_s},
                                {"initial_offset_s", s.initial_offset_s},
                                {"dsrc_range_m", s.dsrc_range_m}});
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write route file: " + file.string());
    out << j.dump(2) << "\n";
}

}  // namespace ecodrive
