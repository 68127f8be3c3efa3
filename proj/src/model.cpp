#include "ecodrive/model.hpp"

#include <algorithm>
#include <cmath>

namespace ecodrive {

DiscretizedRoute discretize_route(const RouteProfile& route, const GridSpec& grid,
                                  const CostWeights& weights, bool signals_as_stops) {
    DiscretizedRoute d;
    const int n = std::max<int>(1, static_cast<int>(std::llround(route.length_m /
                                                                grid.distance_step_m)));
    const double dd = route.length_m / n;
    d.boundaries_m.resize(n + 1);
    for (int j = 0; j <= n; ++j) d.boundaries_m[j] = j * dd;
    d.boundaries_m.back() = route.length_m;
    d.limits.reserve(n + 1);
    for (int j = 0; j <= n; ++j) d.limits.push_back(limits_at(route, d.boundaries_m[j]));
    d.dwell_s.assign(n + 1, 0.0);
    d.collapse.assign(n + 1, 0);
    d.signal_index.assign(n + 1, -1);

    const auto snap = [&](double dist) {
        int j = static_cast<int>(std::llround(dist / dd));
        return std::clamp(j, 1, n);  // never collapse the departure position
    };
    for (double s : route.stop_signs_m) {
        const int j = snap(s);
        d.collapse[j] = 1;
        d.dwell_s[j] += weights.stop_dwell_s;
    }
    d.signals = route.signals;
    for (std::size_t i = 0; i < route.signals.size(); ++i) {
        const int j = snap(route.signals[i].position_m);
        d.signal_index[j] = static_cast<int>(i);
        if (signals_as_stops) {
            d.collapse[j] = 1;
            d.dwell_s[j] += weights.stop_dwell_s;
        }
    }

    // Braking envelopes ahead of each mandatory stop and of the terminal
    // position. Friction braking enters the transition model only through the
    // clamp to the top admissible *node* at the next position, so the approach
    // limits must walk down the velocity-node ladder: each step back takes the
    // largest node reachable from the previous one under the one-stage braking
    // limit. A continuous envelope would demand more than accel_min between
    // quantized nodes and leave high-speed states with no feasible transition.
    std::vector<double> nodes;
    for (double v = grid.velocity_min_mps; v <= grid.velocity_max_mps + 1e-9;
         v += grid.velocity_step_mps)
        nodes.push_back(v);
    const double a_dn = std::abs(grid.accel_min_mps2);
    const auto shrink_before = [&](int j) {
        double w = grid.velocity_min_mps;  // admissible ceiling at the stop itself
        for (int p = j - 1; p >= 0; --p) {
            const double dd_p = d.boundaries_m[p + 1] - d.boundaries_m[p];
            const double reach2 = w * w + 2.0 * a_dn * dd_p;
            double u = w;
            for (double cand : nodes)
                if (cand * cand <= reach2 + 1e-9 && cand > u) u = cand;
            if (u >= d.limits[p].v_max_mps) break;
            d.limits[p].v_max_mps = u;
            w = u;
        }
    };
    for (int j = 1; j <= n; ++j)
        if (d.collapse[j]) shrink_before(j);
    shrink_before(n);
    return d;
}

namespace {

std::vector<double> torque_levels(double lo, double hi, double step) {
    std::vector<double> out;
    const int k_lo = static_cast<int>(std::ceil(lo / step - 1e-9));
    const int k_hi = static_cast<int>(std::floor(hi / step + 1e-9));
    for (int k = k_lo; k <= k_hi; ++k) out.push_back(k * step);
    return out;
}

}  // namespace

EcoModel::EcoModel(DiscretizedRoute disc, VehicleParams veh, PowertrainMaps maps,
                   BatteryParams batt, GridSpec grid, CostWeights weights, double mass_scale,
                   int control_coarsen)
    : disc_(std::move(disc)),
      veh_(veh),
      maps_(std::move(maps)),
      batt_(std::move(batt)),
      grid_(grid),
      weights_(weights),
      mass_scale_(mass_scale) {
    veh_.mass_kg *= mass_scale_;
    mass_kg_ = veh_.mass_kg;

    for (double v = grid_.velocity_min_mps; v <= grid_.velocity_max_mps + 1e-9;
         v += grid_.velocity_step_mps)
        vel_nodes_.push_back(v);
    for (double s = grid_.soc_min; s <= grid_.soc_max + 1e-12; s += grid_.soc_step)
        soc_nodes_.push_back(s);

    const double eng_lo = *std::min_element(maps_.eng_torque_min.y.begin(),
                                            maps_.eng_torque_min.y.end());
    const double eng_hi = *std::max_element(maps_.eng_torque_max.y.begin(),
                                            maps_.eng_torque_max.y.end());
    const double bsg_lo = *std::min_element(maps_.bsg_torque_min.y.begin(),
                                            maps_.bsg_torque_min.y.end());
    const double bsg_hi = *std::max_element(maps_.bsg_torque_max.y.begin(),
                                            maps_.bsg_torque_max.y.end());
    const auto eng_levels =
        torque_levels(eng_lo, eng_hi, grid_.eng_torque_step_nm * control_coarsen);
    const auto bsg_levels =
        torque_levels(bsg_lo, bsg_hi, grid_.bsg_torque_step_nm * control_coarsen);
    for (double te : eng_levels)
        for (double tb : bsg_levels) controls_.push_back({te, tb});

    cache_.resize(vel_nodes_.size());
    for (std::size_t iv = 0; iv < vel_nodes_.size(); ++iv) {
        const double v = vel_nodes_[iv];
        NodeCache& nc = cache_[iv];
        const double te_min = maps_.eng_torque_min(v), te_max = maps_.eng_torque_max(v);
        const double tb_min = maps_.bsg_torque_min(v), tb_max = maps_.bsg_torque_max(v);
        nc.valid.resize(controls_.size());
        nc.force_n.resize(controls_.size());
        nc.fuel_kgps.resize(controls_.size());
        nc.bsg_power_w.resize(controls_.size());
        const auto ds = driveline_speeds(v, 0.0, maps_, veh_);
        nc.gear = ds.gear;
        nc.omega_eng = ds.engine_radps;
        for (std::size_t c = 0; c < controls_.size(); ++c) {
            const auto [te, tb] = controls_[c];
            const bool ok = te >= te_min && te <= te_max && tb >= tb_min && tb <= tb_max;
            nc.valid[c] = ok;
            if (!ok) continue;
            nc.force_n[c] = wheel_force(te, tb, v, 0.0, maps_, veh_);
            nc.fuel_kgps[c] = fuel_rate(nc.gear, nc.omega_eng, te, maps_);
            nc.bsg_power_w[c] = bsg_power(tb, nc.omega_eng, maps_, veh_);
        }
        nc.soc_rate.assign(controls_.size() * soc_nodes_.size(),
                           std::numeric_limits<double>::quiet_NaN());
        for (std::size_t c = 0; c < controls_.size(); ++c) {
            if (!nc.valid[c]) continue;
            for (std::size_t is = 0; is < soc_nodes_.size(); ++is) {
                try {
                    const double cur = battery_current(soc_nodes_[is], nc.bsg_power_w[c], batt_);
                    nc.soc_rate[c * soc_nodes_.size() + is] =
                        cur / (3600.0 * batt_.capacity_ah);
                } catch (const PowerExceedsCapability&) {
                }
            }
        }
    }

    if (weights_.mdot_norm_kgps <= 0.0) weights_.mdot_norm_kgps = cruise_fuel_rate(13.0);
}

std::vector<std::uint8_t> EcoModel::velocity_mask(int pos) const {
    std::vector<std::uint8_t> mask(vel_nodes_.size(), 0);
    mask[0] = 1;  // creep node stays admissible everywhere (stop handling)
    if (disc_.collapse[pos - 1]) return mask;
    const auto& lim = disc_.limits[pos - 1];
    for (std::size_t iv = 1; iv < vel_nodes_.size(); ++iv)
        mask[iv] = vel_nodes_[iv] >= lim.v_min_mps - 1e-9 &&
                   vel_nodes_[iv] <= lim.v_max_mps + 1e-9;
    return mask;
}

double EcoModel::clamp_speed(int pos) const {
    const auto mask = velocity_mask(pos);
    double top = vel_nodes_.front();
    for (std::size_t iv = 0; iv < mask.size(); ++iv)
        if (mask[iv]) top = vel_nodes_[iv];
    return top;
}

std::optional<StageKernel> EcoModel::kernel_math(int stage, double v, double force_n,
                                                 double fuel_kgps, double v_clamp_hi) const {
    const double dd = disc_.boundaries_m[stage] - disc_.boundaries_m[stage - 1];
    const double grade = disc_.limits[stage - 1].grade_rad;
    const double f_road = road_load(v, grade, veh_);
    double accel = (force_n - f_road) / mass_kg_;
    if (accel > grid_.accel_max_mps2 + 1e-12) return std::nullopt;

    double v2 = v * v + 2.0 * dd * accel;
    double brake = 0.0;
    const double clamp2 = v_clamp_hi * v_clamp_hi;
    if (v2 > clamp2 + 1e-12) {
        const double a_need = (clamp2 - v * v) / (2.0 * dd);
        if (a_need < grid_.accel_min_mps2 - 1e-12) return std::nullopt;
        brake = force_n - (mass_kg_ * a_need + f_road);
        v2 = clamp2;
        accel = a_need;
    } else if (accel < grid_.accel_min_mps2 - 1e-12) {
        return std::nullopt;
    }
    if (v2 <= 0.0) return std::nullopt;

    StageKernel k;
    k.v_next = std::sqrt(v2);
    const double v_bar = 0.5 * (v + k.v_next);
    k.travel_s = dd / v_bar;
    k.fuel_kg = fuel_kgps * k.travel_s;
    k.brake_n = brake;
    const double dwell = disc_.dwell_s[stage];  // dwell at the arrival position stage+1
    k.time_s = k.travel_s + dwell;
    k.cost = stage_cost(fuel_kgps, k.travel_s, weights_) + (1.0 - weights_.gamma) * dwell;
    return k;
}

std::optional<StageKernel> EcoModel::step_kernel(int stage, int v_node, int control,
                                                 double v_clamp_hi) const {
    const NodeCache& nc = cache_[v_node];
    if (!nc.valid[control]) return std::nullopt;
    return kernel_math(stage, vel_nodes_[v_node], nc.force_n[control], nc.fuel_kgps[control],
                       v_clamp_hi);
}

double EcoModel::soc_rate(int v_node, int control, int soc_node) const {
    return cache_[v_node].soc_rate[control * soc_nodes_.size() + soc_node];
}

std::optional<StageTransition> EcoModel::integrate(int stage, double v, double soc,
                                                   double force_n, double fuel_kgps,
                                                   double bsg_power_w,
                                                   double v_clamp_hi) const {
    const auto k = kernel_math(stage, v, force_n, fuel_kgps, v_clamp_hi);
    if (!k) return std::nullopt;
    double current;
    try {
        current = battery_current(soc, bsg_power_w, batt_);
    } catch (const PowerExceedsCapability&) {
        return std::nullopt;
    }
    StageTransition tr;
    tr.v_next = k->v_next;
    tr.fuel_kg = k->fuel_kg;
    tr.brake_n = k->brake_n;
    tr.time_s = k->time_s;
    tr.cost = k->cost;
    tr.soc_next = soc - k->travel_s * (current / (3600.0 * batt_.capacity_ah));
    if (tr.soc_next < soc_nodes_.front() - 1e-12 || tr.soc_next > soc_nodes_.back() + 1e-12)
        return std::nullopt;
    return tr;
}

std::optional<StageTransition> EcoModel::step(int stage, double v, double soc, int control,
                                              double v_clamp_hi) const {
    const double rel = (v - vel_nodes_.front()) / grid_.velocity_step_mps;
    const auto idx = static_cast<std::size_t>(std::llround(std::max(0.0, rel)));
    if (idx < vel_nodes_.size() && std::abs(vel_nodes_[idx] - v) < 1e-9) {
        const NodeCache& nc = cache_[idx];
        if (!nc.valid[control]) return std::nullopt;
        return integrate(stage, v, soc, nc.force_n[control], nc.fuel_kgps[control],
                         nc.bsg_power_w[control], v_clamp_hi);
    }
    const auto [te, tb] = controls_[control];
    if (te < maps_.eng_torque_min(v) || te > maps_.eng_torque_max(v) ||
        tb < maps_.bsg_torque_min(v) || tb > maps_.bsg_torque_max(v))
        return std::nullopt;
    return step_torques(stage, v, soc, te, tb, v_clamp_hi);
}

std::optional<StageTransition> EcoModel::step_torques(int stage, double v, double soc,
                                                      double t_eng_nm, double t_bsg_nm,
                                                      double v_clamp_hi) const {
    const double te = std::clamp(t_eng_nm, maps_.eng_torque_min(v), maps_.eng_torque_max(v));
    const double tb = std::clamp(t_bsg_nm, maps_.bsg_torque_min(v), maps_.bsg_torque_max(v));
    const auto ds = driveline_speeds(v, te, maps_, veh_);
    const double force = wheel_force(te, tb, v, 0.0, maps_, veh_);
    const double fuel = fuel_rate(ds.gear, ds.engine_radps, te, maps_);
    const double power = bsg_power(tb, ds.engine_radps, maps_, veh_);
    return integrate(stage, v, soc, force, fuel, power, v_clamp_hi);
}

StageTransition EcoModel::transition(int stage, double v, double soc, int control,
                                     double v_clamp_hi) const {
    const auto [te, tb] = controls_[control];
    const auto ds = driveline_speeds(v, te, maps_, veh_);
    
    const double power = bsg_power(tb, ds.engine_radps, maps_, veh_);
    battery_current(soc, power, batt_);  // throws PowerExceedsCapability when unattainable
    const auto tr = step(stage, v, soc, control, v_clamp_hi);
    if (!tr)
        throw InfeasibleTransition("stage " + std::to_string(stage) +
                                   ": no admissible successor for commanded controls");
    return *tr;
}

double EcoModel::cruise_fuel_rate(double v_mps) const {
    const double f_road = road_load(v_mps, 0.0, veh_);
    double lo = 0.0, hi = maps_.eng_torque_max(v_mps);
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (wheel_force(mid, 0.0, v_mps, 0.0, maps_, veh_) < f_road)
            lo = mid;
        else
            hi = mid;
    }
    const auto ds = driveline_speeds(v_mps, hi, maps_, veh_);
    return fuel_rate(ds.gear, ds.engine_radps, hi, maps_);
}

}  // namespace ecodrive
