#include "ecodrive/sim.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

namespace ecodrive {

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::FullDp: return "full-dp";
        case Mode::Rollout: return "rollout";
        case Mode::RolloutEcoAnd: return "rollout+ecoand";
        case Mode::RolloutLos: return "rollout+los";
        case Mode::BaselineDriver: return "baseline-driver";
    }
    return "unknown";
}

Mode mode_from_name(const std::string& name) {
    if (name == "full-dp") return Mode::FullDp;
    if (name == "rollout") return Mode::Rollout;
    if (name == "rollout+ecoand") return Mode::RolloutEcoAnd;
    if (name == "rollout+los") return Mode::RolloutLos;
    if (name == "baseline-driver") return Mode::BaselineDriver;
    throw std::invalid_argument("unknown mode: " + name);
}

namespace {

void push_point(RunRecord& r, double d, double t, double v, double soc, double te, double tb,
                double brake, double fuel) {
    r.d_m.push_back(d);
    r.t_s.push_back(t);
    r.v_mps.push_back(v);
    r.soc.push_back(soc);
    r.t_eng_nm.push_back(te);
    r.t_bsg_nm.push_back(tb);
    r.brake_n.push_back(brake);
    r.fuel_cum_kg.push_back(fuel);
}

void finish_record(RunRecord& r, double soc0) {
    r.soc_initial = soc0;
    if (!r.t_s.empty()) {
        r.time_s = r.t_s.back();
        r.fuel_kg = r.fuel_cum_kg.back();
        r.soc_terminal = r.soc.back();
    }
}

}  // namespace

RunRecord extract_trajectory(const EcoModel& model, const ValueTable& vt, double v0,
                             double soc0) {
    // Greedy one-step minimization against the value function at every stage:
    // on the model the table was solved for this reproduces the optimum; on a
    // perturbed model it is the certainty-equivalent base policy.
    RunRecord r;
    double v = v0 < 0.0 ? model.creep_speed() : v0;
    double soc = soc0;
    double t = 0.0, fuel = 0.0;
    push_point(r, model.route().boundaries_m.front(), 0.0, v, soc, 0.0, 0.0, 0.0, 0.0);
    for (int pos = 1; pos <= model.num_stages(); ++pos) {
        std::optional<StageTransition> tr;
        double te = 0.0, tb = 0.0;
        try {
            const HorizonSolution sol = solve_horizon(model, vt, pos, 1, v, soc);
            const ControlPair cp = model.control(sol.control);
            te = cp.t_eng_nm;
            tb = cp.t_bsg_nm;
            tr = model.step(pos, v, soc, sol.control, model.clamp_speed(pos + 1));
        } catch (const HorizonInfeasible&) {
        }
        if (!tr) {
            r.ok = false;
            r.note = "policy replay infeasible at position " + std::to_string(pos);
            break;
        }
        v = tr->v_next;
        soc = tr->soc_next;
        t += tr->time_s;
        fuel += tr->fuel_kg;
        push_point(r, model.route().boundaries_m[pos], t, v, soc, te, tb, tr->brake_n, fuel);
    }
    finish_record(r, soc0);
    return r;
}

namespace {

/// Next online-handled signal strictly ahead of `pos` (not collapsed into a
/// stop by the discretization), or -1.
int next_online_signal(const DiscretizedRoute& disc, int pos) {
    for (int p = pos + 1; p <= disc.stages() + 1; ++p) {
        const int idx = p - 1;
        if (disc.signal_index[idx] >= 0 && !disc.collapse[idx]) return p;
    }
    return -1;
}

/// Overrides steering the truncated problem toward `directive` for the signal
/// at position p_sig. Nearest signal only; later signals are resolved once
/// the vehicle advances.
/// Deceleration envelope along the velocity-node ladder: values for positions
/// pos+1 .. p_sig such that each position's ceiling is the largest node able to
/// brake to the next position's ceiling within one stage, anchored at `target`
/// at the signal. Continuous (sqrt) envelopes would demand more than accel_min
/// between quantized nodes and make the truncated problem infeasible.
std::vector<double> brake_ladder(const EcoModel& model, int pos, int p_sig, double target) {
    const auto& bounds = model.route().boundaries_m;
    const auto& nodes = model.velocity_nodes();
    const double a_dn = std::abs(model.grid().accel_min_mps2);
    std::vector<double> out(p_sig - pos, 0.0);
    double w = nodes.front();
    for (double cand : nodes)
        if (cand <= target + 1e-9 && cand > w) w = cand;
    out.back() = w;
    for (int p = p_sig - 1; p > pos; --p) {
        const double dd = bounds[p] - bounds[p - 1];
        const double reach2 = w * w + 2.0 * a_dn * dd;
        for (double cand : nodes)
            if (cand * cand <= reach2 + 1e-9 && cand > w) w = cand;
        out[p - pos - 1] = w;
    }
    return out;
}

/// Largest speed admissible at the current position under a ladder anchored at
/// `target` at p_sig: one more backward step from the ladder's first entry.
double ladder_entry(const EcoModel& model, int pos, int p_sig, double target) {
    const auto ladder = brake_ladder(model, pos, p_sig, target);
    const double dd = model.route().boundaries_m[pos] - model.route().boundaries_m[pos - 1];
    const double a_dn = std::abs(model.grid().accel_min_mps2);
    return std::sqrt(ladder.front() * ladder.front() + 2.0 * a_dn * dd);
}

OverrideMap build_overrides(const EcoModel& model, int pos, int p_sig, double v, double t_now,
                            const EcoAndDirective& dir) {
    OverrideMap ov;
    (void)t_now;
    const auto& bounds = model.route().boundaries_m;
    const double d_now = bounds[pos - 1];
    const double creep = model.creep_speed();
    const double a_up = model.grid().accel_max_mps2;
    const auto lim = model.route().limits[pos - 1];

    if (dir.treat_as_stop) {
        if (v > ladder_entry(model, pos, p_sig, creep) + 1e-9)
            return ov;  // cannot stop comfortably: pass and pay at arrival
        const auto ladder = brake_ladder(model, pos, p_sig, creep);
        for (int p = pos + 1; p < p_sig; ++p) ov[p].v_hi = ladder[p - pos - 1];
        ov[p_sig].collapse = true;
        return ov;
    }
    if (dir.v_off_max > 0.0) {
        // The cap is a pace constraint for the whole approach, so it must bind
        // immediately; a braking-feasibility prefix walks down the node ladder
        // from the current speed until the cap is reachable within accel_min.
        const double v_cap = std::max(creep, lim.v_max_mps - dir.v_off_max);
        const auto& nodes = model.velocity_nodes();
        const double a_dn = std::abs(model.grid().accel_min_mps2);
        double cap_node = nodes.front();
        for (double cand : nodes)
            if (cand <= v_cap + 1e-9 && cand > cap_node) cap_node = cand;
        double w = v;
        for (int p = pos + 1; p <= p_sig; ++p) {
            const double dd = bounds[p - 1] - bounds[p - 2];
            const double floor2 =
                std::max(cap_node * cap_node, w * w - 2.0 * a_dn * dd);
            double next = nodes.back();
            for (double cand : nodes)
                if (cand * cand >= floor2 - 1e-9 && cand < next) next = cand;
            w = std::max(cap_node, next);
            ov[p].v_hi = std::min(ov[p].v_hi, w);
        }
    }
    if (dir.v_off_min > 0.0) {
        // Raise the floor with a moderate-acceleration ramp: an aggressive
        // (max-accel) envelope would force full-throttle bursts and limit-cycle
        // against the slow-down branch on the next re-solve.
        const double v_floor = std::min(lim.v_max_mps, lim.v_min_mps + dir.v_off_min);
        const double a_ramp = std::min(0.5, a_up);
        for (int p = pos + 1; p <= p_sig; ++p) {
            const double adv = bounds[p - 1] - d_now;
            ov[p].v_lo = std::min(v_floor, std::sqrt(v * v + 2.0 * a_ramp * adv));
        }
    }
    return ov;
}

}  // namespace

RunRecord closed_loop_run(const EcoModel& model, const ValueTable& vt,
                          const SpatScenario& scenario, const SimOptions& opt) {
    RunRecord r;
    r.seed = opt.seed;
    const auto& disc = model.route();
    const auto& route_signals = disc.signal_index;
    const int n = model.num_stages();
    const double creep = model.creep_speed();
    double v = opt.v0 < 0.0 ? creep : opt.v0;
    double soc = opt.soc0;
    double t = 0.0, fuel = 0.0;
    std::set<int> stop_latch;  // signals committed to a stop (by signal index)
    push_point(r, disc.boundaries_m.front(), 0.0, v, soc, 0.0, 0.0, 0.0, 0.0);

    for (int pos = 1; pos <= n; ++pos) {
        OverrideMap ov;
        const int p_sig = next_online_signal(disc, pos);
        if (p_sig > 0 && opt.mode != Mode::FullDp) {
            const TrafficSignal& ts =
                disc.signals.at(static_cast<std::size_t>(route_signals[p_sig - 1]));
            const double dist = disc.boundaries_m[p_sig - 1] - disc.boundaries_m[pos - 1];
            const SignalState st = signal_state(ts, scenario, t);
            EcoAndDirective dir;
            if (opt.mode == Mode::RolloutEcoAnd) {
                if (stop_latch.count(route_signals[p_sig - 1])) {
                    dir.treat_as_stop = true;
                } else if (dist <= ts.dsrc_range_m) {
                    auto windows = green_windows(ts, scenario, t, 2.0 * ts.cycle_s);
                    for (auto& w : windows) {
                        w.first -= t;
                        w.second -= t;
                    }
                    const auto lim = disc.limits[pos - 1];
                    dir = eco_and_offsets(st, v, dist, windows,
                                          std::max(creep, lim.v_min_mps), lim.v_max_mps,
                                          model.grid().accel_min_mps2,
                                          model.grid().accel_max_mps2);
                    // Shaping only pays when the pass speed stays near cruise.
                    // A deep glide preserves little kinetic energy and burns
                    // stored charge, while a stopped wait costs nothing, so a
                    // window demanding a crawl is taken as a stop. The choice
                    // is latched per signal to keep the approach consistent.
                    const double v_pass = lim.v_max_mps - dir.v_off_max;
                    if (!dir.treat_as_stop && dir.v_off_max > 0.0 &&
                        v_pass < 0.45 * lim.v_max_mps && v > v_pass + 1.0) {
                        dir = EcoAndDirective{};
                        dir.treat_as_stop = true;
                        stop_latch.insert(route_signals[p_sig - 1]);
                    }
                } else {
                    dir.treat_as_stop = true;
                }
            } else if (opt.mode == Mode::RolloutLos) {
                dir = los_constraints(st, dist, opt.los_range_m);
            } else {
                dir.treat_as_stop = true;  // no connectivity: every signal is a stop
            }
            ov = build_overrides(model, pos, p_sig, v, t, dir);
            if (std::getenv("ECODRIVE_DEBUG")) {
                std::fprintf(stderr, "pos=%d v=%.2f t=%.1f p_sig=%d dist=%.0f stop=%d offmax=%.2f offmin=%.2f nov=%zu\n",
                             pos, v, t, p_sig, dist, dir.treat_as_stop ? 1 : 0,
                             dir.v_off_max, dir.v_off_min, ov.size());
            }
        }

        const int h = std::min(opt.horizon, n + 1 - pos);
        std::optional<StageTransition> tr;
        double te = 0.0, tb = 0.0;
        const auto try_solve = [&](const OverrideMap& o) {
            const HorizonSolution sol = solve_horizon(model, vt, pos, h, v, soc, o);
            const ControlPair cp = model.control(sol.control);
            te = cp.t_eng_nm;
            tb = cp.t_bsg_nm;
            tr = model.step(pos, v, soc, sol.control, top_admissible_speed(model, pos + 1, o));
        };
        try {
            try_solve(ov);
        } catch (const HorizonInfeasible&) {
            // The directive made the truncated problem infeasible from the
            // current state. Weaken it: drop the speed floors first (they are
            // advisory), then all overrides, before giving up on the planner.
            OverrideMap relaxed = ov;
            for (auto& [p, o] : relaxed) o.v_lo = 0.0;
            try {
                try_solve(relaxed);
            } catch (const HorizonInfeasible&) {
                try {
                    try_solve(OverrideMap{});
                } catch (const HorizonInfeasible&) {
                    // Last resort: brake toward the creep node with the
                    // cheapest transition that avoids draining the battery.
                    const double dd = disc.boundaries_m[pos] - disc.boundaries_m[pos - 1];
                    const double a_dn = 0.95 * std::abs(model.grid().accel_min_mps2);
                    const double v_tgt =
                        std::max(creep, std::sqrt(std::max(0.0, v * v - 2.0 * a_dn * dd)));
                    double best = std::numeric_limits<double>::infinity();
                    for (int c = 0; c < model.num_controls(); ++c) {
                        const auto cand = model.step(pos, v, soc, c, v_tgt);
                        if (!cand) continue;
                        const double j = cand->cost + 1e3 * std::abs(cand->soc_next - soc);
                        if (j < best) {
                            best = j;
                            tr = cand;
                            const ControlPair cp = model.control(c);
                            te = cp.t_eng_nm;
                            tb = cp.t_bsg_nm;
                        }
                    }
                }
            }
        }
        if (!tr) {
            r.ok = false;
            r.note = "no feasible transition at position " + std::to_string(pos);
            break;
        }
        v = tr->v_next;
        soc = tr->soc_next;
        t += tr->time_s;
        fuel += tr->fuel_kg;

        // Arrival at an online-handled signal: wait out red/yellow from rest.
        const int aidx = pos;  // vector index of arrival position pos+1
        if (route_signals[aidx] >= 0 && !disc.collapse[aidx] && opt.mode != Mode::FullDp) {
            const TrafficSignal& ts =
                disc.signals.at(static_cast<std::size_t>(route_signals[aidx]));
            const SignalState st = signal_state(ts, scenario, t);
            if (st.phase != Phase::Green) {
                t += time_to_green(ts, scenario, t);  // engine off while waiting
                v = creep;
            }
        }
        push_point(r, disc.boundaries_m[pos], t, v, soc, te, tb, tr->brake_n, fuel);
    }
    finish_record(r, opt.soc0);
    return r;
}

RunRecord baseline_driver_run(const VehicleParams& veh, const PowertrainMaps& maps,
                              const BatteryParams& batt, const RouteProfile& route,
                              const SpatScenario& scenario, const DriverOptions& opt) {
    struct Event {
        double d;
        int signal;  // -1: stop sign
        bool passed = false;
    };
    std::vector<Event> events;
    for (double d : route.stop_signs_m) events.push_back({d, -1});
    for (std::size_t i = 0; i < route.signals.size(); ++i)
        events.push_back({route.signals[i].position_m, static_cast<int>(i)});
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        return a.d < b.d;
    });

    RunRecord r;
    const double dt = opt.dt_s;
    const double a_up = 2.4 * opt.aggressiveness;
    const double a_dn = 2.4 * opt.aggressiveness;
    double d = 0.0, v = 0.0, soc = opt.soc0, t = 0.0, fuel = 0.0;
    std::size_t ev = 0;
    push_point(r, 0.0, 0.0, 0.0, soc, 0.0, 0.0, 0.0, 0.0);
    const double t_cap = 4.0 * 3600.0;

    while (d < route.length_m - 1e-6) {
        if (t > t_cap) {
            r.ok = false;
            r.note = "baseline driver exceeded the simulation time cap";
            break;
        }
        while (ev < events.size() && events[ev].passed) ++ev;
        const SegmentLimits lim = limits_at(route, std::min(d, route.length_m - 1e-9));

        // Target acceleration: smooth approach to the speed limit, overridden
        // by a braking profile when a visible mandatory stop is ahead.
        double a_des = a_up * (1.0 - std::pow(std::min(v / lim.v_max_mps, 1.2), 4));
        bool must_stop = false;
        double dist_ev = 0.0;
        if (ev < events.size()) {
            dist_ev = events[ev].d - d;
            bool relevant = false;
            if (dist_ev <= opt.los_range_m) {
                if (events[ev].signal < 0) {
                    relevant = true;  // stop sign, always mandatory once seen
                } else {
                    const SignalState st =
                        signal_state(route.signals[events[ev].signal], scenario, t);
                    relevant = st.phase != Phase::Green;
                }
            }
            if (relevant) {
                const double d_brake = v * v / (2.0 * a_dn) + 5.0;
                if (dist_ev <= d_brake) {
                    must_stop = true;
                    a_des = -v * v / (2.0 * std::max(dist_ev - 0.5, 0.5));
                    a_des = std::max(a_des, -2.4);
                }
            }
        }

        // Stopped at the event line: dwell / wait, then clear it.
        if (must_stop && dist_ev < 0.7 && v < 0.8) {
            d = events[ev].d;
            v = 0.0;
            if (events[ev].signal < 0) {
                t += opt.stop_dwell_s;
            } else {
                t += time_to_green(route.signals[events[ev].signal], scenario, t);
            }
            events[ev].passed = true;
            push_point(r, d, t, v, soc, 0.0, 0.0, 0.0, fuel);
            continue;
        }

        // Torque realization: invert the driveline for the demanded force,
        // then split between engine and BSG with a charge-sustain rule.
        const double f_road = road_load(v, lim.grade_rad, veh);
        const double f_des = veh.mass_kg * a_des + f_road;
        const int gear = gear_select(v, maps);
        const double ratio = veh.final_drive * maps.gear_ratios[gear - 1];
        double t_crank = f_des * veh.wheel_radius_m / ratio;
        double te = 0.0, tb = 0.0;
        const double te_max = maps.eng_torque_max(v);
        const double te_min = maps.eng_torque_min(v);
        const double tb_max = maps.bsg_torque_max(v);
        const double tb_min = maps.bsg_torque_min(v);
        if (t_crank >= 0.0) {
            if (soc < 0.45) {
                tb = std::max(tb_min, -4.0);  // generate to sustain charge
            } else if (soc > 0.55) {
                tb = std::clamp(0.3 * t_crank / veh.belt_ratio, 0.0, tb_max);
            }
            te = std::clamp(t_crank - tb * veh.belt_ratio, 0.0, te_max);
        } else {
            tb = std::clamp(t_crank / veh.belt_ratio, tb_min, 0.0);
            te = std::clamp(t_crank - tb * veh.belt_ratio, te_min, 0.0);
        }
        // Efficiency correction: rescale toward the demanded force once.
        double f_ach = wheel_force(te, tb, v, 0.0, maps, veh);
        if (std::abs(f_ach) > 1.0 && f_des != 0.0 && std::signbit(f_ach) == std::signbit(f_des)) {
            const double scale = f_des / f_ach;
            te = std::clamp(te * scale, te_min, te_max);
            tb = std::clamp(tb * scale, tb_min, tb_max);
            f_ach = wheel_force(te, tb, v, 0.0, maps, veh);
        }
        double brake = 0.0;
        if (f_ach > f_des) {  // friction brake absorbs what regen cannot
            brake = f_ach - f_des;
            f_ach = f_des;
        }

        const bool stopped = v < 1e-3 && a_des <= 0.0;
        const DrivelineSpeeds ds = driveline_speeds(v, te, maps, veh, stopped);
        const double mdot = stopped ? 0.0 : fuel_rate(gear, ds.engine_radps, te, maps);
        double p_bsg = stopped ? 0.0 : bsg_power(tb, ds.engine_radps, maps, veh);
        double current = 0.0;
        try {
            current = battery_current(soc, p_bsg, batt);
        } catch (const PowerExceedsCapability&) {
            tb = 0.0;
            p_bsg = 0.0;
            current = battery_current(soc, 0.0, batt);
        }

        const double a = (f_ach - f_road) / veh.mass_kg;
        v = std::max(0.0, v + a * dt);
        d += v * dt;
        t += dt;
        fuel += mdot * dt;
        soc = std::clamp(soc - current * dt / (3600.0 * batt.capacity_ah), batt.soc_min,
                         batt.soc_max);

        // Pass events crossed while moving (green signals, expired dilemmas).
        if (ev < events.size() && d >= events[ev].d && !must_stop) events[ev].passed = true;

        push_point(r, std::min(d, route.length_m), t, v, soc, te, tb, brake, fuel);
    }
    finish_record(r, opt.soc0);
    return r;
}

double cumulative_cost(const RunRecord& r, const CostWeights& w) {
    return w.gamma * r.fuel_kg / w.mdot_norm_kgps + (1.0 - w.gamma) * r.time_s;
}

double error_metric(double j, double j_orig, double j_perturbed) {
    const double denom = j_orig - j_perturbed;
    if (std::abs(denom) < 1e-12)
        throw DegenerateComparison("reference costs coincide; error metric undefined");
    return std::abs((j - j_perturbed) / denom);
}

SampleStats sample_stats(const std::vector<double>& xs) {
    SampleStats s;
    s.n = static_cast<int>(xs.size());
    if (s.n == 0) return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / s.n;
    if (s.n > 1) {
        double acc = 0.0;
        for (double x : xs) acc += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(acc / (s.n - 1));
    }
    return s;
}

double welch_one_sided_p(const std::vector<double>& a, const std::vector<double>& b) {
    const SampleStats sa = sample_stats(a), sb = sample_stats(b);
    if (sa.n < 2 || sb.n < 2)
        throw DegenerateComparison("Welch test needs at least two samples per group");
    const double va = sa.sd * sa.sd / sa.n, vb = sb.sd * sb.sd / sb.n;
    const double se2 = va + vb;
    if (se2 <= 0.0) throw DegenerateComparison("zero variance in both groups");
    const double tstat = (sb.mean - sa.mean) / std::sqrt(se2);
    const double df = se2 * se2 / (va * va / (sa.n - 1) + vb * vb / (sb.n - 1));
    const boost::math::students_t dist(df);
    return 1.0 - boost::math::cdf(dist, tstat);
}

void kde_export(const std::vector<double>& samples, const std::filesystem::path& file) {
    if (samples.empty()) throw std::invalid_argument("kde_export: empty sample set");
    const SampleStats s = sample_stats(samples);
    const double h = std::max(1e-12, 1.06 * s.sd * std::pow(double(s.n), -0.2));
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *mn - 3.0 * h, hi = *mx + 3.0 * h;
    constexpr int kPoints = 256;
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << "x,density\n";
    const double norm = 1.0 / (samples.size() * h * std::sqrt(2.0 * M_PI));
    for (int i = 0; i < kPoints; ++i) {
        const double x = lo + (hi - lo) * i / (kPoints - 1);
        double dens = 0.0;
        for (double xi : samples) {
            const double u = (x - xi) / h;
            dens += std::exp(-0.5 * u * u);
        }
        out << x << ',' << dens * norm << '\n';
    }
}

std::vector<double> MonteCarloSummary::samples(Mode m, bool fuel_not_time) const {
    std::vector<double> out;
    for (const auto& row : rows)
        if (row.mode == m && row.ok) out.push_back(fuel_not_time ? row.fuel_kg : row.time_s);
    return out;
}

MonteCarloSummary monte_carlo(const RouteProfile& route, const EcoModel& model,
                              const ValueTable& vt, const std::vector<Mode>& modes,
                              int num_seeds, const SimOptions& base,
                              const DriverOptions& driver) {
    MonteCarloSummary out;
    const std::size_t nm = modes.size();
    out.rows.resize(static_cast<std::size_t>(num_seeds) * nm);

    const auto run_seed = [&](int seed) {
        const SpatScenario sc = randomize_departure(route, static_cast<std::uint64_t>(seed));
        for (std::size_t m = 0; m < nm; ++m) {
            RunRecord rec;
            if (modes[m] == Mode::BaselineDriver) {
                rec = baseline_driver_run(model.vehicle(), model.maps(), model.battery(), route,
                                          sc, driver);
            } else if (modes[m] == Mode::FullDp) {
                rec = extract_trajectory(model, vt, base.v0, base.soc0);
            } else {
                SimOptions o = base;
                o.mode = modes[m];
                o.seed = static_cast<std::uint64_t>(seed);
                rec = closed_loop_run(model, vt, sc, o);
            }
            MonteCarloRow& row = out.rows[static_cast<std::size_t>(seed) * nm + m];
            row.seed = static_cast<std::uint64_t>(seed);
            row.mode = modes[m];
            row.fuel_kg = rec.fuel_kg;
            row.time_s = rec.time_s;
            row.soc_terminal = rec.soc_terminal;
            row.cost = cumulative_cost(rec, model.weights());
            row.ok = rec.ok;
        }
    };

    const unsigned workers =
        std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
    std::vector<std::future<void>> futures;
    for (unsigned w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w] {
            for (int seed = static_cast<int>(w); seed < num_seeds;
                 seed += static_cast<int>(workers))
                run_seed(seed);
        }));
    }
    for (auto& f : futures) f.get();

    for (Mode m : modes) {
        out.fuel[m] = sample_stats(out.samples(m, true));
        out.time[m] = sample_stats(out.samples(m, false));
    }
    return out;
}

double calibrate_aggressiveness(const VehicleParams& veh, const PowertrainMaps& maps,
                                const BatteryParams& batt, const RouteProfile& route,
                                int num_seeds, const DriverOptions& base,
                                double target_time_s, double rel_tol) {
    const auto mean_time = [&](double aggr) {
        DriverOptions o = base;
        o.aggressiveness = aggr;
        double acc = 0.0;
        for (int seed = 0; seed < num_seeds; ++seed) {
            const SpatScenario sc = randomize_departure(route, static_cast<std::uint64_t>(seed));
            acc += baseline_driver_run(veh, maps, batt, route, sc, o).time_s;
        }
        return acc / num_seeds;
    };
    double lo = 0.25, hi = 1.0;  // travel time decreases with aggressiveness
    double best = base.aggressiveness;
    for (int it = 0; it < 18; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double tm = mean_time(mid);
        best = mid;
        if (std::abs(tm - target_time_s) <= rel_tol * target_time_s) break;
        if (tm > target_time_s)
            lo = mid;  // too slow: push harder
        else
            hi = mid;
    }
    return best;
}

std::vector<ParetoRow> pareto_sweep(const std::vector<double>& gammas,
                                    const RouteProfile& route, const VehicleParams& veh,
                                    const PowertrainMaps& maps, const BatteryParams& batt,
                                    const GridSpec& grid, const CostWeights& base_weights) {
    std::vector<ParetoRow> rows;
    for (double g : gammas) {
        CostWeights w = base_weights;
        w.gamma = g;
        const DiscretizedRoute disc = discretize_route(route, grid, w, true);
        const EcoModel model(disc, veh, maps, batt, grid, w);
        const DpResult dp = solve_dp(model, DpOptions{});
        const RunRecord rec = extract_trajectory(model, dp.table, -1.0, 0.5);
        rows.push_back({g, rec.fuel_kg, rec.time_s});
    }
    return rows;
}

}  // namespace ecodrive
