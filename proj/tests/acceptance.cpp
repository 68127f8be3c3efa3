// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Expects the data directory as argv[1] (defaults to ../data).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <ecodrive/io.hpp>
#include <ecodrive/model.hpp>
#include <ecodrive/rollout.hpp>
#include <ecodrive/sim.hpp>
#include <optional>
#include <string>
#include <vector>

using namespace ecodrive;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// ---------------------------------------------------------------------------
// criterion 1: toy-instance equivalence with exhaustive policy enumeration.

/// Node-exact toy stage model: every transition lands on a grid node, so the
/// solver's interpolation is exact and brute force is a strict oracle.
class ToyModel final : public StageModel {
public:
    explicit ToyModel(int stages) : stages_(stages) {}
    int num_stages() const override { return stages_; }
    const std::vector<double>& velocity_nodes() const override { return vel_; }
    const std::vector<double>& soc_nodes() const override { return soc_; }
    int num_controls() const override { return 9; }
    std::vector<std::uint8_t> velocity_mask(int) const override {
        return std::vector<std::uint8_t>(vel_.size(), 1);
    }
    std::optional<StageTransition> step(int stage, double v, double soc, int control,
                                        double) const override {
        const int dv = control / 3 - 1;
        const int ds = control % 3 - 1;
        const double v_next = v + dv;
        const double soc_next = soc + 0.1 * ds;
        if (v_next < vel_.front() - 1e-9 || v_next > vel_.back() + 1e-9) return std::nullopt;
        if (soc_next < soc_.front() - 1e-9 || soc_next > soc_.back() + 1e-9)
            return std::nullopt;
        StageTransition t;
        t.v_next = v_next;
        t.soc_next = soc_next;
        t.time_s = 1.0;
        t.cost = 5.0 - v + 0.7 * dv * dv + 0.4 * ds * ds + 0.3 * soc + 0.01 * stage;
        return t;
    }

private:
    int stages_;
    std::vector<double> vel_{1.0, 2.0, 3.0, 4.0};
    std::vector<double> soc_{0.4, 0.5, 0.6};
};

double brute_force(const ToyModel& m, double v, double soc, int stage) {
    if (stage > m.num_stages()) return 0.0;
    double best = kInfCost;
    for (int c = 0; c < m.num_controls(); ++c) {
        const auto t = m.step(stage, v, soc, c, 0.0);
        if (!t) continue;
        best = std::min(best, t->cost + brute_force(m, t->v_next, t->soc_next, stage + 1));
    }
    return best;
}

void criterion_1() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int stages : {4, 6}) {
        const ToyModel m(stages);
        DpOptions opt;
        opt.terminal_cost = [](double, double) { return 0.0; };
        const auto vt = solve_dp(m, opt).table;
        for (double v : m.velocity_nodes())
            for (double soc : m.soc_nodes())
                worst = std::max(worst,
                                 std::abs(vt.query(1, v, soc) - brute_force(m, v, soc, 1)));
    }
    const double dt = seconds_since(t0);
    report(1, worst <= 1e-9 && dt < 1.0,
           fmt("toy DP vs exhaustive enumeration: max abs diff %.2e (tol 1e-9), %.2f s "
               "(limit 1 s)",
               worst, dt));
}

// ---------------------------------------------------------------------------
// shared plumbing for the optimizer studies.

struct Study {
    EcoModel model;
    ValueTable vt;
    CostWeights weights;
};

Study build_study(const RouteProfile& route, const GridSpec& grid, double gamma,
                  bool signals_as_stops) {
    CostWeights w;
    w.gamma = gamma;
    EcoModel model(discretize_route(route, grid, w, signals_as_stops), VehicleParams{},
                   synthetic_maps(), synthetic_battery(), grid, w);
    const CostWeights wn = model.weights();
    ValueTable vt = solve_dp(model, DpOptions{}).table;
    return {std::move(model), std::move(vt), wn};
}

std::vector<std::pair<double, double>> g_soc_runs;  // (initial, terminal) per optimizer run

void track_soc(const RunRecord& r) {
    g_soc_runs.emplace_back(r.soc_initial, r.soc_terminal);
}

void criterion_2(const std::string& data_dir) {
    const auto t0 = Clock::now();
    const auto route = load_route(data_dir + "/synthetic_1km.json");
    GridSpec grid;
    grid.velocity_step_mps = 0.68;
    grid.soc_step = 0.01;
    const auto s = build_study(route, grid, 0.4, true);
    const double v1 = s.vt.query(1, s.model.creep_speed(), 0.5);
    track_soc(extract_trajectory(s.model, s.vt, s.model.creep_speed(), 0.5));
    double worst = 0.0;
    for (int nh : {5, 10, 20}) {
        SimOptions so;
        so.mode = Mode::Rollout;
        so.horizon = nh;
        const auto rec = closed_loop_run(s.model, s.vt, SpatScenario{}, so);
        track_soc(rec);
        worst = std::max(worst, std::abs(cumulative_cost(rec, s.weights) - v1) / v1);
    }
    const double dt = seconds_since(t0);
    report(2, worst <= 0.005 && dt < 60.0,
           fmt("closed-loop cost vs V1 on the 100-step route, N_H in {5,10,20}: max rel "
               "diff %.4f (tol 0.005), %.1f s (limit 60 s)",
               worst, dt));
}

RouteProfile hilly_route() {
    RouteProfile r;
    r.length_m = 2000.0;
    for (int i = 0; i < 8; ++i) {
        Waypoint w;
        w.d_m = 250.0 * i;
        w.v_min_mps = 3.0;
        w.v_max_mps = 15.6;
        w.grade_rad = (i % 2 == 0 ? 0.06 : -0.06);
        r.waypoints.push_back(w);
    }
    return r;
}

struct PerturbResult {
    double j_eps;
    bool improved;
};

/// One perturbation instance: rollout against the stale (unperturbed) value
/// table on the perturbed plant. The recovered-cost reference is the best
/// realized cost among the perturbed-table policy extract, the fresh-table
/// rollout, and the measured run itself: grid quantization means no single
/// realization is a guaranteed lower bound, but any achieved cost is
/// achievable, so the minimum is the fairest zero point of the error scale.
PerturbResult perturb_instance(const Study& s, double mass_scale, int horizon) {
    const EcoModel pert(s.model.route(), VehicleParams{}, synthetic_maps(),
                        synthetic_battery(), s.model.grid(), s.weights, mass_scale);
    const auto vt_p = solve_dp(pert, DpOptions{}).table;
    const double j_orig =
        cumulative_cost(extract_trajectory(pert, s.vt, pert.creep_speed(), 0.5), s.weights);
    double ref =
        cumulative_cost(extract_trajectory(pert, vt_p, pert.creep_speed(), 0.5), s.weights);
    SimOptions so;
    so.mode = Mode::Rollout;
    so.horizon = horizon;
    ref = std::min(ref, cumulative_cost(closed_loop_run(pert, vt_p, SpatScenario{}, so),
                                        s.weights));
    const double j =
        cumulative_cost(closed_loop_run(pert, s.vt, SpatScenario{}, so), s.weights);
    ref = std::min(ref, j);
    return {(j - ref) / (j_orig - ref), j <= j_orig + 1e-9};
}

void criterion_3() {
    const auto route = hilly_route();
    const GridSpec grid;
    double worst_eps = 0.0;
    bool all_improved = true;
    for (double gamma : {0.4, 0.7, 0.82}) {
        const auto s = build_study(route, grid, gamma, true);
        track_soc(extract_trajectory(s.model, s.vt, s.model.creep_speed(), 0.5));
        for (double ms : {0.8, 1.2}) {
            const auto r = perturb_instance(s, ms, 20);
            worst_eps = std::max(worst_eps, r.j_eps);
            all_improved = all_improved && r.improved;
        }
    }
    report(3, worst_eps <= 0.05 && all_improved,
           fmt("+-20%% mass, gamma in {0.4,0.7,0.82}, N_H=20: max J_eps %.4f (tol 0.05), "
               "rollout <= replay on all 6 instances: %s",
               worst_eps, all_improved ? "yes" : "no"));
}

void criterion_4() {
    const auto route = hilly_route();
    const GridSpec grid;
    const int nhs[] = {10, 20, 40};
    double mean[3] = {0.0, 0.0, 0.0};
    int n = 0;
    for (double gamma : {0.4, 0.7, 0.82}) {
        const auto s = build_study(route, grid, gamma, true);
        for (double ms : {0.7, 1.3}) {
            ++n;
            for (int i = 0; i < 3; ++i) mean[i] += perturb_instance(s, ms, nhs[i]).j_eps;
        }
    }
    for (double& m : mean) m /= n;
    int inversions = 0;
    double worst_inv = 0.0;
    for (int i = 1; i < 3; ++i)
        if (mean[i] > mean[i - 1]) {
            ++inversions;
            worst_inv = std::max(worst_inv, mean[i] - mean[i - 1]);
        }
    report(4, inversions <= 1 && worst_inv <= 0.02,
           fmt("mean J_eps over N_H {10,20,40}: %.4f / %.4f / %.4f; inversions %d (max 1), "
               "worst inversion %.4f (tol 0.02)",
               mean[0], mean[1], mean[2], inversions, worst_inv));
}

void criterion_5() {
    double worst = 0.0;
    for (const auto& [init, term] : g_soc_runs) worst = std::max(worst, std::abs(term - init));
    report(5, !g_soc_runs.empty() && worst <= 0.02 + 1e-9,
           fmt("terminal vs initial SoC over %zu optimizer runs: max |drift| %.4f (tol 0.02, "
               "one SoC grid step)",
               g_soc_runs.size(), worst));
}

void criterion_6(const std::string& data_dir) {
    const auto route = load_route(data_dir + "/pareto_2km.json");
    const auto rows = pareto_sweep({0.3, 0.5, 0.7, 0.82, 0.9}, route, VehicleParams{},
                                   synthetic_maps(), synthetic_battery(), GridSpec{},
                                   CostWeights{});
    bool monotone = true;
    int strict = 0, best_strict = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        monotone = monotone && rows[i].fuel_kg <= rows[i - 1].fuel_kg + 1e-9 &&
                   rows[i].time_s >= rows[i - 1].time_s - 1e-9;
        const bool s = rows[i].fuel_kg < rows[i - 1].fuel_kg - 1e-9 &&
                       rows[i].time_s > rows[i - 1].time_s + 1e-9;
        strict = s ? strict + 1 : 0;
        best_strict = std::max(best_strict, strict);
    }
    report(6, monotone && best_strict >= 3,
           fmt("gamma sweep {0.3,0.5,0.7,0.82,0.9}: fuel nonincreasing and time "
               "nondecreasing: %s; longest strict run %d consecutive points (min 3)",
               monotone ? "yes" : "no", best_strict));
}

struct McOutcome {
    MonteCarloSummary summary;
};

McOutcome run_monte_carlo(const std::string& data_dir, int seeds) {
    const auto route = load_route(data_dir + "/urban_7p4km.json");
    const GridSpec grid;
    const CostWeights w;
    EcoModel model(discretize_route(route, grid, w, false), VehicleParams{}, synthetic_maps(),
                   synthetic_battery(), grid, w);
    const auto vt = solve_dp(model, DpOptions{}).table;
    SimOptions base;
    base.horizon = 20;
    return {monte_carlo(route, model, vt,
                        {Mode::RolloutEcoAnd, Mode::RolloutLos, Mode::BaselineDriver}, seeds,
                        base, DriverOptions{})};
}

void criteria_7_8(const std::string& data_dir) {
    const int seeds = 100;
    const auto mc = run_monte_carlo(data_dir, seeds).summary;
    const auto& eco_fuel = mc.fuel.at(Mode::RolloutEcoAnd);
    const auto& los_fuel = mc.fuel.at(Mode::RolloutLos);
    const auto& drv_fuel = mc.fuel.at(Mode::BaselineDriver);
    const auto& eco_time = mc.time.at(Mode::RolloutEcoAnd);
    const auto& los_time = mc.time.at(Mode::RolloutLos);
    const double p = welch_one_sided_p(mc.samples(Mode::RolloutEcoAnd, true),
                                       mc.samples(Mode::RolloutLos, true));
    const double time_gap = std::abs(eco_time.mean - los_time.mean) / los_time.mean;
    report(7,
           eco_fuel.mean < los_fuel.mean && time_gap <= 0.05 && p < 0.05 &&
               eco_fuel.n >= 100,
           fmt("%d seeds: SPaT-shaped fuel %.1f g vs line-of-sight %.1f g, mean-time gap "
               "%.1f%% (tol 5%%), one-sided p %.2e (tol 0.05)",
               seeds, eco_fuel.mean * 1e3, los_fuel.mean * 1e3, time_gap * 100.0, p));
    report(8, eco_fuel.sd < drv_fuel.sd,
           fmt("fuel standard deviation: SPaT-shaped %.2f g vs heuristic driver %.2f g "
               "(must be strictly lower) on the same %d seeds",
               eco_fuel.sd * 1e3, drv_fuel.sd * 1e3, seeds));
}

void criterion_9(const std::string& data_dir) {
    const auto route = load_route(data_dir + "/urban_7p4km.json");
    const GridSpec grid;
    const CostWeights w;
    const auto t0 = Clock::now();
    EcoModel model(discretize_route(route, grid, w, true), VehicleParams{}, synthetic_maps(),
                   synthetic_battery(), grid, w);
    const auto vt = solve_dp(model, DpOptions{}).table;
    const double dp_s = seconds_since(t0);
    track_soc(extract_trajectory(model, vt, model.creep_speed(), 0.5));

    // Median-of-5 timing of one 20-stage receding-horizon solve mid-route.
    std::vector<double> times;
    for (int i = 0; i < 5; ++i) {
        const auto h0 = Clock::now();
        solve_horizon(model, vt, model.num_stages() / 2, 20, 8.66, 0.5);
        times.push_back(seconds_since(h0));
    }
    std::sort(times.begin(), times.end());
    const double horizon_ms = times[2] * 1e3;
    report(9, horizon_ms <= 200.0 && dp_s <= 600.0,
           fmt("20-stage horizon solve %.1f ms (limit 200 ms); full 7.4 km DP %.1f s "
               "(limit 600 s)",
               horizon_ms, dp_s));
}

void criterion_10() {
    RouteProfile flat;
    flat.length_m = 100.0;
    flat.waypoints = {{0.0, 3.0, 13.4, 0.0}};
    const GridSpec grid;
    const CostWeights w;
    const VehicleParams veh;
    const auto maps = synthetic_maps();
    const auto batt = synthetic_battery();
    const EcoModel m(discretize_route(flat, grid, w, true), veh, maps, batt, grid, w);

    // 1 ms explicit-Euler cross-check of the spatial transition.
    double worst_v = 0.0, worst_soc = 0.0;
    for (const auto& [te, tb] : std::vector<std::pair<double, double>>{
             {66.0, 4.2}, {39.6, -8.4}, {92.4, 0.0}}) {
        const auto t = m.step_torques(1, 8.66, 0.5, te, tb, m.clamp_speed(2));
        if (!t) continue;
        double x = 0.0, v = 8.66;
        const double dt = 1e-3;
        while (x < 10.0) {
            v += dt * (wheel_force(te, tb, v, 0.0, maps, veh) - road_load(v, 0.0, veh)) /
                 veh.mass_kg;
            x += v * dt;
        }
        worst_v = std::max(worst_v, std::abs(t->v_next - v) / t->v_next);

        // Charge bookkeeping identity against the equivalent-circuit current.
        const auto ds = driveline_speeds(8.66, te, maps, veh);
        const double amp = battery_current(0.5, bsg_power(tb, ds.engine_radps, maps, veh),
                                           batt);
        const double dsoc = -amp * t->time_s / (3600.0 * batt.capacity_ah);
        worst_soc = std::max(worst_soc, std::abs((t->soc_next - 0.5) - dsoc) /
                                            std::abs(dsoc));
    }

    // The capability guard trips exactly past the discriminant boundary.
    const double voc = batt.voc(0.5);
    const double p_max = voc * voc / (4.0 * batt.r0_ohm);
    bool guard_ok = true;
    try {
        battery_current(0.5, p_max, batt);
    } catch (const PowerExceedsCapability&) {
        guard_ok = false;
    }
    bool threw = false;
    try {
        battery_current(0.5, p_max * (1.0 + 1e-9), batt);
    } catch (const PowerExceedsCapability&) {
        threw = true;
    }
    guard_ok = guard_ok && threw;

    report(10, worst_v <= 0.01 && worst_soc <= 1e-6 && guard_ok,
           fmt("1 ms Euler cross-check: max rel v error %.2e (tol 1e-2); SoC identity max "
               "rel error %.2e (tol 1e-6); capability guard at the discriminant boundary: %s",
               worst_v, worst_soc, guard_ok ? "exact" : "wrong"));
}

}  // namespace

int main(int argc, char** argv) {
    const std::string data_dir = argc > 1 ? argv[1] : "../data";
    criterion_1();
    criterion_2(data_dir);
    criterion_3();
    criterion_4();
    criterion_6(data_dir);
    criteria_7_8(data_dir);
    criterion_9(data_dir);
    criterion_5();  // aggregates SoC drift over every run recorded above
    criterion_10();
    if (g_failures > 0) std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures;
}
