// ecodrive: joint speed / state-of-charge trajectory optimization for a
// 48V mild-hybrid vehicle over a known route.
//
// Subcommands:
//   gen-maps    write the synthetic powertrain map set as CSV
//   solve       full-route DP -> value table + optimal trajectory
//   rollout     closed-loop receding-horizon run against a value table
//   montecarlo  seeded departure-time study across controller modes
//   pareto      fuel/time tradeoff sweep over the cost weight gamma
//
// Exit codes: 0 success, 2 validation failure, 3 infeasible optimization,
// 4 I/O failure.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "ecodrive/io.hpp"
#include "ecodrive/model.hpp"
#include "ecodrive/rollout.hpp"
#include "ecodrive/sim.hpp"

namespace fs = std::filesystem;
using namespace ecodrive;

namespace {

constexpr const char* kToolVersion = "1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 4;

struct Validation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string route_path;
    std::string maps_path;  // empty: synthetic maps
    std::string out_dir = ".";
    double gamma = 0.7;
    bool spat_signals = false;  // solve: leave signals open for online handling
    GridSpec grid;
    CostWeights weights() const {
        CostWeights w;
        w.gamma = gamma;
        return w;
    }
};

std::string config_string(const Common& c) {
    std::ostringstream os;
    os.precision(17);
    os << "v" << kToolVersion << ";gamma=" << c.gamma << ";signals="
       << (c.spat_signals ? "spat" : "stops") << ";dd_m=" << c.grid.distance_step_m
       << ";dv_mps=" << c.grid.velocity_step_mps << ";dsoc=" << c.grid.soc_step
       << ";dte_nm=" << c.grid.eng_torque_step_nm << ";dtb_nm=" << c.grid.bsg_torque_step_nm
       << ";vmin_mps=" << c.grid.velocity_min_mps << ";vmax_mps=" << c.grid.velocity_max_mps
       << ";amin_mps2=" << c.grid.accel_min_mps2 << ";amax_mps2=" << c.grid.accel_max_mps2;
    return os.str();
}

RouteProfile load_route_checked(const std::string& path) {
    if (!fs::exists(path)) throw IoError("route file not found: " + path);
    RouteProfile route;
    try {
        route = load_route(path);
    } catch (const std::exception& e) {
        throw Validation(e.what());
    }
    const auto violations = validate_route(route);
    if (!violations.empty()) {
        std::string msg = "invalid route:";
        for (const auto& v : violations) msg += "\n  " + v;
        throw Validation(msg);
    }
    return route;
}

PowertrainMaps load_maps_checked(const std::string& path) {
    if (path.empty()) return synthetic_maps();
    if (!fs::exists(path)) throw IoError("maps directory not found: " + path);
    return load_maps_csv(path);
}

EcoModel build_model(const Common& c, const RouteProfile& route, double mass_scale = 1.0,
                     int control_coarsen = 1) {
    const DiscretizedRoute disc =
        discretize_route(route, c.grid, c.weights(), !c.spat_signals);
    return EcoModel(disc, default_vehicle(), load_maps_checked(c.maps_path),
                    synthetic_battery(), c.grid, c.weights(), mass_scale, control_coarsen);
}

ValueTable solve_table(const Common& c, const EcoModel& model) {
    const DpResult dp = solve_dp(model, DpOptions{});
    if (dp.empty_stage)
        throw InfeasibleTransition("empty feasible set at stage " +
                                   std::to_string(*dp.empty_stage));
    ValueTable vt = dp.table;
    vt.route_hash = hash_file(c.route_path);
    vt.config_hash = hash_string(config_string(c));
    return vt;
}

void add_common(CLI::App* cmd, Common& c, bool needs_route = true) {
    if (needs_route)
        cmd->add_option("--route", c.route_path, "route JSON file")->required();
    cmd->add_option("--maps", c.maps_path, "powertrain maps CSV directory (default: synthetic)");
    cmd->add_option("--out", c.out_dir, "output directory");
    cmd->add_option("--gamma", c.gamma, "fuel/time weight, in (0,1)")
        ->check(CLI::Range(1e-6, 1.0 - 1e-6));
    cmd->add_option("--dd-m", c.grid.distance_step_m, "distance step, m");
    cmd->add_option("--dv-mps", c.grid.velocity_step_mps, "velocity step, m/s");
    cmd->add_option("--dsoc", c.grid.soc_step, "SoC step, fraction");
}

int run(int argc, char** argv) {
    CLI::App app{"mild-hybrid eco-driving trajectory optimizer"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // gen-maps
    auto* gen = app.add_subcommand("gen-maps", "write the synthetic map set as CSV");
    std::string gen_out = "maps";
    gen->add_option("--out", gen_out, "target directory");

    // solve
    Common sc;
    auto* solve = app.add_subcommand("solve", "full-route DP value table + trajectory");
    add_common(solve, sc);
    solve->add_flag("--spat-signals", sc.spat_signals,
                    "leave signals open for online SPaT handling (default: treat as stops)");
    double solve_soc0 = 0.5;
    solve->add_option("--soc0", solve_soc0, "initial SoC")->check(CLI::Range(0.30, 0.70));

    // rollout
    Common rc;
    auto* roll = app.add_subcommand("rollout", "closed-loop receding-horizon run");
    add_common(roll, rc);
    std::string vt_path, mode_str = "rollout";
    int horizon = 20;
    std::uint64_t seed = 0;
    double roll_soc0 = 0.5, mass_scale = 1.0, los_range = 100.0;
    roll->add_option("--vt", vt_path, "value-table artifact from solve")->required();
    roll->add_option("--mode", mode_str, "rollout | rollout+ecoand | rollout+los")
        ->check(CLI::IsMember({"rollout", "rollout+ecoand", "rollout+los"}));
    roll->add_option("--horizon", horizon, "receding horizon length, stages")
        ->check(CLI::Range(1, 1000));
    roll->add_option("--seed", seed, "departure-time scenario seed");
    roll->add_option("--soc0", roll_soc0, "initial SoC")->check(CLI::Range(0.30, 0.70));
    roll->add_option("--mass-scale", mass_scale, "plant mass perturbation factor")
        ->check(CLI::Range(0.5, 2.0));
    roll->add_option("--los-range-m", los_range, "line-of-sight range for rollout+los");

    // montecarlo
    Common mc;
    auto* monte = app.add_subcommand("montecarlo", "seeded departure-time study");
    add_common(monte, mc);
    std::vector<std::string> mc_modes = {"rollout+ecoand", "rollout+los", "baseline-driver"};
    int mc_seeds = 100, mc_horizon = 20, mc_coarsen = 2;
    double mc_aggr = 0.7;
    monte->add_option("--modes", mc_modes, "controller modes to compare")->delimiter(',');
    monte->add_option("--seeds", mc_seeds, "number of departure seeds")
        ->check(CLI::Range(1, 100000));
    monte->add_option("--horizon", mc_horizon, "receding horizon length, stages");
    monte->add_option("--control-coarsen", mc_coarsen, "torque-grid coarsening factor")
        ->check(CLI::Range(1, 8));
    monte->add_option("--driver-aggressiveness", mc_aggr, "baseline driver pedal use")
        ->check(CLI::Range(0.1, 1.0));

    // pareto
    Common pc;
    auto* par = app.add_subcommand("pareto", "fuel/time sweep over gamma");
    add_common(par, pc);
    std::vector<double> gammas = {0.3, 0.5, 0.7, 0.82, 0.9};
    par->add_option("--gammas", gammas, "gamma values")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*gen) {
            fs::create_directories(gen_out);
            write_maps_csv(synthetic_maps(), gen_out);
            std::cout << "maps written to " << gen_out << "\n";
            return kExitOk;
        }
        if (*solve) {
            const RouteProfile route = load_route_checked(sc.route_path);
            const EcoModel model = build_model(sc, route);
            const ValueTable vt = solve_table(sc, model);
            fs::create_directories(sc.out_dir);
            save_value_table(vt, fs::path(sc.out_dir) / "value_table.bin");
            const RunRecord traj = extract_trajectory(model, vt, -1.0, solve_soc0);
            if (!traj.ok) throw InfeasibleTransition("trajectory extraction: " + traj.note);
            write_trajectory_csv(traj, fs::path(sc.out_dir) / "trajectory.csv");
            std::cout << "value table: " << (fs::path(sc.out_dir) / "value_table.bin").string()
                      << "\nfuel_g=" << traj.fuel_kg * 1000.0 << " time_s=" << traj.time_s
                      << " soc_terminal=" << traj.soc_terminal << "\n";
            return kExitOk;
        }
        if (*roll) {
            const Mode mode = mode_from_name(mode_str);
            rc.spat_signals = (mode == Mode::RolloutEcoAnd || mode == Mode::RolloutLos);
            const RouteProfile route = load_route_checked(rc.route_path);
            const ValueTable vt =
                load_value_table(vt_path, hash_file(rc.route_path),
                                 hash_string(config_string(rc)));
            const EcoModel model = build_model(rc, route, mass_scale);
            SimOptions opt;
            opt.mode = mode;
            opt.horizon = horizon;
            opt.seed = seed;
            opt.soc0 = roll_soc0;
            opt.los_range_m = los_range;
            const SpatScenario scen = randomize_departure(route, seed);
            RunRecord rec = closed_loop_run(model, vt, scen, opt);
            rec.config_hash = vt.config_hash;
            if (!rec.ok) throw InfeasibleTransition("closed-loop run failed: " + rec.note);
            fs::create_directories(rc.out_dir);
            write_trajectory_csv(rec, fs::path(rc.out_dir) / "run.csv");
            std::cout << "mode=" << mode_str << " seed=" << seed
                      << " fuel_g=" << rec.fuel_kg * 1000.0 << " time_s=" << rec.time_s
                      << " soc_terminal=" << rec.soc_terminal << "\n";
            return kExitOk;
        }
        if (*monte) {
            mc.spat_signals = true;
            const RouteProfile route = load_route_checked(mc.route_path);
            const EcoModel model = build_model(mc, route, 1.0, mc_coarsen);
            const ValueTable vt = solve_table(mc, model);
            std::vector<Mode> modes;
            for (const auto& m : mc_modes) modes.push_back(mode_from_name(m));
            SimOptions base;
            base.horizon = mc_horizon;
            DriverOptions driver;
            driver.aggressiveness = mc_aggr;
            const MonteCarloSummary sum =
                monte_carlo(route, model, vt, modes, mc_seeds, base, driver);
            fs::create_directories(mc.out_dir);
            write_results_csv(sum.rows, model.weights(),
                              fs::path(mc.out_dir) / "results.csv");
            write_summary_json(sum, fs::path(mc.out_dir) / "summary.json");
            int failed = 0;
            for (const auto& r : sum.rows)
                if (!r.ok) ++failed;
            for (Mode m : modes) {
                const auto& f = sum.fuel.at(m);
                const auto& t = sum.time.at(m);
                std::cout << mode_name(m) << ": fuel_g " << f.mean * 1000.0 << " +- "
                          << f.sd * 1000.0 << ", time_s " << t.mean << " +- " << t.sd << "\n";
                kde_export(sum.samples(m, true),
                           fs::path(mc.out_dir) / ("kde_fuel_" + mode_name(m) + ".csv"));
            }
            if (failed > 0) {
                std::cerr << failed << " of " << sum.rows.size()
                          << " runs failed; see results.csv per-seed status\n";
                return kExitInfeasible;
            }
            return kExitOk;
        }
        if (*par) {
            const RouteProfile route = load_route_checked(pc.route_path);
            const auto rows = pareto_sweep(gammas, route, default_vehicle(),
                                           load_maps_checked(pc.maps_path),
                                           synthetic_battery(), pc.grid, pc.weights());
            fs::create_directories(pc.out_dir);
            write_pareto_csv(rows, fs::path(pc.out_dir) / "pareto.csv");
            for (const auto& r : rows)
                std::cout << "gamma=" << r.gamma << " fuel_g=" << r.fuel_kg * 1000.0
                          << " time_s=" << r.time_s << "\n";
            return kExitOk;
        }
    } catch (const Validation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const InfeasibleTransition& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const HorizonInfeasible& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
