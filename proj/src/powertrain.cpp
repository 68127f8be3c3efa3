#include "ecodrive/powertrain.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ecodrive {

double road_load(double v_mps, double grade_rad, const VehicleParams& p) {
    const double aero = 0.5 * p.drag_cd * p.air_density * p.frontal_area_m2 * v_mps * v_mps;
    const double cr = p.rolling_cr0 + p.rolling_cr1 * v_mps;
    const double roll = p.mass_kg * p.gravity * std::cos(grade_rad) * cr;
    const double grade = p.mass_kg * p.gravity * std::sin(grade_rad);
    return aero + roll + grade;
}

int gear_select(double v_mps, const PowertrainMaps& maps) {
    int gear = 1;
    for (double thr : maps.upshift_mps) {
        if (v_mps >= thr)
            ++gear;
        else
            break;
    }
    return gear;
}

DrivelineSpeeds driveline_speeds(double v_mps, double eng_torque_nm, const PowertrainMaps& maps,
                                 const VehicleParams& p, bool stopped) {
    const int gear = gear_select(v_mps, maps);
    const double omega_turb =
        p.final_drive * maps.gear_ratios[gear - 1] * v_mps / p.wheel_radius_m;
    const double slip = maps.slip_map[gear - 1].at(omega_turb, eng_torque_nm);
    const double omega_pump = omega_turb + slip;
    double omega_eng;
    if (omega_pump >= maps.omega_stall)
        omega_eng = omega_pump;
    else
        omega_eng = stopped ? 0.0 : maps.omega_idle;
    return {omega_eng, omega_turb, gear};
}

double fuel_rate(int gear, double engine_radps, double eng_torque_nm,
                 const PowertrainMaps& maps) {
    if (engine_radps <= 0.0) return 0.0;
    const Table2D& psi = maps.fuel_map[gear - 1];
    if (eng_torque_nm <= 0.0) {
        // Overrun fuel cutoff above idle; idle fuel floor otherwise.
        if (engine_radps > maps.omega_idle) return 0.0;
        return std::max(0.0, psi.at(maps.omega_idle, 0.0));
    }
    return std::max(0.0, psi.at(engine_radps, eng_torque_nm));
}

double bsg_power(double bsg_torque_nm, double engine_radps, const PowertrainMaps& maps,
                 const VehicleParams& p) {
    if (bsg_torque_nm == 0.0) return 0.0;
    const double omega_bsg = p.belt_ratio * engine_radps;
    const double eta = maps.bsg_eff.at(omega_bsg, bsg_torque_nm);
    if (bsg_torque_nm > 0.0) return bsg_torque_nm * omega_bsg / eta;
    return bsg_torque_nm * omega_bsg * eta;
}

double battery_current(double soc, double bsg_power_w, const BatteryParams& b) {
    const double voc = b.voc(soc);
    const double disc = voc * voc - 4.0 * b.r0_ohm * bsg_power_w;
    if (disc < 0.0)
        throw PowerExceedsCapability("demanded electrical power " + std::to_string(bsg_power_w) +
                                     " W exceeds battery capability");
    const double current = (voc - std::sqrt(disc)) / (2.0 * b.r0_ohm);
    return current + b.bias_current_a;
}

double wheel_force(double eng_torque_nm, double bsg_torque_nm, double v_mps,
                   double brake_force_n, const PowertrainMaps& maps, const VehicleParams& p) {
    const int gear = gear_select(v_mps, maps);
    const double ratio = p.final_drive * maps.gear_ratios[gear - 1];
    const double omega_turb = ratio * v_mps / p.wheel_radius_m;
    const double t_turb = eng_torque_nm + bsg_torque_nm;
    const double eta = maps.trans_eff.at(omega_turb, t_turb);
    const double eta_bar = (t_turb >= 0.0) ? eta : 1.0 / eta;
    const double t_out = ratio * t_turb * eta_bar;
    return t_out / p.wheel_radius_m - brake_force_n;
}

// ---------------------------------------------------------------------------
// Synthetic surrogate maps
// ---------------------------------------------------------------------------

namespace {

constexpr double kWillansFriction = 2.75e-6;  // kg/rad, engine friction term
constexpr double kWillansSlope = 6.39e-8;     // kg/J, indicated-work term
constexpr double kDsfReduction = 0.30;        // low-load friction reduction (DSF region)

double willans_fuel(double omega, double torque) {
    if (omega <= 0.0) return 0.0;
    const double t = std::max(torque, 0.0);
    const double dsf = 1.0 - kDsfReduction * std::exp(-(t / 50.0) * (t / 50.0));
    return std::max(0.0, kWillansFriction * omega * dsf + kWillansSlope * omega * t);
}

Table2D make_table(std::vector<double> xs, std::vector<double> ys, auto&& fn) {
    Table2D t;
    t.x = std::move(xs);
    t.y = std::move(ys);
    t.v.reserve(t.x.size() * t.y.size());
    for (double xv : t.x)
        for (double yv : t.y) t.v.push_back(fn(xv, yv));
    return t;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
    return out;
}

}  // namespace

PowertrainMaps synthetic_maps() {
    PowertrainMaps m;
    m.gear_ratios = {4.58, 2.96, 1.91, 1.45, 1.00, 0.75};
    m.upshift_mps = {4.0, 7.5, 11.0, 15.0, 19.0};
    m.omega_idle = 78.0;
    m.omega_stall = 90.0;

    const auto omega_axis = linspace(0.0, 650.0, 27);
    const std::vector<double> torque_axis = {-30, -15, 0,   15,  30,  50,
                                             75,  100, 130, 160, 200, 240};
    for (int g = 1; g <= 6; ++g)
        m.fuel_map.push_back(make_table(omega_axis, torque_axis, willans_fuel));

    m.bsg_eff = make_table(linspace(0.0, 1800.0, 19), linspace(-30.0, 30.0, 13),
                           [](double w, double t) {
                               const double e = 0.90 - 5e-7 * (w - 250.0) * (w - 250.0) -
                                                3e-5 * (std::abs(t) - 15.0) * (std::abs(t) - 15.0);
                               return std::clamp(e, 0.60, 0.95);
                           });
    m.trans_eff = make_table(linspace(0.0, 700.0, 15), linspace(-80.0, 260.0, 18),
                             [](double w, double t) {
                                 const double e = 0.95 - 2e-7 * (w - 150.0) * (w - 150.0) -
                                                  1.2e-6 * (t - 60.0) * (t - 60.0);
                                 return std::clamp(e, 0.80, 0.97);
                             });
    for (int g = 1; g <= 6; ++g) {
        const double slip = 40.0 / g;
        Table2D s;
        s.x = {0.0};
        s.y = {0.0};
        s.v = {slip};
        m.slip_map.push_back(std::move(s));
    }

    m.eng_torque_min = {{0.0, 40.0}, {-30.0, -30.0}};
    m.eng_torque_max = {{0.0, 3.0, 6.0, 40.0}, {120.0, 160.0, 180.0, 180.0}};
    m.bsg_torque_max = {{0.0, 12.0, 18.0, 25.0, 40.0}, {26.5, 26.5, 22.0, 16.0, 10.0}};
    m.bsg_torque_min = {{0.0, 12.0, 18.0, 25.0, 40.0}, {-26.5, -26.5, -22.0, -16.0, -10.0}};
    return m;
}

BatteryParams synthetic_battery() {
    BatteryParams b;
    b.voc = {{0.0, 1.0}, {40.0, 52.0}};
    b.r0_ohm = 0.05;
    b.capacity_ah = 8.0;
    b.bias_current_a = 12.0;
    b.soc_min = 0.30;
    b.soc_max = 0.70;
    return b;
}

VehicleParams default_vehicle() { return VehicleParams{}; }

// ---------------------------------------------------------------------------
// CSV serialization
// ---------------------------------------------------------------------------

void write_maps_csv(const PowertrainMaps& m, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (int g = 1; g <= 6; ++g) {
        m.fuel_map[g - 1].to_csv(dir / ("fuel_gear" + std::to_string(g) + ".csv"),
                                 "omega_radps", "torque_nm");
        m.slip_map[g - 1].to_csv(dir / ("slip_gear" + std::to_string(g) + ".csv"),
                                 "omega_radps", "torque_nm");
    }
    m.bsg_eff.to_csv(dir / "bsg_eff.csv", "omega_radps", "torque_nm");
    m.trans_eff.to_csv(dir / "trans_eff.csv", "omega_radps", "torque_nm");
    m.eng_torque_min.to_csv(dir / "eng_torque_min.csv", "v_mps", "torque_nm");
    m.eng_torque_max.to_csv(dir / "eng_torque_max.csv", "v_mps", "torque_nm");
    m.bsg_torque_min.to_csv(dir / "bsg_torque_min.csv", "v_mps", "torque_nm");
    m.bsg_torque_max.to_csv(dir / "bsg_torque_max.csv", "v_mps", "torque_nm");
    Curve1D ratios;
    for (std::size_t i = 0; i < m.gear_ratios.size(); ++i) {
        ratios.x.push_back(static_cast<double>(i + 1));
        ratios.y.push_back(m.gear_ratios[i]);
    }
    ratios.to_csv(dir / "gear_ratios.csv", "gear", "ratio");
    Curve1D shifts;
    for (std::size_t i = 0; i < m.upshift_mps.size(); ++i) {
        shifts.x.push_back(static_cast<double>(i + 1));
        shifts.y.push_back(m.upshift_mps[i]);
    }
    shifts.to_csv(dir / "upshift.csv", "from_gear", "v_mps");
    std::ofstream sc(dir / "scalars.csv");
    sc.precision(12);
    sc << "param,value\n";
    sc << "omega_idle_radps," << m.omega_idle << "\n";
    sc << "omega_stall_radps," << m.omega_stall << "\n";
}

PowertrainMaps load_maps_csv(const std::filesystem::path& dir) {
    PowertrainMaps m;
    for (int g = 1; g <= 6; ++g) {
        m.fuel_map.push_back(Table2D::from_csv(dir / ("fuel_gear" + std::to_string(g) + ".csv")));
        m.slip_map.push_back(Table2D::from_csv(dir / ("slip_gear" + std::to_string(g) + ".csv")));
    }
    m.bsg_eff = Table2D::from_csv(dir / "bsg_eff.csv");
    m.trans_eff = Table2D::from_csv(dir / "trans_eff.csv");
    m.eng_torque_min = Curve1D::from_csv(dir / "eng_torque_min.csv");
    m.eng_torque_max = Curve1D::from_csv(dir / "eng_torque_max.csv");
    m.bsg_torque_min = Curve1D::from_csv(dir / "bsg_torque_min.csv");
    m.bsg_torque_max = Curve1D::from_csv(dir / "bsg_torque_max.csv");
    const Curve1D ratios = Curve1D::from_csv(dir / "gear_ratios.csv");
    m.gear_ratios = ratios.y;
    const Curve1D shifts = Curve1D::from_csv(dir / "upshift.csv");
    m.upshift_mps = shifts.y;
    std::ifstream sc(dir / "scalars.csv");
    if (!sc) throw std::runtime_error("cannot open " + (dir / "scalars.csv").string());
    std::string line;
    std::getline(sc, line);
    while (std::getline(sc, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        const std::string key = line.substr(0, comma);
        const double val = std::stod(line.substr(comma + 1));
        if (key == "omega_idle_radps") m.omega_idle = val;
        if (key == "omega_stall_radps") m.omega_stall = val;
    }
    return m;
}

}  // namespace ecodrive
