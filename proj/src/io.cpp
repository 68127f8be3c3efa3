#include "ecodrive/io.hpp"

#include <fstream>
#include <json.hpp>

namespace ecodrive {

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t hash_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read " + file.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

std::uint64_t hash_string(const std::string& s) { return fnv1a64(s.data(), s.size()); }

namespace {

constexpr std::uint32_t kMagic = 0x45435654;  // "ECVT"
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void get(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw IoError("truncated value-table file");
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
    put(out, static_cast<std::uint64_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& in) {
    std::uint64_t n = 0;
    get(in, n);
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw IoError("truncated value-table file");
    return v;
}

}  // namespace

void save_value_table(const ValueTable& vt, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    put(out, kMagic);
    put(out, kVersion);
    put(out, vt.route_hash);
    put(out, vt.config_hash);
    put(out, static_cast<std::int32_t>(vt.stages));
    put_doubles(out, vt.vel_nodes);
    put_doubles(out, vt.soc_nodes);
    for (const auto& layer : vt.cost) put_doubles(out, layer);
    put(out, static_cast<std::uint64_t>(vt.policy.size()));
    for (const auto& pol : vt.policy) {
        put(out, static_cast<std::uint64_t>(pol.size()));
        out.write(reinterpret_cast<const char*>(pol.data()),
                  static_cast<std::streamsize>(pol.size() * sizeof(std::int32_t)));
    }
    if (!out) throw IoError("failed writing " + file.string());
}

ValueTable load_value_table(const std::filesystem::path& file, std::uint64_t expect_route_hash,
                            std::uint64_t expect_config_hash) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read " + file.string());
    std::uint32_t magic = 0, version = 0;
    get(in, magic);
    get(in, version);
    if (magic != kMagic || version != kVersion)
        throw IoError(file.string() + " is not a value-table artifact");
    ValueTable vt;
    get(in, vt.route_hash);
    get(in, vt.config_hash);
    if (expect_route_hash != 0 && vt.route_hash != expect_route_hash)
        throw IoError("value table was built for a different route (hash mismatch)");
    if (expect_config_hash != 0 && vt.config_hash != expect_config_hash)
        throw IoError("value table was built under a different configuration (hash mismatch)");
    std::int32_t stages = 0;
    get(in, stages);
    vt.stages = stages;
    vt.vel_nodes = get_doubles(in);
    vt.soc_nodes = get_doubles(in);
    vt.cost.resize(stages + 1);
    for (auto& layer : vt.cost) layer = get_doubles(in);
    std::uint64_t npol = 0;
    get(in, npol);
    vt.policy.resize(npol);
    for (auto& pol : vt.policy) {
        std::uint64_t n = 0;
        get(in, n);
        pol.resize(n);
        in.read(reinterpret_cast<char*>(pol.data()),
                static_cast<std::streamsize>(n * sizeof(std::int32_t)));
        if (!in) throw IoError("truncated value-table file");
    }
    return vt;
}

void write_results_csv(const std::vector<MonteCarloRow>& rows, const CostWeights& w,
                       const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << "seed,mode,gamma,fuel_g,time_s,soc_terminal,cost,ok\n";
    for (const auto& r : rows)
        out << r.seed << ',' << mode_name(r.mode) << ',' << w.gamma << ','
            << r.fuel_kg * 1000.0 << ',' << r.time_s << ',' << r.soc_terminal << ',' << r.cost
            << ',' << (r.ok ? 1 : 0) << '\n';
}

void write_trajectory_csv(const RunRecord& r, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << "d_m,t_s,v_mps,soc,t_eng_nm,t_bsg_nm,brake_n,fuel_g\n";
    for (std::size_t i = 0; i < r.d_m.size(); ++i)
        out << r.d_m[i] << ',' << r.t_s[i] << ',' << r.v_mps[i] << ',' << r.soc[i] << ','
            << r.t_eng_nm[i] << ',' << r.t_bsg_nm[i] << ',' << r.brake_n[i] << ','
            << r.fuel_cum_kg[i] * 1000.0 << '\n';
}

void write_summary_json(const MonteCarloSummary& s, const std::filesystem::path& file) {
    nlohmann::json j;
    j["runs"] = s.rows.size();
    for (const auto& [mode, st] : s.fuel) {
        auto& m = j["modes"][mode_name(mode)];
        m["n"] = st.n;
        m["fuel_g_mean"] = st.mean * 1000.0;
        m["fuel_g_sd"] = st.sd * 1000.0;
    }
    for (const auto& [mode, st] : s.time) {
        auto& m = j["modes"][mode_name(mode)];
        m["time_s_mean"] = st.mean;
        m["time_s_sd"] = st.sd;
    }
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << j.dump(2) << '\n';
}

void write_pareto_csv(const std::vector<ParetoRow>& rows, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << "gamma,fuel_g,time_s\n";
    for (const auto& r : rows)
        out << r.gamma << ',' << r.fuel_kg * 1000.0 << ',' << r.time_s << '\n';
}

}  // namespace ecodrive
