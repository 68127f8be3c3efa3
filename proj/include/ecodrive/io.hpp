#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecodrive/dp.hpp"
#include "ecodrive/sim.hpp"

namespace ecodrive {

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// FNV-1a 64-bit over a byte string / a file's contents.
std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t seed = 1469598103934665603ull);
std::uint64_t hash_file(const std::filesystem::path& file);
std::uint64_t hash_string(const std::string& s);

/// Binary value-table artifact. Carries the route and solver-config hashes it
/// was produced under; loading verifies them when expectations are supplied.
void save_value_table(const ValueTable& vt, const std::filesystem::path& file);
ValueTable load_value_table(const std::filesystem::path& file,
                            std::uint64_t expect_route_hash = 0,
                            std::uint64_t expect_config_hash = 0);

/// Per-run result rows, one line per (seed, mode) pair. Fuel in grams.
void write_results_csv(const std::vector<MonteCarloRow>& rows, const CostWeights& w,
                       const std::filesystem::path& file);

/// Per-step trajectory trace of a single run.
void write_trajectory_csv(const RunRecord& r, const std::filesystem::path& file);

/// Aggregate summary (per-mode means/sds, grams and seconds) as JSON.
void write_summary_json(const MonteCarloSummary& s, const std::filesystem::path& file);

void write_pareto_csv(const std::vector<ParetoRow>& rows, const std::filesystem::path& file);

}  // namespace ecodrive
