#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ecodrive {

/// Piecewise-linear curve y(x) with clamped-edge evaluation outside [x.front, x.back].
/// Breakpoints must be strictly increasing.
struct Curve1D {
    std::vector<double> x;
    std::vector<double> y;

    double operator()(double xq) const;

    static Curve1D from_csv(const std::filesystem::path& file);
    void to_csv(const std::filesystem::path& file, const std::string& x_name,
                const std::string& y_name) const;
};

/// Rectilinear 2-D table with bilinear interpolation. Values stored row-major
/// over the x axis: value(ix, iy) = v[ix * y.size() + iy].
/// Queries outside the grid evaluate at the clamped edge; `clamped()` reports
/// whether the last query location lay outside the hull.
struct Table2D {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> v;

    double at(double xq, double yq) const;
    bool in_hull(double xq, double yq) const;
    double value(std::size_t ix, std::size_t iy) const { return v[ix * y.size() + iy]; }

    static Table2D from_csv(const std::filesystem::path& file);
    void to_csv(const std::filesystem::path& file, const std::string& x_name,
                const std::string& y_name) const;
};

}  // namespace ecodrive
