#include "ecodrive/maps.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ecodrive {

namespace {

std::size_t lower_cell(const std::vector<double>& axis, double q) {
    // Index of the cell [axis[i], axis[i+1]] containing q, clamped to the edges.
    if (q <= axis.front()) return 0;
    if (q >= axis.back()) return axis.size() - 2;
    auto it = std::upper_bound(axis.begin(), axis.end(), q);
    return static_cast<std::size_t>(it - axis.begin()) - 1;
}

double lerp_frac(const std::vector<double>& axis, std::size_t i, double q) {
    const double lo = axis[i], hi = axis[i + 1];
    double f = (q - lo) / (hi - lo);
    return std::clamp(f, 0.0, 1.0);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

}  // namespace

double Curve1D::operator()(double xq) const {
    if (x.size() == 1) return y.front();
    const std::size_t i = lower_cell(x, xq);
    const double f = lerp_frac(x, i, xq);
    return y[i] + f * (y[i + 1] - y[i]);
}

Curve1D Curve1D::from_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open curve file: " + file.string());
    Curve1D c;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 2)
            throw std::runtime_error("malformed curve row in " + file.string());
        c.x.push_back(std::strtod(cells[0].c_str(), nullptr));
        c.y.push_back(std::strtod(cells[1].c_str(), nullptr));
    }
    if (c.x.size() < 1) throw std::runtime_error("empty curve file: " + file.string());
    for (std::size_t i = 1; i < c.x.size(); ++i)
        if (c.x[i] <= c.x[i - 1])
            throw std::runtime_error("curve breakpoints not increasing: " + file.string());
    return c;
}

void Curve1D::to_csv(const std::filesystem::path& file, const std::string& x_name,
                     const std::string& y_name) const {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write curve file: " + file.string());
    out.precision(12);
    out << x_name << "," << y_name << "\n";
    for (std::size_t i = 0; i < x.size(); ++i) out << x[i] << "," << y[i] << "\n";
}

double Table2D::at(double xq, double yq) const {
    if (x.size() == 1 && y.size() == 1) return v.front();
    if (x.size() == 1) {
        const std::size_t j = lower_cell(y, yq);
        const double fy = lerp_frac(y, j, yq);
        return value(0, j) * (1 - fy) + value(0, j + 1) * fy;
    }
    if (y.size() == 1) {
        const std::size_t i = lower_cell(x, xq);
        const double fx = lerp_frac(x, i, xq);
        return value(i, 0) * (1 - fx) + value(i + 1, 0) * fx;
    }
    const std::size_t i = lower_cell(x, xq);
    const std::size_t j = lower_cell(y, yq);
    const double fx = lerp_frac(x, i, xq);
    const double fy = lerp_frac(y, j, yq);
    return value(i, j) * (1 - fx) * (1 - fy) + value(i + 1, j) * fx * (1 - fy) +
           value(i, j + 1) * (1 - fx) * fy + value(i + 1, j + 1) * fx * fy;
}

bool Table2D::in_hull(double xq, double yq) const {
    return xq >= x.front() && xq <= x.back() && yq >= y.front() && yq <= y.back();
}

Table2D Table2D::from_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open table file: " + file.string());
    Table2D t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty table file: " + file.string());
    auto header = split_csv_line(line);
    for (std::size_t j = 1; j < header.size(); ++j)
        t.y.push_back(std::strtod(header[j].c_str(), nullptr));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.y.size() + 1)
            throw std::runtime_error("ragged table row in " + file.string());
        t.x.push_back(std::strtod(cells[0].c_str(), nullptr));
        for (std::size_t j = 1; j < cells.size(); ++j)
            t.v.push_back(std::strtod(cells[j].c_str(), nullptr));
    }
    if (t.x.empty() || t.y.empty())
        throw std::runtime_error("table has no grid: " + file.string());
    return t;
}

void Table2D::to_csv(const std::filesystem::path& file, const std::string& x_name,
                     const std::string& y_name) const {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write table file: " + file.string());
    out.precision(12);
    out << x_name << "\\" << y_name;
    for (double yy : y) out << "," << yy;
    out << "\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
        out << x[i];
        for (std::size_t j = 0; j < y.size(); ++j) out << "," << value(i, j);
        out << "\n";
    }
}

}  // namespace ecodrive
