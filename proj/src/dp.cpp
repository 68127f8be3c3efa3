#include "ecodrive/dp.hpp"

#include <algorithm>
#include <cmath>

namespace ecodrive {

double stage_cost(double fuel_rate_kgps, double t_s, const CostWeights& w) {
    return (w.gamma * fuel_rate_kgps / w.mdot_norm_kgps + (1.0 - w.gamma)) * t_s;
}

namespace {

constexpr double kWeightSnap = 1e-9;

std::size_t lower_cell(const std::vector<double>& axis, double q) {
    if (q <= axis.front()) return 0;
    if (q >= axis.back()) return axis.size() - 2;
    auto it = std::upper_bound(axis.begin(), axis.end(), q);
    return static_cast<std::size_t>(it - axis.begin()) - 1;
}

double axis_frac(const std::vector<double>& axis, std::size_t i, double q) {
    double f = (q - axis[i]) / (axis[i + 1] - axis[i]);
    f = std::clamp(f, 0.0, 1.0);
    if (f < kWeightSnap) f = 0.0;
    if (f > 1.0 - kWeightSnap) f = 1.0;
    return f;
}

}  // namespace

CellWeights cell_weights(const std::vector<double>& xs, const std::vector<double>& ys, double x,
                         double y) {
    CellWeights w{};
    const double tol_x = kWeightSnap * (xs.back() - xs.front() + 1.0);
    const double tol_y = kWeightSnap * (ys.back() - ys.front() + 1.0);
    w.inside = x >= xs.front() - tol_x && x <= xs.back() + tol_x && y >= ys.front() - tol_y &&
               y <= ys.back() + tol_y;
    if (xs.size() == 1) {
        w.i0 = w.i1 = 0;
    } else {
        w.i0 = lower_cell(xs, x);
        w.i1 = w.i0 + 1;
    }
    if (ys.size() == 1) {
        w.j0 = w.j1 = 0;
    } else {
        w.j0 = lower_cell(ys, y);
        w.j1 = w.j0 + 1;
    }
    const double fx = (xs.size() == 1) ? 0.0 : axis_frac(xs, w.i0, x);
    const double fy = (ys.size() == 1) ? 0.0 : axis_frac(ys, w.j0, y);
    w.w00 = (1 - fx) * (1 - fy);
    w.w01 = (1 - fx) * fy;
    w.w10 = fx * (1 - fy);
    w.w11 = fx * fy;
    return w;
}

double ValueTable::value_interp(int pos, double v, double soc) const {
    const auto& tab = cost[pos - 1];
    const CellWeights w = cell_weights(vel_nodes, soc_nodes, v, soc);
    if (!w.inside) return kInfCost;
    const std::size_t ns = soc_nodes.size();
    double acc = 0.0;
    // Corners with vanishing weight do not support the query; an infeasible
    // corner with positive weight makes the whole query infeasible.
    const auto add = [&](std::size_t iv, std::size_t isoc, double weight) -> bool {
        if (weight <= 0.0) return true;
        const double c = tab[iv * ns + isoc];
        if (!std::isfinite(c)) return false;
        acc += weight * c;
        return true;
    };
    if (!add(w.i0, w.j0, w.w00) || !add(w.i0, w.j1, w.w01) || !add(w.i1, w.j0, w.w10) ||
        !add(w.i1, w.j1, w.w11))
        return kInfCost;
    return acc;
}

double ValueTable::query(int pos, double v, double soc) const {
    if (pos < 1 || pos > stages + 1)
        throw GridBounds("position " + std::to_string(pos) + " outside value table");
    if (v < vel_nodes.front() || v > vel_nodes.back() || soc < soc_nodes.front() ||
        soc > soc_nodes.back())
        throw GridBounds("query (" + std::to_string(v) + ", " + std::to_string(soc) +
                         ") outside grid hull");
    return value_interp(pos, v, soc);
}

namespace {

double interp_layer(const std::vector<double>& layer, const std::vector<double>& vel,
                    const std::vector<double>& soc, double vq, double sq) {
    const CellWeights w = cell_weights(vel, soc, vq, sq);
    if (!w.inside) return kInfCost;
    const std::size_t ns = soc.size();
    double acc = 0.0;
    const auto add = [&](std::size_t i, std::size_t j, double weight) -> bool {
        if (weight <= 0.0) return true;
        const double c = layer[i * ns + j];
        if (!std::isfinite(c)) return false;
        acc += weight * c;
        return true;
    };
    if (!add(w.i0, w.j0, w.w00) || !add(w.i0, w.j1, w.w01) || !add(w.i1, w.j0, w.w10) ||
        !add(w.i1, w.j1, w.w11))
        return kInfCost;
    return acc;
}

}  // namespace

bool solve_layer(const StageModel& model, int s, const std::vector<std::uint8_t>& mask,
                 double clamp_hi, const std::vector<double>& next_layer,
                 std::vector<double>& cost_out, std::vector<std::int32_t>* policy_out) {
    const auto& vel = model.velocity_nodes();
    const auto& soc = model.soc_nodes();
    const std::size_t nv = vel.size(), ns = soc.size();
    const int nc = model.num_controls();
    cost_out.assign(nv * ns, kInfCost);
    if (policy_out) policy_out->assign(nv * ns, -1);
    bool any = false;

    if (model.has_kernel()) {
        const double tol_v = kWeightSnap * (vel.back() - vel.front() + 1.0);
        const double soc_lo = soc.front() - 1e-12, soc_hi = soc.back() + 1e-12;
        for (std::size_t iv = 0; iv < nv; ++iv) {
            if (!mask[iv]) continue;
            double* best = &cost_out[iv * ns];
            std::int32_t* bc = policy_out ? &(*policy_out)[iv * ns] : nullptr;
            for (int c = 0; c < nc; ++c) {
                const auto k = model.step_kernel(s, static_cast<int>(iv), c, clamp_hi);
                if (!k) continue;
                if (k->v_next < vel.front() - tol_v || k->v_next > vel.back() + tol_v)
                    continue;
                std::size_t i0, i1;
                double fv;
                if (nv == 1) {
                    i0 = i1 = 0;
                    fv = 0.0;
                } else {
                    i0 = lower_cell(vel, k->v_next);
                    i1 = i0 + 1;
                    fv = axis_frac(vel, i0, k->v_next);
                }
                const double* r0 = &next_layer[i0 * ns];
                const double* r1 = &next_layer[i1 * ns];
                for (std::size_t is = 0; is < ns; ++is) {
                    const double rate = model.soc_rate(static_cast<int>(iv), c,
                                                       static_cast<int>(is));
                    if (std::isnan(rate)) continue;
                    const double sq = soc[is] - k->travel_s * rate;
                    if (sq < soc_lo || sq > soc_hi) continue;
                    std::size_t j0, j1;
                    double fs;
                    if (ns == 1) {
                        j0 = j1 = 0;
                        fs = 0.0;
                    } else {
                        j0 = lower_cell(soc, sq);
                        j1 = j0 + 1;
                        fs = axis_frac(soc, j0, sq);
                    }
                    const double w00 = (1 - fv) * (1 - fs), w01 = (1 - fv) * fs;
                    const double w10 = fv * (1 - fs), w11 = fv * fs;
                    double tail = 0.0;
                    bool ok = true;
                    const auto add = [&](double weight, double cval) {
                        if (weight <= 0.0) return;
                        if (!std::isfinite(cval))
                            ok = false;
                        else
                            tail += weight * cval;
                    };
                    add(w00, r0[j0]);
                    add(w01, r0[j1]);
                    add(w10, r1[j0]);
                    add(w11, r1[j1]);
                    if (!ok) continue;
                    const double j = k->cost + tail;
                    if (j < best[is]) {
                        best[is] = j;
                        if (bc) bc[is] = c;
                        any = true;
                    }
                }
            }
        }
        return any;
    }

    for (std::size_t iv = 0; iv < nv; ++iv) {
        if (!mask[iv]) continue;
        for (std::size_t is = 0; is < ns; ++is) {
            double best = kInfCost;
            std::int32_t best_c = -1;
            for (int c = 0; c < nc; ++c) {
                const auto tr = model.step(s, vel[iv], soc[is], c, clamp_hi);
                if (!tr) continue;
                const double tail = interp_layer(next_layer, vel, soc, tr->v_next,
                                                 tr->soc_next);
                if (!std::isfinite(tail)) continue;
                const double j = tr->cost + tail;
                if (j < best) {  // ties keep the lowest control index
                    best = j;
                    best_c = c;
                }
            }
            cost_out[iv * ns + is] = best;
            if (policy_out) (*policy_out)[iv * ns + is] = best_c;
            if (best_c >= 0) any = true;
        }
    }
    return any;
}

DpResult solve_dp(const StageModel& model, const DpOptions& opt) {
    const int n = model.num_stages();
    const auto& vel = model.velocity_nodes();
    const auto& soc = model.soc_nodes();
    const std::size_t nv = vel.size();
    const std::size_t ns = soc.size();

    DpResult res;
    ValueTable& vt = res.table;
    vt.vel_nodes = vel;
    vt.soc_nodes = soc;
    vt.stages = n;
    vt.cost.assign(n + 1, std::vector<double>(nv * ns, kInfCost));
    vt.policy.assign(n, std::vector<std::int32_t>(nv * ns, -1));

    // Terminal layer.
    const auto terminal_mask = model.velocity_mask(n + 1);
    for (std::size_t iv = 0; iv < nv; ++iv) {
        if (!terminal_mask[iv]) continue;
        for (std::size_t is = 0; is < ns; ++is) {
            double c;
            if (opt.terminal_cost) {
                c = opt.terminal_cost(vel[iv], soc[is]);
            } else {
                c = (std::abs(soc[is] - opt.terminal_soc_target) <=
                     opt.terminal_soc_band + 1e-12)
                        ? 0.0
                        : kInfCost;
            }
            vt.cost[n][vt.node_index(iv, is)] = c;
        }
    }

    auto next_mask = terminal_mask;
    for (int s = n; s >= 1; --s) {
        const auto mask = model.velocity_mask(s);
        // Brake slack clamps to the top admissible node of the next position.
        double clamp_hi = -1.0;
        for (std::size_t iv = 0; iv < nv; ++iv)
            if (next_mask[iv]) clamp_hi = vel[iv];
        if (clamp_hi < 0.0) {
            if (!res.empty_stage) res.empty_stage = s;
            next_mask = mask;
            continue;
        }
        const bool any_feasible =
            solve_layer(model, s, mask, clamp_hi, vt.cost[s], vt.cost[s - 1],
                        &vt.policy[s - 1]);
        if (!any_feasible && !res.empty_stage) res.empty_stage = s;
        next_mask = mask;
    }
    return res;
}

}  // namespace ecodrive
