#include "ecodrive/rollout.hpp"

#include <algorithm>
#include <cmath>

namespace ecodrive {

namespace {

double layer_interp(const std::vector<double>& layer, const std::vector<double>& vel,
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

std::vector<std::uint8_t> admissible_mask(const StageModel& model, int pos,
                                          const OverrideMap& overrides) {
    auto mask = model.velocity_mask(pos);
    const auto it = overrides.find(pos);
    if (it == overrides.end()) return mask;
    const auto& o = it->second;
    const auto& vel = model.velocity_nodes();
    for (std::size_t iv = 1; iv < vel.size(); ++iv) {
        if (o.collapse)
            mask[iv] = 0;
        else if (vel[iv] > o.v_hi + 1e-9 || vel[iv] < o.v_lo - 1e-9)
            mask[iv] = 0;
    }
    return mask;  // creep node stays admissible: overrides only shrink
}

double top_admissible_speed(const StageModel& model, int pos, const OverrideMap& overrides) {
    const auto mask = admissible_mask(model, pos, overrides);
    const auto& vel = model.velocity_nodes();
    double top = vel.front();
    for (std::size_t iv = 0; iv < mask.size(); ++iv)
        if (mask[iv]) top = vel[iv];
    return top;
}

HorizonSolution solve_horizon(const StageModel& model, const ValueTable& vt, int start_pos,
                              int horizon, double v, double soc, const OverrideMap& overrides,
                              bool want_prediction) {
    const auto& vel = model.velocity_nodes();
    const auto& socs = model.soc_nodes();
    const std::size_t nv = vel.size(), ns = socs.size();
    const int nc = model.num_controls();
    const int end_pos = start_pos + horizon;  // terminal position of the truncated problem

    // Local cost-to-go layers for positions start_pos+1 .. end_pos.
    std::vector<std::vector<double>> layers(horizon);
    std::vector<double> clamp_hi(horizon);  // top admissible speed at each successor position

    // Terminal layer: the full-route value function, restricted to the
    // admissible set at end_pos.
    {
        auto mask = admissible_mask(model, end_pos, overrides);
        auto& lay = layers[horizon - 1];
        lay.assign(nv * ns, kInfCost);
        for (std::size_t iv = 0; iv < nv; ++iv) {
            if (!mask[iv]) continue;
            for (std::size_t is = 0; is < ns; ++is)
                lay[iv * ns + is] = vt.cost[end_pos - 1][iv * ns + is];
        }
        clamp_hi[horizon - 1] = top_admissible_speed(model, end_pos, overrides);
    }

    for (int pos = end_pos - 1; pos > start_pos; --pos) {
        const int li = pos - start_pos - 1;
        const auto mask = admissible_mask(model, pos, overrides);
        clamp_hi[li] = top_admissible_speed(model, pos, overrides);
        solve_layer(model, pos, mask, clamp_hi[li + 1], layers[li + 1], layers[li], nullptr);
    }

    const auto argmin_at = [&](int pos, double vq, double sq, const std::vector<double>& next,
                               double clamp) {
        struct Best {
            int c = -1;
            double j = kInfCost;
        } best;
        for (int c = 0; c < nc; ++c) {
            const auto tr = model.step(pos, vq, sq, c, clamp);
            if (!tr) continue;
            const double tail = layer_interp(next, vel, socs, tr->v_next, tr->soc_next);
            if (!std::isfinite(tail)) continue;
            const double j = tr->cost + tail;
            if (j < best.j) best = {c, j};
        }
        return best;
    };

    const auto root = argmin_at(start_pos, v, soc, layers[0], clamp_hi[0]);
    if (root.c < 0) {
        if (std::getenv("ECODRIVE_DEBUG")) {
            for (int li = 0; li < horizon; ++li) {
                int fin = 0;
                for (double x : layers[li])
                    if (std::isfinite(x)) ++fin;
                std::fprintf(stderr, "    layer %d (pos %d): finite=%d clamp=%.2f\n", li,
                             start_pos + 1 + li, fin, clamp_hi[li]);
            }
        }
        throw HorizonInfeasible(start_pos, "no admissible control at position " +
                                               std::to_string(start_pos));
    }

    HorizonSolution sol;
    sol.control = root.c;
    sol.cost = root.j;
    if (want_prediction) {
        double pv = v, ps = soc;
        int c = root.c;
        for (int j = 0; j < horizon; ++j) {
            const auto tr = model.step(start_pos + j, pv, ps, c, clamp_hi[j]);
            if (!tr) break;
            pv = tr->v_next;
            ps = tr->soc_next;
            sol.v_pred.push_back(pv);
            sol.soc_pred.push_back(ps);
            if (j + 1 < horizon) {
                const auto nxt =
                    argmin_at(start_pos + j + 1, pv, ps, layers[j + 1], clamp_hi[j + 1]);
                if (nxt.c < 0) break;
                c = nxt.c;
            }
        }
    }
    return sol;
}

PassInGreen pass_in_green_feasible(double v_now, double dist_m,
                                   const std::vector<std::pair<double, double>>& windows,
                                   double v_min, double v_max, double a_min, double a_max) {
    PassInGreen out;
    const double a_up = std::abs(a_max);
    const double a_dn = std::abs(a_min);

    double t_early;
    if (v_now >= v_max) {
        t_early = dist_m / v_max;
    } else {
        const double d_acc = (v_max * v_max - v_now * v_now) / (2.0 * a_up);
        if (d_acc >= dist_m)
            t_early = (-v_now + std::sqrt(v_now * v_now + 2.0 * a_up * dist_m)) / a_up;
        else
            t_early = (v_max - v_now) / a_up + (dist_m - d_acc) / v_max;
    }

    double t_late;
    if (v_now <= v_min) {
        t_late = dist_m / v_min;
    } else {
        const double d_dec = (v_now * v_now - v_min * v_min) / (2.0 * a_dn);
        if (d_dec >= dist_m)
            t_late = (v_now - std::sqrt(std::max(0.0, v_now * v_now - 2.0 * a_dn * dist_m))) /
                     a_dn;
        else
            t_late = (v_now - v_min) / a_dn + (dist_m - d_dec) / v_min;
    }

    out.t_early = t_early;
    out.t_late = t_late;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (windows[i].second >= t_early && windows[i].first <= t_late) {
            out.feasible = true;
            out.window = static_cast<int>(i);
            break;
        }
    }
    return out;
}

EcoAndDirective eco_and_offsets(const SignalState& state, double v_now, double dist_m,
                                const std::vector<std::pair<double, double>>& windows,
                                double v_min, double v_max, double a_min, double a_max) {
    EcoAndDirective d;
    if (state.phase == Phase::Green && v_now > 1e-6 &&
        dist_m / v_now <= state.time_remaining_s) {
        d.feasible = true;  // passing already, leave the limits alone
        return d;
    }
    const auto pig = pass_in_green_feasible(v_now, dist_m, windows, v_min, v_max, a_min, a_max);
    if (!pig.feasible) {
        d.treat_as_stop = true;
        return d;
    }
    d.feasible = true;
    // Shape the limits so that any cruise speed inside them arrives within the
    // earliest reachable window. The bounds come from the window *edges*: a cap
    // at dist/t_open (no earlier arrival than the green onset) and a floor at
    // dist/t_close (no later than its end). Targeting an interior point would
    // flip the directive between re-solves and induce a limit cycle.
    for (const auto& w : windows) {
        if (w.second < pig.t_early || w.first > pig.t_late) continue;  // unreachable
        const double t_open = std::max(w.first, pig.t_early);
        const double t_close = std::min(w.second, pig.t_late);
        const double v_hi = t_open <= 1e-6 ? v_max : std::min(v_max, dist_m / t_open);
        const double v_lo = std::max(v_min, dist_m / t_close);
        if (v_lo > v_hi + 1e-9) continue;  // speed band collapsed: next window
        d.v_off_max = std::max(0.0, v_max - v_hi);
        d.v_off_min = std::max(0.0, v_lo - v_min);
        return d;
    }
    d.treat_as_stop = true;  // feasibility was marginal: no usable speed band
    d.feasible = false;
    return d;
}

EcoAndDirective los_constraints(const SignalState& state, double dist_m, double los_range_m) {
    EcoAndDirective d;
    if (dist_m > los_range_m || state.phase != Phase::Green) {
        d.treat_as_stop = true;
        return d;
    }
    d.feasible = true;
    return d;
}

std::vector<double> shape_constraints(double v_now, double target_limit, double dd_m,
                                      double a_min, int n_stages) {
    std::vector<double> out;
    out.reserve(n_stages);
    const double a = std::abs(a_min);
    double v2 = v_now * v_now;
    for (int i = 0; i < n_stages; ++i) {
        v2 = std::max(target_limit * target_limit, v2 - 2.0 * a * dd_m);
        out.push_back(std::sqrt(v2));
    }
    return out;
}

}  // namespace ecodrive
