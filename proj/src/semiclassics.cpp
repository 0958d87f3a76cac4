#include "semiclassics.hpp"

#include <algorithm>

namespace ablscar {

ActionData action_and_flux(const PeriodicOrbit& orbit, const FocalCensus& census) {
    if (orbit.closure_error > 1e-6 * orbit.params.d)
        throw InputError("action_and_flux: orbit is not closed");
    ActionData out;
    out.loop_action = orbit.kinetic_action;
    out.flux = orbit.flux;
    out.alpha = census.alpha();
    return out;
}

namespace {

double quantize_rhs(const SystemParams& params, const FamilySample& f, int n, double eta, int m,
                    bool stable, bool wall_phase) {
    double rhs = 2.0 * kPi * n;
    if (stable) {
        rhs += (m + 0.5) * f.floquet_phi;
    } else {
        rhs += eta * f.lambda + 0.5 * kPi * f.alpha;
    }
    if (wall_phase) rhs += kPi * f.n_wall_bounces;
    return params.hbar * rhs;
}

QuantizedEnergy quantize_impl(int n, double eta, int m, bool stable, const SystemParams& params,
                              const FamilyProvider& family, const QuantizeSettings& qs) {
    auto F = [&](double E, FamilySample& smp) {
        smp = family(E);
        return smp.action_plus_flux -
               quantize_rhs(params, smp, n, eta, m, stable, qs.include_wall_phase);
    };

    FamilySample s_lo, s_hi;
    double f_lo = F(qs.E_lo, s_lo);
    double f_hi = F(qs.E_hi, s_hi);
    if (s_lo.alpha != s_hi.alpha)
        throw NumericError("quantize: focal count changed across the energy bracket "
                           "(orbit bifurcation?)");
    if (f_lo == 0.0) return {qs.E_lo, 0.0, s_lo};
    if (f_hi == 0.0) return {qs.E_hi, 0.0, s_hi};
    if (f_lo * f_hi > 0.0) throw NumericError("quantize: no root in the energy bracket");
    // verify monotonicity on a coarse sample (loop action grows with E)
    {
        FamilySample st;
        const double fm = F(0.5 * (qs.E_lo + qs.E_hi), st);
        if (!(f_lo < fm && fm < f_hi) && !(f_lo > fm && fm > f_hi))
            throw NumericError("quantize: F(E) is not monotone over the bracket");
    }

    double a = qs.E_lo, b = qs.E_hi, fa = f_lo, fb = f_hi;
    FamilySample s_root = s_lo;
    double root = a, f_root = fa;
    for (int it = 0; it < qs.max_iter; ++it) {
        double mid;
        if (it % 2 == 0 && fb != fa) {
            mid = b - fb * (b - a) / (fb - fa);
            if (!(mid > std::min(a, b) && mid < std::max(a, b))) mid = 0.5 * (a + b);
        } else {
            mid = 0.5 * (a + b);
        }
        FamilySample sm;
        const double fm = F(mid, sm);
        root = mid;
        f_root = fm;
        s_root = sm;
        if (std::abs(fm) < qs.F_tol * params.hbar) break;
        if (fa * fm <= 0.0) {
            b = mid;
            fb = fm;
        } else {
            a = mid;
            fa = fm;
        }
        if (std::abs(b - a) < 1e-14 * std::max(1.0, std::abs(a))) break;
    }
    if (s_root.alpha != s_lo.alpha)
        throw NumericError("quantize: focal count changed inside the bracket");
    return {root, f_root / params.hbar, s_root};
}

}  // namespace

QuantizedEnergy quantize_unstable(int n, double eta, const SystemParams& params,
                                  const FamilyProvider& family, const QuantizeSettings& qs) {
    return quantize_impl(n, eta, 0, false, params, family, qs);
}

QuantizedEnergy quantize_stable(int n, int m, const SystemParams& params,
                                const FamilyProvider& family, const QuantizeSettings& qs) {
    return quantize_impl(n, 0.0, m, true, params, family, qs);
}

FamilyProvider bell_orbit_family(const SystemParams& params, const Potential& pot,
                                 const ShootingSettings& shoot) {
    return [&params, &pot, shoot](double E) {
        const PeriodicOrbit orbit = find_bell_orbit(E, params, pot, shoot);
        const MonodromyData mono = monodromy_classify(orbit);
        FamilySample smp;
        smp.action_plus_flux = orbit.kinetic_action + orbit.flux;
        smp.n_wall_bounces = static_cast<int>(orbit.bounces.size());
        if (mono.classification == OrbitStability::unstable) {
            smp.lambda = mono.lambda;
            const FloquetData fl = periodic_solutions(orbit, mono);
            smp.alpha = fl.census.alpha();
        } else if (mono.classification == OrbitStability::stable) {
            smp.floquet_phi = mono.floquet_phi;
        }
        return smp;
    };
}

// ---------------------------------------------------------------------------

bool ScarBasis::masked(std::size_t arc, double s) const {
    for (const auto& fp : floquet.census.points) {
        if (fp.arc_index == arc && std::abs(fp.s - s) < focal_mask) return true;
    }
    return false;
}

int ScarBasis::focal_crossings_before(std::size_t arc, double s) const {
    int count = 0;
    for (const auto& fp : floquet.census.points) {
        if (fp.arc_index < arc || (fp.arc_index == arc && fp.s < s)) ++count;
    }
    return count;
}

namespace {

struct LocalVariation {
    cplx z, p, zb, pb;
    double a;
};

LocalVariation local_variation(const ScarBasis& basis, std::size_t arc, double s) {
    const PeriodicOrbit& orbit = *basis.orbit;
    LocalVariation lv;
    lv.z = basis.floquet.grow.z_at(orbit, arc, s);
    lv.p = basis.floquet.grow.p_at(orbit, arc, s);
    lv.zb = basis.floquet.decay.z_at(orbit, arc, s);
    lv.pb = basis.floquet.decay.p_at(orbit, arc, s);
    lv.a = orbit.arcs[arc].interp(orbit.arcs[arc].a, s);
    return lv;
}

}  // namespace

cplx separatrix_mode(const ScarBasis& basis, std::size_t arc, double s, double nu,
                     const SpecFunConfig& sf) {
    if (basis.masked(arc, s))
        throw NumericError("separatrix_mode: inside a focal regularization zone");
    const LocalVariation lv = local_variation(basis, arc, s);
    const double zz = (lv.z * lv.zb).real();
    const double azz = std::abs(zz);
    const double w = std::abs(basis.floquet.wronskian);
    const double gg = (lv.p / lv.z + lv.pb / lv.zb).real();  // Gamma + Gammabar (real)

    const double x_arg = w * nu * nu / (4.0 * azz);
    double kernel;
    if (x_arg < 1e-10) {
        // sqrt|nu| J_{-1/4}(c nu^2) -> (c/2)^{-1/4} / Gamma(3/4) as nu -> 0
        const double c = w / (4.0 * azz);
        kernel = std::pow(0.5 * c, -0.25) / 1.2254167024651776;  // Gamma(3/4)
    } else {
        kernel = std::sqrt(std::abs(nu)) * bessel_j(-0.25, x_arg, sf);
    }
    const cplx quad_phase = std::exp(cplx(0.0, 0.25 * gg * nu * nu));
    // each simple zero of z zbar carries the z^{-1/4} branch: phase -pi/4
    const int crossings = basis.focal_crossings_before(arc, s);
    const cplx maslov = std::exp(cplx(0.0, -0.25 * kPi * crossings));
    return (1.0 / std::sqrt(lv.a * std::sqrt(azz))) * kernel * quad_phase * maslov;
}

cplx abl_mode(const ScarBasis& basis, std::size_t arc, double s, double nu, cplx xi,
              const SpecFunConfig& sf) {
    if (basis.masked(arc, s)) throw NumericError("abl_mode: inside a focal regularization zone");
    const PeriodicOrbit& orbit = *basis.orbit;
    const LocalVariation lv = local_variation(basis, arc, s);
    const cplx w = basis.floquet.wronskian;

    // continuity-tracked logs of z and zbar: principal at the orbit start,
    // phase decreased by pi at each real zero crossing
    auto tracked_log = [&](const VariationSolution& sol, cplx value) {
        // walk the nodes up to (arc, s) accumulating phase increments
        cplx prev = sol.z_node(orbit, 0, 0);
        double theta = std::arg(prev);
        for (std::size_t k = 0; k <= arc; ++k) {
            const Arc& A = orbit.arcs[k];
            const std::size_t i_end = (k == arc) ? A.bracket_index(s) + 1 : A.s.size();
            for (std::size_t i = (k == 0) ? 1 : 0; i < i_end; ++i) {
                const cplx cur = sol.z_node(orbit, k, i);
                double dth = std::arg(cur / prev);
                if (dth > kPi - 1e-9) dth -= 2.0 * kPi;  // descend at real zeros
                theta += dth;
                prev = cur;
            }
        }
        double dth = std::arg(value / prev);
        if (dth > kPi - 1e-9) dth -= 2.0 * kPi;
        theta += dth;
        return cplx(std::log(std::abs(value)), theta);
    };

    const cplx log_z = tracked_log(basis.floquet.grow, lv.z);
    const cplx log_zb = tracked_log(basis.floquet.decay, lv.zb);

    const cplx gamma_sum = lv.p / lv.z + lv.pb / lv.zb;
    const cplx quad_phase = std::exp(cplx(0.0, 1.0) * 0.25 * gamma_sum * nu * nu);
    // sqrt(w / (i z zbar)) nu with the tracked branch
    const cplx log_arg = std::log(w) - cplx(0.0, 0.5 * kPi) - log_z - log_zb;
    const cplx root = std::exp(0.5 * log_arg);
    const cplx D = parabolic_cylinder_d(xi, root * nu, sf);
    const cplx pref = std::exp(-0.5 * (std::log(lv.a) + log_z)) *
                      std::exp(0.5 * xi * (log_zb - log_z));
    return pref * quad_phase * D;
}

// ---------------------------------------------------------------------------

cplx ABLState::mode(std::size_t arc, double s, double nu) const {
    if (config.use_separatrix) return separatrix_mode(basis, arc, s, nu);
    return abl_mode(basis, arc, s, nu, config.xi);
}

double ABLState::layer_halfwidth() const { return std::sqrt(params.hbar) * config.nu_max; }

namespace {

double taper(double u, double frac) {
    const double edge = 1.0 - frac;
    if (u <= edge) return 1.0;
    if (u >= 1.0) return 0.0;
    const double c = std::cos(0.5 * kPi * (u - edge) / frac);
    return c * c;
}

struct Projection {
    double s = 0.0;
    double n = 0.0;
    bool ok = false;
};

Projection project_to_arc(const Arc& arc, const Vec2& P, double reach) {
    // coarse scan with stride, then Newton refinement on (P - r(s)).t(s) = 0
    const std::size_t N = arc.s.size();
    const std::size_t stride = std::max<std::size_t>(1, N / 512);
    double best_d2 = 1e300;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < N; i += stride) {
        const double d2 = (P - arc.r[i]).norm2();
        if (d2 < best_d2) {
            best_d2 = d2;
            best_i = i;
        }
    }
    // local refine around the best node
    const std::size_t lo = best_i > stride ? best_i - stride : 0;
    const std::size_t hi = std::min(N - 1, best_i + stride);
    for (std::size_t i = lo; i <= hi; ++i) {
        const double d2 = (P - arc.r[i]).norm2();
        if (d2 < best_d2) {
            best_d2 = d2;
            best_i = i;
        }
    }
    Projection pr;
    if (std::sqrt(best_d2) > reach + 2.0 * (arc.s[1] - arc.s[0]) * stride) return pr;

    double s = arc.s[best_i];
    const double s_min = arc.s.front(), s_max = arc.s.back();
    for (int it = 0; it < 8; ++it) {
        const Vec2 r = arc.position_at(s);
        const Vec2 v = arc.velocity_at(s);
        const Vec2 t = v * (1.0 / v.norm());
        const Vec2 diff = P - r;
        const double g = diff.dot(t);
        // g'(s) = -1 + (P - r).t'(s); t' = kappa e_n
        const double kap = arc.interp(arc.kappa, s);
        const double gp = -1.0 + diff.dot(t.perp()) * kap;
        double step = -g / gp;
        step = std::clamp(step, -10.0 * (arc.s[1] - arc.s[0]) * stride,
                          10.0 * (arc.s[1] - arc.s[0]) * stride);
        s = std::clamp(s + step, s_min, s_max);
        if (std::abs(g) < 1e-12) break;
    }
    const Vec2 r = arc.position_at(s);
    const Vec2 v = arc.velocity_at(s);
    const Vec2 en = (v * (1.0 / v.norm())).perp();
    pr.s = s;
    pr.n = (P - r).dot(en);
    pr.ok = true;
    return pr;
}

}  // namespace

cplx ABLState::beam_term(std::size_t k, const Vec2& P) const {
    const double sq_hbar = std::sqrt(params.hbar);
    const double n_max = layer_halfwidth();
    const Arc& arc = orbit.arcs[k];
    const Projection pr = project_to_arc(arc, P, n_max);
    if (!pr.ok || std::abs(pr.n) > n_max) return 0.0;
    if (basis.masked(k, pr.s)) return 0.0;  // regularization zone
    // fade out along the through-wall extension (mirror images only need the
    // near-wall part; the tips would otherwise contribute frozen phases)
    double fade = 1.0;
    if (arc.ext_len > 0.0) {
        double over = 0.0;
        if (pr.s > arc.s_phys_end) over = pr.s - arc.s_phys_end;
        if (pr.s < arc.s_phys_begin) over = arc.s_phys_begin - pr.s;
        fade = taper(over / arc.ext_len, 0.35);
        if (fade == 0.0) return 0.0;
    }
    const double nu = pr.n / sq_hbar;
    const double S0 = arc.interp(arc.S0, pr.s);
    const double S1 = arc.interp(arc.S1, pr.s);
    const cplx phase = std::exp(cplx(0.0, (S0 + S1 * pr.n) / params.hbar));
    return fade * phase * mode(k, pr.s, nu) *
           taper(std::abs(nu) / config.nu_max, config.taper_fraction);
}

cplx ABLState::field(const Vec2& point) const {
    const double d = params.d;
    auto beams = [&](const Vec2& P) -> cplx {
        cplx total = 0.0;
        for (std::size_t k = 0; k < orbit.arcs.size(); ++k) {
            const double wall_sign = (k % 2 == 0) ? 1.0 : -1.0;  // r = -1 per bounce
            total += wall_sign * beam_term(k, P);
        }
        return total;
    };
    cplx v = beams(point);
    v -= beams({-point.x, point.y});          // mirror across x = 0
    v -= beams({2.0 * d - point.x, point.y}); // mirror across x = d
    return v * norm_scale;
}

ABLState make_abl_state(int n, double eta, const SystemParams& params, const Potential& pot,
                        const ShootingSettings& shoot, const QuantizeSettings& qs,
                        const ABLStateConfig& cfg) {
    const FamilyProvider family = bell_orbit_family(params, pot, shoot);
    const QuantizedEnergy qe = quantize_unstable(n, eta, params, family, qs);

    ABLState st;
    st.params = params;
    st.n = n;
    st.eta = eta;
    st.energy = qe.energy;
    st.config = cfg;
    if (st.config.nu_max <= 0.0)
        st.config.nu_max = 0.15 * params.d / std::sqrt(params.hbar);
    st.orbit = find_bell_orbit(qe.energy, params, pot, shoot);
    const MonodromyData mono = monodromy_classify(st.orbit);
    st.basis.floquet = periodic_solutions(st.orbit, mono);
    st.basis.orbit = &st.orbit;
    st.basis.hbar = params.hbar;
    st.basis.focal_mask = cfg.focal_mask_frac * st.orbit.length;
    return st;
}

FieldGrid assemble_field(ABLState& state, const std::vector<double>& xs,
                         const std::vector<double>& ys) {
    FieldGrid grid;
    grid.x = xs;
    grid.y = ys;
    grid.values.resize(xs.size() * ys.size());
    state.norm_scale = 1.0;
    double max_abs = 0.0;
    for (std::size_t iy = 0; iy < ys.size(); ++iy) {
        for (std::size_t ix = 0; ix < xs.size(); ++ix) {
            if (xs[ix] < 0.0 || xs[ix] > state.params.d) {
                grid.values[iy * xs.size() + ix] = 0.0;
                continue;
            }
            const cplx v = state.field({xs[ix], ys[iy]});
            grid.values[iy * xs.size() + ix] = v;
            max_abs = std::max(max_abs, std::abs(v));
        }
    }
    if (max_abs > 0.0) {
        for (auto& v : grid.values) v /= max_abs;
        state.norm_scale = 1.0 / max_abs;
    }
    grid.max_abs = 1.0;
    return grid;
}

// ---------------------------------------------------------------------------

double ehrenfest_time(double lambda_T, double N_ph) {
    if (N_ph <= 1.0) throw NumericError("ehrenfest_time: N_ph <= 1");
    if (lambda_T <= 0.0) throw InputError("ehrenfest_time: lambda_T must be positive");
    return std::log(N_ph) / lambda_T;
}

ScarDiagnostics ehrenfest_diagnostics(const PeriodicOrbit& orbit, const MonodromyData& mono,
                                      const FloquetData& floquet, const SystemParams& params) {
    if (mono.classification != OrbitStability::unstable)
        throw InputError("ehrenfest_diagnostics: orbit must be unstable");
    ScarDiagnostics d;
    const double L = params.d;  // characteristic system size
    d.N_ph = L * std::sqrt(2.0 * params.mass * orbit.energy) / params.hbar;
    d.lambda_T = mono.lambda / orbit.period;
    d.t_ehrenfest = ehrenfest_time(d.lambda_T, d.N_ph);
    d.period = orbit.period;
    d.T_over_tEhr = orbit.period / d.t_ehrenfest;
    d.window_halfwidth = 2.0 * kPi * params.hbar / d.t_ehrenfest;
    d.condition_T_lt_tEhr = orbit.period < d.t_ehrenfest;

    // <Gamma - Gammabar> over unmasked nodes (magnitude; Eq.-(15) estimate)
    double acc = 0.0;
    std::size_t cnt = 0;
    const double mask = 0.01 * orbit.length;
    for (std::size_t k = 0; k < orbit.arcs.size(); ++k) {
        const Arc& arc = orbit.arcs[k];
        for (std::size_t i = 0; i < arc.s.size(); ++i) {
            bool near_focus = false;
            for (const auto& fp : floquet.census.points)
                if (fp.arc_index == k && std::abs(fp.s - arc.s[i]) < mask) near_focus = true;
            if (near_focus) continue;
            const cplx zz = floquet.grow.z_node(orbit, k, i) * floquet.decay.z_node(orbit, k, i);
            acc += std::abs((floquet.wronskian / zz).real());
            ++cnt;
        }
    }
    const double gdiff = acc / std::max<std::size_t>(cnt, 1);
    d.delta_eta = std::log(L * std::sqrt(gdiff / (2.0 * params.hbar)));
    return d;
}

CurrentField transverse_current(const std::vector<std::vector<cplx>>& psi,
                                const std::vector<double>& a_of_s, double ds, double dnu) {
    const std::size_t ns = psi.size();
    const std::size_t nn = psi.front().size();
    CurrentField out;
    out.js.assign(ns * nn, 0.0);
    out.jnu.assign(ns * nn, 0.0);
    for (std::size_t i = 0; i < ns; ++i) {
        for (std::size_t j = 0; j < nn; ++j) {
            const cplx v = psi[i][j];
            out.js[i * nn + j] = a_of_s[i] * std::norm(v);
            if (j > 0 && j + 1 < nn) {
                const cplx dpsi = (psi[i][j + 1] - psi[i][j - 1]) / (2.0 * dnu);
                out.jnu[i * nn + j] =
                    0.5 * (cplx(0.0, 1.0) * (v * std::conj(dpsi) - std::conj(v) * dpsi)).real();
            }
            out.max_js = std::max(out.max_js, std::abs(out.js[i * nn + j]));
        }
    }
    // continuity residual d js / ds + d jnu / dnu (central differences)
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < ns; ++i) {
        for (std::size_t j = 1; j + 1 < nn; ++j) {
            const double djs = (out.js[(i + 1) * nn + j] - out.js[(i - 1) * nn + j]) / (2.0 * ds);
            const double djn =
                (out.jnu[i * nn + j + 1] - out.jnu[i * nn + j - 1]) / (2.0 * dnu);
            worst = std::max(worst, std::abs(djs + djn));
        }
    }
    out.continuity_residual = worst;
    return out;
}

ResidualReport bl_residual(const Arc& arc, const NodeMode& psi_fn, std::size_t node_begin,
                           std::size_t node_end, std::size_t node_stride,
                           const std::vector<double>& nu_grid) {
    const std::size_t nn = nu_grid.size();
    const double dnu = nu_grid[1] - nu_grid[0];

    std::vector<std::size_t> nodes;
    for (std::size_t i = node_begin; i <= node_end; i += node_stride) nodes.push_back(i);
    const std::size_t ns = nodes.size();
    const double hs = arc.s[nodes[1]] - arc.s[nodes[0]];

    // phi = sqrt(a) * psi, sampled at exact arc nodes
    std::vector<std::vector<cplx>> phi(ns, std::vector<cplx>(nn));
    double max_phi = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
        const std::size_t node = nodes[i];
        const double sqa = std::sqrt(arc.a[node]);
        for (std::size_t j = 0; j < nn; ++j) {
            phi[i][j] = sqa * psi_fn(node, nu_grid[j]);
            max_phi = std::max(max_phi, std::abs(phi[i][j]));
        }
    }

    ResidualReport rep;
    double l2 = 0.0;
    for (std::size_t i = 2; i + 2 < ns; ++i) {
        const std::size_t node = nodes[i];
        const double a = arc.a[node];
        const double dd = arc.dcoeff[node];
        for (std::size_t j = 2; j + 2 < nn; ++j) {
            // 4th-order first derivative in s
            const cplx dphi_s = (-phi[i + 2][j] + 8.0 * phi[i + 1][j] - 8.0 * phi[i - 1][j] +
                                 phi[i - 2][j]) /
                                (12.0 * hs);
            // 4th-order second derivative in nu
            const cplx d2phi_nu = (-phi[i][j + 2] + 16.0 * phi[i][j + 1] - 30.0 * phi[i][j] +
                                   16.0 * phi[i][j - 1] - phi[i][j - 2]) /
                                  (12.0 * dnu * dnu);
            const cplx L = cplx(0.0, 1.0) * dphi_s + d2phi_nu / (2.0 * a) -
                           0.5 * a * dd * nu_grid[j] * nu_grid[j] * phi[i][j];
            const double r = std::abs(L);
            rep.max_residual = std::max(rep.max_residual, r);
            l2 += r * r;
            ++rep.n_points;
        }
    }
    if (max_phi > 0.0) {
        rep.max_residual /= max_phi;
        rep.l2_residual = std::sqrt(l2 / std::max<std::size_t>(rep.n_points, 1)) / max_phi;
    }
    return rep;
}

ResidualReport bl_residual(const ABLState& state, std::size_t arc_idx, std::size_t node_begin,
                           std::size_t node_end, std::size_t node_stride,
                           const std::vector<double>& nu_grid) {
    const Arc& arc = state.orbit.arcs[arc_idx];
    NodeMode fn = [&](std::size_t node, double nu) {
        return state.mode(arc_idx, arc.s[node], nu);
    };
    return bl_residual(arc, fn, node_begin, node_end, node_stride, nu_grid);
}

}  // namespace ablscar
