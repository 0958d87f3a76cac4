#include "classical.hpp"

#include <algorithm>

namespace ablscar {

namespace {

// y = [x, y, vx, vy]
OdeRhs make_flow_rhs(const SystemParams& params, const Potential& pot) {
    const double eB = params.eB();
    const double inv_m = 1.0 / params.mass;
    return [&pot, eB, inv_m](double, const double* y, double* dy) {
        const Vec2 r{y[0], y[1]};
        const Vec2 g = pot.gradient(r);
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = (eB * y[3] - g.x) * inv_m;
        dy[3] = (-eB * y[2] - g.y) * inv_m;
    };
}

// extended state for arc construction:
// [x, y, vx, vy, s, Ikin, Iarea, z1, p1, z2, p2]
// Ikin  = int a |v| dt         (kinetic action along the path)
// Iarea = int (x vy - y vx) dt (twice the swept signed area)
// (z_i, p_i): basis solutions of the equations in variation, transported in
// time via dz/dt = p/m, dp/dt = -(a^2 d / m) z.
constexpr int kExtDim = 11;

struct ExtRhs {
    const SystemParams* params;
    const Potential* pot;

    void operator()(double, const double* y, double* dy) const {
        const double eB = params->eB();
        const double m = params->mass;
        const Vec2 r{y[0], y[1]};
        const Vec2 v{y[2], y[3]};
        const Vec2 g = pot->gradient(r);
        const Vec2 F{eB * v.y - g.x, -eB * v.x - g.y};
        const double vn = v.norm();
        const double a = m * vn;
        const Vec2 et = v * (1.0 / vn);
        const Vec2 en = et.perp();
        const double kappa = F.dot(en) / (m * vn * vn);
        const double u1 = g.dot(en);
        const auto h = pot->hessian(r);
        const double u2 =
            0.5 * (h[0] * en.x * en.x + 2.0 * h[1] * en.x * en.y + h[2] * en.y * en.y);
        const double a2 = a * a;
        const double dd = 2.0 * m * u2 / a2 + sq(m * u1) / sq(a2) - 2.0 * m * u1 * kappa / a2 -
                          eB * kappa / a;

        dy[0] = v.x;
        dy[1] = v.y;
        dy[2] = F.x / m;
        dy[3] = F.y / m;
        dy[4] = vn;            // ds/dt
        dy[5] = a * vn;        // d(Ikin)/dt
        dy[6] = r.cross(v);    // d(Iarea)/dt
        dy[7] = y[8] / m;      // dz1/dt = p1/m
        dy[8] = -(a2 * dd / m) * y[7];
        dy[9] = y[10] / m;
        dy[10] = -(a2 * dd / m) * y[9];
    }
};

std::vector<OdeEvent> wall_events(double d) {
    std::vector<OdeEvent> ev(2);
    ev[0].g = [](double, const double* y) { return y[0]; };
    ev[0].direction = -1;  // exit through x = 0
    ev[1].g = [d](double, const double* y) { return y[0] - d; };
    ev[1].direction = +1;  // arrival at x = d
    return ev;
}

struct ShotResult {
    bool hit_far_wall = false;
    double y_at_wall = 0.0;
    IntegrateOutcome out{0.0, {}, std::nullopt, OdeSolution(0)};
};

ShotResult shoot_extended(double E, double theta, const SystemParams& params, const Potential& pot,
                          const OdeOptions& opt) {
    const double u00 = pot.value({0.0, 0.0});
    if (E <= u00) throw InputError("find_bell_orbit: energy below the launch-point potential");
    const double v0 = std::sqrt(2.0 * (E - u00) / params.mass);
    std::vector<double> y0(kExtDim, 0.0);
    y0[2] = v0 * std::cos(theta);
    y0[3] = v0 * std::sin(theta);
    y0[7] = 1.0;   // (z1,p1) = (1,0)
    y0[10] = 1.0;  // (z2,p2) = (0,1)

    ExtRhs rhs{&params, &pot};
    ShotResult res;
    res.out = integrate_ode([rhs](double t, const double* y, double* dy) { rhs(t, y, dy); }, 0.0,
                            std::move(y0), 1e4, wall_events(params.d), opt);
    res.hit_far_wall = res.out.event_index.has_value() && *res.out.event_index == 1;
    if (res.hit_far_wall) res.y_at_wall = res.out.y_final[1];
    return res;
}

// per-leg continuation of the physical state only, with fresh quadratures
IntegrateOutcome continue_leg(std::vector<double> y0, int target_event, const SystemParams& params,
                              const Potential& pot, const OdeOptions& opt) {
    y0[4] = 0.0;
    y0[5] = 0.0;
    y0[6] = 0.0;
    y0[7] = 1.0;
    y0[8] = 0.0;
    y0[9] = 0.0;
    y0[10] = 1.0;
    ExtRhs rhs{&params, &pot};
    auto out = integrate_ode([rhs](double t, const double* y, double* dy) { rhs(t, y, dy); },
                             0.0, std::move(y0), 1e4, wall_events(params.d), opt);
    if (!out.event_index || *out.event_index != target_event)
        throw NumericError("find_bell_orbit: second arc did not reach the opposite wall");
    return out;
}

struct ExtendedLeg {
    IntegrateOutcome dense{0.0, {}, std::nullopt, OdeSolution(0)};
    double t_start = 0.0;  // leg start within the recorded time axis
    double t_leg = 0.0;    // physical leg duration
};

// Integrates the un-bounced flow from s_ext before the leg start to s_ext
// past the leg end, co-integrating quadratures and the variation basis.
ExtendedLeg integrate_extended_leg(const std::vector<double>& leg_start, double t_leg,
                                   double leg_s, double s_ext, const SystemParams& params,
                                   const Potential& pot, const OdeOptions& opt) {
    const double eB = params.eB();
    const double inv_m = 1.0 / params.mass;
    // backward continuation (time-reversed flow, arclength grows)
    OdeRhs rev = [&pot, eB, inv_m](double, const double* y, double* dy) {
        const Vec2 r{y[0], y[1]};
        const Vec2 g = pot.gradient(r);
        dy[0] = -y[2];
        dy[1] = -y[3];
        dy[2] = -(eB * y[3] - g.x) * inv_m;
        dy[3] = -(-eB * y[2] - g.y) * inv_m;
        dy[4] = std::hypot(y[2], y[3]);
    };
    auto back = integrate_ode(
        rev, 0.0, {leg_start[0], leg_start[1], leg_start[2], leg_start[3], 0.0}, 1e4, {}, opt,
        [s_ext](double, const double* y) { return y[4] >= s_ext; });

    ExtendedLeg out;
    out.t_start = back.t_final;
    out.t_leg = t_leg;

    std::vector<double> y0(kExtDim, 0.0);
    for (int i = 0; i < 4; ++i) y0[i] = back.y_final[i];
    y0[7] = 1.0;
    y0[10] = 1.0;
    const double s_stop = back.y_final[4] + leg_s + s_ext;
    ExtRhs rhs{&params, &pot};
    out.dense = integrate_ode(
        [rhs](double t, const double* y, double* dy) { rhs(t, y, dy); }, 0.0, std::move(y0), 1e4,
        {}, opt, [s_stop](double, const double* y) { return y[4] >= s_stop; });
    return out;
}

Arc build_arc_from_extended(const ExtendedLeg& ext, double s_ext, const SystemParams& params,
                            const Potential& pot, std::size_t n_samples, double s_offset,
                            double S0_offset) {
    const double eB = params.eB();
    const double m = params.mass;
    const double xc = 0.5 * params.d;  // gauge centre on the inversion point
    const IntegrateOutcome& leg = ext.dense;

    // reference values at the physical leg start / end
    std::vector<double> st0(kExtDim), st1(kExtDim), state(kExtDim);
    leg.dense.eval(ext.t_start, st0.data());
    leg.dense.eval(ext.t_start + ext.t_leg, st1.data());

    // recombination A = B0^{-1} anchors the variation basis at the leg start
    const double b11 = st0[7], b12 = st0[9], b21 = st0[8], b22 = st0[10];
    const double det0 = b11 * b22 - b12 * b21;
    const double A11 = b22 / det0, A12 = -b12 / det0, A21 = -b21 / det0, A22 = b11 / det0;

    Arc arc;
    const double s_at_start = st0[4];
    const double leg_s = st1[4] - st0[4];
    // the integration overshoots both ends; sample exactly [-s_ext, L + s_ext]
    const double s_lo = s_at_start - s_ext;
    const double s_hi = s_at_start + leg_s + s_ext;
    if (s_lo < -1e-9 || s_hi > leg.y_final[4] + 1e-9)
        throw NumericError("build_arc: extension range not covered by the integration");
    const double t_end = leg.t_final;
    arc.s.resize(n_samples);
    arc.t.resize(n_samples);
    arc.r.resize(n_samples);
    arc.v.resize(n_samples);
    arc.a.resize(n_samples);
    arc.kappa.resize(n_samples);
    arc.u0.resize(n_samples);
    arc.u1.resize(n_samples);
    arc.u2.resize(n_samples);
    arc.dcoeff.resize(n_samples);
    arc.S0.resize(n_samples);
    arc.S0p.resize(n_samples);
    arc.S1.resize(n_samples);
    arc.z1.resize(n_samples);
    arc.p1.resize(n_samples);
    arc.z2.resize(n_samples);
    arc.p2.resize(n_samples);

    for (std::size_t i = 0; i < n_samples; ++i) {
        const double s_loc = s_lo + (s_hi - s_lo) * static_cast<double>(i) / (n_samples - 1);
        double t_loc;
        {
            double lo = 0.0, hi = t_end;
            for (int it = 0; it < 64; ++it) {
                const double mid = 0.5 * (lo + hi);
                leg.dense.eval(mid, state.data());
                if (state[4] < s_loc)
                    lo = mid;
                else
                    hi = mid;
            }
            t_loc = 0.5 * (lo + hi);
        }
        leg.dense.eval(t_loc, state.data());

        const Vec2 r{state[0], state[1]};
        const Vec2 v{state[2], state[3]};
        const double vn = v.norm();
        const Vec2 et = v * (1.0 / vn);
        const Vec2 en = et.perp();
        const Vec2 g = pot.gradient(r);
        const Vec2 F{eB * v.y - g.x, -eB * v.x - g.y};
        const double a = m * vn;
        const PotentialJet jet = potential_jets(pot, r, en);

        arc.s[i] = s_offset + (state[4] - s_at_start);
        arc.t[i] = t_loc - ext.t_start;
        arc.r[i] = r;
        arc.v[i] = v;
        arc.a[i] = a;
        arc.kappa[i] = F.dot(en) / (m * vn * vn);
        arc.u0[i] = jet.u0;
        arc.u1[i] = jet.u1;
        arc.u2[i] = jet.u2;
        const double a2 = a * a;
        arc.dcoeff[i] = 2.0 * m * jet.u2 / a2 + sq(m * jet.u1) / sq(a2) -
                        2.0 * m * jet.u1 * arc.kappa[i] / a2 - eB * arc.kappa[i] / a;
        // S0 = S0_offset + d(Ikin) + (eB/2)(d(Iarea) - xc dy), all relative to
        // the physical leg start
        arc.S0[i] = S0_offset + (state[5] - st0[5]) +
                    0.5 * eB * ((state[6] - st0[6]) - xc * (r.y - st0[1]));
        // A centred at (xc, 0): A = (B/2)(-y, x - xc)
        const Vec2 Avec{-0.5 * params.B * r.y, 0.5 * params.B * (r.x - xc)};
        arc.S0p[i] = a + params.charge * Avec.dot(et);
        arc.S1[i] = params.charge * Avec.dot(en);
        // recombined variation basis (identity at the leg start)
        arc.z1[i] = state[7] * A11 + state[9] * A21;
        arc.p1[i] = state[8] * A11 + state[10] * A21;
        arc.z2[i] = state[7] * A12 + state[9] * A22;
        arc.p2[i] = state[8] * A12 + state[10] * A22;
    }
    arc.s_phys_begin = s_offset;
    arc.s_phys_end = s_offset + leg_s;
    arc.ext_len = s_ext;
    arc.leg_matrix.a11 = st1[7] * A11 + st1[9] * A21;
    arc.leg_matrix.a21 = st1[8] * A11 + st1[10] * A21;
    arc.leg_matrix.a12 = st1[7] * A12 + st1[9] * A22;
    arc.leg_matrix.a22 = st1[8] * A12 + st1[10] * A22;
    return arc;
}

}  // namespace

double total_energy(const SystemParams& params, const Potential& pot, const PhaseState& st) {
    return 0.5 * params.mass * st.v.norm2() + pot.value(st.r);
}

IntegrateOutcome integrate_eom(const SystemParams& params, const Potential& pot,
                               const PhaseState& start, double t_limit, const OdeOptions& opt,
                               const std::function<bool(double, const double*)>& stop) {
    auto rhs = make_flow_rhs(params, pot);
    return integrate_ode(rhs, start.t, {start.r.x, start.r.y, start.v.x, start.v.y}, t_limit,
                         wall_events(params.d), opt, stop);
}

PeriodicOrbit find_bell_orbit(double E, const SystemParams& params, const Potential& pot,
                              const ShootingSettings& settings) {
    params.validate();
    const double d = params.d;
    auto shot_y = [&](double th) -> double {
        auto res = shoot_extended(E, th, params, pot, settings.ode);
        if (!res.hit_far_wall)
            throw NumericError("find_bell_orbit: trajectory left through x = 0 inside the bracket");
        return res.y_at_wall;
    };

    double lo = settings.theta_lo, hi = settings.theta_hi;
    double flo = shot_y(lo), fhi = shot_y(hi);
    if (flo * fhi > 0.0)
        throw NumericError("find_bell_orbit: no sign change of y(d) in the angle bracket");

    const double y_tol = settings.y_tol_rel * d;
    double th_root = 0.5 * (lo + hi);
    for (int it = 0; it < 120; ++it) {
        double mid;
        if (it % 2 == 0 && std::abs(fhi - flo) > 0.0) {
            mid = hi - fhi * (hi - lo) / (fhi - flo);
            if (!(mid > std::min(lo, hi) && mid < std::max(lo, hi))) mid = 0.5 * (lo + hi);
        } else {
            mid = 0.5 * (lo + hi);
        }
        const double fm = shot_y(mid);
        th_root = mid;
        if (std::abs(fm) < y_tol) break;
        if (flo * fm <= 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
        if (std::abs(hi - lo) < 1e-16) break;
    }

    auto leg1 = shoot_extended(E, th_root, params, pot, settings.ode);
    if (!leg1.hit_far_wall) throw NumericError("find_bell_orbit: converged shot missed the wall");
    if (std::abs(leg1.y_at_wall) > 10.0 * std::max(y_tol, 1e-13 * d))
        throw NumericError("find_bell_orbit: shooting did not converge to y(d) = 0");

    {
        const Vec2 vw{leg1.out.y_final[2], leg1.out.y_final[3]};
        if (std::abs(vw.x) < 1e-6 * vw.norm())
            throw NumericError("find_bell_orbit: orbit grazes the wall (|theta| -> pi/2)");
    }

    PeriodicOrbit orbit;
    orbit.params = params;
    orbit.energy = E;
    orbit.launch_angle = th_root;

    const double eB = params.eB();
    const double sign_eB = (eB >= 0.0) ? 1.0 : -1.0;

    // bounce at x = d
    std::vector<double> wall_state = leg1.out.y_final;
    ReflectionEvent b1;
    b1.point = {wall_state[0], wall_state[1]};
    b1.v_in = {wall_state[2], wall_state[3]};
    b1.wall_x = d;
    b1.vy_over_vx = b1.v_in.y / b1.v_in.x;
    b1.tan_theta = -sign_eB * b1.vy_over_vx;
    b1.theta = std::atan(b1.tan_theta);
    wall_state[2] = -wall_state[2];
    b1.v_out = {wall_state[2], wall_state[3]};

    auto leg2 = continue_leg(wall_state, 0, params, pot, settings.ode);

    // bounce at x = 0 (back to the launch state)
    std::vector<double> end_state = leg2.y_final;
    ReflectionEvent b2;
    b2.point = {end_state[0], end_state[1]};
    b2.v_in = {end_state[2], end_state[3]};
    b2.wall_x = 0.0;
    b2.vy_over_vx = b2.v_in.y / b2.v_in.x;
    b2.tan_theta = -sign_eB * b2.vy_over_vx;
    b2.theta = std::atan(b2.tan_theta);
    b2.v_out = {-end_state[2], end_state[3]};

    orbit.closure_error = Vec2{end_state[0], end_state[1]}.norm();

    orbit.period = leg1.out.t_final + leg2.t_final;
    orbit.length = leg1.out.y_final[4] + leg2.y_final[4];
    orbit.kinetic_action = leg1.out.y_final[5] + leg2.y_final[5];
    orbit.signed_area = 0.5 * (leg1.out.y_final[6] + leg2.y_final[6]);
    orbit.flux = eB * orbit.signed_area;
    orbit.bounces.push_back(b1);
    orbit.bounces.push_back(b2);

    // extended sampled arcs (used by mode and field evaluation)
    const double s_ext = settings.arc_extension > 0 ? settings.arc_extension : 0.25 * d;
    const double u00 = pot.value({0.0, 0.0});
    const double v0 = std::sqrt(2.0 * (E - u00) / params.mass);
    const std::vector<double> launch_state = {0.0, 0.0, v0 * std::cos(th_root),
                                              v0 * std::sin(th_root)};
    ExtendedLeg x1 = integrate_extended_leg(launch_state, leg1.out.t_final,
                                            leg1.out.y_final[4], s_ext, params, pot, settings.ode);
    ExtendedLeg x2 = integrate_extended_leg(wall_state, leg2.t_final, leg2.y_final[4], s_ext,
                                            params, pot, settings.ode);
    const double s_half = leg1.out.y_final[4];
    Arc arc0 =
        build_arc_from_extended(x1, s_ext, params, pot, settings.samples_per_arc, 0.0, 0.0);
    // S0 at the far-wall bounce, exact from the event state
    const double S0_half =
        leg1.out.y_final[5] +
        0.5 * eB * (leg1.out.y_final[6] - 0.5 * d * leg1.out.y_final[1]);
    Arc arc1 = build_arc_from_extended(x2, s_ext, params, pot, settings.samples_per_arc, s_half,
                                       S0_half);
    for (std::size_t i = 0; i < arc1.t.size(); ++i) arc1.t[i] += leg1.out.t_final;
    orbit.arcs.push_back(std::move(arc0));
    orbit.arcs.push_back(std::move(arc1));

    // a(s) must stay positive (no classical turning point on the orbit)
    for (const auto& arc : orbit.arcs)
        for (double av : arc.a)
            if (!(av > 0.0)) throw NumericError("build_arc: a(s) vanished on the orbit");

    return orbit;
}

std::vector<PoincarePoint> poincare_section(double E, const SystemParams& params,
                                            const Potential& pot,
                                            const std::vector<std::pair<double, double>>& seeds,
                                            int n_bounces, const OdeOptions& opt) {
    std::vector<PoincarePoint> pts;
    auto rhs = make_flow_rhs(params, pot);
    const auto events = wall_events(params.d);

    for (std::size_t is = 0; is < seeds.size(); ++is) {
        const auto [y0, py0] = seeds[is];
        const double u = pot.value({0.0, y0});
        const double px2 = 2.0 * params.mass * (E - u) - py0 * py0;
        if (px2 <= 0.0)
            throw InputError("poincare_section: seed outside the energetically allowed disc");
        std::vector<double> state{0.0, y0, std::sqrt(px2) / params.mass, py0 / params.mass};
        pts.push_back({y0, py0, 0, is});
        for (int b = 0; b < n_bounces; ++b) {
            auto out = integrate_ode(rhs, 0.0, state, 1e4, events, opt);
            if (!out.event_index) break;
            state = out.y_final;
            state[2] = -state[2];  // specular reflection
            if (*out.event_index == 0)
                pts.push_back({state[1], params.mass * state[3], b + 1, is});
        }
    }
    return pts;
}

// ---- Arc interpolation helpers ----

std::size_t Arc::bracket_index(double s_query) const {
    const double h = (s.back() - s.front()) / (s.size() - 1);
    double u = (s_query - s.front()) / h;
    auto i = static_cast<std::ptrdiff_t>(std::floor(u));
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(s.size()) - 2);
    return static_cast<std::size_t>(i);
}

Vec2 Arc::position_at(double s_query) const {
    const std::size_t i = bracket_index(s_query);
    const double h = s[i + 1] - s[i];
    const double u = (s_query - s[i]) / h;
    const Vec2 m0 = v[i] * (1.0 / v[i].norm());
    const Vec2 m1 = v[i + 1] * (1.0 / v[i + 1].norm());
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2,
                 h11 = u3 - u2;
    return r[i] * h00 + m0 * (h * h10) + r[i + 1] * h01 + m1 * (h * h11);
}

Vec2 Arc::velocity_at(double s_query) const {
    const std::size_t i = bracket_index(s_query);
    const double h = s[i + 1] - s[i];
    const double u = (s_query - s[i]) / h;
    const Vec2 m0 = v[i] * (1.0 / v[i].norm());
    const Vec2 m1 = v[i + 1] * (1.0 / v[i + 1].norm());
    const double u2 = u * u;
    const double d00 = 6 * u2 - 6 * u, d10 = 3 * u2 - 4 * u + 1, d01 = -6 * u2 + 6 * u,
                 d11 = 3 * u2 - 2 * u;
    Vec2 drds = r[i] * (d00 / h) + m0 * d10 + r[i + 1] * (d01 / h) + m1 * d11;
    const double vn0 = v[i].norm(), vn1 = v[i + 1].norm();
    const double vn = vn0 + (vn1 - vn0) * u;
    const double dn = drds.norm();
    return drds * (vn / dn);
}

double Arc::interp(const std::vector<double>& f, double s_query) const {
    const std::size_t i = bracket_index(s_query);
    const double u = (s_query - s[i]) / (s[i + 1] - s[i]);
    return f[i] + (f[i + 1] - f[i]) * u;
}

}  // namespace ablscar
