#pragma once

#include "integrate.hpp"
#include "model.hpp"

namespace ablscar {

struct PhaseState {
    Vec2 r;
    Vec2 v;
    double t = 0.0;
};

// plain 2x2 storage for the per-leg variation transport
struct Mat2Raw {
    double a11 = 1, a12 = 0, a21 = 0, a22 = 1;
};

// Wall bounce bookkeeping.  theta is the signed reflection angle feeding the
// reflection matrix R = [[-1,0],[-2 m omega_c tan(theta), -1]]; the sign is
// fixed so that R reproduces the linearized bounce map of the true flow,
// tan(theta) = -sign(eB) * (vy/vx) of the incident velocity.
struct ReflectionEvent {
    Vec2 point;
    Vec2 v_in;
    Vec2 v_out;
    double wall_x = 0.0;
    double tan_theta = 0.0;
    double theta = 0.0;
    double vy_over_vx = 0.0;  // incident
};

// One smooth wall-to-wall piece of the orbit, sampled uniformly in arclength.
// Velocity samples make cubic Hermite interpolation of r(s) exact to O(h^4)
// since dr/ds = v/|v|.
struct Arc {
    // Sample grid covers the physical wall-to-wall leg plus a tangent-flow
    // extension through both walls (used by the mirror-image evaluation).
    // s is cumulative over the orbit: the physical leg spans
    // [s_phys_begin, s_phys_end].
    double s_phys_begin = 0.0;
    double s_phys_end = 0.0;
    double ext_len = 0.0;        // extension length beyond each wall
    Mat2Raw leg_matrix;          // variation transport over the physical leg

    std::vector<double> s;       // uniform grid (incl. extensions)
    std::vector<double> t;       // time at samples
    std::vector<Vec2> r;
    std::vector<Vec2> v;
    std::vector<double> a;       // momentum magnitude m|v|
    std::vector<double> kappa;   // signed curvature 1/rho (e_n = left normal)
    std::vector<double> u0, u1, u2;
    std::vector<double> dcoeff;  // boundary-layer coefficient d(s)
    std::vector<double> S0;      // action phase along the orbit (cumulative)
    std::vector<double> S0p;     // dS0/ds = a + e A.e_t
    std::vector<double> S1;      // transverse gauge phase e A.e_n
    // basis solutions of the equations in variation, initial (1,0) and (0,1)
    // at the arc start
    std::vector<double> z1, p1, z2, p2;

    double s_begin() const { return s_phys_begin; }
    double s_end() const { return s_phys_end; }
    double length() const { return s_phys_end - s_phys_begin; }
    double duration() const { return t.back() - t.front(); }

    Vec2 tangent(std::size_t i) const { return v[i] * (1.0 / v[i].norm()); }
    Vec2 normal(std::size_t i) const { return tangent(i).perp(); }

    // Hermite interpolation on the uniform s grid
    Vec2 position_at(double s_query) const;
    Vec2 velocity_at(double s_query) const;
    double interp(const std::vector<double>& f, double s_query) const;  // linear in s
    std::size_t bracket_index(double s_query) const;
};

struct PeriodicOrbit {
    SystemParams params;
    double energy = 0.0;
    double launch_angle = 0.0;  // at (0,0)
    std::vector<Arc> arcs;               // traversal order, starting at (0,0)
    std::vector<ReflectionEvent> bounces;  // bounce after arcs[i]
    double period = 0.0;
    double length = 0.0;
    double kinetic_action = 0.0;  // loop integral of a ds
    double signed_area = 0.0;     // shoelace over the closed loop
    double flux = 0.0;            // e B * signed_area

    // closure residual |r_final - r_initial|
    double closure_error = 0.0;
};

struct ShootingSettings {
    double theta_lo = 0.0;
    double theta_hi = 0.0;
    double y_tol_rel = 1e-12;  // on y(d)/d
    std::size_t samples_per_arc = 4096;
    double arc_extension = -1.0;  // beyond each wall; < 0 means 0.25 d
    OdeOptions ode;
};

// Integrates the equations of motion m dv/dt = -grad u + e v x B with dense
// output, stopping at wall crossings (x=0 downward, x=d upward), a custom
// predicate, or t_limit.
IntegrateOutcome integrate_eom(const SystemParams& params, const Potential& pot,
                               const PhaseState& start, double t_limit, const OdeOptions& opt,
                               const std::function<bool(double, const double*)>& stop = nullptr);

// One-parameter shooting for the wall-to-wall bell orbit at energy E: launch
// from (0,0) at angle theta, require y = 0 at the x = d wall.  Returns the
// full two-arc periodic orbit with variation basis solutions attached.
PeriodicOrbit find_bell_orbit(double E, const SystemParams& params, const Potential& pot,
                              const ShootingSettings& settings);

double total_energy(const SystemParams& params, const Potential& pot, const PhaseState& st);

// Birkhoff coordinates (y, p_y) recorded at x=0 wall reflections (outgoing).
struct PoincarePoint {
    double y, py;
    int bounce;
    std::size_t seed;
};

std::vector<PoincarePoint> poincare_section(double E, const SystemParams& params,
                                            const Potential& pot,
                                            const std::vector<std::pair<double, double>>& seeds,
                                            int n_bounces, const OdeOptions& opt = {});

}  // namespace ablscar
