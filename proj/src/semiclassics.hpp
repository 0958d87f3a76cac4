#pragma once

#include "specfun.hpp"
#include "variation.hpp"

namespace ablscar {

// Loop action, magnetic flux and the phase functions entering the WKB ansatz.
struct ActionData {
    double loop_action = 0.0;  // integral of a ds over the closed orbit
    double flux = 0.0;         // e B x signed enclosed area
    int alpha = 0;             // focal count per period
    double total() const { return loop_action + flux; }
};

ActionData action_and_flux(const PeriodicOrbit& orbit, const FocalCensus& census);

// Quantization bookkeeping: loop_action + flux =
//   hbar [2 pi n + eta lambda(E) + pi alpha / 2 + pi n_wall]
// with n_wall hard-wall bounces per period (pi each); the synthetic families
// of the unit tests carry n_wall = 0.
struct QuantizeSettings {
    double E_lo = 0.0;
    double E_hi = 0.0;
    double F_tol = 1e-9;          // |F(E)| target in units of hbar
    bool include_wall_phase = true;
    int max_iter = 200;
};

// Orbit family provider: everything quantization needs at a trial energy.
struct FamilySample {
    double action_plus_flux = 0.0;
    double lambda = 0.0;       // dimensionless Lyapunov exponent
    double floquet_phi = 0.0;  // stable case
    int alpha = 0;
    int n_wall_bounces = 0;
};
using FamilyProvider = std::function<FamilySample(double E)>;

struct QuantizedEnergy {
    double energy = 0.0;
    double residual = 0.0;  // F(E)/hbar at the root
    FamilySample at_root;
};

QuantizedEnergy quantize_unstable(int n, double eta, const SystemParams& params,
                                  const FamilyProvider& family, const QuantizeSettings& qs);
QuantizedEnergy quantize_stable(int n, int m, const SystemParams& params,
                                const FamilyProvider& family, const QuantizeSettings& qs);

// family provider backed by the bell-orbit shooting search
FamilyProvider bell_orbit_family(const SystemParams& params, const Potential& pot,
                                 const ShootingSettings& shoot);

// ---------------------------------------------------------------------------
// Boundary-layer mode evaluation
// ---------------------------------------------------------------------------

// Data bundle for evaluating transverse modes on one orbit.
struct ScarBasis {
    const PeriodicOrbit* orbit = nullptr;
    FloquetData floquet;
    double hbar = 1.0;
    // regularization zones around focal points, arclength half-width
    double focal_mask = 0.0;

    bool masked(std::size_t arc, double s) const;
    int focal_crossings_before(std::size_t arc, double s) const;
};

// General ABL transverse mode psi_xi(s, nu) (Eq.-(21) form divided by
// sqrt(a)); branches fixed by continuity from the arc start.
cplx abl_mode(const ScarBasis& basis, std::size_t arc, double s, double nu, cplx xi,
              const SpecFunConfig& sf = {});

// Separatrix mode: a^{-1/2} sqrt|nu / (z zbar)| J_{-1/4}(|w nu^2 / (4 z zbar)|)
// e^{i (Gamma + Gammabar) nu^2 / 4} with a piecewise-constant Maslov phase
// (e^{-i pi/2} per focal crossing).
cplx separatrix_mode(const ScarBasis& basis, std::size_t arc, double s, double nu,
                     const SpecFunConfig& sf = {});

// ---------------------------------------------------------------------------
// Quantized scar state and full-field assembly
// ---------------------------------------------------------------------------

struct ABLStateConfig {
    double nu_max = 0.0;        // boundary-layer half width in nu units
    double taper_fraction = 0.1;
    double focal_mask_frac = 0.01;  // of the orbit length
    bool use_separatrix = true;     // eta = 0 kernel
    cplx xi = cplx(-0.5, 0.0);      // used when use_separatrix = false
};

struct ABLState {
    SystemParams params;
    PeriodicOrbit orbit;
    ScarBasis basis;  // points at this->orbit
    ABLStateConfig config;
    int n = 0;
    double eta = 0.0;
    double energy = 0.0;

    // evaluate the transverse boundary-layer factor only
    cplx mode(std::size_t arc, double s, double nu) const;
    // single-arc beam contribution at a plane point (no wall sign, no mirrors)
    cplx beam_term(std::size_t arc, const Vec2& point) const;
    // full semiclassical field at a plane point (mirror method applied)
    cplx field(const Vec2& point) const;
    double layer_halfwidth() const;  // sqrt(hbar) * nu_max

    // diagnostics
    double norm_scale = 1.0;  // set so max|Psi| = 1 on the last grid
};

ABLState make_abl_state(int n, double eta, const SystemParams& params, const Potential& pot,
                        const ShootingSettings& shoot, const QuantizeSettings& qs,
                        const ABLStateConfig& cfg);

struct FieldGrid {
    std::vector<double> x, y;          // axes
    std::vector<cplx> values;          // row-major [iy * nx + ix]
    double max_abs = 0.0;
    cplx at(std::size_t ix, std::size_t iy) const { return values[iy * x.size() + ix]; }
};

FieldGrid assemble_field(ABLState& state, const std::vector<double>& xs,
                         const std::vector<double>& ys);

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct ScarDiagnostics {
    double N_ph = 0.0;
    double t_ehrenfest = 0.0;
    double period = 0.0;
    double T_over_tEhr = 0.0;
    double lambda_T = 0.0;
    double window_halfwidth = 0.0;  // 2 pi hbar / t_Ehr
    double delta_eta = 0.0;         // Eq.-(15) logarithm with unit prefactor
    bool condition_T_lt_tEhr = false;
};

// t_Ehr = ln(N_ph) / lambda_T
double ehrenfest_time(double lambda_T, double N_ph);

ScarDiagnostics ehrenfest_diagnostics(const PeriodicOrbit& orbit, const MonodromyData& mono,
                                      const FloquetData& floquet, const SystemParams& params);

// transverse probability current on an (s, nu) grid and its continuity residual
struct CurrentField {
    std::vector<double> js, jnu;  // row-major [i_s * n_nu + i_nu]
    double continuity_residual = 0.0;
    double max_js = 0.0;
};

CurrentField transverse_current(const std::vector<std::vector<cplx>>& psi,
                                const std::vector<double>& a_of_s, double ds, double dnu);

// boundary-layer PDE residual of sqrt(a) * mode on a node-aligned (s,nu) grid
struct ResidualReport {
    double max_residual = 0.0;  // relative to max |phi|
    double l2_residual = 0.0;
    std::size_t n_points = 0;
};

// psi_fn(node_index, nu) evaluates the boundary-layer factor at arc nodes
using NodeMode = std::function<cplx(std::size_t node, double nu)>;

ResidualReport bl_residual(const Arc& arc, const NodeMode& psi_fn, std::size_t node_begin,
                           std::size_t node_end, std::size_t node_stride,
                           const std::vector<double>& nu_grid);
ResidualReport bl_residual(const ABLState& state, std::size_t arc, std::size_t node_begin,
                           std::size_t node_end, std::size_t node_stride,
                           const std::vector<double>& nu_grid);

}  // namespace ablscar
