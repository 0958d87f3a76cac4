#pragma once

#include "classical.hpp"

namespace ablscar {

// 2x2 real matrix acting on variation pairs (z, p)
struct Mat2 {
    double a11 = 1, a12 = 0, a21 = 0, a22 = 1;

    static Mat2 identity() { return {}; }
    Mat2 operator*(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    std::array<double, 2> apply(double z, double p) const {
        return {a11 * z + a12 * p, a21 * z + a22 * p};
    }
    double det() const { return a11 * a22 - a12 * a21; }
    double trace() const { return a11 + a22; }
};

// Reflection matrix for variation pairs at a hard wall, Eq.-(18) form:
// [[-1, 0], [-2 m omega_c tan(theta), -1]].  theta uses the orbit's signed
// convention (see ReflectionEvent).
Mat2 reflection_matrix(double theta, double omega_c, double mass = 1.0);
Mat2 reflection_matrix_tan(double tan_theta, double omega_c, double mass = 1.0);

enum class OrbitStability { stable, unstable, marginal };

struct MonodromyData {
    Mat2 M;
    double trace = 0.0;
    OrbitStability classification = OrbitStability::marginal;
    double lambda = 0.0;        // dimensionless Lyapunov exponent (unstable)
    double lambda_T = 0.0;      // lambda / period
    double floquet_phi = 0.0;   // Floquet phase in (0, 2 pi) (stable)
    double Lambda_plus = 0.0;   // largest |eigenvalue| (unstable)
};

// Monodromy over one period, M = R_0 M_2 R_d M_1 with the orbit's bounce
// order; the per-arc fundamental matrices come from the co-integrated basis
// solutions.
Mat2 arc_fundamental_matrix(const Arc& arc);
MonodromyData classify_monodromy_matrix(const Mat2& M, double period, double marginal_tol = 1e-6);
MonodromyData monodromy_classify(const PeriodicOrbit& orbit, double marginal_tol = 1e-6);

// A solution of the equations in variation sampled along the whole orbit,
// represented per arc as a combination of the stored basis pair.
struct VariationSolution {
    // coefficients (alpha, beta) per arc: z(s) = alpha z1(s) + beta z2(s)
    std::vector<std::array<cplx, 2>> coeff;

    cplx z_at(const PeriodicOrbit& orbit, std::size_t arc_idx, double s) const;
    cplx p_at(const PeriodicOrbit& orbit, std::size_t arc_idx, double s) const;
    cplx z_node(const PeriodicOrbit& orbit, std::size_t arc_idx, std::size_t i) const;
    cplx p_node(const PeriodicOrbit& orbit, std::size_t arc_idx, std::size_t i) const;
};

struct FocalPoint {
    std::size_t arc_index;
    double s;
    Vec2 position;
};

struct FocalCensus {
    std::vector<FocalPoint> points;
    int alpha() const { return static_cast<int>(points.size()); }
};

// Floquet pair (z,p), (zbar,pbar) with the ledger normalization
// (w = 1 unstable, w = i stable), plus the focal census of z zbar.
struct FloquetData {
    MonodromyData monodromy;
    VariationSolution grow;   // (z, p)
    VariationSolution decay;  // (zbar, pbar)
    cplx wronskian;           // p zbar - pbar z (constant)
    FocalCensus census;

    cplx gamma_at(const PeriodicOrbit& orbit, std::size_t arc, double s) const;
    cplx gamma_bar_at(const PeriodicOrbit& orbit, std::size_t arc, double s) const;
    cplx zzbar_at(const PeriodicOrbit& orbit, std::size_t arc, double s) const;
};

FloquetData periodic_solutions(const PeriodicOrbit& orbit, const MonodromyData& mono);

// Standalone integrator for the equations in variation with caller-supplied
// coefficient profiles a(s), d(s); used directly by tests and by synthetic
// orbit families.
struct VariationTrace {
    std::vector<double> s;
    std::vector<cplx> z, p;
};
VariationTrace integrate_variation(const std::function<double(double)>& a_of_s,
                                   const std::function<double(double)>& d_of_s, cplx z0, cplx p0,
                                   double s_begin, double s_end, std::size_t n_samples = 512,
                                   const OdeOptions& opt = {});

}  // namespace ablscar
