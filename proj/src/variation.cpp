#include "variation.hpp"

#include <algorithm>

namespace ablscar {

Mat2 reflection_matrix(double theta, double omega_c, double mass) {
    if (std::abs(theta) >= 0.5 * kPi - 1e-9)
        throw InputError("reflection_matrix: grazing incidence");
    return reflection_matrix_tan(std::tan(theta), omega_c, mass);
}

Mat2 reflection_matrix_tan(double tan_theta, double omega_c, double mass) {
    Mat2 R;
    R.a11 = -1.0;
    R.a12 = 0.0;
    R.a21 = -2.0 * mass * omega_c * tan_theta;
    R.a22 = -1.0;
    return R;
}

Mat2 arc_fundamental_matrix(const Arc& arc) {
    Mat2 M;
    M.a11 = arc.leg_matrix.a11;
    M.a12 = arc.leg_matrix.a12;
    M.a21 = arc.leg_matrix.a21;
    M.a22 = arc.leg_matrix.a22;
    return M;
}

namespace {

Mat2 bounce_matrix(const PeriodicOrbit& orbit, const ReflectionEvent& b) {
    return reflection_matrix_tan(b.tan_theta, orbit.params.omega_c(), orbit.params.mass);
}

}  // namespace

MonodromyData classify_monodromy_matrix(const Mat2& M, double period, double marginal_tol) {
    MonodromyData out;
    out.M = M;
    out.trace = M.trace();
    const double tr = out.trace;
    if (std::abs(std::abs(tr) - 2.0) <= marginal_tol) {
        out.classification = OrbitStability::marginal;
        out.lambda = 0.0;
        out.floquet_phi = (tr > 0) ? 0.0 : kPi;
    } else if (std::abs(tr) > 2.0) {
        out.classification = OrbitStability::unstable;
        const double half = 0.5 * std::abs(tr);
        out.Lambda_plus = half + std::sqrt(half * half - 1.0);
        out.lambda = std::log(out.Lambda_plus);
    } else {
        out.classification = OrbitStability::stable;
        out.floquet_phi = std::acos(std::clamp(0.5 * tr, -1.0, 1.0));
    }
    if (period > 0) out.lambda_T = out.lambda / period;
    return out;
}

MonodromyData monodromy_classify(const PeriodicOrbit& orbit, double marginal_tol) {
    if (orbit.arcs.size() != orbit.bounces.size())
        throw InputError("monodromy_classify: arcs/bounces mismatch");
    Mat2 M = Mat2::identity();
    for (std::size_t i = 0; i < orbit.arcs.size(); ++i) {
        M = arc_fundamental_matrix(orbit.arcs[i]) * M;
        M = bounce_matrix(orbit, orbit.bounces[i]) * M;
    }
    return classify_monodromy_matrix(M, orbit.period, marginal_tol);
}

cplx VariationSolution::z_node(const PeriodicOrbit& orbit, std::size_t k, std::size_t i) const {
    const Arc& arc = orbit.arcs[k];
    return coeff[k][0] * arc.z1[i] + coeff[k][1] * arc.z2[i];
}
cplx VariationSolution::p_node(const PeriodicOrbit& orbit, std::size_t k, std::size_t i) const {
    const Arc& arc = orbit.arcs[k];
    return coeff[k][0] * arc.p1[i] + coeff[k][1] * arc.p2[i];
}

namespace {

// cubic Hermite on the arc grid for a basis combination, using z' = p / a
cplx hermite_combo(const Arc& arc, const std::array<cplx, 2>& c, double s_query) {
    const std::size_t i = arc.bracket_index(s_query);
    const double h = arc.s[i + 1] - arc.s[i];
    const double u = (s_query - arc.s[i]) / h;
    const cplx z0 = c[0] * arc.z1[i] + c[1] * arc.z2[i];
    const cplx z1v = c[0] * arc.z1[i + 1] + c[1] * arc.z2[i + 1];
    const cplx m0 = (c[0] * arc.p1[i] + c[1] * arc.p2[i]) / arc.a[i];
    const cplx m1 = (c[0] * arc.p1[i + 1] + c[1] * arc.p2[i + 1]) / arc.a[i + 1];
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2,
                 h11 = u3 - u2;
    return z0 * h00 + m0 * (h * h10) + z1v * h01 + m1 * (h * h11);
}

cplx linear_combo_p(const Arc& arc, const std::array<cplx, 2>& c, double s_query) {
    const std::size_t i = arc.bracket_index(s_query);
    const double u = (s_query - arc.s[i]) / (arc.s[i + 1] - arc.s[i]);
    const cplx p0 = c[0] * arc.p1[i] + c[1] * arc.p2[i];
    const cplx p1v = c[0] * arc.p1[i + 1] + c[1] * arc.p2[i + 1];
    return p0 + (p1v - p0) * u;
}

}  // namespace

cplx VariationSolution::z_at(const PeriodicOrbit& orbit, std::size_t k, double s) const {
    return hermite_combo(orbit.arcs[k], coeff[k], s);
}
cplx VariationSolution::p_at(const PeriodicOrbit& orbit, std::size_t k, double s) const {
    return linear_combo_p(orbit.arcs[k], coeff[k], s);
}

cplx FloquetData::gamma_at(const PeriodicOrbit& orbit, std::size_t arc, double s) const {
    return grow.p_at(orbit, arc, s) / grow.z_at(orbit, arc, s);
}
cplx FloquetData::gamma_bar_at(const PeriodicOrbit& orbit, std::size_t arc, double s) const {
    return decay.p_at(orbit, arc, s) / decay.z_at(orbit, arc, s);
}
cplx FloquetData::zzbar_at(const PeriodicOrbit& orbit, std::size_t arc, double s) const {
    return grow.z_at(orbit, arc, s) * decay.z_at(orbit, arc, s);
}

FloquetData periodic_solutions(const PeriodicOrbit& orbit, const MonodromyData& mono) {
    FloquetData out;
    out.monodromy = mono;

    cplx vg_z, vg_p, vd_z, vd_p;
    if (mono.classification == OrbitStability::unstable) {
        // real eigenvectors of M for eigenvalues Lambda, 1/Lambda
        const Mat2& M = mono.M;
        const double sgn = (mono.trace >= 0) ? 1.0 : -1.0;
        const double lamP = sgn * mono.Lambda_plus;
        const double lamM = sgn / mono.Lambda_plus;
        auto eigvec = [&](double lam, double& vz, double& vp) {
            // (M - lam I) v = 0; pick the better-conditioned row
            const double r1n = std::hypot(M.a11 - lam, M.a12);
            const double r2n = std::hypot(M.a21, M.a22 - lam);
            if (r1n >= r2n) {
                vz = -M.a12;
                vp = M.a11 - lam;
            } else {
                vz = -(M.a22 - lam);
                vp = M.a21;
            }
            const double nn = std::hypot(vz, vp);
            vz /= nn;
            vp /= nn;
            if (vz < 0 || (vz == 0 && vp < 0)) {
                vz = -vz;
                vp = -vp;
            }
        };
        double gz, gp, dz, dp;
        eigvec(lamP, gz, gp);
        eigvec(lamM, dz, dp);
        // Wronskian normalization: w = p zbar - pbar z = 1
        const double w0 = gp * dz - dp * gz;
        if (std::abs(w0) < 1e-12)
            throw NumericError("periodic_solutions: degenerate eigenvectors (marginal orbit)");
        vg_z = gz;
        vg_p = gp;
        vd_z = dz / w0;
        vd_p = dp / w0;
        out.wronskian = 1.0;
    } else if (mono.classification == OrbitStability::stable) {
        // complex eigenvector with Im Gamma > 0; partner is the conjugate
        const Mat2& M = mono.M;
        const double c = 0.5 * mono.trace;
        const double simag = std::sqrt(std::max(0.0, 1.0 - c * c));
        // eigenvalue lam = c + i s_im with the sheet fixed below
        const cplx lam(c, simag);
        cplx vz = -cplx(M.a12, 0.0);
        cplx vp = cplx(M.a11, 0.0) - lam;
        if (std::abs(M.a12) < 1e-14) {
            vz = lam - cplx(M.a22, 0.0);
            vp = cplx(M.a21, 0.0);
        }
        cplx gamma = vp / vz;
        if (gamma.imag() < 0) {
            vz = std::conj(vz);
            vp = std::conj(vp);
        }
        // scale so that w = p zbar - pbar z = i  (zbar = conj z)
        const cplx w0 = vp * std::conj(vz) - std::conj(vp) * vz;  // purely imaginary
        const double scale = std::sqrt(1.0 / std::abs(w0.imag()));
        vz *= scale;
        vp *= scale;
        if (vp.imag() * vz.real() - vp.real() * vz.imag() < 0) {
            // ensure w = +i, not -i
            vz = std::conj(vz);
            vp = std::conj(vp);
        }
        vg_z = vz;
        vg_p = vp;
        vd_z = std::conj(vz);
        vd_p = std::conj(vp);
        out.wronskian = vg_p * vd_z - vd_p * vg_z;
    } else {
        throw NumericError("periodic_solutions: marginal orbit");
    }

    // chain the initial vectors through arcs and bounces
    auto chain = [&](cplx z0, cplx p0) {
        VariationSolution sol;
        cplx z = z0, p = p0;
        for (std::size_t i = 0; i < orbit.arcs.size(); ++i) {
            sol.coeff.push_back({z, p});
            const Mat2 Mi = arc_fundamental_matrix(orbit.arcs[i]);
            const cplx ze = Mi.a11 * z + Mi.a12 * p;
            const cplx pe = Mi.a21 * z + Mi.a22 * p;
            const Mat2 R = bounce_matrix(orbit, orbit.bounces[i]);
            z = R.a11 * ze + R.a12 * pe;
            p = R.a21 * ze + R.a22 * pe;
        }
        return sol;
    };
    out.grow = chain(vg_z, vg_p);
    out.decay = chain(vd_z, vd_p);

    // focal census: zeros of Re(z zbar) along the period (z zbar is real for
    // the unstable pair and strictly positive for the stable pair)
    if (mono.classification == OrbitStability::unstable) {
        for (std::size_t k = 0; k < orbit.arcs.size(); ++k) {
            const Arc& arc = orbit.arcs[k];
            auto g_node = [&](std::size_t i) {
                return (out.grow.z_node(orbit, k, i) * out.decay.z_node(orbit, k, i)).real();
            };
            // census runs over the physical leg only
            std::size_t i_begin = arc.bracket_index(arc.s_phys_begin);
            std::size_t i_end = arc.bracket_index(arc.s_phys_end) + 1;
            double gprev = g_node(i_begin);
            for (std::size_t i = i_begin + 1; i <= i_end && i < arc.s.size(); ++i) {
                const double gcur = g_node(i);
                if ((gprev < 0 && gcur >= 0) || (gprev > 0 && gcur <= 0)) {
                    double lo = arc.s[i - 1], hi = arc.s[i];
                    auto g_of = [&](double s) {
                        return (out.grow.z_at(orbit, k, s) * out.decay.z_at(orbit, k, s)).real();
                    };
                    double glo = g_of(lo);
                    for (int it = 0; it < 60; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        const double gm = g_of(mid);
                        if ((glo < 0) == (gm < 0)) {
                            lo = mid;
                            glo = gm;
                        } else {
                            hi = mid;
                        }
                    }
                    const double s_star = 0.5 * (lo + hi);
                    out.census.points.push_back({k, s_star, arc.position_at(s_star)});
                }
                gprev = gcur;
            }
        }
    }
    return out;
}

VariationTrace integrate_variation(const std::function<double(double)>& a_of_s,
                                   const std::function<double(double)>& d_of_s, cplx z0, cplx p0,
                                   double s_begin, double s_end, std::size_t n_samples,
                                   const OdeOptions& opt) {
    // z' = p / a, p' = -a d z, split into real and imaginary parts
    OdeRhs rhs = [&](double s, const double* y, double* dy) {
        const double a = a_of_s(s);
        const double dd = d_of_s(s);
        dy[0] = y[2] / a;
        dy[1] = y[3] / a;
        dy[2] = -a * dd * y[0];
        dy[3] = -a * dd * y[1];
    };
    VariationTrace tr;
    tr.s.resize(n_samples);
    tr.z.resize(n_samples);
    tr.p.resize(n_samples);
    auto out = integrate_ode(rhs, s_begin, {z0.real(), z0.imag(), p0.real(), p0.imag()}, s_end, {},
                             opt);
    std::vector<double> buf(4);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double s = s_begin + (s_end - s_begin) * static_cast<double>(i) / (n_samples - 1);
        out.dense.eval(std::min(s, out.t_final), buf.data());
        tr.s[i] = s;
        tr.z[i] = {buf[0], buf[1]};
        tr.p[i] = {buf[2], buf[3]};
    }
    return tr;
}

}  // namespace ablscar
