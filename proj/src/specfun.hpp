#pragma once

#include "common.hpp"

namespace ablscar {

struct AccuracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SpecFunConfig {
    double series_tolerance = 1e-14;
    double d_switch_radius = 6.0;   // series -> asymptotic for D_xi
    double j_switch_x = 14.0;       // series -> Hankel for J_{+-1/4}
    int max_terms = 400;

    void validate() const {
        if (!(series_tolerance > 0 && series_tolerance <= 1e-6))
            throw InputError("series_tolerance out of range");
        if (d_switch_radius <= 0 || j_switch_x <= 0) throw InputError("switch radius must be > 0");
    }
};

// Physicists' Hermite polynomial by the three-term recurrence.
double hermite(int m, double x);

// Gamma function for complex argument (Lanczos + reflection).
cplx gamma_cplx(cplx z);
cplx log_gamma_cplx(cplx z);

// Kummer confluent hypergeometric M(a, b, x) by series; throws AccuracyError
// when cancellation eats more than ~1e6 x tolerance of the result.
cplx kummer_m(cplx a, cplx b, cplx x, const SpecFunConfig& cfg = {});

// Parabolic cylinder function D_xi(z), complex order and argument.
cplx parabolic_cylinder_d(cplx xi, cplx z, const SpecFunConfig& cfg = {});

// Bessel J of real order nu > -1 at x >= 0 (series / Hankel asymptotics).
// The artifact needs nu = -1/4 (and +1/4 for test identities).
double bessel_j(double nu, double x, const SpecFunConfig& cfg = {});
inline double bessel_j_m14(double x, const SpecFunConfig& cfg = {}) {
    return bessel_j(-0.25, x, cfg);
}

// Normalized harmonic-oscillator functions phi_0..phi_nmax at (complex) xi:
// phi_n(xi) = pi^{-1/4} (2^n n!)^{-1/2} H_n(xi) exp(-xi^2/2), by the stable
// normalized recurrence.
std::vector<cplx> oscillator_phi_all(int nmax, cplx xi);

}  // namespace ablscar
