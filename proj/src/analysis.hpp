#pragma once

#include <functional>

#include "exactqm.hpp"
#include "semiclassics.hpp"

namespace ablscar {

// ---------------------------------------------------------------------------
// Husimi map of a wall function against minimal-uncertainty wavepackets
// ---------------------------------------------------------------------------

using WallFunction = std::function<cplx(double y)>;

struct HusimiMap {
    std::vector<double> y, p;       // Birkhoff grid axes
    std::vector<double> values;     // row-major [ip * ny + iy]
    double sigma = 1.0;
    double peak_y = 0.0, peak_p = 0.0, peak_value = 0.0;

    double at(std::size_t iy, std::size_t ip) const { return values[ip * y.size() + iy]; }
};

struct HusimiConfig {
    double sigma = 1.0;            // coherent-state width (default l_B)
    double y_quad_halfwidth = 0.0; // quadrature range; 0 = auto
    std::size_t quad_points = 1200;
    std::size_t ny = 61, np = 81;
    double hbar = 1.0;
};

HusimiMap husimi_map(const WallFunction& f, double y_halfwidth, double p_halfwidth,
                     const HusimiConfig& cfg);

// single Husimi value at (y0, p0)
double husimi_value(const WallFunction& f, double y0, double p0, double y_quad_halfwidth,
                    const HusimiConfig& cfg);

// median Husimi value on the energy ellipse p^2/2m + U(0,y) = E
double husimi_circle_median(const WallFunction& f, double E, const SystemParams& params,
                            double y_quad_halfwidth, const HusimiConfig& cfg);

// ---------------------------------------------------------------------------
// line profiles and parity
// ---------------------------------------------------------------------------

// |field(x, 0)| sampled on xs, then boxcar-averaged over `window`
std::vector<double> line_profile(const std::function<cplx(double, double)>& field,
                                 const std::vector<double>& xs, double window);

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

// inversion parity about (d/2, 0): returns {sign, residual} with residual the
// pointwise |f(Pq) - sign f(q)| max over samples, relative to max |f|
struct ParityResult {
    int sign = +1;
    double residual = 0.0;
    double correlation = 0.0;  // Re corr of f(Pq) against f(q)
};
ParityResult inversion_parity(const std::function<cplx(double, double)>& field, double d,
                              const std::vector<Vec2>& samples);

// ---------------------------------------------------------------------------
// comparison report
// ---------------------------------------------------------------------------

struct ScarWindowRecord {
    int n = 0;
    double E_abl = 0.0;
    double E_exact = 0.0;        // best scar carrier in the window
    double scar_spacing = 0.0;   // local spacing of ABL energies
    double energy_err_frac = 0.0;
    int n_scarred = 0;           // states passing the scar detector in window
    int parity_exact = 0;
    int parity_expected = 0;
    double abl_parity_residual = 0.0;
    double husimi_peak_y = 0.0, husimi_peak_p = 0.0;
    double husimi_offset = 0.0;  // distance of the peak from the orbit point
    double profile_correlation = 0.0;
    bool pass_energy = false;
    bool pass_single = false;
    bool pass_husimi = false;
    bool pass_parity = false;
    bool pass_profile = false;
};

struct ComparisonOptions {
    double husimi_sigma = 1.0;
    double scar_ratio_threshold = 3.0;   // H(orbit) >= threshold x circle median
    double profile_x_max_frac = 0.15;    // profile support [0, frac d]
    double profile_window_frac = 0.05;   // boxcar width in units of d
    double energy_tol_frac = 0.05;       // of the local scar spacing
    std::size_t profile_points = 160;
};

struct ComparisonReport {
    std::vector<ScarWindowRecord> records;
    bool all_energy = true, all_single = true, all_husimi = true, all_parity = true,
         all_profile = true;
    std::string provenance;
};

ComparisonReport compare_report(std::vector<ABLState>& abl_states, const GalerkinSolver& solver,
                                const ComparisonOptions& opt);

}  // namespace ablscar
