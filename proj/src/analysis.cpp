#include "analysis.hpp"

#include <algorithm>
#include <numeric>

namespace ablscar {

namespace {

// trapezoid overlap of a normalized coherent state with f on a uniform grid
double husimi_overlap2(const std::vector<double>& yg, const std::vector<cplx>& fv, double y0,
                       double p0, double sigma, double hbar) {
    const double norm = std::pow(kPi * sigma * sigma, -0.25);
    cplx acc = 0.0;
    for (std::size_t i = 0; i < yg.size(); ++i) {
        const double dy = yg[i] - y0;
        const cplx g = norm * std::exp(cplx(-dy * dy / (2.0 * sigma * sigma), -p0 * dy / hbar));
        // conj(g) f
        double w = (i == 0 || i + 1 == yg.size()) ? 0.5 : 1.0;
        acc += w * g * fv[i];
    }
    acc *= (yg[1] - yg[0]);
    return std::norm(acc);
}

}  // namespace

double husimi_value(const WallFunction& f, double y0, double p0, double y_quad_halfwidth,
                    const HusimiConfig& cfg) {
    if (cfg.sigma <= 0.0) throw InputError("husimi: sigma must be positive");
    std::vector<double> yg(cfg.quad_points);
    std::vector<cplx> fv(cfg.quad_points);
    for (std::size_t i = 0; i < cfg.quad_points; ++i) {
        yg[i] = -y_quad_halfwidth + 2.0 * y_quad_halfwidth * i / (cfg.quad_points - 1);
        fv[i] = f(yg[i]);
    }
    return husimi_overlap2(yg, fv, y0, p0, cfg.sigma, cfg.hbar);
}

HusimiMap husimi_map(const WallFunction& f, double y_halfwidth, double p_halfwidth,
                     const HusimiConfig& cfg) {
    if (cfg.sigma <= 0.0) throw InputError("husimi_map: sigma must be positive");
    const double yq = (cfg.y_quad_halfwidth > 0.0) ? cfg.y_quad_halfwidth
                                                   : y_halfwidth + 6.0 * cfg.sigma;
    std::vector<double> yg(cfg.quad_points);
    std::vector<cplx> fv(cfg.quad_points);
    for (std::size_t i = 0; i < cfg.quad_points; ++i) {
        yg[i] = -yq + 2.0 * yq * i / (cfg.quad_points - 1);
        fv[i] = f(yg[i]);
    }

    HusimiMap map;
    map.sigma = cfg.sigma;
    map.y.resize(cfg.ny);
    map.p.resize(cfg.np);
    for (std::size_t i = 0; i < cfg.ny; ++i)
        map.y[i] = -y_halfwidth + 2.0 * y_halfwidth * i / (cfg.ny - 1);
    for (std::size_t i = 0; i < cfg.np; ++i)
        map.p[i] = -p_halfwidth + 2.0 * p_halfwidth * i / (cfg.np - 1);
    map.values.resize(cfg.ny * cfg.np);
    for (std::size_t ip = 0; ip < cfg.np; ++ip) {
        for (std::size_t iy = 0; iy < cfg.ny; ++iy) {
            const double h = husimi_overlap2(yg, fv, map.y[iy], map.p[ip], cfg.sigma, cfg.hbar);
            map.values[ip * cfg.ny + iy] = h;
            if (h > map.peak_value) {
                map.peak_value = h;
                map.peak_y = map.y[iy];
                map.peak_p = map.p[ip];
            }
        }
    }
    return map;
}

double husimi_circle_median(const WallFunction& f, double E, const SystemParams& params,
                            double y_quad_halfwidth, const HusimiConfig& cfg) {
    const double y_amp = std::sqrt(2.0 * E / (params.mass * sq(params.omega0)));
    const double p_amp = std::sqrt(2.0 * params.mass * E);
    std::vector<double> vals;
    const int nth = 48;
    for (int i = 0; i < nth; ++i) {
        const double th = 2.0 * kPi * i / nth;
        vals.push_back(husimi_value(f, y_amp * std::cos(th), p_amp * std::sin(th),
                                    y_quad_halfwidth, cfg));
    }
    std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
    return vals[vals.size() / 2];
}

std::vector<double> line_profile(const std::function<cplx(double, double)>& field,
                                 const std::vector<double>& xs, double window) {
    std::vector<double> raw(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) raw[i] = std::abs(field(xs[i], 0.0));
    if (xs.size() < 2) return raw;
    const double dx = xs[1] - xs[0];
    if (window < dx) throw InputError("line_profile: averaging window below the grid step");
    const int half = static_cast<int>(std::floor(0.5 * window / dx));
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double acc = 0.0;
        int cnt = 0;
        for (int j = -half; j <= half; ++j) {
            const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(i) + j;
            if (k < 0 || k >= static_cast<std::ptrdiff_t>(xs.size())) continue;
            acc += raw[k];
            ++cnt;
        }
        out[i] = acc / cnt;
    }
    return out;
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw InputError("pearson_correlation: size mismatch");
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += sq(a[i] - ma);
        sbb += sq(b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

ParityResult inversion_parity(const std::function<cplx(double, double)>& field, double d,
                              const std::vector<Vec2>& samples) {
    double max_abs = 0.0;
    cplx cross = 0.0;
    double self = 0.0;
    std::vector<std::pair<cplx, cplx>> pairs;
    for (const auto& q : samples) {
        const cplx v = field(q.x, q.y);
        const cplx vp = field(d - q.x, -q.y);
        pairs.push_back({v, vp});
        max_abs = std::max({max_abs, std::abs(v), std::abs(vp)});
        cross += vp * std::conj(v);
        self += std::norm(v);
    }
    ParityResult res;
    res.correlation = (self > 0) ? (cross.real() / self) : 0.0;
    res.sign = (res.correlation >= 0.0) ? +1 : -1;
    double worst = 0.0;
    for (const auto& [v, vp] : pairs)
        worst = std::max(worst, std::abs(vp - static_cast<double>(res.sign) * v));
    res.residual = (max_abs > 0) ? worst / max_abs : 0.0;
    return res;
}

ComparisonReport compare_report(std::vector<ABLState>& abl_states, const GalerkinSolver& solver,
                                const ComparisonOptions& opt) {
    if (abl_states.empty()) throw InputError("compare_report: no ABL states");
    std::sort(abl_states.begin(), abl_states.end(),
              [](const ABLState& a, const ABLState& b) { return a.n < b.n; });

    const SystemParams& params = abl_states.front().params;
    const double d = params.d;

    ComparisonReport rep;
    for (std::size_t i = 0; i < abl_states.size(); ++i) {
        ABLState& st = abl_states[i];
        ScarWindowRecord rec;
        rec.n = st.n;
        rec.E_abl = st.energy;
        // local scar spacing from the neighbours
        if (i + 1 < abl_states.size())
            rec.scar_spacing = abl_states[i + 1].energy - st.energy;
        else
            rec.scar_spacing = st.energy - abl_states[i - 1].energy;

        // orbit Birkhoff point at the x = 0 wall
        double p_orb = 0.0;
        for (const auto& b : st.orbit.bounces)
            if (std::abs(b.wall_x) < 0.5 * d) p_orb = params.mass * b.v_in.y;

        // window of exact states
        const double half = 0.5 * rec.scar_spacing;
        const auto win = solver.levels_in(st.energy - half, st.energy + half);

        const double y_amp = std::sqrt(2.0 * st.energy / (params.mass * sq(params.omega0)));
        HusimiConfig hc;
        hc.sigma = opt.husimi_sigma;
        hc.hbar = params.hbar;
        const double yq = y_amp * 1.4;

        double best_val = -1.0;
        GalerkinLevel best_lv;
        HusimiMap best_map;
        int n_scarred = 0;
        for (const auto& lv : win) {
            WallFunction f = [&](double y) { return solver.wall_dx(lv, 0.0, y); };
            // normalize the wall function for comparable magnitudes
            double nrm = 0.0;
            {
                const std::size_t nq = 600;
                for (std::size_t k = 0; k < nq; ++k) {
                    const double y = -yq + 2.0 * yq * k / (nq - 1);
                    nrm += std::norm(f(y));
                }
                nrm = std::sqrt(nrm * (2.0 * yq / (nq - 1)));
            }
            if (nrm == 0.0) continue;
            WallFunction fn = [f, nrm](double y) { return f(y) / nrm; };

            const double h_orb = husimi_value(fn, 0.0, p_orb, yq, hc);
            const double med = husimi_circle_median(fn, lv.energy, params, yq, hc);
            const bool ratio_pass = h_orb > opt.scar_ratio_threshold * std::max(med, 1e-300);
            if (!ratio_pass) continue;
            // peak localization at the orbit point
            HusimiMap map = husimi_map(fn, 0.8 * y_amp,
                                       1.05 * std::sqrt(2.0 * params.mass * lv.energy), hc);
            const double off = std::hypot(map.peak_y - 0.0, map.peak_p - p_orb);
            const bool peak_pass = off <= 3.0 * hc.sigma;  // coarse gate for counting
            if (!peak_pass) continue;
            ++n_scarred;
            if (h_orb > best_val) {
                best_val = h_orb;
                best_lv = lv;
                best_map = map;
            }
        }
        rec.n_scarred = n_scarred;
        rec.pass_single = (n_scarred == 1);

        if (best_val > 0.0) {
            rec.E_exact = best_lv.energy;
            rec.parity_exact = best_lv.parity;
            rec.energy_err_frac = std::abs(rec.E_exact - rec.E_abl) / rec.scar_spacing;
            rec.pass_energy = rec.energy_err_frac < opt.energy_tol_frac;
            rec.husimi_peak_y = best_map.peak_y;
            rec.husimi_peak_p = best_map.peak_p;
            rec.husimi_offset = std::hypot(best_map.peak_y, best_map.peak_p - p_orb);
            rec.pass_husimi = rec.husimi_offset <= opt.husimi_sigma;

            // parity: odd n symmetric, even n antisymmetric
            rec.parity_expected = (rec.n % 2 == 1) ? +1 : -1;

            // profile comparison on y = 0, x in [0, frac d]
            std::vector<double> xs(opt.profile_points);
            for (std::size_t k = 0; k < xs.size(); ++k)
                xs[k] = opt.profile_x_max_frac * d * k / (xs.size() - 1);
            auto abl_field = [&st](double x, double y) { return st.field({x, y}); };
            auto ex_field = [&](double x, double y) { return solver.value(best_lv, x, y); };
            const double window = opt.profile_window_frac * d;
            const auto pa = line_profile(abl_field, xs, window);
            const auto pe = line_profile(ex_field, xs, window);
            rec.profile_correlation = pearson_correlation(pa, pe);
            rec.pass_profile = rec.profile_correlation >= 0.9;

            // ABL parity residual + exact sign consistency
            std::vector<Vec2> samples;
            for (int k = 0; k < 60; ++k) {
                const double x = 0.08 * d + 0.84 * d * ((k * 37) % 60) / 60.0;
                const double y = -0.55 * y_amp + 1.1 * y_amp * ((k * 23) % 60) / 60.0;
                samples.push_back({x, y});
            }
            auto par_abl = inversion_parity(abl_field, d, samples);
            auto par_ex = inversion_parity(ex_field, d, samples);
            rec.abl_parity_residual = par_abl.residual;
            rec.pass_parity = (par_abl.sign == rec.parity_expected) &&
                              (par_abl.residual < 1e-2) &&
                              (par_ex.sign == rec.parity_expected) &&
                              (rec.parity_exact == rec.parity_expected);
        }
        rep.all_energy &= rec.pass_energy;
        rep.all_single &= rec.pass_single;
        rep.all_husimi &= rec.pass_husimi;
        rep.all_parity &= rec.pass_parity;
        rep.all_profile &= rec.pass_profile;
        rep.records.push_back(rec);
    }
    return rep;
}

}  // namespace ablscar
