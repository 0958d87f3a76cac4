#include "integrate.hpp"

#include <algorithm>

namespace ablscar {

namespace {

// Dormand-Prince tableau
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense output weights
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

void dense_eval(const OdeStepRecord& s, double t, double* y, std::size_t dim) {
    const double h = s.t1 - s.t0;
    const double th = (t - s.t0) / h;
    const double th1 = 1.0 - th;
    for (std::size_t i = 0; i < dim; ++i) {
        y[i] = s.r1[i] + th * (s.r2[i] + th1 * (s.r3[i] + th * (s.r4[i] + th1 * s.r5[i])));
    }
}

}  // namespace

void OdeSolution::eval(double t, double* y) const {
    // binary search for the step containing t
    auto it = std::lower_bound(steps_.begin(), steps_.end(), t,
                               [](const OdeStepRecord& s, double tt) { return s.t1 < tt; });
    if (it == steps_.end()) it = std::prev(steps_.end());
    dense_eval(*it, t, y, dim_);
}

std::vector<double> OdeSolution::eval(double t) const {
    std::vector<double> y(dim_);
    eval(t, y.data());
    return y;
}

IntegrateOutcome integrate_ode(const OdeRhs& rhs, double t0, std::vector<double> y0,
                               double t_limit, const std::vector<OdeEvent>& events,
                               const OdeOptions& opt,
                               const std::function<bool(double, const double*)>& stop) {
    const std::size_t n = y0.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);
    std::vector<double> gprev(events.size());

    IntegrateOutcome out{t0, y0, std::nullopt, OdeSolution(n)};
    OdeSolution& sol = out.dense;

    double t = t0;
    double h = std::min(opt.h_init, t_limit - t0);
    rhs(t, y0.data(), k1.data());
    for (std::size_t e = 0; e < events.size(); ++e) gprev[e] = events[e].g(t, y0.data());

    for (std::size_t step = 0; step < opt.max_steps; ++step) {
        if (t >= t_limit) break;
        h = std::min(h, t_limit - t);
        if (h < 1e-15 * std::max(1.0, std::abs(t)))
            throw NumericError("integrate_ode: step size underflow");

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y0[i] + h * a21 * k1[i];
        rhs(t + c2 * h, ytmp.data(), k2.data());
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y0[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h, ytmp.data(), k3.data());
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y0[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h, ytmp.data(), k4.data());
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y0[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * h, ytmp.data(), k5.data());
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] =
                y0[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(t + h, ytmp.data(), k6.data());
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] =
                y0[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        rhs(t + h, ynew.data(), k7.data());

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc =
                opt.atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(ynew[i]));
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                   e6 * k6[i] + e7 * k7[i]);
            err += sq(ei / sc);
        }
        err = std::sqrt(err / n);

        if (err <= 1.0) {
            // accepted: record dense coefficients
            OdeStepRecord rec;
            rec.t0 = t;
            rec.t1 = t + h;
            rec.r1.resize(n);
            rec.r2.resize(n);
            rec.r3.resize(n);
            rec.r4.resize(n);
            rec.r5.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double ydiff = ynew[i] - y0[i];
                const double bspl = h * k1[i] - ydiff;
                rec.r1[i] = y0[i];
                rec.r2[i] = ydiff;
                rec.r3[i] = bspl;
                rec.r4[i] = ydiff - h * k7[i] - bspl;
                rec.r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                                 d7 * k7[i]);
            }
            sol.steps_.push_back(std::move(rec));
            const OdeStepRecord& cur = sol.steps_.back();

            // event check on this step
            double t_next = t + h;
            bool fired = false;
            for (std::size_t e = 0; e < events.size(); ++e) {
                const double gnew = events[e].g(t_next, ynew.data());
                const bool crossed = (gprev[e] < 0 && gnew >= 0 && events[e].direction >= 0) ||
                                     (gprev[e] > 0 && gnew <= 0 && events[e].direction <= 0);
                if (crossed) {
                    // bisect on the dense interpolant
                    double lo = t, hi = t_next;
                    std::vector<double> ymid(n);
                    for (int it = 0; it < 90; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        dense_eval(cur, mid, ymid.data(), n);
                        const double gm = events[e].g(mid, ymid.data());
                        const bool same_side = (gprev[e] < 0) ? (gm < 0) : (gm > 0);
                        if (same_side)
                            lo = mid;
                        else
                            hi = mid;
                    }
                    const double te = hi;
                    dense_eval(cur, te, ymid.data(), n);
                    out.t_final = te;
                    out.y_final = ymid;
                    out.event_index = static_cast<int>(e);
                    fired = true;
                    break;
                }
                gprev[e] = gnew;
            }
            if (fired) return out;

            t = t_next;
            y0 = ynew;
            std::swap(k1, k7);  // FSAL
            out.t_final = t;
            out.y_final = y0;

            if (stop && stop(t, y0.data())) return out;

            const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 6.0);
            h = std::min(h * fac, opt.h_max);
        } else {
            const double fac = std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
            h *= fac;
        }
    }
    return out;
}

}  // namespace ablscar
