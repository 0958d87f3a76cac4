#pragma once

#include <functional>
#include <optional>

#include "common.hpp"

namespace ablscar {

// Dormand-Prince 5(4) with PI step control, 4th-order dense output and event
// location on the dense interpolant.  State dimension is fixed per run.

using OdeRhs = std::function<void(double t, const double* y, double* dydt)>;
// event fires when g crosses zero with the requested direction (+1 upward,
// -1 downward, 0 any)
struct OdeEvent {
    std::function<double(double t, const double* y)> g;
    int direction = 0;
};

struct OdeOptions {
    double rtol = 1e-12;
    double atol = 1e-12;
    double h_init = 1e-3;
    double h_max = 0.1;
    std::size_t max_steps = 2'000'000;
};

struct OdeStepRecord {
    double t0, t1;
    std::vector<double> r1, r2, r3, r4, r5;  // dense-output coefficients
};

class OdeSolution {
public:
    OdeSolution(std::size_t dim) : dim_(dim) {}

    void eval(double t, double* y) const;
    std::vector<double> eval(double t) const;

    double t_begin() const { return steps_.front().t0; }
    double t_end() const { return steps_.back().t1; }
    const std::vector<OdeStepRecord>& steps() const { return steps_; }
    std::size_t dim() const { return dim_; }

    std::vector<OdeStepRecord> steps_;
    std::size_t dim_;
};

struct IntegrateOutcome {
    double t_final = 0.0;
    std::vector<double> y_final;
    std::optional<int> event_index;  // which event terminated the run
    OdeSolution dense;
};

// Integrates from (t0, y0) until one of the events fires, the stop predicate
// returns true, or t reaches t_limit.  Throws NumericError on step underflow.
IntegrateOutcome integrate_ode(const OdeRhs& rhs, double t0, std::vector<double> y0,
                               double t_limit, const std::vector<OdeEvent>& events,
                               const OdeOptions& opt,
                               const std::function<bool(double, const double*)>& stop = nullptr);

}  // namespace ablscar
