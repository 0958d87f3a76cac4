#pragma once

#include <memory>

#include "common.hpp"

namespace ablscar {

// Physical setup for the strip resonator: hard walls at x=0 and x=d, a smooth
// confinement potential U(y), and a uniform perpendicular magnetic field B.
// All formulas keep hbar, mass and charge symbolic so SI-style inputs work;
// the benchmark uses natural units hbar = m = e = B = 1, d = 10, omega0 = 2.
struct SystemParams {
    double hbar = 1.0;
    double mass = 1.0;
    double charge = 1.0;
    double B = 1.0;       // signed field strength along +z
    double omega0 = 2.0;  // confinement frequency of U(y) = m omega0^2 y^2 / 2
    double d = 10.0;      // wall separation

    double eB() const { return charge * B; }
    double omega_c() const { return std::abs(eB()) / mass; }
    double magnetic_length() const {
        const double wc = omega_c();
        if (wc <= 0.0) throw InputError("magnetic length undefined for B = 0");
        return std::sqrt(hbar / (mass * wc));
    }
    // effective transverse frequency of the wall-free problem
    double Omega() const { return std::sqrt(sq(omega_c()) + sq(omega0)); }

    void validate() const;
};

// Quadratic jet of the scalar potential along a normal line:
// u(n) ~ u0 + u1 n + u2 n^2 with u1 = du/dn and u2 = (1/2) d2u/dn2.
struct PotentialJet {
    double u0 = 0.0;
    double u1 = 0.0;
    double u2 = 0.0;

    double eval(double n) const { return u0 + u1 * n + u2 * n * n; }
};

// Smooth scalar potential with analytic derivatives up to second order.
class Potential {
public:
    virtual ~Potential() = default;
    virtual double value(const Vec2& r) const = 0;
    virtual Vec2 gradient(const Vec2& r) const = 0;
    // Hessian as [uxx, uxy, uyy]
    virtual std::array<double, 3> hessian(const Vec2& r) const = 0;
};

// U(y) = m omega0^2 y^2 / 2, independent of x.
class ParabolicPotential final : public Potential {
public:
    ParabolicPotential(double mass, double omega0) : k_(mass * omega0 * omega0) {}

    double value(const Vec2& r) const override { return 0.5 * k_ * r.y * r.y; }
    Vec2 gradient(const Vec2& r) const override { return {0.0, k_ * r.y}; }
    std::array<double, 3> hessian(const Vec2&) const override { return {0.0, 0.0, k_}; }

private:
    double k_;  // m omega0^2
};

// Jet of u along the normal line through `point`.  `normal` must be a unit
// vector; the jet is exact for quadratic potentials.
PotentialJet potential_jets(const Potential& pot, const Vec2& point, const Vec2& normal);

}  // namespace ablscar
