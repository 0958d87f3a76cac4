#include "model.hpp"

namespace ablscar {

void SystemParams::validate() const {
    if (hbar <= 0.0) throw InputError("hbar must be positive");
    if (mass <= 0.0) throw InputError("mass must be positive");
    if (d <= 0.0) throw InputError("wall separation d must be positive");
    if (omega0 < 0.0) throw InputError("omega0 must be non-negative");
}

PotentialJet potential_jets(const Potential& pot, const Vec2& point, const Vec2& normal) {
    const double nn = normal.norm();
    if (std::abs(nn - 1.0) > 1e-8) throw InputError("potential_jets: normal is not a unit vector");

    PotentialJet jet;
    jet.u0 = pot.value(point);
    jet.u1 = pot.gradient(point).dot(normal);
    const auto h = pot.hessian(point);
    jet.u2 = 0.5 * (h[0] * normal.x * normal.x + 2.0 * h[1] * normal.x * normal.y +
                    h[2] * normal.y * normal.y);
    return jet;
}

}  // namespace ablscar
