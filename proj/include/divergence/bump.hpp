#pragma once

#include <vector>

#include "divergence/common.hpp"

namespace divergence::construction {

// phi = psi^2, psi_hat(xi) = exp(-1/(1-(2xi)^2)) / Z on |xi| < 1/2, tabulated on a
// uniform grid of (-1,1) with trapezoid weights
class BumpProfile {
public:
    static BumpProfile smooth(int intervals = 4096);
    // phi_hat = delta_0; U phi == 1
    static BumpProfile point_mass();

    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& values() const { return values_; }  // phi_hat at nodes
    std::size_t size() const { return nodes_.size(); }

    // U phi(y, tau) = int phi_hat(eta) e^{i(-pi tau eta^2 + 2 pi y eta)} d eta
    cplx propagate(double y, double tau) const;
    // same, on every other node; used for grid-doubling checks
    cplx propagate_coarse(double y, double tau) const;
    // throws when the two disagree beyond tol
    cplx propagate_checked(double y, double tau, double tol = 1e-6) const;

    double value(double x) const { return propagate(x, 0.0).real(); }
    // ||phi||_2 by Plancherel on the frequency grid
    double l2_norm() const;

private:
    std::vector<double> nodes_, weights_, values_;
    bool coarse_ok_ = false;
};

// ||phi||_2 from x-space quadrature of phi^2 on [-L, L]
double bump_l2_norm_spatial(const BumpProfile& b, double L = 40.0, int steps = 8000);

}  // namespace divergence::construction
