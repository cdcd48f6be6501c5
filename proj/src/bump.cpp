#include "divergence/bump.hpp"

#include <cmath>

namespace divergence::construction {

namespace {
double psi_hat_raw(double xi) {
    double u = 2.0 * xi;
    if (std::abs(u) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - u * u));
}
}  // namespace

BumpProfile BumpProfile::smooth(int intervals) {
    require(intervals >= 16 && intervals % 4 == 0, "bump grid intervals divisible by 4");
    BumpProfile b;
    const double h = 2.0 / intervals;
    // psi_hat on the half-grid -1/2 + j h
    const int m = intervals / 2;
    std::vector<double> ps(m + 1);
    double z = 0;
    for (int j = 0; j <= m; ++j) {
        ps[j] = psi_hat_raw(-0.5 + j * h);
        z += h * ps[j];
    }
    for (double& v : ps) v /= z;
    // discrete convolution; eta_i = -1 + i h, eta_i - xi_j = -1/2 + (i - j) h
    b.nodes_.resize(intervals + 1);
    b.values_.assign(intervals + 1, 0.0);
    b.weights_.assign(intervals + 1, h);
    for (int i = 0; i <= intervals; ++i) {
        b.nodes_[i] = -1.0 + i * h;
        double s = 0;
        for (int j = 0; j <= m; ++j) {
            int k = i - j;
            if (k >= 0 && k <= m) s += ps[j] * ps[k];
        }
        b.values_[i] = h * s;
    }
    b.coarse_ok_ = true;
    return b;
}

BumpProfile BumpProfile::point_mass() {
    BumpProfile b;
    b.nodes_ = {0.0};
    b.weights_ = {1.0};
    b.values_ = {1.0};
    return b;
}

cplx BumpProfile::propagate(double y, double tau) const {
    cplx s = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        double e = nodes_[i];
        if (values_[i] == 0.0) continue;
        s += weights_[i] * values_[i] * unit(-0.5 * tau * e * e + y * e);
    }
    return s;
}

cplx BumpProfile::propagate_coarse(double y, double tau) const {
    if (!coarse_ok_) return propagate(y, tau);
    cplx s = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); i += 2) {
        double e = nodes_[i];
        if (values_[i] == 0.0) continue;
        s += 2.0 * weights_[i] * values_[i] * unit(-0.5 * tau * e * e + y * e);
    }
    return s;
}

cplx BumpProfile::propagate_checked(double y, double tau, double tol) const {
    cplx fine = propagate(y, tau);
    if (coarse_ok_ && std::abs(fine - propagate_coarse(y, tau)) > tol)
        throw InvariantViolation("bump quadrature did not converge under grid doubling");
    return fine;
}

double BumpProfile::l2_norm() const {
    double s = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) s += weights_[i] * values_[i] * values_[i];
    return std::sqrt(s);
}

double bump_l2_norm_spatial(const BumpProfile& b, double L, int steps) {
    // phi is even; Simpson on [0, L]
    double h = L / steps, s = 0;
    for (int i = 0; i <= steps; ++i) {
        double v = b.value(i * h);
        double w = (i == 0 || i == steps) ? 1 : (i % 2 ? 4 : 2);
        s += w * v * v;
    }
    return std::sqrt(2.0 * s * h / 3.0);
}

}  // namespace divergence::construction
