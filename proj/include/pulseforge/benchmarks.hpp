#pragma once

// Reproducible random benchmark signals shared by the scenarios and tests.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "pulseforge/core.hpp"

namespace pulseforge {

/// Uniform [0, 1) from the raw engine output, identical on every platform.
class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : engine_(seed) {}
    double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }

private:
    std::mt19937_64 engine_;
};

/// T_ij(t) = a_ij + b_ij sin(w_ij t + p_ij) on the upper triangle, Hermitian
/// completion below, zero diagonal.
struct SmoothHoppings {
    Eigen::MatrixXcd offset;
    Eigen::MatrixXcd amplitude;
    Eigen::MatrixXd frequency;
    Eigen::MatrixXd shift;

    SmoothHoppings(Eigen::Index sites, Uniform& rng)
        : offset(Eigen::MatrixXcd::Zero(sites, sites)),
          amplitude(Eigen::MatrixXcd::Zero(sites, sites)),
          frequency(Eigen::MatrixXd::Zero(sites, sites)), shift(Eigen::MatrixXd::Zero(sites, sites))
    {
        for (Eigen::Index i = 0; i < sites; ++i) {
            for (Eigen::Index j = i + 1; j < sites; ++j) {
                offset(i, j) = std::polar(rng(0.2, 0.6), rng(0.0, 2.0 * std::numbers::pi));
                amplitude(i, j) = std::polar(rng(0.1, 0.4), rng(0.0, 2.0 * std::numbers::pi));
                frequency(i, j) = rng(0.5, 3.0);
                shift(i, j) = rng(0.0, 2.0 * std::numbers::pi);
            }
        }
    }

    Eigen::MatrixXcd operator()(double t) const
    {
        const Eigen::Index m = offset.rows();
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = i + 1; j < m; ++j) {
                h(i, j) = offset(i, j) + amplitude(i, j) * std::sin(frequency(i, j) * t + shift(i, j));
                h(j, i) = std::conj(h(i, j));
            }
        }
        return h;
    }
};

/// Normalized state with moduli drawn from [0.5, 1) before normalization and
/// random phases.
inline Eigen::VectorXcd random_nodeless_state(Eigen::Index sites, Uniform& rng)
{
    Eigen::VectorXcd psi(sites);
    for (Eigen::Index i = 0; i < sites; ++i)
        psi[i] = std::polar(rng(0.5, 1.0), rng(0.0, 2.0 * std::numbers::pi));
    return psi.normalized();
}

} // namespace pulseforge
