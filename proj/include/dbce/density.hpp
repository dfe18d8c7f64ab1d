#pragma once

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "dbce/occupancy.hpp"

namespace dbce {

enum class DensityKind { MinDensity, FrequencyMatch, DensityGap };

/// Density-based selection criterion over weighted state sets.
///
/// MinDensity      phi(f) = sum_s w1(s) rho_f(s)
/// FrequencyMatch  phi(f) = | sum_s w1(s) rho_f(s) - target_fraction/(1-gamma) |
/// DensityGap      phi(f) = | sum_s w1(s) rho_f(s) - sum_s w2(s) rho_f(s) |
///
/// Plain state sets are 0/1 weights; weights above 1 express multiplicity
/// (e.g. one agent's visitation measured against the sum of two others').
struct DensityObjective {
    DensityKind kind = DensityKind::MinDensity;
    std::vector<double> weights_1;
    std::vector<double> weights_2;    // DensityGap only
    double target_fraction = 0.0;     // FrequencyMatch only

    static DensityObjective min_density(std::vector<double> w1) {
        DensityObjective obj;
        obj.kind = DensityKind::MinDensity;
        obj.weights_1 = std::move(w1);
        return obj;
    }

    static DensityObjective frequency_match(std::vector<double> w1, double target_fraction) {
        DensityObjective obj;
        obj.kind = DensityKind::FrequencyMatch;
        obj.weights_1 = std::move(w1);
        obj.target_fraction = target_fraction;
        return obj;
    }

    static DensityObjective density_gap(std::vector<double> w1, std::vector<double> w2) {
        DensityObjective obj;
        obj.kind = DensityKind::DensityGap;
        obj.weights_1 = std::move(w1);
        obj.weights_2 = std::move(w2);
        return obj;
    }
};

inline const char* to_string(DensityKind kind) {
    switch (kind) {
        case DensityKind::MinDensity: return "min_density";
        case DensityKind::FrequencyMatch: return "frequency_match";
        case DensityKind::DensityGap: return "density_gap";
    }
    return "?";
}

namespace detail {
inline double weighted_density(const OccupancyMeasure& f, const std::vector<double>& weights) {
    if (static_cast<int>(weights.size()) != f.num_states)
        throw std::invalid_argument("density weights do not match state count");
    double sum = 0.0;
    for (int s = 0; s < f.num_states; ++s)
        if (weights[s] != 0.0) sum += weights[s] * f.state_density(s);
    return sum;
}
}  // namespace detail

/// Density error phi'(f). The FrequencyMatch target is the requested
/// fraction of the total discounted mass 1/(1-gamma), so a 10% requirement
/// at gamma=0.99 targets mass 10.
inline double density_error(const OccupancyMeasure& f, const DensityObjective& obj, double gamma) {
    const double mass = f.total_mass();
    const double expected = 1.0 / (1.0 - gamma);
    if (std::fabs(mass - expected) > 1e-4 * std::max(1.0, expected))
        std::cerr << "[dbce] density_error: occupancy mass " << mass << " is far from 1/(1-gamma)="
                  << expected << "; value may not be a state density\n";

    switch (obj.kind) {
        case DensityKind::MinDensity:
            return detail::weighted_density(f, obj.weights_1);
        case DensityKind::FrequencyMatch:
            return std::fabs(detail::weighted_density(f, obj.weights_1) - obj.target_fraction / (1.0 - gamma));
        case DensityKind::DensityGap:
            return std::fabs(detail::weighted_density(f, obj.weights_1) -
                             detail::weighted_density(f, obj.weights_2));
    }
    throw std::logic_error("unreachable density kind");
}

}  // namespace dbce
