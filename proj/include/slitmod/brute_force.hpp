#pragma once

#include <cstdint>

#include "slitmod/modulus.hpp"

namespace slitmod {

struct BruteForceResult {
    double lower = 0;  // relaxation optimum minus the barrier gap
    double upper = 0;  // mass of the scaled admissible density
    std::size_t constraints = 0;
    int rounds = 0;
    bool converged = false;
    DensityField density;
};

/**
 * Reference p-modulus for small complexes: a dense convex program over all
 * cell densities, solved by a log-barrier Newton method on the enumerated
 * path constraints. Refuses complexes with more than `max_cells` cells.
 */
BruteForceResult brute_force_modulus(const GridComplex& gc, const CurveFamilySpec& family, double p = 2.0,
                                     std::int64_t max_cells = 400);

}  // namespace slitmod
