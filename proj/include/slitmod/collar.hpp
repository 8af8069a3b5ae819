#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "slitmod/grid_complex.hpp"
#include "slitmod/slit_config.hpp"

namespace slitmod {

enum class Selection { Largest, FirstFit };

/** Right eps-collar [off, off+eps l] x cross-section of a slit. */
AxisBox collar_box(const Slit& s, const Dyadic& eps);
/** Omitted region: the collar shrunk by eps l in every cross-section direction. */
AxisBox omitted_box(const Slit& s, const Dyadic& eps);

/** Greedy subsequence with pairwise essentially disjoint collars. Requires 0 < eps < sigma. */
std::vector<std::size_t> select_collars(const SlitSequence& seq, const Dyadic& eps, Selection strategy,
                                        std::size_t limit = static_cast<std::size_t>(-1));

struct CollarDecomposition {
    BoxN box;
    Dyadic eps, h;
    int n = 0;
    std::vector<std::int64_t> N, cstride;
    double cell_volume = 0.0;
    std::vector<std::size_t> selected;  // slit indices
    std::vector<Slit> slits;            // the selected slits
    std::vector<AxisBox> collar, omitted;
    std::vector<std::int32_t> owner;    // per cell: position in `selected` or -1
    std::vector<char> kind;             // per cell: 'R', 'B' or 'O'
    double H_R = 0, H_B = 0, H_O = 0;   // cell-count measures
    Dyadic exact_R, exact_B, exact_O;   // closed-form measures
    double b_minus_a = 1.0;             // side along the first axis

    std::int64_t num_cells() const { return static_cast<std::int64_t>(kind.size()); }
    /** For n = 2: +1 for the upper buffer component, -1 for the lower, 0 otherwise. */
    int buffer_component(std::int64_t cell) const;
};

/** Cell partition into residual, buffer and omitted sets. */
CollarDecomposition decompose(const SlitSequence& seq, const std::vector<std::size_t>& indices, const Dyadic& eps,
                              const Dyadic& h);

/** 1/(b-a) on R and B, 0 on O. `upto` restricts the omitted regions to the first `upto` selected slits. */
DensityField rho_eps(const CollarDecomposition& d, std::size_t upto = static_cast<std::size_t>(-1));

/** Discretization slack 2 h kappa_n / (b-a). */
double admissibility_slack(const Dyadic& h, int n, double b_minus_a);

struct AdmissibilityResult {
    double min_length = kInf;
    PathInComplex witness;
    bool admissible = false;
    double slack = 0.0;
};

/** Minimum rho-length over paths from the lo to the hi face of axis 0. */
AdmissibilityResult admissibility_min(const GridComplex& gc, const DensityField& rho, double slack);

struct BufferBound {
    double H_B = 0;
    double H_collars = 0;
    double factor = 0;     // 1 - (1-2 eps)^{n-1}
    double bound = 0;      // factor * vol(I)
    bool identity_ok = false;  // H_B == factor * H_collars (cell exact)
    bool bound_ok = false;
};

BufferBound buffer_bound(const CollarDecomposition& d);

struct SurgeryResult {
    std::vector<int> cases;            // per slit j < i: 1, 2 or 3
    std::vector<int> t_side;           // per slit: buffer component hit in case 2 (n = 2), else 0
    std::vector<std::int32_t> kept;    // remaining edges of the path (with multiplicity)
    std::vector<std::size_t> tops;     // slits replaced by their top interval
    double length_before = 0;          // l_i(gamma)
    double length_after = 0;           // l_i(gamma_i)
    bool length_ok = false;
    bool projection_ok = false;
    std::int64_t uncovered_columns = 0;
};

/**
 * Surgery of a left-right path against the first i selected collars of `d`.
 * Throws "not in Gamma_S" if consecutive vertices are not joined by edges.
 */
SurgeryResult curve_surgery(const GridComplex& gc, const PathInComplex& gamma, const CollarDecomposition& d,
                            std::size_t i);

/** Random left-to-right path through random waypoints, biased toward omitted regions. */
PathInComplex random_test_path(const GridComplex& gc, const CollarDecomposition& d, std::mt19937_64& rng);

/** prod_{i<=k} (1 - eps r_i^n); eps must be a power of 1/2. */
double residual_product(const std::vector<double>& r, const Dyadic& eps, int n, int k);

struct DivergenceRow {
    int i = 0;
    double partial_sum = 0;
    double product = 0;
};

std::vector<DivergenceRow> divergence_report(const std::vector<double>& r, int n, int K, double eps);

/** Letter grid (R/B/O) for n = 2, top row first. */
std::string label_grid(const CollarDecomposition& d);

}  // namespace slitmod
