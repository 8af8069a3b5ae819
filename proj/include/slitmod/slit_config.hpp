#pragma once

#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "slitmod/dyadic.hpp"

namespace slitmod {

/** Open axis-aligned box (a_1,b_1) x ... x (a_n,b_n). */
struct BoxN {
    std::vector<Dyadic> lo, hi;

    static BoxN unit(int n);
    int dim() const { return static_cast<int>(lo.size()); }
    Dyadic side(int axis) const { return hi[axis] - lo[axis]; }
    Dyadic volume() const;
    /** Throws std::invalid_argument unless a_i < b_i and n >= 1. */
    void check() const;
};

/** Closed axis-aligned box, possibly degenerate in some axes. */
struct AxisBox {
    std::vector<Dyadic> lo, hi;
    int dim() const { return static_cast<int>(lo.size()); }
};

/**
 * Codimension-1 slit: the closed (n-1)-cube orthogonal to `axis` (0-based)
 * at coordinate `offset`, with the remaining coordinates centered at
 * `center` (increasing axis order) and common side `side`.
 */
struct Slit {
    int axis = 0;
    Dyadic offset;
    std::vector<Dyadic> center;
    Dyadic side;
    // Provenance used for deterministic ordering; -1 when unknown.
    int generation = -1;
    std::vector<std::int64_t> index;

    int dim() const { return static_cast<int>(center.size()) + 1; }
    AxisBox box() const;
    /** Lower/upper bounds of the cross-section along `a` (a != axis). */
    Dyadic cross_lo(int a) const;
    Dyadic cross_hi(int a) const;
};

struct SlitSequence {
    BoxN box;
    std::vector<Slit> slits;
    double sigma = 0.0;  // 0 = not validated

    std::size_t size() const { return slits.size(); }
    /** Number of leading slits with generation <= g. */
    std::size_t count_through_generation(int g) const;
};

struct DyadicCube {
    int generation = 0;
    std::vector<std::int64_t> index;

    Dyadic side() const { return Dyadic::pow2_inv(generation); }
    Dyadic lo(int a) const { return Dyadic::make(index[a], generation); }
    Dyadic center(int a) const { return Dyadic::make(2 * index[a] + 1, generation + 1); }
};

/** dist(E,F) / min(diam E, diam F), Euclidean. Throws "degenerate set" on zero diameter. */
double relative_distance(const AxisBox& e, const AxisBox& f);
/** Exact squared Euclidean distance and squared diameter. */
Dyadic squared_distance(const AxisBox& e, const AxisBox& f);
Dyadic squared_diameter(const AxisBox& e);
/** Relative distance between a set inside the box and the box boundary. */
double boundary_relative_distance(const AxisBox& e, const BoxN& box);

struct ValidationReport {
    double min_pairwise = std::numeric_limits<double>::infinity();
    double min_boundary = std::numeric_limits<double>::infinity();
    bool sorted_ok = true;
    bool disjoint_ok = true;
    bool contained_ok = true;
    int truncation_generation = -1;  // finest generation present, -1 if unknown
};

/** Computes minimal separations and sets seq.sigma to the minimum found. */
ValidationReport validate_sequence(SlitSequence& seq);

/**
 * Dyadic family: for every generation-i cube with r_i > 0 a slit of normal
 * axis 0, side r_i 2^{-i}, centred at the cube centre. Sorted by nonincreasing
 * side, ties by (generation, index).
 */
SlitSequence dyadic_slits(const std::vector<Dyadic>& r, int n, int max_gen);

/** Stable sort by nonincreasing side, ties by (generation, index). */
void sort_slits(SlitSequence& seq);

struct ScalesReport {
    bool pass = false;
    double worst_ratio = std::numeric_limits<double>::infinity();  // r / diam of best slit
    double truncation_scale = 0.0;
    std::size_t balls = 0;
};

/**
 * Samples balls B(x,r) with r_min <= r <= diam(box)/2 and reports the worst
 * ratio r / max{diam s : s inside B}; passes iff worst <= C.
 */
ScalesReport all_scales_check(const SlitSequence& seq, double C, int samples, double r_min,
                              std::uint64_t seed = 1);

/** Face slit families of the Menger construction, in face coordinates. */
struct MengerFaces {
    SlitSequence z0;  // coordinates (x, y)
    SlitSequence y0;  // coordinates (x, z)
    SlitSequence x0;  // coordinates (y, z)
};

MengerFaces menger_slit_faces(const std::set<int>& A, int max_gen);

std::string serialize(const SlitSequence& seq);
SlitSequence parse_slit_sequence(const std::string& text);

}  // namespace slitmod
