#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "slitmod/grid_complex.hpp"
#include "slitmod/slit_config.hpp"

namespace slitmod {

/** One E' tube or E'' cross, T_Q of the unit-cube template. */
struct MengerComponent {
    int generation = 0;  // j: Q in Delta_{2j}
    bool cross = false;  // false: E' tube (plane y = y_c), true: E'' cross (plane x = x_c)
    DyadicCube cube;
    std::vector<int> sheets;  // indices into the complex's sheet list
};

/** Sheets of W_k(A) and the component registry. */
std::vector<SheetRect> menger_sheets(const std::set<int>& A, int k, std::vector<MengerComponent>* registry = nullptr);

struct MengerComplex {
    std::set<int> A;  // generations used, all <= level
    int level = 0;
    GridComplex gc;   // single copy, or the double along top and bottom
    std::vector<MengerComponent> components;
};

/** Torn complex of W_k(A); `doubled` glues two copies along z = 0 and z = 1. Requires h | 4^{-k}/4. */
MengerComplex build_menger(const std::set<int>& A, int k, const Dyadic& h, bool doubled = false,
                           const BuildOptions& opt = {});

/** F'' squares (normal to x) or F' squares (normal to y) of generations in A up to k, as a 3D slit sequence. */
SlitSequence menger_square_slits(const std::set<int>& A, int k, int axis);

struct BaseCarpet {
    GridComplex carpet;          // 2D complex of the z = 0 face
    std::size_t pairs = 0;
    double max_discrepancy = 0;  // max |d_3D - d_2D|
    double slack = 0;            // 2 h kappa_3
    bool ok = false;
};

/** 2D slit carpet of the bottom face and the sampled isometry check against the 3D complex. */
BaseCarpet base_carpet(const MengerComplex& mc, std::size_t samples = 100, std::uint64_t seed = 1);

enum class FiberLabel { Interval, Circle, L, Y, Other };

struct FiberGraph {
    std::vector<std::int32_t> vertices;  // complex vertices of the fiber
    int betti = 0;
    int endpoints = 0;
    FiberLabel label = FiberLabel::Other;
    int m = 0;  // index of L(m) / Y(m)
    // Contracted multigraph: degree-2 chains replaced by single edges.
    int nodes = 0;
    std::vector<std::pair<int, int>> edges;

    std::string label_str() const;
};

/** Label from the invariants (betti, endpoints). */
std::pair<FiberLabel, int> classify_fiber(int betti, int endpoints);

/** Fiber through vertex v: its component in the z-column over Theta(v). */
FiberGraph fiber(const GridComplex& gc, std::int32_t v);

/** Fiber over a base point (x, y) with its side tag on the base slit (bit 0 = + side in x). */
FiberGraph fiber(const MengerComplex& mc, const Dyadic& x, const Dyadic& y, unsigned side = 0);

/** Isomorphism of contracted fiber graphs. */
bool isomorphic(const FiberGraph& a, const FiberGraph& b);

struct FiberPrediction {
    enum class Case { Endpoint, SheetCenter, Plain };
    Case kind = Case::Plain;
    int slit_generation = 0;
    int sheet_generation = -1;  // SheetCenter: the unique j with y = (2m+1)/2^{2j+1}
    int betti = 0;              // exact cycle count of the single-copy fiber
    int endpoints = 2;
    FiberLabel label = FiberLabel::Interval;
    int m = 0;
};

/**
 * Prediction for a base point on a slit of generation i in A, from exact
 * dyadic arithmetic on the sheets of W_k(A). Throws "not on a slit".
 * `doubled` applies the double relation betti -> 2 betti + 1.
 */
FiberPrediction fiber_predicate(const std::set<int>& A, int k, const Dyadic& x, const Dyadic& y, bool doubled = false);

struct ColumnFiber {
    int betti = 0;
    int endpoints = 0;
    bool torn = false;  // the vertical line meets the interior of some sheet
};

/** Fiber over (x, y) computed by an exact sweep of the sheets along z, without a grid. */
ColumnFiber column_fiber(const std::vector<SheetRect>& sheets, const Dyadic& x, const Dyadic& y, unsigned side = 0,
                         bool doubled = false);

struct FourPointsResult {
    bool ok = false;        // exactly four matches, pairwise isomorphic
    bool maximal = false;   // and no other point of the slit reaches their betti
    int special_betti = 0;  // betti at the endpoints and centre copies
    int max_betti = 0;
    std::vector<std::pair<std::int64_t, unsigned>> matches;  // (y grid index, side) with a fiber like the special ones
    bool isomorphic = false;
    std::size_t scanned = 0;
};

/**
 * Scan of all grid points of a base slit: the endpoints and both centre
 * copies are the only points whose fibers match theirs.
 */
FourPointsResult four_points_check(const MengerComplex& mc, const Slit& s);

struct SpectrumEntry {
    int generation = 0;
    int betti = 0;
    int multiplicity = 0;
    auto operator<=>(const SpectrumEntry&) const = default;
};

struct FiberSpectrum {
    std::vector<SpectrumEntry> entries;  // sorted
    std::vector<SpectrumEntry> up_to(int generation) const;
    bool operator==(const FiberSpectrum& o) const { return entries == o.entries; }
};

/** Per base slit of W_k(A): the maximal single-copy fiber betti over its special points. */
FiberSpectrum fiber_spectrum(const std::set<int>& A, int k, const Dyadic& h);
bool spectra_distinguish(const std::set<int>& A, const std::set<int>& B, int k, const Dyadic& h);

struct CubePair {
    std::array<std::int64_t, 3> a{}, b{};  // centre indices in 4^{-n} units
    bool adjacent = false;
    double distance = 0;  // torn distance between closures (capped at the search bound)
};

struct CoveringReport {
    int max_order = 0;
    std::vector<std::int64_t> histogram;  // vertices by order
    std::vector<CubePair> pairs;          // pairs at centre L-infinity distance 4^{-n}
    double bound = 0;                     // 4^{-n}/4
    double slack = 0;
    std::size_t violations = 0;           // non-adjacent pairs closer than bound - slack
};

/** Order of the eps-fattened Q_n cover and the adjacent/far dichotomy. Requires eps < 4^{-(n+1)}/2. */
CoveringReport covering_order(const MengerComplex& mc, int n, double eps);

/** Adjacent (shared face) or the torn distance between the two cube closures. */
CubePair cube_dichotomy(const MengerComplex& mc, int n, const std::array<std::int64_t, 3>& a,
                        const std::array<std::int64_t, 3>& b);

struct K5Witness {
    std::array<PathInComplex, 10> curves;
    std::array<std::string, 10> names;
    std::array<std::int32_t, 5> corners{};  // a, b, c, d, e
    std::vector<std::pair<int, int>> bad_pairs;  // pairs meeting outside shared endpoints
    bool disjoint = false;
};

/** The ten K5 curves between a, b, c, d, e. Requires level >= 1, h <= 1/16 and the full stencil. */
K5Witness k5_witness(const MengerComplex& mc);

}  // namespace slitmod
