#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "slitmod/collar.hpp"
#include "slitmod/grid_complex.hpp"

namespace slitmod {

struct CurveFamilySpec {
    enum class Kind { ConnectOppositeFaces, VerticalLines, NonVerticalBand, FiberLoops };
    Kind kind = Kind::ConnectOppositeFaces;
    int axis = 0;
    bool avoid_slits = true;
    std::vector<char> shadow;  // VerticalLines: cross-section cells (row-major over the other axes)
    int k = 0, j = 0;          // NonVerticalBand: J_{k,j} along axis 0
    std::vector<char> region;  // FiberLoops: cells of the first n-1 axes
    double length_floor = 0;   // optional: every member has length >= L

    static CurveFamilySpec opposite_faces(int axis = 0, bool avoid_slits = true);
    static CurveFamilySpec vertical_lines(int axis, std::vector<char> shadow);
    static CurveFamilySpec band(int k, int j);
    static CurveFamilySpec fiber_loops(std::vector<char> region);
    std::string name() const;
};

/** Endpoints of J_{k,j} along axis 0 as grid indices of gc. */
std::pair<std::int64_t, std::int64_t> band_indices(const GridComplex& gc, int k, int j);

struct ModulusOptions {
    /** Paths: constraint generation on path constraints. Flows: reweighted electrical flows (crossing families, p >= 2). */
    enum class Method { Auto, Paths, Flows };
    Method method = Method::Auto;
    double p = 2.0;
    double tol = 0.01;
    int max_rounds = 400;
    int max_sweeps = 400;
    std::size_t max_new_paths = 4096;
};

struct ModulusResult {
    double lower = 0;
    double upper = 0;
    DensityField density;  // admissible (min family length >= 1)
    std::size_t active_paths = 0;
    int iterations = 0;
    double p = 2;
    double tol = 0;
    double min_length = 0;  // min family rho-length of the dual density before scaling
    bool empty_family = false;
    bool converged = false;
};

/** One family member as a sparse cell-coefficient vector: rho-length = sum coef * rho[cell]. */
struct PathConstraint {
    std::vector<std::int32_t> cells;
    std::vector<double> coef;
    PathInComplex path;
};

PathConstraint constraint_of(const GridComplex& gc, const PathInComplex& path);

/**
 * Separation oracle of a family: minimal rho-length over members and the
 * members shorter than `threshold`.
 */
class FamilyOracle {
public:
    virtual ~FamilyOracle() = default;
    /** Exact minimum rho-length over the family (kInf if empty) with a witness. */
    virtual double min_length(const std::vector<double>& rho, PathInComplex* witness) const = 0;
    /** Members with rho-length below threshold, at most `cap`. */
    virtual void violated(const std::vector<double>& rho, double threshold, std::size_t cap,
                          std::vector<PathConstraint>& out) const = 0;
    virtual const GridComplex& complex() const = 0;
    /** For crossing families: source and target vertices and the allowed edges (empty = all). */
    virtual bool crossing(std::vector<std::int32_t>& /*sources*/, std::vector<std::int32_t>& /*targets*/,
                          std::vector<char>& /*edge_ok*/) const {
        return false;
    }
};

/** Oracle for a family spec; keeps a companion untorn complex when avoid_slits is false. */
std::unique_ptr<FamilyOracle> make_oracle(const GridComplex& gc, const CurveFamilySpec& family);

ModulusResult discrete_modulus(const GridComplex& gc, const CurveFamilySpec& family, const ModulusOptions& opt = {});
ModulusResult solve_modulus(const FamilyOracle& oracle, const ModulusOptions& opt);

class InadmissibleDensity : public std::runtime_error {
public:
    InadmissibleDensity(double length, PathInComplex path)
        : std::runtime_error("density is not admissible: rho-length " + std::to_string(length)),
          length(length), path(std::move(path)) {}
    double length;
    PathInComplex path;
};

/** mass(rho, p) after verifying admissibility within `slack`; throws InadmissibleDensity. */
double upper_via_density(const GridComplex& gc, const DensityField& rho, const CurveFamilySpec& family, double p,
                         double slack = 1e-12);

/** mu(A) / L^p: bound for a family whose members have length >= L inside A. */
double length_floor_bound(double measure_A, double L, double p);

/** Cross-section cells whose open interior misses every sheet normal to axis. */
std::vector<char> unblocked_shadow(const GridComplex& gc, int axis);

struct VerticalProductResult {
    double exact = 0;     // H^{n-1}(shadow) / (b_k - a_k)^{p-1}
    ModulusResult solved;
    double rel_error = 0;
};

VerticalProductResult vertical_product_modulus(const GridComplex& gc, int axis, const std::vector<char>& shadow,
                                               double p, const ModulusOptions& opt = {});

struct SweepRow {
    int k = 0, j = 0;
    double delta = 0, eps = 0;
    std::size_t interior_slits = 0, selected = 0;
    double bound = 0;           // Main-Estimate bound on the sub-box
    double discrete = -1;       // discrete band modulus (upper), -1 if not computed
};

/**
 * Band-wise bounds: for each J_{k,j} (k <= k_max) and delta, selects collars
 * among the slits (first `level`) inside I_delta and evaluates the bound.
 */
std::vector<SweepRow> nonvertical_sweep(const SlitSequence& seq, std::size_t level, const Dyadic& h, int k_max,
                                        const std::vector<Dyadic>& deltas, const std::vector<Dyadic>& eps_list,
                                        double p, bool with_discrete, const ModulusOptions& opt = {});

struct ProjectionCheck {
    double lhs = 0;   // lower bound of mod(family)
    double rhs = 0;   // C L^p times upper bound of mod(projected family)
    bool holds = false;
};

ProjectionCheck projection_inequality_check(const GridComplex& gc, const CurveFamilySpec& family,
                                            const GridComplex& target, const CurveFamilySpec& projected, double C,
                                            double L, double p, const ModulusOptions& opt = {});

}  // namespace slitmod
