#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "slitmod/dyadic.hpp"
#include "slitmod/slit_config.hpp"

namespace slitmod {

/** Max ratio of stencil distance to Euclidean distance for the full stencil. */
double stencil_distortion(int n);

/** A closed axis-aligned rectangle inside a tear plane {x_axis = coord}. */
struct SheetRect {
    int axis = 0;
    Dyadic coord;
    std::vector<Dyadic> lo, hi;  // full length n; entries at `axis` ignored
};

SheetRect sheet_of(const Slit& s);

enum class Stencil { Full, Axis };
enum class Glue { OuterBoundary, TopBottom };

struct BuildOptions {
    Stencil stencil = Stencil::Full;
    bool with_cells = true;
    std::int64_t max_cells = std::int64_t{1} << 24;
};

/** Tear plane with its in-plane cell mask (union of all sheets in that plane). */
struct TearPlane {
    int axis = 0;
    std::int64_t index = 0;    // grid coordinate along axis
    std::vector<char> mask;    // in-plane cells, row-major over the other axes
    std::vector<int> sheets;   // registry: indices into the sheet list
};

/**
 * Point of a complex: grid coordinates plus side bits on every duplicated
 * plane through it (bit a set = the + side along axis a) and the layer of a
 * double. Bits on non-duplicated axes are ignored.
 */
struct PointRef {
    std::vector<Dyadic> x;
    unsigned side = 0;
    int layer = 0;
};

struct PathInComplex {
    std::vector<std::int32_t> vertices;
    std::vector<std::int32_t> edges;
    double length = 0.0;  // sum of geometric edge lengths
};

/**
 * Torn grid complex. Vertices are grid points, duplicated into one copy per
 * side of every tear plane whose open sheet contains them. Edges join stencil
 * neighbours and never cross an open sheet. Cells are the voxels of the box
 * (two sets of them for a double).
 */
class GridComplex {
public:
    int n = 0;
    BoxN box;
    Dyadic h;
    std::vector<std::int64_t> N;       // cells per axis
    std::vector<std::int64_t> vstride; // grid-point strides (N+1 per axis)
    std::vector<std::int64_t> cstride; // cell strides
    std::int64_t grid_points = 0;
    std::int64_t base_cells = 0;
    bool doubled = false;
    Glue glue = Glue::OuterBoundary;
    Stencil stencil = Stencil::Full;
    double cell_volume = 0.0;  // scalable for measure tests

    std::vector<SheetRect> sheets;
    std::vector<TearPlane> planes;
    std::vector<std::vector<int>> plane_at;  // [axis][grid index] -> plane id or -1
    std::vector<std::uint8_t> dupmask;  // per grid point: axes of duplicating planes

    // Vertices.
    std::vector<std::int64_t> vgp;
    std::vector<std::uint8_t> vside;
    std::vector<std::uint8_t> vlayer;
    std::vector<std::int32_t> base[2];  // per layer: first vertex id of each grid point

    // Edges.
    std::vector<std::int32_t> eu, ev;
    std::vector<double> elen;
    std::vector<std::int64_t> ecell_start;  // empty unless built with cells
    std::vector<std::int32_t> ecells;

    // Adjacency (CSR): neighbour and edge id.
    std::vector<std::int64_t> adj_start;
    std::vector<std::int32_t> adj_to, adj_edge;

    std::int32_t num_vertices() const { return static_cast<std::int32_t>(vgp.size()); }
    std::int32_t num_edges() const { return static_cast<std::int32_t>(eu.size()); }
    std::int64_t num_cells() const { return doubled ? 2 * base_cells : base_cells; }
    bool has_cells() const { return !ecell_start.empty(); }
    double total_volume() const { return cell_volume * static_cast<double>(num_cells()); }

    std::vector<std::int64_t> grid_coords(std::int64_t gp) const;
    std::int64_t grid_point(const std::vector<std::int64_t>& c) const;
    std::vector<std::int64_t> cell_coords(std::int64_t cell) const;  // base cell
    std::int64_t cell_index(const std::vector<std::int64_t>& c) const;
    int cell_layer(std::int64_t cell) const { return cell >= base_cells ? 1 : 0; }
    double coord(std::int64_t gp, int axis) const;
    Dyadic coord_exact(std::int64_t gp, int axis) const;
    std::int64_t to_index(const Dyadic& x, int axis) const;  // throws if misaligned

    /** Vertex id for grid point, layer and side bits (bits masked to the duplicated axes). */
    std::int32_t vertex(std::int64_t gp, unsigned side = 0, int layer = 0) const;
    std::int32_t resolve(const PointRef& p) const;
    PointRef point_of(std::int32_t v) const;
    int copies(std::int64_t gp) const { return 1 << __builtin_popcount(dupmask[gp]); }

    /** Vertex copy at corner `corner_bits` of a cell, on the cell's side of every plane. */
    std::int32_t cell_corner(std::int64_t cell, unsigned corner_bits) const;

    /** Cells of edge e (side-filtered for sheet edges). */
    const std::int32_t* edge_cells_begin(std::int32_t e) const { return ecells.data() + ecell_start[e]; }
    const std::int32_t* edge_cells_end(std::int32_t e) const { return ecells.data() + ecell_start[e + 1]; }

    /** Vertices with coordinate lo (side=false) or hi (side=true) on axis. */
    std::vector<std::int32_t> face_vertices(int axis, bool hi_side) const;
    bool on_face(std::int32_t v, int axis, bool hi_side) const;
};

/** Torn complex of the box with the given sheets. */
GridComplex build_torn_complex(const BoxN& box, const std::vector<SheetRect>& sheets, const Dyadic& h,
                               const BuildOptions& opt = {});

/** Complex realizing the completion of the box minus the first k slits. */
GridComplex build_slit_complex(const SlitSequence& seq, std::size_t k, const Dyadic& h, const BuildOptions& opt = {});

/** Two copies glued along the outer boundary or the top/bottom faces (last axis). */
GridComplex double_complex(const GridComplex& gc, Glue glue);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ShortestPaths {
    std::vector<double> dist;
    std::vector<std::int32_t> parent_edge;  // -1 at sources / unreached
};

/**
 * Multi-source Dijkstra with per-edge weights (geometric length if empty).
 * Stops expanding beyond `bound`. Among equal-length predecessors the one
 * with the smallest vertex id is kept.
 */
ShortestPaths dijkstra(const GridComplex& gc, const std::vector<std::int32_t>& sources,
                       const std::vector<double>& weights = {}, double bound = kInf);

PathInComplex extract_path(const GridComplex& gc, const ShortestPaths& sp, std::int32_t target);

double geodesic_distance(const GridComplex& gc, const PointRef& p, const PointRef& q);
double geodesic_distance(const GridComplex& gc, std::int32_t p, std::int32_t q);

/** Maps a vertex of `fine` to the vertex of `coarse` (same box and h) with the extra tags dropped. */
std::int32_t project(const GridComplex& coarse, const GridComplex& fine, std::int32_t v);

struct AhlforsReport {
    double min_ratio = kInf;
    double max_ratio = 0.0;
    std::size_t samples = 0;
};

/** Ratios mu(B(x,r))/r^n for `samples` random centres and each radius. */
AhlforsReport ahlfors_scan(const GridComplex& gc, int samples, const std::vector<double>& radii,
                           std::uint64_t seed = 1);

/** Nonnegative value per cell. */
struct DensityField {
    std::vector<double> value;
    double cell_volume = 0.0;

    /** Sum of value^p times cell volume. */
    double mass(double p) const;
};

/** rho-length of every edge: geometric length times the mean of rho over the edge's cells. */
std::vector<double> rho_lengths(const GridComplex& gc, const std::vector<double>& rho);

/** (H(E), H(tau(E))); equal at grid level since sheets carry no cells. */
std::pair<double, double> measure_comparability(const GridComplex& gc, const std::vector<std::int64_t>& cells);

/** Text summary: h, counts, and the duplicated points of every tear plane. */
std::string dump(const GridComplex& gc);
std::string distance_matrix_csv(const GridComplex& gc, const std::vector<std::int32_t>& vertices);

}  // namespace slitmod
