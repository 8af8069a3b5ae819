#include "slitmod/grid_complex.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>

namespace slitmod {

double stencil_distortion(int n) {
    switch (n) {
        case 1: return 1.0;
        case 2: return std::sqrt(4.0 - 2.0 * std::sqrt(2.0));  // worst direction at 22.5 degrees
        case 3: return 1.12810;
        default: return std::sqrt(static_cast<double>(n));
    }
}

SheetRect sheet_of(const Slit& s) {
    AxisBox b = s.box();
    return SheetRect{s.axis, s.offset, b.lo, b.hi};
}

std::vector<std::int64_t> GridComplex::grid_coords(std::int64_t gp) const {
    std::vector<std::int64_t> c(n);
    for (int a = n - 1; a >= 0; --a) {
        c[a] = gp % (N[a] + 1);
        gp /= N[a] + 1;
    }
    return c;
}

std::int64_t GridComplex::grid_point(const std::vector<std::int64_t>& c) const {
    std::int64_t g = 0;
    for (int a = 0; a < n; ++a) g += c[a] * vstride[a];
    return g;
}

std::vector<std::int64_t> GridComplex::cell_coords(std::int64_t cell) const {
    cell %= base_cells;
    std::vector<std::int64_t> c(n);
    for (int a = n - 1; a >= 0; --a) {
        c[a] = cell % N[a];
        cell /= N[a];
    }
    return c;
}

std::int64_t GridComplex::cell_index(const std::vector<std::int64_t>& c) const {
    std::int64_t g = 0;
    for (int a = 0; a < n; ++a) g += c[a] * cstride[a];
    return g;
}

double GridComplex::coord(std::int64_t gp, int axis) const { return coord_exact(gp, axis).to_double(); }

Dyadic GridComplex::coord_exact(std::int64_t gp, int axis) const {
    return box.lo[axis] + h * Dyadic(grid_coords(gp)[axis]);
}

std::int64_t GridComplex::to_index(const Dyadic& x, int axis) const {
    Dyadic d = x - box.lo[axis];
    if (!d.multiple_of(h)) throw std::invalid_argument("resolution misaligned: " + x.str() + " is not on the h-grid");
    std::int64_t i = d.div_exact(h);
    if (i < 0 || i > N[axis]) throw std::invalid_argument("point outside box: " + x.str());
    return i;
}

namespace {

unsigned compress_bits(unsigned side, unsigned mask) {
    unsigned r = 0, k = 0;
    for (unsigned a = 0; a < 8; ++a)
        if (mask >> a & 1u) {
            if (side >> a & 1u) r |= 1u << k;
            ++k;
        }
    return r;
}

}  // namespace

std::int32_t GridComplex::vertex(std::int64_t gp, unsigned side, int layer) const {
    unsigned m = dupmask[gp];
    return base[layer][gp] + static_cast<std::int32_t>(compress_bits(side & m, m));
}

std::int32_t GridComplex::resolve(const PointRef& p) const {
    if (static_cast<int>(p.x.size()) != n) throw std::invalid_argument("point dimension mismatch");
    std::vector<std::int64_t> c(n);
    for (int a = 0; a < n; ++a) c[a] = to_index(p.x[a], a);
    if (p.layer < 0 || p.layer > (doubled ? 1 : 0)) throw std::invalid_argument("bad layer");
    return vertex(grid_point(c), p.side, p.layer);
}

PointRef GridComplex::point_of(std::int32_t v) const {
    PointRef p;
    for (int a = 0; a < n; ++a) p.x.push_back(coord_exact(vgp[v], a));
    p.side = vside[v];
    p.layer = vlayer[v];
    return p;
}

std::int32_t GridComplex::cell_corner(std::int64_t cell, unsigned corner_bits) const {
    int layer = cell_layer(cell);
    auto c = cell_coords(cell);
    unsigned side = 0;
    for (int a = 0; a < n; ++a) {
        if (corner_bits >> a & 1u) ++c[a];
        else side |= 1u << a;  // the cell lies on the + side of its lower corner
    }
    return vertex(grid_point(c), side, layer);
}

std::vector<std::int32_t> GridComplex::face_vertices(int axis, bool hi_side) const {
    std::vector<std::int32_t> out;
    for (std::int32_t v = 0; v < num_vertices(); ++v)
        if (on_face(v, axis, hi_side)) out.push_back(v);
    return out;
}

bool GridComplex::on_face(std::int32_t v, int axis, bool hi_side) const {
    std::int64_t c = vgp[v] / vstride[axis] % (N[axis] + 1);
    return c == (hi_side ? N[axis] : 0);
}

namespace {

void init_grid(GridComplex& gc, const BoxN& box, const Dyadic& h, const BuildOptions& opt) {
    box.check();
    if (h.sign() <= 0) throw std::invalid_argument("h must be positive");
    gc.n = box.dim();
    if (gc.n > 4) throw std::invalid_argument("grid complexes support dimension <= 4");
    gc.box = box;
    gc.h = h;
    gc.stencil = opt.stencil;
    gc.N.resize(gc.n);
    long double cells = 1;
    for (int a = 0; a < gc.n; ++a) {
        Dyadic s = box.side(a);
        if (!s.multiple_of(h)) throw std::invalid_argument("resolution misaligned: box side " + s.str() + " vs h " + h.str());
        gc.N[a] = s.div_exact(h);
        cells *= static_cast<long double>(gc.N[a]);
    }
    if (cells > static_cast<long double>(opt.max_cells)) {
        Dyadic hs = h;
        long double c = cells;
        while (c > static_cast<long double>(opt.max_cells)) {
            hs = hs * Dyadic(2);
            c /= std::pow(2.0L, gc.n);
        }
        throw std::length_error("cell cap exceeded: " + std::to_string(static_cast<long long>(cells)) + " cells > " +
                                std::to_string(opt.max_cells) + "; use h >= " + hs.str());
    }
    gc.vstride.assign(gc.n, 1);
    gc.cstride.assign(gc.n, 1);
    for (int a = gc.n - 2; a >= 0; --a) {
        gc.vstride[a] = gc.vstride[a + 1] * (gc.N[a + 1] + 1);
        gc.cstride[a] = gc.cstride[a + 1] * gc.N[a + 1];
    }
    gc.grid_points = gc.vstride[0] * (gc.N[0] + 1);
    gc.base_cells = gc.cstride[0] * gc.N[0];
    gc.cell_volume = std::pow(h.to_double(), gc.n);
}

// Row-major index of an in-plane cell; c holds cell coordinates for all axes.
std::int64_t plane_cell(const GridComplex& gc, int axis, const std::vector<std::int64_t>& c) {
    std::int64_t idx = 0;
    for (int b = 0; b < gc.n; ++b) {
        if (b == axis) continue;
        idx = idx * gc.N[b] + c[b];
    }
    return idx;
}

std::int64_t plane_cells(const GridComplex& gc, int axis) {
    std::int64_t k = 1;
    for (int b = 0; b < gc.n; ++b)
        if (b != axis) k *= gc.N[b];
    return k;
}

// Calls f(c) for every combination c[a] in {lo[a]..hi[a]} (inclusive).
template <class F>
void for_box(const std::vector<std::int64_t>& lo, const std::vector<std::int64_t>& hi, F&& f) {
    int n = static_cast<int>(lo.size());
    for (int a = 0; a < n; ++a)
        if (lo[a] > hi[a]) return;
    std::vector<std::int64_t> c = lo;
    while (true) {
        f(c);
        int a = n - 1;
        while (a >= 0 && ++c[a] > hi[a]) c[a] = lo[a], --a;
        if (a < 0) return;
    }
}

void register_sheets(GridComplex& gc, const std::vector<SheetRect>& sheets) {
    gc.sheets = sheets;
    gc.plane_at.assign(gc.n, {});
    for (int a = 0; a < gc.n; ++a) gc.plane_at[a].assign(gc.N[a] + 1, -1);
    for (std::size_t si = 0; si < sheets.size(); ++si) {
        const SheetRect& s = sheets[si];
        if (s.axis < 0 || s.axis >= gc.n) throw std::invalid_argument("sheet axis out of range");
        std::int64_t c = gc.to_index(s.coord, s.axis);
        if (c <= 0 || c >= gc.N[s.axis]) throw std::invalid_argument("sheet lies on the box boundary");
        int& pid = gc.plane_at[s.axis][c];
        if (pid < 0) {
            pid = static_cast<int>(gc.planes.size());
            TearPlane tp;
            tp.axis = s.axis;
            tp.index = c;
            tp.mask.assign(plane_cells(gc, s.axis), 0);
            gc.planes.push_back(std::move(tp));
        }
        TearPlane& tp = gc.planes[pid];
        tp.sheets.push_back(static_cast<int>(si));
        std::vector<std::int64_t> lo(gc.n, 0), hi(gc.n, 0);
        for (int b = 0; b < gc.n; ++b) {
            if (b == s.axis) continue;
            lo[b] = gc.to_index(s.lo[b], b);
            hi[b] = gc.to_index(s.hi[b], b) - 1;
            if (hi[b] < lo[b]) throw std::invalid_argument("sheet thinner than h");
        }
        for_box(lo, hi, [&](const std::vector<std::int64_t>& cc) { tp.mask[plane_cell(gc, s.axis, cc)] = 1; });
    }
    gc.dupmask.assign(gc.grid_points, 0);
    for (const TearPlane& tp : gc.planes) {
        std::vector<std::int64_t> lo(gc.n, 0), hi(gc.n);
        for (int b = 0; b < gc.n; ++b) hi[b] = gc.N[b];
        lo[tp.axis] = hi[tp.axis] = tp.index;
        for_box(lo, hi, [&](const std::vector<std::int64_t>& p) {
            std::vector<std::int64_t> clo(gc.n), chi(gc.n);
            for (int b = 0; b < gc.n; ++b) {
                clo[b] = std::max<std::int64_t>(p[b] - 1, 0);
                chi[b] = std::min(p[b], gc.N[b] - 1);
            }
            clo[tp.axis] = chi[tp.axis] = 0;
            bool all = true;
            for_box(clo, chi, [&](const std::vector<std::int64_t>& cc) {
                if (!tp.mask[plane_cell(gc, tp.axis, cc)]) all = false;
            });
            if (all) gc.dupmask[gc.grid_point(p)] |= static_cast<std::uint8_t>(1u << tp.axis);
        });
    }
}

void build_adjacency(GridComplex& gc) {
    std::int32_t V = gc.num_vertices();
    gc.adj_start.assign(V + 1, 0);
    for (std::int32_t e = 0; e < gc.num_edges(); ++e) {
        ++gc.adj_start[gc.eu[e] + 1];
        ++gc.adj_start[gc.ev[e] + 1];
    }
    for (std::int32_t v = 0; v < V; ++v) gc.adj_start[v + 1] += gc.adj_start[v];
    gc.adj_to.assign(gc.adj_start[V], 0);
    gc.adj_edge.assign(gc.adj_start[V], 0);
    std::vector<std::int64_t> pos(gc.adj_start.begin(), gc.adj_start.end() - 1);
    for (std::int32_t e = 0; e < gc.num_edges(); ++e) {
        gc.adj_to[pos[gc.eu[e]]] = gc.ev[e];
        gc.adj_edge[pos[gc.eu[e]]++] = e;
        gc.adj_to[pos[gc.ev[e]]] = gc.eu[e];
        gc.adj_edge[pos[gc.ev[e]]++] = e;
    }
}

}  // namespace

GridComplex build_torn_complex(const BoxN& box, const std::vector<SheetRect>& sheets, const Dyadic& h,
                               const BuildOptions& opt) {
    GridComplex gc;
    init_grid(gc, box, h, opt);
    register_sheets(gc, sheets);
    const int n = gc.n;

    gc.base[0].assign(gc.grid_points, 0);
    std::int64_t count = 0;
    for (std::int64_t gp = 0; gp < gc.grid_points; ++gp) {
        gc.base[0][gp] = static_cast<std::int32_t>(count);
        count += gc.copies(gp);
    }
    if (count > std::numeric_limits<std::int32_t>::max()) throw std::length_error("too many vertices");
    gc.vgp.resize(count);
    gc.vside.resize(count);
    gc.vlayer.assign(count, 0);
    for (std::int64_t gp = 0; gp < gc.grid_points; ++gp) {
        unsigned m = gc.dupmask[gp];
        std::int32_t k = 0;
        for (unsigned sub = 0; sub < 256; ++sub) {
            if ((sub & m) != sub) continue;
            gc.vgp[gc.base[0][gp] + k] = gp;
            gc.vside[gc.base[0][gp] + k] = static_cast<std::uint8_t>(sub);
            ++k;
        }
    }

    // Offsets: half of the stencil (first nonzero component positive).
    std::vector<std::vector<int>> offsets;
    {
        std::vector<std::int64_t> lo(n, -1), hi(n, 1);
        for_box(lo, hi, [&](const std::vector<std::int64_t>& d) {
            int nz = 0, first = 0;
            for (int a = 0; a < n; ++a)
                if (d[a] != 0) {
                    if (nz == 0) first = static_cast<int>(d[a]);
                    ++nz;
                }
            if (nz == 0 || first < 0) return;
            if (opt.stencil == Stencil::Axis && nz != 1) return;
            offsets.emplace_back(d.begin(), d.end());
        });
    }

    if (opt.with_cells) gc.ecell_start.push_back(0);
    std::vector<std::int64_t> p(n), q(n);
    std::vector<std::int64_t> clo(n), chi(n);
    for (std::int64_t gp = 0; gp < gc.grid_points; ++gp) {
        p = gc.grid_coords(gp);
        for (const auto& d : offsets) {
            bool ok = true;
            int nz = 0;
            for (int a = 0; a < n && ok; ++a) {
                q[a] = p[a] + d[a];
                if (q[a] < 0 || q[a] > gc.N[a]) ok = false;
                nz += d[a] != 0;
            }
            if (!ok) continue;
            std::int64_t gq = gc.grid_point(q);
            unsigned fixp = 0, fixq = 0, freemask = 0;
            for (int a = 0; a < n; ++a) {
                if (d[a] > 0) fixp |= 1u << a;
                else if (d[a] < 0) fixq |= 1u << a;
                else {
                    int pid = gc.plane_at[a][p[a]];
                    if (pid < 0) continue;
                    // In-plane edge: duplicated iff every in-plane cell containing it is torn.
                    const TearPlane& tp = gc.planes[pid];
                    for (int b = 0; b < n; ++b) {
                        if (b == a) { clo[b] = chi[b] = 0; continue; }
                        if (d[b] != 0) clo[b] = chi[b] = std::min(p[b], q[b]);
                        else {
                            clo[b] = std::max<std::int64_t>(p[b] - 1, 0);
                            chi[b] = std::min(p[b], gc.N[b] - 1);
                        }
                    }
                    bool torn = true;
                    for_box(clo, chi, [&](const std::vector<std::int64_t>& cc) {
                        if (!tp.mask[plane_cell(gc, a, cc)]) torn = false;
                    });
                    if (torn) freemask |= 1u << a;
                }
            }
            double len = gc.h.to_double() * std::sqrt(static_cast<double>(nz));
            for (unsigned s = 0; s < 256; ++s) {
                if ((s & freemask) != s) continue;
                std::int32_t u = gc.vertex(gp, fixp | s, 0);
                std::int32_t v = gc.vertex(gq, fixq | s, 0);
                gc.eu.push_back(u);
                gc.ev.push_back(v);
                gc.elen.push_back(len);
                if (!opt.with_cells) continue;
                for (int a = 0; a < n; ++a) {
                    if (d[a] != 0) clo[a] = chi[a] = std::min(p[a], q[a]);
                    else if (freemask >> a & 1u) clo[a] = chi[a] = (s >> a & 1u) ? p[a] : p[a] - 1;
                    else {
                        clo[a] = std::max<std::int64_t>(p[a] - 1, 0);
                        chi[a] = std::min(p[a], gc.N[a] - 1);
                    }
                }
                for_box(clo, chi, [&](const std::vector<std::int64_t>& cc) {
                    gc.ecells.push_back(static_cast<std::int32_t>(gc.cell_index(cc)));
                });
                gc.ecell_start.push_back(static_cast<std::int64_t>(gc.ecells.size()));
            }
        }
    }
    build_adjacency(gc);
    return gc;
}

GridComplex build_slit_complex(const SlitSequence& seq, std::size_t k, const Dyadic& h, const BuildOptions& opt) {
    if (k > seq.slits.size()) throw std::invalid_argument("level exceeds number of slits");
    std::vector<SheetRect> sheets;
    for (std::size_t i = 0; i < k; ++i) sheets.push_back(sheet_of(seq.slits[i]));
    return build_torn_complex(seq.box, sheets, h, opt);
}

GridComplex double_complex(const GridComplex& gc, Glue glue) {
    if (gc.doubled) throw std::invalid_argument("complex is already doubled");
    GridComplex d = gc;
    d.doubled = true;
    d.glue = glue;
    const int n = gc.n;
    auto glued = [&](std::int64_t gp) {
        auto c = gc.grid_coords(gp);
        if (glue == Glue::TopBottom) return c[n - 1] == 0 || c[n - 1] == gc.N[n - 1];
        for (int a = 0; a < n; ++a)
            if (c[a] == 0 || c[a] == gc.N[a]) return true;
        return false;
    };
    std::int32_t V = gc.num_vertices();
    std::vector<char> gl(gc.grid_points);
    d.base[1].assign(gc.grid_points, 0);
    std::int64_t next = V;
    for (std::int64_t gp = 0; gp < gc.grid_points; ++gp) {
        gl[gp] = glued(gp);
        if (gl[gp]) {
            d.base[1][gp] = gc.base[0][gp];
        } else {
            d.base[1][gp] = static_cast<std::int32_t>(next);
            for (int k = 0; k < gc.copies(gp); ++k) {
                d.vgp.push_back(gp);
                d.vside.push_back(gc.vside[gc.base[0][gp] + k]);
                d.vlayer.push_back(1);
            }
            next += gc.copies(gp);
        }
    }
    if (next > std::numeric_limits<std::int32_t>::max()) throw std::length_error("too many vertices");
    auto map1 = [&](std::int32_t v) { return d.base[1][gc.vgp[v]] + (v - gc.base[0][gc.vgp[v]]); };
    auto in_glue_face = [&](std::int32_t u, std::int32_t v) {
        auto cu = gc.grid_coords(gc.vgp[u]), cv = gc.grid_coords(gc.vgp[v]);
        int a0 = glue == Glue::TopBottom ? n - 1 : 0;
        for (int a = a0; a < n; ++a)
            for (std::int64_t f : {std::int64_t{0}, gc.N[a]})
                if (cu[a] == f && cv[a] == f) return true;
        return false;
    };
    std::int32_t E = gc.num_edges();
    std::vector<char> merged(E, 0);
    for (std::int32_t e = 0; e < E; ++e) {
        std::int32_t u = gc.eu[e], v = gc.ev[e];
        if (gl[gc.vgp[u]] && gl[gc.vgp[v]] && in_glue_face(u, v)) {
            merged[e] = 1;
            continue;
        }
        d.eu.push_back(map1(u));
        d.ev.push_back(map1(v));
        d.elen.push_back(gc.elen[e]);
    }
    if (gc.has_cells()) {
        auto C = static_cast<std::int32_t>(gc.base_cells);
        d.ecell_start.assign(1, 0);
        d.ecells.clear();
        for (std::int32_t e = 0; e < E; ++e) {
            for (auto it = gc.edge_cells_begin(e); it != gc.edge_cells_end(e); ++it) d.ecells.push_back(*it);
            if (merged[e])
                for (auto it = gc.edge_cells_begin(e); it != gc.edge_cells_end(e); ++it) d.ecells.push_back(*it + C);
            d.ecell_start.push_back(static_cast<std::int64_t>(d.ecells.size()));
        }
        for (std::int32_t e = 0; e < E; ++e) {
            if (merged[e]) continue;
            for (auto it = gc.edge_cells_begin(e); it != gc.edge_cells_end(e); ++it) d.ecells.push_back(*it + C);
            d.ecell_start.push_back(static_cast<std::int64_t>(d.ecells.size()));
        }
    }
    build_adjacency(d);
    return d;
}

ShortestPaths dijkstra(const GridComplex& gc, const std::vector<std::int32_t>& sources, const std::vector<double>& weights,
                       double bound) {
    const std::vector<double>& w = weights.empty() ? gc.elen : weights;
    std::int32_t V = gc.num_vertices();
    ShortestPaths sp;
    sp.dist.assign(V, kInf);
    sp.parent_edge.assign(V, -1);
    std::vector<char> done(V, 0);
    using Item = std::pair<double, std::int32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (auto s : sources) {
        if (sp.dist[s] > 0) {
            sp.dist[s] = 0;
            pq.emplace(0.0, s);
        }
    }
    while (!pq.empty()) {
        auto [du, u] = pq.top();
        pq.pop();
        if (done[u] || du > sp.dist[u]) continue;
        done[u] = 1;
        for (std::int64_t k = gc.adj_start[u]; k < gc.adj_start[u + 1]; ++k) {
            std::int32_t v = gc.adj_to[k];
            if (done[v]) continue;
            std::int32_t e = gc.adj_edge[k];
            double nd = du + w[e];
            if (nd > bound) continue;
            if (nd < sp.dist[v]) {
                sp.dist[v] = nd;
                sp.parent_edge[v] = e;
                pq.emplace(nd, v);
            } else if (nd == sp.dist[v] && sp.parent_edge[v] >= 0) {
                std::int32_t pe = sp.parent_edge[v];
                std::int32_t pu = gc.eu[pe] == v ? gc.ev[pe] : gc.eu[pe];
                if (u < pu) sp.parent_edge[v] = e;
            }
        }
    }
    return sp;
}

PathInComplex extract_path(const GridComplex& gc, const ShortestPaths& sp, std::int32_t target) {
    PathInComplex path;
    if (sp.dist[target] == kInf) return path;
    std::int32_t v = target;
    path.vertices.push_back(v);
    while (sp.parent_edge[v] >= 0) {
        std::int32_t e = sp.parent_edge[v];
        path.edges.push_back(e);
        path.length += gc.elen[e];
        v = gc.eu[e] == v ? gc.ev[e] : gc.eu[e];
        path.vertices.push_back(v);
    }
    std::reverse(path.vertices.begin(), path.vertices.end());
    std::reverse(path.edges.begin(), path.edges.end());
    return path;
}

double geodesic_distance(const GridComplex& gc, std::int32_t p, std::int32_t q) {
    return dijkstra(gc, {p}).dist[q];
}

double geodesic_distance(const GridComplex& gc, const PointRef& p, const PointRef& q) {
    return geodesic_distance(gc, gc.resolve(p), gc.resolve(q));
}

std::int32_t project(const GridComplex& coarse, const GridComplex& fine, std::int32_t v) {
    if (coarse.grid_points != fine.grid_points || coarse.h != fine.h)
        throw std::invalid_argument("project: complexes differ in box or resolution");
    std::int64_t gp = fine.vgp[v];
    return coarse.vertex(gp, fine.vside[v], coarse.doubled ? fine.vlayer[v] : 0);
}

AhlforsReport ahlfors_scan(const GridComplex& gc, int samples, const std::vector<double>& radii, std::uint64_t seed) {
    AhlforsReport rep;
    if (radii.empty() || samples <= 0) return rep;
    double rmax = *std::max_element(radii.begin(), radii.end());
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int32_t> pick(0, gc.num_vertices() - 1);
    std::vector<double> celld(gc.num_cells(), kInf);
    std::vector<std::int64_t> touched;
    const int n = gc.n;
    for (int t = 0; t < samples; ++t) {
        std::int32_t x = pick(rng);
        auto sp = dijkstra(gc, {x}, {}, rmax);
        touched.clear();
        for (std::int32_t v = 0; v < gc.num_vertices(); ++v) {
            if (sp.dist[v] >= rmax) continue;
            auto c = gc.grid_coords(gc.vgp[v]);
            bool shared = gc.doubled && gc.base[0][gc.vgp[v]] == gc.base[1][gc.vgp[v]];
            for (unsigned corner = 0; corner < (1u << n); ++corner) {
                std::vector<std::int64_t> cc(n);
                bool ok = true;
                for (int a = 0; a < n; ++a) {
                    cc[a] = c[a] - (corner >> a & 1u);
                    if (cc[a] < 0 || cc[a] >= gc.N[a]) ok = false;
                }
                if (!ok) continue;
                std::int64_t cell = gc.cell_index(cc);
                for (int layer = 0; layer < (gc.doubled ? 2 : 1); ++layer) {
                    if (!shared && layer != gc.vlayer[v]) continue;
                    std::int64_t cl = cell + layer * gc.base_cells;
                    if (gc.cell_corner(cl, corner) != v) continue;
                    if (celld[cl] == kInf) touched.push_back(cl);
                    celld[cl] = std::min(celld[cl], sp.dist[v]);
                }
            }
        }
        for (double r : radii) {
            std::int64_t k = 0;
            for (auto cl : touched)
                if (celld[cl] < r) ++k;
            double ratio = static_cast<double>(k) * gc.cell_volume / std::pow(r, n);
            rep.min_ratio = std::min(rep.min_ratio, ratio);
            rep.max_ratio = std::max(rep.max_ratio, ratio);
            ++rep.samples;
        }
        for (auto cl : touched) celld[cl] = kInf;
    }
    return rep;
}

double DensityField::mass(double p) const {
    double m = 0;
    for (double v : value) m += std::pow(v, p);
    return m * cell_volume;
}

std::vector<double> rho_lengths(const GridComplex& gc, const std::vector<double>& rho) {
    if (!gc.has_cells()) throw std::invalid_argument("complex built without cells");
    std::vector<double> w(gc.num_edges());
    for (std::int32_t e = 0; e < gc.num_edges(); ++e) {
        double s = 0;
        auto b = gc.edge_cells_begin(e), en = gc.edge_cells_end(e);
        for (auto it = b; it != en; ++it) s += rho[*it];
        w[e] = gc.elen[e] * s / static_cast<double>(en - b);
    }
    return w;
}

std::pair<double, double> measure_comparability(const GridComplex& gc, const std::vector<std::int64_t>& cells) {
    double m = static_cast<double>(cells.size()) * gc.cell_volume;
    return {m, m};
}

std::string dump(const GridComplex& gc) {
    std::ostringstream os;
    os << "dim = " << gc.n << "\n";
    os << "h = " << gc.h.str() << "\n";
    os << "doubled = " << (gc.doubled ? "true" : "false") << "\n";
    os << "vertices = " << gc.num_vertices() << "\n";
    os << "edges = " << gc.num_edges() << "\n";
    os << "cells = " << gc.num_cells() << "\n";
    for (const auto& tp : gc.planes) {
        std::int64_t dup = 0;
        for (std::int64_t gp = 0; gp < gc.grid_points; ++gp)
            if ((gc.dupmask[gp] >> tp.axis & 1u) && gc.grid_coords(gp)[tp.axis] == tp.index) ++dup;
        os << "plane axis=" << tp.axis + 1 << " coord=" << (gc.box.lo[tp.axis] + gc.h * Dyadic(tp.index)).str()
           << " sheets=" << tp.sheets.size() << " duplicated_points=" << dup << "\n";
    }
    return os.str();
}

std::string distance_matrix_csv(const GridComplex& gc, const std::vector<std::int32_t>& vertices) {
    std::ostringstream os;
    os.precision(17);
    os << "vertex";
    for (auto v : vertices) os << "," << v;
    os << "\n";
    for (auto u : vertices) {
        auto sp = dijkstra(gc, {u});
        os << u;
        for (auto v : vertices) os << "," << sp.dist[v];
        os << "\n";
    }
    return os.str();
}

}  // namespace slitmod
