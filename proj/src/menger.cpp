#include "slitmod/menger.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "slitmod/parallel.hpp"

namespace slitmod {

namespace {

std::int64_t pow4(int j) { return std::int64_t{1} << (2 * j); }

/** floor(x / 2^{-s}) for x >= 0. */
std::int64_t floor_units(const Dyadic& x, int s) {
    if (s >= x.exp()) return x.num() << (s - x.exp());
    return x.num() >> (x.exp() - s);
}

void check_generations(const std::set<int>& A, int k) {
    if (k < 0) throw std::invalid_argument("level must be >= 0");
    for (int j : A)
        if (j < 0 || j > k) throw std::invalid_argument("generation " + std::to_string(j) + " outside [0," +
                                                        std::to_string(k) + "]");
}

}  // namespace

std::vector<SheetRect> menger_sheets(const std::set<int>& A, int k, std::vector<MengerComponent>* registry) {
    check_generations(A, k);
    std::vector<SheetRect> out;
    if (registry) registry->clear();
    for (int j : A) {
        const std::int64_t m = pow4(j);
        const Dyadic l = Dyadic::pow2_inv(2 * j);
        const Dyadic q = l.halved(2);
        for (std::int64_t a = 0; a < m; ++a)
            for (std::int64_t b = 0; b < m; ++b)
                for (std::int64_t c = 0; c < m; ++c) {
                    DyadicCube cube{2 * j, {a, b, c}};
                    Dyadic x0 = cube.lo(0), y0 = cube.lo(1), z0 = cube.lo(2);
                    Dyadic xc = cube.center(0), yc = cube.center(1), zc = cube.center(2);
                    int first = static_cast<int>(out.size());
                    out.push_back(SheetRect{1, yc, {x0, yc, zc - q}, {x0 + l, yc, zc + q}});
                    if (registry) registry->push_back(MengerComponent{j, false, cube, {first}});
                    out.push_back(SheetRect{0, xc, {xc, yc - q, z0}, {xc, yc + q, z0 + l}});
                    out.push_back(SheetRect{0, xc, {xc, y0, zc - q}, {xc, y0 + l, zc + q}});
                    if (registry) registry->push_back(MengerComponent{j, true, cube, {first + 1, first + 2}});
                }
    }
    return out;
}

MengerComplex build_menger(const std::set<int>& A, int k, const Dyadic& h, bool doubled, const BuildOptions& opt) {
    check_generations(A, k);
    if (h.sign() <= 0 || !h.is_power_of_half() || h.exp() < 2 * k + 2)
        throw std::invalid_argument("h must be a power of 1/2 dividing 4^-k/4 = " +
                                    Dyadic::pow2_inv(2 * k + 2).str());
    MengerComplex mc;
    mc.A = A;
    mc.level = k;
    auto sheets = menger_sheets(A, k, &mc.components);
    mc.gc = build_torn_complex(BoxN::unit(3), sheets, h, opt);
    if (doubled) mc.gc = double_complex(mc.gc, Glue::TopBottom);
    return mc;
}

SlitSequence menger_square_slits(const std::set<int>& A, int k, int axis) {
    check_generations(A, k);
    if (axis != 0 && axis != 1) throw std::invalid_argument("square slits are normal to x or y");
    SlitSequence seq;
    seq.box = BoxN::unit(3);
    for (int j : A) {
        const std::int64_t m = pow4(j);
        for (std::int64_t a = 0; a < m; ++a)
            for (std::int64_t b = 0; b < m; ++b)
                for (std::int64_t c = 0; c < m; ++c) {
                    DyadicCube cube{2 * j, {a, b, c}};
                    Slit s;
                    s.axis = axis;
                    s.offset = cube.center(axis);
                    for (int t = 0; t < 3; ++t)
                        if (t != axis) s.center.push_back(cube.center(t));
                    s.side = Dyadic::pow2_inv(2 * j + 1);
                    s.generation = j;
                    s.index = {a, b, c};
                    seq.slits.push_back(s);
                }
    }
    sort_slits(seq);
    return seq;
}

BaseCarpet base_carpet(const MengerComplex& mc, std::size_t samples, std::uint64_t seed) {
    const GridComplex& g3 = mc.gc;
    BaseCarpet out;
    auto faces = menger_slit_faces(mc.A, mc.level);
    BuildOptions opt;
    opt.stencil = g3.stencil;
    opt.with_cells = false;
    out.carpet = build_slit_complex(faces.z0, faces.z0.size(), g3.h, opt);
    const GridComplex& g2 = out.carpet;
    out.slack = 2.0 * g3.h.to_double() * stencil_distortion(3);

    std::mt19937_64 rng(seed);
    const std::int64_t N = g2.N[0];
    std::uniform_int_distribution<std::int64_t> coord(0, N);
    std::uniform_int_distribution<unsigned> side(0, 3);
    auto draw = [&] {
        std::int64_t i = coord(rng), j = coord(rng);
        unsigned s = side(rng);
        std::int32_t v2 = g2.vertex(g2.grid_point({i, j}), s);
        std::int32_t v3 = g3.vertex(g3.grid_point({i, j, 0}), s, 0);
        return std::pair{v2, v3};
    };
    const std::size_t sources = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(samples))));
    const std::size_t per = (samples + sources - 1) / sources;
    std::vector<std::pair<std::int32_t, std::int32_t>> src(sources);
    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> dst(sources);
    for (std::size_t s = 0; s < sources; ++s) {
        src[s] = draw();
        for (std::size_t t = 0; t < per && s * per + t < samples; ++t) dst[s].push_back(draw());
    }
    std::vector<double> worst(sources, 0.0);
    parallel_for(sources, [&](std::size_t s) {
        auto d2 = dijkstra(g2, {src[s].first});
        auto d3 = dijkstra(g3, {src[s].second});
        for (auto [t2, t3] : dst[s]) {
            double a = d2.dist[t2], b = d3.dist[t3];
            double diff = (a == kInf || b == kInf) ? (a == b ? 0.0 : kInf) : std::abs(a - b);
            worst[s] = std::max(worst[s], diff);
        }
    });
    for (std::size_t s = 0; s < sources; ++s) out.pairs += dst[s].size();
    out.max_discrepancy = *std::max_element(worst.begin(), worst.end());
    out.ok = out.max_discrepancy <= out.slack;
    return out;
}

std::string FiberGraph::label_str() const {
    switch (label) {
        case FiberLabel::Interval: return "Interval";
        case FiberLabel::Circle: return "Circle";
        case FiberLabel::L: return "L(" + std::to_string(m) + ")";
        case FiberLabel::Y: return "Y(" + std::to_string(m) + ")";
        default: return "Other";
    }
}

std::pair<FiberLabel, int> classify_fiber(int betti, int endpoints) {
    if (betti == 0 && endpoints == 2) return {FiberLabel::Interval, 0};
    if (betti == 1 && endpoints == 0) return {FiberLabel::Circle, 0};
    for (int m = 1; m < 16; ++m) {
        std::int64_t b = pow4(m - 1);
        if (endpoints == 2 && betti == b) return {FiberLabel::L, m};
        if (endpoints == 0 && betti == 2 * b + 1) return {FiberLabel::Y, m};
        if (b > betti) break;
    }
    return {FiberLabel::Other, 0};
}

namespace {

/** Contracts degree-2 chains of a connected graph given by local edges. */
void contract(FiberGraph& f, int V, const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::vector<std::pair<int, int>>> adj(V);  // (neighbour, edge)
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
        adj[edges[e].first].push_back({edges[e].second, e});
        adj[edges[e].second].push_back({edges[e].first, e});
    }
    std::vector<int> node(V, -1);
    for (int v = 0; v < V; ++v)
        if (adj[v].size() != 2) node[v] = f.nodes++;
    f.edges.clear();
    if (f.nodes == 0) {
        f.nodes = 1;
        f.edges.push_back({0, 0});
        return;
    }
    std::vector<char> used(edges.size(), 0);
    for (int v = 0; v < V; ++v) {
        if (node[v] < 0) continue;
        for (auto [w, e] : adj[v]) {
            if (used[e]) continue;
            used[e] = 1;
            int cur = w;
            while (node[cur] < 0) {
                auto [a, ea] = adj[cur][0];
                auto [b, eb] = adj[cur][1];
                int ne = used[ea] ? eb : ea;
                cur = used[ea] ? b : a;
                used[ne] = 1;
            }
            int x = node[v], y = node[cur];
            f.edges.push_back({std::min(x, y), std::max(x, y)});
        }
    }
    std::sort(f.edges.begin(), f.edges.end());
}

void finish(FiberGraph& f, int V, const std::vector<std::pair<int, int>>& edges) {
    std::vector<int> deg(V, 0);
    for (auto [a, b] : edges) ++deg[a], ++deg[b];
    f.betti = static_cast<int>(edges.size()) - V + 1;
    f.endpoints = static_cast<int>(std::count(deg.begin(), deg.end(), 1));
    auto [lab, m] = classify_fiber(f.betti, f.endpoints);
    f.label = lab;
    f.m = m;
    contract(f, V, edges);
}

}  // namespace

FiberGraph fiber(const GridComplex& gc, std::int32_t v) {
    if (gc.n != 3) throw std::invalid_argument("fibers need a 3D complex");
    auto c = gc.grid_coords(gc.vgp[v]);
    std::unordered_map<std::int32_t, int> local;
    std::vector<std::int32_t> ids;
    const int layers = gc.doubled ? 2 : 1;
    for (std::int64_t t = 0; t <= gc.N[2]; ++t) {
        std::int64_t gp = gc.grid_point({c[0], c[1], t});
        for (int L = 0; L < layers; ++L)
            for (int k = 0; k < gc.copies(gp); ++k) {
                std::int32_t id = gc.base[L][gp] + k;
                if (local.emplace(id, static_cast<int>(ids.size())).second) ids.push_back(id);
            }
    }
    // Component of v inside the column.
    std::vector<int> comp(ids.size(), -1);
    std::vector<std::int32_t> order;
    std::queue<int> q;
    comp[local.at(v)] = 0;
    q.push(local.at(v));
    std::vector<std::pair<int, int>> edges;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        order.push_back(ids[u]);
        std::int32_t gu = ids[u];
        for (std::int64_t k = gc.adj_start[gu]; k < gc.adj_start[gu + 1]; ++k) {
            auto it = local.find(gc.adj_to[k]);
            if (it == local.end()) continue;
            int w = it->second;
            if (u < w) edges.push_back({u, w});
            if (comp[w] < 0) {
                comp[w] = 0;
                q.push(w);
            }
        }
    }
    // Renumber to the component.
    std::vector<int> idx(ids.size(), -1);
    int V = 0;
    std::sort(order.begin(), order.end());
    for (auto id : order) idx[local.at(id)] = V++;
    for (auto& [a, b] : edges) a = idx[a], b = idx[b];
    FiberGraph f;
    f.vertices = order;
    finish(f, V, edges);
    return f;
}

FiberGraph fiber(const MengerComplex& mc, const Dyadic& x, const Dyadic& y, unsigned side) {
    const GridComplex& gc = mc.gc;
    std::int64_t gp = gc.grid_point({gc.to_index(x, 0), gc.to_index(y, 1), 0});
    return fiber(gc, gc.vertex(gp, side, 0));
}

bool isomorphic(const FiberGraph& a, const FiberGraph& b) {
    if (a.nodes != b.nodes || a.edges.size() != b.edges.size() || a.betti != b.betti || a.endpoints != b.endpoints)
        return false;
    const int n = a.nodes;
    auto matrix = [n](const FiberGraph& g) {
        std::vector<int> M(static_cast<std::size_t>(n) * n, 0);
        for (auto [x, y] : g.edges) {
            ++M[x * n + y];
            if (x != y) ++M[y * n + x];
        }
        return M;
    };
    auto Ma = matrix(a), Mb = matrix(b);
    auto degrees = [n](const std::vector<int>& M) {
        std::vector<int> d(n, 0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) d[i] += M[i * n + j] * (i == j ? 2 : 1);
        return d;
    };
    auto da = degrees(Ma), db = degrees(Mb);
    {
        auto sa = da, sb = db;
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        if (sa != sb) return false;
    }
    // BFS order of a; each node after the first is matched among neighbours of its parent's image.
    std::vector<int> order, parent(n, -1);
    std::vector<char> seen(n, 0);
    for (int s = 0; s < n; ++s) {
        if (seen[s]) continue;
        seen[s] = 1;
        std::queue<int> q;
        q.push(s);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            order.push_back(u);
            for (int w = 0; w < n; ++w)
                if (!seen[w] && Ma[u * n + w]) {
                    seen[w] = 1;
                    parent[w] = u;
                    q.push(w);
                }
        }
    }
    std::vector<int> f(n, -1), used(n, 0);
    long budget = 2'000'000;
    auto consistent = [&](int pos, int img) {
        int u = order[pos];
        if (da[u] != db[img] || Ma[u * n + u] != Mb[img * n + img]) return false;
        for (int t = 0; t < pos; ++t) {
            int w = order[t];
            if (Ma[u * n + w] != Mb[img * n + f[w]]) return false;
        }
        return true;
    };
    auto search = [&](auto&& self, int pos) -> bool {
        if (pos == n) return true;
        if (--budget < 0) return false;
        int u = order[pos];
        for (int img = 0; img < n; ++img) {
            if (used[img]) continue;
            if (parent[u] >= 0 && !Mb[f[parent[u]] * n + img]) continue;
            if (!consistent(pos, img)) continue;
            f[u] = img;
            used[img] = 1;
            if (self(self, pos + 1)) return true;
            used[img] = 0;
            f[u] = -1;
        }
        return false;
    };
    return search(search, 0);
}

FiberPrediction fiber_predicate(const std::set<int>& A, int k, const Dyadic& x, const Dyadic& y, bool doubled) {
    check_generations(A, k);
    auto off = [] { return std::invalid_argument("not on a slit"); };
    if (x.sign() <= 0 || x >= Dyadic(1) || y.sign() < 0 || y > Dyadic(1) || x.exp() % 2 == 0) throw off();
    const int i = (x.exp() - 1) / 2;
    if (!A.count(i)) throw off();
    const int s = 2 * i;  // slit column width 4^-i
    std::int64_t m = std::min(floor_units(y, s), pow4(i) - 1);
    Dyadic yc = Dyadic::make(2 * m + 1, s + 1);
    Dyadic d = abs(y - yc), half = Dyadic::pow2_inv(s + 2);
    if (d > half) throw off();

    FiberPrediction p;
    p.slit_generation = i;
    int single = 0;
    if (d == half) {
        p.kind = FiberPrediction::Case::Endpoint;
        single = static_cast<int>(pow4(i));
    } else if (y.exp() % 2 == 1 && A.count((y.exp() - 1) / 2)) {
        p.kind = FiberPrediction::Case::SheetCenter;
        p.sheet_generation = (y.exp() - 1) / 2;
        single = static_cast<int>(pow4(p.sheet_generation));
    }
    p.betti = doubled ? 2 * single + 1 : single;
    p.endpoints = doubled ? 0 : 2;
    std::tie(p.label, p.m) = classify_fiber(p.betti, p.endpoints);
    return p;
}

namespace {

bool covers(const Dyadic& lo, const Dyadic& hi, const Dyadic& p, int sign) {
    return sign > 0 ? (lo <= p && p < hi) : (lo < p && p <= hi);
}

/** Interior test of a union of rects of one plane at in-plane point (u, z); u on axis `ua`. */
bool duplicated(const std::vector<const SheetRect*>& rects, int ua, const Dyadic& u, const Dyadic& z) {
    if (rects.empty()) return false;
    for (int su : {-1, 1}) {
        if ((su < 0 && u.is_zero()) || (su > 0 && u == Dyadic(1))) continue;
        for (int sz : {-1, 1}) {
            if ((sz < 0 && z.is_zero()) || (sz > 0 && z == Dyadic(1))) continue;
            bool hit = false;
            for (const SheetRect* r : rects)
                if (covers(r->lo[ua], r->hi[ua], u, su) && covers(r->lo[2], r->hi[2], z, sz)) {
                    hit = true;
                    break;
                }
            if (!hit) return false;
        }
    }
    return true;
}

}  // namespace

ColumnFiber column_fiber(const std::vector<SheetRect>& sheets, const Dyadic& x, const Dyadic& y, unsigned side,
                         bool doubled) {
    std::vector<const SheetRect*> xs, ys;
    std::vector<Dyadic> zs{Dyadic(0), Dyadic(1)};
    for (const auto& r : sheets) {
        if (r.axis == 0 && r.coord == x) xs.push_back(&r);
        else if (r.axis == 1 && r.coord == y) ys.push_back(&r);
        else continue;
        zs.push_back(max(r.lo[2], Dyadic(0)));
        zs.push_back(min(r.hi[2], Dyadic(1)));
    }
    std::sort(zs.begin(), zs.end());
    zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
    auto mask_at = [&](const Dyadic& z) {
        return (duplicated(xs, 1, y, z) ? 1u : 0u) | (duplicated(ys, 0, x, z) ? 2u : 0u);
    };
    const int B = static_cast<int>(zs.size());
    std::vector<unsigned> mb(B), mi(B - 1);
    for (int t = 0; t < B; ++t) mb[t] = mask_at(zs[t]);
    for (int t = 0; t + 1 < B; ++t) mi[t] = mask_at((zs[t] + zs[t + 1]).halved());

    ColumnFiber out;
    for (unsigned m : mb) out.torn |= m != 0;
    for (unsigned m : mi) out.torn |= m != 0;

    std::map<std::tuple<int, int, int, unsigned>, int> id;  // (layer, kind, t, copy)
    auto node = [&](int layer, int kind, int t, unsigned sub) {
        if (kind == 0 && doubled && (t == 0 || t == B - 1)) layer = 0;
        auto key = std::tuple{layer, kind, t, sub};
        auto it = id.find(key);
        if (it != id.end()) return it->second;
        int n = static_cast<int>(id.size());
        id.emplace(key, n);
        return n;
    };
    std::vector<std::pair<int, int>> edges;
    const int layers = doubled ? 2 : 1;
    for (int L = 0; L < layers; ++L)
        for (int t = 0; t + 1 < B; ++t)
            for (unsigned r = 0; r < 4; ++r) {
                if ((r & mi[t]) != r) continue;
                int a = node(L, 1, t, r);
                for (int e : {t, t + 1})
                    for (unsigned s = 0; s < 4; ++s) {
                        if ((s & mb[e]) != s) continue;
                        if ((s ^ r) & mb[e] & mi[t]) continue;
                        edges.push_back({a, node(L, 0, e, s)});
                    }
            }
    const int start = node(0, 0, 0, side & mb[0]);
    const int V = static_cast<int>(id.size());
    std::vector<std::vector<int>> adj(V);
    for (auto [a, b] : edges) adj[a].push_back(b), adj[b].push_back(a);
    std::vector<char> seen(V, 0);
    std::vector<int> stack{start};
    seen[start] = 1;
    int nv = 0, deg2 = 0, ones = 0;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        ++nv;
        deg2 += static_cast<int>(adj[u].size());
        if (adj[u].size() == 1) ++ones;
        for (int w : adj[u])
            if (!seen[w]) seen[w] = 1, stack.push_back(w);
    }
    out.betti = deg2 / 2 - nv + 1;
    out.endpoints = ones;
    return out;
}

FourPointsResult four_points_check(const MengerComplex& mc, const Slit& s) {
    const GridComplex& gc = mc.gc;
    if (s.axis != 0 || s.center.size() != 1) throw std::invalid_argument("expected a base slit normal to x");
    const std::int64_t ix = gc.to_index(s.offset, 0);
    const Dyadic half = s.side.halved();
    const std::int64_t lo = gc.to_index(s.center[0] - half, 1), hi = gc.to_index(s.center[0] + half, 1);
    const std::int64_t mid = gc.to_index(s.center[0], 1);

    struct Point {
        std::int64_t iy;
        unsigned side;
    };
    std::vector<Point> pts;
    for (std::int64_t iy = lo; iy <= hi; ++iy) {
        std::int64_t gp = gc.grid_point({ix, iy, 0});
        for (int k = 0; k < gc.copies(gp); ++k) pts.push_back({iy, gc.vside[gc.base[0][gp] + k]});
    }
    std::vector<FiberGraph> fib(pts.size());
    parallel_for(pts.size(), [&](std::size_t t) {
        std::int64_t gp = gc.grid_point({ix, pts[t].iy, 0});
        fib[t] = fiber(gc, gc.vertex(gp, pts[t].side, 0));
    });

    FourPointsResult r;
    r.scanned = pts.size();
    std::vector<std::size_t> special;
    for (std::size_t t = 0; t < pts.size(); ++t)
        if (pts[t].iy == lo || pts[t].iy == hi || pts[t].iy == mid) special.push_back(t);
    if (special.empty()) return r;
    const FiberGraph& ref = fib[special.front()];
    r.special_betti = ref.betti;
    r.isomorphic = special.size() == 4;
    for (std::size_t t : special) r.isomorphic = r.isomorphic && isomorphic(ref, fib[t]);
    std::size_t at_max = 0;
    for (std::size_t t = 0; t < pts.size(); ++t) {
        r.max_betti = std::max(r.max_betti, fib[t].betti);
        if (fib[t].betti == ref.betti && isomorphic(ref, fib[t])) r.matches.push_back({pts[t].iy, pts[t].side});
    }
    for (const auto& f : fib) at_max += f.betti == r.max_betti;
    bool exact = r.matches.size() == 4;
    for (auto [iy, sd] : r.matches) exact = exact && (iy == lo || iy == hi || iy == mid);
    r.ok = exact && r.isomorphic;
    r.maximal = r.ok && r.max_betti == r.special_betti && at_max == 4;
    return r;
}

std::vector<SpectrumEntry> FiberSpectrum::up_to(int generation) const {
    std::vector<SpectrumEntry> out;
    for (const auto& e : entries)
        if (e.generation <= generation) out.push_back(e);
    return out;
}

FiberSpectrum fiber_spectrum(const std::set<int>& A, int k, const Dyadic& h) {
    BuildOptions opt;
    opt.stencil = Stencil::Axis;
    opt.with_cells = false;
    MengerComplex mc = build_menger(A, k, h, false, opt);
    auto faces = menger_slit_faces(A, k);
    const auto& slits = faces.z0.slits;
    std::vector<int> best(slits.size(), 0);
    parallel_for(slits.size(), [&](std::size_t t) {
        const Slit& s = slits[t];
        Dyadic half = s.side.halved();
        for (const Dyadic& y : {s.center[0] - half, s.center[0], s.center[0] + half})
            for (unsigned side : {0u, 1u})
                best[t] = std::max(best[t], fiber(mc, s.offset, y, side).betti);
    });
    std::map<std::pair<int, int>, int> count;
    for (std::size_t t = 0; t < slits.size(); ++t) ++count[{slits[t].generation, best[t]}];
    FiberSpectrum sp;
    for (auto [key, c] : count) sp.entries.push_back({key.first, key.second, c});
    return sp;
}

bool spectra_distinguish(const std::set<int>& A, const std::set<int>& B, int k, const Dyadic& h) {
    return !(fiber_spectrum(A, k, h) == fiber_spectrum(B, k, h));
}

namespace {

struct CubeGrid {
    std::int64_t step = 0;  // centre spacing in grid units
    std::int64_t R = 0;     // half side in grid units
    std::int64_t count = 0; // centres per axis
};

CubeGrid cube_grid(const GridComplex& gc, int n) {
    if (gc.n != 3) throw std::invalid_argument("covering needs a 3D complex");
    if (gc.doubled) throw std::invalid_argument("covering is checked on a single copy");
    Dyadic r = Dyadic::pow2_inv(2 * n + 1);
    if (!r.multiple_of(gc.h)) throw std::invalid_argument("h must divide 4^-n/2");
    CubeGrid g;
    g.R = r.div_exact(gc.h);
    g.step = 2 * g.R;
    g.count = gc.N[0] / g.step + 1;
    return g;
}

/** Vertex copies of the closure of the cube centred at index a. */
std::vector<std::int32_t> closure(const GridComplex& gc, const CubeGrid& g, const std::array<std::int64_t, 3>& a) {
    std::vector<std::int64_t> lo(3), hi(3);
    for (int t = 0; t < 3; ++t) {
        lo[t] = std::max<std::int64_t>(a[t] * g.step - g.R, 0);
        hi[t] = std::min(a[t] * g.step + g.R, gc.N[t]) - 1;
    }
    std::vector<std::int32_t> out;
    for (std::int64_t i = lo[0]; i <= hi[0]; ++i)
        for (std::int64_t j = lo[1]; j <= hi[1]; ++j)
            for (std::int64_t k = lo[2]; k <= hi[2]; ++k) {
                std::int64_t cell = gc.cell_index({i, j, k});
                for (unsigned b = 0; b < 8; ++b) out.push_back(gc.cell_corner(cell, b));
            }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool face_adjacent(const std::array<std::int64_t, 3>& a, const std::array<std::int64_t, 3>& b) {
    int diff = 0;
    for (int t = 0; t < 3; ++t) diff += a[t] != b[t];
    return diff == 1;
}

double closure_distance(const ShortestPaths& sp, const std::vector<std::int32_t>& target) {
    double d = kInf;
    for (auto v : target) d = std::min(d, sp.dist[v]);
    return d;
}

}  // namespace

CoveringReport covering_order(const MengerComplex& mc, int n, double eps) {
    const GridComplex& gc = mc.gc;
    if (n < 1 || n > mc.level) throw std::invalid_argument("covering level must be in [1, level]");
    const double unit = std::ldexp(1.0, -2 * n);
    if (!(eps > 0) || !(eps < unit / 8)) throw std::invalid_argument("eps must lie in (0, 4^-(n+1)/2)");
    CubeGrid g = cube_grid(gc, n);
    CoveringReport rep;
    rep.bound = unit / 4;
    rep.slack = 2.0 * gc.h.to_double() * stencil_distortion(3);

    std::vector<std::array<std::int64_t, 3>> cubes;
    for (std::int64_t a = 0; a < g.count; ++a)
        for (std::int64_t b = 0; b < g.count; ++b)
            for (std::int64_t c = 0; c < g.count; ++c) cubes.push_back({a, b, c});
    std::vector<std::vector<std::int32_t>> cl(cubes.size());
    parallel_for(cubes.size(), [&](std::size_t t) { cl[t] = closure(gc, g, cubes[t]); });
    auto cube_id = [&](const std::array<std::int64_t, 3>& a) { return (a[0] * g.count + a[1]) * g.count + a[2]; };

    const double search = rep.bound + 2.0 * gc.h.to_double();
    std::vector<std::vector<std::int32_t>> near(cubes.size());
    std::vector<std::vector<CubePair>> pairs(cubes.size());
    parallel_for(cubes.size(), [&](std::size_t t) {
        auto sp = dijkstra(gc, cl[t], {}, search);
        for (std::int32_t v = 0; v < gc.num_vertices(); ++v)
            if (sp.dist[v] < eps) near[t].push_back(v);
        const auto& a = cubes[t];
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    std::array<std::int64_t, 3> b{a[0] + dx, a[1] + dy, a[2] + dz};
                    bool in = true;
                    for (int s = 0; s < 3; ++s) in = in && b[s] >= 0 && b[s] < g.count;
                    if (!in || b <= a) continue;
                    CubePair p{a, b, face_adjacent(a, b), 0.0};
                    p.distance = std::min(closure_distance(sp, cl[cube_id(b)]), search);
                    pairs[t].push_back(p);
                }
    });
    std::vector<std::uint8_t> order(gc.num_vertices(), 0);
    for (const auto& list : near)
        for (auto v : list) ++order[v];
    for (auto o : order) {
        rep.max_order = std::max<int>(rep.max_order, o);
        if (static_cast<std::size_t>(o) >= rep.histogram.size()) rep.histogram.resize(o + 1, 0);
        ++rep.histogram[o];
    }
    for (auto& list : pairs)
        for (auto& p : list) {
            if (!p.adjacent && p.distance < rep.bound - rep.slack) ++rep.violations;
            rep.pairs.push_back(p);
        }
    return rep;
}

CubePair cube_dichotomy(const MengerComplex& mc, int n, const std::array<std::int64_t, 3>& a,
                        const std::array<std::int64_t, 3>& b) {
    const GridComplex& gc = mc.gc;
    CubeGrid g = cube_grid(gc, n);
    for (int s = 0; s < 3; ++s)
        if (a[s] < 0 || a[s] >= g.count || b[s] < 0 || b[s] >= g.count)
            throw std::invalid_argument("cube centre outside the unit cube");
    CubePair p{a, b, face_adjacent(a, b), 0.0};
    auto sp = dijkstra(gc, closure(gc, g, a));
    p.distance = closure_distance(sp, closure(gc, g, b));
    return p;
}

namespace {

struct K5Builder {
    const GridComplex& gc;
    std::int64_t N;

    std::int64_t gp(std::int64_t x, std::int64_t y, std::int64_t z) const { return gc.grid_point({x, y, z}); }

    std::string where(std::int64_t g) const {
        std::string s = "(";
        for (int t = 0; t < 3; ++t) s += (t ? "," : "") + gc.coord_exact(g, t).str();
        return s + ")";
    }

    std::int32_t single(std::int64_t g) const {
        if (gc.copies(g) != 1) throw std::runtime_error("k5: path blocked, torn point " + where(g));
        return gc.vertex(g, 0, 0);
    }

    /** Appends the straight chain from the current end to grid point `to`. */
    void chain(PathInComplex& p, std::int64_t to) const {
        auto c = gc.grid_coords(gc.vgp[p.vertices.back()]);
        auto e = gc.grid_coords(to);
        int axis = -1;
        for (int t = 0; t < 3; ++t)
            if (c[t] != e[t]) {
                if (axis >= 0) throw std::logic_error("chain must be axis-parallel");
                axis = t;
            }
        while (axis >= 0 && c[axis] != e[axis]) {
            std::int32_t u = p.vertices.back();
            c[axis] += e[axis] > c[axis] ? 1 : -1;
            std::int32_t w = single(gc.grid_point(c));
            std::int32_t edge = -1;
            for (std::int64_t k = gc.adj_start[u]; k < gc.adj_start[u + 1]; ++k)
                if (gc.adj_to[k] == w) edge = gc.adj_edge[k];
            if (edge < 0) throw std::runtime_error("k5: path blocked, missing edge at " + where(gc.grid_point(c)));
            p.vertices.push_back(w);
            p.edges.push_back(edge);
            p.length += gc.elen[edge];
        }
    }

    PathInComplex straight(std::initializer_list<std::int64_t> pts) const {
        PathInComplex p;
        auto it = pts.begin();
        p.vertices.push_back(single(*it));
        for (++it; it != pts.end(); ++it) chain(p, *it);
        return p;
    }

    /** Shortest path from a to b using only grid points accepted by `ok`. */
    template <class Ok>
    PathInComplex restricted(const std::string& name, std::int32_t a, std::int32_t b, Ok ok) const {
        std::vector<char> allow(gc.grid_points, 0);
        for (std::int64_t g = 0; g < gc.grid_points; ++g) {
            auto c = gc.grid_coords(g);
            allow[g] = ok(c[0], c[1], c[2]);
        }
        allow[gc.vgp[a]] = allow[gc.vgp[b]] = 1;
        std::vector<double> w(gc.num_edges());
        for (std::int32_t e = 0; e < gc.num_edges(); ++e)
            w[e] = allow[gc.vgp[gc.eu[e]]] && allow[gc.vgp[gc.ev[e]]] ? gc.elen[e] : kInf;
        auto sp = dijkstra(gc, {a}, w);
        if (sp.dist[b] == kInf)
            throw std::runtime_error("k5: path blocked, no curve " + name + " inside its region at h = " + gc.h.str());
        return extract_path(gc, sp, b);
    }
};

void append(PathInComplex& p, const PathInComplex& q) {
    if (p.vertices.empty()) {
        p = q;
        return;
    }
    if (p.vertices.back() != q.vertices.front()) throw std::logic_error("k5: pieces do not meet");
    p.vertices.insert(p.vertices.end(), q.vertices.begin() + 1, q.vertices.end());
    p.edges.insert(p.edges.end(), q.edges.begin(), q.edges.end());
    p.length += q.length;
}

}  // namespace

K5Witness k5_witness(const MengerComplex& mc) {
    const GridComplex& gc = mc.gc;
    if (gc.n != 3 || gc.doubled) throw std::invalid_argument("k5 witness needs a single 3D complex");
    if (mc.level < 1) throw std::invalid_argument("k5 witness needs level >= 1");
    if (gc.h > Dyadic::pow2_inv(4)) throw std::invalid_argument("k5 witness needs h <= 1/16");
    if (gc.stencil != Stencil::Full) throw std::invalid_argument("k5 witness needs the full stencil");
    const std::int64_t N = gc.N[0], Q = N / 4;
    K5Builder kb{gc, N};
    K5Witness w;
    const std::int64_t pa = kb.gp(0, 0, 0), pb = kb.gp(N, 0, 0), pc = kb.gp(0, N, 0), pd = kb.gp(0, 0, N),
                       pe = kb.gp(N, N, N);
    w.corners = {kb.single(pa), kb.single(pb), kb.single(pc), kb.single(pd), kb.single(pe)};
    auto [a, b, c, d, e] = w.corners;

    w.names = {"ab", "ac", "ad", "be", "ce", "de", "bc", "cd", "db", "ae"};
    w.curves[0] = kb.straight({pa, pb});
    w.curves[1] = kb.straight({pa, pc});
    w.curves[2] = kb.straight({pa, pd});
    w.curves[3] = kb.straight({pb, kb.gp(N, N, 0), pe});
    w.curves[4] = kb.straight({pc, kb.gp(0, N, N), pe});
    w.curves[5] = kb.straight({pd, kb.gp(N, 0, N), pe});
    auto open = [N](std::int64_t t) { return t > 0 && t < N; };
    w.curves[6] = kb.restricted("bc", b, c, [&](auto x, auto y, auto z) {
        return z == 0 && open(x) && open(y) && !(x <= Q && y <= Q);
    });
    w.curves[7] = kb.restricted("cd", c, d, [&](auto x, auto y, auto z) { return x == 0 && open(y) && open(z); });
    w.curves[8] = kb.restricted("db", d, b, [&](auto x, auto y, auto z) { return y == 0 && open(x) && open(z); });

    const std::int64_t low = kb.gp(Q, Q, 0), high = kb.gp(Q, Q, N);
    PathInComplex ae = kb.restricted("ae (bottom)", a, kb.single(low), [&](auto x, auto y, auto z) {
        return z == 0 && x > 0 && y > 0 && x <= Q && y <= Q;
    });
    append(ae, kb.straight({low, high}));
    append(ae, kb.restricted("ae (top)", kb.single(high), e, [&](auto x, auto y, auto z) {
        return z == N && x >= Q && y >= Q && x < N && y < N;
    }));
    w.curves[9] = ae;

    std::array<std::array<int, 2>, 10> ends{{{0, 1}, {0, 2}, {0, 3}, {1, 4}, {2, 4}, {3, 4}, {1, 2}, {2, 3}, {3, 1}, {0, 4}}};
    std::array<std::vector<std::int32_t>, 10> sets;
    for (int t = 0; t < 10; ++t) {
        sets[t] = w.curves[t].vertices;
        std::sort(sets[t].begin(), sets[t].end());
    }
    for (int s = 0; s < 10; ++s)
        for (int t = s + 1; t < 10; ++t) {
            std::vector<std::int32_t> common;
            std::set_intersection(sets[s].begin(), sets[s].end(), sets[t].begin(), sets[t].end(),
                                  std::back_inserter(common));
            for (auto v : common) {
                bool shared_end = false;
                for (int x : ends[s])
                    for (int y : ends[t]) shared_end = shared_end || (x == y && w.corners[x] == v);
                if (!shared_end) {
                    w.bad_pairs.push_back({s, t});
                    break;
                }
            }
        }
    w.disjoint = w.bad_pairs.empty();
    return w;
}

}  // namespace slitmod
