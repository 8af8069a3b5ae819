#include "slitmod/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

namespace slitmod {

CurveFamilySpec CurveFamilySpec::opposite_faces(int axis, bool avoid_slits) {
    CurveFamilySpec f;
    f.kind = Kind::ConnectOppositeFaces;
    f.axis = axis;
    f.avoid_slits = avoid_slits;
    return f;
}

CurveFamilySpec CurveFamilySpec::vertical_lines(int axis, std::vector<char> shadow) {
    CurveFamilySpec f;
    f.kind = Kind::VerticalLines;
    f.axis = axis;
    f.shadow = std::move(shadow);
    return f;
}

CurveFamilySpec CurveFamilySpec::band(int k, int j) {
    if (k < 0 || j < 0 || j >= (1 << (k + 1))) throw std::invalid_argument("band index out of range");
    CurveFamilySpec f;
    f.kind = Kind::NonVerticalBand;
    f.k = k;
    f.j = j;
    return f;
}

CurveFamilySpec CurveFamilySpec::fiber_loops(std::vector<char> region) {
    CurveFamilySpec f;
    f.kind = Kind::FiberLoops;
    f.region = std::move(region);
    return f;
}

std::string CurveFamilySpec::name() const {
    switch (kind) {
        case Kind::ConnectOppositeFaces:
            return std::string("faces") + std::to_string(axis + 1) + (avoid_slits ? "" : "_noslit");
        case Kind::VerticalLines: return "lines" + std::to_string(axis + 1);
        case Kind::NonVerticalBand: return "band_" + std::to_string(k) + "_" + std::to_string(j);
        case Kind::FiberLoops: return "fiber_loops";
    }
    return "unknown";
}

std::pair<std::int64_t, std::int64_t> band_indices(const GridComplex& gc, int k, int j) {
    std::int64_t parts = std::int64_t{1} << (k + 1);
    if (gc.N[0] % parts != 0) throw std::invalid_argument("resolution misaligned for band J_{k,j}");
    std::int64_t w = gc.N[0] / parts;
    return {w * j, w * (j + 1)};
}

PathConstraint constraint_of(const GridComplex& gc, const PathInComplex& path) {
    std::vector<std::pair<std::int32_t, double>> acc;
    for (auto e : path.edges) {
        auto b = gc.edge_cells_begin(e), en = gc.edge_cells_end(e);
        double w = gc.elen[e] / static_cast<double>(en - b);
        for (auto it = b; it != en; ++it) acc.emplace_back(*it, w);
    }
    std::sort(acc.begin(), acc.end());
    PathConstraint c;
    for (const auto& [cell, w] : acc) {
        if (!c.cells.empty() && c.cells.back() == cell) c.coef.back() += w;
        else {
            c.cells.push_back(cell);
            c.coef.push_back(w);
        }
    }
    c.path = path;
    return c;
}

namespace {

std::uint64_t path_hash(const PathInComplex& p) {
    std::vector<std::int32_t> e = p.edges;
    std::sort(e.begin(), e.end());
    std::uint64_t h = 1469598103934665603ull;
    for (auto x : e) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(x));
        h *= 1099511628211ull;
    }
    return h;
}

double path_rho_length(const PathInComplex& p, const std::vector<double>& w) {
    double s = 0;
    for (auto e : p.edges) s += w[e];
    return s;
}

// Crossings of the slab lo <= x_axis <= hi from {x_axis = lo} to {x_axis = hi}, over allowed edges.
class CrossingOracle : public FamilyOracle {
public:
    CrossingOracle(const GridComplex& gc, int axis, std::int64_t lo, std::int64_t hi, std::vector<char> edge_ok,
                   std::unique_ptr<GridComplex> owned = nullptr)
        : owned_(std::move(owned)), gc_(owned_ ? *owned_ : gc), axis_(axis), edge_ok_(std::move(edge_ok)) {
        if (!gc_.has_cells()) throw std::invalid_argument("complex built without cells");
        for (std::int32_t v = 0; v < gc_.num_vertices(); ++v) {
            std::int64_t c = gc_.vgp[v] / gc_.vstride[axis] % (gc_.N[axis] + 1);
            if (c == lo) sources_.push_back(v);
            if (c == hi) targets_.push_back(v);
        }
        is_source_.assign(gc_.num_vertices(), 0);
        is_target_.assign(gc_.num_vertices(), 0);
        for (auto v : sources_) is_source_[v] = 1;
        for (auto v : targets_) is_target_[v] = 1;
    }

    const GridComplex& complex() const override { return gc_; }

    bool crossing(std::vector<std::int32_t>& sources, std::vector<std::int32_t>& targets,
                  std::vector<char>& edge_ok) const override {
        sources = sources_;
        targets = targets_;
        edge_ok = edge_ok_;
        return true;
    }

    std::vector<double> weights(const std::vector<double>& rho) const {
        auto w = rho_lengths(gc_, rho);
        if (!edge_ok_.empty())
            for (std::size_t e = 0; e < w.size(); ++e)
                if (!edge_ok_[e]) w[e] = kInf;
        return w;
    }

    double min_length(const std::vector<double>& rho, PathInComplex* witness) const override {
        auto w = weights(rho);
        auto sp = dijkstra(gc_, sources_, w);
        double best = kInf;
        std::int32_t arg = -1;
        for (auto v : targets_)
            if (sp.dist[v] < best) best = sp.dist[v], arg = v;
        if (witness && arg >= 0) *witness = trim(extract_path(gc_, sp, arg));
        return best;
    }

    void violated(const std::vector<double>& rho, double threshold, std::size_t cap,
                  std::vector<PathConstraint>& out) const override {
        auto w = weights(rho);
        double scale = 0;
        for (double r : rho) scale = std::max(scale, r);
        double eta = 1e-7 * (scale > 0 ? scale : 1.0);
        std::vector<double> wp(w);
        for (std::size_t e = 0; e < wp.size(); ++e) wp[e] += eta * gc_.elen[e];
        auto from_src = dijkstra(gc_, sources_, wp);
        auto from_dst = dijkstra(gc_, targets_, wp);
        // Candidates: shortest members through every vertex of a coarse sublattice and every face vertex.
        std::int64_t stride = 1;
        while (gc_.grid_points / std::pow(static_cast<double>(stride), gc_.n) > 4.0 * static_cast<double>(cap)) stride *= 2;
        std::vector<std::pair<double, std::int32_t>> cand;
        for (std::int32_t v = 0; v < gc_.num_vertices(); ++v) {
            double t = from_src.dist[v] + from_dst.dist[v];
            if (!(t < kInf)) continue;
            bool pick = is_source_[v] || is_target_[v];
            if (!pick) {
                auto c = gc_.grid_coords(gc_.vgp[v]);
                pick = true;
                for (int a = 0; a < gc_.n; ++a) pick &= c[a] % stride == 0;
            }
            if (pick) cand.emplace_back(t, v);
        }
        std::stable_sort(cand.begin(), cand.end());
        std::unordered_set<std::uint64_t> seen;
        for (const auto& [t, v] : cand) {
            if (out.size() >= cap) break;
            PathInComplex a = extract_path(gc_, from_src, v), b = extract_path(gc_, from_dst, v);
            for (std::size_t i = b.vertices.size(); i-- > 1;) {
                a.vertices.push_back(b.vertices[i - 1]);
                a.edges.push_back(b.edges[i - 1]);
            }
            PathInComplex p = trim(std::move(a));
            if (p.edges.empty()) continue;
            if (path_rho_length(p, w) >= threshold) continue;
            if (!seen.insert(path_hash(p)).second) continue;
            out.push_back(constraint_of(gc_, p));
        }
    }

private:
    // Keeps the part after the last source vertex, up to the first target vertex.
    PathInComplex trim(PathInComplex p) const {
        std::size_t first = 0;
        for (std::size_t i = 0; i < p.vertices.size(); ++i)
            if (is_source_[p.vertices[i]]) first = i;
        std::size_t last = p.vertices.size() - 1;
        for (std::size_t i = first; i < p.vertices.size(); ++i)
            if (is_target_[p.vertices[i]]) {
                last = i;
                break;
            }
        PathInComplex q;
        q.vertices.assign(p.vertices.begin() + static_cast<std::ptrdiff_t>(first),
                          p.vertices.begin() + static_cast<std::ptrdiff_t>(last) + 1);
        q.edges.assign(p.edges.begin() + static_cast<std::ptrdiff_t>(first),
                       p.edges.begin() + static_cast<std::ptrdiff_t>(last));
        for (auto e : q.edges) q.length += gc_.elen[e];
        return q;
    }

    std::unique_ptr<GridComplex> owned_;
    const GridComplex& gc_;
    int axis_;
    std::vector<char> edge_ok_;
    std::vector<std::int32_t> sources_, targets_;
    std::vector<char> is_source_, is_target_;
};

std::int32_t find_edge(const GridComplex& gc, std::int32_t u, std::int32_t v) {
    for (std::int64_t k = gc.adj_start[u]; k < gc.adj_start[u + 1]; ++k)
        if (gc.adj_to[k] == v) return gc.adj_edge[k];
    return -1;
}

// Straight axis-parallel segments through the interior of a cross-section shadow.
class LinesOracle : public FamilyOracle {
public:
    LinesOracle(const GridComplex& gc, int axis, const std::vector<char>& shadow) : gc_(gc) {
        if (!gc.has_cells()) throw std::invalid_argument("complex built without cells");
        const int n = gc.n;
        std::vector<int> others;
        for (int b = 0; b < n; ++b)
            if (b != axis) others.push_back(b);
        std::int64_t cross_cells = 1;
        for (int b : others) cross_cells *= gc.N[b];
        if (static_cast<std::int64_t>(shadow.size()) != cross_cells) throw std::invalid_argument("shadow size mismatch");
        auto shadow_at = [&](const std::vector<std::int64_t>& c) {
            std::int64_t idx = 0;
            for (int b : others) idx = idx * gc.N[b] + c[b];
            return shadow[idx] != 0;
        };
        for (std::int64_t gp = 0; gp < gc.grid_points; ++gp) {
            auto c = gc.grid_coords(gp);
            if (c[axis] != 0) continue;
            bool ok = true;
            std::vector<std::int64_t> cc(n, 0);
            for (unsigned corner = 0; corner < (1u << others.size()) && ok; ++corner) {
                bool in_range = true;
                for (std::size_t t = 0; t < others.size(); ++t) {
                    int b = others[t];
                    cc[b] = c[b] - (corner >> t & 1u);
                    if (cc[b] < 0 || cc[b] >= gc.N[b]) in_range = false;
                }
                if (in_range && !shadow_at(cc)) ok = false;
            }
            if (!ok) continue;
            PathInComplex p;
            std::int32_t v = gc.vertex(gp);
            p.vertices.push_back(v);
            for (std::int64_t s = 1; s <= gc.N[axis] && ok; ++s) {
                c[axis] = s;
                std::int32_t u = gc.vertex(gc.grid_point(c));
                std::int32_t e = find_edge(gc, v, u);
                if (e < 0) ok = false;
                else {
                    p.vertices.push_back(u);
                    p.edges.push_back(e);
                    p.length += gc.elen[e];
                    v = u;
                }
            }
            if (ok) lines_.push_back(constraint_of(gc, p));
        }
    }

    const GridComplex& complex() const override { return gc_; }

    double min_length(const std::vector<double>& rho, PathInComplex* witness) const override {
        double best = kInf;
        for (const auto& l : lines_) {
            double s = length(l, rho);
            if (s < best) {
                best = s;
                if (witness) *witness = l.path;
            }
        }
        return best;
    }

    void violated(const std::vector<double>& rho, double threshold, std::size_t cap,
                  std::vector<PathConstraint>& out) const override {
        std::vector<std::pair<double, std::size_t>> v;
        for (std::size_t i = 0; i < lines_.size(); ++i) {
            double s = length(lines_[i], rho);
            if (s < threshold) v.emplace_back(s, i);
        }
        std::sort(v.begin(), v.end());
        for (const auto& [s, i] : v) {
            if (out.size() >= cap) break;
            out.push_back(lines_[i]);
        }
    }

private:
    static double length(const PathConstraint& c, const std::vector<double>& rho) {
        double s = 0;
        for (std::size_t k = 0; k < c.cells.size(); ++k) s += c.coef[k] * rho[c.cells[k]];
        return s;
    }

    const GridComplex& gc_;
    std::vector<PathConstraint> lines_;
};

}  // namespace

std::unique_ptr<FamilyOracle> make_oracle(const GridComplex& gc, const CurveFamilySpec& f) {
    using K = CurveFamilySpec::Kind;
    switch (f.kind) {
        case K::ConnectOppositeFaces: {
            if (f.axis < 0 || f.axis >= gc.n) throw std::invalid_argument("family axis out of range");
            std::unique_ptr<GridComplex> owned;
            if (!f.avoid_slits) {
                BuildOptions opt;
                opt.stencil = gc.stencil;
                GridComplex plain = build_torn_complex(gc.box, {}, gc.h, opt);
                owned = std::make_unique<GridComplex>(gc.doubled ? double_complex(plain, gc.glue) : std::move(plain));
            }
            return std::make_unique<CrossingOracle>(gc, f.axis, 0, gc.N[f.axis], std::vector<char>{},
                                                    std::move(owned));
        }
        case K::VerticalLines: return std::make_unique<LinesOracle>(gc, f.axis, f.shadow);
        case K::NonVerticalBand: {
            auto [lo, hi] = band_indices(gc, f.k, f.j);
            std::vector<char> ok(gc.num_edges());
            for (std::int32_t e = 0; e < gc.num_edges(); ++e) {
                std::int64_t x0 = gc.vgp[gc.eu[e]] / gc.vstride[0], x1 = gc.vgp[gc.ev[e]] / gc.vstride[0];
                ok[e] = x0 >= lo && x0 <= hi && x1 >= lo && x1 <= hi;
            }
            return std::make_unique<CrossingOracle>(gc, 0, lo, hi, std::move(ok));
        }
        case K::FiberLoops: {
            const int z = gc.n - 1;
            std::int64_t cross = gc.base_cells / gc.N[z];
            if (static_cast<std::int64_t>(f.region.size()) != cross) throw std::invalid_argument("region size mismatch");
            std::vector<char> ok(gc.num_edges(), 1);
            for (std::int32_t e = 0; e < gc.num_edges(); ++e)
                for (auto it = gc.edge_cells_begin(e); it != gc.edge_cells_end(e); ++it)
                    if (!f.region[(*it % gc.base_cells) / gc.N[z]]) ok[e] = 0;
            return std::make_unique<CrossingOracle>(gc, z, 0, gc.N[z], std::move(ok));
        }
    }
    throw std::invalid_argument("unknown family");
}

namespace {

struct Active {
    PathConstraint c;
    double lambda = 0;
    double G = 0;  // p = 2: sum a^2 / (2 v)
    int idle = 0;
};


constexpr double kRelax = 1.5;  // over-relaxation of the resistance update in log scale

// Nested dissection by coordinate planes; every stencil edge joins coordinates at most 1 apart.
std::vector<std::int32_t> dissection_order(const GridComplex& gc, std::vector<std::int32_t> verts) {
    const int n = gc.n;
    std::vector<std::int64_t> xs(verts.size() * n);
    std::vector<std::int32_t> pos(verts.size());
    for (std::size_t i = 0; i < verts.size(); ++i) {
        auto c = gc.grid_coords(gc.vgp[verts[i]]);
        for (int a = 0; a < n; ++a) xs[i * n + a] = c[a];
        pos[i] = static_cast<std::int32_t>(i);
    }
    std::vector<std::int32_t> out;
    out.reserve(verts.size());
    auto rec = [&](auto&& self, std::size_t b, std::size_t e) -> void {
        if (e - b <= 64) {
            for (std::size_t i = b; i < e; ++i) out.push_back(verts[pos[i]]);
            return;
        }
        int ax = 0;
        std::int64_t best = -1, lo = 0, hi = 0;
        for (int a = 0; a < n; ++a) {
            std::int64_t mn = INT64_MAX, mx = INT64_MIN;
            for (std::size_t i = b; i < e; ++i) mn = std::min(mn, xs[pos[i] * n + a]), mx = std::max(mx, xs[pos[i] * n + a]);
            if (mx - mn > best) best = mx - mn, ax = a, lo = mn, hi = mx;
        }
        if (best < 2) {
            for (std::size_t i = b; i < e; ++i) out.push_back(verts[pos[i]]);
            return;
        }
        std::int64_t mid = (lo + hi) / 2;
        auto key = [&](std::int32_t i) { return xs[i * n + ax]; };
        auto m1 = std::partition(pos.begin() + b, pos.begin() + e, [&](std::int32_t i) { return key(i) < mid; });
        auto m2 = std::partition(m1, pos.begin() + e, [&](std::int32_t i) { return key(i) > mid; });
        std::size_t i1 = m1 - pos.begin(), i2 = m2 - pos.begin();
        self(self, b, i1);
        self(self, i1, i2);
        for (std::size_t i = i2; i < e; ++i) out.push_back(verts[pos[i]]);
    };
    rec(rec, 0, verts.size());
    return out;
}

// Reweighted electrical flows. Each iterate is a unit S-T flow f (lower bound from its dual energy)
// and a density rho = (J/v)^(q-1) from its cell load J (upper bound after normalizing by the
// shortest member). Resistances are refreshed as r_e = l_e(rho) / |f_e|.
ModulusResult solve_flows(const FamilyOracle& oracle, const ModulusOptions& opt, const std::vector<std::int32_t>& src,
                          const std::vector<std::int32_t>& dst, const std::vector<char>& edge_ok) {
    const GridComplex& gc = oracle.complex();
    const double p = opt.p, q = p / (p - 1), v = gc.cell_volume;
    const std::int64_t C = gc.num_cells();
    const std::int32_t V = gc.num_vertices(), E = gc.num_edges();
    ModulusResult res;
    res.p = p;
    res.tol = opt.tol;
    res.density.cell_volume = v;

    std::vector<char> role(V, 0);
    for (auto x : src) role[x] = 1;
    for (auto x : dst) {
        if (role[x] == 1) throw std::invalid_argument("source and target faces meet");
        role[x] = 2;
    }
    std::vector<std::int32_t> edges;
    for (std::int32_t e = 0; e < E; ++e) {
        if (!edge_ok.empty() && !edge_ok[e]) continue;
        char a = role[gc.eu[e]], b = role[gc.ev[e]];
        if (a != 0 && a == b) continue;
        edges.push_back(e);
    }
    // Free vertices connected to a face.
    std::vector<std::vector<std::int32_t>> inc(V);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        inc[gc.eu[edges[k]]].push_back(static_cast<std::int32_t>(k));
        inc[gc.ev[edges[k]]].push_back(static_cast<std::int32_t>(k));
    }
    std::vector<std::int32_t> idx(V, -1), stack;
    std::vector<char> seen(V, 0);
    for (std::int32_t x = 0; x < V; ++x)
        if (role[x]) seen[x] = 1, stack.push_back(x);
    std::int32_t nfree = 0;
    while (!stack.empty()) {
        auto x = stack.back();
        stack.pop_back();
        for (auto k : inc[x]) {
            auto y = gc.eu[edges[k]] == x ? gc.ev[edges[k]] : gc.eu[edges[k]];
            if (!seen[y]) {
                seen[y] = 1;
                idx[y] = 0;
                stack.push_back(y);
            }
        }
    }
    inc.clear();
    inc.shrink_to_fit();
    {
        std::vector<std::int32_t> freev;
        for (std::int32_t x = 0; x < V; ++x)
            if (idx[x] == 0) freev.push_back(x);
        auto order = dissection_order(gc, std::move(freev));
        for (auto x : order) idx[x] = nfree++;
    }
    auto fixed = [&](std::int32_t x) { return role[x] == 2 ? 1.0 : 0.0; };

    const std::size_t M = edges.size();
    std::vector<double> r(M), f(M), J(C), rho(C), phi(nfree);
    for (std::size_t k = 0; k < M; ++k) r[k] = gc.elen[edges[k]];

    using SpMat = Eigen::SparseMatrix<double>;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(4 * M);
    SpMat L(nfree, nfree);
    Eigen::VectorXd rhs(nfree);
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::NaturalOrdering<int>> ldlt;
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
    cg.setTolerance(1e-11);
    cg.setMaxIterations(20000);
    Eigen::VectorXd guess = Eigen::VectorXd::Zero(nfree);
    const bool direct = gc.n == 2;
    bool analyzed = false;

    double best_up = kInf, best_lo = 0, best_D = 0;
    std::vector<double> best_rho;
    for (int it = 0; it < opt.max_rounds; ++it) {
        res.iterations = it + 1;
        trip.clear();
        rhs.setZero();
        for (std::size_t k = 0; k < M; ++k) {
            auto a = gc.eu[edges[k]], b = gc.ev[edges[k]];
            if (idx[a] < 0 && idx[b] < 0) continue;
            double c = 1.0 / r[k];
            if (idx[a] >= 0) trip.emplace_back(idx[a], idx[a], c);
            if (idx[b] >= 0) trip.emplace_back(idx[b], idx[b], c);
            if (idx[a] >= 0 && idx[b] >= 0) {
                trip.emplace_back(idx[a], idx[b], -c);
                trip.emplace_back(idx[b], idx[a], -c);
            } else if (idx[a] >= 0) {
                rhs[idx[a]] += c * fixed(b);
            } else {
                rhs[idx[b]] += c * fixed(a);
            }
        }
        L.setFromTriplets(trip.begin(), trip.end());
        if (nfree > 0) {
            Eigen::VectorXd sol;
            if (direct) {
                if (!analyzed) ldlt.analyzePattern(L), analyzed = true;
                ldlt.factorize(L);
                if (ldlt.info() != Eigen::Success) throw std::runtime_error("flow solve failed");
                sol = ldlt.solve(rhs);
            } else {
                cg.compute(L);
                sol = cg.solveWithGuess(rhs, guess);
                guess = sol;
            }
            for (std::int32_t i = 0; i < nfree; ++i) phi[i] = sol[i];
        }
        auto pot = [&](std::int32_t x) { return idx[x] >= 0 ? phi[idx[x]] : fixed(x); };
        double I = 0;
        for (std::size_t k = 0; k < M; ++k) {
            auto a = gc.eu[edges[k]], b = gc.ev[edges[k]];
            f[k] = (pot(a) - pot(b)) / r[k];
            if (role[a] == 2) I += f[k];
            if (role[b] == 2) I -= f[k];
        }
        if (!(I > 0)) throw std::runtime_error("flow solve produced no current");
        // Residual imbalance is discounted from the flow value.
        std::fill(J.begin(), J.end(), 0.0);
        std::vector<double> imb(V, 0.0);
        for (std::size_t k = 0; k < M; ++k) {
            imb[gc.eu[edges[k]]] -= f[k];
            imb[gc.ev[edges[k]]] += f[k];
        }
        double stray = 0;
        for (std::int32_t x = 0; x < V; ++x)
            if (idx[x] >= 0) stray += std::abs(imb[x]);
        const double value = std::max(0.0, 1.0 - stray / I);
        double fmax = 0;
        for (std::size_t k = 0; k < M; ++k) {
            f[k] /= I;
            fmax = std::max(fmax, std::abs(f[k]));
            auto e = edges[k];
            auto b = gc.edge_cells_begin(e), en = gc.edge_cells_end(e);
            double w = gc.elen[e] * std::abs(f[k]) / static_cast<double>(en - b);
            for (auto c = b; c != en; ++c) J[*c] += w;
        }
        double F = 0, mass = 0;
        for (std::int64_t c = 0; c < C; ++c) {
            F += v * std::pow(J[c] / v, q);
            rho[c] = std::pow(J[c] / v, q - 1);
            mass += v * std::pow(rho[c], p);
        }
        double lower = std::pow(value, p) * std::pow(F, -(p - 1));
        double D = oracle.min_length(rho, nullptr);
        double upper = D > 0 ? mass / std::pow(D, p) : kInf;
        best_lo = std::max(best_lo, lower);
        if (upper < best_up) best_up = upper, best_D = D, best_rho = rho;
        if (best_up - best_lo <= opt.tol * best_up) {
            res.converged = true;
            break;
        }
        auto len = rho_lengths(gc, rho);
        double lmax = 0;
        for (std::size_t k = 0; k < M; ++k) lmax = std::max(lmax, len[edges[k]]);
        for (std::size_t k = 0; k < M; ++k) {
            double target = std::max(len[edges[k]], 1e-10 * lmax) / std::max(std::abs(f[k]), 1e-10 * fmax);
            r[k] = it == 0 ? target : r[k] * std::pow(target / r[k], kRelax);
        }
    }
    res.lower = best_lo;
    res.upper = best_up;
    res.min_length = best_D;
    res.density.value.assign(C, 0.0);
    if (best_D > 0)
        for (std::int64_t c = 0; c < C; ++c) res.density.value[c] = best_rho[c] / best_D;
    return res;
}

ModulusResult solve_paths(const FamilyOracle& oracle, const ModulusOptions& opt) {
    const GridComplex& gc = oracle.complex();
    const double p = opt.p;
    const double v = gc.cell_volume;
    const std::int64_t C = gc.num_cells();
    ModulusResult res;
    res.p = p;
    res.tol = opt.tol;
    res.density.cell_volume = v;

    {
        std::vector<double> ones(C, 1.0);
        if (oracle.min_length(ones, nullptr) == kInf) {
            res.empty_family = true;
            res.converged = true;
            res.density.value.assign(C, 0.0);
            return res;
        }
    }

    const double q = 1.0 / (p - 1.0);
    auto rho_of = [&](double s) { return s <= 0 ? 0.0 : (p == 2.0 ? s / (2 * v) : std::pow(s / (p * v), q)); };

    std::vector<double> s(C, 0.0), rho(C, 0.0);
    std::vector<Active> act;
    std::unordered_set<std::uint64_t> seen;
    const double inner_tol = opt.tol / 10;
    double m = 0;

    auto dot = [&](const PathConstraint& c) {
        double r = 0;
        for (std::size_t k = 0; k < c.cells.size(); ++k) r += c.coef[k] * rho[c.cells[k]];
        return r;
    };
    auto apply = [&](const PathConstraint& c, double delta) {
        for (std::size_t k = 0; k < c.cells.size(); ++k) {
            auto cell = c.cells[k];
            s[cell] += delta * c.coef[k];
            rho[cell] = rho_of(s[cell]);
        }
    };
    // phi(d) = 1 - a . rho(s + d a), decreasing in d.
    auto phi = [&](const PathConstraint& c, double d) {
        double r = 1;
        for (std::size_t k = 0; k < c.cells.size(); ++k) r -= c.coef[k] * rho_of(s[c.cells[k]] + d * c.coef[k]);
        return r;
    };

    for (int round = 0; round < opt.max_rounds; ++round) {
        res.iterations = round + 1;
        std::vector<PathConstraint> fresh;
        oracle.violated(rho, 1.0 - opt.tol / 2, opt.max_new_paths, fresh);
        for (auto& c : fresh) {
            if (!seen.insert(path_hash(c.path)).second) continue;
            Active a;
            for (std::size_t k = 0; k < c.cells.size(); ++k) a.G += c.coef[k] * c.coef[k] / (2 * v);
            a.c = std::move(c);
            act.push_back(std::move(a));
        }

        for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
            double worst = 0;
            for (auto& a : act) {
                double r = dot(a.c);
                double viol = a.lambda > 0 ? std::abs(1 - r) : std::max(0.0, 1 - r);
                worst = std::max(worst, viol);
                double delta;
                if (p == 2.0) {
                    delta = std::max(-a.lambda, (1 - r) / a.G);
                } else {
                    if (viol == 0 && a.lambda == 0) continue;
                    if (phi(a.c, -a.lambda) <= 0) {
                        delta = -a.lambda;
                    } else {
                        double lo = -a.lambda, hi = std::max(1e-300, std::abs(a.lambda));
                        while (phi(a.c, hi) > 0) hi *= 2;
                        for (int it = 0; it < 60 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
                            double mid = 0.5 * (lo + hi);
                            (phi(a.c, mid) > 0 ? lo : hi) = mid;
                        }
                        delta = 0.5 * (lo + hi);
                    }
                }
                if (delta != 0) {
                    a.lambda += delta;
                    if (a.lambda < 0) a.lambda = 0;
                    apply(a.c, delta);
                }
            }
            if (worst < inner_tol) break;
        }
        // Resynchronize s and rho from lambda to avoid drift.
        std::fill(s.begin(), s.end(), 0.0);
        for (const auto& a : act)
            if (a.lambda > 0)
                for (std::size_t k = 0; k < a.c.cells.size(); ++k) s[a.c.cells[k]] += a.lambda * a.c.coef[k];
        for (std::int64_t c = 0; c < C; ++c) rho[c] = rho_of(s[c]);

        // Drop constraints that stayed slack.
        std::vector<Active> keep;
        keep.reserve(act.size());
        for (auto& a : act) {
            a.idle = (a.lambda == 0 && dot(a.c) > 1) ? a.idle + 1 : 0;
            if (a.idle < 3) keep.push_back(std::move(a));
        }
        act.swap(keep);

        m = oracle.min_length(rho, nullptr);
        if (m >= 1 - opt.tol) {
            res.converged = true;
            break;
        }
    }

    double sum_lambda = 0, mass = 0;
    for (const auto& a : act) sum_lambda += a.lambda;
    for (double r : rho) mass += std::pow(r, p) * v;
    res.lower = std::max(0.0, sum_lambda - (p - 1) * mass);
    res.min_length = m;
    res.active_paths = act.size();
    if (m > 0) {
        res.upper = mass / std::pow(m, p);
        res.density.value.resize(C);
        for (std::int64_t c = 0; c < C; ++c) res.density.value[c] = rho[c] / m;
    } else {
        res.upper = kInf;
        res.density.value.assign(C, 0.0);
    }
    return res;
}

}  // namespace

ModulusResult solve_modulus(const FamilyOracle& oracle, const ModulusOptions& opt) {
    if (opt.p <= 1.0) throw std::invalid_argument("p must be > 1 for the dual solver");
    if (!(opt.tol > 0 && opt.tol <= 0.1)) throw std::invalid_argument("tol must lie in (0, 0.1]");
    using Method = ModulusOptions::Method;
    std::vector<std::int32_t> src, dst;
    std::vector<char> ok;
    bool flows = opt.method != Method::Paths && oracle.crossing(src, dst, ok);
    if (opt.method == Method::Flows && !flows) throw std::invalid_argument("flow method needs a crossing family");
    if (flows && opt.method == Method::Auto && opt.p < 2) flows = false;
    if (flows) {
        std::vector<double> ones(oracle.complex().num_cells(), 1.0);
        if (oracle.min_length(ones, nullptr) == kInf) {
            ModulusResult res;
            res.p = opt.p;
            res.tol = opt.tol;
            res.empty_family = res.converged = true;
            res.density.cell_volume = oracle.complex().cell_volume;
            res.density.value.assign(oracle.complex().num_cells(), 0.0);
            return res;
        }
        return solve_flows(oracle, opt, src, dst, ok);
    }
    return solve_paths(oracle, opt);
}

ModulusResult discrete_modulus(const GridComplex& gc, const CurveFamilySpec& family, const ModulusOptions& opt) {
    auto oracle = make_oracle(gc, family);
    return solve_modulus(*oracle, opt);
}

double upper_via_density(const GridComplex& gc, const DensityField& rho, const CurveFamilySpec& family, double p,
                         double slack) {
    auto oracle = make_oracle(gc, family);
    PathInComplex w;
    double m = oracle->min_length(rho.value, &w);
    if (m < 1.0 - slack) throw InadmissibleDensity(m, w);
    return rho.mass(p);
}

double length_floor_bound(double measure_A, double L, double p) {
    if (L <= 0) throw std::invalid_argument("length floor must be positive");
    return measure_A / std::pow(L, p);
}

std::vector<char> unblocked_shadow(const GridComplex& gc, int axis) {
    const int n = gc.n;
    std::vector<int> others;
    for (int b = 0; b < n; ++b)
        if (b != axis) others.push_back(b);
    std::int64_t cells = 1;
    for (int b : others) cells *= gc.N[b];
    std::vector<char> shadow(cells, 1);
    for (const auto& sh : gc.sheets) {
        if (sh.axis != axis) continue;
        std::vector<std::int64_t> lo, hi;
        for (int b : others) {
            lo.push_back(gc.to_index(sh.lo[b], b));
            hi.push_back(gc.to_index(sh.hi[b], b));
        }
        std::vector<std::int64_t> c = lo;
        while (true) {
            std::int64_t idx = 0;
            for (std::size_t t = 0; t < others.size(); ++t) idx = idx * gc.N[others[t]] + c[t];
            shadow[idx] = 0;
            int t = static_cast<int>(others.size()) - 1;
            while (t >= 0 && ++c[t] == hi[t]) c[t] = lo[t], --t;
            if (t < 0) break;
        }
    }
    return shadow;
}

VerticalProductResult vertical_product_modulus(const GridComplex& gc, int axis, const std::vector<char>& shadow,
                                               double p, const ModulusOptions& opt) {
    VerticalProductResult r;
    std::int64_t count = std::count(shadow.begin(), shadow.end(), 1);
    double cross_cell = gc.cell_volume / gc.h.to_double();
    double L = gc.box.side(axis).to_double();
    r.exact = static_cast<double>(count) * cross_cell / std::pow(L, p - 1);
    ModulusOptions o = opt;
    o.p = p;
    r.solved = discrete_modulus(gc, CurveFamilySpec::vertical_lines(axis, shadow), o);
    r.rel_error = r.exact > 0 ? std::abs(r.solved.upper - r.exact) / r.exact : r.solved.upper;
    return r;
}

std::vector<SweepRow> nonvertical_sweep(const SlitSequence& seq, std::size_t level, const Dyadic& h, int k_max,
                                        const std::vector<Dyadic>& deltas, const std::vector<Dyadic>& eps_list,
                                        double p, bool with_discrete, const ModulusOptions& opt) {
    std::vector<SweepRow> rows;
    level = std::min(level, seq.slits.size());
    std::unique_ptr<GridComplex> gc;
    if (with_discrete) gc = std::make_unique<GridComplex>(build_slit_complex(seq, level, h));
    const Dyadic a = seq.box.lo[0], L = seq.box.side(0);
    for (int k = 0; k <= k_max; ++k) {
        int parts = 1 << (k + 1);
        for (int j = 0; j < parts; ++j) {
            Dyadic alpha = a + L * Dyadic::make(j, k + 1), beta = a + L * Dyadic::make(j + 1, k + 1);
            double discrete = -1;
            if (gc) {
                ModulusOptions o = opt;
                o.p = p;
                discrete = discrete_modulus(*gc, CurveFamilySpec::band(k, j), o).upper;
            }
            for (const Dyadic& delta : deltas) {
                Dyadic lo = alpha + delta, hi = beta - delta;
                if (!(lo < hi)) continue;
                for (const Dyadic& eps : eps_list) {
                    SlitSequence sub;
                    sub.box = seq.box;
                    sub.box.lo[0] = lo;
                    sub.box.hi[0] = hi;
                    for (std::size_t i = 0; i < level; ++i) {
                        const Slit& s = seq.slits[i];
                        if (s.axis != 0) continue;
                        if (lo < s.offset && s.offset + eps * s.side < hi) sub.slits.push_back(s);
                    }
                    sub.sigma = 1.0;  // containment of the collars is checked above
                    auto sel = select_collars(sub, eps, Selection::Largest);
                    Dyadic omitted(0);
                    for (auto i : sel) {
                        AxisBox ob = omitted_box(sub.slits[i], eps);
                        Dyadic vol(1);
                        for (int b = 0; b < ob.dim(); ++b) vol = vol * (ob.hi[b] - ob.lo[b]);
                        omitted += vol;
                    }
                    SweepRow r;
                    r.k = k;
                    r.j = j;
                    r.delta = delta.to_double();
                    r.eps = eps.to_double();
                    r.interior_slits = sub.slits.size();
                    r.selected = sel.size();
                    r.bound = (sub.box.volume() - omitted).to_double() / std::pow((hi - lo).to_double(), p);
                    r.discrete = discrete;
                    rows.push_back(r);
                }
            }
        }
    }
    return rows;
}

ProjectionCheck projection_inequality_check(const GridComplex& gc, const CurveFamilySpec& family,
                                            const GridComplex& target, const CurveFamilySpec& projected, double C,
                                            double L, double p, const ModulusOptions& opt) {
    ModulusOptions o = opt;
    o.p = p;
    ProjectionCheck r;
    r.lhs = discrete_modulus(gc, family, o).lower;
    r.rhs = C * std::pow(L, p) * discrete_modulus(target, projected, o).upper;
    r.holds = r.lhs <= r.rhs;
    return r;
}

}  // namespace slitmod
