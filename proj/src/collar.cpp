#include "slitmod/collar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace slitmod {

AxisBox collar_box(const Slit& s, const Dyadic& eps) {
    AxisBox b = s.box();
    b.hi[s.axis] = s.offset + eps * s.side;
    return b;
}

AxisBox omitted_box(const Slit& s, const Dyadic& eps) {
    AxisBox b = collar_box(s, eps);
    Dyadic t = eps * s.side;
    for (int a = 0; a < b.dim(); ++a) {
        if (a == s.axis) continue;
        b.lo[a] += t;
        b.hi[a] -= t;
    }
    return b;
}

namespace {

bool open_overlap(const AxisBox& e, const AxisBox& f) {
    for (int a = 0; a < e.dim(); ++a)
        if (!(e.lo[a] < f.hi[a] && f.lo[a] < e.hi[a])) return false;
    return true;
}

double sigma_of(const SlitSequence& seq) {
    if (seq.sigma > 0) return seq.sigma;
    SlitSequence copy = seq;
    validate_sequence(copy);
    return copy.sigma;
}

}  // namespace

std::vector<std::size_t> select_collars(const SlitSequence& seq, const Dyadic& eps, Selection strategy,
                                        std::size_t limit) {
    if (eps.sign() <= 0) throw std::invalid_argument("eps must be positive");
    std::size_t m = std::min(limit, seq.slits.size());
    if (m == 0) return {};
    if (eps.to_double() >= sigma_of(seq)) throw std::invalid_argument("collar may exit box");
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    if (strategy == Selection::Largest)
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t i, std::size_t j) { return seq.slits[i].side > seq.slits[j].side; });
    std::vector<std::size_t> chosen;
    std::vector<AxisBox> boxes;
    for (std::size_t i : order) {
        AxisBox c = collar_box(seq.slits[i], eps);
        bool ok = true;
        for (const auto& b : boxes)
            if (open_overlap(b, c)) {
                ok = false;
                break;
            }
        if (!ok) continue;
        chosen.push_back(i);
        boxes.push_back(c);
    }
    return chosen;
}

int CollarDecomposition::buffer_component(std::int64_t cell) const {
    if (n != 2 || kind[cell] != 'B') return 0;
    const Slit& s = slits[owner[cell]];
    int a = 1 - s.axis;
    std::int64_t c = (a == 0) ? cell / cstride[0] : cell % N[1];
    double mid = box.lo[a].to_double() + (static_cast<double>(c) + 0.5) * h.to_double();
    return mid > s.center[0].to_double() ? 1 : -1;
}

CollarDecomposition decompose(const SlitSequence& seq, const std::vector<std::size_t>& indices, const Dyadic& eps,
                              const Dyadic& h) {
    CollarDecomposition d;
    d.box = seq.box;
    d.box.check();
    d.eps = eps;
    d.h = h;
    d.n = d.box.dim();
    d.b_minus_a = d.box.side(0).to_double();
    const int n = d.n;
    d.N.resize(n);
    d.cstride.assign(n, 1);
    std::int64_t cells = 1;
    for (int a = 0; a < n; ++a) {
        if (!d.box.side(a).multiple_of(h)) throw std::invalid_argument("resolution misaligned");
        d.N[a] = d.box.side(a).div_exact(h);
        cells *= d.N[a];
    }
    for (int a = n - 2; a >= 0; --a) d.cstride[a] = d.cstride[a + 1] * d.N[a + 1];
    d.cell_volume = std::pow(h.to_double(), n);
    d.owner.assign(cells, -1);
    d.kind.assign(cells, 'R');
    auto idx = [&](const Dyadic& x, int a) {
        Dyadic t = x - d.box.lo[a];
        if (!t.multiple_of(h)) throw std::invalid_argument("resolution misaligned: " + x.str());
        return t.div_exact(h);
    };
    Dyadic exact_collars(0);
    for (std::size_t j = 0; j < indices.size(); ++j) {
        const Slit& s = seq.slits.at(indices[j]);
        if (s.axis != 0) throw std::invalid_argument("collars need slits normal to the first axis");
        d.selected.push_back(indices[j]);
        d.slits.push_back(s);
        AxisBox cb = collar_box(s, eps), ob = omitted_box(s, eps);
        d.collar.push_back(cb);
        d.omitted.push_back(ob);
        Dyadic t = eps * s.side, w = s.side - t - t;
        Dyadic cvol = t, ovol = t;
        for (int a = 1; a < n; ++a) {
            cvol = cvol * s.side;
            ovol = ovol * w;
        }
        exact_collars += cvol;
        d.exact_O += ovol;
        d.exact_B += cvol - ovol;
        std::vector<std::int64_t> clo(n), chi(n), olo(n), ohi(n);
        for (int a = 0; a < n; ++a) {
            clo[a] = idx(cb.lo[a], a);
            chi[a] = idx(cb.hi[a], a);
            olo[a] = idx(ob.lo[a], a);
            ohi[a] = idx(ob.hi[a], a);
            if (clo[a] < 0 || chi[a] > d.N[a]) throw std::invalid_argument("collar may exit box");
        }
        std::vector<std::int64_t> c = clo;
        bool empty = false;
        for (int a = 0; a < n; ++a) empty |= clo[a] >= chi[a];
        while (!empty) {
            std::int64_t cell = 0;
            bool inside = true;
            for (int a = 0; a < n; ++a) {
                cell += c[a] * d.cstride[a];
                if (c[a] < olo[a] || c[a] >= ohi[a]) inside = false;
            }
            if (d.owner[cell] >= 0) throw std::invalid_argument("selected collars overlap");
            d.owner[cell] = static_cast<std::int32_t>(j);
            d.kind[cell] = inside ? 'O' : 'B';
            int a = n - 1;
            while (a >= 0 && ++c[a] == chi[a]) c[a] = clo[a], --a;
            if (a < 0) break;
        }
    }
    d.exact_R = d.box.volume() - exact_collars;
    std::int64_t nr = 0, nb = 0, no = 0;
    for (char k : d.kind) {
        if (k == 'R') ++nr;
        else if (k == 'B') ++nb;
        else ++no;
    }
    d.H_R = static_cast<double>(nr) * d.cell_volume;
    d.H_B = static_cast<double>(nb) * d.cell_volume;
    d.H_O = static_cast<double>(no) * d.cell_volume;
    return d;
}

DensityField rho_eps(const CollarDecomposition& d, std::size_t upto) {
    DensityField f;
    f.cell_volume = d.cell_volume;
    f.value.assign(d.kind.size(), 1.0 / d.b_minus_a);
    for (std::size_t c = 0; c < d.kind.size(); ++c)
        if (d.kind[c] == 'O' && static_cast<std::size_t>(d.owner[c]) < upto) f.value[c] = 0.0;
    return f;
}

double admissibility_slack(const Dyadic& h, int n, double b_minus_a) {
    return 2.0 * h.to_double() * stencil_distortion(n) / b_minus_a;
}

AdmissibilityResult admissibility_min(const GridComplex& gc, const DensityField& rho, double slack) {
    AdmissibilityResult res;
    res.slack = slack;
    auto w = rho_lengths(gc, rho.value);
    auto sp = dijkstra(gc, gc.face_vertices(0, false), w);
    std::int32_t best = -1;
    for (auto v : gc.face_vertices(0, true))
        if (best < 0 || sp.dist[v] < res.min_length) {
            res.min_length = sp.dist[v];
            best = v;
        }
    if (best >= 0) res.witness = extract_path(gc, sp, best);
    res.admissible = res.min_length >= 1.0 - slack;
    return res;
}

BufferBound buffer_bound(const CollarDecomposition& d) {
    BufferBound b;
    std::int64_t nb = 0, nc = 0;
    for (char k : d.kind) {
        nb += k == 'B';
        nc += k != 'R';
    }
    Dyadic one_minus = Dyadic(1) - d.eps - d.eps, pw(1);
    for (int a = 1; a < d.n; ++a) pw = pw * one_minus;
    Dyadic factor = Dyadic(1) - pw;
    b.H_B = static_cast<double>(nb) * d.cell_volume;
    b.H_collars = static_cast<double>(nc) * d.cell_volume;
    b.factor = factor.to_double();
    b.bound = b.factor * d.box.volume().to_double();
    b.identity_ok = Dyadic(nb) == factor * Dyadic(nc);
    b.bound_ok = b.H_B <= b.bound + 1e-15;
    return b;
}

namespace {

// Side-filtered cells incident to vertex v (base complex only).
void incident_cells(const GridComplex& gc, std::int32_t v, std::vector<std::int64_t>& out) {
    out.clear();
    auto c = gc.grid_coords(gc.vgp[v]);
    std::vector<std::int64_t> cc(gc.n);
    for (unsigned corner = 0; corner < (1u << gc.n); ++corner) {
        bool ok = true;
        for (int a = 0; a < gc.n; ++a) {
            cc[a] = c[a] - (corner >> a & 1u);
            if (cc[a] < 0 || cc[a] >= gc.N[a]) ok = false;
        }
        if (!ok) continue;
        std::int64_t cell = gc.cell_index(cc);
        if (gc.cell_corner(cell, corner) == v) out.push_back(cell);
    }
}

std::int32_t find_edge(const GridComplex& gc, std::int32_t u, std::int32_t v) {
    for (std::int64_t k = gc.adj_start[u]; k < gc.adj_start[u + 1]; ++k)
        if (gc.adj_to[k] == v) return gc.adj_edge[k];
    return -1;
}

}  // namespace

SurgeryResult curve_surgery(const GridComplex& gc, const PathInComplex& gamma, const CollarDecomposition& d,
                            std::size_t i) {
    if (gc.doubled || gc.base_cells != d.num_cells() || gc.h != d.h)
        throw std::invalid_argument("complex and decomposition differ");
    if (!gc.has_cells()) throw std::invalid_argument("complex built without cells");
    i = std::min(i, d.selected.size());
    const auto& V = gamma.vertices;
    std::vector<std::int32_t> E = gamma.edges;
    if (V.size() < 2) throw std::invalid_argument("not in Gamma_S: path too short");
    if (E.size() != V.size() - 1) {
        E.clear();
        for (std::size_t k = 0; k + 1 < V.size(); ++k) {
            std::int32_t e = find_edge(gc, V[k], V[k + 1]);
            if (e < 0) throw std::invalid_argument("not in Gamma_S: vertices " + std::to_string(V[k]) + " and " +
                                                   std::to_string(V[k + 1]) + " are not adjacent");
            E.push_back(e);
        }
    }
    for (std::size_t k = 0; k < E.size(); ++k) {
        std::int32_t e = E[k];
        bool fits = (gc.eu[e] == V[k] && gc.ev[e] == V[k + 1]) || (gc.ev[e] == V[k] && gc.eu[e] == V[k + 1]);
        if (!fits) throw std::invalid_argument("not in Gamma_S: edge list does not match vertices");
    }

    auto rho = rho_eps(d, i).value;
    auto edge_len = [&](std::int32_t e) {
        double s = 0;
        auto b = gc.edge_cells_begin(e), en = gc.edge_cells_end(e);
        for (auto it = b; it != en; ++it) s += rho[*it];
        return gc.elen[e] * s / static_cast<double>(en - b);
    };

    SurgeryResult res;
    res.cases.assign(i, 1);
    res.t_side.assign(i, 0);
    // First path position touching each omitted region and each right face.
    std::vector<std::size_t> first_o(i, V.size()), first_r(i, V.size());
    std::vector<std::int64_t> cells;
    const int n = gc.n;
    for (std::size_t k = 0; k < V.size(); ++k) {
        incident_cells(gc, V[k], cells);
        for (auto c : cells) {
            if (d.kind[c] != 'O') continue;
            auto j = static_cast<std::size_t>(d.owner[c]);
            if (j < i && first_o[j] == V.size()) first_o[j] = k;
        }
        std::int64_t gp = gc.vgp[V[k]];
        for (std::size_t j = 0; j < i; ++j) {
            if (first_r[j] != V.size()) continue;
            const AxisBox& cb = d.collar[j];
            bool on = gc.coord_exact(gp, 0) == cb.hi[0];
            for (int a = 1; a < n && on; ++a) {
                Dyadic x = gc.coord_exact(gp, a);
                on = cb.lo[a] <= x && x <= cb.hi[a];
            }
            if (on) first_r[j] = k;
        }
    }
    for (std::size_t j = 0; j < i; ++j) {
        if (first_o[j] == V.size()) continue;
        res.cases[j] = first_o[j] < first_r[j] ? 2 : 3;
    }

    auto all_cells = [&](std::int32_t e, auto pred) {
        for (auto it = gc.edge_cells_begin(e); it != gc.edge_cells_end(e); ++it)
            if (!pred(*it)) return false;
        return true;
    };
    for (std::int32_t e : E) {
        res.length_before += edge_len(e);
        bool drop = false;
        std::int32_t own = d.owner[*gc.edge_cells_begin(e)];
        if (own >= 0 && static_cast<std::size_t>(own) < i) {
            auto j = static_cast<std::size_t>(own);
            if (res.cases[j] == 2 && all_cells(e, [&](std::int32_t c) { return d.owner[c] == own; })) {
                drop = true;
                if (res.t_side[j] == 0)
                    for (auto it = gc.edge_cells_begin(e); it != gc.edge_cells_end(e); ++it)
                        if (int comp = d.buffer_component(*it)) {
                            res.t_side[j] = comp;
                            break;
                        }
            }
            if (res.cases[j] == 3 &&
                all_cells(e, [&](std::int32_t c) { return d.owner[c] == own && d.kind[c] == 'O'; }))
                drop = true;
        }
        if (!drop) res.kept.push_back(e);
    }
    for (auto e : res.kept) res.length_after += edge_len(e);

    std::vector<char> covered(gc.N[0], 0);
    for (auto e : res.kept) {
        std::int64_t x0 = gc.grid_coords(gc.vgp[gc.eu[e]])[0], x1 = gc.grid_coords(gc.vgp[gc.ev[e]])[0];
        if (x0 != x1) covered[std::min(x0, x1)] = 1;
    }
    for (std::size_t j = 0; j < i; ++j) {
        if (res.cases[j] != 2) continue;
        res.tops.push_back(d.selected[j]);
        const Slit& s = d.slits[j];
        res.length_after += (d.eps * s.side).to_double() / d.b_minus_a;
        std::int64_t lo = gc.to_index(d.collar[j].lo[0], 0), hi = gc.to_index(d.collar[j].hi[0], 0);
        for (std::int64_t c = lo; c < hi; ++c) covered[c] = 1;
    }
    for (char c : covered) res.uncovered_columns += !c;
    res.projection_ok = res.uncovered_columns == 0;
    res.length_ok = res.length_after <= res.length_before + 1e-12;
    return res;
}

PathInComplex random_test_path(const GridComplex& gc, const CollarDecomposition& d, std::mt19937_64& rng) {
    auto left = gc.face_vertices(0, false), right = gc.face_vertices(0, true);
    std::uniform_int_distribution<std::size_t> pl(0, left.size() - 1), pr(0, right.size() - 1);
    std::uniform_int_distribution<std::int32_t> pv(0, gc.num_vertices() - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::int32_t> way{left[pl(rng)]};
    int stops = 1 + static_cast<int>(u(rng) * 3);
    for (int k = 0; k < stops; ++k) {
        if (!d.selected.empty() && u(rng) < 0.75) {
            std::uniform_int_distribution<std::size_t> ps(0, d.selected.size() - 1);
            const AxisBox& ob = d.omitted[ps(rng)];
            std::vector<std::int64_t> c(gc.n);
            bool ok = true;
            for (int a = 0; a < gc.n; ++a) {
                std::int64_t lo = gc.to_index(ob.lo[a], a), hi = gc.to_index(ob.hi[a], a);
                if (hi <= lo) ok = false;
                else c[a] = lo + static_cast<std::int64_t>(u(rng) * static_cast<double>(hi - lo));
            }
            if (ok) {
                unsigned corner = static_cast<unsigned>(u(rng) * (1u << gc.n));
                way.push_back(gc.cell_corner(gc.cell_index(c), corner));
                continue;
            }
        }
        way.push_back(pv(rng));
    }
    way.push_back(right[pr(rng)]);
    std::vector<double> w(gc.elen);
    for (auto& x : w) x *= 0.5 + 1.5 * u(rng);
    PathInComplex path;
    path.vertices.push_back(way[0]);
    for (std::size_t k = 0; k + 1 < way.size(); ++k) {
        auto sp = dijkstra(gc, {way[k]}, w);
        auto seg = extract_path(gc, sp, way[k + 1]);
        if (seg.vertices.empty()) throw std::runtime_error("random_test_path: waypoint unreachable");
        path.vertices.insert(path.vertices.end(), seg.vertices.begin() + 1, seg.vertices.end());
        path.edges.insert(path.edges.end(), seg.edges.begin(), seg.edges.end());
        path.length += seg.length;
    }
    return path;
}

double residual_product(const std::vector<double>& r, const Dyadic& eps, int n, int k) {
    if (!eps.is_power_of_half()) throw std::invalid_argument("eps must be a power of 1/2");
    if (k + 1 > static_cast<int>(r.size())) throw std::invalid_argument("r sequence shorter than k+1");
    double e = eps.to_double(), p = 1.0;
    for (int i = 0; i <= k; ++i) p *= 1.0 - e * std::pow(r[i], n);
    return p;
}

std::vector<DivergenceRow> divergence_report(const std::vector<double>& r, int n, int K, double eps) {
    std::vector<DivergenceRow> rows;
    double s = 0, p = 1;
    for (int i = 0; i <= K && i < static_cast<int>(r.size()); ++i) {
        double t = std::pow(r[i], n);
        s += t;
        p *= 1.0 - eps * t;
        rows.push_back({i, s, p});
    }
    return rows;
}

std::string label_grid(const CollarDecomposition& d) {
    if (d.n != 2) throw std::invalid_argument("label grid needs n = 2");
    std::ostringstream os;
    for (std::int64_t y = d.N[1] - 1; y >= 0; --y) {
        for (std::int64_t x = 0; x < d.N[0]; ++x) os << d.kind[x * d.cstride[0] + y];
        os << "\n";
    }
    return os.str();
}

}  // namespace slitmod
