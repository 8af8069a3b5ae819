#include "slitmod/slit_config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace slitmod {

BoxN BoxN::unit(int n) {
    BoxN b;
    b.lo.assign(n, Dyadic(0));
    b.hi.assign(n, Dyadic(1));
    return b;
}

Dyadic BoxN::volume() const {
    Dyadic v(1);
    for (int a = 0; a < dim(); ++a) v = v * side(a);
    return v;
}

void BoxN::check() const {
    if (lo.empty() || lo.size() != hi.size()) throw std::invalid_argument("box: bad dimension");
    for (int a = 0; a < dim(); ++a)
        if (!(lo[a] < hi[a])) throw std::invalid_argument("box: empty interval on axis " + std::to_string(a + 1));
}

Dyadic Slit::cross_lo(int a) const {
    int k = a < axis ? a : a - 1;
    return center[k] - side.halved();
}

Dyadic Slit::cross_hi(int a) const {
    int k = a < axis ? a : a - 1;
    return center[k] + side.halved();
}

AxisBox Slit::box() const {
    AxisBox b;
    int n = dim();
    b.lo.resize(n);
    b.hi.resize(n);
    for (int a = 0; a < n; ++a) {
        if (a == axis) {
            b.lo[a] = b.hi[a] = offset;
        } else {
            b.lo[a] = cross_lo(a);
            b.hi[a] = cross_hi(a);
        }
    }
    return b;
}

std::size_t SlitSequence::count_through_generation(int g) const {
    std::size_t k = 0;
    while (k < slits.size() && slits[k].generation >= 0 && slits[k].generation <= g) ++k;
    return k;
}

Dyadic squared_distance(const AxisBox& e, const AxisBox& f) {
    Dyadic s(0);
    for (int a = 0; a < e.dim(); ++a) {
        Dyadic gap(0);
        if (f.lo[a] > e.hi[a]) gap = f.lo[a] - e.hi[a];
        else if (e.lo[a] > f.hi[a]) gap = e.lo[a] - f.hi[a];
        s += gap * gap;
    }
    return s;
}

Dyadic squared_diameter(const AxisBox& e) {
    Dyadic s(0);
    for (int a = 0; a < e.dim(); ++a) {
        Dyadic w = e.hi[a] - e.lo[a];
        s += w * w;
    }
    return s;
}

double relative_distance(const AxisBox& e, const AxisBox& f) {
    if (e.dim() != f.dim()) throw std::invalid_argument("dimension mismatch");
    Dyadic de = squared_diameter(e), df = squared_diameter(f);
    if (de.is_zero() || df.is_zero()) throw std::invalid_argument("degenerate set");
    return std::sqrt(squared_distance(e, f).to_double()) / std::sqrt(min(de, df).to_double());
}

double boundary_relative_distance(const AxisBox& e, const BoxN& box) {
    Dyadic de = squared_diameter(e);
    if (de.is_zero()) throw std::invalid_argument("degenerate set");
    // The nearest boundary point lies on a face; the set is inside the box.
    Dyadic best;
    bool first = true;
    for (int a = 0; a < e.dim(); ++a) {
        Dyadic g = min(e.lo[a] - box.lo[a], box.hi[a] - e.hi[a]);
        if (g.sign() < 0) g = Dyadic(0);
        if (first || g < best) best = g;
        first = false;
    }
    AxisBox whole{box.lo, box.hi};
    Dyadic dbox = squared_diameter(whole);
    return best.to_double() / std::sqrt(min(de, dbox).to_double());
}

namespace {

bool boxes_intersect(const AxisBox& e, const AxisBox& f) {
    for (int a = 0; a < e.dim(); ++a)
        if (e.hi[a] < f.lo[a] || f.hi[a] < e.lo[a]) return false;
    return true;
}

bool slit_order_less(const Slit& s, const Slit& t) {
    if (s.side != t.side) return s.side > t.side;
    if (s.generation != t.generation) return s.generation < t.generation;
    return s.index < t.index;
}

}  // namespace

void sort_slits(SlitSequence& seq) { std::stable_sort(seq.slits.begin(), seq.slits.end(), slit_order_less); }

ValidationReport validate_sequence(SlitSequence& seq) {
    ValidationReport rep;
    const auto& s = seq.slits;
    std::vector<AxisBox> boxes;
    boxes.reserve(s.size());
    for (const auto& sl : s) {
        boxes.push_back(sl.box());
        rep.truncation_generation = std::max(rep.truncation_generation, sl.generation);
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i + 1].side > s[i].side) rep.sorted_ok = false;
        for (int a = 0; a < seq.box.dim(); ++a)
            if (boxes[i].lo[a] <= seq.box.lo[a] || boxes[i].hi[a] >= seq.box.hi[a]) rep.contained_ok = false;
        rep.min_boundary = std::min(rep.min_boundary, boundary_relative_distance(boxes[i], seq.box));
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            if (boxes_intersect(boxes[i], boxes[j])) {
                rep.disjoint_ok = false;
                rep.min_pairwise = 0.0;
                continue;
            }
            rep.min_pairwise = std::min(rep.min_pairwise, relative_distance(boxes[i], boxes[j]));
        }
    }
    double sigma = std::min(rep.min_pairwise, rep.min_boundary);
    seq.sigma = std::isfinite(sigma) ? sigma : 0.0;
    return rep;
}

SlitSequence dyadic_slits(const std::vector<Dyadic>& r, int n, int max_gen) {
    if (n < 2) throw std::invalid_argument("dyadic_slits: dimension must be >= 2");
    SlitSequence seq;
    seq.box = BoxN::unit(n);
    for (int g = 0; g <= max_gen; ++g) {
        if (g >= static_cast<int>(r.size())) throw std::invalid_argument("dyadic_slits: r sequence shorter than max_gen+1");
        const Dyadic& rg = r[g];
        if (rg.sign() < 0 || rg >= Dyadic(1)) throw std::invalid_argument("dyadic_slits: r_" + std::to_string(g) + " outside [0,1)");
        if (rg.is_zero()) continue;
        std::int64_t m = std::int64_t{1} << g;
        std::vector<std::int64_t> idx(n, 0);
        while (true) {
            DyadicCube q{g, idx};
            Slit s;
            s.axis = 0;
            s.offset = q.center(0);
            for (int a = 1; a < n; ++a) s.center.push_back(q.center(a));
            s.side = rg.halved(g);
            s.generation = g;
            s.index = idx;
            seq.slits.push_back(s);
            int a = n - 1;
            while (a >= 0 && ++idx[a] == m) idx[a--] = 0;
            if (a < 0) break;
        }
    }
    sort_slits(seq);
    return seq;
}

ScalesReport all_scales_check(const SlitSequence& seq, double C, int samples, double r_min, std::uint64_t seed) {
    ScalesReport rep;
    rep.truncation_scale = r_min;
    int n = seq.box.dim();
    double diam2 = 0;
    for (int a = 0; a < n; ++a) diam2 += std::pow(seq.box.side(a).to_double(), 2);
    double r_max = std::sqrt(diam2) / 2;
    std::mt19937_64 rng(seed);
    std::vector<AxisBox> boxes;
    std::vector<double> diams;
    for (const auto& s : seq.slits) {
        boxes.push_back(s.box());
        diams.push_back(std::sqrt(squared_diameter(boxes.back()).to_double()));
    }
    double worst = 0.0;
    for (double r = r_max; r >= r_min * (1 - 1e-12); r /= 2) {
        for (int t = 0; t < samples; ++t) {
            std::vector<double> x(n);
            for (int a = 0; a < n; ++a) {
                std::uniform_real_distribution<double> u(seq.box.lo[a].to_double(), seq.box.hi[a].to_double());
                x[a] = u(rng);
            }
            double best = 0.0;
            for (std::size_t i = 0; i < boxes.size(); ++i) {
                if (diams[i] <= best) continue;
                double far2 = 0;
                for (int a = 0; a < n; ++a) {
                    double d = std::max(std::abs(x[a] - boxes[i].lo[a].to_double()), std::abs(x[a] - boxes[i].hi[a].to_double()));
                    far2 += d * d;
                }
                if (far2 <= r * r) best = diams[i];
            }
            ++rep.balls;
            worst = std::max(worst, best > 0 ? r / best : std::numeric_limits<double>::infinity());
        }
    }
    rep.worst_ratio = rep.balls ? worst : std::numeric_limits<double>::infinity();
    rep.pass = rep.balls > 0 && rep.worst_ratio <= C;
    return rep;
}

MengerFaces menger_slit_faces(const std::set<int>& A, int max_gen) {
    SlitSequence face;
    face.box = BoxN::unit(2);
    for (int i : A) {
        if (i < 0 || i > max_gen) throw std::invalid_argument("menger_slit_faces: generation outside [0,max_gen]");
        std::int64_t m = std::int64_t{1} << (2 * i);
        for (std::int64_t k = 0; k < m; ++k)
            for (std::int64_t l = 0; l < m; ++l) {
                Slit s;
                s.axis = 0;
                s.offset = Dyadic::make(2 * k + 1, 2 * i + 1);
                s.center = {Dyadic::make(2 * l + 1, 2 * i + 1)};
                s.side = Dyadic::pow2_inv(2 * i + 1);
                s.generation = i;
                s.index = {k, l};
                face.slits.push_back(s);
            }
    }
    sort_slits(face);
    return MengerFaces{face, face, face};
}

std::string serialize(const SlitSequence& seq) {
    std::ostringstream os;
    int n = seq.box.dim();
    os << "dim = " << n << "\n";
    os << "box =";
    for (int a = 0; a < n; ++a) os << (a ? " ;" : "") << " " << seq.box.lo[a].str() << " " << seq.box.hi[a].str();
    os << "\n";
    for (const auto& s : seq.slits) {
        os << "entry axis=" << s.axis + 1 << " offset=" << s.offset.str() << " center=";
        for (std::size_t k = 0; k < s.center.size(); ++k) os << (k ? "," : "") << s.center[k].str();
        os << " sidelength=" << s.side.str();
        if (s.generation >= 0) {
            os << " generation=" << s.generation << " index=";
            for (std::size_t k = 0; k < s.index.size(); ++k) os << (k ? "," : "") << s.index[k];
        }
        os << "\n";
    }
    return os.str();
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

SlitSequence parse_slit_sequence(const std::string& text) {
    SlitSequence seq;
    int n = 0;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw std::invalid_argument("slit file line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            if (line.rfind("entry", 0) == 0) {
                if (n == 0) fail("entry before dim");
                Slit s;
                bool have_axis = false, have_off = false, have_center = false, have_side = false;
                std::istringstream ls(line.substr(5));
                std::string tok;
                while (ls >> tok) {
                    auto eq = tok.find('=');
                    if (eq == std::string::npos) fail("expected key=value, got '" + tok + "'");
                    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
                    if (key == "axis") {
                        s.axis = std::stoi(val) - 1;
                        if (s.axis < 0 || s.axis >= n) fail("axis out of range");
                        have_axis = true;
                    } else if (key == "offset") {
                        s.offset = Dyadic::parse(val);
                        have_off = true;
                    } else if (key == "center") {
                        for (const auto& c : split(val, ',')) s.center.push_back(Dyadic::parse(c));
                        have_center = true;
                    } else if (key == "sidelength") {
                        s.side = Dyadic::parse(val);
                        if (s.side.sign() <= 0) fail("sidelength must be positive");
                        have_side = true;
                    } else if (key == "generation") {
                        s.generation = std::stoi(val);
                    } else if (key == "index") {
                        for (const auto& c : split(val, ',')) s.index.push_back(std::stoll(c));
                    } else {
                        fail("unknown entry key '" + key + "'");
                    }
                }
                if (!(have_axis && have_off && have_center && have_side)) fail("entry needs axis, offset, center, sidelength");
                if (static_cast<int>(s.center.size()) != n - 1) fail("center must have dim-1 coordinates");
                seq.slits.push_back(s);
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos) fail("expected key = value");
            std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
            if (key == "dim") {
                n = std::stoi(val);
                if (n < 2) fail("dim must be >= 2");
            } else if (key == "box") {
                auto parts = split(val, ';');
                if (static_cast<int>(parts.size()) != n) fail("box needs dim intervals");
                for (const auto& p : parts) {
                    std::istringstream ps(p);
                    std::string a, b;
                    if (!(ps >> a >> b)) fail("bad interval '" + p + "'");
                    seq.box.lo.push_back(Dyadic::parse(a));
                    seq.box.hi.push_back(Dyadic::parse(b));
                }
                seq.box.check();
            } else {
                fail("unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument& e) {
            std::string msg = e.what();
            if (msg.rfind("slit file line", 0) == 0) throw;
            fail(msg);
        }
    }
    if (n == 0) throw std::invalid_argument("slit file: missing dim");
    if (seq.box.lo.empty()) seq.box = BoxN::unit(n);
    return seq;
}

}  // namespace slitmod
