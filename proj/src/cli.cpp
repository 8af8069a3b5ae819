#include "slitmod/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "slitmod/acceptance.hpp"
#include "slitmod/collar.hpp"
#include "slitmod/menger.hpp"
#include "slitmod/modulus.hpp"

namespace slitmod {

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

class Table {
public:
    Table(std::ostream& out, bool timing) : out_(out), timing_(timing) {}

    void columns(const std::vector<std::string>& names) { row(names); }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << field(cells[i]);
        out_ << "\n";
    }
    std::string wall(Clock::time_point t0) const {
        return timing_ ? num(std::chrono::duration<double>(Clock::now() - t0).count()) : "NA";
    }
    void comment(const std::string& s) { out_ << "# " << s << "\n"; }

private:
    std::ostream& out_;
    bool timing_;
};

void header(Table& t, const ExperimentConfig& cfg) {
    t.comment("slitmod " + cfg.command);
    t.comment("seed=" + std::to_string(cfg.seed));
    std::istringstream is(serialize(cfg));
    std::string line;
    while (std::getline(is, line))
        if (line.rfind("out ", 0) != 0 && line.rfind("threads ", 0) != 0) t.comment(line);
}

void plot_point(std::ostream* plot, double x, double y) {
    if (plot) *plot << num(x) << " " << num(y) << "\n";
}

BuildOptions build_options(const ExperimentConfig& cfg, bool cells = true) {
    BuildOptions opt;
    opt.max_cells = cfg.max_cells;
    opt.with_cells = cells;
    return opt;
}

SlitSequence load_sequence(const ExperimentConfig& cfg) {
    switch (cfg.source) {
        case ExperimentConfig::Source::Dyadic: {
            std::vector<Dyadic> r;
            for (int i = 0; i <= cfg.k; ++i) r.push_back(cfg.r_at(i));
            return dyadic_slits(r, cfg.dim, cfg.k);
        }
        case ExperimentConfig::Source::File: {
            if (cfg.file.empty()) throw std::invalid_argument("source = file needs `file`");
            std::ifstream in(cfg.file);
            if (!in) throw std::runtime_error("cannot read " + cfg.file);
            std::stringstream ss;
            ss << in.rdbuf();
            SlitSequence seq = parse_slit_sequence(ss.str());
            validate_sequence(seq);
            return seq;
        }
        case ExperimentConfig::Source::Menger:
            return menger_slit_faces(cfg.A, cfg.k).z0;
    }
    throw std::logic_error("unknown source");
}

/** Slit counts for each level reported by the sweep commands. */
std::vector<std::pair<int, std::size_t>> levels(const ExperimentConfig& cfg, const SlitSequence& seq) {
    std::vector<std::pair<int, std::size_t>> out;
    if (cfg.source == ExperimentConfig::Source::File) {
        out.emplace_back(cfg.k, seq.size());
        return out;
    }
    for (int g = 0; g <= cfg.k; ++g) out.emplace_back(g, seq.count_through_generation(g));
    return out;
}

std::set<int> generations_through(const std::set<int>& A, int level) {
    std::set<int> out;
    for (int j : A)
        if (j <= level) out.insert(j);
    return out;
}

void require_menger(const ExperimentConfig& cfg) {
    if (cfg.source != ExperimentConfig::Source::Menger)
        throw std::invalid_argument(cfg.command + " needs source = menger");
}

void require_slits(const ExperimentConfig& cfg) {
    if (cfg.source == ExperimentConfig::Source::Menger)
        throw std::invalid_argument(cfg.command + " needs a dyadic or file slit source");
}

int cmd_slits(const ExperimentConfig& cfg, Table& t) {
    SlitSequence seq = load_sequence(cfg);
    auto rep = validate_sequence(seq);
    t.comment("sigma=" + num(seq.sigma) + " min_pairwise=" + num(rep.min_pairwise) +
              " min_boundary=" + num(rep.min_boundary));
    t.columns({"index", "generation", "axis", "offset", "center", "side"});
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const Slit& s = seq.slits[i];
        std::string c;
        for (const auto& x : s.center) c += (c.empty() ? "" : ";") + x.str();
        t.row({std::to_string(i), std::to_string(s.generation), std::to_string(s.axis), s.offset.str(), c,
               s.side.str()});
    }
    return 0;
}

int cmd_modulus(const ExperimentConfig& cfg, Table& t, std::ostream* plot) {
    ModulusOptions opt;
    opt.p = cfg.p;
    opt.tol = cfg.tol;
    t.columns({"level", "slits", "h", "p", "lower", "upper", "iterations", "converged", "wall_time_s"});
    auto emit = [&](int level, std::size_t slits, const GridComplex& gc, Clock::time_point t0) {
        auto r = discrete_modulus(gc, CurveFamilySpec::opposite_faces(0), opt);
        t.row({std::to_string(level), std::to_string(slits), cfg.h.str(), num(cfg.p), num(r.lower), num(r.upper),
               std::to_string(r.iterations), r.converged ? "1" : "0", t.wall(t0)});
        plot_point(plot, level, r.upper);
    };
    if (cfg.source == ExperimentConfig::Source::Menger) {
        for (int level = 0; level <= cfg.k; ++level) {
            auto t0 = Clock::now();
            auto A = generations_through(cfg.A, level);
            auto mc = build_menger(A, level, cfg.h, cfg.doubled, build_options(cfg));
            emit(level, mc.components.size(), mc.gc, t0);
        }
        return 0;
    }
    SlitSequence seq = load_sequence(cfg);
    for (auto [level, count] : levels(cfg, seq)) {
        auto t0 = Clock::now();
        GridComplex gc = build_slit_complex(seq, count, cfg.h, build_options(cfg));
        if (cfg.doubled) gc = double_complex(gc, Glue::OuterBoundary);
        emit(level, count, gc, t0);
    }
    return 0;
}

int cmd_collar(const ExperimentConfig& cfg, Table& t) {
    require_slits(cfg);
    SlitSequence seq = load_sequence(cfg);
    const int n = seq.box.dim();
    t.columns({"eps", "level", "selected", "H_R", "H_B", "H_O", "mass", "slack", "min_length", "admissible",
               "wall_time_s"});
    for (const Dyadic& eps : cfg.eps)
        for (auto [level, count] : levels(cfg, seq)) {
            auto t0 = Clock::now();
            auto sel = select_collars(seq, eps, Selection::Largest, count);
            auto d = decompose(seq, sel, eps, cfg.h);
            auto rho = rho_eps(d);
            double slack = admissibility_slack(cfg.h, n, d.b_minus_a);
            auto adm = admissibility_min(build_slit_complex(seq, count, cfg.h, build_options(cfg)), rho, slack);
            t.row({eps.str(), std::to_string(level), std::to_string(sel.size()), num(d.H_R), num(d.H_B), num(d.H_O),
                   num(rho.mass(cfg.p)), num(slack), num(adm.min_length), adm.admissible ? "1" : "0", t.wall(t0)});
        }
    return 0;
}

int cmd_residual(const ExperimentConfig& cfg, Table& t, std::ostream* plot) {
    if (cfg.source != ExperimentConfig::Source::Dyadic) throw std::invalid_argument("residual needs source = dyadic");
    SlitSequence seq = load_sequence(cfg);
    const Dyadic& eps = cfg.eps.front();
    std::vector<double> r;
    for (int i = 0; i <= cfg.k; ++i) r.push_back(cfg.r_at(i).to_double());
    t.columns({"level", "product", "H_R", "exact_R"});
    for (auto [level, count] : levels(cfg, seq)) {
        auto sel = select_collars(seq, eps, Selection::Largest, count);
        auto d = decompose(seq, sel, eps, cfg.h);
        double prod = residual_product(r, eps, cfg.dim, level);
        t.row({std::to_string(level), num(prod), num(d.H_R), num(d.exact_R.to_double())});
        plot_point(plot, level, prod);
    }
    return 0;
}

int cmd_fibers(const ExperimentConfig& cfg, Table& t) {
    require_menger(cfg);
    auto mc = build_menger(cfg.A, cfg.k, cfg.h, cfg.doubled, build_options(cfg, false));
    const GridComplex& gc = mc.gc;
    SlitSequence base = menger_slit_faces(cfg.A, cfg.k).z0;
    t.columns({"slit", "generation", "x", "y", "side", "betti", "endpoints", "label"});
    for (std::size_t i = 0; i < base.size(); ++i) {
        const Slit& s = base.slits[i];
        std::int64_t xi = gc.to_index(s.offset, 0);
        std::int64_t y0 = gc.to_index(s.cross_lo(1), 1), y1 = gc.to_index(s.cross_hi(1), 1);
        for (std::int64_t yi = y0; yi <= y1; ++yi) {
            std::int64_t gp = gc.grid_point({xi, yi, 0});
            std::set<std::int32_t> seen;
            for (unsigned side : {0u, 1u}) {
                std::int32_t v = gc.vertex(gp, side, 0);
                if (!seen.insert(v).second) continue;
                auto f = fiber(gc, v);
                t.row({std::to_string(i), std::to_string(s.generation), s.offset.str(), gc.coord_exact(gp, 1).str(),
                       std::to_string(gc.vside[v] & 1u), std::to_string(f.betti), std::to_string(f.endpoints),
                       f.label_str()});
            }
        }
    }
    return 0;
}

int cmd_covering(const ExperimentConfig& cfg, Table& t) {
    require_menger(cfg);
    if (cfg.doubled) throw std::invalid_argument("covering runs on the single complex");
    auto mc = build_menger(cfg.A, cfg.k, cfg.h, false, build_options(cfg));
    auto rep = covering_order(mc, cfg.n, cfg.eps.front().to_double());
    t.comment("max_order=" + std::to_string(rep.max_order) + " violations=" + std::to_string(rep.violations) +
              " bound=" + num(rep.bound) + " slack=" + num(rep.slack));
    std::string hist;
    for (std::size_t o = 0; o < rep.histogram.size(); ++o)
        hist += (hist.empty() ? "" : " ") + std::to_string(o) + ":" + std::to_string(rep.histogram[o]);
    t.comment("order_histogram " + hist);
    t.columns({"a_x", "a_y", "a_z", "b_x", "b_y", "b_z", "adjacent", "distance"});
    for (const auto& p : rep.pairs)
        t.row({std::to_string(p.a[0]), std::to_string(p.a[1]), std::to_string(p.a[2]), std::to_string(p.b[0]),
               std::to_string(p.b[1]), std::to_string(p.b[2]), p.adjacent ? "1" : "0", num(p.distance)});
    return 0;
}

int cmd_ahlfors(const ExperimentConfig& cfg, Table& t, std::ostream* plot) {
    GridComplex gc;
    if (cfg.source == ExperimentConfig::Source::Menger) {
        gc = build_menger(cfg.A, cfg.k, cfg.h, cfg.doubled, build_options(cfg, false)).gc;
    } else {
        SlitSequence seq = load_sequence(cfg);
        gc = build_slit_complex(seq, levels(cfg, seq).back().second, cfg.h, build_options(cfg, false));
        if (cfg.doubled) gc = double_complex(gc, Glue::OuterBoundary);
    }
    t.columns({"radius", "min_ratio", "max_ratio", "samples"});
    const double h = cfg.h.to_double();
    for (double r = 0.5; r > 2 * h; r /= 2) {
        auto rep = ahlfors_scan(gc, cfg.samples, {r}, cfg.seed);
        t.row({num(r), num(rep.min_ratio), num(rep.max_ratio), std::to_string(rep.samples)});
        plot_point(plot, r, rep.max_ratio / rep.min_ratio);
    }
    return 0;
}

int cmd_k5(const ExperimentConfig& cfg, Table& t) {
    require_menger(cfg);
    if (cfg.doubled) throw std::invalid_argument("k5 runs on the single complex");
    auto mc = build_menger(cfg.A, cfg.k, cfg.h, false, build_options(cfg, false));
    auto w = k5_witness(mc);
    t.comment(std::string("disjoint=") + (w.disjoint ? "1" : "0") + " bad_pairs=" +
              std::to_string(w.bad_pairs.size()));
    t.columns({"curve", "vertices", "length"});
    for (std::size_t i = 0; i < w.curves.size(); ++i)
        t.row({w.names[i], std::to_string(w.curves[i].vertices.size()), num(w.curves[i].length)});
    return 0;
}

int cmd_report(const ExperimentConfig& cfg, Table& t) {
    AcceptanceOptions opt;
    opt.seed = cfg.seed;
    t.columns({"criterion", "name", "pass", "detail", "wall_time_s"});
    int failed = 0;
    for (int id = 1; id <= kCriteria; ++id) {
        auto t0 = Clock::now();
        auto r = run_criterion(id, opt);
        if (!r.pass) ++failed;
        t.row({std::to_string(id), r.name, r.pass ? "PASS" : "FAIL", r.detail, t.wall(t0)});
    }
    return failed ? 1 : 0;
}

}  // namespace

int run_command(const ExperimentConfig& cfg, std::ostream& out, std::ostream* plot, bool timing) {
    Table t(out, timing);
    header(t, cfg);
    const std::string& c = cfg.command;
    if (c == "slits") return cmd_slits(cfg, t);
    if (c == "modulus") return cmd_modulus(cfg, t, plot);
    if (c == "collar") return cmd_collar(cfg, t);
    if (c == "residual") return cmd_residual(cfg, t, plot);
    if (c == "fibers") return cmd_fibers(cfg, t);
    if (c == "covering") return cmd_covering(cfg, t);
    if (c == "ahlfors") return cmd_ahlfors(cfg, t, plot);
    if (c == "k5") return cmd_k5(cfg, t);
    if (c == "report") return cmd_report(cfg, t);
    throw std::invalid_argument(c.empty() ? "no command given" : "unknown command: " + c);
}

}  // namespace slitmod
