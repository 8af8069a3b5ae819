#include <doctest.h>

#include <cmath>
#include <sstream>

#include "slitmod/cli.hpp"
#include "slitmod/config.hpp"

using namespace slitmod;

namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;

    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        FAIL("no column " << name);
        return 0;
    }
};

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

Table parse_csv(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0) t.comments.push_back(line.substr(2));
        else if (t.header.empty()) t.header = split(line);
        else t.rows.push_back(split(line));
    }
    return t;
}

std::string run(const std::string& config, int* code = nullptr) {
    std::ostringstream out;
    int rc = run_command(parse_config(config), out);
    if (code) *code = rc;
    return out.str();
}

}  // namespace

TEST_CASE("config parsing") {
    auto cfg = parse_config("# experiment\ncommand = modulus\nr = 1/2, 1/2^2\nh = 1/2^7  # fine\neps = 1/4,1/8\n"
                            "A = 0, 2\ndouble = true\np = 3\nseed = 42\n");
    CHECK(cfg.command == "modulus");
    CHECK(cfg.r.size() == 2);
    CHECK(cfg.r_at(5) == Dyadic::pow2_inv(2));
    CHECK(cfg.h == Dyadic::pow2_inv(7));
    CHECK(cfg.eps.size() == 2);
    CHECK(cfg.A == std::set<int>{0, 2});
    CHECK(cfg.doubled);
    CHECK(cfg.p == 3.0);
    CHECK(cfg.seed == 42);
}

TEST_CASE("config errors name the line") {
    auto line_of = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return e.line;
        }
        return -1;
    };
    CHECK(line_of("command = modulus\n\nk = -1\n") == 3);
    CHECK(line_of("h = 3/16\n") == 1);
    CHECK(line_of("p = 1\n") == 1);
    CHECK(line_of("tol = 0.5\n") == 1);
    CHECK(line_of("k = 1\nk = 2\n") == 2);
    CHECK(line_of("# only\nbogus = 1\n") == 2);
    CHECK(line_of("command modulus\n") == 1);
    CHECK(line_of("command = fly\n") == 1);
    CHECK(line_of("r = 1/3\n") == 1);
    CHECK(line_of("k = 2\n") == -1);
    CHECK_THROWS_WITH(parse_config("\nseed = x\n"), doctest::Contains("config:2:"));
}

TEST_CASE("config round trip") {
    auto cfg = parse_config("command = collar\nsource = menger\nA = 0,1\nk = 1\nh = 1/64\neps = 1/8\n"
                            "tol = 0.005\np = 2.5\nsamples = 7\nthreads = 2\nmax_cells = 1000\nout = x.csv\n");
    std::string text = serialize(cfg);
    CHECK(serialize(parse_config(text)) == text);
    auto back = parse_config(text);
    CHECK(back.tol == cfg.tol);
    CHECK(back.p == cfg.p);
    CHECK(back.A == cfg.A);
    CHECK(back.eps == cfg.eps);
    CHECK(back.source == ExperimentConfig::Source::Menger);
}

TEST_CASE("modulus command on the unit square") {
    auto t = parse_csv(run("command = modulus\nr = 0\nh = 1/256\np = 2\n"));
    REQUIRE(t.rows.size() == 1);
    CHECK(std::abs(std::stod(t.rows[0][t.col("upper")]) - 1) <= 0.03);
    CHECK(std::abs(std::stod(t.rows[0][t.col("lower")]) - 1) <= 0.03);
    CHECK(t.rows[0][t.col("wall_time_s")] == "NA");
    CHECK(t.comments[1] == "seed=1");
}

TEST_CASE("residual command") {
    auto t = parse_csv(run("command = residual\nr = 1/2\neps = 1/4\nk = 5\nh = 1/256\n"));
    REQUIRE(t.rows.size() == 6);
    for (int k = 0; k <= 5; ++k) {
        CHECK(std::stoi(t.rows[k][t.col("level")]) == k);
        CHECK(std::stod(t.rows[k][t.col("product")]) == doctest::Approx(std::pow(15.0 / 16, k + 1)));
        CHECK(std::stod(t.rows[k][t.col("H_R")]) <= std::pow(15.0 / 16, k + 1) + 1e-12);
    }
}

TEST_CASE("fibers command finds four Y rows on the big slit") {
    auto t = parse_csv(run("command = fibers\nsource = menger\nA = 0\nk = 0\nh = 1/32\ndouble = true\n"));
    int ys = 0;
    for (const auto& r : t.rows)
        if (r[t.col("label")].rfind("Y", 0) == 0) {
            ++ys;
            CHECK(r[t.col("betti")] == "3");
        }
    CHECK(ys == 4);
}

TEST_CASE("slits, collar, covering and k5 commands") {
    auto s = parse_csv(run("command = slits\nr = 1/2\nk = 1\n"));
    CHECK(s.rows.size() == 5);
    CHECK(s.rows[0][s.col("offset")] == "1/2^1");

    auto c = parse_csv(run("command = collar\nr = 1/2\nk = 1\nh = 1/32\neps = 1/4, 1/8\n"));
    CHECK(c.rows.size() == 4);
    for (const auto& r : c.rows) CHECK(r[c.col("admissible")] == "1");

    auto cov = parse_csv(run("command = covering\nsource = menger\nA = 0,1\nk = 1\nh = 1/32\neps = 1/64\n"));
    CHECK(cov.comments[cov.comments.size() - 2].rfind("max_order=2 violations=0", 0) == 0);

    auto k5 = parse_csv(run("command = k5\nsource = menger\nA = 0,1\nk = 1\nh = 1/16\n"));
    CHECK(k5.rows.size() == 10);
    CHECK(k5.comments[k5.comments.size() - 1].rfind("disjoint=1", 0) == 0);
}

TEST_CASE("outputs are deterministic for a fixed seed") {
    const std::string cfg = "command = ahlfors\nr = 1/2\nk = 1\nh = 1/32\nsamples = 10\nseed = 3\n";
    std::string a = run(cfg), b = run(cfg);
    CHECK(a == b);
    CHECK(a != run("command = ahlfors\nr = 1/2\nk = 1\nh = 1/32\nsamples = 10\nseed = 4\n"));
}

TEST_CASE("command errors") {
    CHECK_THROWS(run("command = fibers\nr = 1/2\n"));
    CHECK_THROWS(run("command = residual\nsource = menger\n"));
    CHECK_THROWS_WITH(run("command = modulus\nr = 0\nh = 1/1024\nmax_cells = 1000\n"), doctest::Contains("cell cap"));
    ExperimentConfig none;
    std::ostringstream out;
    CHECK_THROWS(run_command(none, out));
}
