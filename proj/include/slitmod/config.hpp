#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "slitmod/dyadic.hpp"

namespace slitmod {

/**
 * Experiment configuration. Text format: one `key = value` per line, `#`
 * starts a comment, lists are comma separated, rationals are "p/2^q".
 *
 *   command   slits | modulus | collar | residual | fibers | covering | ahlfors | k5 | report
 *   source    dyadic | file | menger
 *   r         r-sequence per generation (dyadic source); a single value repeats
 *   file      slit sequence file (file source)
 *   A         generation set (menger source)
 *   dim       2 or 3 (dyadic source)
 *   k         level
 *   h         grid step
 *   eps       collar widths
 *   p, tol    modulus exponent and relative gap
 *   n         covering level
 *   double    true | false
 *   samples   sample count for randomized checks
 *   seed, out, threads, max_cells
 */
struct ExperimentConfig {
    enum class Source { Dyadic, File, Menger };

    std::string command;
    Source source = Source::Dyadic;
    std::vector<Dyadic> r{Dyadic::pow2_inv(1)};
    std::string file;
    std::set<int> A{0};
    int dim = 2;
    int k = 0;
    Dyadic h = Dyadic::pow2_inv(6);
    std::vector<Dyadic> eps{Dyadic::pow2_inv(2)};
    double p = 2.0;
    double tol = 0.01;
    int n = 1;
    bool doubled = false;
    int samples = 100;
    std::uint64_t seed = 1;
    std::string out;
    int threads = 0;
    std::int64_t max_cells = std::int64_t{1} << 24;

    /** r_i for generation i; the last entry repeats. */
    Dyadic r_at(int i) const { return r.empty() ? Dyadic(0) : r[std::min<std::size_t>(i, r.size() - 1)]; }
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& msg)
        : std::runtime_error("config:" + std::to_string(line) + ": " + msg), line(line) {}
    int line;
};

ExperimentConfig parse_config(const std::string& text);
/** Applies one `key = value` assignment; `line` anchors errors. */
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value, int line);
std::string serialize(const ExperimentConfig& cfg);

}  // namespace slitmod
