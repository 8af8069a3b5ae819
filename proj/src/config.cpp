#include "slitmod/config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace slitmod {

namespace {

const std::set<std::string> kCommands{"slits", "modulus", "collar", "residual", "fibers",
                                      "covering", "ahlfors", "k5", "report"};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> items(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
T number(const std::string& v, int line, const std::string& key) {
    T x{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(line, key + ": not a number: " + v);
    return x;
}

double real(const std::string& v, int line, const std::string& key) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos == v.size()) return x;
    } catch (const std::exception&) {
    }
    try {
        return Dyadic::parse(v).to_double();
    } catch (const std::exception&) {
        throw ConfigError(line, key + ": not a number: " + v);
    }
}

Dyadic dyadic(const std::string& v, int line, const std::string& key) {
    try {
        return Dyadic::parse(v);
    } catch (const std::exception& e) {
        throw ConfigError(line, key + ": " + e.what());
    }
}

Dyadic positive_dyadic(const std::string& v, int line, const std::string& key) {
    Dyadic d = dyadic(v, line, key);
    if (d.sign() <= 0) throw ConfigError(line, key + " must be positive");
    return d;
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value, int line) {
    const std::string& v = value;
    if (key == "command") {
        if (!kCommands.count(v)) throw ConfigError(line, "unknown command: " + v);
        cfg.command = v;
    } else if (key == "source") {
        if (v == "dyadic") cfg.source = ExperimentConfig::Source::Dyadic;
        else if (v == "file") cfg.source = ExperimentConfig::Source::File;
        else if (v == "menger") cfg.source = ExperimentConfig::Source::Menger;
        else throw ConfigError(line, "unknown source: " + v);
    } else if (key == "r") {
        cfg.r.clear();
        for (const auto& it : items(v)) {
            Dyadic d = dyadic(it, line, key);
            if (d.sign() < 0 || d > Dyadic(1)) throw ConfigError(line, "r entries must lie in [0,1]");
            cfg.r.push_back(d);
        }
        if (cfg.r.empty()) throw ConfigError(line, "r is empty");
    } else if (key == "file") {
        cfg.file = v;
    } else if (key == "A") {
        cfg.A.clear();
        for (const auto& it : items(v)) {
            int j = number<int>(it, line, key);
            if (j < 0) throw ConfigError(line, "A entries must be >= 0");
            cfg.A.insert(j);
        }
    } else if (key == "dim") {
        cfg.dim = number<int>(v, line, key);
        if (cfg.dim < 1 || cfg.dim > 3) throw ConfigError(line, "dim must be 1, 2 or 3");
    } else if (key == "k") {
        cfg.k = number<int>(v, line, key);
        if (cfg.k < 0) throw ConfigError(line, "k must be >= 0");
    } else if (key == "h") {
        cfg.h = positive_dyadic(v, line, key);
        if (!cfg.h.is_power_of_half()) throw ConfigError(line, "h must be a power of 1/2");
    } else if (key == "eps") {
        cfg.eps.clear();
        for (const auto& it : items(v)) cfg.eps.push_back(positive_dyadic(it, line, key));
        if (cfg.eps.empty()) throw ConfigError(line, "eps is empty");
    } else if (key == "p") {
        cfg.p = real(v, line, key);
        if (!(cfg.p > 1)) throw ConfigError(line, "p must be > 1");
    } else if (key == "tol") {
        cfg.tol = real(v, line, key);
        if (!(cfg.tol > 0) || cfg.tol > 0.1) throw ConfigError(line, "tol must lie in (0, 0.1]");
    } else if (key == "n") {
        cfg.n = number<int>(v, line, key);
        if (cfg.n < 1) throw ConfigError(line, "n must be >= 1");
    } else if (key == "double") {
        if (v == "true" || v == "1") cfg.doubled = true;
        else if (v == "false" || v == "0") cfg.doubled = false;
        else throw ConfigError(line, "double must be true or false");
    } else if (key == "samples") {
        cfg.samples = number<int>(v, line, key);
        if (cfg.samples < 1) throw ConfigError(line, "samples must be >= 1");
    } else if (key == "seed") {
        cfg.seed = number<std::uint64_t>(v, line, key);
    } else if (key == "out") {
        cfg.out = v;
    } else if (key == "threads") {
        cfg.threads = number<int>(v, line, key);
        if (cfg.threads < 0) throw ConfigError(line, "threads must be >= 0");
    } else if (key == "max_cells") {
        cfg.max_cells = number<std::int64_t>(v, line, key);
        if (cfg.max_cells < 1) throw ConfigError(line, "max_cells must be >= 1");
    } else {
        throw ConfigError(line, "unknown key: " + key);
    }
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::set<std::string> seen;
    for (int line = 1; std::getline(in, raw); ++line) {
        auto hash = raw.find('#');
        std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "expected key = value");
        std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError(line, "missing key");
        if (value.empty()) throw ConfigError(line, key + ": missing value");
        if (!seen.insert(key).second) throw ConfigError(line, "duplicate key: " + key);
        apply_setting(cfg, key, value, line);
    }
    return cfg;
}

std::string serialize(const ExperimentConfig& cfg) {
    std::ostringstream os;
    auto join = [](const auto& list, auto fmt) {
        std::string s;
        for (const auto& x : list) s += (s.empty() ? "" : ",") + fmt(x);
        return s;
    };
    auto dy = [](const Dyadic& d) { return d.str(); };
    if (!cfg.command.empty()) os << "command = " << cfg.command << "\n";
    const char* src[] = {"dyadic", "file", "menger"};
    os << "source = " << src[static_cast<int>(cfg.source)] << "\n";
    os << "r = " << join(cfg.r, dy) << "\n";
    if (!cfg.file.empty()) os << "file = " << cfg.file << "\n";
    if (!cfg.A.empty()) os << "A = " << join(cfg.A, [](int j) { return std::to_string(j); }) << "\n";
    os << "dim = " << cfg.dim << "\n";
    os << "k = " << cfg.k << "\n";
    os << "h = " << cfg.h.str() << "\n";
    os << "eps = " << join(cfg.eps, dy) << "\n";
    std::ostringstream p, tol;
    p.precision(17);
    tol.precision(17);
    p << cfg.p;
    tol << cfg.tol;
    os << "p = " << p.str() << "\n";
    os << "tol = " << tol.str() << "\n";
    os << "n = " << cfg.n << "\n";
    os << "double = " << (cfg.doubled ? "true" : "false") << "\n";
    os << "samples = " << cfg.samples << "\n";
    os << "seed = " << cfg.seed << "\n";
    if (!cfg.out.empty()) os << "out = " << cfg.out << "\n";
    os << "threads = " << cfg.threads << "\n";
    os << "max_cells = " << cfg.max_cells << "\n";
    return os.str();
}

}  // namespace slitmod
