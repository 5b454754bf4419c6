#include "adrsched/scenario.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace adr {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct RawEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

using SectionMap = std::map<std::string, std::map<std::string, RawEntry>>;

const std::map<std::string, std::vector<std::string>>& known_keys() {
    static const std::map<std::string, std::vector<std::string>> k = {
        {"model", {"lambda", "c", "theta", "p", "beta"}},
        {"observation", {"m", "sigma", "snr_db", "nu0", "eta0_relative", "d", "case"}},
        {"solver", {"n", "N", "method", "tol"}},
        {"whittle", {"epsilon"}},
        {"fleet", {"D", "M", "cost_mode", "snr_mode", "T", "runs", "seed"}},
    };
    return k;
}

SectionMap tokenize(const std::string& text, const std::string& origin) {
    SectionMap tab;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string s = trim(raw);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ParseError(origin + ":" + std::to_string(line) + ": unterminated section header",
                                 line);
            section = trim(s.substr(1, s.size() - 2));
            if (known_keys().find(section) == known_keys().end())
                throw ParseError(origin + ":" + std::to_string(line) + ": unknown section [" +
                                     section + "]",
                                 line);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(line) + ": expected key = value", line);
        if (section.empty())
            throw ParseError(origin + ":" + std::to_string(line) + ": key outside any [section]",
                             line);
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParseError(origin + ":" + std::to_string(line) + ": empty key or value", line);
        auto [it, fresh] = tab[section].emplace(key, RawEntry{value, line, false});
        if (!fresh)
            throw ParseError(origin + ":" + std::to_string(line) + ": duplicate key '" + key +
                                 "' (first at line " + std::to_string(it->second.line) + ")",
                             line);
    }
    return tab;
}

class Reader {
  public:
    Reader(SectionMap tab, std::string origin) : tab_(std::move(tab)), origin_(std::move(origin)) {}

    RawEntry* find(const std::string& section, const std::string& key) {
        auto s = tab_.find(section);
        if (s == tab_.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        k->second.used = true;
        return &k->second;
    }

    double number(const std::string& sec, const std::string& key, double fallback) {
        RawEntry* e = find(sec, key);
        if (!e) return fallback;
        errno = 0;
        char* end = nullptr;
        const double x = std::strtod(e->value.c_str(), &end);
        if (end == e->value.c_str() || *end != '\0' || errno == ERANGE)
            throw ParseError(at(e->line) + ": '" + e->value + "' is not a number for " + key,
                             e->line);
        return x;
    }

    long long integer(const std::string& sec, const std::string& key, long long fallback) {
        RawEntry* e = find(sec, key);
        if (!e) return fallback;
        errno = 0;
        char* end = nullptr;
        const long long x = std::strtoll(e->value.c_str(), &end, 10);
        if (end == e->value.c_str() || *end != '\0' || errno == ERANGE)
            throw ParseError(at(e->line) + ": '" + e->value + "' is not an integer for " + key,
                             e->line);
        return x;
    }

    std::uint64_t unsigned_integer(const std::string& sec, const std::string& key,
                                   std::uint64_t fallback) {
        RawEntry* e = find(sec, key);
        if (!e) return fallback;
        errno = 0;
        char* end = nullptr;
        const unsigned long long x = std::strtoull(e->value.c_str(), &end, 10);
        if (end == e->value.c_str() || *end != '\0' || errno == ERANGE ||
            e->value.find('-') != std::string::npos)
            throw ParseError(at(e->line) + ": '" + e->value +
                                 "' is not an unsigned integer for " + key,
                             e->line);
        return x;
    }

    // Every stored key must have been consumed by a typed getter.
    void reject_unknown() const {
        for (const auto& [sec, keys] : tab_) {
            for (const auto& [key, entry] : keys) {
                if (!entry.used)
                    throw ParseError(at(entry.line) + ": unknown key '" + key + "' in [" + sec +
                                         "]",
                                     entry.line);
            }
        }
    }

    std::string at(int line) const { return origin_ + ":" + std::to_string(line); }

  private:
    SectionMap tab_;
    std::string origin_;
};

ObsCase parse_case(Reader& r) {
    RawEntry* e = r.find("observation", "case");
    if (!e) return ObsCase::A;
    std::string v = e->value;
    for (char& ch : v) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (v == "a") return ObsCase::A;
    if (v == "b") return ObsCase::B;
    if (v == "c") return ObsCase::C;
    if (v == "d") return ObsCase::D;
    throw ParseError(r.at(e->line) + ": case must be one of a, b, c, d", e->line);
}

}  // namespace

double Scenario::snr() const { return snr_db; }

const char* obs_case_name(ObsCase c) {
    switch (c) {
        case ObsCase::A: return "a";
        case ObsCase::B: return "b";
        case ObsCase::C: return "c";
        case ObsCase::D: return "d";
    }
    return "?";
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
    Reader r(tokenize(text, origin), origin);
    Scenario s;

    s.model.lambda = r.number("model", "lambda", s.model.lambda);
    s.model.c = r.number("model", "c", s.model.c);
    s.model.theta = r.number("model", "theta", s.model.theta);
    s.model.p = r.number("model", "p", s.model.p);
    s.model.beta = r.number("model", "beta", s.model.beta);

    s.obs.obs_case = parse_case(r);
    s.obs.m = static_cast<int>(r.integer("observation", "m", 10));
    s.obs.nu0 = r.number("observation", "nu0", 1.0);
    s.eta0_relative = r.number("observation", "eta0_relative", 0.1);
    const int default_d = case_has_mismatch(s.obs.obs_case) ? 2 : 0;
    s.obs.d = static_cast<int>(r.integer("observation", "d", default_d));

    RawEntry* sigma_entry = r.find("observation", "sigma");
    RawEntry* snr_entry = r.find("observation", "snr_db");
    if (sigma_entry && snr_entry)
        throw ParseError(r.at(snr_entry->line) + ": give either sigma or snr_db, not both",
                         snr_entry->line);
    if (sigma_entry) {
        s.snr_given = false;
        errno = 0;
        char* end = nullptr;
        s.sigma = std::strtod(sigma_entry->value.c_str(), &end);
        if (end == sigma_entry->value.c_str() || *end != '\0' || errno == ERANGE)
            throw ParseError(r.at(sigma_entry->line) + ": '" + sigma_entry->value +
                                 "' is not a number for sigma",
                             sigma_entry->line);
        if (!(s.sigma > 0.0))
            throw ParseError(r.at(sigma_entry->line) + ": sigma must be positive",
                             sigma_entry->line);
        s.snr_db = 20.0 * std::log10(s.obs.nu0 / s.sigma);
    } else {
        s.snr_given = true;
        s.snr_db = 0.0;
        if (snr_entry) {
            errno = 0;
            char* end = nullptr;
            s.snr_db = std::strtod(snr_entry->value.c_str(), &end);
            if (end == snr_entry->value.c_str() || *end != '\0' || errno == ERANGE)
                throw ParseError(r.at(snr_entry->line) + ": '" + snr_entry->value +
                                     "' is not a number for snr_db",
                                 snr_entry->line);
        }
        s.sigma = s.obs.nu0 * std::pow(10.0, -s.snr_db / 20.0);
    }
    if (!(s.eta0_relative > 0.0)) throw ParseError(origin + ": eta0_relative must be positive", 0);
    s.obs.sigma = s.sigma;
    s.obs.eta0 = 1.0 / ((s.eta0_relative * s.sigma) * (s.eta0_relative * s.sigma));
    s.obs.y.assign(s.obs.reading_length(), 0.0);

    s.solver.n = static_cast<int>(r.integer("solver", "n", s.solver.n));
    s.solver.N = static_cast<int>(r.integer("solver", "N", s.solver.N));
    s.solver.tol = r.number("solver", "tol", s.solver.tol);
    if (RawEntry* e = r.find("solver", "method")) {
        if (e->value == "vi") {
            s.solver.method = SolveMethod::FixedPoint;
        } else if (e->value == "lp") {
            s.solver.method = SolveMethod::LinearProgram;
        } else {
            throw ParseError(r.at(e->line) + ": method must be vi or lp", e->line);
        }
    }

    s.whittle.epsilon = r.number("whittle", "epsilon", 0.0);

    s.fleet.D = static_cast<int>(r.integer("fleet", "D", s.fleet.D));
    s.fleet.M = static_cast<int>(r.integer("fleet", "M", s.fleet.M));
    s.fleet.T = static_cast<int>(r.integer("fleet", "T", s.fleet.T));
    s.fleet.runs = static_cast<int>(r.integer("fleet", "runs", s.fleet.runs));
    s.fleet.seed = r.unsigned_integer("fleet", "seed", s.fleet.seed);
    if (RawEntry* e = r.find("fleet", "cost_mode")) {
        if (e->value == "identical") {
            s.fleet.cost_mode = CostMode::Identical;
        } else if (e->value == "uniform") {
            s.fleet.cost_mode = CostMode::UniformRandom;
        } else {
            throw ParseError(r.at(e->line) + ": cost_mode must be identical or uniform", e->line);
        }
    }
    if (RawEntry* e = r.find("fleet", "snr_mode")) {
        if (e->value == "fixed") {
            s.fleet.snr_mode = SnrMode::Fixed;
        } else if (e->value == "uniform") {
            s.fleet.snr_mode = SnrMode::UniformRandom;
        } else {
            throw ParseError(r.at(e->line) + ": snr_mode must be fixed or uniform", e->line);
        }
    }

    r.reject_unknown();

    try {
        s.model.validate();
        s.obs.validate();
    } catch (const std::invalid_argument& err) {
        throw ParseError(origin + ": " + err.what(), 0);
    }
    if (s.solver.n < 2) throw ParseError(origin + ": solver n must be >= 2", 0);
    if (s.solver.N < 1) throw ParseError(origin + ": solver N must be >= 1", 0);
    if (!(s.solver.tol > 0.0)) throw ParseError(origin + ": solver tol must be positive", 0);
    if (s.whittle.epsilon < 0.0) throw ParseError(origin + ": whittle epsilon must be >= 0", 0);
    if (s.fleet.D < 1) throw ParseError(origin + ": fleet D must be >= 1", 0);
    if (s.fleet.M < 0 || s.fleet.M > s.fleet.D)
        throw ParseError(origin + ": fleet M must be in [0, D]", 0);
    if (s.fleet.T < 1) throw ParseError(origin + ": fleet T must be >= 1", 0);
    if (s.fleet.runs < 1) throw ParseError(origin + ": fleet runs must be >= 1", 0);
    return s;
}

Scenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open scenario file: " + path, 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path);
}

std::string serialize_scenario(const Scenario& s) {
    char buf[64];
    std::ostringstream out;
    auto num = [&](double x) {
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        return std::string(buf);
    };
    out << "[model]\n";
    out << "lambda = " << num(s.model.lambda) << "\n";
    out << "c = " << num(s.model.c) << "\n";
    out << "theta = " << num(s.model.theta) << "\n";
    out << "p = " << num(s.model.p) << "\n";
    out << "beta = " << num(s.model.beta) << "\n\n";
    out << "[observation]\n";
    out << "m = " << s.obs.m << "\n";
    if (s.snr_given) {
        out << "snr_db = " << num(s.snr_db) << "\n";
    } else {
        out << "sigma = " << num(s.sigma) << "\n";
    }
    out << "nu0 = " << num(s.obs.nu0) << "\n";
    out << "eta0_relative = " << num(s.eta0_relative) << "\n";
    out << "d = " << s.obs.d << "\n";
    out << "case = " << obs_case_name(s.obs.obs_case) << "\n\n";
    out << "[solver]\n";
    out << "n = " << s.solver.n << "\n";
    out << "N = " << s.solver.N << "\n";
    out << "method = " << (s.solver.method == SolveMethod::FixedPoint ? "vi" : "lp") << "\n";
    out << "tol = " << num(s.solver.tol) << "\n\n";
    out << "[whittle]\n";
    out << "epsilon = " << num(s.whittle.epsilon) << "\n\n";
    out << "[fleet]\n";
    out << "D = " << s.fleet.D << "\n";
    out << "M = " << s.fleet.M << "\n";
    out << "cost_mode = " << (s.fleet.cost_mode == CostMode::Identical ? "identical" : "uniform")
        << "\n";
    out << "snr_mode = " << (s.fleet.snr_mode == SnrMode::Fixed ? "fixed" : "uniform") << "\n";
    out << "T = " << s.fleet.T << "\n";
    out << "runs = " << s.fleet.runs << "\n";
    out << "seed = " << s.fleet.seed << "\n";
    return out.str();
}

}  // namespace adr
