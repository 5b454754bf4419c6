// adrsched: belief-threshold solves, Whittle index tables, and fleet
// scheduling simulations for automated demand-response devices, driven by
// scenario files.  Data goes to --out (or stdout) as CSV; progress and
// timings go to stderr.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adrsched/scenario.hpp"

namespace {

constexpr const char* kCsvVersion = "1";

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitSolver = 3;

struct CommonArgs {
    std::string scenario_path;
    std::string out_path;              // empty -> stdout
    std::optional<std::uint64_t> seed; // overrides the scenario seed
    int threads = 1;
    bool no_cache = false;
    std::string method_override;       // "", "vi", "lp"
};

void add_common(CLI::App* cmd, CommonArgs& args, bool wants_method) {
    cmd->add_option("--scenario", args.scenario_path, "scenario file")->required();
    cmd->add_option("--out", args.out_path, "output CSV path (default: stdout)");
    cmd->add_option("--seed", args.seed, "override the scenario seed");
    cmd->add_option("--threads", args.threads, "worker threads for sampling")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--no-cache", args.no_cache, "ignore and do not write the table cache");
    if (wants_method)
        cmd->add_option("--method", args.method_override, "value solver: vi or lp")
            ->check(CLI::IsMember({"vi", "lp"}));
}

class Timer {
  public:
    explicit Timer(std::string label) : label_(std::move(label)), t0_(clock::now()) {}
    ~Timer() {
        const auto dt = std::chrono::duration<double>(clock::now() - t0_).count();
        std::fprintf(stderr, "[adrsched] %s: %.3f s\n", label_.c_str(), dt);
    }

  private:
    using clock = std::chrono::steady_clock;
    std::string label_;
    clock::time_point t0_;
};

std::string cache_dir() {
    if (const char* env = std::getenv("ADRSCHED_CACHE_DIR")) return env;
    return ".adrsched-cache";
}

adr::Scenario load_scenario(const CommonArgs& args) {
    adr::Scenario s = adr::parse_scenario_file(args.scenario_path);
    if (args.seed) s.fleet.seed = *args.seed;
    if (args.method_override == "vi") s.solver.method = adr::SolveMethod::FixedPoint;
    if (args.method_override == "lp") s.solver.method = adr::SolveMethod::LinearProgram;
    return s;
}

// Build (or load from cache) the continuation table of the scenario's
// single-device model.
adr::ContinuationTable scenario_continuation(const adr::Scenario& s, const CommonArgs& args) {
    const adr::BeliefGrid grid(s.solver.n);
    auto build = [&] {
        adr::QmcStream qmc(s.obs.point_dimension());
        return adr::build_continuation(s.model, s.obs, grid, s.solver.N, qmc, args.threads);
    };
    if (args.no_cache) return build();
    const std::uint64_t key = adr::continuation_cache_key(s.model, s.obs, grid, s.solver.N, 0);
    char name[32];
    std::snprintf(name, sizeof(name), "cont-%016llx.bin", static_cast<unsigned long long>(key));
    const auto path = std::filesystem::path(cache_dir()) / name;
    if (auto cached = adr::load_continuation(path.string())) {
        std::fprintf(stderr, "[adrsched] continuation cache hit: %s\n", path.string().c_str());
        return std::move(*cached);
    }
    adr::ContinuationTable cont = build();
    std::filesystem::create_directories(cache_dir());
    adr::save_continuation(path.string(), cont);
    return cont;
}

// Write `body` to --out or stdout.  Files are written in one shot so a
// failed run never leaves a truncated CSV behind.
void emit(const CommonArgs& args, const std::string& body) {
    if (args.out_path.empty()) {
        std::cout << body;
        std::cout.flush();
        return;
    }
    std::ofstream out(args.out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file: " + args.out_path);
    out << body;
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

double resolve_epsilon(const adr::Scenario& s) {
    return s.whittle.epsilon > 0.0 ? s.whittle.epsilon
                                   : adr::kWhittleEpsilonFactor * std::max(s.model.lambda, 1.0);
}

int cmd_threshold(const CommonArgs& args) {
    const adr::Scenario s = load_scenario(args);
    Timer timer("threshold");
    const adr::ContinuationTable cont = scenario_continuation(s, args);
    const adr::ValueTable vt =
        adr::solve_value(s.model, cont, 0.0, s.solver.method, s.solver.tol);
    std::ostringstream csv;
    csv << "version,n,N,case,b_star,V_at_1\n";
    csv << kCsvVersion << ',' << s.solver.n << ',' << s.solver.N << ','
        << adr::obs_case_name(s.obs.obs_case) << ','
        << format_double(static_cast<double>(vt.threshold_index) / s.solver.n) << ','
        << format_double(vt.v.back()) << '\n';
    emit(args, csv.str());
    return kExitOk;
}

int cmd_whittle(const CommonArgs& args) {
    const adr::Scenario s = load_scenario(args);
    Timer timer("whittle");
    const adr::ContinuationTable cont = scenario_continuation(s, args);
    const adr::WhittleTable wt = adr::compute_whittle_table(s.model, cont, resolve_epsilon(s));
    std::ostringstream csv;
    csv << "version,k,belief,index\n";
    for (int k = 0; k <= s.solver.n; ++k) {
        csv << kCsvVersion << ',' << k << ','
            << format_double(static_cast<double>(k) / s.solver.n) << ','
            << format_double(wt.index_values[k]) << '\n';
    }
    emit(args, csv.str());
    return kExitOk;
}

int cmd_simulate(const CommonArgs& args) {
    const adr::Scenario s = load_scenario(args);
    Timer timer("simulate");
    adr::FleetBuildOptions opt;
    opt.grid_n = s.solver.n;
    opt.samples = s.solver.N;
    opt.epsilon = resolve_epsilon(s);
    opt.threads = args.threads;
    if (!args.no_cache) opt.cache_dir = cache_dir();
    const adr::FleetScenario fs = adr::build_fleet_scenario(
        s.model, s.obs, s.fleet.D, s.fleet.M, s.fleet.cost_mode, s.fleet.snr_mode, s.snr(),
        s.fleet.T, s.fleet.runs, s.fleet.seed, opt);

    // Identical fleets compare the index policies against the exact count
    // references; heterogeneous fleets have no exact reference, so the
    // partial-information policy is measured against the revealed-state
    // index policies instead.
    std::vector<std::pair<adr::PolicyId, adr::PolicyId>> pairs;
    if (s.fleet.cost_mode == adr::CostMode::Identical) {
        pairs = {{adr::PolicyId::FullWhittle, adr::PolicyId::FullOptimal},
                 {adr::PolicyId::SlowWhittle, adr::PolicyId::SlowOptimal},
                 {adr::PolicyId::PartialWhittle, adr::PolicyId::FullOptimal},
                 {adr::PolicyId::PartialWhittle, adr::PolicyId::SlowOptimal}};
    } else {
        pairs = {{adr::PolicyId::PartialWhittle, adr::PolicyId::FullWhittle},
                 {adr::PolicyId::PartialWhittle, adr::PolicyId::SlowWhittle}};
    }

    std::ostringstream csv;
    csv << "version,snr,policy,reference,err_percent,stderr,runs\n";
    for (const auto& [policy, reference] : pairs) {
        const adr::SimReport rep = adr::simulate(fs, policy, reference);
        csv << kCsvVersion << ',' << format_double(rep.snr_db) << ','
            << adr::policy_name(rep.policy) << ',' << adr::policy_name(rep.reference) << ','
            << format_double(rep.err_percent) << ',' << format_double(rep.policy_se) << ','
            << rep.runs << '\n';
    }
    emit(args, csv.str());
    return kExitOk;
}

int cmd_periodic(const CommonArgs& args, int qmax) {
    const adr::Scenario s = load_scenario(args);
    Timer timer("periodic");
    const adr::PeriodicReview best = adr::best_periodic_review(s.model, qmax);
    std::ostringstream csv;
    csv << "version,q,value,best\n";
    for (int q = 1; q <= qmax; ++q) {
        csv << kCsvVersion << ',' << q << ',' << format_double(adr::periodic_value(s.model, q))
            << ',' << (q == best.q_star ? 1 : 0) << '\n';
    }
    emit(args, csv.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ADR maintenance scheduling: thresholds, Whittle indices, fleet simulation"};
    app.require_subcommand(1);

    CommonArgs threshold_args, whittle_args, simulate_args, periodic_args;
    int qmax = 200;

    CLI::App* threshold = app.add_subcommand("threshold", "optimal belief threshold and value");
    add_common(threshold, threshold_args, true);
    CLI::App* whittle = app.add_subcommand("whittle", "Whittle index per grid belief");
    add_common(whittle, whittle_args, true);
    CLI::App* simulate = app.add_subcommand("simulate", "fleet policy comparison");
    add_common(simulate, simulate_args, true);
    CLI::App* periodic = app.add_subcommand("periodic", "periodic-review value curve");
    add_common(periodic, periodic_args, false);
    periodic->add_option("--qmax", qmax, "largest review period to score")
        ->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (threshold->parsed()) return cmd_threshold(threshold_args);
        if (whittle->parsed()) return cmd_whittle(whittle_args);
        if (simulate->parsed()) return cmd_simulate(simulate_args);
        if (periodic->parsed()) return cmd_periodic(periodic_args, qmax);
    } catch (const adr::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitParse;
    } catch (const adr::SolverError& e) {
        std::fprintf(stderr, "solver error: %s (residual %.3e)\n", e.what(), e.residual);
        return kExitSolver;
    } catch (const adr::WhittleError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return kExitSolver;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolver;
    }
    return kExitOk;
}
