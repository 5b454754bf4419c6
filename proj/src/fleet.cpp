#include "adrsched/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>

#include "adrsched/vbayes.hpp"

namespace adr {

namespace {

// ------------------------------------------------------------------
// Counter-based uniforms.  Every draw is a pure function of its key, so
// the same (seed, run, event, device, channel) produces the same number
// no matter which policy is running or in what order draws are consumed:
// exactly the common-random-numbers contract the error estimates rely on.
// ------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Distinct domains keep per-event draws and once-per-scenario draws
// (costs, noise levels) from ever colliding.
constexpr std::uint64_t kEventDomain = 0x6576656E74ull;
constexpr std::uint64_t kScenarioDomain = 0x7363656E65ull;

// Map to the open interval (0,1); the half-step keeps both endpoints out.
double to_unit(std::uint64_t h) { return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53; }

// Channel 0 is the failure draw; 1..len are reading-noise coordinates;
// len+1 is the load-shed draw; len+2 the window-offset draw.
double event_uniform(std::uint64_t seed, std::uint64_t run, std::uint64_t t, std::uint64_t adr,
                     std::uint64_t channel) {
    std::uint64_t h = splitmix64(seed ^ kEventDomain);
    h = splitmix64(h ^ run);
    h = splitmix64(h ^ t);
    h = splitmix64(h ^ adr);
    h = splitmix64(h ^ channel);
    return to_unit(h);
}

double scenario_uniform(std::uint64_t seed, std::uint64_t adr, std::uint64_t tag) {
    std::uint64_t h = splitmix64(seed ^ kScenarioDomain);
    h = splitmix64(h ^ adr);
    h = splitmix64(h ^ tag);
    return to_unit(h);
}

// ------------------------------------------------------------------
// Count-chain machinery shared by the two exact references.
// ------------------------------------------------------------------

// pmf[k][j] = P(Binomial(k, q) = j).
std::vector<std::vector<double>> binomial_rows(int D, double q) {
    std::vector<std::vector<double>> pmf(D + 1);
    for (int k = 0; k <= D; ++k) {
        pmf[k].assign(k + 1, 0.0);
        if (q <= 0.0) {
            pmf[k][0] = 1.0;
        } else if (q >= 1.0) {
            pmf[k][k] = 1.0;
        } else {
            const double lq = std::log(q);
            const double lnot = std::log1p(-q);
            for (int j = 0; j <= k; ++j) {
                const double lc = std::lgamma(k + 1.0) - std::lgamma(j + 1.0) -
                                  std::lgamma(k - j + 1.0);
                pmf[k][j] = std::exp(lc + j * lq + (k - j) * lnot);
            }
        }
    }
    return pmf;
}

constexpr double kCountDpTolerance = 1e-12;
constexpr int kCountDpMaxSweeps = 1000000;

double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Deterministic pairwise reduction: the summation tree depends only on the
// length, never on threading or accumulation order.
double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe summarize(const std::vector<double>& vals) {
    MeanSe out;
    out.mean = pairwise_sum(vals) / static_cast<double>(vals.size());
    if (vals.size() < 2) return out;
    std::vector<double> sq(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const double d = vals[i] - out.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(vals.size() - 1);
    out.se = std::sqrt(var / static_cast<double>(vals.size()));
    return out;
}

void check_fleet_shape(int D, int M) {
    if (D < 1) throw std::invalid_argument("fleet: device count must be >= 1");
    if (M < 0 || M > D) throw std::invalid_argument("fleet: crew count must be in [0, D]");
}

}  // namespace

double periodic_value(const AdrModel& model, int q) {
    model.validate();
    if (q < 1) throw std::invalid_argument("periodic_value: period must be >= 1");
    const double bq = std::pow(model.beta, q);
    const double sq = std::pow(model.beta * (1.0 - model.p), q);
    // One cycle: repair (works surely), then coast q-1 events while the
    // working probability decays by 1-p per event; compensation theta is a
    // constant drain outside the cycle structure.
    const double cycle = model.lambda * (1.0 - sq) / (1.0 - model.beta * (1.0 - model.p)) -
                         model.c;
    return cycle / (1.0 - bq) - model.theta / (1.0 - model.beta);
}

PeriodicReview best_periodic_review(const AdrModel& model, int q_max) {
    if (q_max < 1) throw std::invalid_argument("best_periodic_review: q_max must be >= 1");
    PeriodicReview best;
    best.q_star = 1;
    best.value = periodic_value(model, 1);
    for (int q = 2; q <= q_max; ++q) {
        const double u = periodic_value(model, q);
        if (u > best.value) {
            best.value = u;
            best.q_star = q;
        }
    }
    return best;
}

CountPolicy full_info_optimal_policy(const AdrModel& model, int D, int M) {
    model.validate();
    check_fleet_shape(D, M);
    const double q = 1.0 - model.p;
    const auto pmf = binomial_rows(D, q);
    const double drain = model.theta * D;

    std::vector<double> v(D + 1, 0.0), vnext(D + 1, 0.0), ev(D + 1, 0.0);
    for (int sweep = 0;; ++sweep) {
        if (sweep >= kCountDpMaxSweeps)
            throw std::runtime_error("full_info_optimal_policy: value iteration did not converge");
        for (int k = 0; k <= D; ++k) {
            double s = 0.0;
            for (int j = 0; j <= k; ++j) s += pmf[k][j] * v[j];
            ev[k] = s;
        }
        for (int w = 0; w <= D; ++w) {
            double best = -std::numeric_limits<double>::infinity();
            const int amax = std::min(M, D - w);
            for (int a = 0; a <= amax; ++a) {
                const double cand = model.lambda * w - drain + (model.lambda - model.c) * a +
                                    model.beta * ev[w + a];
                if (cand > best) best = cand;
            }
            vnext[w] = best;
        }
        const double diff = sup_diff(vnext, v);
        v.swap(vnext);
        if (model.beta * diff / (1.0 - model.beta) <= kCountDpTolerance * (1.0 + sup_norm(v)))
            break;
    }

    CountPolicy cp;
    cp.crews = M;
    cp.value = v;
    cp.repairs.assign(D + 1, 0);
    for (int k = 0; k <= D; ++k) {
        double s = 0.0;
        for (int j = 0; j <= k; ++j) s += pmf[k][j] * v[j];
        ev[k] = s;
    }
    for (int w = 0; w <= D; ++w) {
        double best = -std::numeric_limits<double>::infinity();
        int arg = 0;
        const int amax = std::min(M, D - w);
        for (int a = 0; a <= amax; ++a) {
            const double cand = model.lambda * w - drain + (model.lambda - model.c) * a +
                                model.beta * ev[w + a];
            if (cand > best) {  // ties keep the fewest repairs
                best = cand;
                arg = a;
            }
        }
        cp.repairs[w] = arg;
    }
    return cp;
}

SlowCountPolicy slow_info_policy(const AdrModel& model, int D, int M) {
    model.validate();
    check_fleet_shape(D, M);
    const double q = 1.0 - model.p;
    const auto pmf = binomial_rows(D, q);
    const double drain = model.theta * D;

    // g[u][K] = E V(K + Binomial(u, q)): u un-repaired devices at belief
    // 1-p plus K freshly repaired ones, all revealed after the event.
    std::vector<std::vector<double>> g(D + 1, std::vector<double>(M + 1, 0.0));
    auto refresh_g = [&](const std::vector<double>& v) {
        for (int u = 0; u <= D; ++u) {
            for (int K = 0; K <= M && K + u <= D; ++K) {
                double s = 0.0;
                for (int j = 0; j <= u; ++j) s += pmf[u][j] * v[K + j];
                g[u][K] = s;
            }
        }
    };

    auto best_action = [&](int n1) {
        double best = -std::numeric_limits<double>::infinity();
        std::pair<int, int> arg{0, 0};  // (k0 at belief 0, k1 at belief 1-p)
        for (int k1 = 0; k1 <= std::min(M, n1); ++k1) {
            for (int k0 = 0; k0 <= std::min(M - k1, D - n1); ++k0) {
                const int K = k0 + k1;
                const double cand = (model.lambda - model.c) * K +
                                    model.lambda * q * (n1 - k1) - drain +
                                    model.beta * g[n1 - k1][K];
                if (cand > best) {  // ties prefer fewer, and low-belief, repairs
                    best = cand;
                    arg = {k0, k1};
                }
            }
        }
        return std::make_pair(best, arg);
    };

    std::vector<double> v(D + 1, 0.0), vnext(D + 1, 0.0);
    for (int sweep = 0;; ++sweep) {
        if (sweep >= kCountDpMaxSweeps)
            throw std::runtime_error("slow_info_policy: value iteration did not converge");
        refresh_g(v);
        for (int n1 = 0; n1 <= D; ++n1) vnext[n1] = best_action(n1).first;
        const double diff = sup_diff(vnext, v);
        v.swap(vnext);
        if (model.beta * diff / (1.0 - model.beta) <= kCountDpTolerance * (1.0 + sup_norm(v)))
            break;
    }

    SlowCountPolicy sp;
    sp.crews = M;
    sp.value = v;
    sp.repairs_low.assign(D + 1, 0);
    sp.repairs_high.assign(D + 1, 0);
    refresh_g(v);
    for (int n1 = 0; n1 <= D; ++n1) {
        const auto [val, act] = best_action(n1);
        (void)val;
        sp.repairs_low[n1] = act.first;
        sp.repairs_high[n1] = act.second;
    }
    // First event of a fresh fleet: everything is known working, repairing
    // a working device can only lose money, and afterwards all D devices
    // sit at belief 1-p.
    sp.value_fresh = model.lambda * D - drain + model.beta * v[D];
    return sp;
}

const char* policy_name(PolicyId id) {
    switch (id) {
        case PolicyId::FullOptimal: return "full_optimal";
        case PolicyId::SlowOptimal: return "slow_optimal";
        case PolicyId::FullWhittle: return "full_whittle";
        case PolicyId::SlowWhittle: return "slow_whittle";
        case PolicyId::PartialWhittle: return "partial_whittle";
    }
    return "unknown";
}

std::optional<PolicyId> parse_policy(std::string_view name) {
    if (name == "full_optimal") return PolicyId::FullOptimal;
    if (name == "slow_optimal") return PolicyId::SlowOptimal;
    if (name == "full_whittle") return PolicyId::FullWhittle;
    if (name == "slow_whittle") return PolicyId::SlowWhittle;
    if (name == "partial_whittle") return PolicyId::PartialWhittle;
    return std::nullopt;
}

void FleetScenario::validate() const {
    if (adrs.empty()) throw std::invalid_argument("FleetScenario: needs at least one device");
    check_fleet_shape(static_cast<int>(adrs.size()), crews);
    if (horizon < 1) throw std::invalid_argument("FleetScenario: horizon must be >= 1");
    if (runs < 1) throw std::invalid_argument("FleetScenario: runs must be >= 1");
    if (grid_n < 2) throw std::invalid_argument("FleetScenario: grid_n must be >= 2");
    const AdrModel& m0 = adrs.front().model;
    for (const FleetAdr& adr : adrs) {
        adr.model.validate();
        adr.obs.validate();
        if (adr.model.p != m0.p || adr.model.beta != m0.beta ||
            adr.model.lambda != m0.lambda || adr.model.theta != m0.theta)
            throw std::invalid_argument(
                "FleetScenario: devices may differ only in cost and noise");
        if (cost_mode == CostMode::UniformRandom &&
            !(adr.model.c > 0.0 && adr.model.c <= 6.5 * m0.lambda))
            throw std::invalid_argument(
                "FleetScenario: uniform-mode costs must lie in (0, 6.5*lambda]");
        if (adr.index_table &&
            adr.index_table->index_values.size() != static_cast<std::size_t>(grid_n) + 1)
            throw std::invalid_argument("FleetScenario: index table does not match grid");
    }
}

FleetScenario build_fleet_scenario(const AdrModel& base, const ObsScenario& base_obs, int D,
                                   int M, CostMode cost_mode, SnrMode snr_mode, double snr_db,
                                   int horizon, int runs, std::uint64_t seed,
                                   const FleetBuildOptions& opt) {
    base.validate();
    base_obs.validate();
    check_fleet_shape(D, M);
    const double epsilon =
        opt.epsilon > 0.0 ? opt.epsilon : kWhittleEpsilonFactor * std::max(base.lambda, 1.0);
    // The base scenario fixes the eta0 : sigma ratio; per-device noise
    // levels rescale both together.
    const double eta0_ratio = 1.0 / (std::sqrt(base_obs.eta0) * base_obs.sigma);

    FleetScenario fs;
    fs.crews = M;
    fs.horizon = horizon;
    fs.runs = runs;
    fs.seed = seed;
    fs.grid_n = opt.grid_n;
    fs.cost_mode = cost_mode;
    fs.snr_mode = snr_mode;
    fs.snr_db = snr_db;
    fs.adrs.resize(D);

    for (int i = 0; i < D; ++i) {
        FleetAdr& adr = fs.adrs[i];
        adr.model = base;
        if (cost_mode == CostMode::UniformRandom)
            adr.model.c = 6.5 * base.lambda * scenario_uniform(seed, i, 0);
        const double snr =
            snr_mode == SnrMode::UniformRandom ? -5.0 + 10.0 * scenario_uniform(seed, i, 1)
                                               : snr_db;
        adr.obs = base_obs;
        adr.obs.sigma = base_obs.nu0 * std::pow(10.0, -snr / 20.0);
        adr.obs.eta0 = 1.0 / ((eta0_ratio * adr.obs.sigma) * (eta0_ratio * adr.obs.sigma));
    }

    // One zero-cost index curve per distinct noise level; per-device cost
    // only shifts it.
    const BeliefGrid grid(opt.grid_n);
    AdrModel free_repair = base;
    free_repair.c = 0.0;
    std::map<double, WhittleTable> curve_by_sigma;
    for (int i = 0; i < D; ++i) {
        FleetAdr& adr = fs.adrs[i];
        auto it = curve_by_sigma.find(adr.obs.sigma);
        if (it == curve_by_sigma.end()) {
            ContinuationTable cont = [&] {
                if (opt.cache_dir) {
                    const std::uint64_t key =
                        continuation_cache_key(free_repair, adr.obs, grid, opt.samples, 0);
                    char name[32];
                    std::snprintf(name, sizeof(name), "cont-%016llx.bin",
                                  static_cast<unsigned long long>(key));
                    const auto path = std::filesystem::path(*opt.cache_dir) / name;
                    if (auto cached = load_continuation(path.string())) return std::move(*cached);
                    QmcStream qmc(adr.obs.point_dimension());
                    ContinuationTable built =
                        build_continuation(free_repair, adr.obs, grid, opt.samples, qmc,
                                           opt.threads);
                    std::filesystem::create_directories(*opt.cache_dir);
                    save_continuation(path.string(), built);
                    return built;
                }
                QmcStream qmc(adr.obs.point_dimension());
                return build_continuation(free_repair, adr.obs, grid, opt.samples, qmc,
                                          opt.threads);
            }();
            it = curve_by_sigma
                     .emplace(adr.obs.sigma, compute_whittle_table(free_repair, cont, epsilon))
                     .first;
        }
        adr.index_table =
            std::make_shared<const WhittleTable>(apply_repair_cost(it->second, adr.model.c));
    }
    fs.validate();
    return fs;
}

namespace {

// ------------------------------------------------------------------
// Simulation engine.
// ------------------------------------------------------------------

struct SimSupport {
    std::vector<double> full_idx;       // broken-state index per device
    std::vector<double> slow_idx_low;   // belief-0 index per device
    std::vector<double> slow_idx_high;  // belief-(1-p) index per device
    std::optional<CountPolicy> full_pol;
    std::optional<SlowCountPolicy> slow_pol;
    bool need_partial = false;
};

void require_identical_devices(const FleetScenario& fs, const char* who) {
    const AdrModel& m0 = fs.adrs.front().model;
    for (const FleetAdr& adr : fs.adrs) {
        if (adr.model.c != m0.c)
            throw std::invalid_argument(std::string(who) +
                                        ": exact count reference needs identical repair costs");
    }
}

void add_policy_support(const FleetScenario& fs, PolicyId id, SimSupport& sup) {
    const int D = static_cast<int>(fs.adrs.size());
    // The two-state chains are tiny; a per-cost memo still avoids D
    // identical bisections for homogeneous fleets.
    const double eps = 1e-9 * std::max(1.0, fs.adrs.front().model.lambda);
    switch (id) {
        case PolicyId::FullWhittle: {
            if (!sup.full_idx.empty()) break;
            sup.full_idx.resize(D);
            std::map<double, double> memo;
            for (int i = 0; i < D; ++i) {
                const double c = fs.adrs[i].model.c;
                auto it = memo.find(c);
                if (it == memo.end())
                    it = memo.emplace(c, full_info_index(fs.adrs[i].model, eps).first).first;
                sup.full_idx[i] = it->second;
            }
            break;
        }
        case PolicyId::SlowWhittle: {
            if (!sup.slow_idx_low.empty()) break;
            sup.slow_idx_low.resize(D);
            sup.slow_idx_high.resize(D);
            std::map<double, std::pair<double, double>> memo;
            for (int i = 0; i < D; ++i) {
                const double c = fs.adrs[i].model.c;
                auto it = memo.find(c);
                if (it == memo.end())
                    it = memo.emplace(c, slow_info_index(fs.adrs[i].model, eps)).first;
                sup.slow_idx_low[i] = it->second.first;
                sup.slow_idx_high[i] = it->second.second;
            }
            break;
        }
        case PolicyId::FullOptimal:
            if (sup.full_pol) break;
            require_identical_devices(fs, "simulate");
            sup.full_pol = full_info_optimal_policy(fs.adrs.front().model, D, fs.crews);
            break;
        case PolicyId::SlowOptimal:
            if (sup.slow_pol) break;
            require_identical_devices(fs, "simulate");
            sup.slow_pol = slow_info_policy(fs.adrs.front().model, D, fs.crews);
            break;
        case PolicyId::PartialWhittle:
            sup.need_partial = true;
            for (const FleetAdr& adr : fs.adrs) {
                if (!adr.index_table)
                    throw std::invalid_argument(
                        "simulate: missing Whittle table for the partial-information policy");
            }
            break;
    }
}

// Devices a device's slow observer can be in: Fresh only before the first
// event reveals anything.
enum class SlowState : unsigned char { Fresh, Low, High };

double run_one(const FleetScenario& fs, PolicyId policy, const SimSupport& sup, int run,
               std::vector<std::uint8_t>* trace) {
    const int D = static_cast<int>(fs.adrs.size());
    const int T = fs.horizon;
    const int M = fs.crews;
    const AdrModel& m0 = fs.adrs.front().model;
    const BeliefGrid grid(fs.grid_n);

    std::vector<std::uint8_t> working(D, 1), repaired(D, 0), during(D, 0);
    std::vector<SlowState> slow(D, SlowState::Fresh);
    std::vector<double> bel(D, 1.0);
    std::vector<std::pair<double, int>> cand;
    std::vector<int> chosen;
    std::vector<double> point;
    cand.reserve(D);
    chosen.reserve(M);

    const bool needs_slow =
        policy == PolicyId::SlowWhittle || policy == PolicyId::SlowOptimal;
    double total = 0.0;
    double disc = 1.0;

    for (int t = 0; t < T; ++t) {
        chosen.clear();
        cand.clear();
        switch (policy) {
            case PolicyId::FullWhittle:
                for (int i = 0; i < D; ++i)
                    if (!working[i] && sup.full_idx[i] > 0.0) cand.push_back({sup.full_idx[i], i});
                break;
            case PolicyId::SlowWhittle:
                for (int i = 0; i < D; ++i) {
                    const double idx = slow[i] == SlowState::Low    ? sup.slow_idx_low[i]
                                       : slow[i] == SlowState::High ? sup.slow_idx_high[i]
                                                                    : 0.0;
                    if (idx > 0.0) cand.push_back({idx, i});
                }
                break;
            case PolicyId::PartialWhittle:
                for (int i = 0; i < D; ++i) {
                    const int k = grid.round_up(bel[i]);
                    const double idx = fs.adrs[i].index_table->index_values[k];
                    if (idx > 0.0) cand.push_back({idx, i});
                }
                break;
            case PolicyId::FullOptimal: {
                int w = 0;
                for (int i = 0; i < D; ++i) w += working[i];
                int a = sup.full_pol->repairs[w];
                for (int i = 0; i < D && a > 0; ++i)
                    if (!working[i]) {
                        chosen.push_back(i);
                        --a;
                    }
                break;
            }
            case PolicyId::SlowOptimal: {
                if (t == 0) break;  // fresh fleet: repairs buy nothing
                int n1 = 0;
                for (int i = 0; i < D; ++i) n1 += slow[i] == SlowState::High;
                int k0 = sup.slow_pol->repairs_low[n1];
                int k1 = sup.slow_pol->repairs_high[n1];
                for (int i = 0; i < D && (k0 > 0 || k1 > 0); ++i) {
                    if (slow[i] == SlowState::Low && k0 > 0) {
                        chosen.push_back(i);
                        --k0;
                    } else if (slow[i] == SlowState::High && k1 > 0) {
                        chosen.push_back(i);
                        --k1;
                    }
                }
                break;
            }
        }
        if (!cand.empty()) {
            // Largest strictly positive index first, ties by ascending id.
            std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first : a.second < b.second;
            });
            for (int j = 0; j < std::min<int>(M, static_cast<int>(cand.size())); ++j)
                chosen.push_back(cand[j].second);
        }

        std::fill(repaired.begin(), repaired.end(), 0);
        for (int id : chosen) repaired[id] = 1;
        if (trace)
            for (int i = 0; i < D; ++i)
                (*trace)[(static_cast<std::size_t>(run) * T + t) * D + i] = repaired[i];

        // Event reward, accumulated two independent ways.
        int working_unrepaired = 0;
        double repair_net = 0.0;
        double per_device = 0.0;
        for (int i = 0; i < D; ++i) {
            const AdrModel& mi = fs.adrs[i].model;
            if (repaired[i]) {
                repair_net += mi.lambda - mi.c;
                per_device += mi.lambda - mi.c - mi.theta;
            } else {
                working_unrepaired += working[i];
                per_device += (working[i] ? mi.lambda : 0.0) - mi.theta;
            }
        }
        const double event_reward =
            m0.lambda * working_unrepaired + repair_net - m0.theta * D;
        if (std::abs(event_reward - per_device) > 1e-9 * (1.0 + std::abs(event_reward)))
            throw std::logic_error("simulate: fleet reward accounting mismatch");
        total += disc * event_reward;
        disc *= m0.beta;

        for (int i = 0; i < D; ++i) during[i] = working[i] | repaired[i];

        if (sup.need_partial) {
            for (int i = 0; i < D; ++i) {
                if (repaired[i]) {
                    bel[i] = belief_update(fs.adrs[i].model, Action::SendCrew, bel[i], {});
                    continue;
                }
                const ObsScenario& obs = fs.adrs[i].obs;
                const int len = obs.reading_length();
                point.resize(obs.point_dimension());
                for (int j = 0; j < len; ++j)
                    point[j] = event_uniform(fs.seed, run, t, i, 1 + j);
                // The sampler picks the working branch when the selector
                // falls below the belief; pin it to the true during-event
                // state instead of mixing.
                point[len] = during[i] ? 0.25 : 0.75;
                int pos = len + 1;
                if (case_has_random_shed(obs.obs_case))
                    point[pos++] = event_uniform(fs.seed, run, t, i, len + 1);
                if (case_has_mismatch(obs.obs_case))
                    point[pos++] = event_uniform(fs.seed, run, t, i, len + 2);
                const ReadingVector x = sample_reading(obs, 0.5, point);
                LikelihoodPair lik;
                if (obs.obs_case == ObsCase::A) {
                    lik = likelihood(obs, x);
                } else {
                    const VbPosterior post = fit_posterior(obs, x);
                    lik = likelihood(obs, x, &post);
                }
                bel[i] = belief_update(fs.adrs[i].model, Action::DoNothing, bel[i], lik);
            }
        }
        if (needs_slow)
            for (int i = 0; i < D; ++i)
                slow[i] = during[i] ? SlowState::High : SlowState::Low;

        for (int i = 0; i < D; ++i)
            working[i] =
                during[i] && event_uniform(fs.seed, run, t, i, 0) >= fs.adrs[i].model.p;
    }
    return total;
}

std::vector<double> run_all(const FleetScenario& fs, PolicyId policy, const SimSupport& sup,
                            std::vector<std::uint8_t>* trace) {
    std::vector<double> vals(fs.runs);
    for (int run = 0; run < fs.runs; ++run) vals[run] = run_one(fs, policy, sup, run, trace);
    return vals;
}

}  // namespace

SimReport simulate(const FleetScenario& fs, PolicyId policy, PolicyId reference) {
    fs.validate();
    if (policy == reference)
        throw std::invalid_argument(
            "simulate: policy and reference coincide, so the shared random streams would "
            "only ever measure zero");

    const bool reference_exact =
        reference == PolicyId::FullOptimal || reference == PolicyId::SlowOptimal;
    SimSupport sup;
    add_policy_support(fs, policy, sup);
    add_policy_support(fs, reference, sup);

    SimReport rep;
    rep.policy = policy;
    rep.reference = reference;
    rep.snr_db = fs.snr_db;
    rep.runs = fs.runs;

    const MeanSe pol = summarize(run_all(fs, policy, sup, nullptr));
    rep.policy_mean = pol.mean;
    rep.policy_se = pol.se;

    if (reference_exact) {
        rep.reference_exact = true;
        rep.reference_mean = reference == PolicyId::FullOptimal ? sup.full_pol->value_fresh()
                                                                : sup.slow_pol->value_fresh;
    } else {
        const MeanSe ref = summarize(run_all(fs, reference, sup, nullptr));
        rep.reference_mean = ref.mean;
        rep.reference_se = ref.se;
    }
    if (rep.reference_mean == 0.0)
        throw std::domain_error("simulate: reference value is zero, relative error undefined");
    rep.err_percent = 100.0 * (rep.reference_mean - rep.policy_mean) / rep.reference_mean;
    return rep;
}

SimTrace simulate_trace(const FleetScenario& fs, PolicyId policy) {
    fs.validate();
    SimSupport sup;
    add_policy_support(fs, policy, sup);
    SimTrace out;
    out.repairs.assign(static_cast<std::size_t>(fs.runs) * fs.horizon * fs.adrs.size(), 0);
    const MeanSe ms = summarize(run_all(fs, policy, sup, &out.repairs));
    out.mean = ms.mean;
    out.se = ms.se;
    return out;
}

}  // namespace adr
