#pragma once

#include <stdexcept>
#include <string>

#include "adrsched/fleet.hpp"

// Scenario files: one human-readable "[section] / key = value" document
// that pins every experiment parameter.  Unknown sections or keys are
// rejected with the offending line number, so a typo can never silently
// fall back to a default.
namespace adr {

struct ParseError : std::runtime_error {
    int line;  // 1-based; 0 when no line applies (I/O failures)
    ParseError(const std::string& what, int line_) : std::runtime_error(what), line(line_) {}
};

struct SolverConfig {
    int n = 100;        // belief grid resolution
    int N = 5000;       // continuation samples per grid row
    SolveMethod method = SolveMethod::FixedPoint;
    double tol = 1e-9;
};

struct WhittleConfig {
    double epsilon = 0.0;  // index accuracy; 0 -> kWhittleEpsilonFactor * lambda
};

struct FleetConfig {
    int D = 100;
    int M = 5;
    int T = 44;
    int runs = 100;
    std::uint64_t seed = 0;
    CostMode cost_mode = CostMode::Identical;
    SnrMode snr_mode = SnrMode::Fixed;
};

struct Scenario {
    AdrModel model;
    // Noise level is stated either directly (sigma) or as a signal-to-noise
    // ratio; SNR = 20*log10(nu0/sigma) keeps the two interchangeable.
    bool snr_given = true;
    double snr_db = 0.0;
    double sigma = 1.0;           // resolved meter noise
    double eta0_relative = 0.1;   // prior shed sd as a multiple of sigma
    ObsScenario obs;              // fully resolved observation model (y = baseline zeros)
    SolverConfig solver;
    WhittleConfig whittle;
    FleetConfig fleet;

    double snr() const;           // resolved SNR in dB regardless of input form
};

// Parse a scenario document; `origin` names the source in error messages.
Scenario parse_scenario_text(const std::string& text, const std::string& origin);
Scenario parse_scenario_file(const std::string& path);

// Canonical text form; parsing it back reproduces the same configuration.
std::string serialize_scenario(const Scenario& s);

const char* obs_case_name(ObsCase c);

}  // namespace adr
