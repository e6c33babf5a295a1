#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "taylorpn/filters.hpp"

namespace taylorpn {

inline constexpr const char* kLibraryVersion = "0.1.0";

struct ExperimentConfig {
    std::string experiment;  // posterior-demo | tracking | logistic | fitzhugh-nagumo | convergence
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = ".";
    std::map<std::string, std::string> overrides;

    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
};

// Runs one experiment, writes its data files plus a JSON manifest (config
// echo, library version, wall-clock runtime, per-file content hashes) and
// returns the list of data files written.
std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& config);

std::vector<std::filesystem::path> run_posterior_demo(const ExperimentConfig& config);
std::vector<std::filesystem::path> run_tracking(const ExperimentConfig& config);
std::vector<std::filesystem::path> run_ode(const ExperimentConfig& config);
std::vector<std::filesystem::path> run_convergence(const ExperimentConfig& config);

// The passive bearings tracking system: planar Wiener-velocity dynamics
// observed through one-argument arctangent bearings from two fixed sensors.
// q scales the process noise, gamma_std the observation noise.
StateSpaceModel tracking_model(double q = 0.1, double gamma_std = 0.05, double dt = 1.0);

Eigen::VectorXd tracking_initial_state();

}  // namespace taylorpn
