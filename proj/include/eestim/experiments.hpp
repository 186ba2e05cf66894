#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eestim/convergence.hpp"
#include "eestim/estimators.hpp"
#include "eestim/models.hpp"
#include "eestim/state.hpp"

namespace eestim::experiments {

// Independent sub-seed for a named purpose, so streams of different
// components never overlap.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

// ---- data generation

struct VbmDataset {
    ParamVector theta_star;
    std::vector<BinaryState> ensemble;
    StatVector g_bar;
};

// theta*_ij ~ N(0,1) (unless overridden), `n_chains` chains started from
// uniform random spins and annealed `anneal_steps` MH steps at theta*.
VbmDataset generate_vbm_dataset(std::uint64_t seed, std::size_t n_spins = 15, std::size_t n_chains = 1000,
                                std::size_t anneal_steps = 100000,
                                const std::optional<ParamVector>& theta_override = std::nullopt);

// +1 on the two diagonal bands of half-width 2, -1 elsewhere.
BinaryState x_shape(std::size_t rows, std::size_t cols);

struct CrfDataset {
    std::size_t rows = 0;
    std::size_t cols = 0;
    BinaryState original;
    std::vector<std::vector<double>> train;  // y images
    std::vector<std::vector<double>> test;
};

// y = x_orig + noise_sigma * N(0,1) per pixel.
CrfDataset generate_crf_dataset(std::uint64_t seed, std::size_t rows = 40, std::size_t cols = 40,
                                std::size_t n_train = 10, std::size_t n_test = 5, double noise_sigma = 1.0);

// Fraction of pixels differing from the original, averaged over samples.
double classification_error(std::span<const BinaryState> test_states, const BinaryState& original);

// ---- Ising image

struct IsingExperimentConfig {
    std::uint64_t seed = 1;
    // Observed image; when absent a synthetic image is drawn exactly at
    // theta_star on a rows x cols grid.
    std::optional<BinaryState> image;
    std::size_t rows = 4;
    std::size_t cols = 4;
    double theta_star = 0.3;
    EstimatorConfig cd = [] {
        EstimatorConfig c;
        c.a = 0.01;
        c.m = 1;
        c.t_max = 1000;
        return c;
    }();
    EstimatorConfig ee = [] {
        EstimatorConfig c;
        c.a = 0.001;
        c.c = 0.01;
        c.m = 1;
        c.t_max = 2000000;
        c.t_burnin = 1000000;
        return c;
    }();
    double tau = 0.1;
};

struct IsingExperimentResult {
    BinaryState observed;
    bool synthetic = false;
    ParamVector theta_cd;
    ParamVector theta_hat;  // EE tail average
    EstimationTrace cd_trace;
    EstimationTrace trace;  // EE
    ConvergenceReport report;
    std::vector<double> trace_sigma;
    std::optional<ParamVector> theta_mle;  // exact oracle, when enumerable
};

IsingExperimentResult run_ising_experiment(const IsingExperimentConfig& cfg);

// ---- VBM ensemble

struct LikelihoodPoint {
    std::size_t t = 0;
    double value = 0.0;
};

struct VbmExperimentConfig {
    std::uint64_t seed = 1;
    std::size_t n_spins = 15;
    std::size_t n_chains = 1000;
    std::size_t anneal_steps = 100000;
    EstimatorConfig cd = [] {
        EstimatorConfig c;
        c.a = 0.1;
        c.m = 1;
        c.t_max = 100000;
        return c;
    }();
    EstimatorConfig ee = [] {
        EstimatorConfig c;
        c.a = 0.005;
        c.c = 0.001;
        c.m = 1;
        c.t_max = 100000;
        c.t_burnin = 50000;
        return c;
    }();
    // CD step whose theta seeds EE.
    std::size_t handoff_vbm = 4;
    std::size_t handoff_ising = 29;
    // Exact likelihood evaluated every `loglik_stride` updates.
    std::size_t loglik_stride = 100;
    bool fit_vbm = true;
    bool fit_ising = true;
};

// Log-likelihoods are per sample: theta^T g_bar - log Z(theta).
struct FitResult {
    std::string model_name;
    ParamVector theta_cd;   // after the last CD update
    ParamVector theta_ee;   // EE tail average
    ParamVector theta_mle;  // exact oracle
    bool mle_on_boundary = false;  // no finite MLE; theta_mle approximates the supremum
    EstimationTrace cd_trace;
    EstimationTrace ee_trace;
    std::vector<LikelihoodPoint> cd_curve;
    std::vector<LikelihoodPoint> ee_curve;
    double ll_cd = 0.0;
    double ll_ee = 0.0;
    double ll_mle = 0.0;
};

struct VbmExperimentResult {
    VbmDataset data;
    std::optional<FitResult> vbm_fit;
    std::optional<FitResult> ising_fit;
};

VbmExperimentResult run_vbm_experiment(const VbmExperimentConfig& cfg);

// CD then EE on one model against an ensemble; exposed for reuse.
FitResult fit_ensemble(std::shared_ptr<const Model> model, std::span<const BinaryState> ensemble,
                       const EstimatorConfig& cd, const EstimatorConfig& ee, std::size_t handoff,
                       std::size_t loglik_stride, std::uint64_t seed);

// ---- CRF denoising

struct LearningPhase {
    std::size_t steps = 0;
    double a = 0.0;
};

struct CrfExperimentConfig {
    std::uint64_t seed = 1;
    std::size_t rows = 40;
    std::size_t cols = 40;
    std::size_t n_train = 10;
    std::size_t n_test = 5;
    double noise_sigma = 1.0;
    std::size_t cd_steps = 10000;
    double cd_a = 0.03;
    std::size_t cd_m = 1;
    std::vector<LearningPhase> ee_phases{{5000, 0.01}, {5000, 0.001}};
    double ee_c = 0.001;
    // Proposals per EE update; 0 means one sweep (rows * cols). A single proposal per update
    // on a 40x40 image lets the sign step outrun the chains and J1 runs away.
    std::size_t ee_m = 0;
    std::size_t anneal_steps = 500;
    double theta_guard = 50.0;
    // Final errors average this many trailing evaluations of each stage.
    std::size_t error_window = 100;
};

struct CrfExperimentResult {
    CrfDataset data;
    EstimationTrace cd_trace;
    EstimationTrace ee_trace;
    // Entry 0 at theta = 0, then one per CD update followed by one per EE update.
    std::vector<double> error_curve;
    double final_cd_error = 0.0;
    double final_ee_error = 0.0;
    ParamVector theta_cd;
    ParamVector theta_ee;  // tail average over the last phase
};

CrfExperimentResult run_crf_experiment(const CrfExperimentConfig& cfg);

// ---- mini-ERGM

struct ErgmDemoConfig {
    std::uint64_t seed = 1;
    std::size_t nodes = 4;
    // Observed digraph; when absent one is drawn at theta_star (exactly for
    // small N, by a long MH run otherwise).
    std::optional<BinaryState> graph;
    ParamVector theta_star{-1.0, 0.5};
    EstimatorConfig cd = [] {
        EstimatorConfig c;
        c.a = 0.01;
        c.m = 10;
        c.t_max = 2000;
        return c;
    }();
    EstimatorConfig ee = [] {
        EstimatorConfig c;
        c.a = 0.001;
        c.c = 0.01;
        c.m = 10;
        c.t_max = 400000;
        c.t_burnin = 100000;
        return c;
    }();
    double tau = 0.1;
    std::vector<bool> fixed;
};

struct ErgmDemoResult {
    BinaryState observed;
    DyadCensus census;
    ParamVector theta_cd;
    ParamVector theta_ee;
    EstimationTrace cd_trace;
    EstimationTrace trace;
    ConvergenceReport report;
    std::vector<double> trace_sigma;
    std::optional<ParamVector> theta_mle;
};

// Throws NonexistenceError for a graph missing any dyad type (no MLE).
ErgmDemoResult run_ergm_demo(const ErgmDemoConfig& cfg);

// Wall seconds per EE update (m MH steps each) on a random N-node digraph,
// best of `repeats` timed runs.
double ergm_update_seconds(std::size_t nodes, std::size_t m, std::size_t updates, std::uint64_t seed,
                           std::size_t repeats = 3);

// ---- output

void write_likelihood_curve(const std::filesystem::path& path, std::span<const LikelihoodPoint> curve);
void write_error_curve(const std::filesystem::path& path, std::span<const double> curve);
void write_theta(const std::filesystem::path& path, const Model& model, std::span<const double> theta);

}  // namespace eestim::experiments
