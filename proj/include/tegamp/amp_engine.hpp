#pragma once

#include "tegamp/channel.hpp"
#include "tegamp/damping.hpp"
#include "tegamp/solver.hpp"
#include "tegamp/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace tegamp {

/// Per-entry outputs of the plug-in stage.
struct ForwardFields {
    std::vector<double> p_bar;      // plug-in estimate
    std::vector<double> nubar_raw;  // undamped Onsager variance
    std::vector<double> nu_prod;    // sum over rank tuples of the variance products
};

struct BackwardInput {
    std::span<const double> zbar;    // damped factor means
    std::span<const double> var;     // factor variances
    std::span<const double> s_hat;   // residual of this iteration
    std::span<const double> nu_s;
    std::span<const double> s_prev;  // residual of the previous iteration
    bool neglected_term = false;
};

struct BackwardFields {
    std::vector<double> r_hat;
    std::vector<double> nu_r;
    std::vector<std::uint8_t> valid;  // 0 where no observation reaches the variable
    double min_ratio = 1.0;
    double max_ratio = 1.0;
};

/// Iteration state. Factor moments are flat arrays in the model's layout.
struct AmpState {
    std::size_t t = 0;  // updates applied along the current trajectory
    std::vector<double> mean;
    std::vector<double> var;
    std::vector<double> zbar;
    std::vector<double> s_hat;
    std::vector<double> nu_s;
    std::vector<double> nubar_p;
    std::vector<double> nu_p;
    std::vector<double> p_hat;
    std::vector<double> p_bar;  // plug-in estimate that produced the last update
    bool primed = false;        // damping memory is valid
};

struct IterationReport {
    std::size_t pass = 0;
    double beta = 1.0;
    double cost = 0.0;
    bool accepted = true;
    bool forced = false;
    bool finite = true;
    bool converged = false;
    double change = 0.0;  // ||p(t) - p(t-1)||^2 / ||p(t)||^2, 0 on the first pass
    double p_norm = 0.0;  // ||p(t)||
};

/// Algorithm loop shared by the tensor-ring and CP engines. `Model` supplies
/// the plug-in/variance stage, the r-step, and the factor layout.
template <class Model>
class AmpEngine {
public:
    AmpEngine(Model model, const DenseTensor& v, const ObservationMask& mask, const SolverConfig& cfg);

    void initialize_from_prior();
    void set_moments(std::vector<double> mean, std::vector<double> var);

    IterationReport iterate();
    RunResult run();

    const Model& model() const { return model_; }
    const AmpState& state() const { return state_; }
    const ForwardFields& last_forward() const { return forward_; }
    double noise_var() const { return noise_var_; }
    double beta() const { return beta_; }
    const std::vector<DampingLogEntry>& damping_log() const { return log_; }
    const RStepDiagnostics& diagnostics() const { return diag_; }

private:
    struct Snapshot {
        AmpState state;
        ForwardFields forward;
    };

    double cost_of(const AmpState& st, const ForwardFields& f) const;
    void update(const ForwardFields& f, double beta);

    Model model_;
    DenseTensor v_;
    ObservationMask mask_;
    SolverConfig cfg_;
    double noise_var_ = 0.0;
    double noise_floor_ = 0.0;
    double em_noise_ = 0.0;  // EM estimate from the last update
    double beta_ = 1.0;
    bool initialized_ = false;
    std::size_t passes_ = 0;
    AmpState state_;
    ForwardFields forward_;
    Snapshot snapshot_;
    Snapshot best_;  // accepted state with the lowest cost
    double best_cost_ = 0.0;
    bool has_best_ = false;
    std::vector<double> accepted_costs_;
    std::vector<DampingLogEntry> log_;
    RStepDiagnostics diag_;
};

}  // namespace tegamp
