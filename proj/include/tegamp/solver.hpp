#pragma once

#include "tegamp/channel.hpp"
#include "tegamp/damping.hpp"
#include "tegamp/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tegamp {

enum class Status { converged, diverged, max_iter };

const char* status_name(Status status);

struct SolverConfig {
    std::size_t max_iter = 500;
    /// Stop once sum|p(t) - p(t-1)|^2 <= tau * sum|p(t)|^2.
    double tau = 1e-6;
    DampingConfig damping;
    std::uint64_t seed = 0;
    PriorModel prior;
    /// Initial factor variances are init_var_scale * prior variance.
    double init_var_scale = 0.01;
    /// Assumed SNR (linear) for the noise-variance estimate; ignored when
    /// noise_var is given.
    double snr = 100.0;
    std::optional<double> noise_var;
    /// Re-estimate the noise variance after every pass from the output
    /// posteriors (EM), starting from the value above. Accepted costs are
    /// rescored under each new value.
    bool learn_noise = false;
    /// CP engine only: add back the higher-order r-mean correction.
    bool neglected_term = false;
    /// Adaptive damping: finish on the accepted state with the lowest cost
    /// when the final state costs more.
    bool keep_best = true;

    void validate() const;
};

struct DampingLogEntry {
    std::size_t t = 0;
    double beta = 1.0;
    double cost = 0.0;
    bool accepted = true;
    /// Rejected by the window rule but continued because beta was at its floor.
    bool forced = false;
};

struct RStepDiagnostics {
    std::size_t fallbacks = 0;
    /// Entries where the expanded nu_p was nonpositive.
    std::size_t nu_p_fallbacks = 0;
    double min_ratio = 1.0;
    double max_ratio = 1.0;
};

struct RunResult {
    DenseTensor estimate;
    std::size_t iterations = 0;
    Status status = Status::max_iter;
    double final_change = 0.0;
    double noise_var = 0.0;
    std::vector<DampingLogEntry> damping_log;
    /// AltMin only: masked objective after every sweep (index 0 = initial).
    std::vector<double> objective;
    RStepDiagnostics diagnostics;
    /// The estimate comes from the lowest-cost accepted state (keep_best).
    bool restored_best = false;
};

/// The divergence rule: ||p(t)|| / ||p(1)|| above this ratio.
constexpr double kDivergenceRatio = 1e6;

}  // namespace tegamp
