#pragma once

#include "tegamp/channel.hpp"
#include "tegamp/solver.hpp"
#include "tegamp/tensor.hpp"

#include <cstdint>
#include <string>

namespace tegamp {

struct AltMinConfig {
    enum class Init { random, spectral };
    std::size_t max_sweeps = 500;
    /// Proximal ridge: each scalar update minimizes the masked residual plus
    /// ridge * (z - z_old)^2.
    double ridge = 1e-8;
    Init init = Init::spectral;
    double tau = 1e-6;
    std::uint64_t seed = 0;

    void validate() const;
};

const char* altmin_init_name(AltMinConfig::Init init);
AltMinConfig::Init parse_altmin_init(const std::string& text);

/// sum over observed x of (v_x - u_x)^2
double masked_objective(const DenseTensor& v, const ObservationMask& mask, const DenseTensor& u);

/// Sequential SVDs of the zero-filled data. The first unfolding keeps
/// r_1 * r_2 singular vectors, split into the first core and the wrap rank.
TRFactors tr_svd_init(const DenseTensor& zero_filled, const RankVector& ranks, std::uint64_t seed);
/// Leading left singular vectors of every mode unfolding, with the data
/// norm carried by the last factor.
CPFactors cp_svd_init(const DenseTensor& zero_filled, std::size_t rank, std::uint64_t seed);

struct AltMinTrResult {
    RunResult run;
    TRFactors factors;
};

struct AltMinCpResult {
    RunResult run;
    CPFactors factors;
};

AltMinTrResult altmin_tr(const DenseTensor& v, const ObservationMask& mask, const RankVector& ranks,
                         const AltMinConfig& cfg);
AltMinTrResult altmin_tr(const DenseTensor& v, const ObservationMask& mask, TRFactors init,
                         const AltMinConfig& cfg);

AltMinCpResult altmin_cp(const DenseTensor& v, const ObservationMask& mask, std::size_t rank,
                         const AltMinConfig& cfg);
AltMinCpResult altmin_cp(const DenseTensor& v, const ObservationMask& mask, CPFactors init,
                         const AltMinConfig& cfg);

}  // namespace tegamp
