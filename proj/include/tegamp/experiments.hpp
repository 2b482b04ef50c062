#pragma once

#include "tegamp/baselines.hpp"
#include "tegamp/channel.hpp"
#include "tegamp/config.hpp"
#include "tegamp/solver.hpp"
#include "tegamp/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tegamp {

/// Entry x is observed when the x-th uniform of the stream is below p, so
/// masks of one seed are nested across rates.
ObservationMask sample_mask(const Shape& shape, double p, std::uint64_t seed);

/// nu_w = ||U||_F^2 / (total * 10^(snr_db / 10)); +inf dB gives 0.
double snr_db_noise_variance(const DenseTensor& u, double snr_db);
DenseTensor add_awgn(const DenseTensor& u, double noise_var, std::uint64_t seed);

/// ||(est - truth) off the mask|| / ||truth off the mask||, over all entries
/// when everything is observed; +inf for a zero denominator.
double relative_error(const DenseTensor& truth, const DenseTensor& estimate, const ObservationMask& mask);
/// ||est - truth||^2 / ||truth||^2 over all entries.
double nmse(const DenseTensor& truth, const DenseTensor& estimate);
/// Fraction of errors strictly below the threshold.
double recovery_rate(std::span<const double> errors, double threshold = 0.01);

/// Grayscale H x W image scaled to [0, 1]. Plain PGM ("P2") is divided by
/// its maxval; CSV grids hold 0..255 intensities and are divided by 255.
DenseTensor read_pgm(std::istream& in);
DenseTensor read_image_csv(std::istream& in);
DenseTensor load_image(const std::string& path);
/// H x W x K stack of K same-sized images.
DenseTensor load_image_stack(const std::vector<std::string>& paths);
/// `image` is H x W or H x W x 1; values are clipped to [0, 1] and rounded.
void write_pgm(std::ostream& out, const DenseTensor& image);
void write_image_csv(std::ostream& out, const DenseTensor& image);

enum class SolverKind { tegamp, tesamp, altmin_tr, altmin_cp };
const char* solver_name(SolverKind kind);
SolverKind parse_solver(const std::string& text);

struct SolverSettings {
    SolverConfig amp;
    AltMinConfig altmin;
    std::vector<std::size_t> tr_ranks;
    std::size_t cp_rank = 0;
    /// "prior-var = auto": see matched_prior_variance.
    bool prior_var_auto = false;
};

/// Factor prior variance s with terms * s^d equal to the mean square of the
/// observed entries (terms = prod r_i for TR, r for CP). For data drawn from
/// unit-variance factors this is about 1.
double matched_prior_variance(const DenseTensor& v, const ObservationMask& mask, double terms);

/// Applies one solver setting by key; false when the key is not a solver key.
bool apply_solver_setting(SolverSettings& s, const std::string& key, const std::string& value);

struct SettingHelp {
    const char* key;
    const char* help;
};
const std::vector<SettingHelp>& solver_setting_help();

/// `seed` seeds the factor initialization of every solver.
RunResult run_solver(SolverKind kind, const DenseTensor& v, const ObservationMask& mask,
                     const SolverSettings& settings, std::uint64_t seed);

struct ExperimentPlan {
    enum class Generator { tr, cp, tt, image };
    Generator generator = Generator::tr;
    std::vector<std::size_t> shape;
    std::vector<std::size_t> tt_ranks;  // interior ranks r_2..r_d
    std::vector<std::string> images;
    std::vector<double> rates;
    /// +inf means noiseless.
    std::vector<double> snr_db{INFINITY};
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::vector<SolverKind> solvers{SolverKind::tegamp};
    SolverSettings settings;
    /// Noiseless synthetic trials give AMP solvers noise_var = 0; noisy ones
    /// use the assumed-SNR estimate unless true_noise is set. Image data is
    /// never exactly low-rank and always uses the estimate.
    bool true_noise = false;
    /// Write measured wall_ms; off writes 0 so reruns are byte-identical.
    bool timing = false;

    void validate() const;
    /// TR ranks the TR solvers use (explicit, or derived from the generator).
    std::vector<std::size_t> solver_tr_ranks() const;
};

/// Unknown keys are rejected with their line number.
ExperimentPlan parse_plan(const std::vector<KeyValue>& entries);
ExperimentPlan load_plan(const std::string& path);

struct TrialRecord {
    std::string solver;
    std::uint64_t seed = 0;
    double p_omega = 0.0;
    double snr_db = INFINITY;
    double epsilon = 0.0;
    double nmse = 0.0;
    std::size_t iterations = 0;
    Status status = Status::max_iter;
    double wall_ms = 0.0;
};

struct TrialData {
    DenseTensor truth;
    DenseTensor observed;
    ObservationMask mask;
    double noise_var = 0.0;
};

/// Trial data is a pure function of (plan generator, trial seed, rate, snr):
/// factors, mask and noise draw from separate derived streams.
TrialData make_trial(const ExperimentPlan& plan, std::uint64_t trial_seed, double rate, double snr_db);

/// Runs solver x rate x snr x trial with trial seeds plan.seed + k. Records are
/// sorted by (solver, p_omega, snr_db, seed). `log` is called once per record,
/// serialized, in completion order.
std::vector<TrialRecord> run_plan(const ExperimentPlan& plan, std::size_t jobs = 1,
                                  const std::function<void(const TrialRecord&)>& log = {});

void sort_records(std::vector<TrialRecord>& records);
void write_results_csv(std::ostream& out, std::vector<TrialRecord> records);
void save_results_csv(const std::string& path, const std::vector<TrialRecord>& records);
std::string format_record(const TrialRecord& r);

}  // namespace tegamp
