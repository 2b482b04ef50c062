#include "tegamp/experiments.hpp"

#include "tegamp/errors.hpp"
#include "tegamp/random.hpp"
#include "tegamp/teg_amp.hpp"
#include "tegamp/tes_amp.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

namespace tegamp {

ObservationMask sample_mask(const Shape& shape, double p, std::uint64_t seed) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("sampling rate must be in (0, 1]");
    Rng rng(seed);
    std::vector<std::uint8_t> bits(shape.total());
    for (auto& b : bits) b = rng.uniform() < p ? 1 : 0;
    return ObservationMask(shape, std::move(bits));
}

double snr_db_noise_variance(const DenseTensor& u, double snr_db) {
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    return u.frobenius_norm_sq() / (static_cast<double>(u.size()) * std::pow(10.0, snr_db / 10.0));
}

DenseTensor add_awgn(const DenseTensor& u, double noise_var, std::uint64_t seed) {
    if (!(noise_var >= 0.0)) throw std::domain_error("noise variance must be >= 0");
    DenseTensor v = u;
    if (noise_var == 0.0) return v;
    Rng rng(seed);
    const double sd = std::sqrt(noise_var);
    for (std::size_t x = 0; x < v.size(); ++x) v[x] += sd * rng.normal();
    return v;
}

double relative_error(const DenseTensor& truth, const DenseTensor& estimate, const ObservationMask& mask) {
    if (!(truth.shape() == estimate.shape()) || !(truth.shape() == mask.shape()))
        throw std::domain_error("relative_error: shapes differ");
    const bool all = mask.count() == truth.size();
    double num = 0.0, den = 0.0;
    for (std::size_t x = 0; x < truth.size(); ++x) {
        if (!all && mask.observed(x)) continue;
        const double e = estimate[x] - truth[x];
        num += e * e;
        den += truth[x] * truth[x];
    }
    if (den == 0.0) return INFINITY;
    return std::sqrt(num / den);
}

double nmse(const DenseTensor& truth, const DenseTensor& estimate) {
    if (!(truth.shape() == estimate.shape())) throw std::domain_error("nmse: shapes differ");
    double num = 0.0, den = 0.0;
    for (std::size_t x = 0; x < truth.size(); ++x) {
        const double e = estimate[x] - truth[x];
        num += e * e;
        den += truth[x] * truth[x];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : INFINITY;
    return num / den;
}

double recovery_rate(std::span<const double> errors, double threshold) {
    if (errors.empty()) return 0.0;
    std::size_t ok = 0;
    for (double e : errors) ok += e < threshold;
    return static_cast<double>(ok) / static_cast<double>(errors.size());
}

// Images

namespace {

/// Whitespace tokenizer that skips '#' comments and tracks positions.
class Tokens {
public:
    explicit Tokens(std::istream& in) : in_(in) {}

    bool next(std::string& tok) {
        tok.clear();
        int c;
        while ((c = get()) != EOF) {
            if (c == '#') {
                while ((c = get()) != EOF && c != '\n') {}
                continue;
            }
            if (!std::isspace(c)) break;
        }
        if (c == EOF) return false;
        tok_line_ = line_;
        tok_col_ = col_;
        tok += static_cast<char>(c);
        while ((c = in_.peek()) != EOF && !std::isspace(c) && c != '#') tok += static_cast<char>(get());
        return true;
    }

    long integer(const char* what) {
        std::string tok;
        if (!next(tok)) throw ParseError(std::string("unexpected end of file, expected ") + what, line_, 0);
        if (tok.find_first_not_of("0123456789") != std::string::npos)
            throw ParseError(std::string("expected ") + what + ", got '" + tok + "'", tok_line_, tok_col_);
        return std::stol(tok);
    }

    std::size_t line() const { return tok_line_; }
    std::size_t col() const { return tok_col_; }

private:
    int get() {
        const int c = in_.get();
        if (c == '\n') {
            ++line_;
            col_ = 0;
        } else if (c != EOF) {
            ++col_;
        }
        return c;
    }

    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t col_ = 0;
    std::size_t tok_line_ = 1;
    std::size_t tok_col_ = 1;
};

}  // namespace

DenseTensor read_pgm(std::istream& in) {
    Tokens t(in);
    std::string magic;
    if (!t.next(magic) || magic != "P2") throw ParseError("expected plain PGM magic 'P2'", 1, 1);
    const long w = t.integer("width");
    const long h = t.integer("height");
    const long maxval = t.integer("maxval");
    if (w < 1 || h < 1) throw ParseError("image dimensions must be >= 1", t.line(), t.col());
    if (maxval < 1 || maxval > 65535) throw ParseError("maxval must be in 1..65535", t.line(), t.col());
    DenseTensor img(Shape({static_cast<std::size_t>(h), static_cast<std::size_t>(w)}));
    for (std::size_t k = 0; k < img.size(); ++k) {
        const long v = t.integer("pixel value");
        if (v > maxval) throw ParseError("pixel value exceeds maxval", t.line(), t.col());
        img[k] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    std::string extra;
    if (t.next(extra)) throw ParseError("trailing data after pixels", t.line(), t.col());
    return img;
}

DenseTensor read_image_csv(std::istream& in) {
    std::vector<double> values;
    std::size_t width = 0, height = 0, line = 0;
    std::string raw;
    while (std::getline(in, raw)) {
        ++line;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::size_t count = 0, pos = 0;
        while (pos <= raw.size()) {
            const auto comma = std::min(raw.find(',', pos), raw.size());
            const std::string cell = raw.substr(pos, comma - pos);
            const auto b = cell.find_first_not_of(" \t\r");
            const auto e = cell.find_last_not_of(" \t\r");
            double v = 0.0;
            std::size_t used = 0;
            bool ok = b != std::string::npos;
            if (ok) {
                try {
                    v = std::stod(cell.substr(b, e - b + 1), &used);
                } catch (const std::exception&) {
                    ok = false;
                }
                ok = ok && used == e - b + 1;
            }
            if (!ok) throw ParseError("expected a number in '" + cell + "'", line, pos + 1);
            if (v < 0.0 || v > 255.0) throw ParseError("intensity outside 0..255", line, pos + 1);
            values.push_back(v / 255.0);
            ++count;
            pos = comma + 1;
        }
        if (width == 0) width = count;
        if (count != width)
            throw ParseError("row has " + std::to_string(count) + " cells, expected " + std::to_string(width), line, 1);
        ++height;
    }
    if (height == 0) throw ParseError("empty image");
    return DenseTensor(Shape({height, width}), std::move(values));
}

DenseTensor load_image(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open image " + path);
    const bool pgm = in.peek() == 'P';
    try {
        return pgm ? read_pgm(in) : read_image_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

DenseTensor load_image_stack(const std::vector<std::string>& paths) {
    if (paths.empty()) throw ConfigError("no images given");
    std::vector<DenseTensor> imgs;
    for (const auto& p : paths) {
        imgs.push_back(load_image(p));
        if (!(imgs.back().shape() == imgs.front().shape()))
            throw ParseError(p + ": image size " + imgs.back().shape().str() + " differs from " +
                             imgs.front().shape().str());
    }
    const std::size_t h = imgs[0].shape().dim(0), w = imgs[0].shape().dim(1), k = imgs.size();
    DenseTensor stack(Shape({h, w, k}));
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t p = 0; p < h * w; ++p) stack[p * k + j] = imgs[j][p];
    return stack;
}

namespace {

std::pair<std::size_t, std::size_t> image_dims(const DenseTensor& img) {
    const Shape& s = img.shape();
    if (s.order() == 2 || (s.order() == 3 && s.dim(2) == 1)) return {s.dim(0), s.dim(1)};
    throw std::domain_error("image output needs an H x W or H x W x 1 tensor, got " + s.str());
}

long to_level(double v) { return std::lround(std::clamp(v, 0.0, 1.0) * 255.0); }

}  // namespace

void write_pgm(std::ostream& out, const DenseTensor& img) {
    const auto [h, w] = image_dims(img);
    out << "P2\n" << w << ' ' << h << "\n255\n";
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) out << (c ? " " : "") << to_level(img[r * w + c]);
        out << '\n';
    }
}

void write_image_csv(std::ostream& out, const DenseTensor& img) {
    const auto [h, w] = image_dims(img);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) out << (c ? "," : "") << to_level(img[r * w + c]);
        out << '\n';
    }
}

// Solvers

const char* solver_name(SolverKind kind) {
    switch (kind) {
        case SolverKind::tegamp: return "tegamp";
        case SolverKind::tesamp: return "tesamp";
        case SolverKind::altmin_tr: return "altmin-tr";
        case SolverKind::altmin_cp: return "altmin-cp";
    }
    return "?";
}

SolverKind parse_solver(const std::string& text) {
    for (auto k : {SolverKind::tegamp, SolverKind::tesamp, SolverKind::altmin_tr, SolverKind::altmin_cp})
        if (text == solver_name(k)) return k;
    throw ConfigError("unknown solver '" + text + "' (tegamp, tesamp, altmin-tr, altmin-cp)");
}

const std::vector<SettingHelp>& solver_setting_help() {
    static const std::vector<SettingHelp> help{
        {"tr-ranks", "TR ranks r_1,...,r_d for tegamp and altmin-tr"},
        {"cp-rank", "CP rank for tesamp and altmin-cp"},
        {"max-iter", "AMP iteration cap (default 500)"},
        {"tau", "convergence threshold on the squared relative change (default 1e-6)"},
        {"damping", "off, fixed or adaptive (default adaptive)"},
        {"beta-init", "initial damping factor; the constant one in fixed mode (default 0.3)"},
        {"beta-min", "adaptive damping floor (default 0.1)"},
        {"shrink", "adaptive damping shrink factor (default 0.5)"},
        {"grow", "adaptive damping growth factor (default 1.1)"},
        {"window", "adaptive damping cost window (default 1)"},
        {"init-var-scale", "initial factor variance as a fraction of the prior variance (default 0.01)"},
        {"prior-mean", "Gaussian factor prior mean (default 0)"},
        {"prior-var", "Gaussian factor prior variance, or auto to match the data scale (default 1)"},
        {"assumed-snr", "linear SNR guess for the noise-variance estimate (default 100)"},
        {"noise-var", "fixed noise variance; overrides the estimate"},
        {"neglected-term", "tesamp: include the higher-order r-mean term (default false)"},
        {"learn-noise", "re-estimate the noise variance by EM every pass (default false)"},
        {"keep-best", "adaptive damping: return the lowest-cost accepted iterate (default true)"},
        {"altmin-sweeps", "AltMin sweep cap (default 500)"},
        {"altmin-ridge", "AltMin proximal ridge (default 1e-8)"},
        {"altmin-init", "AltMin start: spectral or random (default spectral)"},
    };
    return help;
}

bool apply_solver_setting(SolverSettings& s, const std::string& key, const std::string& value) {
    auto& a = s.amp;
    if (key == "tr-ranks") s.tr_ranks = parse_count_list(key, value);
    else if (key == "cp-rank") s.cp_rank = parse_count(key, value);
    else if (key == "max-iter") a.max_iter = parse_count(key, value);
    else if (key == "tau") a.tau = s.altmin.tau = parse_double(key, value);
    else if (key == "damping") a.damping.mode = parse_damping_mode(value);
    else if (key == "beta-init") a.damping.beta_init = parse_double(key, value);
    else if (key == "beta-min") a.damping.beta_min = parse_double(key, value);
    else if (key == "shrink") a.damping.shrink = parse_double(key, value);
    else if (key == "grow") a.damping.grow = parse_double(key, value);
    else if (key == "window") a.damping.window = parse_count(key, value);
    else if (key == "init-var-scale") a.init_var_scale = parse_double(key, value);
    else if (key == "prior-mean") a.prior.mean = parse_double(key, value);
    else if (key == "prior-var") {
        s.prior_var_auto = value == "auto";
        if (!s.prior_var_auto) a.prior.var = parse_double(key, value);
    }
    else if (key == "assumed-snr") a.snr = parse_double(key, value);
    else if (key == "noise-var") a.noise_var = parse_double(key, value);
    else if (key == "neglected-term") a.neglected_term = parse_bool(key, value);
    else if (key == "learn-noise") a.learn_noise = parse_bool(key, value);
    else if (key == "keep-best") a.keep_best = parse_bool(key, value);
    else if (key == "altmin-sweeps") s.altmin.max_sweeps = parse_count(key, value);
    else if (key == "altmin-ridge") s.altmin.ridge = parse_double(key, value);
    else if (key == "altmin-init") s.altmin.init = parse_altmin_init(value);
    else return false;
    return true;
}

double matched_prior_variance(const DenseTensor& v, const ObservationMask& mask, double terms) {
    double sq = 0.0;
    for (std::size_t x = 0; x < v.size(); ++x)
        if (mask.observed(x)) sq += v[x] * v[x];
    if (mask.count() == 0 || sq == 0.0) return 1.0;
    const double ms = sq / static_cast<double>(mask.count());
    return std::pow(ms / terms, 1.0 / static_cast<double>(v.shape().order()));
}

RunResult run_solver(SolverKind kind, const DenseTensor& v, const ObservationMask& mask,
                     const SolverSettings& settings, std::uint64_t seed) {
    const bool tr = kind == SolverKind::tegamp || kind == SolverKind::altmin_tr;
    if (tr && settings.tr_ranks.size() != v.shape().order())
        throw ConfigError(std::string(solver_name(kind)) + " needs tr-ranks with one rank per mode");
    if (!tr && settings.cp_rank == 0) throw ConfigError(std::string(solver_name(kind)) + " needs cp-rank >= 1");
    SolverConfig amp = settings.amp;
    amp.seed = seed;
    if (settings.prior_var_auto) {
        double terms = static_cast<double>(settings.cp_rank);
        if (tr) {
            terms = 1.0;
            for (auto r : settings.tr_ranks) terms *= static_cast<double>(r);
        }
        amp.prior.var = matched_prior_variance(v, mask, terms);
    }
    AltMinConfig alt = settings.altmin;
    alt.seed = seed;
    switch (kind) {
        case SolverKind::tegamp: return teg_solve(v, mask, RankVector(settings.tr_ranks), amp).run;
        case SolverKind::tesamp: return tes_solve(v, mask, settings.cp_rank, amp).run;
        case SolverKind::altmin_tr: return altmin_tr(v, mask, RankVector(settings.tr_ranks), alt).run;
        case SolverKind::altmin_cp: return altmin_cp(v, mask, settings.cp_rank, alt).run;
    }
    throw std::logic_error("unreachable solver kind");
}

// Plans

void ExperimentPlan::validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (rates.empty()) throw ConfigError("rates must list at least one sampling rate");
    for (double p : rates)
        if (!(p > 0.0 && p <= 1.0)) throw ConfigError("sampling rates must be in (0, 1]");
    if (snr_db.empty()) throw ConfigError("snr-db must not be empty");
    if (solvers.empty()) throw ConfigError("solvers must not be empty");
    if (generator == Generator::image) {
        if (images.empty()) throw ConfigError("the image generator needs images");
    } else {
        if (shape.size() < 2) throw ConfigError("shape needs at least two modes");
        for (auto n : shape)
            if (n == 0) throw ConfigError("shape dimensions must be >= 1");
    }
    if (generator == Generator::tr && settings.tr_ranks.size() != shape.size())
        throw ConfigError("the tr generator needs tr-ranks with one rank per mode");
    if (generator == Generator::cp && settings.cp_rank == 0) throw ConfigError("the cp generator needs cp-rank");
    if (generator == Generator::tt && tt_ranks.size() + 1 != shape.size())
        throw ConfigError("the tt generator needs d - 1 tt-ranks");
    const auto ranks = solver_tr_ranks();
    for (auto s : solvers) {
        const bool tr = s == SolverKind::tegamp || s == SolverKind::altmin_tr;
        if (tr && ranks.empty()) throw ConfigError(std::string(solver_name(s)) + " needs tr-ranks");
        if (!tr && settings.cp_rank == 0) throw ConfigError(std::string(solver_name(s)) + " needs cp-rank");
    }
    settings.amp.validate();
    settings.altmin.validate();
}

std::vector<std::size_t> ExperimentPlan::solver_tr_ranks() const {
    if (!settings.tr_ranks.empty()) return settings.tr_ranks;
    if (generator == Generator::cp && settings.cp_rank > 0) return std::vector<std::size_t>(shape.size(), settings.cp_rank);
    if (generator == Generator::tt && tt_ranks.size() + 1 == shape.size()) {
        std::vector<std::size_t> r{1};
        r.insert(r.end(), tt_ranks.begin(), tt_ranks.end());
        return r;
    }
    return {};
}

ExperimentPlan parse_plan(const std::vector<KeyValue>& entries) {
    ExperimentPlan plan;
    for (const auto& kv : entries) {
        const auto& k = kv.key;
        const auto& v = kv.value;
        try {
            if (apply_solver_setting(plan.settings, k, v)) continue;
            if (k == "generator") {
                if (v == "tr") plan.generator = ExperimentPlan::Generator::tr;
                else if (v == "cp") plan.generator = ExperimentPlan::Generator::cp;
                else if (v == "tt") plan.generator = ExperimentPlan::Generator::tt;
                else if (v == "image") plan.generator = ExperimentPlan::Generator::image;
                else throw ConfigError("generator: expected tr, cp, tt or image, got '" + v + "'");
            } else if (k == "shape") plan.shape = parse_count_list(k, v);
            else if (k == "tt-ranks") plan.tt_ranks = parse_count_list(k, v);
            else if (k == "images") plan.images = split_list(v);
            else if (k == "rates") plan.rates = parse_double_list(k, v);
            else if (k == "snr-db") {
                plan.snr_db.clear();
                for (const auto& item : split_list(v))
                    plan.snr_db.push_back(item == "noiseless" || item == "inf" ? INFINITY : parse_double(k, item));
                if (plan.snr_db.empty()) throw ConfigError("snr-db: empty list");
            } else if (k == "trials") plan.trials = parse_count(k, v);
            else if (k == "seed") plan.seed = parse_u64(k, v);
            else if (k == "solvers") {
                plan.solvers.clear();
                for (const auto& item : split_list(v)) plan.solvers.push_back(parse_solver(item));
            } else if (k == "true-noise") plan.true_noise = parse_bool(k, v);
            else if (k == "timing") plan.timing = parse_bool(k, v);
            else throw ConfigError("unknown key '" + k + "'");
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(kv.line) + ": " + e.what());
        }
    }
    plan.validate();
    return plan;
}

ExperimentPlan load_plan(const std::string& path) {
    try {
        return parse_plan(load_key_values(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

TrialData make_trial(const ExperimentPlan& plan, std::uint64_t trial_seed, double rate, double snr_db) {
    TrialData t;
    const std::uint64_t fseed = derive_seed(trial_seed, "factors");
    switch (plan.generator) {
        case ExperimentPlan::Generator::tr:
            t.truth = tr_full(random_tr(Shape(plan.shape), RankVector(plan.settings.tr_ranks), fseed));
            break;
        case ExperimentPlan::Generator::cp:
            t.truth = cp_full(random_cp(Shape(plan.shape), plan.settings.cp_rank, fseed));
            break;
        case ExperimentPlan::Generator::tt: {
            std::vector<std::size_t> r{1};
            r.insert(r.end(), plan.tt_ranks.begin(), plan.tt_ranks.end());
            t.truth = tr_full(random_tr(Shape(plan.shape), RankVector(r), fseed));
            break;
        }
        case ExperimentPlan::Generator::image: t.truth = load_image_stack(plan.images); break;
    }
    t.mask = sample_mask(t.truth.shape(), rate, derive_seed(trial_seed, "mask"));
    t.noise_var = snr_db_noise_variance(t.truth, snr_db);
    t.observed = add_awgn(t.truth, t.noise_var, derive_seed(trial_seed, "noise"));
    return t;
}

void sort_records(std::vector<TrialRecord>& records) {
    std::stable_sort(records.begin(), records.end(), [](const TrialRecord& a, const TrialRecord& b) {
        return std::tie(a.solver, a.p_omega, a.snr_db, a.seed) < std::tie(b.solver, b.p_omega, b.snr_db, b.seed);
    });
}

std::vector<TrialRecord> run_plan(const ExperimentPlan& plan, std::size_t jobs,
                                  const std::function<void(const TrialRecord&)>& log) {
    plan.validate();
    struct Task {
        std::uint64_t seed;
        double rate;
        double snr;
    };
    std::vector<Task> tasks;
    for (std::size_t k = 0; k < plan.trials; ++k)
        for (double rate : plan.rates)
            for (double snr : plan.snr_db) tasks.push_back({plan.seed + k, rate, snr});

    const std::size_t ns = plan.solvers.size();
    std::vector<TrialRecord> records(tasks.size() * ns);
    SolverSettings base = plan.settings;
    base.tr_ranks = plan.solver_tr_ranks();

    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
            try {
                const Task& task = tasks[i];
                const TrialData data = make_trial(plan, task.seed, task.rate, task.snr);
                SolverSettings s = base;
                const bool synthetic = plan.generator != ExperimentPlan::Generator::image;
                if (!s.amp.noise_var) {
                    if (data.noise_var == 0.0 && synthetic) s.amp.noise_var = 0.0;
                    else if (plan.true_noise) s.amp.noise_var = data.noise_var;
                }
                for (std::size_t j = 0; j < ns; ++j) {
                    const auto t0 = std::chrono::steady_clock::now();
                    const RunResult run = run_solver(plan.solvers[j], data.observed, data.mask, s, task.seed);
                    const double ms =
                        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
                    TrialRecord& r = records[i * ns + j];
                    r.solver = solver_name(plan.solvers[j]);
                    r.seed = task.seed;
                    r.p_omega = task.rate;
                    r.snr_db = task.snr;
                    r.epsilon = relative_error(data.truth, run.estimate, data.mask);
                    r.nmse = nmse(data.truth, run.estimate);
                    r.iterations = run.iterations;
                    r.status = run.status;
                    r.wall_ms = plan.timing ? ms : 0.0;
                    if (log) {
                        TrialRecord shown = r;
                        shown.wall_ms = ms;
                        std::lock_guard lock(log_mutex);
                        log(shown);
                    }
                }
            } catch (...) {
                std::lock_guard lock(log_mutex);
                if (!failure) failure = std::current_exception();
                next = tasks.size();
            }
        }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    sort_records(records);
    return records;
}

namespace {

std::string number(double v, int digits) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

}  // namespace

std::string format_record(const TrialRecord& r) {
    std::ostringstream s;
    s << r.solver << ',' << r.seed << ',' << number(r.p_omega, 10) << ',' << number(r.snr_db, 10) << ','
      << number(r.epsilon, 17) << ',' << number(r.nmse, 17) << ',' << r.iterations << ','
      << status_name(r.status) << ',' << number(r.wall_ms, 10);
    return s.str();
}

void write_results_csv(std::ostream& out, std::vector<TrialRecord> records) {
    sort_records(records);
    out << "solver,seed,p_omega,snr_db,epsilon,nmse,iterations,status,wall_ms\n";
    for (const auto& r : records) out << format_record(r) << '\n';
}

void save_results_csv(const std::string& path, const std::vector<TrialRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_results_csv(out, records);
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace tegamp
