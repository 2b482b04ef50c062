// tegamp: command-line front end.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data or parse
// error, 3 solver diverged.

#include "tegamp/config.hpp"
#include "tegamp/errors.hpp"
#include "tegamp/experiments.hpp"
#include "tegamp/random.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

using namespace tegamp;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kDiverged = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Options of one subcommand. Every flag --k is also accepted as "k = v" in
/// the --config file; command-line values win.
struct Command {
    CLI::App* app = nullptr;
    std::map<std::string, std::string> flags;
    std::vector<std::string> keys;
    std::set<std::string> required;
    std::string config;

    void add(const std::string& key, const std::string& help, bool req = false) {
        keys.push_back(key);
        app->add_option("--" + key, flags[key], help + (req ? " (required)" : ""));
        if (req) required.insert(key);
    }

    void add_solver_keys() {
        for (const auto& h : solver_setting_help()) add(h.key, h.help);
    }

    /// Merged settings after --config, with missing required keys reported.
    std::map<std::string, std::string> resolve() const {
        std::map<std::string, std::string> out;
        if (!config.empty()) {
            for (const auto& kv : load_key_values(config)) {
                if (std::find(keys.begin(), keys.end(), kv.key) == keys.end())
                    throw ConfigError(config + ": line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
                out[kv.key] = kv.value;
            }
        }
        for (const auto& [k, v] : flags)
            if (app->count("--" + k) > 0) out[k] = v;
        for (const auto& k : required)
            if (!out.count(k)) throw UsageError("missing required option --" + k);
        return out;
    }
};

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_image(const std::string& path) { return has_suffix(path, ".pgm") || has_suffix(path, ".csv"); }

/// Comma-separated images become an H x W x K stack; anything else is tensor text.
DenseTensor read_input(const std::string& spec) {
    const auto paths = split_list(spec);
    if (paths.empty()) throw UsageError("empty input path");
    if (is_image(paths[0])) return load_image_stack(paths);
    if (paths.size() != 1) throw UsageError("several inputs are only allowed for images");
    return load_tensor(paths[0]);
}

SolverSettings solver_settings(const std::map<std::string, std::string>& opts) {
    SolverSettings s;
    for (const auto& [k, v] : opts) apply_solver_setting(s, k, v);
    return s;
}

std::uint64_t seed_of(const std::map<std::string, std::string>& opts) {
    auto it = opts.find("seed");
    return it == opts.end() ? 0 : parse_u64("seed", it->second);
}

std::string get(const std::map<std::string, std::string>& opts, const std::string& key, const std::string& def = "") {
    auto it = opts.find(key);
    return it == opts.end() ? def : it->second;
}

int run_generate(const Command& cmd) {
    const auto o = cmd.resolve();
    ExperimentPlan plan;
    plan.shape = parse_count_list("shape", get(o, "shape"));
    const int kinds = int(o.count("tr-ranks")) + int(o.count("cp-rank")) + int(o.count("tt-ranks"));
    if (kinds != 1) throw UsageError("give exactly one of --tr-ranks, --cp-rank, --tt-ranks");
    if (o.count("tr-ranks")) {
        plan.generator = ExperimentPlan::Generator::tr;
        plan.settings.tr_ranks = parse_count_list("tr-ranks", get(o, "tr-ranks"));
    } else if (o.count("cp-rank")) {
        plan.generator = ExperimentPlan::Generator::cp;
        plan.settings.cp_rank = parse_count("cp-rank", get(o, "cp-rank"));
    } else {
        plan.generator = ExperimentPlan::Generator::tt;
        plan.tt_ranks = parse_count_list("tt-ranks", get(o, "tt-ranks"));
    }
    const double rate = parse_double("rate", get(o, "rate", "1"));
    const std::string snr = get(o, "snr-db", "inf");
    plan.rates = {rate};
    plan.snr_db = {snr == "inf" || snr == "noiseless" ? INFINITY : parse_double("snr-db", snr)};
    plan.validate();
    const std::uint64_t seed = seed_of(o);
    const TrialData data = make_trial(plan, seed, rate, plan.snr_db[0]);

    save_tensor(get(o, "out"), data.observed);
    if (o.count("truth-out")) save_tensor(get(o, "truth-out"), data.truth);
    if (o.count("mask-out")) {
        DenseTensor m(data.mask.shape());
        for (std::size_t x = 0; x < m.size(); ++x) m[x] = data.mask.observed(x) ? 1.0 : 0.0;
        save_tensor(get(o, "mask-out"), m);
    }
    if (o.count("factors-out")) {
        const Shape shape(plan.shape);
        const std::uint64_t fseed = derive_seed(seed, "factors");
        TRFactors f;
        if (plan.generator == ExperimentPlan::Generator::cp) f = cp_to_tr(random_cp(shape, plan.settings.cp_rank, fseed));
        else f = random_tr(shape, RankVector(plan.solver_tr_ranks()), fseed);
        std::ofstream out(get(o, "factors-out"));
        if (!out) throw std::runtime_error("cannot write " + get(o, "factors-out"));
        write_tr_factors(out, f);
    }
    std::cout << "wrote " << get(o, "out") << " (" << data.observed.shape().str() << ", noise_var "
              << data.noise_var << ")\n";
    return 0;
}

ObservationMask read_mask(const std::string& path, const Shape& shape) {
    const DenseTensor m = load_tensor(path);
    if (!(m.shape() == shape)) throw ParseError(path + ": mask shape " + m.shape().str() + " differs from data " + shape.str());
    std::vector<std::uint8_t> bits(m.size());
    for (std::size_t x = 0; x < m.size(); ++x) {
        if (m[x] != 0.0 && m[x] != 1.0) throw ParseError(path + ": mask values must be 0 or 1");
        bits[x] = m[x] != 0.0;
    }
    return ObservationMask(shape, std::move(bits));
}

int run_complete(const Command& cmd, bool full) {
    const auto o = cmd.resolve();
    const DenseTensor v = read_input(get(o, "in"));
    const ObservationMask mask = full ? ObservationMask::full(v.shape()) : read_mask(get(o, "mask"), v.shape());
    const SolverKind kind = parse_solver(get(o, "solver", "tegamp"));
    const SolverSettings settings = solver_settings(o);
    const std::uint64_t seed = seed_of(o);

    const auto t0 = std::chrono::steady_clock::now();
    const RunResult run = run_solver(kind, v, mask, settings, seed);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    if (o.count("out")) save_tensor(get(o, "out"), run.estimate);
    TrialRecord r;
    r.solver = solver_name(kind);
    r.seed = seed;
    r.p_omega = static_cast<double>(mask.count()) / static_cast<double>(v.size());
    r.iterations = run.iterations;
    r.status = run.status;
    r.wall_ms = ms;
    if (o.count("truth")) {
        const DenseTensor truth = read_input(get(o, "truth"));
        if (!(truth.shape() == v.shape())) throw ParseError("truth shape differs from the data");
        r.epsilon = relative_error(truth, run.estimate, mask);
        r.nmse = nmse(truth, run.estimate);
    } else {
        r.epsilon = relative_error(v, run.estimate, ObservationMask::full(v.shape()));
        r.nmse = nmse(v, run.estimate);
    }
    std::cout << "solver,seed,p_omega,snr_db,epsilon,nmse,iterations,status,wall_ms\n" << format_record(r) << '\n';
    return run.status == Status::diverged ? kDiverged : 0;
}

int run_bench(const Command& cmd) {
    const auto o = cmd.resolve();
    const ExperimentPlan plan = load_plan(get(o, "plan"));
    const std::size_t jobs = parse_count("jobs", get(o, "jobs", "1"));
    if (jobs == 0) throw UsageError("--jobs must be >= 1");
    const auto records = run_plan(plan, jobs, [](const TrialRecord& r) { std::cerr << format_record(r) << '\n'; });
    save_results_csv(get(o, "out"), records);
    std::cout << "wrote " << records.size() << " records to " << get(o, "out") << '\n';
    return 0;
}

int run_convert(const Command& cmd) {
    const auto o = cmd.resolve();
    const DenseTensor t = read_input(get(o, "in"));
    const std::string out = get(o, "out");
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    if (has_suffix(out, ".pgm")) write_pgm(f, t);
    else if (has_suffix(out, ".csv")) write_image_csv(f, t);
    else write_tensor(f, t);
    if (!f) throw std::runtime_error("write failed for " + out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tensor ring and CP completion by approximate message passing"};
    app.require_subcommand(1);
    app.fallthrough(false);

    std::map<std::string, Command> cmds;
    auto make = [&](const std::string& name, const std::string& desc) -> Command& {
        Command& c = cmds[name];
        c.app = app.add_subcommand(name, desc);
        c.app->add_option("--config", c.config, "file of 'key = value' lines naming any of the flags below");
        return c;
    };

    Command& gen = make("generate", "draw a random low-rank tensor, mask and noise");
    gen.add("shape", "mode sizes, e.g. 6,7,8", true);
    gen.add("tr-ranks", "TR ranks r_1,...,r_d");
    gen.add("cp-rank", "CP rank");
    gen.add("tt-ranks", "TT interior ranks r_2,...,r_d");
    gen.add("seed", "seed (default 0)");
    gen.add("rate", "sampling rate for --mask-out (default 1)");
    gen.add("snr-db", "noise level in dB, or inf (default inf)");
    gen.add("out", "observed tensor (tensor text)", true);
    gen.add("truth-out", "noiseless tensor");
    gen.add("mask-out", "0/1 mask tensor");
    gen.add("factors-out", "generating factors in TR form");

    Command& comp = make("complete", "complete a partially observed tensor");
    Command& dec = make("decompose", "fit a fully observed tensor");
    for (Command* c : {&comp, &dec}) {
        c->add("in", "data: tensor text, or comma-separated .pgm/.csv images", true);
        if (c == &comp) c->add("mask", "0/1 mask tensor", true);
        c->add("solver", "tegamp, tesamp, altmin-tr or altmin-cp (default tegamp)");
        c->add("seed", "initialization seed (default 0)");
        c->add("out", "estimate (tensor text)");
        c->add("truth", "reference for epsilon and nmse (default: the data itself)");
        c->add_solver_keys();
    }

    Command& bench = make("bench", "run an experiment plan and write a CSV");
    bench.add("plan", "plan file of 'key = value' lines", true);
    bench.add("out", "results CSV", true);
    bench.add("jobs", "parallel trials (default 1)");

    Command& conv = make("convert", "convert between PGM, CSV images and tensor text");
    conv.add("in", "input: tensor text, or comma-separated .pgm/.csv images", true);
    conv.add("out", "output; .pgm and .csv write an image, anything else tensor text", true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e);
            return 0;
        }
        std::cerr << "error: " << e.what() << '\n';
        auto subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.front()->help());
        return kUsage;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    const Command& cmd = cmds.at(name);
    try {
        if (name == "generate") return run_generate(cmd);
        if (name == "complete") return run_complete(cmd, false);
        if (name == "decompose") return run_complete(cmd, true);
        if (name == "bench") return run_bench(cmd);
        return run_convert(cmd);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n' << cmd.app->help();
        return kUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
}
