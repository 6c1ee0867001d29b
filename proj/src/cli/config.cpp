#include "sdelong/cli.hpp"

#include "sdelong/step_size.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sdelong::cli {

namespace {

const std::vector<std::string> kKeys = {
    "model", "eta", "sigma", "theta", "K", "g", "spec",
    "scheme", "reference-scheme", "T", "h-list", "h-ref", "h",
    "paths", "p", "seed", "threads", "output", "enforce-step-ceiling",
    "x0", "y0", "residual-tol", "max-iter", "fallback", "projection-exponent",
    "band", "min-r2", "n-points",
    "alpha1", "p-star", "kappa", "c1",
};

const char* const kGlLadder = "2^-7,2^-6,2^-5,2^-4,2^-3";
const char* const kAcLadder = "15/2^10,15/2^9,15/2^8,15/2^7,15/2^6";

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::string normalize_key(std::string_view key) {
    std::string out = trim(key);
    std::replace(out.begin(), out.end(), '_', '-');
    return out;
}

bool is_known(const std::string& key) { return std::find(kKeys.begin(), kKeys.end(), key) != kKeys.end(); }

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
    throw UsageError("invalid value '" + value + "' for key '" + key + "': " + why);
}

/// Typed reads from the resolved map; errors name the key.
class Reader {
public:
    explicit Reader(const KeyValues& values) : values_(values) {}

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& raw(const std::string& key) const { return values_.at(key); }

    double real(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        return real_of(key, raw(key));
    }

    std::optional<double> optional_real(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return real_of(key, raw(key));
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) const {
        if (!has(key)) return fallback;
        const std::string& v = raw(key);
        try {
            std::size_t used = 0;
            const long long out = std::stoll(v, &used);
            if (used != v.size()) bad(key, v, "not an integer");
            return out;
        } catch (const std::logic_error&) {
            bad(key, v, "not an integer");
        }
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const std::string& v = raw(key);
        try {
            std::size_t used = 0;
            if (!v.empty() && v.front() == '-') bad(key, v, "must be non-negative");
            const unsigned long long out = std::stoull(v, &used, 0);
            if (used != v.size()) bad(key, v, "not an integer");
            return out;
        } catch (const std::logic_error&) {
            bad(key, v, "not an integer");
        }
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string& v = raw(key);
        if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
        if (v == "0" || v == "false" || v == "no" || v == "off") return false;
        bad(key, v, "expected true or false");
    }

    double step(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        try {
            return parse_step(raw(key));
        } catch (const UsageError& e) {
            bad(key, raw(key), e.what());
        }
    }

    std::vector<double> steps(const std::string& key) const {
        if (!has(key)) return {};
        try {
            return parse_step_list(raw(key));
        } catch (const UsageError& e) {
            bad(key, raw(key), e.what());
        }
    }

    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        if (!has(key)) return out;
        std::stringstream ss(raw(key));
        std::string piece;
        while (std::getline(ss, piece, ',')) out.push_back(real_of(key, trim(piece)));
        return out;
    }

private:
    static double real_of(const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const double out = std::stod(v, &used);
            if (used != v.size() || !std::isfinite(out)) bad(key, v, "not a finite number");
            return out;
        } catch (const std::logic_error&) {
            // Also accept exact rationals such as 15/2^10.
            try {
                return parse_rational(v).value();
            } catch (const UsageError&) {
                bad(key, v, "not a number");
            }
        }
    }

    const KeyValues& values_;
};

SchemeKind scheme_of(const std::string& key, const std::string& value) {
    const auto kind = parse_scheme(value);
    if (!kind) bad(key, value, "expected em, be or pe");
    return *kind;
}

NewtonFallback fallback_of(const std::string& value) {
    if (value == "damped") return NewtonFallback::DampedNewton;
    if (value == "bisection") return NewtonFallback::ScalarBisection;
    if (value == "error") return NewtonFallback::Error;
    bad("fallback", value, "expected damped, bisection or error");
}

void validate(ExperimentConfig& cfg) {
    if (cfg.model != "gl" && cfg.model != "allen-cahn" && cfg.model != "custom") {
        bad("model", cfg.model, "expected gl, allen-cahn or custom");
    }
    if (cfg.model == "custom" && cfg.spec_file.empty()) throw UsageError("key 'spec' is required for model custom");
    if (cfg.model == "allen-cahn" && cfg.g_kind != "sine-plus-one") bad("g", cfg.g_kind, "expected sine-plus-one");
    if (cfg.paths < 2) bad("paths", std::to_string(cfg.paths), "need at least 2 paths");
    if (!(cfg.p >= 1.0)) bad("p", std::to_string(cfg.p), "must be at least 1");
    if (cfg.threads < 0) bad("threads", std::to_string(cfg.threads), "must be non-negative");
    if (cfg.n_points < 1) bad("n-points", std::to_string(cfg.n_points), "must be at least 1");
    if (!(cfg.T > 0.0)) bad("T", cfg.values.count("T") ? cfg.values.at("T") : "", "must be positive");
    if (!(cfg.band >= 0.0)) bad("band", cfg.values.at("band"), "must be non-negative");
    cfg.scheme.validate();

    const auto& raw = cfg.values;
    switch (cfg.command) {
        case Command::Convergence: {
            if (cfg.h_list.empty()) throw UsageError("key 'h-list' is required");
            if (!(cfg.h_ref > 0.0)) throw UsageError("key 'h-ref' is required");
            const auto n_ref = exact_multiple(cfg.T, cfg.h_ref);
            if (!n_ref) bad("h-ref", raw.at("h-ref"), "T is not an integer multiple of h-ref");
            for (double h : cfg.h_list) {
                const auto factor = exact_multiple(h, cfg.h_ref);
                if (!factor) {
                    bad("h-list", raw.at("h-list"),
                        "h = " + std::to_string(h) + " is not an exact multiple of h-ref");
                }
                if (*n_ref % *factor != 0) bad("h-list", raw.at("h-list"), "h = " + std::to_string(h) + " does not divide T");
                if (cfg.enforce_step_ceiling && !is_power_of_two(*factor)) {
                    bad("h-list", raw.at("h-list"), "ladder is not dyadic relative to h-ref");
                }
            }
            break;
        }
        case Command::Moments:
        case Command::Contractivity:
            if (!(cfg.h > 0.0)) throw UsageError("key 'h' is required");
            if (!exact_multiple(cfg.T, cfg.h)) bad("h", raw.at("h"), "T is not an integer multiple of h");
            break;
        case Command::CheckAssumptions:
            break;
    }
}

}  // namespace

std::string_view command_name(Command command) noexcept {
    switch (command) {
        case Command::Convergence: return "convergence";
        case Command::Moments: return "moments";
        case Command::Contractivity: return "contractivity";
        case Command::CheckAssumptions: return "check-assumptions";
    }
    return "?";
}

const std::vector<std::string>& known_keys() { return kKeys; }

KeyValues preset_values(std::string_view preset) {
    if (preset == "gl-fig1" || preset == "gl-fig2") {
        return {{"model", "gl"}, {"eta", "-1.5"}, {"sigma", "1"}, {"theta", "1"},
                {"scheme", preset == "gl-fig1" ? "be" : "pe"},
                {"T", "16"}, {"h-list", kGlLadder}, {"h-ref", "2^-12"},
                {"paths", "10000"}, {"p", "1"}, {"x0", "1"}};
    }
    if (preset == "ac-fig3" || preset == "ac-fig4") {
        return {{"model", "allen-cahn"}, {"K", "4"}, {"g", "sine-plus-one"},
                {"scheme", preset == "ac-fig3" ? "be" : "pe"},
                {"T", "30"}, {"h-list", kAcLadder}, {"h-ref", "15/2^12"},
                {"paths", "5000"}, {"p", "1"}, {"x0", "1"},
                {"band", "0.15"}, {"min-r2", "0.95"}};
    }
    throw UsageError("unknown preset '" + std::string(preset) + "' (expected gl-fig1, gl-fig2, ac-fig3 or ac-fig4)");
}

KeyValues parse_key_values(std::string_view text, const std::string& origin) {
    KeyValues out;
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(number);
        if (eq == std::string::npos) throw UsageError(where + ": expected key = value");
        const std::string key = normalize_key(line.substr(0, eq));
        if (!is_known(key)) throw UsageError(where + ": unknown key '" + key + "'");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

KeyValues read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_key_values(buffer.str(), path);
}

ExperimentConfig resolve_config(Command command, const KeyValues& preset, const KeyValues& file,
                                std::optional<std::string> env_threads, const KeyValues& flags) {
    ExperimentConfig cfg;
    cfg.command = command;
    for (const auto* layer : {&preset, &file}) {
        for (const auto& [k, v] : *layer) cfg.values[k] = v;
    }
    if (env_threads && !env_threads->empty()) cfg.values["threads"] = *env_threads;
    for (const auto& [k, v] : flags) cfg.values[k] = v;
    for (const auto& [k, v] : cfg.values) {
        if (!is_known(k)) throw UsageError("unknown key '" + k + "'");
    }

    const Reader r(cfg.values);
    if (r.has("model")) cfg.model = r.raw("model");
    cfg.eta = r.real("eta", cfg.eta);
    cfg.sigma = r.real("sigma", cfg.sigma);
    cfg.theta = r.real("theta", cfg.theta);
    cfg.intervals = static_cast<int>(r.integer("K", cfg.intervals));
    if (r.has("g")) cfg.g_kind = r.raw("g");
    if (r.has("spec")) cfg.spec_file = r.raw("spec");

    cfg.scheme.kind = r.has("scheme") ? scheme_of("scheme", r.raw("scheme")) : SchemeKind::BackwardEuler;
    cfg.scheme.newton.residual_tol = r.real("residual-tol", cfg.scheme.newton.residual_tol);
    cfg.scheme.newton.max_iter = static_cast<int>(r.integer("max-iter", cfg.scheme.newton.max_iter));
    if (r.has("fallback")) cfg.scheme.newton.fallback = fallback_of(r.raw("fallback"));
    cfg.scheme.projection_exponent = r.optional_real("projection-exponent");
    if (r.has("reference-scheme")) {
        SchemeConfig ref = cfg.scheme;
        ref.kind = scheme_of("reference-scheme", r.raw("reference-scheme"));
        cfg.reference_scheme = ref;
    }

    cfg.T = r.real("T", cfg.T);
    cfg.h_list = r.steps("h-list");
    cfg.h_ref = r.step("h-ref", 0.0);
    cfg.h = r.step("h", 0.0);
    cfg.paths = r.integer("paths", cfg.paths);
    cfg.p = r.real("p", cfg.p);
    cfg.seed = r.unsigned_integer("seed", cfg.seed);
    cfg.threads = static_cast<int>(r.integer("threads", 0));
    cfg.output = r.has("output") ? r.raw("output") : "sde_longtime_" + std::string(command_name(command));
    cfg.enforce_step_ceiling = r.flag("enforce-step-ceiling", false);
    cfg.x0 = r.reals("x0");
    cfg.y0 = r.reals("y0");
    cfg.band = r.real("band", cfg.band);
    cfg.min_r_squared = r.real("min-r2", cfg.min_r_squared);
    cfg.n_points = static_cast<int>(r.integer("n-points", cfg.n_points));
    cfg.alpha1 = r.optional_real("alpha1");
    cfg.p_star = r.optional_real("p-star");
    cfg.kappa = r.optional_real("kappa");
    cfg.c1 = r.optional_real("c1");

    validate(cfg);
    return cfg;
}

ExperimentConfig parse_config(const std::vector<std::string>& args, std::optional<std::string> env_threads) {
    CLI::App app{"Long-time strong convergence experiments for SDEs with contractive monotone drift",
                 std::string(kToolName)};
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    struct Sub {
        Command command;
        CLI::App* app;
        std::string preset;
        std::string config_file;
        std::map<std::string, std::string> flags;
        std::map<std::string, CLI::Option*> options;
    };
    std::vector<Sub> subs;
    subs.reserve(4);
    const std::pair<Command, const char*> commands[] = {
        {Command::Convergence, "strong error against a coupled fine-step reference"},
        {Command::Moments, "moment trace over [0, T]"},
        {Command::Contractivity, "decay of the coupled difference of two solutions"},
        {Command::CheckAssumptions, "certify the structural constants on random samples"},
    };
    for (const auto& [command, help] : commands) {
        Sub& sub = subs.emplace_back();
        sub.command = command;
        sub.app = app.add_subcommand(std::string(command_name(command)), help);
        sub.app->add_option("--preset", sub.preset, "gl-fig1, gl-fig2, ac-fig3 or ac-fig4");
        sub.app->add_option("--config", sub.config_file, "key = value file");
        for (const auto& key : kKeys) {
            sub.options[key] = sub.app->add_option("--" + key, sub.flags[key]);
        }
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested(app.help());
    } catch (const CLI::CallForAllHelp&) {
        throw HelpRequested(app.help("", CLI::AppFormatMode::All));
    } catch (const CLI::CallForVersion&) {
        throw HelpRequested(std::string(kToolVersion) + "\n");
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    for (auto& sub : subs) {
        if (!sub.app->parsed()) continue;
        KeyValues flags;
        for (const auto& key : kKeys) {
            if (sub.options[key]->count() > 0) flags[key] = sub.flags[key];
        }
        const KeyValues preset = sub.preset.empty() ? KeyValues{} : preset_values(sub.preset);
        const KeyValues file = sub.config_file.empty() ? KeyValues{} : read_config_file(sub.config_file);
        return resolve_config(sub.command, preset, file, std::move(env_threads), flags);
    }
    throw UsageError("a subcommand is required");
}

// ---------------------------------------------------------------------------

namespace {

double polynomial(const std::vector<double>& coeffs, double x) {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
}

double polynomial_derivative(const std::vector<double>& coeffs, double x) {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 1;) acc = acc * x + static_cast<double>(i) * coeffs[i];
    return acc;
}

}  // namespace

SdeProblem load_custom_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read model spec '" + path + "'");
    KeyValues values;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(number) + ": expected key = value");
        const std::string key = normalize_key(line.substr(0, eq));
        static const std::vector<std::string> allowed = {"drift", "diffusion", "alpha1", "p-star", "kappa",
                                                         "c1", "beta1", "name"};
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw UsageError(path + ":" + std::to_string(number) + ": unknown key '" + key + "'");
        }
        values[key] = trim(line.substr(eq + 1));
    }
    const Reader r(values);
    for (const char* key : {"drift", "diffusion", "alpha1", "p-star", "kappa", "c1"}) {
        if (!r.has(key)) throw UsageError(path + ": missing key '" + key + "'");
    }
    const std::vector<double> drift = r.reals("drift");
    const std::vector<double> diffusion = r.reals("diffusion");
    MonotoneConstants constants;
    constants.alpha1 = r.real("alpha1", 0.0);
    constants.p_star = r.real("p-star", 0.0);
    constants.kappa = r.real("kappa", 0.0);
    constants.c1 = r.real("c1", 0.0);
    constants.beta1 = r.optional_real("beta1");
    const std::string name = r.has("name") ? r.raw("name") : "custom";

    return SdeProblem(
        name, 1, 1, [drift](const Vector& x, Vector& out) { out[0] = polynomial(drift, x[0]); },
        [diffusion](const Vector& x, Matrix& out) { out(0, 0) = polynomial(diffusion, x[0]); }, constants,
        [drift](const Vector& x, Matrix& out) { out(0, 0) = polynomial_derivative(drift, x[0]); });
}

SdeProblem build_problem(const ExperimentConfig& config) {
    if (config.model == "gl") return ginzburg_landau(config.eta, config.sigma, config.theta);
    if (config.model == "allen-cahn") return allen_cahn(config.intervals, ScalarNoiseMap::sine_plus_one());
    return load_custom_problem(config.spec_file);
}

Vector initial_state(const ExperimentConfig& config, const SdeProblem& problem, bool second) {
    const int d = problem.dim();
    const std::vector<double>& given = second ? config.y0 : config.x0;
    const char* key = second ? "y0" : "x0";
    if (given.empty()) {
        Vector x = Vector::Ones(d);
        return second ? Vector(-initial_state(config, problem, false)) : x;
    }
    if (given.size() == 1) return Vector::Constant(d, given.front());
    if (static_cast<int>(given.size()) != d) {
        throw UsageError(std::string("key '") + key + "' must have 1 or " + std::to_string(d) + " entries");
    }
    return Eigen::Map<const Vector>(given.data(), d);
}

}  // namespace sdelong::cli
