#pragma once

#include "sdelong/analysis.hpp"
#include "sdelong/model.hpp"
#include "sdelong/schemes.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sdelong::cli {

inline constexpr std::string_view kToolName = "sde-longtime";
inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kThreadsEnv = "SDE_LONGTIME_THREADS";

enum class Command { Convergence, Moments, Contractivity, CheckAssumptions };

std::string_view command_name(Command command) noexcept;

/// Exit codes of the tool.
enum ExitCode : int { kPass = 0, kCheckFailed = 1, kUsage = 2, kSolverFailure = 3 };

/// Raised for --help / --version; the message is what should be printed.
struct HelpRequested : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using KeyValues = std::map<std::string, std::string>;

/// Every configuration key accepted by flags (as --key) and config files.
const std::vector<std::string>& known_keys();

/// Key/value pairs a preset sets. Throws UsageError for an unknown preset.
KeyValues preset_values(std::string_view preset);

/// Flat key = value file; '#' starts a comment, '_' and '-' are equivalent
/// in keys. Throws UsageError naming the line on malformed input or unknown
/// keys.
KeyValues read_config_file(const std::string& path);
KeyValues parse_key_values(std::string_view text, const std::string& origin);

struct ExperimentConfig {
    Command command = Command::Convergence;
    /// Resolved textual values after layering; source of the config echo.
    KeyValues values;

    std::string model = "gl";
    double eta = -1.5;
    double sigma = 1.0;
    double theta = 1.0;
    int intervals = 4;
    std::string g_kind = "sine-plus-one";
    std::string spec_file;

    SchemeConfig scheme;
    std::optional<SchemeConfig> reference_scheme;
    double T = 16.0;
    std::vector<double> h_list;
    double h_ref = 0.0;
    double h = 0.0;
    std::int64_t paths = 1000;
    double p = 1.0;
    std::uint64_t seed = 42;
    int threads = 0;
    std::string output;
    bool enforce_step_ceiling = false;
    std::vector<double> x0;
    std::vector<double> y0;
    double band = 0.1;
    double min_r_squared = 0.98;
    int n_points = 100;

    /// Claimed constants to certify instead of the model's own.
    std::optional<double> alpha1;
    std::optional<double> p_star;
    std::optional<double> kappa;
    std::optional<double> c1;
};

/// Layers preset < config file < environment (threads only) < flags and
/// validates the result. Throws UsageError naming the offending key.
ExperimentConfig resolve_config(Command command, const KeyValues& preset, const KeyValues& file,
                                std::optional<std::string> env_threads, const KeyValues& flags);

/// Parses `subcommand [--key value ...] [--preset name] [--config file]`.
/// Throws UsageError or HelpRequested.
ExperimentConfig parse_config(const std::vector<std::string>& args,
                              std::optional<std::string> env_threads = std::nullopt);

SdeProblem build_problem(const ExperimentConfig& config);

/// Scalar polynomial model from a key = value file:
///   drift = a0, a1, ...       f(x) = sum a_i x^i
///   diffusion = b0, b1, ...   g(x) = sum b_i x^i
///   alpha1, p_star, kappa, c1 [, beta1, name]
SdeProblem load_custom_problem(const std::string& path);

/// Initial state of the configured size: config.x0 broadcast when it has one
/// entry, 1 in every component when empty.
Vector initial_state(const ExperimentConfig& config, const SdeProblem& problem, bool second = false);

// ---------------------------------------------------------------------------

/// `# ` prefixed header lines: tool version, run metadata, config echo, seed.
/// Only the `# run:` line varies between identical invocations.
std::string csv_preamble(const ExperimentConfig& config, int threads_used);
inline constexpr std::string_view kCsvHeader = "kind,model,scheme,p,h,value,std_error,n_paths,n_divergent,t";

std::string csv_rows(const ErrorCurve& curve, std::string_view kind = "error");
std::string csv_rows(const MomentTrace& trace, std::string_view kind);
std::string csv_rows(const std::vector<AssumptionReport>& reports, std::string_view model);

std::string report_json(const ExperimentConfig& config, const ConvergenceReport& report);
/// `summary` holds the scalar readouts checked by the subcommand.
std::string trace_json(const ExperimentConfig& config, const MomentTrace& trace,
                       const std::map<std::string, double>& summary, bool pass);
std::string assumptions_json(const ExperimentConfig& config, const std::string& problem,
                             const std::vector<AssumptionReport>& reports, bool pass);

/// Runs the configured subcommand, writes <output>.csv and <output>.json and
/// returns an ExitCode. Diagnostics go to `err`, a summary to `out`.
int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Full command line entry point; `args` excludes the program name.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdelong::cli
