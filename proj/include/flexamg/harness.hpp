#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "flexamg/evolution.hpp"
#include "flexamg/problems.hpp"

namespace flexamg {

/// Everything a run needs. Text form is one `key = value` per line with '#'
/// comments; keys are listed by RunConfig::keys().
struct RunConfig {
    std::optional<ProblemSpec> problem;
    SetupParams setup;
    EvolutionConfig evo;
    std::string out = "flexamg-out";

    /// Throws UsageError naming the key on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    /// "key=value" form used by --set.
    void apply_override(const std::string& assignment);

    static const std::vector<std::string>& keys();
    /// Current value of every key, as text.
    [[nodiscard]] std::map<std::string, std::string> values() const;
    /// Sorted key=value lines of everything that can change results (not jobs or out).
    [[nodiscard]] std::string canonical() const;
    /// 64-bit FNV-1a of canonical(), as 16 hex digits.
    [[nodiscard]] std::string hash() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

std::string fnv1a_hex(const std::string& data);

/// Problem plus its hierarchy; the partition of the problem drives the smoothers.
struct Prepared {
    ProblemInstance problem;
    AmgHierarchy hierarchy;
};

Prepared prepare(const ProblemSpec& spec, const SetupParams& setup);

/// Design choices that stand in for unavailable components; written to metadata.
std::vector<std::string> substitutions(const RunConfig& config);

enum class FrontFormat { Json, Csv };
FrontFormat parse_front_format(const std::string& text);

/// Serialized front with seed and config hash. CSV has the columns
/// name, time_per_iter, iterations, aggregate, ir_text.
std::string export_front(const ParetoFront& front, FrontFormat format, const RunConfig& config);
/// Per-individual rows: generation, index, time_per_iter, iterations, ir_text.
std::string export_history(const std::vector<GenerationRecord>& history, const RunConfig& config);
std::string export_history_summary(const std::vector<GenerationRecord>& history, const RunConfig& config);

struct OptimizeSummary {
    std::string out_dir;
    std::size_t front_size = 0;
};

/// Runs the search and writes front.json, front.csv, history.csv,
/// history_summary.csv, metadata.json and ir/GP-k.ir under config.out.
/// Throws NumericalFailure (after writing) when no individual converged.
OptimizeSummary cmd_optimize(const RunConfig& config, std::ostream& log);

/// Validates the cycle in `ir_path` against the problem's hierarchy and
/// solves once. Writes the report JSON to `out_path` when non-empty and
/// returns it. Throws UsageError listing violations, NumericalFailure when
/// the solve does not converge.
std::string cmd_evaluate(const std::string& ir_path, const RunConfig& config, const std::string& out_path);

struct CompareRow {
    std::string name;
    Fitness fitness;
    double eta_default = 0.0;
    double eta_tuned1 = 0.0;
};

/// Evaluates every ir/*.ir in `front_dir` and the reference cycles; returns rows
/// (front members in file-name order, then references) and writes compare.csv
/// to `out_path` when non-empty.
std::vector<CompareRow> cmd_compare(const std::string& front_dir, const RunConfig& config, const std::string& out_path);
std::string compare_csv(const std::vector<CompareRow>& rows);

/// Writes matrix.mtx, rhs.mtx and problem.json into `out_dir`.
void cmd_gen_problem(const RunConfig& config, const std::string& out_dir);

/// Cycle text of a named reference on the configured problem's hierarchy.
std::string cmd_encode_reference(const std::string& name, const RunConfig& config);

} // namespace flexamg
