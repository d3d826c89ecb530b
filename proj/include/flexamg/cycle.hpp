#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flexamg/amg.hpp"
#include "flexamg/smoothers.hpp"

namespace flexamg {

// Primitive steps of a flexible cycle. `level` is always the fine side of a
// transfer: Restrict{l} moves l -> l+1, CorrectProlong{l} moves l+1 -> l.
struct Smooth {
    Index level = 0;
    SmootherSpec smoother;
    friend bool operator==(const Smooth&, const Smooth&) = default;
};
struct Restrict {
    Index level = 0;
    friend bool operator==(const Restrict&, const Restrict&) = default;
};
struct CorrectProlong {
    Index level = 0;
    double alpha = 1.0;
    friend bool operator==(const CorrectProlong&, const CorrectProlong&) = default;
};
/// One recursive V(1,1) cycle from `level` down to the coarsest grid.
struct TailSolve {
    Index level = 0;
    friend bool operator==(const TailSolve&, const TailSolve&) = default;
};
/// Direct solve on the coarsest grid.
struct CoarseSolve {
    Index level = 0;
    friend bool operator==(const CoarseSolve&, const CoarseSolve&) = default;
};

using Step = std::variant<Smooth, Restrict, CorrectProlong, TailSolve, CoarseSolve>;

Index step_level(const Step& step);

inline constexpr int max_smooths_per_visit = 4;
inline constexpr int max_subvisits = 2;

/// Hybrid symmetric Gauss-Seidel with CF ordering, one sweep, unit weights.
inline SmootherSpec default_tail_smoother()
{
    return {SmootherKind::GsSymmetric, RelaxOrdering::CF, 1.0, 1.0, 1};
}

/// A flexible cycle: explicit steps on levels 0..n_flex, then a recursive
/// V-cycle tail (or the coarse solve when level n_flex is the coarsest).
struct CycleIR {
    std::vector<Step> ops;
    Index n_flex = 0;
    SmootherSpec tail_smoother = default_tail_smoother();

    friend bool operator==(const CycleIR&, const CycleIR&) = default;
};

struct Violation {
    /// Offending step, or ops.size() for whole-sequence problems.
    Index step = 0;
    std::string message;
};

struct ValidationOptions {
    /// Weights and alphas must be members of the discrete sample set, sweeps in [1, 4].
    bool check_sample_sets = true;
};

struct ValidationResult {
    std::vector<Violation> violations;
    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
    [[nodiscard]] std::string describe() const;
};

/// Checks bracketing, level consistency, per-visit bounds and parameter sets
/// against the hierarchy. Returns every violation found.
ValidationResult validate(const CycleIR& ir, const AmgHierarchy& hierarchy,
                          const ValidationOptions& options = {});

/// Interprets a cycle as a linear preconditioner.
///
/// Holds per-level scratch vectors, so one runner belongs to one thread; the
/// hierarchy and cycle are only read. Construction validates the structure
/// (not sample-set membership) and throws ContractViolation on failure.
class CycleRunner {
public:
    CycleRunner(const CycleIR& ir, const AmgHierarchy& hierarchy);

    /// out = M^{-1} b, starting from a zero iterate.
    void apply(std::span<const double> b, std::span<double> out);

    [[nodiscard]] const CycleIR& ir() const noexcept { return ir_; }

private:
    void tail(Index level);

    CycleIR ir_;
    const AmgHierarchy& h_;
    std::vector<Vector> x_;
    std::vector<Vector> b_;
    std::vector<Vector> r_;
};

Vector execute(const CycleIR& ir, const AmgHierarchy& hierarchy, std::span<const double> b);

struct LinearityReport {
    bool linear = false;
    double max_deviation = 0.0;
    int samples = 0;
};

/// Compares execute(a x + b y) with a execute(x) + b execute(y) for random
/// scalars; linear when the relative deviation stays within tol.
LinearityReport execute_linearity_probe(const CycleIR& ir, const AmgHierarchy& hierarchy,
                                        std::span<const double> x, std::span<const double> y,
                                        std::uint64_t seed = 1, int samples = 3,
                                        double tol = 1e-12);

/// Canonical V-cycle over the whole hierarchy with the given smoothing
/// sequences per visit, unit CGC scaling and a direct coarsest solve.
CycleIR encode_vcycle(const AmgHierarchy& hierarchy, std::span<const SmootherSpec> pre,
                      std::span<const SmootherSpec> post);
CycleIR encode_vcycle(const AmgHierarchy& hierarchy, const SmootherSpec& pre,
                      const SmootherSpec& post);

/// Hand-tuned BoomerAMG-style V-cycle configurations.
struct ReferenceConfig {
    std::string name;
    bool cf_ordering = false;
    std::vector<SmootherSpec> pre;
    std::vector<SmootherSpec> post;
};

inline const std::vector<std::string>& reference_names()
{
    static const std::vector<std::string> names{"default", "tuned-1", "tuned-2", "tuned-3",
                                                "tuned-4"};
    return names;
}

/// Throws ParameterError for names outside reference_names().
ReferenceConfig reference_config(const std::string& name);
CycleIR encode_reference(const std::string& name, const AmgHierarchy& hierarchy);

/// Nonzeros touched by one application of the cycle (coarse solves count n^2).
std::uint64_t cycle_work_units(const CycleIR& ir, const AmgHierarchy& hierarchy);

// Serialization ------------------------------------------------------------

/// Line-oriented text, one step per line:
///   flexamg-cycle 1
///   n_flex 2
///   tail gs-sym/cf/wi=1.0/wo=1.0/s=1
///   smooth 0 gs-fwd/lex/wi=1.0/wo=1.0/s=1
///   restrict 0 1
///   tail-solve 1
///   correct 1 0 alpha=1.0
std::string to_text(const CycleIR& ir);
/// The same content on one line with "; " separators.
std::string to_compact(const CycleIR& ir);
/// Accepts newline- or ';'-separated input; errors name the line.
CycleIR parse_cycle_text(const std::string& text);

std::string to_json(const CycleIR& ir);
CycleIR parse_cycle_json(const std::string& json_text);

/// CSV rows (step, level, op, detail): the level reached after each step.
std::string trace_table(const CycleIR& ir);

} // namespace flexamg
