#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flexamg/grammar.hpp"
#include "flexamg/krylov.hpp"
#include "flexamg/problems.hpp"

namespace flexamg {

enum class CostMode { WorkUnits, Wallclock };

std::string to_string(CostMode mode);
/// "work-units" or "wallclock"; throws ParameterError otherwise.
CostMode parse_cost_mode(const std::string& text);

struct Fitness {
    /// Seconds or work units per iteration, depending on the cost mode.
    double time_per_iteration = 0.0;
    Index iterations = 0;
    bool feasible = false;

    [[nodiscard]] double aggregate() const { return time_per_iteration * static_cast<double>(iterations); }
    friend bool operator==(const Fitness&, const Fitness&) = default;
};

/// Objectives of an unconverged solve; dominated by every feasible fitness.
Fitness infeasible_fitness(const SolverParams& params);

using Point = std::array<double, 2>;

inline Point objectives(const Fitness& f)
{
    return {f.time_per_iteration, static_cast<double>(f.iterations)};
}

/// a is no worse in both objectives and better in at least one.
bool dominates(const Point& a, const Point& b);
inline bool dominates(const Fitness& a, const Fitness& b)
{
    return dominates(objectives(a), objectives(b));
}

struct Individual {
    Genotype genotype;
    std::optional<Fitness> fitness;
    std::optional<int> rank;
    std::optional<double> crowding;
};

struct EvolutionConfig {
    std::size_t mu = 256;
    std::size_t lambda = 256;
    std::size_t generations = 100;
    double crossover_prob = 0.9;
    double mutation_prob = 0.1;
    std::size_t init_factor = 64;
    CostMode cost_mode = CostMode::WorkUnits;
    std::uint64_t seed = 0;
    /// Worker threads for fitness evaluation.
    unsigned jobs = 1;
    int depth_limit = default_depth_limit;
    Index max_flex = default_n_flex;
    SolverParams solver;

    void check() const;
};

Fitness evaluate_fitness(const CycleIR& ir, const ProblemInstance& problem, const AmgHierarchy& hierarchy,
                         const SolverParams& params, CostMode mode);

/// Fronts of indices, best first. Runs in O(m n^2).
std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const Point> points);
/// Distances aligned with `front`; objective-wise extremes get +infinity.
std::vector<double> crowding_distance(std::span<const Point> points, const std::vector<std::size_t>& front);

/// Fills rank and crowding of every (evaluated) individual.
void assign_rank_and_crowding(std::vector<Individual>& population);

/// Binary tournaments on (rank, crowding); returns population indices.
std::vector<std::size_t> select_parents(const std::vector<Individual>& population, std::size_t count, Rng& rng);

/// Drops repeated phenotypes, then keeps `mu` by front and crowding. Within
/// the cut front, the first individual with a given objective vector goes
/// ahead of its copies.
std::vector<Individual> truncate(std::vector<Individual> merged, std::size_t mu);

/// Area dominated by the feasible points of a 2-objective set, bounded by `reference`.
double hypervolume(std::span<const Point> points, const Point& reference);

struct FrontMember {
    std::string name;
    Genotype genotype;
    Fitness fitness;
};

struct ParetoFront {
    std::vector<FrontMember> members;
};

/// Feasible first front, unique phenotypes, sorted by iterations then cost, named GP-0, GP-1, ...
ParetoFront pareto_front(const std::vector<Individual>& population);

struct GenerationRecord {
    std::size_t generation = 0;
    /// Fitness and compact cycle text of every member, in population order.
    std::vector<Fitness> fitness;
    std::vector<std::string> ir_text;
    double best_aggregate = 0.0;
    double best_time = 0.0;
    double best_iterations = 0.0;
    double median_time = 0.0;
    double median_iterations = 0.0;
    std::size_t feasible = 0;
};

struct EvolutionResult {
    std::vector<Individual> population;
    ParetoFront front;
    std::vector<GenerationRecord> history;
    Grammar grammar;
};

using ProgressFn = std::function<void(const GenerationRecord&)>;

EvolutionResult evolve(const EvolutionConfig& config, const ProblemInstance& problem,
                       const AmgHierarchy& hierarchy, const ProgressFn& progress = {});

} // namespace flexamg
