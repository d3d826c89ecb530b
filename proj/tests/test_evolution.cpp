#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>

#include "flexamg/errors.hpp"
#include "flexamg/evolution.hpp"
#include "flexamg/problems.hpp"
#include "support.hpp"

using namespace flexamg;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

/// Rank of every point by repeatedly peeling off the undominated set.
std::vector<int> brute_force_ranks(const std::vector<Point>& pts)
{
    std::vector<int> rank(pts.size(), -1);
    std::size_t assigned = 0;
    for (int r = 0; assigned < pts.size(); ++r) {
        std::vector<std::size_t> layer;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (rank[i] >= 0) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < pts.size() && !dominated; ++j)
                dominated = j != i && rank[j] < 0 && dominates(pts[j], pts[i]);
            if (!dominated) layer.push_back(i);
        }
        for (std::size_t i : layer) rank[i] = r;
        assigned += layer.size();
    }
    return rank;
}

Individual with_fitness(const Genotype& g, double time, Index iters, bool feasible = true)
{
    Individual ind;
    ind.genotype = g;
    ind.fitness = Fitness{time, iters, feasible};
    return ind;
}

struct Setup {
    ProblemInstance problem;
    AmgHierarchy hierarchy;
};

const Setup& poisson17()
{
    static const Setup s = [] {
        ProblemInstance p = poisson_2d(17);
        AmgHierarchy h = build_hierarchy(p.matrix, {}, p.row_partition);
        return Setup{std::move(p), std::move(h)};
    }();
    return s;
}

EvolutionConfig small_config(std::uint64_t seed)
{
    EvolutionConfig c;
    c.mu = 8;
    c.lambda = 8;
    c.generations = 4;
    c.init_factor = 2;
    c.seed = seed;
    return c;
}

} // namespace

TEST_CASE("dominance")
{
    CHECK(dominates(Point{1, 1}, Point{2, 2}));
    CHECK(dominates(Point{1, 2}, Point{1, 3}));
    CHECK(!dominates(Point{1, 2}, Point{1, 2}));
    CHECK(!dominates(Point{1, 2}, Point{2, 1}));
    const Fitness bad = infeasible_fitness({});
    CHECK(!bad.feasible);
    CHECK(bad.iterations == 5000);
    CHECK(dominates(Fitness{1e12, 4999, true}, bad));
}

TEST_CASE("nondominated_sort")
{
    const std::vector<Point> three{{1, 2}, {2, 1}, {3, 3}};
    const auto fronts = nondominated_sort(three);
    REQUIRE(fronts.size() == 2);
    CHECK(fronts[0] == std::vector<std::size_t>{0, 1});
    CHECK(fronts[1] == std::vector<std::size_t>{2});

    const std::vector<Point> same(5, Point{2, 2});
    CHECK(nondominated_sort(same).size() == 1);
    CHECK(nondominated_sort(same)[0].size() == 5);
    CHECK(nondominated_sort(std::vector<Point>{}).empty());

    Rng rng(1);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(100);
        std::vector<Point> pts(n);
        // Coarse integer grid so ties and duplicates are common.
        for (auto& p : pts) p = {static_cast<double>(rng.index(12)), static_cast<double>(rng.index(12))};
        const auto ranks = brute_force_ranks(pts);
        const auto fr = nondominated_sort(pts);
        std::vector<int> got(n, -1);
        for (std::size_t r = 0; r < fr.size(); ++r)
            for (std::size_t i : fr[r]) got[i] = static_cast<int>(r);
        if (got != ranks) ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("crowding distance")
{
    const std::vector<Point> one{{1, 1}};
    CHECK(crowding_distance(one, {0}) == std::vector<double>{inf});
    const std::vector<Point> two{{1, 2}, {2, 1}};
    CHECK(crowding_distance(two, {0, 1}) == std::vector<double>{inf, inf});
    const std::vector<Point> three{{0, 2}, {1, 1}, {2, 0}};
    const auto d = crowding_distance(three, {0, 1, 2});
    CHECK(d[0] == inf);
    CHECK(d[2] == inf);
    CHECK(d[1] == doctest::Approx(2.0));

    // Interior gaps are normalized by each objective's range.
    const std::vector<Point> four{{0, 30}, {1, 20}, {3, 10}, {4, 0}};
    const auto d4 = crowding_distance(four, {0, 1, 2, 3});
    CHECK(d4[1] == doctest::Approx(3.0 / 4.0 + 20.0 / 30.0));
    CHECK(d4[2] == doctest::Approx(3.0 / 4.0 + 20.0 / 30.0));
}

TEST_CASE("parent selection")
{
    const Grammar g(1, false);
    const Genotype gt = derive_random(g, 0);
    std::vector<Individual> pop;
    for (int k = 0; k < 4; ++k) pop.push_back(with_fitness(gt, 1.0 + k, 10 - k));
    pop.push_back(with_fitness(gt, 10.0, 20));
    pop.push_back(with_fitness(gt, 11.0, 21));
    assign_rank_and_crowding(pop);
    CHECK(*pop[0].rank == 0);
    CHECK(*pop[4].rank == 1);
    CHECK(*pop[5].rank == 2);

    Rng rng(3);
    const auto picks = select_parents(pop, 10000, rng);
    std::map<int, int> by_rank;
    for (std::size_t i : picks) ++by_rank[*pop[i].rank];
    CHECK(by_rank[0] > by_rank[1]);
    CHECK(by_rank[1] > by_rank[2]);
    // The worst individual only wins against itself.
    CHECK(by_rank[2] == doctest::Approx(10000.0 / 36.0).epsilon(0.25));

    // Equal rank and crowding: choices are roughly uniform.
    std::vector<Individual> flat(4, with_fitness(gt, 1.0, 1));
    for (auto& ind : flat) {
        ind.rank = 0;
        ind.crowding = 1.0;
    }
    std::vector<int> counts(4, 0);
    for (std::size_t i : select_parents(flat, 8000, rng)) ++counts[i];
    for (int c : counts) CHECK(c == doctest::Approx(2000).epsilon(0.1));

    std::vector<Individual> unranked(2, with_fitness(gt, 1.0, 1));
    CHECK_THROWS_AS(select_parents(unranked, 1, rng), ContractViolation);
}

TEST_CASE("truncate")
{
    const Grammar g = Grammar::for_hierarchy(poisson17().hierarchy);
    Rng rng(5);
    const auto genos = init_population(g, 10, 1, rng);
    std::vector<Individual> merged;
    // Front of four, then dominated points, then a copy of a phenotype.
    merged.push_back(with_fitness(genos[0], 1, 8));
    merged.push_back(with_fitness(genos[1], 2, 6));
    merged.push_back(with_fitness(genos[2], 4, 4));
    merged.push_back(with_fitness(genos[3], 8, 2));
    merged.push_back(with_fitness(genos[4], 9, 9));
    merged.push_back(with_fitness(genos[5], 9, 10));
    merged.push_back(with_fitness(genos[0], 1, 8));
    merged.push_back(with_fitness(genos[6], 20, 50, false));

    const auto keep5 = truncate(merged, 5);
    REQUIRE(keep5.size() == 5);
    for (int k = 0; k < 4; ++k) CHECK(keep5[k].genotype.key == genos[k].key);
    CHECK(keep5[4].genotype.key == genos[4].key);

    // Cutting the first front keeps both extremes.
    const auto keep2 = truncate(merged, 2);
    REQUIRE(keep2.size() == 2);
    CHECK(keep2[0].genotype.key == genos[0].key);
    CHECK(keep2[1].genotype.key == genos[3].key);

    // Duplicated phenotypes are kept once.
    const auto all = truncate(merged, 100);
    CHECK(all.size() == 7);
    CHECK(all.back().genotype.key == genos[6].key);
}

TEST_CASE("hypervolume")
{
    const std::vector<Point> pts{{1, 3}, {2, 2}, {3, 1}};
    CHECK(hypervolume(pts, {4, 4}) == doctest::Approx(3 + 2 + 1));
    const std::vector<Point> with_dominated{{1, 3}, {2, 2}, {3, 1}, {3, 3}};
    CHECK(hypervolume(with_dominated, {4, 4}) == doctest::Approx(6));
    const std::vector<Point> outside{{5, 1}};
    CHECK(hypervolume(outside, {4, 4}) == 0.0);
}

TEST_CASE("pareto_front")
{
    const Grammar g = Grammar::for_hierarchy(poisson17().hierarchy);
    Rng rng(6);
    const auto genos = init_population(g, 6, 1, rng);
    std::vector<Individual> pop{with_fitness(genos[0], 5, 3)};
    ParetoFront single = pareto_front(pop);
    REQUIRE(single.members.size() == 1);
    CHECK(single.members[0].name == "GP-0");

    pop = {with_fitness(genos[0], 1, 2), with_fitness(genos[1], 2, 1), with_fitness(genos[2], 3, 3),
           with_fitness(genos[3], 0.5, 100, false), with_fitness(genos[0], 1, 2)};
    const ParetoFront f = pareto_front(pop);
    REQUIRE(f.members.size() == 2);
    CHECK(f.members[0].fitness.iterations == 1);
    CHECK(f.members[1].fitness.iterations == 2);
    CHECK(f.members[1].name == "GP-1");

    // Random populations: no member is dominated by any feasible individual.
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Individual> p;
        for (std::size_t k = 0; k < genos.size(); ++k)
            p.push_back(with_fitness(genos[k], static_cast<double>(rng.index(10)), rng.index(10), rng.index(5) != 0));
        for (const auto& m : pareto_front(p).members)
            for (const auto& ind : p)
                if (ind.fitness->feasible) CHECK(!dominates(*ind.fitness, m.fitness));
    }
}

TEST_CASE("fitness evaluation")
{
    const Setup& s = poisson17();
    const SolverParams params;
    const CycleIR def = encode_reference("default", s.hierarchy);
    const Fitness f = evaluate_fitness(def, s.problem, s.hierarchy, params, CostMode::WorkUnits);
    CHECK(f.feasible);
    CHECK(f.time_per_iteration == static_cast<double>(s.problem.matrix.nnz() + cycle_work_units(def, s.hierarchy)));
    const Fitness wall = evaluate_fitness(def, s.problem, s.hierarchy, params, CostMode::Wallclock);
    CHECK(wall.feasible);
    CHECK(wall.iterations == f.iterations);
    CHECK(wall.time_per_iteration > 0.0);
    CHECK(wall.time_per_iteration < 1.0);

    // Heavily over-relaxed Jacobi: whatever happens, failures map to the sentinel.
    const SmootherSpec jac{SmootherKind::Jacobi, RelaxOrdering::Lexicographic, 1.9, 1.9, 4};
    const std::vector<SmootherSpec> many(4, jac);
    const CycleIR wild = encode_vcycle(s.hierarchy, many, many);
    const Fitness w = evaluate_fitness(wild, s.problem, s.hierarchy, params, CostMode::WorkUnits);
    const SolveReport report = gmres(s.problem.matrix, s.problem.rhs, wild, s.hierarchy, params).report;
    CHECK(w.feasible == report.converged);
    if (!w.feasible) CHECK(w == infeasible_fitness(params));

    SolverParams tight = params;
    tight.maxiter = 1;
    CHECK(evaluate_fitness(def, s.problem, s.hierarchy, tight, CostMode::WorkUnits) == infeasible_fitness(tight));

    CHECK(parse_cost_mode("work-units") == CostMode::WorkUnits);
    CHECK(parse_cost_mode("wallclock") == CostMode::Wallclock);
    CHECK_THROWS_AS(parse_cost_mode("seconds"), ParameterError);
}

TEST_CASE("evolve")
{
    const Setup& s = poisson17();
    SUBCASE("zero generations returns the evaluated initial population")
    {
        EvolutionConfig c = small_config(1);
        c.generations = 0;
        const EvolutionResult r = evolve(c, s.problem, s.hierarchy);
        CHECK(r.population.size() == c.mu);
        for (const auto& ind : r.population) {
            CHECK(ind.fitness.has_value());
            CHECK(ind.rank.has_value());
        }
        CHECK(r.history.size() == 1);
        CHECK(!r.front.members.empty());
    }
    SUBCASE("elitism and determinism")
    {
        const EvolutionConfig c = small_config(3);
        std::vector<std::size_t> seen;
        const EvolutionResult a = evolve(c, s.problem, s.hierarchy,
                                         [&](const GenerationRecord& rec) { seen.push_back(rec.generation); });
        CHECK(seen.size() == c.generations + 1);
        REQUIRE(a.history.size() == c.generations + 1);
        Point ref{0, 0};
        for (const auto& rec : a.history)
            for (const auto& f : rec.fitness)
                if (f.feasible) ref = {std::max(ref[0], 2 * f.time_per_iteration), std::max(ref[1], 2.0 * f.iterations)};
        double last_best = inf;
        double last_hv = -1.0;
        for (const auto& rec : a.history) {
            CHECK(rec.best_aggregate <= last_best);
            last_best = rec.best_aggregate;
            std::vector<Point> pts;
            for (const auto& f : rec.fitness)
                if (f.feasible) pts.push_back(objectives(f));
            const double hv = hypervolume(pts, ref);
            CHECK(hv >= last_hv);
            last_hv = hv;
            CHECK(rec.fitness.size() == rec.ir_text.size());
        }
        for (const auto& ind : a.population) CHECK(validate(ind.genotype.ir, s.hierarchy).ok());

        EvolutionConfig c2 = c;
        c2.jobs = 3;
        const EvolutionResult b = evolve(c2, s.problem, s.hierarchy);
        REQUIRE(a.population.size() == b.population.size());
        for (std::size_t k = 0; k < a.population.size(); ++k) {
            CHECK(a.population[k].genotype.key == b.population[k].genotype.key);
            CHECK(*a.population[k].fitness == *b.population[k].fitness);
        }
        for (std::size_t gen = 0; gen < a.history.size(); ++gen) CHECK(a.history[gen].ir_text == b.history[gen].ir_text);
    }
    SUBCASE("configuration checks")
    {
        EvolutionConfig c = small_config(0);
        c.crossover_prob = 0.95;
        CHECK_THROWS_AS(evolve(c, s.problem, s.hierarchy), ParameterError);
        c = small_config(0);
        c.mu = 0;
        CHECK_THROWS_AS(evolve(c, s.problem, s.hierarchy), ParameterError);
    }
}
