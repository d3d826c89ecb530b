#include "flexamg/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "flexamg/errors.hpp"

namespace flexamg {

std::string to_string(CostMode mode)
{
    return mode == CostMode::WorkUnits ? "work-units" : "wallclock";
}

CostMode parse_cost_mode(const std::string& text)
{
    if (text == "work-units" || text == "work_units") return CostMode::WorkUnits;
    if (text == "wallclock") return CostMode::Wallclock;
    throw ParameterError("unknown cost mode '" + text + "' (expected work-units or wallclock)");
}

Fitness infeasible_fitness(const SolverParams& params)
{
    return {std::numeric_limits<double>::max(), params.maxiter * 10, false};
}

bool dominates(const Point& a, const Point& b)
{
    return a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1]);
}

void EvolutionConfig::check() const
{
    if (mu < 1 || lambda < 1 || init_factor < 1) throw ParameterError("mu, lambda and init_factor must be at least 1");
    if (!(crossover_prob >= 0) || !(mutation_prob >= 0) || crossover_prob + mutation_prob > 1.0 + 1e-12)
        throw ParameterError("crossover_prob and mutation_prob must be non-negative with sum at most 1");
    if (jobs < 1) throw ParameterError("jobs must be at least 1");
    if (!(solver.rtol > 0) || !(solver.atol > 0)) throw ParameterError("solver tolerances must be positive");
    if (solver.restart < 1 || solver.maxiter < 1) throw ParameterError("solver restart and maxiter must be at least 1");
}

namespace {

double median(std::vector<double> v)
{
    if (v.empty()) return std::numeric_limits<double>::infinity();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace

Fitness evaluate_fitness(const CycleIR& ir, const ProblemInstance& problem, const AmgHierarchy& hierarchy,
                         const SolverParams& params, CostMode mode)
{
    SolveReport report;
    try {
        report = gmres(problem.matrix, problem.rhs, ir, hierarchy, params).report;
    } catch (const std::exception&) {
        return infeasible_fitness(params);
    }
    if (!report.converged || report.diverged) return infeasible_fitness(params);

    Fitness f{0.0, report.iterations, true};
    if (mode == CostMode::WorkUnits) {
        f.time_per_iteration = static_cast<double>(report.work_units_per_iteration);
        return f;
    }
    // One iteration is dominated by a preconditioner application and a product.
    CycleRunner runner(ir, hierarchy);
    const Index n = problem.matrix.rows();
    Vector z(n), w(n);
    std::vector<double> samples;
    for (int k = 0; k < 5; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        runner.apply(problem.rhs, z);
        spmv_into(problem.matrix, z, w);
        samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    f.time_per_iteration = median(samples);
    return f;
}

std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const Point> points)
{
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> count(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) continue;
            if (dominates(points[p], points[q]))
                dominated[p].push_back(q);
            else if (dominates(points[q], points[p]))
                ++count[p];
        }
        if (count[p] == 0) fronts[0].push_back(p);
    }
    if (fronts[0].empty()) return {};
    for (std::size_t k = 0; !fronts[k].empty(); ++k) {
        std::vector<std::size_t> next;
        for (std::size_t p : fronts[k])
            for (std::size_t q : dominated[p])
                if (--count[q] == 0) next.push_back(q);
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(next));
    }
    fronts.pop_back();
    return fronts;
}

std::vector<double> crowding_distance(std::span<const Point> points, const std::vector<std::size_t>& front)
{
    const std::size_t m = front.size();
    std::vector<double> dist(m, 0.0);
    if (m <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    std::vector<std::size_t> order(m);
    for (int obj = 0; obj < 2; ++obj) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return points[front[a]][obj] < points[front[b]][obj];
        });
        const double lo = points[front[order.front()]][obj];
        const double hi = points[front[order.back()]][obj];
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        if (!(hi > lo) || !std::isfinite(hi - lo)) continue;
        for (std::size_t k = 1; k + 1 < m; ++k)
            dist[order[k]] += (points[front[order[k + 1]]][obj] - points[front[order[k - 1]]][obj]) / (hi - lo);
    }
    return dist;
}

namespace {

std::vector<Point> points_of(const std::vector<Individual>& pop)
{
    std::vector<Point> pts;
    pts.reserve(pop.size());
    for (const auto& ind : pop) {
        if (!ind.fitness) throw ContractViolation("individual has not been evaluated");
        pts.push_back(objectives(*ind.fitness));
    }
    return pts;
}

} // namespace

void assign_rank_and_crowding(std::vector<Individual>& population)
{
    const auto pts = points_of(population);
    const auto fronts = nondominated_sort(pts);
    for (std::size_t r = 0; r < fronts.size(); ++r) {
        const auto dist = crowding_distance(pts, fronts[r]);
        for (std::size_t k = 0; k < fronts[r].size(); ++k) {
            population[fronts[r][k]].rank = static_cast<int>(r);
            population[fronts[r][k]].crowding = dist[k];
        }
    }
}

std::vector<std::size_t> select_parents(const std::vector<Individual>& population, std::size_t count, Rng& rng)
{
    if (population.empty()) throw ContractViolation("select_parents on an empty population");
    std::vector<std::size_t> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t a = rng.index(population.size());
        const std::size_t b = rng.index(population.size());
        const auto& ia = population[a];
        const auto& ib = population[b];
        if (!ia.rank || !ib.rank) throw ContractViolation("select_parents needs ranked individuals");
        std::size_t win;
        if (*ia.rank != *ib.rank)
            win = *ia.rank < *ib.rank ? a : b;
        else if (*ia.crowding != *ib.crowding)
            win = *ia.crowding > *ib.crowding ? a : b;
        else
            win = rng.index(2) == 0 ? a : b;
        out.push_back(win);
    }
    return out;
}

std::vector<Individual> truncate(std::vector<Individual> merged, std::size_t mu)
{
    std::vector<Individual> unique;
    std::set<std::string> seen;
    for (auto& ind : merged)
        if (seen.insert(ind.genotype.key).second) unique.push_back(std::move(ind));

    const auto pts = points_of(unique);
    const auto fronts = nondominated_sort(pts);
    std::vector<Individual> out;
    for (std::size_t r = 0; r < fronts.size() && out.size() < mu; ++r) {
        const auto& front = fronts[r];
        const auto dist = crowding_distance(pts, front);
        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), 0);
        if (out.size() + front.size() > mu) {
            std::set<Point> first_seen;
            std::vector<char> repeat(front.size(), 0);
            for (std::size_t k = 0; k < front.size(); ++k) repeat[k] = !first_seen.insert(pts[front[k]]).second;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (repeat[a] != repeat[b]) return repeat[a] < repeat[b];
                if (dist[a] != dist[b]) return dist[a] > dist[b];
                return front[a] < front[b];
            });
            order.resize(mu - out.size());
            std::sort(order.begin(), order.end());
        }
        for (std::size_t k : order) {
            Individual ind = unique[front[k]];
            ind.rank = static_cast<int>(r);
            ind.crowding = dist[k];
            out.push_back(std::move(ind));
        }
    }
    return out;
}

double hypervolume(std::span<const Point> points, const Point& reference)
{
    std::vector<Point> pts;
    for (const Point& p : points)
        if (p[0] < reference[0] && p[1] < reference[1]) pts.push_back(p);
    std::sort(pts.begin(), pts.end());
    double area = 0.0;
    double ceiling = reference[1];
    for (const Point& p : pts) {
        if (p[1] >= ceiling) continue;
        area += (reference[0] - p[0]) * (ceiling - p[1]);
        ceiling = p[1];
    }
    return area;
}

ParetoFront pareto_front(const std::vector<Individual>& population)
{
    std::vector<std::size_t> feasible;
    std::vector<Point> pts;
    for (std::size_t k = 0; k < population.size(); ++k) {
        const auto& f = population[k].fitness;
        if (!f) throw ContractViolation("pareto_front needs evaluated individuals");
        if (f->feasible) {
            feasible.push_back(k);
            pts.push_back(objectives(*f));
        }
    }
    ParetoFront front;
    if (feasible.empty()) return front;
    std::set<std::string> seen;
    const auto fronts = nondominated_sort(pts);
    for (std::size_t k : fronts.front()) {
        const Individual& ind = population[feasible[k]];
        if (seen.insert(ind.genotype.key).second)
            front.members.push_back({"", ind.genotype, *ind.fitness});
    }
    std::stable_sort(front.members.begin(), front.members.end(), [](const FrontMember& a, const FrontMember& b) {
        if (a.fitness.iterations != b.fitness.iterations) return a.fitness.iterations < b.fitness.iterations;
        return a.fitness.time_per_iteration < b.fitness.time_per_iteration;
    });
    for (std::size_t k = 0; k < front.members.size(); ++k) front.members[k].name = "GP-" + std::to_string(k);
    return front;
}

namespace {

class Evaluator {
public:
    Evaluator(const EvolutionConfig& cfg, const ProblemInstance& problem, const AmgHierarchy& h)
        : cfg_(cfg)
        , problem_(problem)
        , h_(h)
    {
    }

    /// Evaluates every individual without fitness; results are placed by index.
    void run(std::vector<Individual>& pop)
    {
        std::vector<std::size_t> todo;
        for (std::size_t k = 0; k < pop.size(); ++k) {
            if (pop[k].fitness) continue;
            // Work-unit fitness is a pure function of the phenotype.
            if (cfg_.cost_mode == CostMode::WorkUnits) {
                auto it = cache_.find(pop[k].genotype.key);
                if (it != cache_.end()) {
                    pop[k].fitness = it->second;
                    continue;
                }
            }
            todo.push_back(k);
        }
        std::vector<Fitness> results(todo.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (std::size_t j; (j = next.fetch_add(1)) < todo.size();)
                results[j] = evaluate_fitness(pop[todo[j]].genotype.ir, problem_, h_, cfg_.solver, cfg_.cost_mode);
        };
        const unsigned n_threads = std::min<std::size_t>(cfg_.jobs, todo.size());
        if (n_threads <= 1) {
            worker();
        } else {
            std::vector<std::thread> threads;
            for (unsigned t = 0; t < n_threads; ++t) threads.emplace_back(worker);
            for (auto& t : threads) t.join();
        }
        for (std::size_t j = 0; j < todo.size(); ++j) {
            pop[todo[j]].fitness = results[j];
            if (cfg_.cost_mode == CostMode::WorkUnits) cache_.emplace(pop[todo[j]].genotype.key, results[j]);
        }
    }

private:
    const EvolutionConfig& cfg_;
    const ProblemInstance& problem_;
    const AmgHierarchy& h_;
    std::map<std::string, Fitness> cache_;
};

GenerationRecord record(std::size_t generation, const std::vector<Individual>& pop)
{
    GenerationRecord rec;
    rec.generation = generation;
    std::vector<double> times, iters;
    rec.best_aggregate = std::numeric_limits<double>::infinity();
    rec.best_time = std::numeric_limits<double>::infinity();
    rec.best_iterations = std::numeric_limits<double>::infinity();
    for (const auto& ind : pop) {
        const Fitness& f = *ind.fitness;
        rec.fitness.push_back(f);
        rec.ir_text.push_back(to_compact(ind.genotype.ir));
        if (!f.feasible) continue;
        ++rec.feasible;
        times.push_back(f.time_per_iteration);
        iters.push_back(static_cast<double>(f.iterations));
        rec.best_aggregate = std::min(rec.best_aggregate, f.aggregate());
        rec.best_time = std::min(rec.best_time, f.time_per_iteration);
        rec.best_iterations = std::min(rec.best_iterations, static_cast<double>(f.iterations));
    }
    rec.median_time = median(times);
    rec.median_iterations = median(iters);
    return rec;
}

} // namespace

EvolutionResult evolve(const EvolutionConfig& config, const ProblemInstance& problem,
                       const AmgHierarchy& hierarchy, const ProgressFn& progress)
{
    config.check();
    const Grammar grammar = Grammar::for_hierarchy(hierarchy, config.depth_limit, config.max_flex);
    Rng rng(config.seed);
    Rng init_rng = rng.split(0);
    Rng var_rng = rng.split(1);
    Evaluator evaluator(config, problem, hierarchy);

    std::vector<Individual> pop;
    for (auto& g : init_population(grammar, config.mu, config.init_factor, init_rng))
        pop.push_back(Individual{std::move(g), std::nullopt, std::nullopt, std::nullopt});
    evaluator.run(pop);
    pop = truncate(std::move(pop), config.mu);

    EvolutionResult result{{}, {}, {}, grammar};
    result.history.push_back(record(0, pop));
    if (progress) progress(result.history.back());

    for (std::size_t gen = 1; gen <= config.generations; ++gen) {
        std::vector<Individual> offspring;
        offspring.reserve(config.lambda);
        for (std::size_t k = 0; k < config.lambda; ++k) {
            const double u = var_rng.uniform();
            Genotype child;
            if (u < config.crossover_prob) {
                const auto parents = select_parents(pop, 2, var_rng);
                child = crossover(grammar, pop[parents[0]].genotype, pop[parents[1]].genotype, var_rng).first;
            } else if (u < config.crossover_prob + config.mutation_prob) {
                child = mutate(grammar, pop[select_parents(pop, 1, var_rng)[0]].genotype, var_rng);
            } else {
                child = pop[select_parents(pop, 1, var_rng)[0]].genotype;
            }
            offspring.push_back(Individual{std::move(child), std::nullopt, std::nullopt, std::nullopt});
        }
        evaluator.run(offspring);
        std::vector<Individual> merged = std::move(pop);
        for (auto& o : offspring) merged.push_back(std::move(o));
        pop = truncate(std::move(merged), config.mu);
        result.history.push_back(record(gen, pop));
        if (progress) progress(result.history.back());
    }

    result.front = pareto_front(pop);
    result.population = std::move(pop);
    return result;
}

} // namespace flexamg
