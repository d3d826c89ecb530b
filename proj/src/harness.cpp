#include "flexamg/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "flexamg/errors.hpp"
#include "flexamg/matrix_market.hpp"

namespace fs = std::filesystem;

namespace flexamg {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
T parse_number(const std::string& key, const std::string& value)
{
    try {
        std::size_t pos = 0;
        T out;
        if constexpr (std::is_floating_point_v<T>) {
            out = static_cast<T>(std::stod(value, &pos));
        } else {
            if (!value.empty() && value[0] == '-') throw std::invalid_argument("");
            out = static_cast<T>(std::stoull(value, &pos));
        }
        if (pos != value.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        throw UsageError("config field '" + key + "': cannot parse '" + value + "'");
    }
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path.string());
    out << text;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string provenance(const RunConfig& config)
{
    return "config_hash=" + config.hash() + " seed=" + std::to_string(config.evo.seed);
}

const ProblemSpec& require_problem(const RunConfig& config)
{
    if (!config.problem) throw UsageError("config field 'problem' is required");
    return *config.problem;
}

} // namespace

std::string fnv1a_hex(const std::string& data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

const std::vector<std::string>& RunConfig::keys()
{
    static const std::vector<std::string> k{
        "problem",          "setup.strength_threshold", "setup.max_row_sum", "setup.max_levels",
        "setup.min_coarse_size", "evo.mu",              "evo.lambda",        "evo.generations",
        "evo.crossover_prob", "evo.mutation_prob",      "evo.init_factor",   "evo.depth_limit",
        "evo.max_flex",     "evo.jobs",                 "solver.rtol",       "solver.atol",
        "solver.restart",   "solver.maxiter",           "cost_mode",         "seed",
        "out"};
    return k;
}

void RunConfig::set(const std::string& key, const std::string& raw)
{
    const std::string value = trim(raw);
    if (key == "problem") {
        if (value.empty()) throw UsageError("config field 'problem': empty problem name");
        try {
            problem = ProblemSpec::parse(value);
        } catch (const std::exception& e) {
            throw UsageError("config field 'problem': " + std::string(e.what()));
        }
    } else if (key == "setup.strength_threshold") {
        setup.strength_threshold = parse_number<double>(key, value);
    } else if (key == "setup.max_row_sum") {
        setup.max_row_sum = parse_number<double>(key, value);
    } else if (key == "setup.max_levels") {
        setup.max_levels = parse_number<Index>(key, value);
    } else if (key == "setup.min_coarse_size") {
        setup.min_coarse_size = parse_number<Index>(key, value);
    } else if (key == "evo.mu") {
        evo.mu = parse_number<std::size_t>(key, value);
    } else if (key == "evo.lambda") {
        evo.lambda = parse_number<std::size_t>(key, value);
    } else if (key == "evo.generations") {
        evo.generations = parse_number<std::size_t>(key, value);
    } else if (key == "evo.crossover_prob") {
        evo.crossover_prob = parse_number<double>(key, value);
    } else if (key == "evo.mutation_prob") {
        evo.mutation_prob = parse_number<double>(key, value);
    } else if (key == "evo.init_factor") {
        evo.init_factor = parse_number<std::size_t>(key, value);
    } else if (key == "evo.depth_limit") {
        evo.depth_limit = static_cast<int>(parse_number<unsigned>(key, value));
    } else if (key == "evo.max_flex") {
        evo.max_flex = parse_number<Index>(key, value);
    } else if (key == "evo.jobs") {
        evo.jobs = parse_number<unsigned>(key, value);
    } else if (key == "solver.rtol") {
        evo.solver.rtol = parse_number<double>(key, value);
    } else if (key == "solver.atol") {
        evo.solver.atol = parse_number<double>(key, value);
    } else if (key == "solver.restart") {
        evo.solver.restart = parse_number<Index>(key, value);
    } else if (key == "solver.maxiter") {
        evo.solver.maxiter = parse_number<Index>(key, value);
    } else if (key == "cost_mode") {
        try {
            evo.cost_mode = parse_cost_mode(value);
        } catch (const ParameterError& e) {
            throw UsageError("config field 'cost_mode': " + std::string(e.what()));
        }
    } else if (key == "seed") {
        evo.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "out") {
        if (value.empty()) throw UsageError("config field 'out': empty path");
        out = value;
    } else {
        throw UsageError("unknown config field '" + key + "'");
    }
}

void RunConfig::apply_override(const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw UsageError("override '" + assignment + "' is not key=value");
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::map<std::string, std::string> RunConfig::values() const
{
    return {
        {"problem", problem ? problem->to_string() : ""},
        {"setup.strength_threshold", num(setup.strength_threshold)},
        {"setup.max_row_sum", num(setup.max_row_sum)},
        {"setup.max_levels", std::to_string(setup.max_levels)},
        {"setup.min_coarse_size", std::to_string(setup.min_coarse_size)},
        {"evo.mu", std::to_string(evo.mu)},
        {"evo.lambda", std::to_string(evo.lambda)},
        {"evo.generations", std::to_string(evo.generations)},
        {"evo.crossover_prob", num(evo.crossover_prob)},
        {"evo.mutation_prob", num(evo.mutation_prob)},
        {"evo.init_factor", std::to_string(evo.init_factor)},
        {"evo.depth_limit", std::to_string(evo.depth_limit)},
        {"evo.max_flex", std::to_string(evo.max_flex)},
        {"evo.jobs", std::to_string(evo.jobs)},
        {"solver.rtol", num(evo.solver.rtol)},
        {"solver.atol", num(evo.solver.atol)},
        {"solver.restart", std::to_string(evo.solver.restart)},
        {"solver.maxiter", std::to_string(evo.solver.maxiter)},
        {"cost_mode", to_string(evo.cost_mode)},
        {"seed", std::to_string(evo.seed)},
        {"out", out},
    };
}

std::string RunConfig::canonical() const
{
    std::string text;
    for (const auto& [k, v] : values())
        if (k != "evo.jobs" && k != "out") text += k + "=" + v + "\n";
    return text;
}

std::string RunConfig::hash() const
{
    return fnv1a_hex(canonical());
}

RunConfig parse_config(const std::string& text)
{
    RunConfig config;
    std::istringstream in(text);
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return config;
}

RunConfig load_config(const std::string& path)
{
    return parse_config(read_file(path));
}

Prepared prepare(const ProblemSpec& spec, const SetupParams& setup)
{
    ProblemInstance problem;
    try {
        problem = make_problem(spec);
    } catch (const ParameterError& e) {
        throw UsageError("problem '" + spec.to_string() + "': " + e.what());
    }
    AmgHierarchy h = build_hierarchy(problem.matrix, setup, problem.row_partition);
    return {std::move(problem), std::move(h)};
}

std::vector<std::string> substitutions(const RunConfig& config)
{
    return {
        "coarsening: classical Ruge-Stueben in place of Falgout (serial setup)",
        "interpolation: classical direct in place of Extended+i",
        "processor blocks emulated by contiguous row blocks; hybrid smoothers read off-block values from the sweep start",
        "tail below the flexible region: V(1,1) hybrid symmetric Gauss-Seidel, CF ordering, dense LU at the bottom",
        "coarse solve: dense LU in place of Gaussian elimination on a gathered system",
        "mutation_prob " + num(config.evo.mutation_prob) + " (offspring use crossover or mutation, never both)",
        "GMRES restart " + std::to_string(config.evo.solver.restart) + ", maxiter " +
            std::to_string(config.evo.solver.maxiter) + ", modified Gram-Schmidt, right preconditioning",
        "initial population factor read as factor * mu random candidates",
        "cost mode " + to_string(config.evo.cost_mode) +
            (config.evo.cost_mode == CostMode::WorkUnits
                 ? ": time per iteration measured as nonzeros touched by one matrix product and one cycle"
                 : ": time per iteration is the median of 5 timed cycle applications plus a matrix product"),
    };
}

FrontFormat parse_front_format(const std::string& text)
{
    if (text == "json") return FrontFormat::Json;
    if (text == "csv") return FrontFormat::Csv;
    throw UsageError("unknown front format '" + text + "' (expected json or csv)");
}

std::string export_front(const ParetoFront& front, FrontFormat format, const RunConfig& config)
{
    if (format == FrontFormat::Csv) {
        std::string out = "# " + provenance(config) + "\n";
        out += "name,time_per_iter,iterations,aggregate,ir_text\n";
        for (const auto& m : front.members)
            out += m.name + "," + num(m.fitness.time_per_iteration) + "," + std::to_string(m.fitness.iterations) +
                   "," + num(m.fitness.aggregate()) + "," + to_compact(m.genotype.ir) + "\n";
        return out;
    }
    nlohmann::ordered_json j;
    j["config_hash"] = config.hash();
    j["seed"] = config.evo.seed;
    j["problem"] = config.problem ? config.problem->to_string() : "";
    j["cost_mode"] = to_string(config.evo.cost_mode);
    j["members"] = nlohmann::ordered_json::array();
    for (const auto& m : front.members) {
        nlohmann::ordered_json e;
        e["name"] = m.name;
        e["time_per_iter"] = m.fitness.time_per_iteration;
        e["iterations"] = m.fitness.iterations;
        e["aggregate"] = m.fitness.aggregate();
        e["ir"] = to_text(m.genotype.ir);
        e["genotype"] = to_sexpr(m.genotype.root);
        j["members"].push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

std::string export_history(const std::vector<GenerationRecord>& history, const RunConfig& config)
{
    std::string out = "# " + provenance(config) + "\n";
    out += "generation,index,time_per_iter,iterations,ir_text\n";
    for (const auto& g : history)
        for (std::size_t k = 0; k < g.fitness.size(); ++k)
            out += std::to_string(g.generation) + "," + std::to_string(k) + "," + num(g.fitness[k].time_per_iteration) +
                   "," + std::to_string(g.fitness[k].iterations) + "," + g.ir_text[k] + "\n";
    return out;
}

std::string export_history_summary(const std::vector<GenerationRecord>& history, const RunConfig& config)
{
    std::string out = "# " + provenance(config) + "\n";
    out += "generation,best_aggregate,best_time_per_iter,best_iterations,median_time_per_iter,median_iterations,"
           "feasible\n";
    for (const auto& g : history)
        out += std::to_string(g.generation) + "," + num(g.best_aggregate) + "," + num(g.best_time) + "," +
               num(g.best_iterations) + "," + num(g.median_time) + "," + num(g.median_iterations) + "," +
               std::to_string(g.feasible) + "\n";
    return out;
}

OptimizeSummary cmd_optimize(const RunConfig& config, std::ostream& log)
{
    const ProblemSpec& spec = require_problem(config);
    try {
        config.setup.check();
        config.evo.check();
    } catch (const ParameterError& e) {
        throw UsageError(e.what());
    }
    const Prepared prep = prepare(spec, config.setup);
    log << "problem " << spec.to_string() << ": " << prep.problem.matrix.rows() << " rows, "
        << prep.hierarchy.depth() << " levels\n";

    const EvolutionResult result = evolve(config.evo, prep.problem, prep.hierarchy, [&](const GenerationRecord& g) {
        log << "generation " << g.generation << ": feasible " << g.feasible << ", best aggregate "
            << num(g.best_aggregate) << "\n";
    });

    const fs::path dir(config.out);
    fs::create_directories(dir / "ir");
    write_file(dir / "front.json", export_front(result.front, FrontFormat::Json, config));
    write_file(dir / "front.csv", export_front(result.front, FrontFormat::Csv, config));
    write_file(dir / "history.csv", export_history(result.history, config));
    write_file(dir / "history_summary.csv", export_history_summary(result.history, config));
    for (const auto& m : result.front.members)
        write_file(dir / "ir" / (m.name + ".ir"), "# " + m.name + " " + provenance(config) + "\n" + to_text(m.genotype.ir));

    nlohmann::ordered_json meta;
    meta["config_hash"] = config.hash();
    meta["seed"] = config.evo.seed;
    meta["config"] = config.values();
    meta["grammar"] = {{"n_flex", result.grammar.n_flex()},
                       {"coarse_bottom", result.grammar.coarse_bottom()},
                       {"depth_limit", result.grammar.depth_limit()}};
    meta["hierarchy"] = nlohmann::json::parse(prep.hierarchy.stats_json());
    meta["substitutions"] = substitutions(config);
    meta["front_size"] = result.front.members.size();
    write_file(dir / "metadata.json", meta.dump(2) + "\n");

    log << "front: " << result.front.members.size() << " members written to " << dir.string() << "\n";
    if (result.front.members.empty()) throw NumericalFailure("no individual converged");
    return {dir.string(), result.front.members.size()};
}

std::string cmd_evaluate(const std::string& ir_path, const RunConfig& config, const std::string& out_path)
{
    const ProblemSpec& spec = require_problem(config);
    const CycleIR ir = parse_cycle_text(read_file(ir_path));
    const Prepared prep = prepare(spec, config.setup);
    const ValidationResult v = validate(ir, prep.hierarchy);
    if (!v.ok()) throw UsageError("cycle does not fit the problem hierarchy:\n" + v.describe());
    const SolveResult res = gmres(prep.problem.matrix, prep.problem.rhs, ir, prep.hierarchy, config.evo.solver);
    const std::string json = res.report.to_json() + "\n";
    if (!out_path.empty()) write_file(out_path, json);
    if (!res.report.converged) throw NumericalFailure("solve did not converge:\n" + json);
    return json;
}

std::vector<CompareRow> cmd_compare(const std::string& front_dir, const RunConfig& config, const std::string& out_path)
{
    const ProblemSpec& spec = require_problem(config);
    const fs::path ir_dir = fs::path(front_dir) / "ir";
    if (!fs::is_directory(ir_dir)) throw UsageError("no ir directory in " + front_dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(ir_dir))
        if (e.path().extension() == ".ir") files.push_back(e.path());
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        // GP-2 before GP-10.
        const auto sa = a.stem().string();
        const auto sb = b.stem().string();
        if (sa.size() != sb.size()) return sa.size() < sb.size();
        return sa < sb;
    });

    const Prepared prep = prepare(spec, config.setup);
    std::vector<CompareRow> rows;
    auto eval = [&](const std::string& name, const CycleIR& ir) {
        rows.push_back({name, evaluate_fitness(ir, prep.problem, prep.hierarchy, config.evo.solver, config.evo.cost_mode),
                        0.0, 0.0});
    };
    for (const auto& f : files) {
        const CycleIR ir = parse_cycle_text(read_file(f.string()));
        const ValidationResult v = validate(ir, prep.hierarchy, {.check_sample_sets = false});
        if (!v.ok()) throw UsageError(f.string() + " does not fit the problem hierarchy:\n" + v.describe());
        eval(f.stem().string(), ir);
    }
    for (const auto& name : reference_names()) eval(name, encode_reference(name, prep.hierarchy));

    auto aggregate_of = [&](const std::string& name) {
        for (auto it = rows.rbegin(); it != rows.rend(); ++it)
            if (it->name == name) return it->fitness.feasible ? it->fitness.aggregate() : std::numeric_limits<double>::infinity();
        return std::numeric_limits<double>::infinity();
    };
    const double agg_default = aggregate_of("default");
    const double agg_tuned1 = aggregate_of("tuned-1");
    for (auto& r : rows) {
        const double agg = r.fitness.feasible ? r.fitness.aggregate() : std::numeric_limits<double>::infinity();
        r.eta_default = agg_default / agg;
        r.eta_tuned1 = agg_tuned1 / agg;
    }
    if (!out_path.empty()) write_file(out_path, compare_csv(rows));
    return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows)
{
    std::string out = "name,time_per_iter,iterations,aggregate,eta1,eta2\n";
    for (const auto& r : rows) {
        const bool ok = r.fitness.feasible;
        out += r.name + "," + (ok ? num(r.fitness.time_per_iteration) : "inf") + "," +
               (ok ? std::to_string(r.fitness.iterations) : "inf") + "," + (ok ? num(r.fitness.aggregate()) : "inf") +
               "," + num(r.eta_default) + "," + num(r.eta_tuned1) + "\n";
    }
    return out;
}

void cmd_gen_problem(const RunConfig& config, const std::string& out_dir)
{
    const ProblemSpec& spec = require_problem(config);
    ProblemInstance p;
    try {
        p = make_problem(spec);
    } catch (const ParameterError& e) {
        throw UsageError("problem '" + spec.to_string() + "': " + e.what());
    }
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_matrix_market((dir / "matrix.mtx").string(), p.matrix);
    write_matrix_market_vector((dir / "rhs.mtx").string(), p.rhs);
    nlohmann::ordered_json j;
    j["problem"] = spec.to_string();
    j["rows"] = p.matrix.rows();
    j["nnz"] = p.matrix.nnz();
    j["row_partition"] = p.row_partition.offsets;
    if (p.dof_blocks) {
        j["displacement_rows"] = p.dof_blocks->displacement.size();
        j["temperature_rows"] = p.dof_blocks->temperature.size();
    }
    write_file(dir / "problem.json", j.dump(2) + "\n");
}

std::string cmd_encode_reference(const std::string& name, const RunConfig& config)
{
    const ProblemSpec& spec = require_problem(config);
    try {
        reference_config(name);
    } catch (const ParameterError& e) {
        throw UsageError(e.what());
    }
    const Prepared prep = prepare(spec, config.setup);
    return "# reference " + name + " on " + spec.to_string() + "\n" + to_text(encode_reference(name, prep.hierarchy));
}

} // namespace flexamg
