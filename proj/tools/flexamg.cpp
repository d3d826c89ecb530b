// Command-line front end: optimize, evaluate, compare, gen-problem, encode-reference.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flexamg/errors.hpp"
#include "flexamg/harness.hpp"

using namespace flexamg;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string problem;
    std::string cost_mode;
    std::string out;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
};

void add_common(CLI::App* cmd, CommonFlags& f)
{
    cmd->add_option("--config", f.config_path, "key = value configuration file");
    cmd->add_option("--problem", f.problem, "problem spec, e.g. \"poisson_2d n=33\"");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--jobs", f.jobs, "worker threads for fitness evaluation");
    cmd->add_option("--cost-mode", f.cost_mode, "work-units or wallclock");
    cmd->add_option("--out", f.out, "output directory or file");
    cmd->add_option("--set", f.overrides, "override a config field, key=value (repeatable)");
}

RunConfig resolve(const CommonFlags& f)
{
    RunConfig c = f.config_path.empty() ? RunConfig{} : load_config(f.config_path);
    for (const auto& o : f.overrides) c.apply_override(o);
    if (!f.problem.empty()) c.set("problem", f.problem);
    if (f.seed) c.evo.seed = *f.seed;
    if (f.jobs) c.set("evo.jobs", std::to_string(*f.jobs));
    if (!f.cost_mode.empty()) c.set("cost_mode", f.cost_mode);
    if (!f.out.empty()) c.out = f.out;
    return c;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Grammar-guided search for flexible AMG cycles"};
    app.require_subcommand(1);

    CommonFlags f;
    std::string ir_path;
    std::string front_dir;
    std::string ref_name;

    auto* optimize = app.add_subcommand("optimize", "evolve flexible cycles and export the Pareto front");
    add_common(optimize, f);

    auto* evaluate = app.add_subcommand("evaluate", "solve once with a cycle file as preconditioner");
    add_common(evaluate, f);
    evaluate->add_option("ir", ir_path, "cycle file")->required();

    auto* compare = app.add_subcommand("compare", "evaluate a front against the reference cycles");
    add_common(compare, f);
    compare->add_option("front", front_dir, "directory written by optimize")->required();

    auto* gen = app.add_subcommand("gen-problem", "write a generated problem as Matrix Market");
    add_common(gen, f);

    auto* encode = app.add_subcommand("encode-reference", "print a reference V-cycle as cycle text");
    add_common(encode, f);
    encode->add_option("name", ref_name, "default, tuned-1, tuned-2, tuned-3 or tuned-4")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (optimize->parsed()) {
            const RunConfig c = resolve(f);
            cmd_optimize(c, std::cerr);
        } else if (evaluate->parsed()) {
            const std::string out = f.out;
            f.out.clear();
            std::cout << cmd_evaluate(ir_path, resolve(f), out);
        } else if (compare->parsed()) {
            const std::string out = f.out;
            f.out.clear();
            std::cout << compare_csv(cmd_compare(front_dir, resolve(f), out));
        } else if (gen->parsed()) {
            const RunConfig c = resolve(f);
            cmd_gen_problem(c, c.out);
        } else if (encode->parsed()) {
            const std::string out = f.out;
            f.out.clear();
            const std::string text = cmd_encode_reference(ref_name, resolve(f));
            if (out.empty()) {
                std::cout << text;
            } else {
                std::ofstream(out) << text;
            }
        }
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const SetupError& e) {
        std::cerr << "setup failed: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
