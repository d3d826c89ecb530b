#include "flexamg/cycle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "flexamg/errors.hpp"
#include "flexamg/rng.hpp"

namespace flexamg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string lvl(Index l)
{
    return std::to_string(l);
}

std::string short_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

Index step_level(const Step& step)
{
    return std::visit([](const auto& s) { return s.level; }, step);
}

std::string ValidationResult::describe() const
{
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += '\n';
        out += "step " + std::to_string(v.step) + ": " + v.message;
    }
    return out;
}

ValidationResult validate(const CycleIR& ir, const AmgHierarchy& hierarchy,
                          const ValidationOptions& options)
{
    ValidationResult result;
    auto fail = [&](Index step, std::string msg) { result.violations.push_back({step, std::move(msg)}); };
    const Index depth = hierarchy.depth();
    const Index end = ir.ops.size();

    if (depth == 0) {
        fail(end, "hierarchy has no levels");
        return result;
    }
    if (ir.n_flex + 1 > depth)
        fail(end, "n_flex " + lvl(ir.n_flex) + " exceeds hierarchy depth " + lvl(depth));
    if (ir.ops.empty()) fail(end, "empty cycle");
    if (options.check_sample_sets)
        for (const auto& msg : check_smoother(ir.tail_smoother)) fail(end, "tail smoother: " + msg);

    struct Visit {
        Index level;
        int restricts = 0;
        int bottom = 0;
        int current_run = 0;
        std::vector<int> runs{};
    };
    auto close_visit = [&](Visit& v, Index step) {
        v.runs.push_back(v.current_run);
        if (v.level == ir.n_flex) {
            if (v.bottom < 1 || v.bottom > max_subvisits)
                fail(step, "level " + lvl(v.level) + " visit needs one or two tail or coarse solves");
            return;
        }
        if (v.restricts == 0)
            fail(step, "level " + lvl(v.level) + " visit has no coarse-grid sub-visit");
        for (std::size_t k = 0; k < v.runs.size(); ++k) {
            const bool middle = k > 0 && k + 1 < v.runs.size();
            const int cap = middle ? 2 * max_smooths_per_visit : max_smooths_per_visit;
            if (v.runs[k] > cap)
                fail(step, "level " + lvl(v.level) + " visit has " + std::to_string(v.runs[k]) +
                               " consecutive smoothing steps (max " + std::to_string(cap) + ")");
        }
    };

    std::vector<Visit> stack{Visit{0}};
    for (Index idx = 0; idx < end; ++idx) {
        Visit& cur = stack.back();
        std::visit(
            overloaded{
                [&](const Smooth& s) {
                    if (s.level != cur.level) {
                        fail(idx, "smooth at level " + lvl(s.level) + " while at level " + lvl(cur.level));
                        return;
                    }
                    if (cur.level == ir.n_flex) {
                        fail(idx, "smoothing at level " + lvl(s.level) + " inside the tail region");
                        return;
                    }
                    if (options.check_sample_sets)
                        for (const auto& msg : check_smoother(s.smoother)) fail(idx, msg);
                    else if (s.smoother.sweeps < 1)
                        fail(idx, "sweeps must be positive");
                    ++cur.current_run;
                },
                [&](const Restrict& r) {
                    if (r.level != cur.level) {
                        fail(idx, "restrict from level " + lvl(r.level) + " while at level " + lvl(cur.level));
                        return;
                    }
                    if (r.level + 1 > ir.n_flex || r.level + 1 >= depth) {
                        fail(idx, "restrict below the flexible region at level " + lvl(r.level));
                        return;
                    }
                    cur.runs.push_back(cur.current_run);
                    cur.current_run = 0;
                    if (++cur.restricts > max_subvisits)
                        fail(idx, "more than " + std::to_string(max_subvisits) +
                                      " sub-visits at level " + lvl(r.level));
                    stack.push_back(Visit{r.level + 1});
                },
                [&](const CorrectProlong& c) {
                    if (stack.size() < 2 || cur.level != c.level + 1) {
                        fail(idx, "correction to level " + lvl(c.level) +
                                      " without a matching restriction (at level " + lvl(cur.level) + ")");
                        return;
                    }
                    if (options.check_sample_sets && !sample_set::contains(c.alpha))
                        fail(idx, "alpha outside sample set (" + short_number(c.alpha) + ")");
                    close_visit(cur, idx);
                    stack.pop_back();
                },
                [&](const TailSolve& t) {
                    if (t.level != cur.level || t.level != ir.n_flex) {
                        fail(idx, "tail solve at level " + lvl(t.level) + " (current level " +
                                      lvl(cur.level) + ", n_flex " + lvl(ir.n_flex) + ")");
                        return;
                    }
                    ++cur.bottom;
                },
                [&](const CoarseSolve& c) {
                    if (c.level != cur.level || c.level + 1 != depth || c.level != ir.n_flex) {
                        fail(idx, "coarse solve at level " + lvl(c.level) +
                                      " is not at the coarsest level of the flexible region");
                        return;
                    }
                    ++cur.bottom;
                },
            },
            ir.ops[idx]);
    }
    while (stack.size() > 1) {
        fail(end, "unbalanced at level " + lvl(stack.back().level));
        stack.pop_back();
    }
    if (!ir.ops.empty()) close_visit(stack.back(), end);
    return result;
}

// Execution -----------------------------------------------------------------

CycleRunner::CycleRunner(const CycleIR& ir, const AmgHierarchy& hierarchy)
    : ir_(ir)
    , h_(hierarchy)
{
    const ValidationResult v = validate(ir, hierarchy, {.check_sample_sets = false});
    if (!v.ok()) throw ContractViolation("invalid cycle:\n" + v.describe());
    const Index depth = hierarchy.depth();
    x_.resize(depth);
    b_.resize(depth);
    r_.resize(depth);
    for (Index l = 0; l < depth; ++l) {
        const Index n = hierarchy.levels[l].a.rows();
        x_[l].assign(n, 0.0);
        b_[l].assign(n, 0.0);
        r_[l].assign(n, 0.0);
    }
}

void CycleRunner::tail(Index l)
{
    const AmgLevel& lv = h_.levels[l];
    if (l == h_.coarsest()) {
        h_.coarse_solver().solve_correction(lv.a, b_[l], x_[l]);
        return;
    }
    relax(lv.a, b_[l], x_[l], ir_.tail_smoother, lv.relax);
    residual_into(lv.a, x_[l], b_[l], r_[l]);
    spmv_into(lv.r, r_[l], b_[l + 1]);
    std::fill(x_[l + 1].begin(), x_[l + 1].end(), 0.0);
    tail(l + 1);
    spmv_into(lv.p, x_[l + 1], r_[l]);
    for (Index i = 0; i < x_[l].size(); ++i) x_[l][i] += r_[l][i];
    relax(lv.a, b_[l], x_[l], ir_.tail_smoother, lv.relax);
}

void CycleRunner::apply(std::span<const double> b, std::span<double> out)
{
    if (b.size() != x_[0].size() || out.size() != x_[0].size())
        throw StructuralError("cycle: right-hand side has wrong length");
    std::copy(b.begin(), b.end(), b_[0].begin());
    std::fill(x_[0].begin(), x_[0].end(), 0.0);
    for (const Step& step : ir_.ops) {
        std::visit(overloaded{
                       [&](const Smooth& s) {
                           const AmgLevel& lv = h_.levels[s.level];
                           relax(lv.a, b_[s.level], x_[s.level], s.smoother, lv.relax);
                       },
                       [&](const Restrict& r) {
                           const Index l = r.level;
                           const AmgLevel& lv = h_.levels[l];
                           residual_into(lv.a, x_[l], b_[l], r_[l]);
                           spmv_into(lv.r, r_[l], b_[l + 1]);
                           std::fill(x_[l + 1].begin(), x_[l + 1].end(), 0.0);
                       },
                       [&](const CorrectProlong& c) {
                           const Index l = c.level;
                           spmv_into(h_.levels[l].p, x_[l + 1], r_[l]);
                           for (Index i = 0; i < x_[l].size(); ++i) x_[l][i] += c.alpha * r_[l][i];
                       },
                       [&](const TailSolve& t) { tail(t.level); },
                       [&](const CoarseSolve& c) {
                           h_.coarse_solver().solve_correction(h_.levels[c.level].a, b_[c.level],
                                                               x_[c.level]);
                       },
                   },
                   step);
    }
    std::copy(x_[0].begin(), x_[0].end(), out.begin());
}

Vector execute(const CycleIR& ir, const AmgHierarchy& hierarchy, std::span<const double> b)
{
    CycleRunner runner(ir, hierarchy);
    Vector out(b.size());
    runner.apply(b, out);
    return out;
}

LinearityReport execute_linearity_probe(const CycleIR& ir, const AmgHierarchy& hierarchy,
                                        std::span<const double> x, std::span<const double> y,
                                        std::uint64_t seed, int samples, double tol)
{
    CycleRunner runner(ir, hierarchy);
    const Index n = x.size();
    if (y.size() != n) throw StructuralError("linearity probe: vectors differ in length");
    Vector mx(n), my(n), combo(n), mcombo(n);
    runner.apply(x, mx);
    runner.apply(y, my);
    Rng rng(seed);
    LinearityReport report;
    report.samples = samples;
    for (int s = 0; s < samples; ++s) {
        const double alpha = rng.uniform(-2.0, 2.0);
        const double beta = rng.uniform(-2.0, 2.0);
        for (Index i = 0; i < n; ++i) combo[i] = alpha * x[i] + beta * y[i];
        runner.apply(combo, mcombo);
        double diff = 0.0;
        double scale = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double expect = alpha * mx[i] + beta * my[i];
            diff += (mcombo[i] - expect) * (mcombo[i] - expect);
            scale += expect * expect;
        }
        const double dev = scale > 0 ? std::sqrt(diff / scale) : std::sqrt(diff);
        report.max_deviation = std::max(report.max_deviation, dev);
    }
    report.linear = report.max_deviation <= tol;
    return report;
}

// Construction --------------------------------------------------------------

CycleIR encode_vcycle(const AmgHierarchy& hierarchy, std::span<const SmootherSpec> pre,
                      std::span<const SmootherSpec> post)
{
    CycleIR ir;
    const Index bottom = hierarchy.coarsest();
    ir.n_flex = bottom;
    for (Index l = 0; l < bottom; ++l) {
        for (const auto& s : pre) ir.ops.push_back(Smooth{l, s});
        ir.ops.push_back(Restrict{l});
    }
    ir.ops.push_back(CoarseSolve{bottom});
    for (Index l = bottom; l-- > 0;) {
        ir.ops.push_back(CorrectProlong{l, 1.0});
        for (const auto& s : post) ir.ops.push_back(Smooth{l, s});
    }
    return ir;
}

CycleIR encode_vcycle(const AmgHierarchy& hierarchy, const SmootherSpec& pre,
                      const SmootherSpec& post)
{
    return encode_vcycle(hierarchy, std::span<const SmootherSpec>(&pre, 1),
                         std::span<const SmootherSpec>(&post, 1));
}

ReferenceConfig reference_config(const std::string& name)
{
    using K = SmootherKind;
    ReferenceConfig c;
    c.name = name;
    auto spec = [&](K kind, double wi, int sweeps) {
        return SmootherSpec{kind, c.cf_ordering ? RelaxOrdering::CF : RelaxOrdering::Lexicographic,
                            wi, 1.0, sweeps};
    };
    if (name == "default") {
        c.cf_ordering = true;
        c.pre = {spec(K::GsSymmetric, 1.0, 1)};
        c.post = {spec(K::GsSymmetric, 1.0, 1)};
    } else if (name == "tuned-1") {
        c.pre = {spec(K::GsSymmetric, 1.0, 1)};
        c.post = {spec(K::GsSymmetric, 1.0, 1)};
    } else if (name == "tuned-2") {
        c.pre = {spec(K::GsForward, 0.8, 1)};
        c.post = {spec(K::GsBackward, 0.8, 1)};
    } else if (name == "tuned-3") {
        c.pre = {spec(K::GsSymmetric, 1.0, 3)};
        c.post = {spec(K::GsSymmetric, 1.0, 3)};
    } else if (name == "tuned-4") {
        c.pre = {spec(K::GsForward, 0.8, 3)};
        c.post = {spec(K::GsBackward, 0.8, 3)};
    } else {
        throw ParameterError("unknown reference configuration '" + name + "'");
    }
    return c;
}

CycleIR encode_reference(const std::string& name, const AmgHierarchy& hierarchy)
{
    const ReferenceConfig c = reference_config(name);
    return encode_vcycle(hierarchy, c.pre, c.post);
}

namespace {

std::uint64_t tail_work(const AmgHierarchy& h, const SmootherSpec& smoother, Index l)
{
    const AmgLevel& lv = h.levels[l];
    if (l == h.coarsest()) return static_cast<std::uint64_t>(lv.a.rows()) * lv.a.rows();
    return 2 * smoother_work(smoother, lv.a.nnz()) + lv.a.nnz() + lv.r.nnz() + lv.p.nnz() +
           tail_work(h, smoother, l + 1);
}

} // namespace

std::uint64_t cycle_work_units(const CycleIR& ir, const AmgHierarchy& h)
{
    std::uint64_t w = 0;
    for (const Step& step : ir.ops)
        w += std::visit(
            overloaded{
                [&](const Smooth& s) { return smoother_work(s.smoother, h.levels[s.level].a.nnz()); },
                [&](const Restrict& r) {
                    return std::uint64_t{h.levels[r.level].a.nnz() + h.levels[r.level].r.nnz()};
                },
                [&](const CorrectProlong& c) { return std::uint64_t{h.levels[c.level].p.nnz()}; },
                [&](const TailSolve& t) { return tail_work(h, ir.tail_smoother, t.level); },
                [&](const CoarseSolve& c) {
                    const auto n = static_cast<std::uint64_t>(h.levels[c.level].a.rows());
                    return n * n;
                },
            },
            step);
    return w;
}

} // namespace flexamg
