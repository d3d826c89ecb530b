#include "flexamg/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "flexamg/errors.hpp"

namespace flexamg {

namespace {

constexpr int n_kinds = static_cast<int>(std::size(grammar_smoother_kinds));

struct Ctx {
    Symbol symbol;
    Index level = 0;
    int room = 0;
};

/// Child contexts of production `p` of `c`.
std::vector<Ctx> children_of(const Grammar& g, const Ctx& c, int p)
{
    switch (c.symbol) {
    case Symbol::Cycle:
        if (c.level == g.n_flex()) return {{Symbol::Tail}};
        return {{Symbol::Smooths, c.level, max_smooths_per_visit},
                {Symbol::Descent, c.level},
                {Symbol::Smooths, c.level, max_smooths_per_visit}};
    case Symbol::Descent: return {{Symbol::Inner, c.level + 1}, {Symbol::Alpha}};
    case Symbol::Inner:
        if (p == 0) return {{Symbol::Cycle, c.level}};
        return {{Symbol::Cycle, c.level}, {Symbol::Cycle, c.level}};
    case Symbol::Smooths:
        if (p == 0) return {};
        return {{Symbol::Smooth}, {Symbol::Smooths, c.level, c.room - 1}};
    case Symbol::Smooth:
        return {{Symbol::Kind}, {Symbol::Order}, {Symbol::WeightInner}, {Symbol::WeightOuter}, {Symbol::Sweeps}};
    default: return {};
    }
}

std::string label_name(Symbol s, Index level)
{
    return is_level_indexed(s) ? to_string(s) + ":" + std::to_string(level) : to_string(s);
}

} // namespace

std::string to_string(Symbol symbol)
{
    switch (symbol) {
    case Symbol::Cycle: return "cycle";
    case Symbol::Descent: return "descent";
    case Symbol::Inner: return "inner";
    case Symbol::Smooths: return "smooths";
    case Symbol::Smooth: return "smooth";
    case Symbol::Kind: return "kind";
    case Symbol::Order: return "order";
    case Symbol::WeightInner: return "wi";
    case Symbol::WeightOuter: return "wo";
    case Symbol::Sweeps: return "sweeps";
    case Symbol::Alpha: return "alpha";
    case Symbol::Tail: return "tail";
    }
    return "?";
}

Grammar::Grammar(Index n_flex, bool coarse_bottom, int depth_limit)
    : n_flex_(n_flex)
    , coarse_bottom_(coarse_bottom)
    , depth_limit_(depth_limit)
{
    const int need = min_depth(Symbol::Cycle, 0, 0);
    if (depth_limit < need)
        throw ParameterError("grammar depth limit " + std::to_string(depth_limit) + " is below the " +
                             std::to_string(need) + " levels any derivation needs");
}

Grammar Grammar::for_hierarchy(const AmgHierarchy& hierarchy, int depth_limit, Index max_flex)
{
    if (hierarchy.depth() == 0) throw StructuralError("grammar: empty hierarchy");
    const Index n_flex = std::min(max_flex, hierarchy.coarsest());
    return Grammar(n_flex, n_flex == hierarchy.coarsest(), depth_limit);
}

int Grammar::production_count(Symbol s, Index, int room) const
{
    switch (s) {
    case Symbol::Inner: return 2;
    case Symbol::Smooths: return room > 0 ? 2 : 1;
    case Symbol::Kind: return n_kinds;
    case Symbol::Order: return 2;
    case Symbol::WeightInner:
    case Symbol::WeightOuter:
    case Symbol::Alpha: return sample_set::size;
    case Symbol::Sweeps: return max_sweeps;
    default: return 1;
    }
}

int Grammar::min_depth(Symbol s, Index level, int room, int production) const
{
    int deepest = 0;
    for (const Ctx& c : children_of(*this, {s, level, room}, production))
        deepest = std::max(deepest, min_depth(c.symbol, c.level, c.room));
    return 1 + deepest;
}

int Grammar::min_depth(Symbol s, Index level, int room) const
{
    // Production 0 is always the shallowest completion.
    return min_depth(s, level, room, 0);
}

std::size_t Grammar::min_nodes(Symbol s, Index level, int room, int production) const
{
    std::size_t total = 1;
    for (const Ctx& c : children_of(*this, {s, level, room}, production))
        total += min_nodes(c.symbol, c.level, c.room, 0);
    return total;
}

int tree_depth(const Node& node)
{
    int deepest = 0;
    for (const Node& c : node.children) deepest = std::max(deepest, tree_depth(c));
    return 1 + deepest;
}

std::size_t tree_size(const Node& node)
{
    std::size_t n = 1;
    for (const Node& c : node.children) n += tree_size(c);
    return n;
}

namespace {

void conform(const Grammar& g, const Node& node, const Ctx& ctx, const std::string& where,
             std::vector<std::string>& out)
{
    const std::string here = where + "/" + label_name(ctx.symbol, ctx.level);
    if (node.symbol != ctx.symbol) {
        out.push_back(here + ": found " + to_string(node.symbol));
        return;
    }
    if (is_level_indexed(ctx.symbol) && node.level != ctx.level) {
        out.push_back(here + ": found level " + std::to_string(node.level));
        return;
    }
    if (ctx.symbol == Symbol::Cycle && ctx.level > g.n_flex()) {
        out.push_back(here + ": below the flexible region");
        return;
    }
    const int count = g.production_count(ctx.symbol, ctx.level, ctx.room);
    if (node.production < 0 || node.production >= count) {
        out.push_back(here + ": production " + std::to_string(node.production) + " outside [0, " +
                      std::to_string(count) + ")");
        return;
    }
    const std::vector<Ctx> kids = children_of(g, ctx, node.production);
    if (kids.size() != node.children.size()) {
        out.push_back(here + ": expected " + std::to_string(kids.size()) + " children, found " +
                      std::to_string(node.children.size()));
        return;
    }
    for (std::size_t k = 0; k < kids.size(); ++k) conform(g, node.children[k], kids[k], here, out);
}

void fold_smooths(const Node& node, Index level, std::vector<Step>& ops)
{
    for (const Node* n = &node; n->production == 1; n = &n->children[1]) {
        const auto& f = n->children[0].children;
        SmootherSpec s;
        s.kind = grammar_smoother_kinds[f[0].production];
        s.ordering = f[1].production == 0 ? RelaxOrdering::Lexicographic : RelaxOrdering::CF;
        s.omega_inner = sample_set::value(f[2].production);
        s.omega_outer = sample_set::value(f[3].production);
        s.sweeps = f[4].production + 1;
        ops.push_back(Smooth{level, s});
    }
}

void fold_cycle(const Grammar& g, const Node& node, std::vector<Step>& ops)
{
    const Index l = node.level;
    if (l == g.n_flex()) {
        if (g.coarse_bottom())
            ops.push_back(CoarseSolve{l});
        else
            ops.push_back(TailSolve{l});
        return;
    }
    fold_smooths(node.children[0], l, ops);
    const Node& descent = node.children[1];
    ops.push_back(Restrict{l});
    for (const Node& sub : descent.children[0].children) fold_cycle(g, sub, ops);
    ops.push_back(CorrectProlong{l, sample_set::value(descent.children[1].production)});
    fold_smooths(node.children[2], l, ops);
}

Node derive_ctx(const Grammar& g, const Ctx& ctx, int budget, Rng& rng)
{
    const int count = g.production_count(ctx.symbol, ctx.level, ctx.room);
    std::vector<int> fits;
    for (int p = 0; p < count; ++p)
        if (g.min_depth(ctx.symbol, ctx.level, ctx.room, p) <= budget) fits.push_back(p);

    Node node{ctx.symbol, is_level_indexed(ctx.symbol) ? ctx.level : 0, 0, {}};
    if (!fits.empty()) {
        node.production = fits[rng.index(fits.size())];
    } else {
        // Forced termination: shallowest completion, then fewest nodes.
        auto cost = [&](int p) {
            return std::make_pair(g.min_depth(ctx.symbol, ctx.level, ctx.room, p),
                                  g.min_nodes(ctx.symbol, ctx.level, ctx.room, p));
        };
        int best = 0;
        for (int p = 1; p < count; ++p)
            if (cost(p) < cost(best)) best = p;
        node.production = best;
    }
    for (const Ctx& c : children_of(g, ctx, node.production))
        node.children.push_back(derive_ctx(g, c, budget - 1, rng));
    return node;
}

struct Site {
    NodePath path;
    Ctx ctx;
    int depth = 1; ///< depth of the node itself, root = 1
};

void collect_sites(const Grammar& g, const Node& node, const Ctx& ctx, NodePath& path, int depth,
                   std::vector<Site>& out)
{
    out.push_back({path, ctx, depth});
    const auto kids = children_of(g, ctx, node.production);
    for (std::size_t k = 0; k < node.children.size() && k < kids.size(); ++k) {
        path.push_back(k);
        collect_sites(g, node.children[k], kids[k], path, depth + 1, out);
        path.pop_back();
    }
}

std::vector<Site> sites(const Grammar& g, const Node& root)
{
    std::vector<Site> out;
    NodePath path;
    collect_sites(g, root, {Symbol::Cycle, 0, 0}, path, 1, out);
    return out;
}

Node& node_at_mut(Node& root, const NodePath& path)
{
    Node* n = &root;
    for (std::size_t k : path) {
        if (k >= n->children.size()) throw ContractViolation("node path leaves the tree");
        n = &n->children[k];
    }
    return *n;
}

bool conforms(const Grammar& g, const Node& root)
{
    return check_conformance(g, root).empty();
}

} // namespace

std::vector<std::string> check_conformance(const Grammar& g, const Node& root)
{
    std::vector<std::string> out;
    conform(g, root, {Symbol::Cycle, 0, 0}, "", out);
    if (out.empty()) {
        const int d = tree_depth(root);
        if (d > g.depth_limit())
            out.push_back("depth " + std::to_string(d) + " exceeds limit " + std::to_string(g.depth_limit()));
    }
    return out;
}

CycleIR genotype_to_cycle(const Grammar& g, const Node& root)
{
    CycleIR ir;
    ir.n_flex = g.n_flex();
    fold_cycle(g, root, ir.ops);
    return ir;
}

Genotype make_genotype(const Grammar& g, Node root)
{
    const auto problems = check_conformance(g, root);
    if (!problems.empty()) throw ContractViolation("genotype does not conform: " + problems.front());
    Genotype out;
    out.ir = genotype_to_cycle(g, root);
    out.key = to_text(out.ir);
    out.root = std::move(root);
    return out;
}

Node derive(const Grammar& g, Symbol s, Index level, int room, int budget, Rng& rng)
{
    return derive_ctx(g, {s, level, room}, budget, rng);
}

Genotype derive_random(const Grammar& g, Rng& rng)
{
    return make_genotype(g, derive(g, Symbol::Cycle, 0, 0, g.depth_limit(), rng));
}

Genotype derive_random(const Grammar& g, std::uint64_t seed)
{
    Rng rng(seed);
    return derive_random(g, rng);
}

std::vector<NodePath> node_paths(const Node& root)
{
    std::vector<NodePath> out;
    NodePath path;
    auto walk = [&](auto&& self, const Node& n) -> void {
        out.push_back(path);
        for (std::size_t k = 0; k < n.children.size(); ++k) {
            path.push_back(k);
            self(self, n.children[k]);
            path.pop_back();
        }
    };
    walk(walk, root);
    return out;
}

const Node& node_at(const Node& root, const NodePath& path)
{
    const Node* n = &root;
    for (std::size_t k : path) {
        if (k >= n->children.size()) throw ContractViolation("node path leaves the tree");
        n = &n->children[k];
    }
    return *n;
}

std::pair<Genotype, Genotype> crossover_at(const Grammar& g, const Genotype& a, const Genotype& b,
                                           const NodePath& at_a, const NodePath& at_b)
{
    const Node& sa = node_at(a.root, at_a);
    const Node& sb = node_at(b.root, at_b);
    if (sa.symbol != sb.symbol || (is_level_indexed(sa.symbol) && sa.level != sb.level))
        throw ContractViolation("crossover between different labels");
    Node ca = a.root;
    Node cb = b.root;
    node_at_mut(ca, at_a) = sb;
    node_at_mut(cb, at_b) = sa;
    if (!conforms(g, ca) || !conforms(g, cb)) return {a, b};
    return {make_genotype(g, std::move(ca)), make_genotype(g, std::move(cb))};
}

std::pair<Genotype, Genotype> crossover(const Grammar& g, const Genotype& a, const Genotype& b, Rng& rng)
{
    using Label = std::pair<Symbol, Index>;
    auto label = [](const Site& s) {
        return Label{s.ctx.symbol, is_level_indexed(s.ctx.symbol) ? s.ctx.level : 0};
    };
    const auto sites_a = sites(g, a.root);
    const auto sites_b = sites(g, b.root);
    std::map<Label, std::vector<std::size_t>> by_a, by_b;
    for (std::size_t k = 0; k < sites_a.size(); ++k) by_a[label(sites_a[k])].push_back(k);
    for (std::size_t k = 0; k < sites_b.size(); ++k) by_b[label(sites_b[k])].push_back(k);

    const Label start{Symbol::Cycle, 0};
    std::vector<Label> common;
    for (const auto& [lab, _] : by_a)
        if (by_b.count(lab) && lab != start) common.push_back(lab);
    if (common.empty()) common.push_back(start);

    constexpr int attempts = 8;
    for (int t = 0; t < attempts; ++t) {
        const Label lab = common[rng.index(common.size())];
        const auto& ia = by_a[lab];
        const auto& ib = by_b[lab];
        // One draw picks the occurrence in both trees, so equal parents swap equal subtrees.
        const std::size_t k = rng.index(std::max(ia.size(), ib.size()));
        const Site& pa = sites_a[ia[k % ia.size()]];
        const Site& pb = sites_b[ib[k % ib.size()]];
        Node ca = a.root;
        Node cb = b.root;
        node_at_mut(ca, pa.path) = node_at(b.root, pb.path);
        node_at_mut(cb, pb.path) = node_at(a.root, pa.path);
        if (conforms(g, ca) && conforms(g, cb))
            return {make_genotype(g, std::move(ca)), make_genotype(g, std::move(cb))};
    }
    return {a, b};
}

Genotype mutate_at(const Grammar& g, const Genotype& parent, const NodePath& at, Rng& rng)
{
    for (const Site& s : sites(g, parent.root)) {
        if (s.path != at) continue;
        Node child = parent.root;
        node_at_mut(child, at) = derive_ctx(g, s.ctx, g.depth_limit() - s.depth + 1, rng);
        return make_genotype(g, std::move(child));
    }
    throw ContractViolation("mutation site not in tree");
}

Genotype mutate(const Grammar& g, const Genotype& parent, Rng& rng)
{
    const auto all = sites(g, parent.root);
    const Site& s = all[rng.index(all.size())];
    Node child = parent.root;
    node_at_mut(child, s.path) = derive_ctx(g, s.ctx, g.depth_limit() - s.depth + 1, rng);
    // A regrown subtree can only exceed the limit when forced termination could not fit it.
    if (!conforms(g, child)) return parent;
    return make_genotype(g, std::move(child));
}

std::vector<Genotype> init_population(const Grammar& g, std::size_t size, std::size_t factor, Rng& rng)
{
    if (size < 1 || factor < 1) throw ParameterError("init_population: size and factor must be at least 1");
    const std::size_t target = size * factor;
    std::vector<Genotype> out;
    std::vector<Genotype> dupes;
    std::set<std::string> seen;
    for (std::size_t tries = 0; out.size() < target && tries < 100 * target; ++tries) {
        Genotype cand = derive_random(g, rng);
        if (seen.insert(cand.key).second)
            out.push_back(std::move(cand));
        else if (dupes.size() < target)
            dupes.push_back(std::move(cand));
    }
    for (std::size_t k = 0; out.size() < target && k < dupes.size(); ++k) out.push_back(dupes[k]);
    return out;
}

namespace {

Node smooth_node(const SmootherSpec& s)
{
    const auto* kind = std::find(std::begin(grammar_smoother_kinds), std::end(grammar_smoother_kinds), s.kind);
    if (kind == std::end(grammar_smoother_kinds))
        throw ParameterError("smoother kind " + to_string(s.kind) + " is not in the grammar");
    if (s.ordering == RelaxOrdering::FC) throw ParameterError("FC ordering is not in the grammar");
    const int wi = sample_set::index_of(s.omega_inner);
    const int wo = sample_set::index_of(s.omega_outer);
    if (wi < 0 || wo < 0 || s.sweeps < 1 || s.sweeps > max_sweeps)
        throw ParameterError("smoother " + to_token(s) + " is outside the grammar's value sets");
    auto leaf = [](Symbol sym, int p) { return Node{sym, 0, p, {}}; };
    return Node{Symbol::Smooth, 0, 0,
                {leaf(Symbol::Kind, static_cast<int>(kind - std::begin(grammar_smoother_kinds))),
                 leaf(Symbol::Order, s.ordering == RelaxOrdering::CF ? 1 : 0), leaf(Symbol::WeightInner, wi),
                 leaf(Symbol::WeightOuter, wo), leaf(Symbol::Sweeps, s.sweeps - 1)}};
}

Node smooths_node(Index level, const std::vector<SmootherSpec>& specs, std::size_t from)
{
    if (from == specs.size()) return Node{Symbol::Smooths, level, 0, {}};
    return Node{Symbol::Smooths, level, 1, {smooth_node(specs[from]), smooths_node(level, specs, from + 1)}};
}

} // namespace

Node vcycle_tree(const Grammar& g, const std::vector<SmootherSpec>& pre, const std::vector<SmootherSpec>& post,
                 double alpha)
{
    if (pre.size() > max_smooths_per_visit || post.size() > max_smooths_per_visit)
        throw ParameterError("vcycle_tree: at most 4 smoothing steps per side");
    const int a = sample_set::index_of(alpha);
    if (a < 0) throw ParameterError("vcycle_tree: alpha outside the sample set");
    Node node{Symbol::Cycle, g.n_flex(), 0, {Node{Symbol::Tail, 0, 0, {}}}};
    for (Index l = g.n_flex(); l-- > 0;) {
        Node inner{Symbol::Inner, l + 1, 0, {std::move(node)}};
        Node descent{Symbol::Descent, l, 0, {std::move(inner), Node{Symbol::Alpha, 0, a, {}}}};
        node = Node{Symbol::Cycle, l, 0, {smooths_node(l, pre, 0), std::move(descent), smooths_node(l, post, 0)}};
    }
    return node;
}

// S-expressions -------------------------------------------------------------

namespace {

void write_sexpr(const Node& n, std::string& out)
{
    out += '(';
    out += label_name(n.symbol, n.level);
    out += ' ';
    out += std::to_string(n.production);
    for (const Node& c : n.children) {
        out += ' ';
        write_sexpr(c, out);
    }
    out += ')';
}

class SexprParser {
public:
    explicit SexprParser(const std::string& text)
        : s_(text)
    {
    }

    Node parse()
    {
        Node n = node();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing text");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& why) const
    {
        throw ParseError("s-expression at offset " + std::to_string(pos_) + ": " + why);
    }

    void skip_ws()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    std::string atom()
    {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != '(' && s_[pos_] != ')' &&
               !std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
        if (start == pos_) fail("expected an atom");
        return s_.substr(start, pos_ - start);
    }

    Node node()
    {
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != '(') fail("expected '('");
        ++pos_;
        Node n;
        const std::string head = atom();
        const auto colon = head.find(':');
        const std::string name = head.substr(0, colon);
        bool known = false;
        for (int k = 0; k <= static_cast<int>(Symbol::Tail); ++k)
            if (to_string(static_cast<Symbol>(k)) == name) {
                n.symbol = static_cast<Symbol>(k);
                known = true;
            }
        if (!known) fail("unknown symbol '" + name + "'");
        if (is_level_indexed(n.symbol) != (colon != std::string::npos)) fail("level tag mismatch on '" + head + "'");
        try {
            if (colon != std::string::npos) n.level = std::stoul(head.substr(colon + 1));
            n.production = std::stoi(atom());
        } catch (const std::logic_error&) {
            fail("bad number near '" + head + "'");
        }
        for (;;) {
            skip_ws();
            if (pos_ >= s_.size()) fail("unterminated node");
            if (s_[pos_] == ')') {
                ++pos_;
                return n;
            }
            n.children.push_back(node());
        }
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

} // namespace

std::string to_sexpr(const Node& root)
{
    std::string out;
    write_sexpr(root, out);
    return out;
}

Node parse_sexpr(const std::string& text)
{
    return SexprParser(text).parse();
}

} // namespace flexamg
