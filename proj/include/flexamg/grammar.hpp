#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flexamg/cycle.hpp"
#include "flexamg/rng.hpp"

namespace flexamg {

// Nonterminals of the cycle grammar. Terminals (restrict, correct, relax,
// tail) are implied by the chosen production; the leaf choices KIND ... ALPHA
// store the picked terminal in `production`.
enum class Symbol : std::uint8_t {
    Cycle,
    Descent,
    Inner,
    Smooths,
    Smooth,
    Kind,
    Order,
    WeightInner,
    WeightOuter,
    Sweeps,
    Alpha,
    Tail,
};

std::string to_string(Symbol symbol);

/// CYCLE, DESCENT, INNER and SMOOTHS carry a grid level.
constexpr bool is_level_indexed(Symbol s)
{
    return s == Symbol::Cycle || s == Symbol::Descent || s == Symbol::Inner || s == Symbol::Smooths;
}

struct Node {
    Symbol symbol = Symbol::Cycle;
    Index level = 0;
    int production = 0;
    std::vector<Node> children;

    friend bool operator==(const Node&, const Node&) = default;
};

/// Child indices from the root.
using NodePath = std::vector<std::size_t>;

inline constexpr Index default_n_flex = 5;
inline constexpr int default_depth_limit = 40;

/// The grammar is fixed except for the number of flexible levels, whether the
/// bottom of the flexible region is the coarsest grid, and the depth limit.
///
///   CYCLE(l)      -> SMOOTHS(l) DESCENT(l) SMOOTHS(l)        l < n_flex
///   CYCLE(n_flex) -> TAIL
///   DESCENT(l)    -> restrict INNER(l+1) correct(ALPHA)
///   INNER(l)      -> CYCLE(l) | CYCLE(l) CYCLE(l)
///   SMOOTHS(l)    -> eps | SMOOTH SMOOTHS(l)                 at most 4 SMOOTH
///   SMOOTH        -> relax(KIND, ORDER, WI, WO, SWEEPS)
class Grammar {
public:
    /// Throws ParameterError when no derivation fits the depth limit.
    Grammar(Index n_flex, bool coarse_bottom, int depth_limit = default_depth_limit);

    /// n_flex = min(5, depth - 1); the bottom is the direct solve when that is the coarsest level.
    static Grammar for_hierarchy(const AmgHierarchy& hierarchy, int depth_limit = default_depth_limit,
                                 Index max_flex = default_n_flex);

    [[nodiscard]] Index n_flex() const noexcept { return n_flex_; }
    [[nodiscard]] bool coarse_bottom() const noexcept { return coarse_bottom_; }
    [[nodiscard]] int depth_limit() const noexcept { return depth_limit_; }

    /// Number of productions of a symbol in context; `room` is the number of
    /// SMOOTH steps still allowed in a SMOOTHS chain.
    [[nodiscard]] int production_count(Symbol s, Index level, int room) const;
    /// Depth of the shallowest completion of one production.
    [[nodiscard]] int min_depth(Symbol s, Index level, int room, int production) const;
    [[nodiscard]] int min_depth(Symbol s, Index level, int room) const;
    [[nodiscard]] std::size_t min_nodes(Symbol s, Index level, int room, int production) const;

private:
    Index n_flex_;
    bool coarse_bottom_;
    int depth_limit_;
};

struct Genotype {
    Node root;
    CycleIR ir;
    /// Deduplication key: the serialized phenotype.
    std::string key;
};

/// Tree depth with leaves at depth 1.
int tree_depth(const Node& node);
std::size_t tree_size(const Node& node);

/// Every way `root` deviates from the grammar (empty when it conforms).
std::vector<std::string> check_conformance(const Grammar& g, const Node& root);

/// Structural fold of a conforming tree into a cycle.
CycleIR genotype_to_cycle(const Grammar& g, const Node& root);
/// Decodes and caches the phenotype; throws ContractViolation if `root` does not conform.
Genotype make_genotype(const Grammar& g, Node root);

/// Random subtree for `s` in context, preferring depth <= budget.
Node derive(const Grammar& g, Symbol s, Index level, int room, int budget, Rng& rng);
Genotype derive_random(const Grammar& g, Rng& rng);
Genotype derive_random(const Grammar& g, std::uint64_t seed);

/// Subtree exchange at nodes with equal labels; parents come back unchanged
/// when 8 attempts all break conformance.
std::pair<Genotype, Genotype> crossover(const Grammar& g, const Genotype& a, const Genotype& b, Rng& rng);
/// Swap at the given nodes; returns the parents when the result breaks conformance.
std::pair<Genotype, Genotype> crossover_at(const Grammar& g, const Genotype& a, const Genotype& b,
                                           const NodePath& at_a, const NodePath& at_b);

/// Regrows a uniformly chosen subtree.
Genotype mutate(const Grammar& g, const Genotype& parent, Rng& rng);
Genotype mutate_at(const Grammar& g, const Genotype& parent, const NodePath& at, Rng& rng);

/// Paths of all nodes in pre-order.
std::vector<NodePath> node_paths(const Node& root);
const Node& node_at(const Node& root, const NodePath& path);

/// size * factor random genotypes, unique by phenotype; after 100x as many
/// attempts the remainder is filled with duplicates.
std::vector<Genotype> init_population(const Grammar& g, std::size_t size, std::size_t factor, Rng& rng);

/// Tree for a V-cycle over the flexible region with the same smoothing on every visit.
Node vcycle_tree(const Grammar& g, const std::vector<SmootherSpec>& pre,
                 const std::vector<SmootherSpec>& post, double alpha = 1.0);

/// "(cycle:0 0 (smooths:0 0) ...)" with one parenthesised node per tree node.
std::string to_sexpr(const Node& root);
Node parse_sexpr(const std::string& text);

} // namespace flexamg
