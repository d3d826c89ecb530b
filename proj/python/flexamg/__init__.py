"""Flexible algebraic multigrid cycles, GMRES and a grammar-guided search over cycles."""

from ._core import (
    ContractViolation,
    Cycle,
    Genotype,
    Grammar,
    Hierarchy,
    NumericalFailure,
    ParameterError,
    ParseError,
    Problem,
    SetupError,
    SparseMatrix,
    StructuralError,
    UsageError,
    anisotropic_2d,
    build_hierarchy,
    config_hash,
    coupled_thermoelastic_2d,
    crossover,
    crowding_distance,
    cycle_work_units,
    derive_random,
    encode_reference,
    evaluate_fitness,
    execute,
    genotype_from_sexpr,
    gmres,
    make_problem,
    mutate,
    nondominated_sort,
    optimize,
    parse_cycle,
    poisson_2d,
    rap,
    reference_names,
    validate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
