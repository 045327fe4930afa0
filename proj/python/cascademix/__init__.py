"""Two-component cascade mixtures: simulation, exact oracle, moment
estimation and recovery."""

from ._core import (
    ORACLE_BUDGET,
    CascadeMixError,
    MixtureModel,
    WeightPair,
    empirical_table,
    estimate_alpha,
    estimate_moments,
    exact_moment,
    exact_table,
    max_weight_error_up_to_swap,
    random_directed_mixture,
    random_mixture,
    recover,
    run_corpus,
    run_experiment,
    validate_conditions,
)

__version__ = "0.1.0"


def recovered_model(result):
    """MixtureModel built from a recover() result."""
    model = MixtureModel(result["n"], result["alpha"], result["directed"])
    for u, v, p, q, _method in result["edges"]:
        model.set_edge(u, v, min(max(p, 0.0), 1.0), min(max(q, 0.0), 1.0))
    return model
