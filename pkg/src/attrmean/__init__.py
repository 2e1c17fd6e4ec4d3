"""Attribute-assisted estimation of a finite-population mean."""

from .errors import (
    AttrMeanError,
    InvalidPopulation,
    DegeneratePopulation,
    ZeroMean,
    InvalidDesign,
    InvalidSpec,
    DivisionByZero,
    WrongPhase,
    UnresolvedWeights,
    MissingTwoPhaseFactors,
    SingularSystem,
    NonpositiveMSE,
    InvalidGeneratorSpec,
    EnumerationTooLarge,
    AllReplicatesFailed,
    MismatchedSpecs,
    ParseError,
)
from .estimators import (
    EstimatorSpec,
    KnownTruth,
    SampleData,
    TwoPhaseSampleData,
    parse_spec,
    parse_spec_list,
    point_estimate,
    two_phase_estimate,
)
from .population import (
    Coefficients,
    FinitePopulation,
    PopulationSummary,
    SamplingDesign,
    derived_coefficients,
    summarize_population,
    validate_population,
)
from .theory import (
    a_terms,
    b_terms,
    first_order_bias,
    first_order_mse,
    optimal_weights_double,
    optimal_weights_single,
    pre_value,
    theory_table,
)

__version__ = "0.1.0"

__all__ = [
    "AttrMeanError",
    "InvalidPopulation",
    "DegeneratePopulation",
    "ZeroMean",
    "InvalidDesign",
    "InvalidSpec",
    "DivisionByZero",
    "WrongPhase",
    "UnresolvedWeights",
    "MissingTwoPhaseFactors",
    "SingularSystem",
    "NonpositiveMSE",
    "InvalidGeneratorSpec",
    "EnumerationTooLarge",
    "AllReplicatesFailed",
    "MismatchedSpecs",
    "ParseError",
    "EstimatorSpec",
    "KnownTruth",
    "SampleData",
    "TwoPhaseSampleData",
    "parse_spec",
    "parse_spec_list",
    "point_estimate",
    "two_phase_estimate",
    "Coefficients",
    "FinitePopulation",
    "PopulationSummary",
    "SamplingDesign",
    "derived_coefficients",
    "summarize_population",
    "validate_population",
    "a_terms",
    "b_terms",
    "first_order_bias",
    "first_order_mse",
    "optimal_weights_double",
    "optimal_weights_single",
    "pre_value",
    "theory_table",
]
