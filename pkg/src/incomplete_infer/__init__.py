"""Specification tests and confidence regions for incomplete structural models.

A structure links observables ``Y`` to latent variables ``U`` through a
correspondence ``Gamma``. It is compatible with an observable law ``P`` when
``nu(Gamma(A)) >= P(A)`` for every observable set ``A``. This package
provides the set-valued primitives, the capacity functionals, an exact
transport oracle, the supremum statistic with bridge and subsampling
quantiles, and test inversion over parameter grids.
"""
__version__ = "0.1.0"

from .capacity import (
    CapacityTable,
    DiscreteMeasure,
    belief,
    belief_table,
    choquet_integral,
    core_membership,
    core_sup_expectation,
    is_alternating,
    plausibility,
    plausibility_table,
    probability_table,
)
from .correspondence import (
    DiscreteIntervalCorrespondence,
    FiniteCorrespondence,
    IndexSet,
    IntervalCorrespondence,
    IntervalSet,
    image,
    load_correspondence,
    lower_inverse,
    preimage,
)
from .exceptions import (
    CarrierMismatchError,
    ConfigError,
    DataError,
    DomainError,
    IncompleteInferError,
    NumericError,
    SizeError,
)
from .inference import (
    BoundsReport,
    CensoredMeanBounds,
    ConfidenceRegion,
    ParamGrid,
    RegionReport,
    SpecificationTest,
    TestReport,
    censored_mean_bounds,
    confidence_region,
    entry_game_model,
    specification_test,
)
from .setclass import (
    SetFamily,
    binding_class,
    default_bandwidth,
    enumerate_family,
    estimated_binding_class,
    is_core_determining_bruteforce,
)
from .statistic import (
    EmpiricalMeasure,
    QuantileEstimate,
    StatisticValue,
    bridge_quantile,
    ks_capacity_statistic,
    subsample_quantile,
)
from .structure import Structure
from .transport import CouplingResult, dual_statistic_bruteforce, feasible_coupling

__all__ = [name for name in dir() if not name.startswith("_")]
