"""Specification tests, confidence regions by test inversion, and built-in models.

The functional entry points (:func:`specification_test`,
:func:`confidence_region`, :func:`censored_mean_bounds`) return plain report
objects. The estimator classes wrap them with the scikit-learn
``fit``/``get_params`` protocol so they slot into the usual tooling.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted, column_or_1d

from .correspondence import DiscreteIntervalCorrespondence
from .exceptions import ConfigError, DataError, DomainError
from .setclass import SetFamily, default_bandwidth
from .statistic import (
    QuantileEstimate,
    StatisticValue,
    bridge_quantile,
    ks_capacity_statistic,
    subsample_quantile,
)
from .structure import Structure

__all__ = [
    "ParamGrid",
    "TestReport",
    "RegionReport",
    "BoundsReport",
    "entry_game_model",
    "specification_test",
    "confidence_region",
    "censored_mean_bounds",
    "SpecificationTest",
    "ConfidenceRegion",
    "CensoredMeanBounds",
]


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


def entry_game_model(lam: float, phi: float) -> Structure:
    """Two-firm entry game: ``Gamma(1) = [0, lam]``, ``Gamma(0) = [0, 1]``, ``nu`` with cdf ``u**phi``."""
    lam, phi = float(lam), float(phi)
    if not 0 < lam <= 1:
        raise DomainError(f"lambda must lie in (0, 1], got {lam}")
    if not phi > 0 or not math.isfinite(phi):
        raise DomainError(f"phi must be positive, got {phi}")
    corr = DiscreteIntervalCorrespondence([0, 1], [(0.0, 1.0), (0.0, lam)])
    return Structure(corr, stats.powerlaw(phi), name="entry-game", params={"lambda": lam, "phi": phi})


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestReport:
    theta: dict
    statistic: StatisticValue
    quantile: QuantileEstimate
    reject: bool
    core_determining: str = ""

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return {
            "theta": dict(self.theta),
            "statistic": self.statistic.to_dict(),
            "quantile": self.quantile.to_dict(),
            "reject": self.reject,
            "core_determining": self.core_determining,
        }


@dataclass(frozen=True)
class RegionReport:
    axes: tuple[str, ...]
    tests: tuple[TestReport, ...]

    @property
    def accepted(self) -> list[dict]:
        return [t.theta for t in self.tests if not t.reject]

    def accepted_mask(self) -> np.ndarray:
        return np.array([not t.reject for t in self.tests])

    def to_dict(self) -> dict:
        return {
            "axes": list(self.axes),
            "points": [
                {
                    "theta": t.theta,
                    "sqrt_n_T": t.statistic.scaled,
                    "q_hat": t.quantile.q_hat,
                    "reject": t.reject,
                }
                for t in self.tests
            ],
            "accepted": self.accepted,
            "core_determining": sorted({t.core_determining for t in self.tests}),
        }


@dataclass(frozen=True)
class BoundsReport:
    lower: float
    upper: float
    ci_lower: float
    ci_upper: float
    alpha: float
    n: int
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "lower": self.lower,
            "upper": self.upper,
            "ci_lower": self.ci_lower,
            "ci_upper": self.ci_upper,
            "alpha": self.alpha,
            "n": self.n,
        }
        out.update(self.details)
        return out


# ---------------------------------------------------------------------------
# Parameter grids
# ---------------------------------------------------------------------------


class ParamGrid:
    """Finite product grid over named axes, iterated row-major in axis order."""

    def __init__(self, axes: Mapping[str, Sequence[float]]):
        if not axes:
            raise ConfigError("a parameter grid needs at least one axis")
        self.axes = {str(k): [float(v) for v in vals] for k, vals in axes.items()}
        for name, vals in self.axes.items():
            if not vals:
                raise ConfigError(f"axis {name!r} is empty")

    @classmethod
    def parse(cls, text: str) -> "ParamGrid":
        """``name=start:stop:step,...`` with endpoints included (within 1e-12)."""
        axes = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            name, eq, spec = part.partition("=")
            if not eq:
                raise ConfigError(f"grid axis {part!r} must look like name=start:stop:step")
            pieces = spec.split(":")
            try:
                if len(pieces) == 1:
                    values = [float(pieces[0])]
                elif len(pieces) == 3:
                    start, stop, step = map(float, pieces)
                    if step <= 0:
                        raise ConfigError(f"grid step must be positive in {part!r}")
                    count = int(math.floor((stop - start) / step + 1e-12)) + 1
                    values = [round(start + i * step, 12) for i in range(max(count, 0))]
                else:
                    raise ConfigError(f"grid axis {part!r} must look like name=start:stop:step")
            except ValueError:
                raise ConfigError(f"non-numeric grid specification {part!r}") from None
            axes[name.strip()] = values
        return cls(axes)

    def __iter__(self):
        names = list(self.axes)
        for combo in itertools.product(*self.axes.values()):
            yield dict(zip(names, combo))

    def __len__(self) -> int:
        return math.prod(len(v) for v in self.axes.values())

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in self.axes.items()}


# ---------------------------------------------------------------------------
# Procedures
# ---------------------------------------------------------------------------


def _family(model: Structure, fam) -> SetFamily:
    if fam is None:
        return SetFamily("powerset") if model.finite_observables else SetFamily("cells")
    if isinstance(fam, str):
        return SetFamily.parse(fam)
    return fam


def specification_test(
    sample,
    model: Structure,
    fam=None,
    alpha: float = 0.95,
    quantile: str = "bridge",
    reps: int = 1000,
    h_n: Optional[float] = None,
    bandwidth_c: float = 0.5,
    bandwidth_gamma: float = 0.25,
    subsample_size: Optional[int] = None,
    subsample_count: int = 500,
    seed: Optional[int] = None,
    theta: Optional[dict] = None,
) -> TestReport:
    """Test ``H0: nu in Core(Gamma, P)``; reject when ``sqrt(n) T > q_hat``."""
    fam = _family(model, fam)
    stat = ks_capacity_statistic(sample, model, fam)
    if quantile == "bridge":
        if h_n is None:
            h_n = default_bandwidth(stat.n, bandwidth_c, bandwidth_gamma)
        q = bridge_quantile(sample, model, fam, alpha, reps, h_n, seed)
    elif quantile == "subsample":
        q = subsample_quantile(sample, model, fam, alpha, subsample_size, subsample_count, seed)
    else:
        raise ConfigError(f"unknown quantile method {quantile!r}; use bridge or subsample")
    reject = bool(stat.scaled > q.q_hat)
    th = dict(theta) if theta is not None else dict(model.params)
    return TestReport(th, stat, q, reject, model.core_determining_note(fam))


def _point_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


def confidence_region(
    sample,
    model_factory: Callable[..., Structure],
    grid: ParamGrid,
    alpha: float = 0.95,
    fam=None,
    seed: int = 0,
    n_jobs: int = 1,
    **options,
) -> RegionReport:
    """Grid inversion: keep every ``theta`` whose test does not reject.

    Each grid point gets its own quantile and a seed derived from
    ``(seed, grid index)``, so results do not depend on scheduling.
    """
    if not isinstance(grid, ParamGrid):
        grid = ParamGrid(grid)
    points = list(grid)
    if not points:
        raise ConfigError("empty parameter grid")
    models = [model_factory(**theta) for theta in points]

    def run(i):
        return specification_test(
            sample, models[i], fam, alpha, seed=_point_seed(seed, i), theta=points[i], **options
        )

    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            tests = list(pool.map(run, range(len(points))))
    else:
        tests = [run(i) for i in range(len(points))]
    return RegionReport(tuple(grid.axes), tuple(tests))


def censored_mean_bounds(sample, delta: float, alpha: float = 0.95) -> BoundsReport:
    """Bounds on the mean of a quantity observed only through brackets of width ``delta``.

    ``sample`` holds bracket centres. The plug-in bounds are
    ``mean -/+ delta/2``; each is widened by ``z_alpha * sd / sqrt(n)``, with
    ``sd`` the plug-in standard deviation of the centres (delta method on the
    multinomial bracket frequencies).
    """
    if not delta > 0:
        raise DomainError(f"bracket width must be positive, got {delta}")
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    y = np.asarray(sample, dtype=float).ravel()
    if y.size == 0:
        raise DataError("empty sample")
    centres, counts = np.unique(y, return_counts=True)
    if centres.size > 1 and np.min(np.diff(centres)) < delta - 1e-12:
        raise DataError("brackets overlap: distinct centres must be at least delta apart")
    p = counts / y.size
    mean = float(centres @ p)
    lower, upper = float((centres - delta / 2) @ p), float((centres + delta / 2) @ p)
    var = float(((centres - mean) ** 2) @ p)
    z = float(stats.norm.ppf(alpha))
    half = z * math.sqrt(var / y.size)
    details = {"delta": float(delta), "z": z, "sd": math.sqrt(var), "brackets": centres.tolist(), "frequencies": p.tolist()}
    return BoundsReport(lower, upper, lower - half, upper + half, float(alpha), int(y.size), details)


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def _as_sample(X):
    arr = np.asarray(X)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    return column_or_1d(arr)


def _seed_from(random_state) -> int:
    if isinstance(random_state, (int, np.integer)):
        return int(random_state)
    return int(check_random_state(random_state).randint(0, 2**31 - 1))


class SpecificationTest(BaseEstimator):
    """Specification test of an incomplete structure against a sample.

    Parameters
    ----------
    model : Structure
        Correspondence and latent law under the null.
    family : str or SetFamily, optional
        Set family; defaults to the power set on finite carriers and to cells
        on the real line.
    alpha : float
        Quantile level of the critical value (0.95 gives a 5% test).
    quantile : {"bridge", "subsample"}
    reps : int
        Bridge replications.
    bandwidth_c, bandwidth_gamma : float
        Binding-class bandwidth ``c * n**(-gamma)``.
    subsample_size, subsample_count : int
        ``b_n`` (default ``ceil(n**(2/3))``) and ``B_n``.
    random_state : int, RandomState or None

    Attributes
    ----------
    statistic_ : StatisticValue
    quantile_ : QuantileEstimate
    reject_ : bool
    report_ : TestReport
    n_samples_ : int
    """

    def __init__(
        self,
        model=None,
        family=None,
        alpha=0.95,
        quantile="bridge",
        reps=1000,
        bandwidth_c=0.5,
        bandwidth_gamma=0.25,
        subsample_size=None,
        subsample_count=500,
        random_state=None,
    ):
        self.model = model
        self.family = family
        self.alpha = alpha
        self.quantile = quantile
        self.reps = reps
        self.bandwidth_c = bandwidth_c
        self.bandwidth_gamma = bandwidth_gamma
        self.subsample_size = subsample_size
        self.subsample_count = subsample_count
        self.random_state = random_state

    def fit(self, X, y=None):
        if self.model is None:
            raise ConfigError("SpecificationTest needs a model")
        sample = _as_sample(X)
        report = specification_test(
            sample,
            self.model,
            self.family,
            self.alpha,
            self.quantile,
            self.reps,
            None,
            self.bandwidth_c,
            self.bandwidth_gamma,
            self.subsample_size,
            self.subsample_count,
            _seed_from(self.random_state),
        )
        self.report_ = report
        self.statistic_ = report.statistic
        self.quantile_ = report.quantile
        self.reject_ = report.reject
        self.n_samples_ = report.statistic.n
        return self

    def decision_function(self, X=None):
        """``sqrt(n) T - q_hat``; positive values reject."""
        check_is_fitted(self, "report_")
        if X is not None:
            self.fit(X)
        return self.statistic_.scaled - self.quantile_.q_hat


class ConfidenceRegion(BaseEstimator):
    """Confidence region for structural parameters by inverting :class:`SpecificationTest`.

    ``model`` maps grid coordinates (as keyword arguments) to a
    :class:`Structure`; it defaults to the entry game.
    """

    def __init__(
        self,
        model=entry_game_model,
        grid=None,
        family=None,
        alpha=0.95,
        quantile="bridge",
        reps=1000,
        bandwidth_c=0.5,
        bandwidth_gamma=0.25,
        subsample_size=None,
        subsample_count=500,
        random_state=None,
        n_jobs=1,
    ):
        self.model = model
        self.grid = grid
        self.family = family
        self.alpha = alpha
        self.quantile = quantile
        self.reps = reps
        self.bandwidth_c = bandwidth_c
        self.bandwidth_gamma = bandwidth_gamma
        self.subsample_size = subsample_size
        self.subsample_count = subsample_count
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        if self.grid is None:
            raise ConfigError("ConfidenceRegion needs a parameter grid")
        grid = self.grid if isinstance(self.grid, ParamGrid) else (
            ParamGrid.parse(self.grid) if isinstance(self.grid, str) else ParamGrid(self.grid)
        )
        self.region_ = confidence_region(
            _as_sample(X),
            self.model,
            grid,
            self.alpha,
            self.family,
            seed=_seed_from(self.random_state),
            n_jobs=self.n_jobs,
            quantile=self.quantile,
            reps=self.reps,
            bandwidth_c=self.bandwidth_c,
            bandwidth_gamma=self.bandwidth_gamma,
            subsample_size=self.subsample_size,
            subsample_count=self.subsample_count,
        )
        self.grid_ = grid
        self.accepted_ = self.region_.accepted
        return self

    def predict(self, thetas):
        """Membership of grid points (dicts or rows in axis order) in the fitted region."""
        check_is_fitted(self, "region_")
        names = list(self.grid_.axes)
        table = {tuple(t.theta[k] for k in names): not t.reject for t in self.region_.tests}
        out = []
        for th in thetas:
            key = tuple(float(th[k]) for k in names) if isinstance(th, Mapping) else tuple(map(float, th))
            hit = [v for k, v in table.items() if all(abs(a - b) <= 1e-12 for a, b in zip(k, key))]
            if not hit:
                raise DomainError(f"{key} is not a grid point")
            out.append(hit[0])
        return np.array(out, dtype=bool)


class CensoredMeanBounds(BaseEstimator):
    """Identified-set bounds and confidence interval for a bracketed mean."""

    def __init__(self, delta=1.0, alpha=0.95):
        self.delta = delta
        self.alpha = alpha

    def fit(self, X, y=None):
        self.report_ = censored_mean_bounds(_as_sample(X), self.delta, self.alpha)
        self.lower_, self.upper_ = self.report_.lower, self.report_.upper
        self.ci_lower_, self.ci_upper_ = self.report_.ci_lower, self.report_.ci_upper
        return self
