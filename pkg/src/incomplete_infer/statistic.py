"""Supremum statistic ``T = max_A P_n(A) - nu(Gamma(A))`` and its null quantiles.

Two quantile approximations are provided:

* :func:`bridge_quantile` simulates the plug-in ``P_n``-Brownian bridge and
  takes its supremum over the estimated binding class;
* :func:`subsample_quantile` recomputes ``sqrt(b) T`` on subsamples of size
  ``b`` drawn without replacement.

Both report the left-continuous quantile ``inf{x : F(x) >= alpha}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .correspondence import IndexSet, IntervalSet
from .exceptions import CarrierMismatchError, ConfigError, NumericError
from .setclass import SetFamily, default_bandwidth, enumerate_family

__all__ = [
    "EmpiricalMeasure",
    "StatisticValue",
    "QuantileEstimate",
    "ks_capacity_statistic",
    "bridge_quantile",
    "subsample_quantile",
    "inf_quantile",
    "bridge_covariance",
]

_EIG_CLIP = -1e-10
_CHUNK = 512


class EmpiricalMeasure:
    """Empirical law of a sample on the observable carrier of ``model``."""

    def __init__(self, sample, model):
        self.finite = model.finite_observables
        data = model.encode_sample(sample)
        self.n = data.size
        if self.finite:
            self.codes = data
            counts = np.bincount(data, minlength=model.n_obs)
            self.points = np.arange(model.n_obs)
            self.weights = counts / self.n
        else:
            self.sorted = np.sort(data)
            self.points, counts = np.unique(self.sorted, return_counts=True)
            self.weights = counts / self.n

    def measure(self, A) -> float:
        if isinstance(A, IndexSet):
            if not self.finite or A.size != self.points.size:
                raise CarrierMismatchError("set and sample live on different carriers")
            return float(sum(self.weights[i] for i in A.indices()))
        if self.finite:
            raise CarrierMismatchError("interval sets need a continuous carrier")
        count = 0
        for lo, hi, lc, hc in A.intervals:
            left = np.searchsorted(self.sorted, lo, side="left" if lc else "right")
            right = np.searchsorted(self.sorted, hi, side="right" if hc else "left")
            count += max(int(right - left), 0)
        return count / self.n

    def measure_many(self, sets) -> np.ndarray:
        if self.finite:
            return self.membership(sets) @ self.weights
        return np.array([self.measure(A) for A in sets])

    def membership(self, sets) -> np.ndarray:
        """Boolean matrix: row ``r`` flags the support points inside ``sets[r]``."""
        if not sets:
            return np.zeros((0, self.points.size), dtype=bool)
        if self.finite:
            masks = np.array([A.mask for A in sets], dtype=object)
            m = self.points.size
            if m <= 62:
                masks = masks.astype(np.int64)
                return ((masks[:, None] >> np.arange(m)) & 1).astype(bool)
            return np.array([[bool(A.mask >> i & 1) for i in range(m)] for A in sets])
        return np.array([A.contains(self.points) for A in sets])


@dataclass(frozen=True)
class StatisticValue:
    value: float
    scaled: float
    argmax: object
    family: str
    n: int

    def to_dict(self) -> dict:
        return {
            "T": self.value,
            "sqrt_n_T": self.scaled,
            "argmax": _set_to_json(self.argmax),
            "family": self.family,
            "n": self.n,
        }


@dataclass(frozen=True)
class QuantileEstimate:
    alpha: float
    q_hat: float
    method: str
    replications: int
    seed: Optional[int]
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "alpha": self.alpha,
            "q_hat": self.q_hat,
            "method": self.method,
            "replications": self.replications,
            "seed": self.seed,
        }
        out.update(self.details)
        return out


def _set_to_json(A):
    if isinstance(A, IndexSet):
        return {"indices": A.indices()}
    if isinstance(A, IntervalSet):
        return {
            "intervals": [
                [None if math.isinf(lo) else lo, None if math.isinf(hi) else hi, lc, hc]
                for lo, hi, lc, hc in A.intervals
            ]
        }
    return None


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")


def inf_quantile(values, alpha: float) -> float:
    """``inf{x : mean(values <= x) >= alpha}``."""
    vals = np.sort(np.asarray(values, dtype=float))
    k = math.ceil(round(alpha * vals.size, 9))
    return float(vals[max(k, 1) - 1])


def _evaluate(emp: EmpiricalMeasure, model, fam: SetFamily):
    cands = enumerate_family(fam, model, None if emp.finite else emp.points)
    p = emp.measure_many(cands)
    cap = model.nu_gamma_many(cands)
    return cands, p, cap


def ks_capacity_statistic(sample, model, fam: SetFamily) -> StatisticValue:
    """Exact maximum of ``P_n(A) - nu(Gamma(A))`` over the enumerated family."""
    emp = EmpiricalMeasure(sample, model)
    cands, p, cap = _evaluate(emp, model, fam)
    diff = p - cap
    best = int(np.argmax(diff))
    value = float(diff[best])
    return StatisticValue(value, math.sqrt(emp.n) * value, cands[best], fam.label, emp.n)


def bridge_covariance(membership: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``P(A & B) - P(A) P(B)`` for the rows of a membership matrix."""
    M = membership.astype(float)
    p = M @ weights
    return (M * weights) @ M.T - np.outer(p, p)


def _bridge_maxima(M: np.ndarray, w: np.ndarray, reps: int, rng, factorization: str) -> np.ndarray:
    p = M @ w
    zero_var = p * (1 - p) <= 1e-15
    if factorization == "atoms":
        # G(A) = sum_{i in A} (sqrt(w_i) Z_i - w_i S),  S = sum_j sqrt(w_j) Z_j
        root = np.sqrt(w)
        out = np.empty(reps)
        for start in range(0, reps, _CHUNK):
            Z = rng.standard_normal((min(_CHUNK, reps - start), w.size))
            incr = Z * root - np.outer(Z @ root, w)
            G = incr @ M.T
            G[:, zero_var] = 0.0
            out[start:start + len(Z)] = G.max(axis=1)
        return out
    if factorization == "eigh":
        cov = bridge_covariance(M, w)
        lam, vec = np.linalg.eigh(cov)
        if lam.min() < _EIG_CLIP:
            raise NumericError(f"bridge covariance has eigenvalue {lam.min():.3e} below {_EIG_CLIP}")
        keep = lam > 0
        factor = vec[:, keep] * np.sqrt(lam[keep])
        Z = rng.standard_normal((reps, factor.shape[1]))
        G = Z @ factor.T
        G[:, zero_var] = 0.0
        return G.max(axis=1)
    raise ConfigError(f"unknown factorization {factorization!r}")


def bridge_quantile(
    sample,
    model,
    fam: SetFamily,
    alpha: float = 0.95,
    reps: int = 1000,
    h_n: Optional[float] = None,
    seed: Optional[int] = None,
    factorization: str = "atoms",
) -> QuantileEstimate:
    """Quantile of the bridge supremum over the estimated binding class.

    ``factorization="atoms"`` builds the plug-in bridge from one Gaussian per
    support point, which is exact and keeps draws shared across binding
    classes (so the quantile is monotone in ``h_n`` for a fixed seed).
    ``"eigh"`` factors the covariance matrix directly, clipping eigenvalues
    down to -1e-10.
    """
    _check_alpha(alpha)
    if reps < 100:
        raise ConfigError("at least 100 bridge replications are required")
    emp = EmpiricalMeasure(sample, model)
    if h_n is None:
        h_n = default_bandwidth(emp.n)
    if h_n < 0:
        raise ConfigError("bandwidth must be non-negative")
    cands, p, cap = _evaluate(emp, model, fam)
    members = np.flatnonzero(p >= cap - h_n - 1e-12)
    M = emp.membership([cands[i] for i in members]).astype(float)
    rng = np.random.default_rng(seed)
    maxima = _bridge_maxima(M, emp.weights, reps, rng, factorization)
    q = inf_quantile(maxima, alpha)
    details = {"bandwidth": float(h_n), "binding_class_size": int(members.size), "family_size": len(cands)}
    return QuantileEstimate(float(alpha), q, "bridge", int(reps), seed, details)


def default_subsample_size(n: int) -> int:
    return math.ceil(n ** (2 / 3))


def subsample_quantile(
    sample,
    model,
    fam: SetFamily,
    alpha: float = 0.95,
    b_n: Optional[int] = None,
    B_n: int = 500,
    seed: Optional[int] = None,
) -> QuantileEstimate:
    """Quantile of ``sqrt(b) T`` over ``B_n`` subsamples of size ``b_n`` (without replacement)."""
    _check_alpha(alpha)
    emp = EmpiricalMeasure(sample, model)
    n = emp.n
    if b_n is None:
        b_n = default_subsample_size(n)
    if b_n >= n:
        raise ConfigError(f"subsample size {b_n} must be below n = {n} (need 1/b_n + b_n/n -> 0)")
    if b_n < 2:
        raise ConfigError("subsample size must be at least 2")
    if B_n < 100:
        raise ConfigError("at least 100 subsamples are required")
    rng = np.random.default_rng(seed)
    data = np.asarray(model.encode_sample(sample))
    stats = np.empty(B_n)
    if emp.finite:
        cands = enumerate_family(fam, model)
        M = emp.membership(cands).astype(float)
        cap = model.nu_gamma_many(cands)
        m = emp.points.size
        picks = np.stack([rng.choice(n, b_n, replace=False) for _ in range(B_n)])
        codes = data[picks] + m * np.arange(B_n)[:, None]
        counts = np.bincount(codes.ravel(), minlength=B_n * m).reshape(B_n, m)
        stats = ((counts / b_n) @ M.T - cap).max(axis=1)
    else:
        for i in range(B_n):
            sub = data[rng.choice(n, b_n, replace=False)]
            stats[i] = ks_capacity_statistic(sub, model, fam).value
    q = inf_quantile(math.sqrt(b_n) * stats, alpha)
    details = {"subsample_size": int(b_n)}
    return QuantileEstimate(float(alpha), q, "subsample", int(B_n), seed, details)
