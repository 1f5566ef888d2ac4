"""Belief and plausibility functions, alternation checks, Choquet integrals.

Everything here works on finite carriers by explicit enumeration of the
``2**n`` subsets (``n <= 20``). Subsets are encoded as integer bitmasks, so a
:class:`CapacityTable` is simply a vector indexed by mask.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .correspondence import DiscreteIntervalCorrespondence, FiniteCorrespondence, IndexSet
from .exceptions import CarrierMismatchError, DomainError, NumericError, SizeError

__all__ = [
    "DiscreteMeasure",
    "CapacityTable",
    "CoreCheck",
    "belief",
    "plausibility",
    "belief_table",
    "plausibility_table",
    "probability_table",
    "is_alternating",
    "choquet_integral",
    "core_sup_expectation",
    "core_membership",
]

TOL = 1e-9
MAX_CARRIER = 20


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability weights on an ordered finite list of atoms."""

    weights: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise DomainError("a measure needs at least one atom")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise DomainError("weights must be finite and non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        labels = tuple(self.labels) if len(self.labels) else tuple(range(w.size))
        if len(labels) != w.size:
            raise DomainError("one label per weight is required")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_counts(cls, counts, labels: Sequence = ()) -> "DiscreteMeasure":
        counts = np.asarray(counts, dtype=float)
        total = counts.sum()
        if total <= 0:
            raise DomainError("counts must have a positive total")
        w = counts / total
        # absorb rounding so the sum check is exact
        w[np.argmax(w)] += 1.0 - w.sum()
        return cls(w, tuple(labels))

    @classmethod
    def uniform(cls, n: int) -> "DiscreteMeasure":
        return cls(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.weights.size

    def measure(self, A: IndexSet) -> float:
        if A.size != len(self):
            raise CarrierMismatchError(f"set over {A.size} atoms, measure over {len(self)}")
        return float(sum(self.weights[i] for i in A.indices()))


class CapacityTable:
    """A capacity on ``{0, ..., n-1}`` stored as ``values[mask]``."""

    def __init__(self, values, labels: Sequence = ()):
        values = np.array(values, dtype=float).ravel()
        n = int(round(math.log2(values.size))) if values.size else -1
        if n < 0 or 1 << n != values.size:
            raise DomainError("table length must be a power of two")
        if n > MAX_CARRIER:
            raise SizeError(f"carrier of size {n} exceeds the limit of {MAX_CARRIER}")
        if abs(values[0]) > TOL or abs(values[-1] - 1.0) > TOL:
            raise DomainError("a capacity must vanish on the empty set and equal 1 on the carrier")
        masks = np.arange(values.size)
        for i in range(n):
            lo = masks[(masks >> i & 1) == 0]
            if np.any(values[lo | 1 << i] < values[lo] - TOL):
                raise DomainError("capacity is not monotone under inclusion")
        values.setflags(write=False)
        self.values = values
        self.n = n
        self.labels = tuple(labels) if len(labels) else tuple(range(n))

    def __call__(self, B) -> float:
        mask = B.mask if isinstance(B, IndexSet) else int(B)
        return float(self.values[mask])

    def to_json(self) -> dict:
        return {str(m): float(v) for m, v in enumerate(self.values)}

    def __repr__(self) -> str:
        return f"CapacityTable(n={self.n})"


class CoreCheck(NamedTuple):
    member: bool
    witness: Optional[IndexSet]
    violation: float


def _finite_obs_measure(P: DiscreteMeasure, corr) -> None:
    if not isinstance(corr, (FiniteCorrespondence, DiscreteIntervalCorrespondence)):
        raise CarrierMismatchError("belief and plausibility need a finite observable carrier")
    if len(P) != corr.n_obs:
        raise CarrierMismatchError(f"measure has {len(P)} atoms, correspondence has {corr.n_obs} observables")


def belief(P: DiscreteMeasure, corr, B) -> float:
    """Smallest probability the structure can assign to latent event ``B``."""
    _finite_obs_measure(P, corr)
    return P.measure(corr.lower_inverse(B))


def plausibility(P: DiscreteMeasure, corr, B) -> float:
    """Largest probability the structure can assign to latent event ``B``."""
    _finite_obs_measure(P, corr)
    return P.measure(corr.preimage(B))


def _check_finite_pair(P: DiscreteMeasure, corr: FiniteCorrespondence) -> None:
    if not isinstance(corr, FiniteCorrespondence):
        raise CarrierMismatchError("a finite latent carrier is required")
    if len(P) != corr.n_obs:
        raise CarrierMismatchError(f"measure has {len(P)} atoms, correspondence has {corr.n_obs} observables")
    if corr.n_latent > MAX_CARRIER:
        raise SizeError(f"latent carrier of size {corr.n_latent} exceeds {MAX_CARRIER}")


def plausibility_table(P: DiscreteMeasure, corr: FiniteCorrespondence) -> CapacityTable:
    _check_finite_pair(P, corr)
    masks = np.arange(1 << corr.n_latent)
    vals = np.zeros(masks.size)
    for w, m in zip(P.weights, corr.y_masks):
        vals += w * ((masks & m) != 0)
    vals[-1] = 1.0
    return CapacityTable(vals, corr.u_labels)


def belief_table(P: DiscreteMeasure, corr: FiniteCorrespondence) -> np.ndarray:
    """Belief values indexed by latent mask (not a capacity in the alternating sense)."""
    _check_finite_pair(P, corr)
    masks = np.arange(1 << corr.n_latent)
    vals = np.zeros(masks.size)
    for w, m in zip(P.weights, corr.y_masks):
        vals += w * ((m & ~masks) == 0)
    return vals


def probability_table(nu: DiscreteMeasure) -> CapacityTable:
    n = len(nu)
    if n > MAX_CARRIER:
        raise SizeError(f"carrier of size {n} exceeds {MAX_CARRIER}")
    masks = np.arange(1 << n)
    bits = (masks[:, None] >> np.arange(n)) & 1
    vals = bits @ nu.weights
    vals[-1] = 1.0
    return CapacityTable(vals, nu.labels)


# ---------------------------------------------------------------------------
# Alternation
# ---------------------------------------------------------------------------


def _alternating_local(values: np.ndarray, n: int, order: int, tol: float) -> bool:
    # (-1)^j * (j-th finite difference along distinct singletons) <= 0, j = 2..order;
    # equivalent to the family inequalities up to that order.
    masks = np.arange(1 << n)
    for j in range(2, min(order, n) + 1):
        for combo in itertools.combinations(range(n), j):
            imask = sum(1 << i for i in combo)
            base = masks[(masks & imask) == 0]
            diff = np.zeros(base.size)
            for r in range(j + 1):
                for sub in itertools.combinations(combo, r):
                    smask = sum(1 << i for i in sub)
                    diff += (-1) ** (j - r) * values[base | smask]
            if np.any((-1) ** j * diff > tol):
                return False
    return True


def _alternating_families(values: np.ndarray, fams: np.ndarray, tol: float) -> bool:
    """Check the defining inequality for every row (a family of sets) of ``fams``."""
    k = fams.shape[1]
    inter = np.bitwise_and.reduce(fams, axis=1)
    rhs = np.zeros(fams.shape[0])
    for r in range(1, k + 1):
        for sub in itertools.combinations(range(k), r):
            union = np.bitwise_or.reduce(fams[:, list(sub)], axis=1)
            rhs += (-1) ** (r + 1) * values[union]
    return bool(np.all(values[inter] <= rhs + tol))


def is_alternating(
    cap: CapacityTable,
    order: int,
    *,
    method: str = "local",
    max_families: int = 2_000_000,
    samples: int = 200_000,
    seed: Optional[int] = None,
    tol: float = TOL,
) -> bool:
    """Test whether ``cap`` is alternating of the given order.

    ``method="local"`` checks signed finite differences along singletons,
    which is exact for every order. ``method="families"`` evaluates the
    defining inequality directly on families of ``2..order`` sets:
    exhaustively (unordered, with repetition) when the count fits in
    ``max_families``, otherwise on ``samples`` random families. A sampled
    pass is evidence, not a certificate.
    """
    if order < 2:
        raise DomainError("alternation order must be at least 2")
    values = cap.values
    if method == "local":
        return _alternating_local(values, cap.n, order, tol)
    if method != "families":
        raise DomainError(f"unknown method {method!r}")
    n_sets = values.size
    rng = np.random.default_rng(seed)
    for k in range(2, order + 1):
        count = math.comb(n_sets + k - 1, k)
        if count <= max_families:
            fams = np.array(list(itertools.combinations_with_replacement(range(n_sets), k)), dtype=np.int64)
        else:
            fams = rng.integers(0, n_sets, size=(samples, k))
        for chunk in np.array_split(fams, max(1, len(fams) // 100_000)):
            if not _alternating_families(values, chunk, tol):
                return False
    return True


# ---------------------------------------------------------------------------
# Choquet integral and the core
# ---------------------------------------------------------------------------


def choquet_integral(cap: CapacityTable, f) -> float:
    """Choquet integral of ``f`` (one value per atom) against ``cap``."""
    f = np.asarray(f, dtype=float).ravel()
    if f.size != cap.n:
        raise CarrierMismatchError(f"f has {f.size} values, capacity has {cap.n} atoms")
    if not np.all(np.isfinite(f)):
        raise DomainError("f must be bounded")
    order = np.argsort(-f, kind="stable")
    total, mask, prev = 0.0, 0, 0.0
    for i in order:
        mask |= 1 << int(i)
        cur = cap.values[mask]
        total += f[i] * (cur - prev)
        prev = cur
    return float(total)


def core_sup_expectation(P: DiscreteMeasure, corr: FiniteCorrespondence, f) -> float:
    """Maximum of ``sum(f * q)`` over measures ``q`` dominated by the plausibility."""
    f = np.asarray(f, dtype=float).ravel()
    if f.size != corr.n_latent:
        raise CarrierMismatchError(f"f has {f.size} values, latent carrier has {corr.n_latent} atoms")
    table = plausibility_table(P, corr).values
    n = corr.n_latent
    masks = np.arange(1, (1 << n) - 1)
    A_ub = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    res = linprog(
        -f,
        A_ub=A_ub if masks.size else None,
        b_ub=table[masks] if masks.size else None,
        A_eq=np.ones((1, n)),
        b_eq=[1.0],
        bounds=[(0, None)] * n,
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise NumericError(f"core program failed: {res.message}")
    return float(-res.fun)


def core_membership(nu: DiscreteMeasure, corr: FiniteCorrespondence, P: DiscreteMeasure, tol: float = TOL) -> CoreCheck:
    """Whether ``nu(B) <= plausibility(B)`` for every latent ``B``.

    On failure the witness is the set with the largest violation (smallest
    mask among ties).
    """
    if len(nu) != corr.n_latent:
        raise CarrierMismatchError(f"nu has {len(nu)} atoms, latent carrier has {corr.n_latent}")
    plaus = plausibility_table(P, corr).values
    gap = probability_table(nu).values - plaus
    worst = float(gap.max())
    if worst <= tol:
        return CoreCheck(True, None, worst)
    mask = int(np.flatnonzero(gap >= worst - 1e-12)[0])
    return CoreCheck(False, IndexSet(mask, corr.n_latent), worst)
