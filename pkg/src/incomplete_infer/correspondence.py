"""Many-to-many correspondences between observables and latent variables.

Three concrete shapes are supported:

* :class:`FiniteCorrespondence` -- finite observables, finite latents, an
  explicit bipartite edge list.
* :class:`DiscreteIntervalCorrespondence` -- finite observables, each mapped
  to a closed real interval of latents (the entry game).
* :class:`IntervalCorrespondence` -- observables on a compact real interval,
  ``y -> [l(y), u(y)]`` with piecewise-linear envelopes.

Sets are carried by :class:`IndexSet` (bitmask over a finite carrier) and
:class:`IntervalSet` (sorted disjoint union of real intervals).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .exceptions import DomainError

__all__ = [
    "IndexSet",
    "IntervalSet",
    "FiniteCorrespondence",
    "DiscreteIntervalCorrespondence",
    "IntervalCorrespondence",
    "image",
    "preimage",
    "lower_inverse",
    "has_monotone_envelopes",
    "load_correspondence",
]


# ---------------------------------------------------------------------------
# Set carriers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndexSet:
    """Subset of a finite carrier ``{0, ..., size - 1}`` stored as a bitmask."""

    mask: int
    size: int

    def __post_init__(self):
        if self.size < 0:
            raise DomainError("carrier size must be non-negative")
        if self.mask < 0 or self.mask >> self.size:
            raise DomainError(
                f"mask {self.mask:#x} references indices outside a carrier of size {self.size}"
            )

    @classmethod
    def from_indices(cls, indices: Iterable[int], size: int) -> "IndexSet":
        mask = 0
        for i in indices:
            if not 0 <= i < size:
                raise DomainError(f"index {i} outside carrier of size {size}")
            mask |= 1 << int(i)
        return cls(mask, size)

    @classmethod
    def empty(cls, size: int) -> "IndexSet":
        return cls(0, size)

    @classmethod
    def full(cls, size: int) -> "IndexSet":
        return cls((1 << size) - 1, size)

    def indices(self) -> list[int]:
        return [i for i in range(self.size) if self.mask >> i & 1]

    def complement(self) -> "IndexSet":
        return IndexSet(((1 << self.size) - 1) ^ self.mask, self.size)

    def contains(self, points) -> np.ndarray:
        """Vectorised membership test for integer atom indices."""
        points = np.asarray(points, dtype=np.int64)
        bits = np.array([self.mask >> i & 1 for i in range(self.size)], dtype=bool)
        return bits[points]

    def is_empty(self) -> bool:
        return self.mask == 0

    def __contains__(self, i: int) -> bool:
        return 0 <= i < self.size and bool(self.mask >> i & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __or__(self, other: "IndexSet") -> "IndexSet":
        _same_size(self, other)
        return IndexSet(self.mask | other.mask, self.size)

    def __and__(self, other: "IndexSet") -> "IndexSet":
        _same_size(self, other)
        return IndexSet(self.mask & other.mask, self.size)

    def issubset(self, other: "IndexSet") -> bool:
        _same_size(self, other)
        return self.mask & ~other.mask == 0

    def __repr__(self) -> str:
        return f"IndexSet({self.indices()}, size={self.size})"


def _same_size(a: IndexSet, b: IndexSet) -> None:
    if a.size != b.size:
        raise DomainError(f"carrier sizes differ: {a.size} vs {b.size}")


# (lo, hi, lo_closed, hi_closed)
Interval = tuple[float, float, bool, bool]


def _nonempty(iv: Interval) -> bool:
    lo, hi, lc, hc = iv
    return lo < hi or (lo == hi and lc and hc and math.isfinite(lo))


def _touch(a: Interval, b: Interval) -> bool:
    """True when ``a`` (left of ``b``) and ``b`` overlap or share a closed point."""
    return a[1] > b[0] or (a[1] == b[0] and (a[3] or b[2]))


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of pairwise disjoint real intervals, sorted left to right."""

    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", _normalize(self.intervals))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def closed(cls, lo: float, hi: float) -> "IntervalSet":
        return cls(((float(lo), float(hi), True, True),))

    @classmethod
    def open(cls, lo: float, hi: float) -> "IntervalSet":
        return cls(((float(lo), float(hi), False, False),))

    @classmethod
    def interval(cls, lo, hi, lo_closed=True, hi_closed=True) -> "IntervalSet":
        return cls(((float(lo), float(hi), bool(lo_closed), bool(hi_closed)),))

    @classmethod
    def real_line(cls) -> "IntervalSet":
        return cls(((-math.inf, math.inf, False, False),))

    def is_empty(self) -> bool:
        return not self.intervals

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    __or__ = union

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for a in self.intervals:
            for b in other.intervals:
                if a[0] > b[0] or (a[0] == b[0] and not a[2]):
                    lo, lc = a[0], a[2]
                else:
                    lo, lc = b[0], b[2]
                if a[1] < b[1] or (a[1] == b[1] and not a[3]):
                    hi, hc = a[1], a[3]
                else:
                    hi, hc = b[1], b[3]
                out.append((lo, hi, lc, hc))
        return IntervalSet(tuple(out))

    __and__ = intersection

    def complement(self) -> "IntervalSet":
        out = []
        lo, lc = -math.inf, False
        for a in self.intervals:
            out.append((lo, a[0], lc, not a[2]))
            lo, lc = a[1], not a[3]
        out.append((lo, math.inf, lc, False))
        return IntervalSet(tuple(out))

    def contains(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        hit = np.zeros(points.shape, dtype=bool)
        for lo, hi, lc, hc in self.intervals:
            left = points >= lo if lc else points > lo
            right = points <= hi if hc else points < hi
            hit |= left & right
        return hit

    def __contains__(self, x: float) -> bool:
        return bool(self.contains([x])[0])

    def meets_closed(self, lo: float, hi: float) -> bool:
        """Whether the closed interval ``[lo, hi]`` intersects this set."""
        return not self.intersection(IntervalSet.closed(lo, hi)).is_empty()

    def covers_closed(self, lo: float, hi: float) -> bool:
        """Whether the closed interval ``[lo, hi]`` lies inside one component."""
        for a_lo, a_hi, lc, hc in self.intervals:
            left = lo > a_lo or (lo == a_lo and lc)
            right = hi < a_hi or (hi == a_hi and hc)
            if left and right:
                return True
        return False

    def closure(self) -> "IntervalSet":
        return IntervalSet(
            tuple((lo, hi, math.isfinite(lo), math.isfinite(hi)) for lo, hi, _, _ in self.intervals)
        )

    def length(self) -> float:
        return sum(hi - lo for lo, hi, _, _ in self.intervals)

    def __repr__(self) -> str:
        parts = []
        for lo, hi, lc, hc in self.intervals:
            parts.append(f"{'[' if lc else '('}{lo:g}, {hi:g}{']' if hc else ')'}")
        return "IntervalSet(" + (" u ".join(parts) or "{}") + ")"


def _normalize(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    ivs = []
    for lo, hi, lc, hc in intervals:
        lo, hi = float(lo), float(hi)
        # infinite endpoints are never attained
        lc = bool(lc) and math.isfinite(lo)
        hc = bool(hc) and math.isfinite(hi)
        iv = (lo, hi, lc, hc)
        if _nonempty(iv):
            ivs.append(iv)
    ivs.sort(key=lambda iv: (iv[0], not iv[2]))
    merged: list[Interval] = []
    for iv in ivs:
        if merged and _touch(merged[-1], iv):
            lo, hi, lc, hc = merged[-1]
            if iv[1] > hi or (iv[1] == hi and iv[3]):
                hi, hc = iv[1], iv[3]
            merged[-1] = (lo, hi, lc, hc)
        else:
            merged.append(iv)
    return tuple(merged)


LatentSet = Union[IndexSet, IntervalSet]
ObsSet = Union[IndexSet, IntervalSet]


# ---------------------------------------------------------------------------
# Correspondences
# ---------------------------------------------------------------------------


class FiniteCorrespondence:
    """Bipartite admissibility relation between two finite carriers.

    Parameters
    ----------
    y_labels, u_labels : sequence
        Ordered atom labels of the observable and latent carriers.
    edges : iterable of (int, int)
        Admissible ``(y_index, u_index)`` pairs.

    Every observable must have at least one admissible latent. Whether the
    inverse relation also has non-empty values is exposed as
    :attr:`inverse_valid`.
    """

    def __init__(self, y_labels: Sequence, u_labels: Sequence, edges: Iterable[tuple[int, int]]):
        self.y_labels = tuple(y_labels)
        self.u_labels = tuple(u_labels)
        ny, nu = len(self.y_labels), len(self.u_labels)
        edge_set = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if not (0 <= i < ny and 0 <= j < nu):
                raise DomainError(f"edge ({i}, {j}) outside carriers of sizes ({ny}, {nu})")
            edge_set.add((i, j))
        self.edges = frozenset(edge_set)
        y_masks = [0] * ny
        u_masks = [0] * nu
        for i, j in self.edges:
            y_masks[i] |= 1 << j
            u_masks[j] |= 1 << i
        empty = [self.y_labels[i] for i in range(ny) if not y_masks[i]]
        if empty:
            raise DomainError(f"observables with empty image: {empty}")
        self.y_masks = tuple(y_masks)
        self.u_masks = tuple(u_masks)
        self.inverse_valid = all(u_masks)

    @property
    def n_obs(self) -> int:
        return len(self.y_labels)

    @property
    def n_latent(self) -> int:
        return len(self.u_labels)

    def inverse(self) -> "FiniteCorrespondence":
        if not self.inverse_valid:
            raise DomainError("some latent atoms have no admissible observable")
        return FiniteCorrespondence(self.u_labels, self.y_labels, ((j, i) for i, j in self.edges))

    def with_edge(self, i: int, j: int) -> "FiniteCorrespondence":
        return FiniteCorrespondence(self.y_labels, self.u_labels, self.edges | {(i, j)})

    def image(self, A: IndexSet) -> IndexSet:
        _check_finite(A, self.n_obs, "observable")
        mask = 0
        for i in A.indices():
            mask |= self.y_masks[i]
        return IndexSet(mask, self.n_latent)

    def preimage(self, B: IndexSet) -> IndexSet:
        _check_finite(B, self.n_latent, "latent")
        mask = 0
        for i, m in enumerate(self.y_masks):
            if m & B.mask:
                mask |= 1 << i
        return IndexSet(mask, self.n_obs)

    def lower_inverse(self, B: IndexSet) -> IndexSet:
        _check_finite(B, self.n_latent, "latent")
        mask = 0
        for i, m in enumerate(self.y_masks):
            if m & ~B.mask == 0:
                mask |= 1 << i
        return IndexSet(mask, self.n_obs)

    def to_json(self) -> dict:
        return {"y": list(self.y_labels), "u": list(self.u_labels), "edges": sorted(map(list, self.edges))}

    def __repr__(self) -> str:
        return f"FiniteCorrespondence(|Y|={self.n_obs}, |U|={self.n_latent}, edges={len(self.edges)})"


class DiscreteIntervalCorrespondence:
    """Finite observables, each admitting a closed interval of latent values."""

    def __init__(self, y_labels: Sequence, intervals: Sequence[tuple[float, float]]):
        if len(y_labels) != len(intervals):
            raise DomainError("one interval per observable is required")
        self.y_labels = tuple(y_labels)
        ivs = []
        for lo, hi in intervals:
            lo, hi = float(lo), float(hi)
            if not lo <= hi:
                raise DomainError(f"empty image [{lo}, {hi}]")
            ivs.append((lo, hi))
        self.intervals = tuple(ivs)

    @property
    def n_obs(self) -> int:
        return len(self.y_labels)

    @property
    def latent_range(self) -> tuple[float, float]:
        return min(lo for lo, _ in self.intervals), max(hi for _, hi in self.intervals)

    def image(self, A: IndexSet) -> IntervalSet:
        _check_finite(A, self.n_obs, "observable")
        return IntervalSet(tuple((lo, hi, True, True) for i, (lo, hi) in enumerate(self.intervals) if i in A))

    def preimage(self, B: IntervalSet) -> IndexSet:
        _check_interval_set(B)
        return IndexSet.from_indices(
            (i for i, (lo, hi) in enumerate(self.intervals) if B.meets_closed(lo, hi)), self.n_obs
        )

    def lower_inverse(self, B: IntervalSet) -> IndexSet:
        _check_interval_set(B)
        return IndexSet.from_indices(
            (i for i, (lo, hi) in enumerate(self.intervals) if B.covers_closed(lo, hi)), self.n_obs
        )

    def __repr__(self) -> str:
        return f"DiscreteIntervalCorrespondence({dict(zip(self.y_labels, self.intervals))})"


class IntervalCorrespondence:
    """``y -> [l(y), u(y)]`` on ``[knots[0], knots[-1]]`` with piecewise-linear envelopes.

    Extrema of the envelopes over any subinterval are attained at its
    endpoints or at interior knots, so images are exact. Endpoint openness is
    dropped from images (they are returned closed), which is harmless for
    atomless latent laws.
    """

    def __init__(self, knots: Sequence[float], lower: Sequence[float], upper: Sequence[float]):
        knots = np.asarray(knots, dtype=float)
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if knots.ndim != 1 or knots.size < 2:
            raise DomainError("at least two knots are required")
        if lower.shape != knots.shape or upper.shape != knots.shape:
            raise DomainError("lower and upper envelopes need one value per knot")
        if np.any(np.diff(knots) <= 0):
            raise DomainError("knots must be strictly increasing")
        if not np.all(np.isfinite(knots)) or not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
            raise DomainError("knots and envelope values must be finite")
        if np.any(lower > upper):
            raise DomainError("lower envelope exceeds upper envelope")
        for arr in (knots, lower, upper):
            arr.setflags(write=False)
        self.knots, self.lower, self.upper = knots, lower, upper

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def latent_range(self) -> tuple[float, float]:
        return float(self.lower.min()), float(self.upper.max())

    def lower_env(self, y):
        return np.interp(y, self.knots, self.lower)

    def upper_env(self, y):
        return np.interp(y, self.knots, self.upper)

    def at(self, y: float) -> tuple[float, float]:
        lo, hi = self.domain
        if not lo <= y <= hi:
            raise DomainError(f"{y} outside domain [{lo}, {hi}]")
        return float(self.lower_env(y)), float(self.upper_env(y))

    def _clip(self, iv: Interval):
        dlo, dhi = self.domain
        lo, hi, lc, hc = iv
        if lo < dlo:
            lo, lc = dlo, True
        if hi > dhi:
            hi, hc = dhi, True
        return (lo, hi, lc, hc) if _nonempty((lo, hi, lc, hc)) else None

    def image(self, A: IntervalSet) -> IntervalSet:
        _check_interval_set(A)
        out = []
        for iv in A.intervals:
            iv = self._clip(iv)
            if iv is None:
                continue
            lo, hi = iv[0], iv[1]
            inner = self.knots[(self.knots > lo) & (self.knots < hi)]
            pts = np.concatenate(([lo, hi], inner))
            out.append((float(self.lower_env(pts).min()), float(self.upper_env(pts).max()), True, True))
        return IntervalSet(tuple(out))

    def _level(self, values: np.ndarray, thr: float, below: bool) -> IntervalSet:
        """Closed set of ``y`` where the interpolant of ``values`` is <= thr (or >= thr)."""
        out = []
        k, f = self.knots, values
        ok = f <= thr if below else f >= thr
        for s in range(len(k) - 1):
            x0, x1, f0, f1 = k[s], k[s + 1], f[s], f[s + 1]
            a, b = ok[s], ok[s + 1]
            if a and b:
                out.append((x0, x1, True, True))
            elif a or b:
                t = x0 + (thr - f0) / (f1 - f0) * (x1 - x0)
                t = min(max(t, x0), x1)
                out.append((x0, t, True, True) if a else (t, x1, True, True))
        return IntervalSet(tuple(out))

    def preimage(self, B: IntervalSet) -> IntervalSet:
        _check_interval_set(B)
        res = IntervalSet.empty()
        for c, d, _, _ in B.intervals:
            # Gamma(y) meets [c, d]  <=>  l(y) <= d and u(y) >= c
            s = self._level(self.lower, d, below=True) & self._level(self.upper, c, below=False)
            res = res | s
        return res

    def lower_inverse(self, B: IntervalSet) -> IntervalSet:
        _check_interval_set(B)
        res = IntervalSet.empty()
        for c, d, _, _ in B.intervals:
            s = self._level(self.lower, c, below=False) & self._level(self.upper, d, below=True)
            res = res | s
        return res

    def to_json(self) -> dict:
        return {"knots": self.knots.tolist(), "lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def __repr__(self) -> str:
        return f"IntervalCorrespondence(knots={self.knots.tolist()}, lower={self.lower.tolist()}, upper={self.upper.tolist()})"


Correspondence = Union[FiniteCorrespondence, DiscreteIntervalCorrespondence, IntervalCorrespondence]


def _check_finite(A, size: int, which: str) -> None:
    if not isinstance(A, IndexSet):
        raise DomainError(f"{which} set must be an IndexSet, got {type(A).__name__}")
    if A.size != size:
        raise DomainError(f"{which} set has carrier size {A.size}, expected {size}")


def _check_interval_set(A) -> None:
    if not isinstance(A, IntervalSet):
        raise DomainError(f"expected an IntervalSet, got {type(A).__name__}")


# Functional aliases mirroring the method names


def image(corr: Correspondence, A: ObsSet) -> LatentSet:
    """Forward image ``Gamma(A)``."""
    return corr.image(A)


def preimage(corr: Correspondence, B: LatentSet) -> ObsSet:
    """``{y : Gamma(y) meets B}``."""
    return corr.preimage(B)


def lower_inverse(corr: Correspondence, B: LatentSet) -> ObsSet:
    """``{y : Gamma(y) inside B}``."""
    return corr.lower_inverse(B)


def has_monotone_envelopes(corr: IntervalCorrespondence) -> bool:
    """True iff both envelopes are non-decreasing across the knots."""
    return bool(np.all(np.diff(corr.lower) >= 0) and np.all(np.diff(corr.upper) >= 0))


def load_correspondence(source) -> Correspondence:
    """Build a correspondence from a JSON path, JSON string, or decoded dict.

    Finite form: ``{"y": [...], "u": [...], "edges": [[i, j], ...]}``.
    Interval form: ``{"knots": [...], "lower": [...], "upper": [...]}``.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            doc = json.loads(text)
        else:
            with open(text) as fh:
                doc = json.load(fh)
    if {"y", "u", "edges"} <= doc.keys():
        return FiniteCorrespondence(doc["y"], doc["u"], [tuple(e) for e in doc["edges"]])
    if {"knots", "lower", "upper"} <= doc.keys():
        return IntervalCorrespondence(doc["knots"], doc["lower"], doc["upper"])
    raise DomainError("unrecognised correspondence document; expected keys y/u/edges or knots/lower/upper")
