"""Families of observable sets over which the supremum statistic runs.

Continuous families are reduced to finite candidate lists anchored at the
distinct order statistics of the sample. Because the empirical measure is a
right-continuous step function and ``nu(Gamma(.))`` is continuous in the
endpoints for atomless ``nu``, the supremum over the continuum family equals
the maximum over these candidates:

* cells ``(-inf, y]`` and ``(y, inf)``: candidates ``(-inf, y_(j)]`` and the
  limits ``[y_(j), inf)``, plus the empty set and the whole line;
* open rectangles ``(y, z)``: their closures ``[y_(a), y_(b)]``;
* unions of at most ``K`` rectangles: unions of non-touching closed runs.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .capacity import DiscreteMeasure
from .correspondence import FiniteCorrespondence, IndexSet, IntervalSet
from .exceptions import CarrierMismatchError, ConfigError, SizeError

__all__ = [
    "SetFamily",
    "BindingClass",
    "CoreDeterminingResult",
    "enumerate_family",
    "binding_class",
    "estimated_binding_class",
    "default_bandwidth",
    "core_determining_gap",
    "is_core_determining_bruteforce",
]

KINDS = ("powerset", "cells", "rectangles", "unions")
MAX_POWERSET = 24
DEFAULT_BUDGET = 2_000_000


@dataclass(frozen=True)
class SetFamily:
    """A family of observable sets: ``powerset``, ``cells``, ``rectangles`` or ``unions`` of K rectangles."""

    kind: str = "cells"
    k: int = 1
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown family {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.kind == "unions" and not 1 <= self.k <= 3:
            raise ConfigError("unions of rectangles support K in 1..3")

    @classmethod
    def parse(cls, text: str, budget: int = DEFAULT_BUDGET) -> "SetFamily":
        """Parse ``powerset``, ``cells``, ``rectangles`` or ``unions:K``."""
        text = text.strip().lower()
        if text.startswith("unions"):
            _, _, k = text.partition(":")
            try:
                return cls("unions", int(k or 1), budget)
            except ValueError:
                raise ConfigError(f"bad family specification {text!r}") from None
        return cls(text, 1, budget)

    @property
    def label(self) -> str:
        return f"unions:{self.k}" if self.kind == "unions" else self.kind

    def count(self, m: int, finite: bool) -> int:
        """Number of candidates for ``m`` atoms (or distinct sample points)."""
        if self.kind == "powerset":
            return 1 << m
        extra = 1 if finite else 2
        if self.kind == "cells":
            return 2 * m if finite else 2 * m + 2
        k = 1 if self.kind == "rectangles" else self.k
        runs = sum(math.comb(m + 1, 2 * j) for j in range(1, k + 1))
        return runs + extra

    def enumerate(self, carrier, sample: Optional[Sequence[float]] = None) -> list:
        return enumerate_family(self, carrier, sample)


def _runs(m: int, k: int):
    """Unions of at most ``k`` non-touching runs ``[a, b]`` of ``0..m-1``."""
    for j in range(1, k + 1):
        for cuts in itertools.combinations(range(m + 1), 2 * j):
            yield tuple((cuts[2 * r], cuts[2 * r + 1] - 1) for r in range(j))


def _is_finite_carrier(carrier) -> tuple[bool, int]:
    if isinstance(carrier, (int, np.integer)):
        return True, int(carrier)
    if hasattr(carrier, "finite_observables"):
        if carrier.finite_observables:
            return True, carrier.n_obs
        return False, -1
    raise CarrierMismatchError(f"cannot infer a carrier from {type(carrier).__name__}")


def enumerate_family(fam: SetFamily, carrier, sample: Optional[Sequence[float]] = None) -> list:
    """Deterministic candidate list for ``fam``; always contains the empty set and the carrier.

    ``carrier`` is a finite size, or a structure. Continuous carriers need the
    sample (any order; it is sorted and de-duplicated here).
    """
    finite, n = _is_finite_carrier(carrier)
    if finite:
        m = n
    else:
        if sample is None:
            raise CarrierMismatchError("continuous families are anchored at a sample")
        pts = np.unique(np.asarray(sample, dtype=float))
        m = pts.size
        if fam.kind == "powerset":
            raise CarrierMismatchError("the power set family needs a finite carrier")
    if fam.kind == "powerset" and m > MAX_POWERSET:
        raise SizeError(f"power set of {m} atoms exceeds the limit of 2**{MAX_POWERSET}")
    total = fam.count(m, finite)
    if total > fam.budget:
        raise SizeError(f"{fam.label} family has {total} candidates, above the budget of {fam.budget}")

    if finite:
        full = (1 << m) - 1
        if fam.kind == "powerset":
            return [IndexSet(mask, m) for mask in range(1 << m)]
        masks = [0]
        if fam.kind == "cells":
            masks += [(1 << (j + 1)) - 1 for j in range(m)]
            masks += [full ^ ((1 << j) - 1) for j in range(1, m)]
        else:
            k = 1 if fam.kind == "rectangles" else fam.k
            for runs in _runs(m, k):
                mask = 0
                for a, b in runs:
                    mask |= ((1 << (b + 1)) - 1) ^ ((1 << a) - 1)
                masks.append(mask)
        return [IndexSet(mask, m) for mask in masks]

    out = [IntervalSet.empty()]
    if fam.kind == "cells":
        out += [IntervalSet.interval(-math.inf, p, False, True) for p in pts]
        out += [IntervalSet.interval(p, math.inf, True, False) for p in pts]
    else:
        k = 1 if fam.kind == "rectangles" else fam.k
        for runs in _runs(m, k):
            out.append(IntervalSet(tuple((pts[a], pts[b], True, True) for a, b in runs)))
    out.append(IntervalSet.real_line())
    return out


# ---------------------------------------------------------------------------
# Binding classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BindingClass:
    members: tuple[int, ...]
    h: float
    candidates: tuple = ()

    def sets(self) -> list:
        return [self.candidates[i] for i in self.members]

    def __len__(self) -> int:
        return len(self.members)


def _exact_measure(P, A) -> float:
    if isinstance(A, IndexSet):
        return P.measure(A)
    total = 0.0
    for lo, hi, _, _ in A.intervals:
        total += float(P.cdf(hi)) - float(P.cdf(lo))
    return total


def binding_class(fam: SetFamily, P, model, h: float = 0.0, points: Optional[Sequence[float]] = None) -> BindingClass:
    """``{A in fam : P(A) >= nu(Gamma(A)) - h}`` for a known law ``P``.

    ``P`` is a :class:`DiscreteMeasure` on a finite carrier, or an atomless
    law with a ``cdf``; continuous families are enumerated at ``points``.
    """
    if h < 0:
        raise ConfigError("bandwidth must be non-negative")
    cands = enumerate_family(fam, model, points)
    members = tuple(
        i for i, A in enumerate(cands) if _exact_measure(P, A) >= model.nu_gamma(A) - h - 1e-12
    )
    return BindingClass(members, float(h), tuple(cands))


def estimated_binding_class(fam: SetFamily, sample, model, h_n: float) -> BindingClass:
    """Data-driven binding class using the empirical measure of ``sample``."""
    from .statistic import EmpiricalMeasure

    if h_n < 0:
        raise ConfigError("bandwidth must be non-negative")
    emp = EmpiricalMeasure(sample, model)
    cands = enumerate_family(fam, model, emp.points if not emp.finite else None)
    p = emp.measure_many(cands)
    cap = model.nu_gamma_many(cands)
    members = tuple(int(i) for i in np.flatnonzero(p >= cap - h_n - 1e-12))
    return BindingClass(members, float(h_n), tuple(cands))


def default_bandwidth(n: int, c: float = 0.5, gamma: float = 0.25) -> float:
    """``c * n**(-gamma)``; any ``0 < gamma < 1/2`` meets the rate conditions."""
    if n < 2:
        raise ConfigError("bandwidth needs a sample of size at least 2")
    if c <= 0:
        raise ConfigError("bandwidth scale must be positive")
    if not 0 < gamma < 0.5:
        raise ConfigError(
            f"bandwidth exponent {gamma} must lie in (0, 1/2) so that h_n -> 0 "
            "and h_n^-1 sqrt(ln ln n / n) -> 0"
        )
    return float(c * n ** (-gamma))


# ---------------------------------------------------------------------------
# Core-determining search
# ---------------------------------------------------------------------------


class CoreDeterminingResult(NamedTuple):
    verdict: bool
    counterexample: Optional[tuple[np.ndarray, IndexSet]]


def _capacities(corr: FiniteCorrespondence, nu: DiscreteMeasure, masks: Sequence[int]) -> np.ndarray:
    out = np.empty(len(masks))
    for r, mask in enumerate(masks):
        img = 0
        for i in range(corr.n_obs):
            if mask >> i & 1:
                img |= corr.y_masks[i]
        out[r] = sum(nu.weights[j] for j in range(corr.n_latent) if img >> j & 1)
    return out


def _indicator(masks: Sequence[int], n: int) -> np.ndarray:
    return ((np.asarray(masks, dtype=np.int64)[:, None] >> np.arange(n)) & 1).astype(float)


def core_determining_gap(fam: SetFamily, corr: FiniteCorrespondence, nu: DiscreteMeasure, P) -> tuple[float, float, IndexSet]:
    """``(sup over fam, sup over all subsets, argmax subset)`` of ``P - nu Gamma``."""
    n = corr.n_obs
    fam_masks = [A.mask for A in enumerate_family(fam, n)]
    all_masks = list(range(1 << n))
    P = np.asarray(P, dtype=float)
    g_fam = _indicator(fam_masks, n) @ P - _capacities(corr, nu, fam_masks)
    g_all = _indicator(all_masks, n) @ P - _capacities(corr, nu, all_masks)
    best = float(g_all.max())
    arg = int(np.flatnonzero(g_all >= best - 1e-12)[0])
    return float(g_fam.max()), best, IndexSet(arg, n)


def is_core_determining_bruteforce(
    fam: SetFamily,
    corr: FiniteCorrespondence,
    nu: DiscreteMeasure,
    trials: int = 10_000,
    seed: Optional[int] = None,
    tol: float = 1e-9,
) -> CoreDeterminingResult:
    """Randomised search for a law ``P`` that ``fam`` wrongly accepts.

    Each trial draws ``P`` uniformly from the simplex. When the structure
    admits a compatible law ``P0`` (every latent atom reachable), the trial is
    pulled back along the segment to ``P0`` until it sits on the boundary of
    the region where ``fam`` raises no violation, which is where misses live.
    A returned counterexample ``(P, A)`` certifies failure; ``True`` only
    means none was found.
    """
    n = corr.n_obs
    if n > 12:
        raise SizeError(f"{n} observables exceed the brute-force limit of 12")
    if len(nu) != corr.n_latent:
        raise CarrierMismatchError(f"nu has {len(nu)} atoms, correspondence has {corr.n_latent} latents")
    fam_masks = [A.mask for A in enumerate_family(fam, n)]
    all_masks = list(range(1 << n))
    M_fam, c_fam = _indicator(fam_masks, n), _capacities(corr, nu, fam_masks)
    M_all, c_all = _indicator(all_masks, n), _capacities(corr, nu, all_masks)

    anchor = None
    if corr.inverse_valid:
        anchor = np.zeros(n)
        for j, umask in enumerate(corr.u_masks):
            ys = [i for i in range(n) if umask >> i & 1]
            anchor[ys] += nu.weights[j] / len(ys)
        g0 = np.minimum(M_fam @ anchor - c_fam, 0.0)

    rng = np.random.default_rng(seed)
    draws = rng.dirichlet(np.ones(n), size=trials)
    for start in range(0, trials, 2048):
        D = draws[start:start + 2048]
        g1 = D @ M_fam.T - c_fam
        if anchor is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(g1 > 0, -g0 / (g1 - g0), np.inf)
            t = np.minimum(ratio.min(axis=1), 1.0)
            cand = (1 - t)[:, None] * anchor + t[:, None] * D
        else:
            cand = D[(g1 <= tol).all(axis=1)]
        if cand.size == 0:
            continue
        ok = (cand @ M_fam.T - c_fam <= tol).all(axis=1)
        g_all = cand @ M_all.T - c_all
        bad = np.flatnonzero(ok & (g_all.max(axis=1) > tol))
        if bad.size:
            r = int(bad[0])
            row = g_all[r]
            arg = int(np.flatnonzero(row >= row.max() - 1e-12)[0])
            return CoreDeterminingResult(False, (cand[r].copy(), IndexSet(arg, n)))
    return CoreDeterminingResult(True, None)
