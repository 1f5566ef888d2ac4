"""Zero-one cost optimal transport between observables and latents.

The primal problem asks for a coupling of ``P`` and ``nu`` supported on the
graph of the correspondence; the mass that cannot be placed there is the
violation ``T*``. It is solved as a max-flow on the bipartite network
``source -> y (P(y)) -> u (unbounded, admissible pairs only) -> sink (nu(u))``
so that ``T* = 1 - maxflow``. The dual is ``max_A P(A) - nu(Gamma(A))``, read
off the minimum cut or found by brute force over subsets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from ._maxflow import FlowNetwork
from .capacity import DiscreteMeasure
from .correspondence import FiniteCorrespondence, IndexSet
from .exceptions import CarrierMismatchError, SizeError

__all__ = ["CouplingResult", "feasible_coupling", "dual_statistic_bruteforce", "FEASIBILITY_TOL"]

FEASIBILITY_TOL = 1e-9
_FLOAT_EPS = 1e-12
_MAX_BRUTE = 24


@dataclass(frozen=True)
class CouplingResult:
    violation_mass: float
    coupling: tuple[tuple[int, int, float], ...]
    dual_witness: IndexSet
    exact: bool

    @property
    def feasible(self) -> bool:
        return self.violation_mass <= FEASIBILITY_TOL

    def coupling_matrix(self, n_obs: int, n_latent: int) -> np.ndarray:
        out = np.zeros((n_obs, n_latent))
        for i, j, m in self.coupling:
            out[i, j] += m
        return out

    def to_dict(self) -> dict:
        return {
            "violation_mass": self.violation_mass,
            "feasible": self.feasible,
            "coupling": [[i, j, m] for i, j, m in self.coupling],
            "dual_witness": self.dual_witness.indices(),
            "exact_arithmetic": self.exact,
        }


def _check(P: DiscreteMeasure, nu: DiscreteMeasure, corr: FiniteCorrespondence) -> None:
    if not isinstance(corr, FiniteCorrespondence):
        raise CarrierMismatchError("transport needs a finite correspondence; discretize first")
    if len(P) != corr.n_obs:
        raise CarrierMismatchError(f"P has {len(P)} atoms, correspondence has {corr.n_obs} observables")
    if len(nu) != corr.n_latent:
        raise CarrierMismatchError(f"nu has {len(nu)} atoms, correspondence has {corr.n_latent} latents")


def _rationalize(weights, max_den: int = 10**6) -> Optional[list[Fraction]]:
    out = []
    for w in weights:
        fr = Fraction(float(w)).limit_denominator(max_den)
        if abs(float(fr) - w) > 1e-15:
            return None
        out.append(fr)
    return out


def _integer_capacities(P: DiscreteMeasure, nu: DiscreteMeasure):
    """Scale both measures to integers when they are small-denominator rationals."""
    fp, fn = _rationalize(P.weights), _rationalize(nu.weights)
    if fp is None or fn is None:
        return None
    den = 1
    for fr in fp + fn:
        den = den * fr.denominator // math.gcd(den, fr.denominator)
    return [int(fr * den) for fr in fp], [int(fr * den) for fr in fn], den


def feasible_coupling(P: DiscreteMeasure, nu: DiscreteMeasure, corr: FiniteCorrespondence) -> CouplingResult:
    """Solve the zero-one transport problem by maximum flow.

    Rational inputs (for example empirical frequencies ``k/n``) are solved in
    exact integer arithmetic; anything else falls back to floats with a
    ``1e-12`` residual slack.
    """
    _check(P, nu, corr)
    ny, nu_n = corr.n_obs, corr.n_latent
    scaled = _integer_capacities(P, nu)
    if scaled is not None:
        cap_y, cap_u, den = scaled
        big, eps = sum(cap_y) + 1, 0
    else:
        cap_y, cap_u, den = [float(w) for w in P.weights], [float(w) for w in nu.weights], 1
        big, eps = 2.0, _FLOAT_EPS
    s, t = ny + nu_n, ny + nu_n + 1
    net = FlowNetwork(ny + nu_n + 2)
    for i in range(ny):
        net.add_edge(s, i, cap_y[i])
    mid = {}
    for i, j in sorted(corr.edges):
        mid[(i, j)] = net.add_edge(i, ny + j, big)
    for j in range(nu_n):
        net.add_edge(ny + j, t, cap_u[j])
    flow = net.max_flow(s, t, eps)

    if scaled is not None:
        violation = float(Fraction(sum(cap_y) - flow, den))
    else:
        violation = max(float(sum(cap_y) - flow), 0.0)
    coupling = []
    for (i, j), eid in mid.items():
        f = net.flow_on(eid)
        if f > eps:
            coupling.append((i, j, float(Fraction(f, den)) if scaled is not None else float(f)))
    side = net.source_side(s, eps)
    witness = IndexSet.from_indices((i for i in range(ny) if i in side), ny)
    return CouplingResult(violation, tuple(coupling), witness, scaled is not None)


def dual_statistic_bruteforce(P: DiscreteMeasure, nu: DiscreteMeasure, corr: FiniteCorrespondence) -> tuple[float, IndexSet]:
    """``max_A P(A) - nu(Gamma(A))`` by enumerating every observable subset.

    Ties (within 1e-12) go to the smallest bitmask.
    """
    _check(P, nu, corr)
    ny = corr.n_obs
    if ny > _MAX_BRUTE:
        raise SizeError(f"{ny} observables means 2**{ny} subsets; use feasible_coupling instead")
    masks = np.arange(1 << ny, dtype=np.int64)
    p_vals = np.zeros(masks.size)
    img = np.zeros(masks.size, dtype=np.int64)
    for i in range(ny):
        hit = (masks >> i & 1).astype(bool)
        p_vals[hit] += P.weights[i]
        img[hit] |= corr.y_masks[i]
    nu_w = nu.weights
    nu_vals = np.zeros(masks.size)
    for j in range(corr.n_latent):
        nu_vals += nu_w[j] * ((img >> j & 1).astype(bool))
    vals = p_vals - nu_vals
    best = float(vals.max())
    arg = int(np.flatnonzero(vals >= best - 1e-12)[0])
    return best, IndexSet(arg, ny)
