"""A structure pairs a correspondence with a latent law ``nu``.

It is the "model" consumed by the statistic and inference layers: it knows
its observable carrier, evaluates ``nu(Gamma(A))`` for observable sets, and
can be discretized into a finite correspondence for the transport oracle.
"""
from __future__ import annotations

import math
from typing import Any, Optional, Sequence

import numpy as np

from .capacity import DiscreteMeasure
from .correspondence import (
    DiscreteIntervalCorrespondence,
    FiniteCorrespondence,
    IndexSet,
    IntervalCorrespondence,
    IntervalSet,
    has_monotone_envelopes,
)
from .exceptions import CarrierMismatchError, DataError, DomainError

__all__ = ["Structure", "DEFAULT_RESOLUTION"]

DEFAULT_RESOLUTION = 512


class Structure:
    """Correspondence ``Gamma`` together with the latent law ``nu``.

    ``latent`` is a :class:`DiscreteMeasure` for a
    :class:`FiniteCorrespondence`, and any object with a vectorised ``cdf``
    (a frozen ``scipy.stats`` distribution, say) for interval-valued
    correspondences. Continuous latent laws are assumed atomless.
    """

    def __init__(self, correspondence, latent, name: Optional[str] = None, params: Optional[dict] = None):
        if isinstance(correspondence, FiniteCorrespondence):
            if not isinstance(latent, DiscreteMeasure):
                raise CarrierMismatchError("a finite correspondence needs a DiscreteMeasure latent law")
            if len(latent) != correspondence.n_latent:
                raise CarrierMismatchError(
                    f"nu has {len(latent)} atoms, correspondence has {correspondence.n_latent} latents"
                )
        elif isinstance(correspondence, (DiscreteIntervalCorrespondence, IntervalCorrespondence)):
            if not hasattr(latent, "cdf"):
                raise CarrierMismatchError("interval-valued correspondences need a latent law with a cdf")
        else:
            raise TypeError(f"unsupported correspondence {type(correspondence).__name__}")
        self.correspondence = correspondence
        self.latent = latent
        self.name = name or type(correspondence).__name__
        self.params = dict(params or {})

    # -- carrier ---------------------------------------------------------

    @property
    def finite_observables(self) -> bool:
        return not isinstance(self.correspondence, IntervalCorrespondence)

    @property
    def n_obs(self) -> int:
        if not self.finite_observables:
            raise CarrierMismatchError("observable carrier is continuous")
        return self.correspondence.n_obs

    @property
    def y_labels(self) -> tuple:
        return self.correspondence.y_labels

    @property
    def domain(self) -> tuple[float, float]:
        if self.finite_observables:
            raise CarrierMismatchError("observable carrier is finite")
        return self.correspondence.domain

    # -- measures --------------------------------------------------------

    def latent_measure(self, B) -> float:
        if isinstance(B, IndexSet):
            return self.latent.measure(B)
        total = 0.0
        for lo, hi, _, _ in B.intervals:
            total += float(self.latent.cdf(hi)) - float(self.latent.cdf(lo))
        return min(max(total, 0.0), 1.0)

    def nu_gamma(self, A) -> float:
        """``nu(Gamma(A))`` for an observable set ``A``."""
        return self.latent_measure(self.correspondence.image(A))

    def nu_gamma_many(self, sets) -> np.ndarray:
        """Vectorised :meth:`nu_gamma` (one ``cdf`` call for interval-valued images)."""
        if isinstance(self.correspondence, FiniteCorrespondence):
            return np.array([self.nu_gamma(A) for A in sets], dtype=float)
        owner, los, his = [], [], []
        for r, A in enumerate(sets):
            for lo, hi, _, _ in self.correspondence.image(A).intervals:
                owner.append(r)
                los.append(lo)
                his.append(hi)
        total = np.zeros(len(sets))
        if owner:
            cdf = self.latent.cdf
            np.add.at(total, owner, np.asarray(cdf(np.array(his)), float) - np.asarray(cdf(np.array(los)), float))
        return np.clip(total, 0.0, 1.0)

    # -- data ------------------------------------------------------------

    def encode_sample(self, sample) -> np.ndarray:
        """Atom indices (finite carriers) or floats inside the domain."""
        arr = np.asarray(sample).ravel()
        if arr.size == 0:
            raise DataError("empty sample")
        if self.finite_observables:
            lookup = {}
            for i, lab in enumerate(self.y_labels):
                lookup[_key(lab)] = i
            try:
                return np.array([lookup[_key(v)] for v in arr], dtype=np.int64)
            except KeyError as exc:
                raise DataError(f"observation {exc.args[0]!r} is not in the carrier {list(self.y_labels)}") from None
        arr = arr.astype(float)
        lo, hi = self.domain
        if np.any(~np.isfinite(arr)) or np.any(arr < lo) or np.any(arr > hi):
            raise DataError(f"observations must lie in the domain [{lo}, {hi}]")
        return arr

    # -- certificates ----------------------------------------------------

    def core_determining_note(self, family) -> str:
        """Which sufficient condition, if any, backs the family for this structure."""
        kind = getattr(family, "kind", str(family))
        if self.finite_observables and kind == "powerset":
            return "certified: power set of a finite carrier"
        if (
            not self.finite_observables
            and kind in ("cells", "rectangles", "unions")
            and has_monotone_envelopes(self.correspondence)
        ):
            return "certified: monotone envelopes"
        return "unverified: no certificate available for this family"

    # -- discretization --------------------------------------------------

    def _latent_grid(self, resolution: int) -> np.ndarray:
        lo, hi = self.correspondence.latent_range
        dist = self.latent
        if hasattr(dist, "support"):
            s_lo, s_hi = (float(x) for x in dist.support())
        else:
            s_lo, s_hi = -math.inf, math.inf
        if not math.isfinite(s_lo):
            s_lo = float(dist.ppf(1e-12))
        if not math.isfinite(s_hi):
            s_hi = float(dist.ppf(1 - 1e-12))
        lo, hi = min(lo, s_lo), max(hi, s_hi)
        if hi <= lo:
            hi = lo + 1.0
        return np.linspace(lo, hi, resolution + 1)

    def discretize(self, resolution: int = DEFAULT_RESOLUTION, obs_points: Optional[Sequence[float]] = None):
        """Finite approximation ``(corr, nu, obs_labels)`` for the transport oracle.

        The latent range is cut into ``resolution`` equal cells; each cell
        carries its ``nu`` mass (tails are folded into the end cells) and is
        admissible for ``y`` when it overlaps ``Gamma(y)`` with positive length,
        or contains it when ``Gamma(y)`` is a point. ``nu(Gamma(A))`` is then
        overstated by at most two cells' mass per image component.
        Continuous observables are represented by ``obs_points``.
        """
        corr = self.correspondence
        if isinstance(corr, FiniteCorrespondence):
            return corr, self.latent, list(corr.y_labels)
        if resolution < 1:
            raise DomainError("resolution must be positive")
        if isinstance(corr, DiscreteIntervalCorrespondence):
            labels = list(corr.y_labels)
            images = list(corr.intervals)
        else:
            if obs_points is None:
                raise DomainError("continuous observables need explicit obs_points")
            labels = [float(y) for y in obs_points]
            images = [corr.at(y) for y in labels]
        grid = self._latent_grid(resolution)
        cdf = np.asarray(self.latent.cdf(grid), dtype=float)
        cdf[0], cdf[-1] = 0.0, 1.0
        mass = np.clip(np.diff(cdf), 0.0, None)
        mass /= mass.sum()
        edges = []
        c_lo, c_hi = grid[:-1], grid[1:]
        for i, (l, u) in enumerate(images):
            hit = np.flatnonzero(np.minimum(c_hi, u) - np.maximum(c_lo, l) > 0)
            if hit.size == 0:
                hit = np.flatnonzero((c_lo <= u) & (c_hi >= l))
            edges.extend((i, int(j)) for j in hit)
        u_labels = [f"[{a:.6g},{b:.6g}]" for a, b in zip(c_lo, c_hi)]
        fc = FiniteCorrespondence(labels, u_labels, edges)
        return fc, DiscreteMeasure(mass, tuple(u_labels)), labels

    def describe(self) -> dict[str, Any]:
        out: dict[str, Any] = {"name": self.name}
        out.update(self.params)
        return out

    def __repr__(self) -> str:
        return f"Structure({self.name}, {self.params})"


def _key(v):
    try:
        f = float(v)
    except (TypeError, ValueError):
        return ("s", str(v))
    return ("f", f)
