"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` (the summary lines
are also repeated at the end of every pytest session), or directly with
``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import time

import numpy as np
import pytest
from scipy import stats

from helpers import classical_ks, random_instance
from incomplete_infer import (
    IndexSet,
    IntervalCorrespondence,
    DiscreteMeasure,
    FiniteCorrespondence,
    ParamGrid,
    SetFamily,
    Structure,
    belief_table,
    censored_mean_bounds,
    choquet_integral,
    confidence_region,
    core_membership,
    core_sup_expectation,
    dual_statistic_bruteforce,
    entry_game_model,
    feasible_coupling,
    is_alternating,
    is_core_determining_bruteforce,
    ks_capacity_statistic,
    plausibility_table,
    specification_test,
)

RESULTS: dict[int, tuple[bool, str]] = {}

N_INSTANCES = 1000
DUAL_TOL = 1e-9
CHOQUET_TOL = 1e-9
KS_TOL = 1e-12
SIZE_NOMINAL, SIZE_BAND = 0.05, 0.02
POWER_MIN, INTERIOR_MAX = 0.99, 0.01
COVERAGE_MIN = 0.93


def record(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
    RESULTS[number] = (passed, line)
    print(line)


def instances(seed=20240601, count=N_INSTANCES):
    rng = np.random.default_rng(seed)
    return [random_instance(rng) for _ in range(count)]


# ---------------------------------------------------------------------------
# 1. Primal and dual transport values coincide
# ---------------------------------------------------------------------------


def check_primal_dual():
    t0 = time.perf_counter()
    worst_gap = worst_witness = 0.0
    for corr, P, nu in instances():
        res = feasible_coupling(P, nu, corr)
        dual, _ = dual_statistic_bruteforce(P, nu, corr)
        worst_gap = max(worst_gap, abs(res.violation_mass - dual))
        W = res.dual_witness
        attained = P.measure(W) - nu.measure(corr.image(W))
        worst_witness = max(worst_witness, abs(attained - dual))
    elapsed = time.perf_counter() - t0
    ok = worst_gap <= DUAL_TOL and worst_witness <= DUAL_TOL and elapsed < 10
    return ok, f"max |T* - dual| = {worst_gap:.2e}, witness gap {worst_witness:.2e}, {elapsed:.1f}s"


def test_criterion_01_primal_dual():
    ok, detail = check_primal_dual()
    record(1, "max-flow T* equals brute-force dual", ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 2. Four compatibility formulations agree
# ---------------------------------------------------------------------------


def _symmetric_verdict(P, nu, corr):
    # nu(B) <= P(Gamma^{-1}(B)), evaluated set by set without the capacity table
    for mask in range(1 << corr.n_latent):
        B = IndexSet(mask, corr.n_latent)
        if nu.measure(B) > P.measure(corr.preimage(B)) + DUAL_TOL:
            return False
    return True


def check_equivalence():
    t0 = time.perf_counter()
    disagreements = feasible_count = 0
    for corr, P, nu in instances():
        a = feasible_coupling(P, nu, corr).feasible
        b = core_membership(nu, corr, P, tol=DUAL_TOL).member
        c = dual_statistic_bruteforce(P, nu, corr)[0] <= DUAL_TOL
        d = _symmetric_verdict(P, nu, corr)
        disagreements += len({a, b, c, d}) != 1
        feasible_count += a
    elapsed = time.perf_counter() - t0
    ok = disagreements == 0 and elapsed < 30
    return ok, f"{disagreements} disagreements, {feasible_count} compatible of {N_INSTANCES}, {elapsed:.1f}s"


def test_criterion_02_equivalent_formulations():
    ok, detail = check_equivalence()
    record(2, "four compatibility formulations agree", ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 3. Choquet integral equals the supremum over the core
# ---------------------------------------------------------------------------


def check_choquet():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        corr, P, _ = random_instance(rng, max_obs=10, max_latent=10)
        f = rng.integers(-10, 11, size=corr.n_latent)
        lhs = choquet_integral(plausibility_table(P, corr), f)
        rhs = core_sup_expectation(P, corr, f)
        worst = max(worst, abs(lhs - rhs))
    elapsed = time.perf_counter() - t0
    ok = worst <= CHOQUET_TOL and elapsed < 10
    return ok, f"max |Choquet - LP| = {worst:.2e}, {elapsed:.1f}s"


def test_criterion_03_choquet_core_supremum():
    ok, detail = check_choquet()
    record(3, "Choquet integral equals LP supremum over the core", ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 4. Conjugacy and 3-alternation
# ---------------------------------------------------------------------------


def check_conjugacy():
    t0 = time.perf_counter()
    set_mismatch = 0
    worst = 0.0
    not_alternating = 0
    for corr, P, _ in instances(seed=404):
        n = corr.n_latent
        full = (1 << n) - 1
        pl = plausibility_table(P, corr)
        bel = belief_table(P, corr)
        for mask in range(1 << n):
            B = IndexSet(mask, n)
            # the sets themselves are complementary; the values then agree up to float rounding
            set_mismatch += corr.preimage(B) != corr.lower_inverse(B.complement()).complement()
            worst = max(worst, abs(pl.values[mask] - (1.0 - bel[full ^ mask])))
        not_alternating += not is_alternating(pl, 3)
    elapsed = time.perf_counter() - t0
    ok = set_mismatch == 0 and worst <= 1e-12 and not_alternating == 0 and elapsed < 10
    return ok, (
        f"{set_mismatch} set mismatches, max value gap {worst:.1e}, "
        f"{not_alternating} tables not 3-alternating, {elapsed:.1f}s"
    )


def test_criterion_04_conjugacy_alternation():
    ok, detail = check_conjugacy()
    record(4, "plausibility/belief conjugacy and 3-alternation", ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 5. Reduction to the classical KS statistic
# ---------------------------------------------------------------------------


def check_ks_reduction():
    t0 = time.perf_counter()
    rng = np.random.default_rng(55)
    model = Structure(IntervalCorrespondence([0.0, 1.0], [0.0, 1.0], [0.0, 1.0]), stats.uniform())
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 201))
        y = rng.random(n)
        T = ks_capacity_statistic(y, model, SetFamily("cells")).value
        worst = max(worst, abs(T - classical_ks(y, lambda x: np.clip(x, 0, 1))))
    elapsed = time.perf_counter() - t0
    ok = worst <= KS_TOL and elapsed < 5
    return ok, f"max |T - D_n| = {worst:.1e}, {elapsed:.1f}s"


def test_criterion_05_ks_reduction():
    ok, detail = check_ks_reduction()
    record(5, "cells statistic equals classical KS for a bijection", ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 6-8. Entry game Monte Carlo
# ---------------------------------------------------------------------------


def rejection_rate(p, reps, quantile, seed, n=1000, lam=0.5, phi=1.0):
    model = entry_game_model(lam, phi)
    ss = np.random.SeedSequence(seed)
    data_rng = np.random.default_rng(ss.spawn(1)[0])
    rejects = 0
    for r in range(reps):
        sample = (data_rng.random(n) < p).astype(int)
        rep = specification_test(sample, model, alpha=0.95, quantile=quantile, seed=seed * 100_003 + r)
        rejects += rep.reject
    return rejects / reps


def check_boundary_size():
    t0 = time.perf_counter()
    p = 0.5 ** 1.0
    rates = {q: rejection_rate(p, 2000, q, seed=6) for q in ("bridge", "subsample")}
    elapsed = time.perf_counter() - t0
    within = {q: abs(r - SIZE_NOMINAL) <= SIZE_BAND for q, r in rates.items()}
    ok = all(within.values()) and elapsed < 300
    return ok, ", ".join(f"{q} size {r:.4f}" for q, r in rates.items()) + f" (target 0.05 +/- 0.02), {elapsed:.0f}s"


@pytest.mark.slow
def test_criterion_06_boundary_size():
    ok, detail = check_boundary_size()
    record(6, "entry-game size at the boundary", ok, detail)
    assert ok, detail


def check_power():
    t0 = time.perf_counter()
    out = {}
    for q in ("bridge", "subsample"):
        out[q] = (rejection_rate(0.6, 1000, q, seed=71), rejection_rate(0.4, 1000, q, seed=72))
    elapsed = time.perf_counter() - t0
    ok = all(hi >= POWER_MIN and lo <= INTERIOR_MAX for hi, lo in out.values()) and elapsed < 300
    detail = ", ".join(f"{q}: reject(p=0.6) {hi:.3f}, reject(p=0.4) {lo:.3f}" for q, (hi, lo) in out.items())
    return ok, f"{detail}, {elapsed:.0f}s"


@pytest.mark.slow
def test_criterion_07_power_and_interior():
    ok, detail = check_power()
    record(7, "entry-game power and interior behavior", ok, detail)
    assert ok, detail


def coverage_grid():
    phis = [0.25 * k for k in range(1, 17)]
    boundary = [0.3 ** (1 / phi) for phi in phis]
    lams = sorted(set(boundary) | {0.05, 0.2, 0.6, 1.0})
    assert len(lams) == 20
    return ParamGrid({"lam": lams, "phi": phis}), list(zip(boundary, phis))


def check_coverage():
    t0 = time.perf_counter()
    grid, boundary = coverage_grid()
    points = list(grid)
    index = {
        (lam, phi): next(k for k, th in enumerate(points) if th["lam"] == lam and th["phi"] == phi)
        for lam, phi in boundary
    }
    rng = np.random.default_rng(8)
    covered = np.zeros(len(boundary))
    datasets = 500
    for d in range(datasets):
        sample = (rng.random(1000) < 0.3).astype(int)
        region = confidence_region(sample, entry_game_model, grid, alpha=0.95, seed=d)
        mask = region.accepted_mask()
        covered += [mask[index[b]] for b in boundary]
    freq = covered / datasets
    elapsed = time.perf_counter() - t0
    ok = bool(freq.min() >= COVERAGE_MIN) and elapsed < 1200
    return ok, f"{len(boundary)} boundary points, min coverage {freq.min():.3f}, mean {freq.mean():.3f}, {elapsed:.0f}s"


@pytest.mark.slow
def test_criterion_08_region_coverage():
    ok, detail = check_coverage()
    record(8, "confidence-region coverage on the boundary", ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 9. Cells are not core determining on the three-point instance
# ---------------------------------------------------------------------------


def three_point_instance():
    corr = FiniteCorrespondence([1, 2, 3], ["u1", "u2"], [(0, 0), (1, 1), (2, 0)])
    return corr, DiscreteMeasure([0.5, 0.5], ("u1", "u2"))


def check_core_determining():
    t0 = time.perf_counter()
    corr, nu = three_point_instance()
    missed = []
    wrong_pairs = 0
    for seed in range(50):
        res = is_core_determining_bruteforce(SetFamily("cells"), corr, nu, trials=10_000, seed=seed)
        if res.verdict:
            missed.append(seed)
            continue
        P, A = res.counterexample
        P = DiscreteMeasure(P / P.sum())
        cells_ok = all(
            P.measure(B) <= nu.measure(corr.image(B)) + 1e-9
            for B in (IndexSet(m, 3) for m in (0b000, 0b001, 0b011, 0b111, 0b110, 0b100))
        )
        wrong_pairs += not (cells_ok and P.measure(A) - nu.measure(corr.image(A)) > 1e-9)
    powerset_false = sum(
        not is_core_determining_bruteforce(SetFamily("powerset"), corr, nu, trials=10_000, seed=s).verdict
        for s in range(10)
    )
    elapsed = time.perf_counter() - t0
    ok = not missed and wrong_pairs == 0 and powerset_false == 0 and elapsed < 10
    return ok, (
        f"cells counterexample found for {50 - len(missed)}/50 seeds ({wrong_pairs} invalid), "
        f"powerset false {powerset_false}/10, {elapsed:.1f}s"
    )


def test_criterion_09_core_determining():
    ok, detail = check_core_determining()
    record(9, "cells counterexample found, power set always passes", ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------
# 10. Bracketed-mean bounds
# ---------------------------------------------------------------------------


def check_bounds():
    t0 = time.perf_counter()
    rep = censored_mean_bounds([10.0, 20.0], delta=2.0)
    exact = rep.lower == 14.0 and rep.upper == 16.0
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(200):
        delta = float(rng.uniform(0.1, 5.0))
        k = int(rng.integers(1, 8))
        centres = np.cumsum(rng.uniform(delta, 3 * delta, size=k))
        sample = rng.choice(centres, size=int(rng.integers(1, 300)))
        r = censored_mean_bounds(sample, delta)
        worst = max(worst, abs((r.upper - r.lower) - delta))
    elapsed = time.perf_counter() - t0
    ok = exact and worst <= 1e-9 and elapsed < 1
    return ok, f"[{rep.lower}, {rep.upper}] for brackets 10/20, max |width - delta| = {worst:.1e}, {elapsed:.2f}s"


def test_criterion_10_censored_bounds():
    ok, detail = check_bounds()
    record(10, "bracketed-mean bounds", ok, detail)
    assert ok, detail


CHECKS = {
    1: ("max-flow T* equals brute-force dual", check_primal_dual),
    2: ("four compatibility formulations agree", check_equivalence),
    3: ("Choquet integral equals LP supremum over the core", check_choquet),
    4: ("plausibility/belief conjugacy and 3-alternation", check_conjugacy),
    5: ("cells statistic equals classical KS for a bijection", check_ks_reduction),
    6: ("entry-game size at the boundary", check_boundary_size),
    7: ("entry-game power and interior behavior", check_power),
    8: ("confidence-region coverage on the boundary", check_coverage),
    9: ("cells counterexample found, power set always passes", check_core_determining),
    10: ("bracketed-mean bounds", check_bounds),
}


if __name__ == "__main__":
    failed = 0
    for number, (title, fn) in CHECKS.items():
        ok, detail = fn()
        record(number, title, ok, detail)
        failed += not ok
    raise SystemExit(1 if failed else 0)
