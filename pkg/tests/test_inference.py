import math

import numpy as np
import pytest
from scipy import stats
from sklearn.base import clone

from incomplete_infer import (
    CensoredMeanBounds,
    ConfidenceRegion,
    ConfigError,
    DataError,
    DiscreteMeasure,
    DomainError,
    FiniteCorrespondence,
    IndexSet,
    IntervalCorrespondence,
    IntervalSet,
    ParamGrid,
    SetFamily,
    SpecificationTest,
    Structure,
    censored_mean_bounds,
    confidence_region,
    entry_game_model,
    specification_test,
)


def bernoulli(ones, n):
    return np.array([1] * ones + [0] * (n - ones))


def test_entry_game_capacities():
    m = entry_game_model(0.5, 1.0)
    assert m.nu_gamma(IndexSet.from_indices([1], 2)) == pytest.approx(0.5)
    assert m.nu_gamma(IndexSet.from_indices([0], 2)) == pytest.approx(1.0)
    assert m.nu_gamma(IndexSet.full(2)) == pytest.approx(1.0)
    assert m.nu_gamma(IndexSet.empty(2)) == 0.0
    assert entry_game_model(0.5, 2.0).nu_gamma(IndexSet.from_indices([1], 2)) == pytest.approx(0.25)
    assert entry_game_model(1.0, 3.0).nu_gamma(IndexSet.from_indices([1], 2)) == pytest.approx(1.0)
    for lam, phi in [(0.0, 1.0), (1.2, 1.0), (0.5, 0.0), (0.5, -1.0)]:
        with pytest.raises(DomainError):
            entry_game_model(lam, phi)


def test_specification_test_decisions():
    m = entry_game_model(0.5, 1.0)
    accept = specification_test(bernoulli(470, 1000), m, seed=0)
    assert not accept.reject and accept.statistic.value == 0.0
    reject = specification_test(bernoulli(650, 1000), m, seed=0)
    assert reject.statistic.scaled == pytest.approx(math.sqrt(1000) * 0.15)
    assert reject.reject and reject.quantile.q_hat < 1.0
    assert reject.core_determining.startswith("certified")
    d = reject.to_dict()
    assert d["reject"] is True and d["theta"] == {"lambda": 0.5, "phi": 1.0}


def test_accept_at_equality(monkeypatch):
    import incomplete_infer.inference as inf
    from incomplete_infer.statistic import QuantileEstimate

    m = entry_game_model(0.5, 1.0)
    sample = bernoulli(600, 1000)
    scaled = math.sqrt(1000) * (0.6 - 0.5)
    stat = inf.ks_capacity_statistic(sample, m, SetFamily("powerset"))
    monkeypatch.setattr(inf, "bridge_quantile", lambda *a, **k: QuantileEstimate(0.95, stat.scaled, "bridge", 100, 0))
    assert not specification_test(sample, m, seed=0).reject
    assert stat.scaled == pytest.approx(scaled)


def test_unknown_quantile_method():
    with pytest.raises(ConfigError):
        specification_test(bernoulli(5, 10), entry_game_model(0.5, 1.0), quantile="bootstrap")


def _ks_size(n, reps, seed):
    model = Structure(IntervalCorrespondence([0.0, 1.0], [0.0, 1.0], [0.0, 1.0]), stats.uniform())
    rng = np.random.default_rng(seed)
    rejects = sum(specification_test(rng.random(n), model, seed=seed + i).reject for i in range(reps))
    return rejects / reps


def test_ks_size_for_identified_model_quick():
    assert abs(_ks_size(100, 300, 11) - 0.05) < 0.035


@pytest.mark.slow
def test_ks_size_for_identified_model():
    # identified model: the test is the classical KS test and has nominal size
    assert abs(_ks_size(500, 2000, 12) - 0.05) <= 0.02


def test_param_grid_parsing():
    g = ParamGrid.parse("lambda=0.05:1:0.05,phi=0.25:4:0.25")
    assert len(g.axes["lambda"]) == 20 and g.axes["lambda"][-1] == 1.0
    assert len(g.axes["phi"]) == 16 and len(g) == 320
    first = list(g)[:2]
    assert first[0] == {"lambda": 0.05, "phi": 0.25} and first[1] == {"lambda": 0.05, "phi": 0.5}
    assert ParamGrid.parse("a=1").axes == {"a": [1.0]}
    for bad in ["lambda", "lambda=0:1", "lambda=0:1:0", "lambda=a:b:c", ""]:
        with pytest.raises(ConfigError):
            ParamGrid.parse(bad)


def test_confidence_region_closed_form():
    sample = bernoulli(250, 1000)
    grid = ParamGrid({"lam": [0.1, 0.5], "phi": [2.0, 3.0]})
    region = confidence_region(sample, entry_game_model, grid, seed=4)
    accepted = {(t["lam"], t["phi"]) for t in region.accepted}
    assert (0.5, 2.0) in accepted
    assert (0.1, 3.0) not in accepted
    reject_stat = [t for t in region.tests if t.theta == {"lam": 0.1, "phi": 3.0}][0]
    assert reject_stat.statistic.scaled == pytest.approx(math.sqrt(1000) * (0.25 - 0.001))


def test_region_monotone_in_alpha_and_threads():
    rng = np.random.default_rng(5)
    sample = (rng.random(500) < 0.4).astype(int)
    grid = ParamGrid({"lam": list(np.linspace(0.3, 0.6, 7)), "phi": [1.0]})
    regions = [confidence_region(sample, entry_game_model, grid, alpha=a, seed=9) for a in (0.8, 0.95, 0.99)]
    masks = [r.accepted_mask() for r in regions]
    assert np.all(masks[0] <= masks[1]) and np.all(masks[1] <= masks[2])
    threaded = confidence_region(sample, entry_game_model, grid, alpha=0.95, seed=9, n_jobs=3)
    assert threaded.to_dict() == regions[1].to_dict()


def test_region_consistency_with_identified_set():
    rng = np.random.default_rng(6)
    sample = (rng.random(20_000) < 0.3).astype(int)
    grid = ParamGrid({"lam": [0.2, 0.25, 0.4, 0.8], "phi": [1.0]})
    accepted = [t["lam"] for t in confidence_region(sample, entry_game_model, grid, seed=1).accepted]
    assert accepted == [0.4, 0.8]


def test_empty_grid_rejected():
    with pytest.raises(ConfigError):
        ParamGrid({"lam": []})


def test_censored_bounds_examples():
    r = censored_mean_bounds([10, 20], 2.0)
    assert (r.lower, r.upper) == (14.0, 16.0)
    assert r.ci_lower < 14.0 and r.ci_upper > 16.0
    single = censored_mean_bounds([10, 10, 10], 2.0)
    assert (single.lower, single.upper, single.ci_lower, single.ci_upper) == (9.0, 11.0, 9.0, 11.0)
    tiny = censored_mean_bounds([1.0, 2.0, 4.0], 1e-9)
    assert tiny.lower == pytest.approx(7 / 3) and tiny.upper == pytest.approx(7 / 3)
    with pytest.raises(DomainError):
        censored_mean_bounds([1.0], 0.0)
    with pytest.raises(DataError):
        censored_mean_bounds([1.0, 1.5], 1.0)


def test_censored_bounds_nesting():
    rng = np.random.default_rng(2)
    for alpha in (0.5, 0.9, 0.99):
        sample = rng.choice([5.0, 10.0, 15.0], size=50)
        r = censored_mean_bounds(sample, 5.0, alpha)
        assert r.ci_lower <= r.lower <= r.upper <= r.ci_upper
        assert r.upper - r.lower == pytest.approx(5.0)


def test_specification_estimator():
    est = SpecificationTest(model=entry_game_model(0.5, 1.0), random_state=0)
    params = est.get_params()
    assert params["alpha"] == 0.95 and params["quantile"] == "bridge"
    est.fit(bernoulli(650, 1000).reshape(-1, 1))
    assert est.reject_ and est.n_samples_ == 1000
    assert est.decision_function() > 0
    twin = clone(est).fit(bernoulli(650, 1000))
    assert twin.quantile_.q_hat == est.quantile_.q_hat
    with pytest.raises(ConfigError):
        SpecificationTest().fit([0, 1])


def test_region_estimator():
    est = ConfidenceRegion(grid="lam=0.1:0.5:0.4,phi=2:3:1", random_state=4)
    est.fit(bernoulli(250, 1000))
    assert est.predict([{"lam": 0.5, "phi": 2.0}, (0.1, 3.0)]).tolist() == [True, False]
    with pytest.raises(DomainError):
        est.predict([(0.3, 2.0)])


def test_bounds_estimator():
    est = CensoredMeanBounds(delta=2.0).fit(np.array([[10.0], [20.0]]))
    assert (est.lower_, est.upper_) == (14.0, 16.0)
    assert est.get_params() == {"alpha": 0.95, "delta": 2.0}


def test_finite_structure_test():
    corr = FiniteCorrespondence(["a", "b"], ["u1", "u2"], [(0, 0), (1, 0), (1, 1)])
    model = Structure(corr, DiscreteMeasure([0.3, 0.7]))
    rep = specification_test(["a"] * 500 + ["b"] * 500, model, seed=0)
    assert rep.statistic.value == pytest.approx(0.2) and rep.reject


def test_structure_discretize_and_notes():
    model = entry_game_model(0.5, 1.0)
    fc, nu, labels = model.discretize(64)
    assert labels == [0, 1] and fc.n_latent == 64
    assert nu.measure(fc.image(IndexSet.from_indices([1], 2))) == pytest.approx(0.5)
    mono = Structure(IntervalCorrespondence([0, 1], [0, 0.5], [0.5, 1]), stats.uniform())
    assert mono.core_determining_note(SetFamily("cells")).startswith("certified")
    bent = Structure(IntervalCorrespondence([0, 0.5, 1], [0, 0.5, 0], [0.5, 1, 0.5]), stats.uniform())
    assert bent.core_determining_note(SetFamily("cells")).startswith("unverified")
    assert mono.nu_gamma(IntervalSet.closed(0.0, 1.0)) == pytest.approx(1.0)
