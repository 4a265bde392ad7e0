import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from mcmc_testkit import geweke
from mcmc_testkit.geweke import (
    FAIL,
    PASS,
    UNCLEAR,
    GewekeConfig,
    calibrate,
    classify,
    compare,
    default_thresholds,
    effective_sample_size,
    geweke_run,
    ks_distance,
    lag1_autocorrelation,
    pp_points,
    pp_svg,
    run_chain,
    run_forward,
    worst,
    write_report,
)
from mcmc_testkit.model import STATISTICS, MixtureModel, ModelSpec
from mcmc_testkit.rng import RngStream

samples = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60)


# ---------------------------------------------------------------- P-P and KS

def test_identical_samples():
    x = [3.0, 1.0, 2.0, 2.0]
    pp = pp_points(x, x)
    assert np.array_equal(pp[:, 0], pp[:, 1])
    assert ks_distance(x, x) == 0.0


def test_disjoint_samples():
    assert ks_distance([1, 2, 3], [10, 11]) == 1.0


def test_shifted_samples():
    assert ks_distance([1, 2, 3], [2, 3, 4]) == pytest.approx(1 / 3)


def test_pp_curve_endpoints():
    pp = pp_points([0.5, 0.1], [0.3])
    assert tuple(pp[0]) == (0.0, 0.0) and tuple(pp[-1]) == (1.0, 1.0)
    assert np.all(np.diff(pp, axis=0) >= 0)


def test_empty_sample():
    with pytest.raises(ValueError):
        ks_distance([], [1.0])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # scipy p-value path on tiny samples
@given(samples, samples)
def test_ks_agrees_with_scipy(a, b):
    assert ks_distance(a, b) == pytest.approx(sps.ks_2samp(a, b, method="asymp").statistic, abs=1e-12)


@given(samples, samples)
def test_ks_is_symmetric_and_bounded(a, b):
    d = ks_distance(a, b)
    assert d == ks_distance(b, a)
    assert 0.0 <= d <= 1.0


@given(samples, samples)
def test_ks_is_invariant_under_monotone_maps(a, b):
    f = lambda v: np.arctan(np.asarray(v) / 1e3)  # strictly increasing
    assert ks_distance(f(a), f(b)) == pytest.approx(ks_distance(a, b), abs=1e-12)


# ---------------------------------------------------------------- classify

def test_classify_examples():
    assert classify(0.5, 10_000, 0.03, 0.10) == FAIL
    assert classify(0.5, 10, 0.03, 0.10) == FAIL
    assert classify(0.01, 5000, 0.03, 0.10, 500) == PASS
    assert classify(0.02, 50, 0.03, 0.10, 500) == UNCLEAR
    assert classify(0.05, 5000, 0.03, 0.10, 500) == UNCLEAR
    assert classify(float("nan"), 5000, 0.03, 0.10) == FAIL


def test_worst_ordering():
    assert worst([PASS, UNCLEAR, PASS]) == UNCLEAR
    assert worst([UNCLEAR, FAIL]) == FAIL
    assert worst([]) == PASS


def test_thresholds_scale_with_sample_size():
    base = default_thresholds()
    short = default_thresholds(100)
    for name in STATISTICS:
        p, f = base[name]
        assert f == pytest.approx(geweke.FAIL_FACTOR * p)
        assert short[name][0] == pytest.approx(10 * p)
    assert GewekeConfig(num_samples=2500).limits["mean_x"][0] == pytest.approx(2 * base["mean_x"][0])


def test_config_validation():
    for bad in ({"num_samples": 99}, {"thin": 0}, {"statistics": ("nope",)},
                {"thresholds": {"mean_x": (0.1, 0.3)}}):
        with pytest.raises(ValueError):
            GewekeConfig(**bad)


# ---------------------------------------------------------------- ESS

def test_ess_of_iid_draws():
    x = RngStream(0).normal(size=4000)
    assert 3000 < effective_sample_size(x) < 5500


def test_ess_of_ar1():
    rng = RngStream(1)
    phi, n = 0.9, 20000
    e = rng.normal(size=n)
    x = np.empty(n)
    x[0] = e[0]
    for i in range(1, n):
        x[i] = phi * x[i - 1] + e[i]
    # integrated autocorrelation time (1 + phi) / (1 - phi) = 19
    assert effective_sample_size(x, rank=False) == pytest.approx(n / 19, rel=0.25)
    assert lag1_autocorrelation(x, rank=False) == pytest.approx(phi, abs=0.02)


def test_ess_is_rank_invariant():
    x = RngStream(2).normal(size=500)
    assert effective_sample_size(np.exp(5 * x)) == effective_sample_size(x)


def test_ess_of_constant_chain():
    assert effective_sample_size(np.ones(10)) == 10.0


# ---------------------------------------------------------------- procedures

def test_forward_noise_variance_matches_prior():
    spec = ModelSpec()
    config = GewekeConfig(num_samples=5000, statistics=("sigma_sq_n",))
    draws = run_forward(MixtureModel(spec), config, RngStream(3))["sigma_sq_n"]
    assert len(draws) == 5000
    cdf = sps.invgamma(spec.a_n, scale=spec.b_n).cdf
    assert sps.kstest(draws, cdf).pvalue > 1e-3


def test_chain_records_and_thinning():
    config = GewekeConfig(num_samples=100, thin=3)
    run = run_chain(MixtureModel(), config, RngStream(4))
    assert not run.failed and len(run) == 100
    assert set(run.values) == set(STATISTICS)


class ForwardTransition(MixtureModel):
    """A 'sweep' that ignores the data and redraws the state from the prior."""

    def gibbs_step(self, state, X, rng):
        return self.forward_sample(X.shape[0], X.shape[1], rng)[0]


def test_independent_transition_passes():
    config = GewekeConfig(num_samples=2000)
    report = geweke_run(ForwardTransition(), config, RngStream(5))
    assert report.verdict == PASS, report.summary()
    for r in report.results.values():
        assert r.ess > 1000


def test_short_runs_are_unclear():
    report = geweke_run(MixtureModel(), GewekeConfig(num_samples=100), RngStream(6))
    assert report.verdict == UNCLEAR, report.summary()


class Exploding(MixtureModel):
    def gibbs_step(self, state, X, rng):
        new = super().gibbs_step(state, X, rng)
        return new.replace(sigma_sq_n=new.sigma_sq_n * 1e60)


def test_divergent_chain_fails():
    report = geweke_run(Exploding(), GewekeConfig(num_samples=200), RngStream(7))
    assert report.verdict == FAIL
    assert report.chain_error
    assert len(report.results["sigma_sq_n"].chain) < 200


def test_compare_with_empty_chain():
    config = GewekeConfig(num_samples=100)
    fwd = {k: np.arange(100.0) for k in STATISTICS}
    chain = geweke.ChainRun({k: np.empty(0) for k in STATISTICS}, "record 0: boom")
    report = compare(fwd, chain, config)
    assert report.verdict == FAIL
    assert all(r.ks == 1.0 for r in report.results.values())


def test_run_is_deterministic():
    config = GewekeConfig(num_samples=150)
    a = geweke_run(None, config)
    b = geweke_run(ModelSpec(), config)
    for name in STATISTICS:
        assert np.array_equal(a.results[name].chain, b.results[name].chain)
        assert np.array_equal(a.results[name].forward, b.results[name].forward)


def test_calibration_replicates_are_reproducible():
    config = GewekeConfig(num_samples=100, statistics=("mean_x",))
    a = calibrate(None, config, replicates=3, rng=RngStream(8))
    b = calibrate(None, config, replicates=3, rng=RngStream(8))
    assert np.array_equal(a.ks["mean_x"], b.ks["mean_x"])
    p, f = a.thresholds()["mean_x"]
    assert p == pytest.approx(np.quantile(a.ks["mean_x"], 0.95)) and f == pytest.approx(3 * p)
    text = geweke.format_thresholds(a, config)
    assert f"pass_threshold.mean_x = {p!r}" in text


# ---------------------------------------------------------------- output

def test_report_files(tmp_path):
    config = GewekeConfig(num_samples=100, statistics=("mean_x", "pi_entropy"))
    report = geweke_run(None, config, RngStream(9))
    written = write_report(report, tmp_path, svg=True)
    assert {p.name for p in written} == {
        "geweke_mean_x.csv", "pp_mean_x.csv", "pp_mean_x.svg",
        "geweke_pi_entropy.csv", "pp_pi_entropy.csv", "pp_pi_entropy.svg",
    }
    rows = list(csv.DictReader(open(tmp_path / "geweke_mean_x.csv")))
    assert len(rows) == 200 and rows[0]["procedure"] == "forward" and rows[-1]["procedure"] == "chain"
    pp = np.loadtxt(tmp_path / "pp_mean_x.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(pp[:, 0] - pp[:, 1])) == pytest.approx(report.results["mean_x"].ks)


def test_svg_is_decimated_but_keeps_the_widest_gap():
    u = np.linspace(0, 1, 10_001)
    v = u.copy()
    v[4321] += 0.2
    svg = pp_svg(np.column_stack([u, v]), "t", max_points=100)
    assert svg.startswith("<svg") and svg.count(",") < 200
    assert f"{30 + u[4321] * 260:.2f},{320 - 30 - v[4321] * 260:.2f}" in svg
