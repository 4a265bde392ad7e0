"""Geweke test: forward samples versus the successive-conditional chain.

Two ways of drawing (state, X) from the joint:

* forward: state from the prior, then X from the likelihood;
* chain: start from one forward draw, then alternate a Gibbs sweep with
  redrawing X from the likelihood.

If the sweep leaves the posterior invariant, every chain record is an
exact draw from the joint, so any scalar statistic must have the same
distribution under both procedures.  The comparison is a P-P curve per
statistic summarised by its two-sample KS distance.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats as sps

from .distributions import DistributionError
from .model import STATISTICS, MixtureModel, ModelSpec
from .rng import RngStream

PASS, FAIL, UNCLEAR = "pass", "fail", "unclear"
_SEVERITY = {PASS: 0, UNCLEAR: 1, FAIL: 2}

DEFAULT_SEED = 20130610
DEFAULT_MIN_ESS = 500.0
FAIL_FACTOR = 3.0

# 95th percentile of null KS distances per statistic (pass threshold); the
# fail threshold is FAIL_FACTOR times that.  Produced by
# `mcmc-testkit calibrate --replicates 50` with the default ModelSpec,
# N=20, D=2, num_samples=10000, thin=1, seed=DEFAULT_SEED.
CALIBRATION_SAMPLES = 10_000
CALIBRATED_PASS_THRESHOLDS = {
    "mean_x": 0.033395,
    "max_abs_mu": 0.028535,
    "sigma_sq_n": 0.038065,
    "sigma_sq_mu": 0.025080,
    "pi_entropy": 0.027810,
    "max_occupancy": 0.030755,
}


def default_thresholds(num_samples: int = CALIBRATION_SAMPLES) -> dict[str, tuple[float, float]]:
    """Calibrated (pass, fail) thresholds, rescaled to ``num_samples``.

    Null KS distances shrink like 1/sqrt(n), so thresholds measured at
    CALIBRATION_SAMPLES are stretched by sqrt(CALIBRATION_SAMPLES / n).
    """
    scale = math.sqrt(CALIBRATION_SAMPLES / num_samples)
    return {k: (scale * v, scale * FAIL_FACTOR * v) for k, v in CALIBRATED_PASS_THRESHOLDS.items()}


@dataclass(frozen=True)
class GewekeConfig:
    num_samples: int = 10_000
    n: int = 20
    d: int = 2
    thin: int = 1
    statistics: tuple[str, ...] = STATISTICS
    seed: int = DEFAULT_SEED
    min_ess: float = DEFAULT_MIN_ESS
    # None means the calibrated defaults rescaled to num_samples
    thresholds: dict[str, tuple[float, float]] | None = None

    def __post_init__(self):
        if self.num_samples < 100:
            raise ValueError("num_samples must be >= 100")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be >= 1")
        unknown = set(self.statistics) - set(STATISTICS)
        if unknown:
            raise ValueError(f"unknown statistics {sorted(unknown)}; known: {STATISTICS}")
        missing = set(self.statistics) - set(self.limits)
        if missing:
            raise ValueError(f"no thresholds for {sorted(missing)}")

    @property
    def limits(self) -> dict[str, tuple[float, float]]:
        if self.thresholds is None:
            return default_thresholds(self.num_samples)
        return self.thresholds

    def replace(self, **changes) -> "GewekeConfig":
        return dataclasses.replace(self, **changes)


# ------------------------------------------------------------ comparisons

def _ecdfs(forward, chain):
    f = np.sort(np.asarray(forward, dtype=float))
    c = np.sort(np.asarray(chain, dtype=float))
    if f.size == 0 or c.size == 0:
        raise ValueError("both samples must be non-empty")
    t = np.unique(np.concatenate([f, c]))
    u = np.searchsorted(f, t, side="right") / f.size
    v = np.searchsorted(c, t, side="right") / c.size
    return u, v


def pp_points(forward, chain) -> np.ndarray:
    """P-P curve as an (M, 2) array of (F_forward(t), F_chain(t)).

    ``t`` runs over the sorted distinct pooled values; the curve starts at
    (0, 0) and ends at (1, 1).
    """
    u, v = _ecdfs(forward, chain)
    return np.column_stack([np.concatenate([[0.0], u]), np.concatenate([[0.0], v])])


def ks_distance(forward, chain) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    u, v = _ecdfs(forward, chain)
    return float(np.max(np.abs(u - v)))


def autocorrelation(x) -> np.ndarray:
    """Sample autocorrelation at every lag, via FFT."""
    x = np.asarray(x, dtype=float)
    n = x.size
    x = x - x.mean()
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, m)
    acov = np.fft.irfft(f * np.conj(f), m)[:n]
    if acov[0] <= 0:
        return np.zeros(n)
    return acov / acov[0]


def effective_sample_size(chain, rank: bool = True) -> float:
    """Geyer's initial positive sequence estimate of the ESS.

    With ``rank=True`` the chain is replaced by its ranks first, which
    matches the monotone invariance of the KS distance and keeps the
    estimate finite for heavy-tailed statistics.
    """
    x = np.asarray(chain, dtype=float)
    n = x.size
    if n < 4:
        raise ValueError("effective_sample_size needs at least 4 values")
    if rank:
        x = sps.rankdata(x)
    rho = autocorrelation(x)
    if not np.any(rho):
        return float(n)
    pairs = rho[: n - n % 2].reshape(-1, 2).sum(axis=1)
    positive = pairs > 0
    stop = int(np.argmin(positive)) if not positive.all() else pairs.size
    tau = -1.0 + 2.0 * pairs[:stop].sum()
    return float(n / max(tau, 1.0 / n))


def lag1_autocorrelation(x, rank: bool = True) -> float:
    x = np.asarray(x, dtype=float)
    if rank:
        x = sps.rankdata(x)
    return float(autocorrelation(x)[1])


def drift(values) -> tuple[float, float]:
    """Least-squares slope of ``values`` against record index and its standard error."""
    y = np.asarray(values, dtype=float)
    fit = sps.linregress(np.arange(y.size), y)
    return float(fit.slope), float(fit.stderr)


def classify(ks: float, ess: float, pass_threshold: float, fail_threshold: float,
             min_ess: float = DEFAULT_MIN_ESS) -> str:
    if not ks <= fail_threshold:
        return FAIL
    if ks < pass_threshold and ess >= min_ess:
        return PASS
    return UNCLEAR


def worst(verdicts) -> str:
    return max(verdicts, key=_SEVERITY.__getitem__, default=PASS)


# ------------------------------------------------------------ procedures

def _as_model(model) -> MixtureModel:
    if model is None or isinstance(model, ModelSpec):
        return MixtureModel(model)
    return model


def run_forward(model, config: GewekeConfig, rng: RngStream) -> dict[str, np.ndarray]:
    """Statistics of ``num_samples`` independent forward draws."""
    model = _as_model(model)
    out = np.empty((config.num_samples, len(config.statistics)))
    for i in range(config.num_samples):
        state, X = model.forward_sample(config.n, config.d, rng)
        s = model.statistics(state, X)
        out[i] = [s[k] for k in config.statistics]
    return dict(zip(config.statistics, out.T.copy()))


@dataclass
class ChainRun:
    values: dict[str, np.ndarray]
    error: str = ""
    bad_statistic: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error)

    def __len__(self):
        return len(next(iter(self.values.values()), ()))


def run_chain(model, config: GewekeConfig, rng: RngStream) -> ChainRun:
    """Successive-conditional chain started from a fresh forward draw.

    Each record follows ``thin`` rounds of (Gibbs sweep, redraw X).  A
    non-finite statistic or a distribution error stops the chain and marks
    the run failed; divergence is the signal this test exists to catch.
    """
    model = _as_model(model)
    names = config.statistics
    out = np.empty((config.num_samples, len(names)))
    state, X = model.forward_sample(config.n, config.d, rng)
    for i in range(config.num_samples):
        try:
            with np.errstate(over="raise", invalid="raise"):
                for _ in range(config.thin):
                    state = model.gibbs_step(state, X, rng)
                    X = model.cond_X(state).sample(rng)
                s = model.statistics(state, X)
        except (DistributionError, FloatingPointError) as exc:
            return ChainRun(dict(zip(names, out[:i].T.copy())),
                            f"record {i}: {type(exc).__name__}: {exc}")
        row = [s[k] for k in names]
        out[i] = row
        bad = [k for k, v in zip(names, row) if not math.isfinite(v)]
        if bad:
            return ChainRun(dict(zip(names, out[: i + 1].T.copy())),
                            f"record {i}: non-finite {bad[0]}", bad[0])
    return ChainRun(dict(zip(names, out.T.copy())))


@dataclass
class StatisticResult:
    name: str
    forward: np.ndarray
    chain: np.ndarray
    pp: np.ndarray
    ks: float
    ess: float
    verdict: str


@dataclass
class GewekeReport:
    config: GewekeConfig
    results: dict[str, StatisticResult]
    chain_error: str = ""

    @property
    def verdict(self) -> str:
        if self.chain_error:
            return FAIL
        return worst(r.verdict for r in self.results.values())

    def summary(self) -> str:
        lines = [f"{'statistic':<14} {'ks':>8} {'pass<':>8} {'ess':>9}  verdict"]
        for name, r in self.results.items():
            p, _ = self.config.limits[name]
            lines.append(f"{name:<14} {r.ks:8.4f} {p:8.4f} {r.ess:9.1f}  {r.verdict}")
        if self.chain_error:
            lines.append(f"chain stopped: {self.chain_error}")
        lines.append(f"overall: {self.verdict}")
        return "\n".join(lines)


def compare(forward: dict[str, np.ndarray], chain: ChainRun, config: GewekeConfig) -> GewekeReport:
    results = {}
    for name in config.statistics:
        f, c = forward[name], chain.values[name]
        finite = c[np.isfinite(c)]
        if finite.size == 0:
            results[name] = StatisticResult(name, f, c, np.array([[0.0, 0.0], [1.0, 1.0]]),
                                            1.0, 0.0, FAIL)
            continue
        ks = ks_distance(f, finite)
        ess = effective_sample_size(finite) if finite.size >= 4 else float(finite.size)
        p, fl = config.limits[name]
        verdict = classify(ks, ess, p, fl, config.min_ess)
        if name == chain.bad_statistic:
            verdict = FAIL
        results[name] = StatisticResult(name, f, c, pp_points(f, finite), ks, ess, verdict)
    return GewekeReport(config, results, chain.error)


def geweke_run(model=None, config: GewekeConfig | None = None,
               rng: RngStream | None = None) -> GewekeReport:
    """Run both procedures and compare every configured statistic."""
    config = config if config is not None else GewekeConfig()
    rng = rng if rng is not None else RngStream(config.seed)
    model = _as_model(model)
    forward = run_forward(model, config, rng.spawn(0))
    chain = run_chain(model, config, rng.spawn(1))
    return compare(forward, chain, config)


# ------------------------------------------------------------ calibration

@dataclass
class Calibration:
    replicates: int
    quantile: float
    ks: dict[str, np.ndarray]

    @property
    def pass_thresholds(self) -> dict[str, float]:
        return {k: float(np.quantile(v, self.quantile)) for k, v in self.ks.items()}

    def thresholds(self) -> dict[str, tuple[float, float]]:
        return {k: (v, FAIL_FACTOR * v) for k, v in self.pass_thresholds.items()}


def null_replicate(model, config: GewekeConfig, seed: int) -> dict[str, float]:
    report = geweke_run(model, config, RngStream(seed))
    return {k: r.ks for k, r in report.results.items()}


def calibrate(model=None, config: GewekeConfig | None = None, replicates: int = 50,
              rng: RngStream | None = None, quantile: float = 0.95, jobs: int = 1) -> Calibration:
    """Null distribution of KS distances from independent runs of a correct model.

    Replicate ``r`` runs on ``rng.spawn(r)``.  Its streams never coincide
    with those of ``geweke_run(config)`` on ``RngStream(config.seed)``.
    """
    config = config if config is not None else GewekeConfig()
    rng = rng if rng is not None else RngStream(config.seed).spawn(2)
    model = _as_model(model)
    seeds = [rng.spawn(r).seed for r in range(replicates)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(null_replicate, [model] * replicates, [config] * replicates, seeds))
    else:
        rows = [null_replicate(model, config, s) for s in seeds]
    ks = {k: np.array([row[k] for row in rows]) for k in config.statistics}
    return Calibration(replicates, quantile, ks)


# ------------------------------------------------------------ output

def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def pp_svg(pp: np.ndarray, title: str = "", size: int = 320, max_points: int = 2000) -> str:
    """Self-contained SVG of a P-P curve with the diagonal for reference."""
    if len(pp) > max_points:
        keep = np.unique(np.concatenate([
            np.linspace(0, len(pp) - 1, max_points).astype(int),
            [int(np.argmax(np.abs(pp[:, 0] - pp[:, 1])))],
        ]))
        pp = pp[keep]
    pad = 30
    scale = size - 2 * pad

    def xy(u, v):
        return f"{pad + u * scale:.2f},{size - pad - v * scale:.2f}"

    path = " ".join(xy(u, v) for u, v in pp)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">\n'
        f'<rect width="{size}" height="{size}" fill="white"/>\n'
        f'<rect x="{pad}" y="{pad}" width="{scale}" height="{scale}" fill="none" stroke="black"/>\n'
        f'<line x1="{pad}" y1="{size - pad}" x2="{size - pad}" y2="{pad}" '
        f'stroke="gray" stroke-dasharray="4 3"/>\n'
        f'<polyline points="{path}" fill="none" stroke="steelblue" stroke-width="1.5"/>\n'
        f'<text x="{size / 2}" y="{pad - 10}" text-anchor="middle" font-size="12">{title}</text>\n'
        f'<text x="{size / 2}" y="{size - 8}" text-anchor="middle" font-size="11">forward CDF</text>\n'
        f'<text x="12" y="{size / 2}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 12 {size / 2})">chain CDF</text>\n'
        "</svg>\n"
    )


def write_report(report: GewekeReport, outdir, svg: bool = False) -> list[Path]:
    """Per statistic: ``geweke_<stat>.csv`` (procedure, index, value) and
    ``pp_<stat>.csv`` (u, v); with ``svg`` also ``pp_<stat>.svg``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, r in report.results.items():
        rows = [("forward", i, repr(float(v))) for i, v in enumerate(r.forward)]
        rows += [("chain", i, repr(float(v))) for i, v in enumerate(r.chain)]
        p = outdir / f"geweke_{name}.csv"
        _write_rows(p, ["procedure", "index", "value"], rows)
        written.append(p)
        p = outdir / f"pp_{name}.csv"
        _write_rows(p, ["u", "v"], [(repr(float(u)), repr(float(v))) for u, v in r.pp])
        written.append(p)
        if svg:
            p = outdir / f"pp_{name}.svg"
            p.write_text(pp_svg(r.pp, f"{name}: ks={r.ks:.4f} ({r.verdict})"))
            written.append(p)
    return written


def format_thresholds(cal: Calibration, config: GewekeConfig) -> str:
    lines = [
        f"# null calibration: {cal.replicates} replicates, quantile {cal.quantile}",
        f"# N={config.n} D={config.d} num_samples={config.num_samples} thin={config.thin} seed={config.seed}",
    ]
    for name, (p, f) in cal.thresholds().items():
        lines.append(f"pass_threshold.{name} = {p!r}")
        lines.append(f"fail_threshold.{name} = {f!r}")
    return "\n".join(lines) + "\n"
