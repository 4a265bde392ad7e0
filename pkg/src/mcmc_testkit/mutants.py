"""Deliberately broken variants of the reference model.

Each mutant subclasses :class:`MixtureModel` and overrides exactly one
method, so everything else is shared with the reference.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .consistency import DEFAULT_TOL, DEFAULT_TRIALS, check_all
from .distributions import Dirichlet, Gaussian, InverseGamma, Multinomial
from .geweke import FAIL, GewekeConfig, geweke_run
from .model import MixtureModel, ModelSpec, State
from .rng import RngStream


class WithinVarianceTypo(MixtureModel):
    """0.51 instead of 0.5 on the residual sum in the sigma_sq_n update."""

    name = "M1"

    def cond_sigma_sq_n(self, state: State, X) -> InverseGamma:
        N, D = X.shape
        a = self.spec.a_n + 0.5 * N * D
        b = self.spec.b_n + 0.51 * np.sum((X - state.mu[state.z, :]) ** 2)
        return InverseGamma(a, b)


class MissingPriorPrecision(MixtureModel):
    """cond_mu drops 1/sigma_sq_mu from the precision of occupied clusters."""

    name = "M2"

    def cond_mu(self, state: State, X) -> Gaussian:
        ref = super().cond_mu(state, X)
        counts = self.counts(state.z)[:, None]
        lam = 1.0 / ref.var()
        lam = np.where(counts > 0, lam - 1.0 / state.sigma_sq_mu, lam)
        return Gaussian(ref.mean() / ref.var() / lam, 1.0 / lam)


class MissingDirichletOffset(MixtureModel):
    """cond_pi uses the raw counts without adding alpha."""

    name = "M3"

    def cond_pi(self, state: State) -> Dirichlet:
        return Dirichlet(self.counts(state.z))


class MissingMixturePrior(MixtureModel):
    """cond_z ignores log pi and weighs clusters by evidence alone."""

    name = "M4"

    def cond_z(self, state: State, X) -> Multinomial:
        evidence = Gaussian(state.mu[None, :, :], state.sigma_sq_n).log_p(X[:, None, :]).sum(axis=2)
        return Multinomial.from_log_odds(evidence)


class MissingCenterPrior(MixtureModel):
    """joint_terms omits the Gaussian prior on the cluster centers."""

    name = "M5"

    def joint_terms(self, state: State, X) -> dict[str, float]:
        terms = super().joint_terms(state, X)
        del terms["mu"]
        return terms


@dataclass(frozen=True)
class Mutant:
    id: str
    description: str
    model_class: type
    expected_detectors: tuple[str, ...]


REGISTRY: dict[str, Mutant] = {
    m.id: m
    for m in (
        Mutant("none", "identity: the reference model", MixtureModel, ()),
        Mutant("M1", WithinVarianceTypo.__doc__, WithinVarianceTypo,
               ("consistency:sigma_sq_n", "geweke:sigma_sq_n")),
        Mutant("M2", MissingPriorPrecision.__doc__, MissingPriorPrecision, ("consistency:mu",)),
        Mutant("M3", MissingDirichletOffset.__doc__, MissingDirichletOffset, ("consistency:pi",)),
        Mutant("M4", MissingMixturePrior.__doc__, MissingMixturePrior, ("consistency:z",)),
        Mutant("M5", MissingCenterPrior.__doc__, MissingCenterPrior,
               ("consistency:mu", "consistency:sigma_sq_mu")),
    )
}


def apply_mutant(spec: ModelSpec | None, mutant_id: str) -> MixtureModel:
    try:
        mutant = REGISTRY[mutant_id]
    except KeyError:
        raise KeyError(f"unknown mutant {mutant_id!r}; known: {', '.join(REGISTRY)}") from None
    return mutant.model_class(spec)


@dataclass(frozen=True)
class KillRow:
    mutant: str
    detector: str
    detected: bool
    evidence: float


def kill_matrix(spec: ModelSpec | None, ids=None, rng: RngStream | None = None,
                trials: int = DEFAULT_TRIALS, tol: float = DEFAULT_TOL,
                geweke_config: GewekeConfig | None = None) -> list[KillRow]:
    """Run the consistency and Geweke suites against each mutant.

    Detectors are ``consistency:<block>`` (evidence: max |d1 - d2|),
    ``geweke:<statistic>`` (evidence: KS distance; detected on a fail
    verdict) and ``geweke:chain`` (evidence: records completed; detected
    when the chain stopped on a numerical or parameter error).  Every
    mutant sees the same random streams.
    """
    ids = list(REGISTRY) if ids is None else list(ids)
    rng = rng if rng is not None else RngStream(0)
    config = geweke_config if geweke_config is not None else GewekeConfig()
    rows = []
    for mid in ids:
        model = apply_mutant(spec, mid)
        report = check_all(model, trials, tol, rng.spawn(0), config.n, config.d)
        for block, b in report.blocks.items():
            rows.append(KillRow(mid, f"consistency:{block}", not b.passed, b.max_abs_diff))
        g = geweke_run(model, config, rng.spawn(1))
        for name, r in g.results.items():
            rows.append(KillRow(mid, f"geweke:{name}", r.verdict == FAIL, r.ks))
        n_records = len(next(iter(g.results.values())).chain) if g.results else 0
        rows.append(KillRow(mid, "geweke:chain", bool(g.chain_error), float(n_records)))
    return rows


def detected_by(rows: list[KillRow]) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for r in rows:
        out.setdefault(r.mutant, [])
        if r.detected:
            out[r.mutant].append(r.detector)
    return out


def write_kill_matrix_csv(rows: list[KillRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mutant", "detector", "detected", "evidence"])
        for r in rows:
            w.writerow([r.mutant, r.detector, int(r.detected), repr(float(r.evidence))])
