"""Check that each conditional agrees with the joint density.

For a block ``x`` with everything else ``rest`` held fixed, any correct
conditional satisfies

    log p(x' | rest) - log p(x | rest) == log p(x', rest) - log p(x, rest)

for every pair ``x, x'``.  Each trial forward-samples a state, replaces one
block with a random value and compares the two sides.  No normalizing
constants are needed on either side, and the check is deterministic.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import Dirichlet, DistributionError, InverseGamma
from .model import BLOCKS, MixtureModel, ModelSpec, State
from .rng import RngStream

DEFAULT_TOL = 1e-9
DEFAULT_TRIALS = 100
SCALAR_BLOCKS = ("pi", "sigma_sq_mu", "sigma_sq_n")


@dataclass(frozen=True)
class ConsistencyTrial:
    block: str
    seed: int
    delta1: float
    delta2: float
    abs_diff: float
    error: str = ""


@dataclass(frozen=True)
class BlockReport:
    block: str
    tol: float
    trials: list[ConsistencyTrial] = field(default_factory=list)

    @property
    def max_abs_diff(self) -> float:
        return max((t.abs_diff for t in self.trials), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_abs_diff < self.tol

    def worst(self) -> ConsistencyTrial:
        return max(self.trials, key=lambda t: t.abs_diff)


@dataclass(frozen=True)
class ConsistencyReport:
    tol: float
    blocks: dict[str, BlockReport]

    @property
    def passed(self) -> bool:
        return all(b.passed for b in self.blocks.values())

    @property
    def failing_blocks(self) -> list[str]:
        return [name for name, b in self.blocks.items() if not b.passed]

    @property
    def trials(self) -> list[ConsistencyTrial]:
        return [t for b in self.blocks.values() for t in b.trials]

    def summary(self) -> str:
        lines = []
        for name, b in self.blocks.items():
            verdict = "ok" if b.passed else "FAIL"
            line = f"{name:<12} {verdict:<4} max|d1-d2| = {b.max_abs_diff:.3e}  ({len(b.trials)} trials)"
            if not b.passed:
                w = b.worst()
                line += f"  worst seed {w.seed}" + (f": {w.error}" if w.error else "")
            lines.append(line)
        n_ok = sum(b.passed for b in self.blocks.values())
        lines.append(f"{n_ok}/{len(self.blocks)} blocks consistent at tol {self.tol:g}")
        return "\n".join(lines)


def _as_model(model) -> MixtureModel:
    if isinstance(model, ModelSpec):
        return MixtureModel(model)
    return model


def perturb_block(block: str, state: State, rng: RngStream) -> State:
    """Copy of ``state`` with only ``block`` redrawn from a wide full-support law."""
    K, D = state.mu.shape
    if block == "z":
        return state.replace(z=rng.integers(0, K, state.z.size))
    if block == "mu":
        return state.replace(mu=rng.normal(size=(K, D)))
    if block == "pi":
        return state.replace(pi=Dirichlet(np.ones(K)).sample(rng))
    if block in ("sigma_sq_mu", "sigma_sq_n"):
        return state.replace(**{block: InverseGamma(2.0, 2.0).sample(rng)})
    raise KeyError(f"unknown block {block!r}; expected one of {BLOCKS}")


def block_log_ratio(cond, new, old) -> float:
    """Conditional log-density change, summed over the block's elements.

    Summing is valid because the conditionals of z and mu factorize across
    items and clusters.
    """
    return float(np.sum(cond.log_p(new)) - np.sum(cond.log_p(old)))


def run_trial(model, block: str, seed: int, n: int = 20, d: int = 2) -> ConsistencyTrial:
    """One trial, fully determined by ``seed`` so failures can be replayed."""
    model = _as_model(model)
    rng = RngStream(seed)
    state, X = model.forward_sample(n, d, rng)
    new_state = perturb_block(block, state, rng)
    try:
        cond = model.conditional(block, state, X)
        delta1 = block_log_ratio(cond, getattr(new_state, block), getattr(state, block))
        delta2 = model.joint_log_p(new_state, X) - model.joint_log_p(state, X)
    except DistributionError as exc:
        return ConsistencyTrial(block, seed, math.nan, math.nan, math.inf, f"{type(exc).__name__}: {exc}")
    diff = abs(delta1 - delta2)
    if not math.isfinite(diff):
        diff = math.inf
    return ConsistencyTrial(block, seed, delta1, delta2, diff)


def check_block(model, block: str, trials: int = DEFAULT_TRIALS, tol: float = DEFAULT_TOL,
                rng: RngStream | None = None, n: int = 20, d: int = 2) -> BlockReport:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if block not in BLOCKS:
        raise KeyError(f"unknown block {block!r}; expected one of {BLOCKS}")
    rng = rng if rng is not None else RngStream(0)
    model = _as_model(model)
    results = [run_trial(model, block, rng.spawn(t).seed, n, d) for t in range(trials)]
    return BlockReport(block, tol, results)


def check_all(model, trials: int = DEFAULT_TRIALS, tol: float = DEFAULT_TOL,
              rng: RngStream | None = None, n: int = 20, d: int = 2) -> ConsistencyReport:
    """Run :func:`check_block` for every block, each on its own derived stream."""
    rng = rng if rng is not None else RngStream(0)
    model = _as_model(model)
    blocks = {b: check_block(model, b, trials, tol, rng.spawn(i), n, d) for i, b in enumerate(BLOCKS)}
    return ConsistencyReport(tol, blocks)


def write_trials_csv(report: ConsistencyReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["block", "seed", "delta1", "delta2", "abs_diff"])
        for t in report.trials:
            w.writerow([t.block, t.seed, repr(t.delta1), repr(t.delta2), repr(t.abs_diff)])
