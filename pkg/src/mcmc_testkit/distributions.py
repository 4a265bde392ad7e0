"""Probability distributions that evaluate log-densities and draw samples.

Each class is an immutable parameter bundle with ``log_p`` and ``sample``.
``sample(rng, size)`` prepends ``size`` to the parameter shape, so one call
can produce many independent draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .rng import RngStream

SIMPLEX_TOL = 1e-9


class DistributionError(ValueError):
    """Base class for distribution errors."""


class ParameterError(DistributionError):
    """Invalid distribution parameters."""


class DomainError(DistributionError):
    """Argument outside the support of the distribution."""


class InfiniteDensityError(DomainError):
    """The density is infinite at the requested point."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _sample_shape(size, shape) -> tuple:
    if size is None:
        return tuple(shape)
    if np.ndim(size) == 0:
        size = (int(size),)
    return tuple(size) + tuple(shape)


class Gaussian:
    """Independent normals with elementwise mean ``mu`` and variance ``sigma_sq``."""

    def __init__(self, mu, sigma_sq):
        mu = _frozen(mu)
        sigma_sq = _frozen(sigma_sq)
        try:
            self.shape = np.broadcast_shapes(mu.shape, sigma_sq.shape)
        except ValueError as exc:
            raise ParameterError(f"mu {mu.shape} and sigma_sq {sigma_sq.shape} do not broadcast") from exc
        if not np.all(sigma_sq > 0):
            raise ParameterError("sigma_sq must be positive")
        self.mu = mu
        self.sigma_sq = sigma_sq

    def log_p(self, x):
        x = np.asarray(x, dtype=float)
        return (-0.5 * np.log(2 * np.pi)
                - 0.5 * np.log(self.sigma_sq)
                - 0.5 * (x - self.mu) ** 2 / self.sigma_sq)

    def sample(self, rng: RngStream, size=None):
        out = _sample_shape(size, self.shape)
        return rng.normal(np.broadcast_to(self.mu, self.shape),
                          np.sqrt(np.broadcast_to(self.sigma_sq, self.shape)), out)

    def mean(self):
        return np.broadcast_to(self.mu, self.shape)

    def var(self):
        return np.broadcast_to(self.sigma_sq, self.shape)

    def __repr__(self):
        return f"Gaussian(mu={self.mu!r}, sigma_sq={self.sigma_sq!r})"


class Dirichlet:
    """Dirichlet over the (K-1)-simplex."""

    def __init__(self, alpha):
        alpha = _frozen(alpha)
        if alpha.ndim != 1 or alpha.size < 1:
            raise ParameterError("alpha must be a non-empty vector")
        if not np.all(np.isfinite(alpha)) or not np.all(alpha > 0):
            raise ParameterError(f"alpha must be positive and finite, got {alpha}")
        self.alpha = alpha

    def log_p(self, pi) -> float:
        pi = np.asarray(pi, dtype=float)
        if pi.shape != self.alpha.shape:
            raise DomainError(f"expected a vector of length {self.alpha.size}, got shape {pi.shape}")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > SIMPLEX_TOL:
            raise DomainError(f"{pi} is not on the simplex")
        zero = pi == 0
        if np.any(zero & (self.alpha < 1)):
            raise InfiniteDensityError("zero coordinate with alpha < 1 has infinite density")
        a = self.alpha
        with np.errstate(divide="ignore"):
            # (alpha - 1) * log 0 is taken as 0 when alpha == 1
            terms = np.where(zero & (a == 1), 0.0, (a - 1) * np.log(pi))
        return float(gammaln(a.sum()) - gammaln(a).sum() + terms.sum())

    def sample(self, rng: RngStream, size=None):
        out = _sample_shape(size, self.alpha.shape)
        a = self.alpha
        small = a < 1
        # Gamma(a) = Gamma(a + 1) * U**(1/a), kept in log space so tiny
        # shapes cannot underflow to an all-zero vector
        with np.errstate(divide="ignore"):
            log_g = np.log(rng.standard_gamma(np.where(small, a + 1, a), out))
        if np.any(small):
            log_g = log_g + np.where(small, np.log(rng.uniform(size=out)) / a, 0.0)
        log_g -= log_g.max(axis=-1, keepdims=True)
        g = np.exp(log_g)
        return g / g.sum(axis=-1, keepdims=True)

    def mean(self):
        return self.alpha / self.alpha.sum()

    def var(self):
        a0 = self.alpha.sum()
        return self.alpha * (a0 - self.alpha) / (a0 ** 2 * (a0 + 1))

    def __repr__(self):
        return f"Dirichlet(alpha={self.alpha!r})"


class Multinomial:
    """Single-trial multinomial (categorical) over K categories.

    ``probs`` is either one probability vector or an (N, K) matrix with one
    independent categorical per row.
    """

    def __init__(self, probs):
        probs = _frozen(probs)
        if probs.ndim not in (1, 2) or probs.shape[-1] < 1:
            raise ParameterError("probs must be a vector or a matrix of row vectors")
        if np.any(~np.isfinite(probs)) or np.any(probs < 0):
            raise ParameterError("probs must be finite and non-negative")
        if np.any(np.abs(probs.sum(axis=-1) - 1.0) > SIMPLEX_TOL):
            raise ParameterError("probability rows must sum to 1")
        self.probs = probs

    @classmethod
    def from_probabilities(cls, probs) -> "Multinomial":
        return cls(probs)

    @classmethod
    def from_log_odds(cls, log_odds) -> "Multinomial":
        """Row-wise softmax with the row maximum subtracted first.

        ``-inf`` entries forbid a category; a row that is entirely ``-inf``
        is a :class:`DomainError`.
        """
        lo = np.asarray(log_odds, dtype=float)
        if np.any(np.isnan(lo)) or np.any(lo == np.inf):
            raise DomainError("log odds must not contain nan or +inf")
        top = lo.max(axis=-1, keepdims=True)
        if np.any(top == -np.inf):
            raise DomainError("every category in a row is forbidden")
        e = np.exp(lo - top)
        return cls(e / e.sum(axis=-1, keepdims=True))

    @property
    def K(self) -> int:
        return self.probs.shape[-1]

    def log_p(self, z):
        z = np.asarray(z)
        if not np.issubdtype(z.dtype, np.integer):
            if np.any(z != np.round(z)):
                raise DomainError("category indices must be integers")
            z = z.astype(np.int64)
        if np.any(z < 0) or np.any(z >= self.K):
            raise DomainError(f"category index out of range [0, {self.K})")
        if self.probs.ndim == 1:
            p = self.probs[z]
        else:
            if z.shape[-1:] != self.probs.shape[:1]:
                raise DomainError(f"expected {self.probs.shape[0]} indices, got shape {z.shape}")
            p = self.probs[np.arange(self.probs.shape[0]), z]
        with np.errstate(divide="ignore"):
            return np.log(p)

    def sample(self, rng: RngStream, size=None):
        """Inverse-CDF draw: the first category whose cumulative mass exceeds U."""
        rows = self.probs.shape[:-1]
        u = rng.uniform(size=_sample_shape(size, rows))
        cum = np.cumsum(self.probs, axis=-1)
        idx = (cum <= u[..., None]).sum(axis=-1)
        # rounding can leave cum[-1] a hair below u; fall back to the last
        # category with positive mass
        last = self.K - 1 - np.argmax(self.probs[..., ::-1] > 0, axis=-1)
        return np.minimum(idx, last).astype(np.int64)

    def mean(self):
        return self.probs

    def var(self):
        return self.probs * (1 - self.probs)

    def one_hot(self, z) -> np.ndarray:
        return (np.asarray(z)[..., None] == np.arange(self.K)).astype(float)

    def __repr__(self):
        return f"Multinomial(probs={self.probs!r})"


class InverseGamma:
    """Inverse-gamma with shape ``a`` and scale ``b``: density ~ x^-(a+1) exp(-b/x)."""

    def __init__(self, a, b):
        a, b = float(a), float(b)
        if not (np.isfinite(a) and a > 0 and np.isfinite(b) and b > 0):
            raise ParameterError(f"InverseGamma needs a > 0 and b > 0, got a={a}, b={b}")
        self.a = a
        self.b = b

    def log_p(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(~(x > 0)):
            raise DomainError("InverseGamma support is x > 0")
        a, b = self.a, self.b
        out = a * np.log(b) - gammaln(a) - (a + 1) * np.log(x) - b / x
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: RngStream, size=None):
        return self.b / rng.standard_gamma(self.a, size)

    def mean(self):
        return self.b / (self.a - 1) if self.a > 1 else None

    def var(self):
        if self.a <= 2:
            return None
        return self.b ** 2 / ((self.a - 1) ** 2 * (self.a - 2))

    def __repr__(self):
        return f"InverseGamma(a={self.a!r}, b={self.b!r})"


# ---------------------------------------------------------------- moments

@dataclass(frozen=True)
class MomentCheck:
    moment: str
    coord: int
    empirical: float
    exact: float | None
    z: float | None
    status: str  # "pass", "fail" or "skipped"


@dataclass(frozen=True)
class MomentReport:
    name: str
    n: int
    checks: list[MomentCheck] = field(default_factory=list)
    bound: float = 5.0

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def failures(self) -> list[MomentCheck]:
        return [c for c in self.checks if c.status == "fail"]


def _z(diff: float, se: float) -> float:
    if se > 0:
        return diff / se
    return 0.0 if diff == 0 else np.inf * np.sign(diff)


def moment_check(dist, n: int, rng: RngStream, bound: float = 5.0) -> MomentReport:
    """Compare empirical first and second moments of ``n`` draws to the exact ones.

    A moment passes when its z-score is below ``bound`` in magnitude.  The
    variance z-score is studentized with the empirical fourth central
    moment.  Moments that do not exist for the given parameters are marked
    ``"skipped"``.
    """
    if n < 1000:
        raise ValueError("moment_check needs n >= 1000")
    draws = np.asarray(dist.sample(rng, n))
    if isinstance(dist, Multinomial):
        draws = dist.one_hot(draws)
    draws = draws.reshape(n, -1)
    m = draws.shape[1]
    exact_mean, exact_var = dist.mean(), dist.var()
    if exact_mean is not None:
        exact_mean = np.broadcast_to(np.asarray(exact_mean, dtype=float).ravel(), (m,))
    if exact_var is not None:
        exact_var = np.broadcast_to(np.asarray(exact_var, dtype=float).ravel(), (m,))

    emp_mean = draws.mean(axis=0)
    emp_var = draws.var(axis=0, ddof=1)
    centred = draws - emp_mean
    m4 = (centred ** 4).mean(axis=0)

    checks = []
    for j in range(m):
        if exact_mean is None:
            checks.append(MomentCheck("mean", j, float(emp_mean[j]), None, None, "skipped"))
        else:
            # exact variance when known, empirical otherwise (IG with a <= 2)
            v = exact_var[j] if exact_var is not None else emp_var[j]
            z = _z(emp_mean[j] - exact_mean[j], np.sqrt(v / n))
            checks.append(MomentCheck("mean", j, float(emp_mean[j]), float(exact_mean[j]), float(z),
                                      "pass" if abs(z) < bound else "fail"))
        if exact_var is None:
            checks.append(MomentCheck("var", j, float(emp_var[j]), None, None, "skipped"))
        else:
            se = np.sqrt(max(m4[j] - emp_var[j] ** 2, 0.0) / n)
            z = _z(emp_var[j] - exact_var[j], se)
            checks.append(MomentCheck("var", j, float(emp_var[j]), float(exact_var[j]), float(z),
                                      "pass" if abs(z) < bound else "fail"))
    return MomentReport(repr(dist), n, checks, bound)
