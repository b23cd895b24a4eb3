"""Risk models: two-parameter count family, explicit pmfs, random sums, scaled indicators.

The count family is the (a, b) recursion class ``f(k) = (a + b/k) f(k-1)``,
which contains Poisson (a = 0), negative binomial (a = 1 - q) and binomial
(a = -q/(1-q)).  Every risk model exposes the same small surface: a truncated
mass vector, a pgf evaluated on a complex buffer, its mean, and a support bound
when one exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import gf
from .errors import KatzDomain
from .pmf import DiscretePMF, pmf_from_values


@dataclass(frozen=True)
class KatzParams:
    """Parameters of the (a, b) count recursion; requires |a| < 1.

    The mean is (a + b)/(1 - a), which specializes to lam, r(1-q)/q and m q for
    the three members.
    """

    a: float
    b: float

    def __post_init__(self):
        if not abs(self.a) < 1.0:
            raise KatzDomain(f"|a| must be < 1, got a={self.a}")
        if self.a + self.b < 0.0:
            raise KatzDomain(f"a + b = {self.a + self.b} < 0 gives a negative mass at 1")
        if self.a < 0.0:
            # a < 0 is the binomial member; the recursion only stays non-negative
            # when it terminates, i.e. -b/a is a positive integer
            ratio = -self.b / self.a
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                raise KatzDomain(
                    f"a < 0 requires -b/a to be a positive integer, got {ratio}"
                )

    @classmethod
    def poisson(cls, lam: float) -> "KatzParams":
        if lam < 0.0:
            raise KatzDomain(f"poisson rate must be >= 0, got {lam}")
        return cls(0.0, lam)

    @classmethod
    def negative_binomial(cls, r: float, q: float) -> "KatzParams":
        if not (r > 0.0 and 0.0 < q < 1.0):
            raise KatzDomain(f"need r > 0 and q in (0,1), got r={r}, q={q}")
        return cls(1.0 - q, (r - 1.0) * (1.0 - q))

    @classmethod
    def binomial(cls, m: int, q: float) -> "KatzParams":
        # q >= 1/2 pushes |a| past 1; restate the model in failure probability
        if not (0.0 < q < 0.5):
            raise KatzDomain(f"binomial success probability must lie in (0, 1/2), got {q}")
        if m < 1 or m != int(m):
            raise KatzDomain(f"binomial count must be a positive integer, got {m}")
        return cls(-q / (1.0 - q), (m + 1) * q / (1.0 - q))

    @property
    def mean(self) -> float:
        return (self.a + self.b) / (1.0 - self.a)

    def is_poisson(self) -> bool:
        return self.a == 0.0

    def support_top(self) -> Optional[int]:
        """Largest support point, or None when the support is unbounded."""
        if self.a + self.b == 0.0:
            return 0
        if self.a < 0.0:
            return int(round(-self.b / self.a)) - 1
        return None

    def pmf(self, kmax: int) -> np.ndarray:
        """First ``kmax`` masses via the defining recursion."""
        if self.a == 0.0:
            f0 = np.exp(-self.b)
        else:
            f0 = (1.0 - self.a) ** (self.b / self.a + 1.0)
        k = np.arange(1, kmax, dtype=float)
        f = np.empty(kmax)
        f[0] = f0
        if kmax > 1:
            f[1:] = f0 * np.cumprod(self.a + self.b / k)
        top = self.support_top()
        if top is not None and top + 1 < kmax:
            f[top + 1 :] = 0.0  # kill sign noise from the zero factor
        return f

    def pgf(self, s) -> np.ndarray:
        """pgf evaluated at complex arguments with |s| <= 1.

        The base (1-a)/(1-a s) stays in the right half-plane for |a| < 1, so the
        principal power is branch-safe.
        """
        s = np.asarray(s, dtype=complex)
        if self.a == 0.0:
            return np.exp(self.b * (s - 1.0))
        return ((1.0 - self.a) / (1.0 - self.a * s)) ** (self.b / self.a + 1.0)


def negbin_pmf(r: float, q: float, n: int) -> np.ndarray:
    """First n masses of NB(r, q): C(r+k-1, k) q^r (1-q)^k, by stable recursion."""
    f = np.empty(n)
    f[0] = q**r
    if n > 1:
        k = np.arange(1, n, dtype=float)
        f[1:] = f[0] * np.cumprod((1.0 - q) * (r + k - 1.0) / k)
    return f


def compound_pmf_panjer(frequency: KatzParams, severity: np.ndarray, kmax: int) -> np.ndarray:
    """pmf of the random sum by the counting recursion (no transforms).

    Severity mass at zero is allowed.  Used both as a production conversion and
    as the transform-free cross-check of the pgf composition path.
    """
    a, b = frequency.a, frequency.b
    fb = np.zeros(kmax)
    m = min(kmax, len(severity))
    fb[:m] = severity[:m]
    if a == 0.0:
        g0 = np.exp(b * (fb[0] - 1.0))
    else:
        g0 = ((1.0 - a) / (1.0 - a * fb[0])) ** (b / a + 1.0)
    denom = 1.0 - a * fb[0]
    g = np.zeros(kmax)
    g[0] = g0
    top = int(np.flatnonzero(fb)[-1]) if fb.any() else 0
    j = np.arange(1, kmax, dtype=float)
    afb = a * fb[1:]
    bjfb = b * j * fb[1:]
    for k in range(1, kmax):
        mm = min(k, top)
        if mm == 0:
            g[k] = 0.0
            continue
        window = g[k - mm : k][::-1]
        g[k] = ((afb[:mm] + bjfb[:mm] / k) @ window) / denom
    ftop = frequency.support_top()
    if ftop is not None and ftop * top + 1 < kmax:
        g[ftop * top + 1 :] = 0.0  # terminating counts leave recursion noise past the bound
    return g


@dataclass(frozen=True)
class ExplicitRisk:
    """A risk given directly by its lattice pmf."""

    pmf: DiscretePMF

    def pmf_vector(self, kmax: int) -> np.ndarray:
        return self.pmf.padded(kmax)

    def pgf_on_roots(self, z: np.ndarray) -> np.ndarray:
        return gf.dft(self.pmf.padded(len(z)))

    def mean(self) -> float:
        return self.pmf.mean()

    def support_top(self) -> Optional[int]:
        return self.pmf.support_top()


@dataclass(frozen=True)
class KatzRisk:
    """A risk whose loss count *is* the (a, b) family variable."""

    params: KatzParams

    def pmf_vector(self, kmax: int) -> np.ndarray:
        return self.params.pmf(kmax)

    def pgf_on_roots(self, z: np.ndarray) -> np.ndarray:
        return self.params.pgf(z)

    def mean(self) -> float:
        return self.params.mean

    def support_top(self) -> Optional[int]:
        return self.params.support_top()


@dataclass(frozen=True)
class CompoundKatzRisk:
    """Random sum of iid lattice severities over an (a, b) family count."""

    frequency: KatzParams
    severity: DiscretePMF

    def pmf_vector(self, kmax: int) -> np.ndarray:
        return compound_pmf_panjer(self.frequency, self.severity.masses, kmax)

    def pgf_on_roots(self, z: np.ndarray) -> np.ndarray:
        return gf.compound_pgf_on_roots(self.frequency, gf.dft(self.severity.padded(len(z))))

    def mean(self) -> float:
        return self.frequency.mean * self.severity.mean()

    def support_top(self) -> Optional[int]:
        ftop = self.frequency.support_top()
        if ftop is None:
            return None
        return ftop * self.severity.support_top()


@dataclass(frozen=True)
class BernoulliRisk:
    """All-or-nothing payment: b with probability q, else 0."""

    b: int
    q: float

    def __post_init__(self):
        if self.b < 1 or self.b != int(self.b):
            raise KatzDomain(f"payment must be a positive integer, got {self.b}")
        if not (0.0 < self.q < 1.0):
            raise KatzDomain(f"claim probability must lie in (0,1), got {self.q}")

    def pmf_vector(self, kmax: int) -> np.ndarray:
        out = np.zeros(kmax)
        out[0] = 1.0 - self.q
        if self.b < kmax:
            out[self.b] = self.q
        return out

    def pgf_on_roots(self, z: np.ndarray) -> np.ndarray:
        return 1.0 - self.q + self.q * np.asarray(z, dtype=complex) ** self.b

    def mean(self) -> float:
        return self.q * self.b

    def support_top(self) -> Optional[int]:
        return self.b


RiskModel = Union[ExplicitRisk, KatzRisk, CompoundKatzRisk, BernoulliRisk]


def poisson_risk(lam: float) -> KatzRisk:
    return KatzRisk(KatzParams.poisson(lam))


def negative_binomial_risk(r: float, q: float) -> KatzRisk:
    return KatzRisk(KatzParams.negative_binomial(r, q))


def binomial_risk(m: int, q: float) -> KatzRisk:
    return KatzRisk(KatzParams.binomial(m, q))


def compound_poisson_risk(lam: float, severity) -> CompoundKatzRisk:
    sev = severity if isinstance(severity, DiscretePMF) else pmf_from_values(severity)
    return CompoundKatzRisk(KatzParams.poisson(lam), sev)


def explicit_risk(values, step_h: float = 1.0) -> ExplicitRisk:
    return ExplicitRisk(pmf_from_values(values, step_h))
