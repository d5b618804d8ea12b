"""Empirical-distribution machinery.

Everything measurable about a residual sample lives here: the empirical
CDF with its distribution-free DKW confidence band, a point-density
estimate (Gaussian KDE with Silverman bandwidth, plus a histogram
cross-check), interval masses, and raw moments with saturation-aware
high-order sums.
"""

import math
from typing import NamedTuple

import numpy as np


class InsufficientSampleError(ValueError):
    """Raised when a query needs more sample points than are available."""


class SaturationError(FloatingPointError):
    """Raised when a moment overflows even in extended precision."""


class DegenerateSpike:
    """Sentinel for density queries on a constant sample.

    A constant sample has zero bandwidth; its density is a point mass and
    has no finite value at the atom. Queries return this marker instead of
    infinity so downstream traces stay representable.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "<degenerate spike>"


SPIKE = DegenerateSpike()


class MomentSum(NamedTuple):
    """Partial-sum result of a high-order moment series.

    ``truncated_at`` is None when all requested terms were summed,
    otherwise the order at which extended precision saturated.
    """

    value: float
    truncated_at: int | None


def dkw_epsilon(alpha: float, n: int) -> float:
    """Half-width of the DKW confidence band: sqrt(ln(2/alpha) / (2N)).

    The band [ecdf - eps, ecdf + eps] contains the true CDF everywhere
    with probability at least 1 - alpha.
    """
    if not 0 < alpha < 2:
        raise ValueError(f"alpha must be in (0, 2), got {alpha}")
    if n < 1:
        raise ValueError("N must be a positive integer")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


class EmpiricalDistribution:
    """Immutable sorted sample with distribution queries.

    Construction sorts a copy of the input; all queries are read-only and
    safe to call concurrently.
    """

    def __init__(self, sample):
        arr = np.sort(np.asarray(sample, dtype=float))
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("sample must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample must be finite")
        self._sample = arr
        self._sample.flags.writeable = False

    @property
    def sample(self) -> np.ndarray:
        return self._sample

    @property
    def n(self) -> int:
        return self._sample.size

    def ecdf(self, x):
        """Right-continuous empirical CDF: (# sample values <= x) / N."""
        counts = np.searchsorted(self._sample, x, side="right")
        return counts / self.n

    def interval_mass(self, kappa: float) -> float:
        """Empirical mass of [-kappa, kappa]: ecdf(kappa) - ecdf(-kappa)."""
        if kappa <= 0:
            raise ValueError("kappa must be positive")
        return float(self.ecdf(kappa) - self.ecdf(-kappa))

    def bandwidth(self) -> float:
        """Silverman rule: 0.9 * min(sd, IQR/1.34) * N^(-1/5).

        Falls back to the standard deviation alone when the IQR collapses
        to zero on a non-constant sample.
        """
        sd = float(np.std(self._sample))
        q75, q25 = np.percentile(self._sample, [75, 25])
        iqr = q75 - q25
        spread = min(sd, iqr / 1.34) if iqr > 0 else sd
        return 0.9 * spread * self.n ** (-0.2)

    def density_at(self, x: float):
        """Gaussian-kernel density estimate at a point.

        Needs at least 20 points. Returns the SPIKE sentinel for a
        constant sample (zero bandwidth), never infinity.
        """
        if self.n < 20:
            raise InsufficientSampleError(f"density needs N >= 20 points, got {self.n}")
        h = self.bandwidth()
        if h == 0.0:
            return SPIKE
        u = (x - self._sample) / h
        return float(np.exp(-0.5 * u * u).sum() / (self.n * h * math.sqrt(2.0 * math.pi)))

    def density_at_histogram(self, x: float, bins: int | None = None):
        """Histogram cross-check estimator for the point density.

        Equal-width bins over the sample range; the density is the
        count/(N*width) bin height linearly interpolated between bin
        centers. Secondary to the KDE; used to cross-validate it.
        """
        if self.n < 20:
            raise InsufficientSampleError(f"density needs N >= 20 points, got {self.n}")
        lo, hi = self._sample[0], self._sample[-1]
        if hi == lo:
            return SPIKE
        if bins is None:
            bins = max(10, int(round(math.sqrt(self.n))))
        counts, edges = np.histogram(self._sample, bins=bins, range=(lo, hi))
        heights = counts / (self.n * (edges[1] - edges[0]))
        centers = 0.5 * (edges[:-1] + edges[1:])
        return float(np.interp(x, centers, heights, left=0.0, right=0.0))

    def raw_moment(self, k: int) -> float:
        """k-th raw moment (1/N) * sum(sample**k), in extended precision."""
        if k < 1:
            raise ValueError("moment order k must be >= 1")
        with np.errstate(over="ignore"):
            pw = self._sample.astype(np.longdouble) ** k
            value = pw.mean()
        if not np.isfinite(value):
            raise SaturationError(f"moment of order {k} saturated extended precision")
        return float(value)

    def moment_l1_sum(self, n_terms: int = 300) -> MomentSum:
        """Sum of |raw moments| for orders 1..n_terms with saturation guard.

        Powers accumulate in extended precision; if a term saturates, the
        partial sum up to the previous order is returned together with the
        truncation index.
        """
        if n_terms < 1:
            raise ValueError("n_terms must be >= 1")
        base = self._sample.astype(np.longdouble)
        powers = np.ones_like(base)
        total = np.longdouble(0.0)
        with np.errstate(over="ignore"):
            for k in range(1, n_terms + 1):
                powers = powers * base
                term = np.abs(powers.mean())
                if not np.isfinite(term) or not np.isfinite(total + term):
                    return MomentSum(float(total), k)
                total = total + term
        return MomentSum(float(total), None)
