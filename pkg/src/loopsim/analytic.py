"""Exact density-map family and its limit/moment/norm probes.

The central object is the scaling map family f_t(x) = psi_t^n * f0(psi_t * x)
driven by a positive sequence psi_t. Operations here are the analytic side
of the simulator: weak-limit probes against compact test functions,
the multiplicativity check that separates autonomous from non-autonomous
sequences, exact moment scaling, and a quadrature lower bound for the
operator norm of a one-step density transformation.

All quadrature is one-dimensional, adaptive, absolute tolerance 1e-8.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

QUAD_EPSABS = 1e-8
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 200
GAUSSIAN_SUPPORT_SDS = 12.0
DEFAULT_NORM_TOLERANCE = 1e-6

PSI_POWER = "power"
PSI_LINEAR = "linear"
PSI_CUSTOM = "custom"


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class DensityFn:
    """A probability density given by an evaluator and a finite support hint.

    The support hint bounds where the mass lives (quadrature over it must
    give 1 within norm_tolerance); evaluators may be nonzero only inside.
    """

    evaluator: object
    support_hint: tuple
    norm_tolerance: float = DEFAULT_NORM_TOLERANCE

    def __post_init__(self):
        lo, hi = self.support_hint
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError(f"support hint must be a finite interval, got {self.support_hint}")
        if self.norm_tolerance <= 0:
            raise ValueError("norm_tolerance must be positive")


@dataclass(frozen=True)
class PsiSequence:
    """A positive scaling sequence indexed by integer steps t >= 1."""

    evaluator: object
    tag: str = PSI_CUSTOM
    param: float | None = None

    def at(self, t: int) -> float:
        if int(t) != t or t < 1:
            raise ValueError(f"step index must be a positive integer, got {t}")
        value = float(self.evaluator(int(t)))
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"sequence value at t={t} must be positive and finite, got {value}")
        return value


@dataclass(frozen=True)
class TestFunction:
    """A continuous test function with declared compact support."""

    evaluator: object
    support: tuple

    def __post_init__(self):
        lo, hi = self.support
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError(f"support must be a finite interval, got {self.support}")


@dataclass(frozen=True)
class AnalyticMap:
    """The scaling family applied to a base density, in a fixed dimension."""

    base: DensityFn
    psi: PsiSequence
    dimension: int = 1

    def __post_init__(self):
        if int(self.dimension) < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dimension}")


def gaussian_density(mean: float = 0.0, variance: float = 1.0) -> DensityFn:
    """Normal density with support truncated at +-12 standard deviations."""
    if variance <= 0:
        raise ValueError(f"variance must be positive, got {variance}")
    sd = math.sqrt(variance)
    norm = 1.0 / (sd * math.sqrt(2.0 * math.pi))

    def evaluator(x):
        return norm * np.exp(-((np.asarray(x, dtype=float) - mean) ** 2) / (2.0 * variance))

    lo = mean - GAUSSIAN_SUPPORT_SDS * sd
    hi = mean + GAUSSIAN_SUPPORT_SDS * sd
    return DensityFn(evaluator, (lo, hi))


def uniform_density(lo: float, hi: float) -> DensityFn:
    """Uniform density on [lo, hi]."""
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError(f"need a finite interval with lo < hi, got ({lo}, {hi})")
    height = 1.0 / (hi - lo)

    def evaluator(x):
        xa = np.asarray(x, dtype=float)
        return np.where((xa >= lo) & (xa <= hi), height, 0.0)

    return DensityFn(evaluator, (lo, hi))


def power_sequence(a: float) -> PsiSequence:
    """psi_t = a^t, the multiplicative (autonomous) family."""
    if a <= 0:
        raise ValueError(f"base must be positive, got {a}")
    return PsiSequence(lambda t: a**t, tag=PSI_POWER, param=float(a))


def linear_sequence() -> PsiSequence:
    """psi_t = t."""
    return PsiSequence(lambda t: float(t), tag=PSI_LINEAR)


def custom_sequence(fn) -> PsiSequence:
    return PsiSequence(fn, tag=PSI_CUSTOM)


def triangle_test_function(half_width: float = 1.0, center: float = 0.0) -> TestFunction:
    """The tent function max(0, 1 - |x - center|/half_width)."""
    if half_width <= 0:
        raise ValueError(f"half_width must be positive, got {half_width}")

    def evaluator(x):
        xa = np.asarray(x, dtype=float)
        return np.maximum(0.0, 1.0 - np.abs(xa - center) / half_width)

    return TestFunction(evaluator, (center - half_width, center + half_width))


def apply_map(amap: AnalyticMap, t: int, x):
    """Evaluate the transformed density at step t: psi_t^n * f0(psi_t * x)."""
    psi_t = amap.psi.at(t)
    value = psi_t**amap.dimension * amap.base.evaluator(psi_t * np.asarray(x, dtype=float))
    if np.ndim(x) == 0:
        return float(value)
    return value


def transformed_support(amap: AnalyticMap, t: int) -> tuple:
    """Support hint of the step-t density (base support scaled by 1/psi_t)."""
    psi_t = amap.psi.at(t)
    lo, hi = amap.base.support_hint
    return (lo / psi_t, hi / psi_t)


def _quad(fn, lo, hi, points=None) -> float:
    if lo >= hi:
        return 0.0
    pts = None
    if points is not None:
        pts = sorted(p for p in points if lo < p < hi)
        if not pts:
            pts = None
    result = quad(
        fn, lo, hi, points=pts, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
        limit=QUAD_LIMIT, full_output=1,
    )
    value, abserr = result[0], result[1]
    if len(result) >= 4 or abserr > max(QUAD_EPSABS, QUAD_EPSREL * abs(value)):
        raise QuadratureError(f"quadrature did not converge: achieved tolerance {abserr:.3g}")
    return float(value)


def _require_dimension_one(amap: AnalyticMap, op: str) -> None:
    if amap.dimension != 1:
        raise ValueError(f"{op} integrates numerically and supports dimension 1 only")


def envelope_norm(amap: AnalyticMap, t: int) -> float:
    """Quadrature norm of the step-t density; should be 1 for any psi_t."""
    _require_dimension_one(amap, "envelope_norm")
    lo, hi = transformed_support(amap, t)
    return _quad(lambda x: apply_map(amap, t, x), lo, hi, points=(0.0,))


def weak_limit_probe(amap: AnalyticMap, phi: TestFunction, t_list) -> list[float]:
    """Integrate the step-t density against a compact test function.

    As psi_t grows the values approach phi(0); as psi_t vanishes so do the
    values. Integration runs over the intersection of the two supports,
    split at the interior endpoints so the adaptive rule sees the moving
    concentration region.
    """
    _require_dimension_one(amap, "weak_limit_probe")
    values = []
    for t in t_list:
        f_lo, f_hi = transformed_support(amap, t)
        p_lo, p_hi = phi.support
        lo, hi = max(f_lo, p_lo), min(f_hi, p_hi)
        if lo >= hi:
            values.append(0.0)
            continue

        def integrand(x, t=t):
            return apply_map(amap, t, x) * float(phi.evaluator(x))

        values.append(_quad(integrand, lo, hi, points=(0.0, f_lo, f_hi)))
    return values


@dataclass(frozen=True)
class AutonomyCheckResult:
    """Outcome of the multiplicativity check over a step horizon."""

    autonomous: bool
    max_violation: float
    worst_pair: tuple

    def __iter__(self):
        # unpack support: ok, violation, pair = autonomy_check(...)
        return iter((self.autonomous, self.max_violation, self.worst_pair))


def autonomy_check(psi: PsiSequence, horizon: int, rel_tol: float = 1e-9) -> AutonomyCheckResult:
    """Check psi_(tau+kappa) = psi_tau * psi_kappa over all pairs in range.

    The relative violation |psi_(tau+kappa) - psi_tau*psi_kappa| /
    psi_(tau+kappa) must stay within rel_tol for every pair with
    tau, kappa >= 1 and tau + kappa <= horizon. Exactly the power
    sequences pass for every horizon.
    """
    if horizon < 2:
        raise ValueError(f"horizon must be at least 2, got {horizon}")
    if rel_tol <= 0:
        raise ValueError(f"rel_tol must be positive, got {rel_tol}")
    cache = {t: psi.at(t) for t in range(1, horizon + 1)}
    worst = 0.0
    worst_pair = (1, 1)
    for tau in range(1, horizon):
        for kap in range(1, horizon - tau + 1):
            target = cache[tau + kap]
            violation = abs(target - cache[tau] * cache[kap]) / target
            if violation > worst:
                worst = violation
                worst_pair = (tau, kap)
    return AutonomyCheckResult(worst <= rel_tol, worst, worst_pair)


def moment_scaling_predict(amap: AnalyticMap, k: int, t: int, nu_k_0: float) -> float:
    """Exact k-th raw moment at step t under the scaling map.

    A change of variables gives nu_k at step t equal to psi_t^(-k) times
    the base moment.
    """
    if int(k) < 1:
        raise ValueError(f"moment order must be a positive integer, got {k}")
    return amap.psi.at(t) ** (-int(k)) * nu_k_0


def even_moment_bound(amap: AnalyticMap, k: int, t: int, nu_2k_0: float) -> float:
    """Upper bound psi_t^(-2k) * nu_2k_0 on the order-2k moment at step t.

    Under the exact scaling map the bound holds with equality; for runs
    that only approximately follow the map it remains a checkable ceiling.
    """
    if int(k) < 1:
        raise ValueError(f"moment order must be a positive integer, got {k}")
    if nu_2k_0 < 0:
        raise ValueError("even-order base moment cannot be negative")
    return amap.psi.at(t) ** (-2 * int(k)) * nu_2k_0


def envelope_step(scale: float, dimension: int = 1):
    """One-step density transformation D(f)(x) = scale^n * f(scale * x)."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")

    def transform(f):
        def g(x):
            return scale**dimension * f(scale * np.asarray(x, dtype=float))

        return g

    return transform


def operator_norm_lower_bound(transform, interval, q=None, breakpoints=None) -> float:
    """Lower bound on the q-norm of a one-step density transformation.

    Pushes the uniform density on the interval through the transformation
    and integrates the image back over the same interval; the result
    bounds the operator norm from below for every q in [1, inf].
    Breakpoints let the caller flag discontinuities of the image.
    """
    lo, hi = interval
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError(f"interval must be finite with lo < hi, got {interval}")
    if q is not None and not (q >= 1):
        raise ValueError(f"q must lie in [1, inf], got {q}")
    indicator = uniform_density(lo, hi)
    image = transform(indicator.evaluator)
    pts = list(breakpoints) if breakpoints is not None else [lo, hi, 0.0]
    value = _quad(lambda x: float(image(x)), lo, hi, points=pts)
    return float(value)


def verify_transformation(transform, f: DensityFn, support=None, grid_points: int = 2001) -> bool:
    """Check that a one-step transformation maps f to a valid density.

    Two computable conditions: the image is nonnegative on a dense grid
    over the support, and its quadrature norm is 1 within f's tolerance.
    The support must cover the image's mass; pass one explicitly when the
    transformation moves mass outside the base support. Failures (including
    quadrature breakdown) return False rather than raising.
    """
    if grid_points < 3:
        raise ValueError("grid must have at least 3 points")
    lo, hi = support if support is not None else f.support_hint
    image = transform(f.evaluator)
    grid = np.linspace(lo, hi, grid_points)
    for x in grid:
        if float(image(x)) < 0.0:
            return False
    try:
        norm = _quad(lambda x: float(image(x)), lo, hi, points=(0.0, *f.support_hint))
    except QuadratureError:
        return False
    return 1.0 - f.norm_tolerance <= norm <= 1.0 + f.norm_tolerance
