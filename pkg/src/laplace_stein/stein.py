"""Second-order characterizing equation for Laplace(0, b) and its bounded solution.

For a test function h in the bounded-Lipschitz ball (sup norm <= 1, Lipschitz
constant <= 1) write Wh = E[h(W)] under the target law and center
ht(x) = h(x) - Wh.  The initial value problem

    g(x) - b**2 g''(x) = ht(x),    g(0) = 0,

has exactly one bounded solution (the homogeneous solutions exp(+-x/b) are
unbounded) and it can be written with two exponentially weighted tails

    A(x) = (1/(2b)) int_0^inf exp(-u/b) ht(x+u) du,
    B(x) = (1/(2b)) int_0^inf exp(-u/b) ht(x-u) du,

as g = A + B.  Differentiating the tails gives A' = A/b - ht/(2b) and
B' = -B/b + ht/(2b), hence

    g'   = (A - B) / b,
    g''  = (A + B - ht) / b**2,
    g''' = -h'/b**2 + (A - B)/b**3.

The solution satisfies |g| <= 2, |g'| <= 2/b, |g''| <= 4/b**2, and g'' is
Lipschitz with constant (b+2)/b**3; ``certify_bounds`` audits all four on a
grid.  Two quadrature-free identities back the solver up in the tests: the
second-order identity E[g(W)] - g(0) = b**2 E[g''(W)] and the first-order
(density-method) identity E[g'(W)] = (1/b) E[sgn(W) g(W)].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import CertificationError
from .laplace import LaplaceParams, pdf
from .quadrature import exp_weighted_right_tail, laplace_expectation

_HBL_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A test function with certified sup-norm and Lipschitz constants.

    ``fn`` (and ``deriv``, where given) must accept ndarray input.  ``kinks``
    lists the points where fn or its derivative jumps; quadrature rules split
    there.
    """

    fn: Callable
    lip_const: float
    sup_bound: float
    label: str
    deriv: Optional[Callable] = None
    kinks: tuple = ()

    def __call__(self, x):
        return self.fn(x)

    @property
    def in_hbl(self) -> bool:
        return (self.sup_bound <= 1.0 + _HBL_SLACK
                and self.lip_const <= 1.0 + _HBL_SLACK)


def require_hbl(h: TestFunction) -> None:
    if not h.in_hbl:
        raise CertificationError(
            f"{h.label}: not in the bounded-Lipschitz ball "
            f"(sup={h.sup_bound:g}, lip={h.lip_const:g})")


def constant_fn(c: float) -> TestFunction:
    return TestFunction(fn=lambda x, c=c: np.full_like(np.asarray(x, float), c),
                        deriv=lambda x: np.zeros_like(np.asarray(x, float)),
                        lip_const=0.0, sup_bound=abs(c), label=f"const({c:g})")


def sin_fn() -> TestFunction:
    return TestFunction(fn=np.sin, deriv=np.cos, lip_const=1.0, sup_bound=1.0,
                        label="sin")


def cos_fn() -> TestFunction:
    return TestFunction(fn=np.cos, deriv=lambda x: -np.sin(x), lip_const=1.0,
                        sup_bound=1.0, label="cos")


def tanh_fn() -> TestFunction:
    return TestFunction(fn=np.tanh, deriv=lambda x: 1.0 - np.tanh(x) ** 2,
                        lip_const=1.0, sup_bound=1.0, label="tanh")


def clamp_fn() -> TestFunction:
    return TestFunction(fn=lambda x: np.clip(x, -1.0, 1.0),
                        deriv=lambda x: np.where(np.abs(x) < 1.0, 1.0, 0.0),
                        lip_const=1.0, sup_bound=1.0, kinks=(-1.0, 1.0),
                        label="clamp")


def smoothed_indicator(x0: float, eps: float) -> TestFunction:
    """Ramp from 1 to 0 across [x0, x0+eps], scaled by min(1, eps).

    Unscaled the ramp has Lipschitz constant 1/eps, so for eps < 1 the member
    is multiplied by eps to stay inside the bounded-Lipschitz ball.
    """
    scale = min(1.0, eps)

    def fn(z, x0=x0, eps=eps, scale=scale):
        return scale * np.clip((x0 + eps - np.asarray(z, float)) / eps, 0.0, 1.0)

    def deriv(z, x0=x0, eps=eps, scale=scale):
        z = np.asarray(z, float)
        return np.where((z > x0) & (z < x0 + eps), -scale / eps, 0.0)

    return TestFunction(fn=fn, deriv=deriv, lip_const=scale / eps,
                        sup_bound=scale, kinks=(x0, x0 + eps),
                        label=f"ind({x0:g},{eps:g})")


@lru_cache(maxsize=None)
def stein_family() -> tuple:
    """Built-in test family used by the equation-level certificates.

    Constants, smooth members (sin, cos, tanh), the clamp, and a grid of
    scaled smoothed indicators: spans smooth, kinked, and indicator-like
    behavior.
    """
    members = [constant_fn(1.0), constant_fn(-0.5), sin_fn(), cos_fn(),
               tanh_fn(), clamp_fn()]
    for x0 in (-2.0, -1.0, 0.0, 1.0, 2.0):
        for eps in (0.1, 0.5, 1.0):
            members.append(smoothed_indicator(x0, eps))
    return tuple(members)


@lru_cache(maxsize=None)
def dense_bl_family() -> tuple:
    """Superset of :func:`stein_family` with a dense indicator grid (100+
    members); this is the default family behind the empirical lower bound on
    the bounded-Lipschitz distance."""
    members = {h.label: h for h in stein_family()}
    for x0 in np.linspace(-4.0, 4.0, 21):
        for eps in (0.25, 0.5, 1.0, 2.0, 4.0):
            h = smoothed_indicator(round(float(x0), 9), eps)
            members.setdefault(h.label, h)
    return tuple(members.values())


def target_expectation(h: TestFunction, b: float) -> float:
    """Wh = E[h(W)] for W ~ Laplace(0, b); |Wh| <= 1 for members of the ball."""
    require_hbl(h)
    return laplace_expectation(h.fn, b, kinks=h.kinks)


@lru_cache(maxsize=None)
def _cached_wh(h: TestFunction, b: float) -> float:
    return target_expectation(h, b)


@dataclass(frozen=True)
class SolutionProfile:
    """Solution and derivatives evaluated on one grid in a single pass."""

    x: np.ndarray
    g: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    g3: Optional[np.ndarray]


@dataclass(frozen=True, eq=False)
class SteinSolution:
    """Bounded solution of g - b^2 g'' = h - Wh with g(0) = 0.

    Evaluators are immutable and safe for concurrent use; each call is a
    fresh quadrature pass.
    """

    h: TestFunction
    b: float
    target_mean: float  # Wh

    def centered(self, x):
        return self.h.fn(x) - self.target_mean

    def _tails(self, xs: np.ndarray):
        """A(xs), B(xs) for sorted xs."""
        ht = self.centered
        a_vals = exp_weighted_right_tail(ht, self.b, xs, kinks=self.h.kinks)
        refl = lambda y: ht(-y)
        rkinks = tuple(-k for k in self.h.kinks)
        b_vals = exp_weighted_right_tail(refl, self.b, -xs[::-1],
                                         kinks=rkinks)[::-1]
        return a_vals, b_vals

    def profile(self, grid) -> SolutionProfile:
        xs = np.asarray(grid, dtype=float)
        if np.any(np.diff(xs) < 0):
            raise ValueError("grid must be sorted ascending")
        a_vals, b_vals = self._tails(xs)
        ht = self.centered(xs)
        b = self.b
        g = a_vals + b_vals
        g1 = (a_vals - b_vals) / b
        g2 = (g - ht) / b ** 2
        g3 = None
        if self.h.deriv is not None:
            g3 = (a_vals - b_vals) / b ** 3 - self.h.deriv(xs) / b ** 2
        return SolutionProfile(x=xs, g=g, g1=g1, g2=g2, g3=g3)

    def _eval(self, x, which: str):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        order = np.argsort(arr, kind="stable")
        prof = self.profile(arr[order])
        out = np.empty_like(arr)
        out[order] = getattr(prof, which)
        return float(out[0]) if np.ndim(x) == 0 else out

    def g(self, x):
        return self._eval(x, "g")

    def g1(self, x):
        return self._eval(x, "g1")

    def g2(self, x):
        return self._eval(x, "g2")

    def g3(self, x):
        if self.h.deriv is None:
            raise ValueError(f"{self.h.label}: no derivative recipe, g''' "
                             "is unavailable (use finite differences of g'')")
        return self._eval(x, "g3")


def solve(h: TestFunction, b: float) -> SteinSolution:
    """Construct the bounded solution for test function h at scale b."""
    require_hbl(h)
    if b <= 0:
        raise ValueError("scale b must be positive")
    return SteinSolution(h=h, b=b, target_mean=_cached_wh(h, float(b)))


def residual(sol: SteinSolution, x):
    """g(x) - b^2 g''(x) - ht(x); vanishes wherever the solver is consistent."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    order = np.argsort(arr, kind="stable")
    prof = sol.profile(arr[order])
    res = prof.g - sol.b ** 2 * prof.g2 - sol.centered(prof.x)
    out = np.empty_like(arr)
    out[order] = res
    return float(out[0]) if np.ndim(x) == 0 else out


def standard_grid(b: float) -> np.ndarray:
    """Default certification grid: [-40b, 40b] in steps of b/20."""
    return np.linspace(-40.0 * b, 40.0 * b, 1601)


@dataclass(frozen=True)
class BoundCertificate:
    """Grid maxima of |g|, |g'|, |g''| and the finite-difference slope of g''
    against their analytic limits 2, 2/b, 4/b^2, (b+2)/b^3."""

    label: str
    b: float
    values: dict = field(default_factory=dict)
    limits: dict = field(default_factory=dict)
    passed: bool = False

    TOLERANCE = 1e-9


def certify_bounds(sol: SteinSolution, grid) -> BoundCertificate:
    """Audit the four derivative bounds of the bounded solution on a grid.

    The grid must span at least [-40b, 40b] with spacing <= b/10.  The
    Lipschitz bound for g'' is checked through finite differences of g''
    (well-defined even where h' fails to exist).
    """
    xs = np.asarray(grid, dtype=float)
    b = sol.b
    if xs[0] > -40.0 * b + 1e-9 or xs[-1] < 40.0 * b - 1e-9:
        raise ValueError("grid must span [-40b, 40b]")
    steps = np.diff(xs)
    if np.any(steps <= 0) or np.max(steps) > b / 10.0 + 1e-12:
        raise ValueError("grid step must be positive and at most b/10")

    prof = sol.profile(xs)
    values = {
        "max_abs_g": float(np.max(np.abs(prof.g))),
        "max_abs_g1": float(np.max(np.abs(prof.g1))),
        "max_abs_g2": float(np.max(np.abs(prof.g2))),
        "max_g2_slope": float(np.max(np.abs(np.diff(prof.g2) / steps))),
    }
    limits = {
        "max_abs_g": 2.0,
        "max_abs_g1": 2.0 / b,
        "max_abs_g2": 4.0 / b ** 2,
        "max_g2_slope": (b + 2.0) / b ** 3,
    }
    passed = all(values[k] <= limits[k] + BoundCertificate.TOLERANCE
                 for k in values)
    return BoundCertificate(label=sol.h.label, b=b, values=values,
                            limits=limits, passed=passed)


def verify_characterization(g, g_dd, b: float, kinks=()) -> float:
    """E[g(W)] - g(0) - b^2 E[g''(W)]; zero for any admissible g."""
    eg = laplace_expectation(g, b, kinks=kinks)
    egdd = laplace_expectation(g_dd, b, kinks=kinks)
    return eg - float(g(np.asarray(0.0))) - b ** 2 * egdd


def verify_first_order(g, g_d, b: float, kinks=()) -> float:
    """E[g'(W)] - (1/b) E[sgn(W) g(W)]; zero for any admissible g."""
    egd = laplace_expectation(g_d, b, kinks=kinks)
    esg = laplace_expectation(lambda w: np.sign(w) * g(w), b,
                              kinks=tuple(kinks) + (0.0,))
    return egd - esg / b


def density_sup(params: LaplaceParams) -> float:
    """Uniform bound on the target density: 1/(2b), attained at the center."""
    return float(pdf(params.a, params))
