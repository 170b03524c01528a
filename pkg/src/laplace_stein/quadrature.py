"""Quadrature helpers tuned to exponential-tail integrands.

Two tools live here:

``laplace_expectation``
    E[f(W)] for W ~ Laplace(0, b), computed with adaptive Gauss-Kronrod on the
    two half-lines folded together, split at the integrand's kink points.  The
    integral is truncated where the exponential weight drops below double
    precision against O(1) integrands.

``exp_weighted_right_tail``
    Batch evaluation of the weighted tail transform

        T(x) = (1/(2b)) * integral_0^inf exp(-u/b) f(x+u) du

    on a sorted array of points.  A composite fixed-order Gauss-Legendre rule
    runs over a partition refined at f's kinks; with nodes x_0 < ... < x_K and
    panel integrals I_j = int_{x_j}^{x_{j+1}} exp(-(y-x_j)/b) f(y) dy the
    suffix recursion

        S_j = I_j + exp(-(x_{j+1} - x_j)/b) * S_{j+1},   T(x_j) = S_j / (2b)

    yields every point in one sweep.  On kink-free panels no longer than b the
    10-point rule is accurate far below 1e-15 for the bounded, mildly varying
    integrands used here, so the dominant error is the exp(-span) truncation.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate

from .errors import QuadratureError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)

# exp(-40) ~ 4e-18: tail weight below double-precision resolution.
TAIL_SPAN = 40.0


def laplace_expectation(f, b: float, kinks=(), span: float = 80.0,
                        epsabs: float = 1e-12, epsrel: float = 1e-12,
                        tol: float = 1e-8) -> float:
    """E[f(W)], W ~ Laplace(0, b), by adaptive quadrature.

    ``kinks`` lists points where f or f' jumps; the rule is split there.
    Raises QuadratureError when the error estimate exceeds ``tol``.
    """
    hi = span * b

    def folded(u):
        return (f(u) + f(-u)) * np.exp(-u / b)

    points = sorted({abs(k) for k in kinks if 0.0 < abs(k) < hi})
    val, err = integrate.quad(folded, 0.0, hi, points=points or None,
                              limit=300, epsabs=epsabs, epsrel=epsrel)
    if err / (2.0 * b) > tol:
        raise QuadratureError("expectation quadrature did not converge",
                              residual=err / (2.0 * b))
    return val / (2.0 * b)


def exp_weighted_right_tail(f, b: float, xs, kinks=(), span: float = TAIL_SPAN,
                            max_panel: float | None = None) -> np.ndarray:
    """T(x) = (1/(2b)) int_0^inf exp(-u/b) f(x+u) du on sorted points xs.

    ``f`` must accept ndarray input.  ``kinks`` are abscissae where f is not
    smooth; they become panel boundaries so each panel integrand is analytic.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("xs must be a nonempty 1-d array")
    if np.any(np.diff(xs) < 0):
        raise ValueError("xs must be sorted ascending")
    top = xs[-1] + span * b
    step = max_panel if max_panel is not None else 0.5 * b
    pieces = [xs, np.arange(xs[-1], top, step), np.asarray([top])]
    interior = [k for k in kinks if xs[0] < k < top]
    if interior:
        pieces.append(np.asarray(interior, dtype=float))
    nodes = np.unique(np.concatenate(pieces))

    left = nodes[:-1]
    width = np.diff(nodes)
    y = left[:, None] + (0.5 * (_GL_NODES + 1.0))[None, :] * width[:, None]
    wts = (0.5 * width)[:, None] * _GL_WEIGHTS[None, :]
    panel = np.sum(wts * np.exp(-(y - left[:, None]) / b) * f(y), axis=1)

    decay = np.exp(-width / b)
    suffix = np.zeros(nodes.size)
    acc = 0.0
    for j in range(nodes.size - 2, -1, -1):
        acc = panel[j] + decay[j] * acc
        suffix[j] = acc
    return suffix[np.searchsorted(nodes, xs)] / (2.0 * b)


def cumulative_integral(f, nodes) -> np.ndarray:
    """int_{nodes[0]}^{nodes[i]} f for every i, by panel-wise Gauss-Legendre.

    ``nodes`` must be sorted and f smooth on each panel; used to tabulate
    CDFs of reweighted densities on a fixed grid.
    """
    nodes = np.asarray(nodes, dtype=float)
    left = nodes[:-1]
    width = np.diff(nodes)
    y = left[:, None] + (0.5 * (_GL_NODES + 1.0))[None, :] * width[:, None]
    wts = (0.5 * width)[:, None] * _GL_WEIGHTS[None, :]
    panel = np.sum(wts * f(y), axis=1)
    return np.concatenate([[0.0], np.cumsum(panel)])
