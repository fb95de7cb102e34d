"""Gauss-Legendre rules on [0, T], uniform-grid fallbacks and GL error diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, KoopgenError


@dataclass(frozen=True)
class QuadratureRule:
    T: float
    nodes: NDArray
    weights: NDArray

    @property
    def size(self) -> int:
        return int(self.nodes.size)


def _legendre_nodes(n: int, tol: float = 1e-14, max_iter: int = 100):
    """Roots of P_n on [-1, 1] and the matching Gauss weights (Newton on the recurrence)."""
    i = np.arange(1, n + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(max_iter):
        p0, p1 = np.ones_like(x), x.copy()
        for k in range(2, n + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        if n == 1:
            p0, p1 = np.ones_like(x), x.copy()
        dp = n * (x * p1 - p0) / (x * x - 1.0)
        step = p1 / dp
        x = x - step
        if np.max(np.abs(step)) < tol:
            break
    # one more evaluation at the converged nodes for the weights
    p0, p1 = np.ones_like(x), x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    x, w = x[::-1], w[::-1]
    # exact mirror symmetry
    return 0.5 * (x - x[::-1]), 0.5 * (w + w[::-1])


def gl_rule(T: float, gamma_count: int) -> QuadratureRule:
    """``gamma_count``-point Gauss-Legendre rule on ``[0, T]``."""
    if gamma_count < 1:
        raise ConfigError("gamma_count must be at least 1")
    if not T > 0:
        raise ConfigError("T must be positive")
    x, w = _legendre_nodes(int(gamma_count))
    return QuadratureRule(float(T), 0.5 * T * (x + 1.0), 0.5 * T * w)


def gl_integrate(rule: QuadratureRule, values_at_nodes: ArrayLike) -> NDArray | float:
    """Weighted sum over the leading axis of ``values_at_nodes``."""
    v = np.asarray(values_at_nodes, dtype=float)
    if v.shape[0] != rule.size:
        raise ValueError(f"expected {rule.size} node values, got {v.shape[0]}")
    out = np.tensordot(rule.weights, v, axes=(0, 0))
    return float(out) if out.ndim == 0 else out


def _composite(v: NDArray, h: float) -> NDArray:
    n = v.shape[0] - 1  # number of intervals
    if n == 1:
        return 0.5 * h * (v[0] + v[1])
    if n % 2 == 0:
        return h / 3.0 * (v[0] + v[-1] + 4.0 * v[1:-1:2].sum(axis=0) + 2.0 * v[2:-1:2].sum(axis=0))
    # odd interval count: Simpson on the first n-3 intervals, 3/8 rule on the tail
    head = _composite(v[: n - 2], h) if n > 3 else 0.0
    tail = 3.0 * h / 8.0 * (v[-4] + 3.0 * v[-3] + 3.0 * v[-2] + v[-1])
    return head + tail


def integrate_uniform(T: float, samples: ArrayLike, mode: str = "composite") -> NDArray | float:
    """Integrate samples taken at ``k T / G`` for ``k = 0..G`` over ``[0, T]``.

    ``mode="composite"`` is composite Simpson (3/8 tail for odd ``G``).
    ``mode="interp_gl"`` passes a monotone cubic (PCHIP) interpolant through the
    samples and applies a ``G``-point Gauss-Legendre rule to it.
    """
    v = np.asarray(samples, dtype=float)
    G = v.shape[0] - 1
    if G < 1:
        raise ConfigError("need at least two uniform samples")
    if mode == "composite":
        out = _composite(v, T / G)
    elif mode == "interp_gl":
        if G < 3:
            raise ConfigError("interp_gl needs at least 3 intervals")
        grid = np.linspace(0.0, T, G + 1)
        rule = gl_rule(T, G)
        out = gl_integrate(rule, PchipInterpolator(grid, v, axis=0)(rule.nodes))
    else:
        raise ConfigError(f"unknown uniform quadrature mode {mode!r}")
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------- error diagnostics


def gl_error_coefficient(k: int) -> float:
    """Kernel ``(k!)^4 / ((2k+1) [(2k)!]^3)`` of the k-point GL remainder on a unit interval."""
    return math.exp(4 * math.lgamma(k + 1) - math.log(2 * k + 1) - 3 * math.lgamma(2 * k + 1))


def gl_coefficient_majorant(k: int) -> float:
    """Closed-form majorant ``(1 / (8 k^2))^k`` of :func:`gl_error_coefficient`."""
    return (1.0 / (8.0 * k * k)) ** k


def gl_coefficient_bound_check(k_max: int = 20) -> list[tuple[int, float, float]]:
    """Check ``E(k) <= (1/(8k^2))^k`` for ``k = 1..k_max``; returns ``(k, E, bound)`` rows."""
    if not 1 <= k_max <= 20:
        raise ConfigError("k_max must lie in 1..20")
    rows = []
    for k in range(1, k_max + 1):
        exact, bound = gl_error_coefficient(k), gl_coefficient_majorant(k)
        if exact > bound:
            raise KoopgenError(f"GL coefficient bound violated at k={k}: {exact} > {bound}")
        rows.append((k, exact, bound))
    return rows


def quad_error_bound(mu: float, order_N: int, L_f: float, T: float, gamma_count: int, x_norm: float) -> float:
    """Upper bound on the GL error for ``int_0^T e^{-mu t} K_t h(x) dt`` with ``h`` a monomial of order ``order_N``.

    Combines the remainder ``T^{2G+1} E(G) sup|g^{(2G)}|``, the majorant
    ``E(G) <= (8 G^2)^{-G}`` and the derivative estimate
    ``|g^{(k)}(t)| <= e^{(N L_f - mu) t} (mu + N L_f)^k |x|^N``. When
    ``mu >= N L_f`` the time supremum of the exponential is 1; otherwise it is
    attained at ``t = T``.
    """
    G = int(gamma_count)
    if G < 1 or T <= 0:
        raise ConfigError("need gamma_count >= 1 and T > 0")
    if x_norm == 0:
        return 0.0
    rate = order_N * L_f
    log_b = (
        order_N * math.log(x_norm)
        + (2 * G + 1) * math.log(T)
        - G * math.log(8.0 * G * G)
        + 2 * G * math.log(mu + rate)
        + max(0.0, (rate - mu) * T)
    )
    return math.exp(log_b)
