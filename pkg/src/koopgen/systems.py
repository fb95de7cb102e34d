"""Benchmark vector fields, trajectory generation and the boundary recast.

Fields are vectorized: ``field(X)`` maps an ``(M, d)`` array of states to an
``(M, d)`` array of velocities. Polynomial systems additionally carry their
exact monomial expansion (``polynomial_terms``), used as the ground truth for
weight-error metrics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConfigError
from .ode import solve_batch

Field = Callable[[NDArray], NDArray]
# One dict per state component: multi-index -> coefficient.
PolynomialTerms = tuple[dict[tuple[int, ...], float], ...]

RECAST_INNER = 0.95
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


@dataclass(frozen=True)
class SystemSpec:
    name: str
    dim: int
    field: Field
    domain: tuple[tuple[float, float], ...]
    lipschitz_estimate: float | None = None
    recast_boundary: bool = False
    params: Mapping[str, float] = field(default_factory=dict)
    polynomial_terms: PolynomialTerms | None = None

    @property
    def bounds(self) -> NDArray:
        return np.asarray(self.domain, dtype=float)

    def __call__(self, X: ArrayLike) -> NDArray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        out = self.field(np.atleast_2d(X))
        return out[0] if single else out

    def contains(self, X: ArrayLike, closed: bool = True) -> NDArray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        if closed:
            return np.all((X >= lo) & (X <= hi), axis=1)
        return np.all((X > lo) & (X < hi), axis=1)


@dataclass
class Trajectory:
    initial: NDArray
    times: NDArray
    states: NDArray
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path: str | Path) -> None:
        d = self.states.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x{j + 1}" for j in range(d)])
            for t, row in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path: str | Path) -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if not header or header[0] != "t" or any(
            h != f"x{j + 1}" for j, h in enumerate(header[1:])
        ):
            raise ConfigError(f"{path}: expected header t,x1..xd, got {header}")
        data = np.array([[float(v) for v in r] for r in body if r], dtype=float)
        if data.size == 0:
            raise ConfigError(f"{path}: no samples")
        times, states = data[:, 0], data[:, 1:]
        return cls(states[0].copy(), times, states)


# --------------------------------------------------------------------------- fields


def _vdp(p):
    def f(X):
        x1, x2 = X[:, 0], X[:, 1]
        return np.stack([-x2, x1 - (1.0 - x1 ** 2) * x2], axis=1)

    terms = ({(0, 1): -1.0}, {(1, 0): 1.0, (0, 1): -1.0, (2, 1): 1.0})
    return f, terms


def _lorenz63_scaled(p):
    s, g, b, e = p["sigma"], p["gamma"], p["beta"], p["epsilon"]

    def f(X):
        x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
        return np.stack(
            [s * (x2 - e * x1), x1 * (g - x3) - e * x2, x1 * x2 - e * b * x3], axis=1
        )

    terms = (
        {(0, 1, 0): s, (1, 0, 0): -s * e},
        {(1, 0, 0): g, (1, 0, 1): -1.0, (0, 1, 0): -e},
        {(1, 1, 0): 1.0, (0, 0, 1): -e * b},
    )
    return f, terms


def _lorenz96(p):
    d, F = int(p["dim"]), p["forcing"]
    if d < 4:
        raise ConfigError("lorenz96 needs dim >= 4")

    def f(X):
        return (
            -np.roll(X, 2, axis=1) * np.roll(X, 1, axis=1)
            + np.roll(X, 1, axis=1) * np.roll(X, -1, axis=1)
            - X
            + F
        )

    terms = []
    for j in range(d):
        t: dict[tuple[int, ...], float] = {}

        def add(idx, c):
            alpha = [0] * d
            for i in idx:
                alpha[i % d] += 1
            key = tuple(alpha)
            t[key] = t.get(key, 0.0) + c

        add((), F)
        add((j,), -1.0)
        add((j - 1, j + 1), 1.0)
        add((j - 2, j - 1), -1.0)
        terms.append(t)
    return f, tuple(terms)


def _yeast7(p):
    kex, Gex, k1, k2, k3, k4, k5, k6 = (p[k] for k in ("k_ex", "G_ex", "k1", "k2", "k3", "k4", "k5", "k6"))
    k, kappa, q, K1, psi, N, A = (p[k] for k in ("k", "kappa", "q", "K1", "psi", "N", "A"))

    def f(X):
        S1, S2, S3, S4, S5, S6, S7 = (X[:, i] for i in range(7))
        v1 = k1 * S1 * S6 / (1.0 + (S6 / K1) ** q)
        r2 = k2 * S2 * (N - S5)
        r3 = k3 * S3 * (A - S6)
        leak = kappa * (S4 - S7)
        return np.stack(
            [
                kex * (Gex - S1) - v1,
                2 * v1 - r2 - k6 * S2 * S5,
                r2 - r3,
                r3 - k4 * S4 * S5 - leak,
                r2 - k4 * S4 * S5 - k6 * S2 * S5,
                -2 * v1 + 2 * k2 * S3 * (A - S6) - k5 * S6,
                psi * leak - k * S7,
            ],
            axis=1,
        )

    return f, None


def _rational2d(p):
    def f(X):
        x1, x2 = X[:, 0], X[:, 1]
        den = 1.0 + x2 ** 2
        return np.stack([-x1 + 4 * x2 / den, -x2 - 4 * x1 / den], axis=1)

    return f, None


def _two_machine(p):
    damping, delta = p["damping"], p["delta"]

    def f(X):
        x1, x2 = X[:, 0], X[:, 1]
        return np.stack([x2, -damping * x2 - (np.sin(x1 + delta) - math.sin(delta))], axis=1)

    return f, None


def _cubic1d(p):
    a = p["alpha"]

    def f(X):
        return a * X - X ** 3

    terms = {(3,): -1.0}
    if a != 0:
        terms[(1,)] = a
    return f, (terms,)


def _linear(p):
    a, d = p["a"], int(p["dim"])

    def f(X):
        return a * X

    terms = tuple({tuple(int(i == j) for i in range(d)): a} for j in range(d))
    return f, terms


# name -> (builder, default params, dim(params), default domain(params), lipschitz(params))
_REGISTRY: dict[str, tuple] = {
    "vdp": (_vdp, {}, lambda p: 2, lambda p: [(-1.0, 1.0)] * 2, lambda p: 4.0),
    "lorenz63_scaled": (
        _lorenz63_scaled,
        {"sigma": 10.0, "gamma": 0.28, "beta": 8.0 / 3.0, "epsilon": 0.1},
        lambda p: 3,
        lambda p: [(-1.0, 1.0)] * 3,
        lambda p: p["sigma"] + 2.0,
    ),
    "lorenz96": (
        _lorenz96,
        {"dim": 6, "forcing": 0.1},
        lambda p: int(p["dim"]),
        lambda p: [(-1.0, 1.0)] * int(p["dim"]),
        lambda p: 5.0,
    ),
    "yeast7": (
        _yeast7,
        {
            "k_ex": 0.5, "G_ex": 0.5, "k1": 100.0, "k2": 6.0, "k3": 16.0, "k4": 100.0,
            "k5": 1.28, "k6": 12.0, "k": 1.8, "kappa": 13.0, "q": 4.0, "K1": 0.52,
            "psi": 0.1, "N": 1.0, "A": 4.0,
        },
        lambda p: 7,
        lambda p: [(0.0, 0.5)] * 7,
        lambda p: None,
    ),
    "rational2d": (_rational2d, {}, lambda p: 2, lambda p: [(-1.0, 1.0)] * 2, lambda p: 6.0),
    "two_machine": (
        _two_machine,
        {"damping": 0.5, "delta": math.pi / 3},
        lambda p: 2,
        lambda p: [(-1.0, 1.0)] * 2,
        lambda p: 1.5,
    ),
    "cubic1d": (_cubic1d, {"alpha": 0.0}, lambda p: 1, lambda p: [(-1.0, 1.0)], lambda p: 3.0),
    "linear": (
        _linear,
        {"a": -1.0, "dim": 1},
        lambda p: int(p["dim"]),
        lambda p: [(-1.0, 1.0)] * int(p["dim"]),
        lambda p: abs(p["a"]),
    ),
}

BUILTIN_SYSTEMS = tuple(_REGISTRY)


def builtin_system(
    name: str,
    params: Mapping[str, float] | None = None,
    domain: Sequence[Sequence[float]] | None = None,
) -> SystemSpec:
    """Instantiate one of the registered benchmark systems.

    ``params`` overrides individual defaults; unknown keys are rejected.
    """
    if name not in _REGISTRY:
        raise ConfigError(f"unknown system {name!r}; choose from {', '.join(BUILTIN_SYSTEMS)}")
    build, defaults, dim_of, domain_of, lip_of = _REGISTRY[name]
    params = dict(params or {})
    unknown = set(params) - set(defaults)
    if unknown:
        raise ConfigError(f"{name}: unknown parameter(s) {sorted(unknown)}")
    p = {**defaults, **params}
    for key, val in p.items():
        if not isinstance(val, (int, float)) or not math.isfinite(val):
            raise ConfigError(f"{name}: parameter {key} must be a finite number")
    f, terms = build(p)
    dim = dim_of(p)
    dom = domain_of(p) if domain is None else [tuple(map(float, ab)) for ab in domain]
    if len(dom) != dim or any(a >= b for a, b in dom):
        raise ConfigError(f"{name}: domain must be {dim} intervals (a, b) with a < b")
    return SystemSpec(
        name=name,
        dim=dim,
        field=f,
        domain=tuple(tuple(ab) for ab in dom),
        lipschitz_estimate=lip_of(p),
        params=p,
        polynomial_terms=terms,
    )


def custom_system(name: str, field: Field, domain, lipschitz_estimate=None) -> SystemSpec:
    dom = tuple(tuple(map(float, ab)) for ab in domain)
    return SystemSpec(name, len(dom), field, dom, lipschitz_estimate)


# --------------------------------------------------------------------------- recast


def _smoothstep(z: NDArray) -> NDArray:
    z = np.clip(z, 0.0, 1.0)
    return z * z * (3.0 - 2.0 * z)


def boundary_cutoff(bounds: NDArray, X: NDArray, inner: float = RECAST_INNER) -> NDArray:
    """Product of per-axis C^1 ramps: 1 on the ``inner``-scaled box, 0 on the boundary."""
    lo, hi = bounds[:, 0], bounds[:, 1]
    center, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    u = np.abs(X - center) / half
    return np.prod(_smoothstep((1.0 - u) / (1.0 - inner)), axis=1)


def recast_field(spec: SystemSpec) -> SystemSpec:
    """Return ``spec`` with its field multiplied by a cutoff vanishing on the boundary."""
    if spec.recast_boundary:
        return spec
    bounds = spec.bounds
    if not np.all(np.isfinite(bounds)):
        raise ConfigError("recast needs a bounded domain")
    raw = spec.field

    def f(X):
        return boundary_cutoff(bounds, X)[:, None] * raw(X)

    return replace(spec, field=f, recast_boundary=True, polynomial_terms=None)


# --------------------------------------------------------------------------- sampling / integration


def sample_initial_conditions(domain, M: int, seed: int) -> NDArray:
    """``M`` i.i.d. uniform points in the box ``domain`` (PCG64 stream, bit-reproducible)."""
    if M < 1:
        raise ConfigError("M must be at least 1")
    bounds = np.asarray(domain.bounds if isinstance(domain, SystemSpec) else domain, dtype=float)
    rng = np.random.default_rng(seed)
    lo, hi = bounds[:, 0], bounds[:, 1]
    return lo + (hi - lo) * rng.random((M, bounds.shape[0]))


def integrate_batch(
    spec: SystemSpec,
    X0: ArrayLike,
    request_times: ArrayLike,
    tol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    escape_radius: float | None = None,
):
    """Integrate many initial states together.

    Returns ``(states, left_domain, escaped)`` with ``states`` of shape
    ``(M, len(request_times), d)``.
    """
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    sol = solve_batch(spec.field, X0, np.asarray(request_times, dtype=float), tol, atol, escape_radius)
    with np.errstate(invalid="ignore"):
        inside = np.all(
            (sol.states >= spec.bounds[:, 0] - 1e-12) & (sol.states <= spec.bounds[:, 1] + 1e-12)
            | np.isnan(sol.states),
            axis=2,
        )
    left = ~np.all(inside, axis=1)
    return sol.states, left, sol.escaped


def integrate(
    spec: SystemSpec,
    x0: ArrayLike,
    request_times: ArrayLike,
    tol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> Trajectory:
    """Single trajectory with dense output at ``request_times``.

    Leaving the closed domain is not an error; it is recorded in
    ``metadata["left_domain"]``.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    times = np.asarray(request_times, dtype=float)
    states, left, _ = integrate_batch(spec, x0[None, :], times, tol, atol)
    meta = {"left_domain": bool(left[0])}
    if left[0] and not spec.recast_boundary:
        meta["warning"] = "state left the closed domain"
    return Trajectory(x0.copy(), times, states[0], meta)
