"""Region-of-attraction estimates from a learned generator.

The bounded Zubov function ``u`` solves ``L u = -alpha |x - x_eq|^2 (1 - u)``
with ``u(x_eq) = 0``. Writing ``u = Z(x)^T theta`` and replacing ``L`` by the
learned matrix turns the PDE into one linear least-squares problem in
``theta``; its sublevel set ``{u <= 1 - eps}`` around ``x_eq`` is the estimate.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import ndimage

from . import linalg
from .errors import ConfigError, DegenerateDataError, EmptyRegionError, EquilibriumNotFoundError
from .generator import LearnedGenerator
from .sysid import IdentifiedSystem

DEFAULT_WEIGHTS = (1.0, 100.0, 10.0)
RESIDUAL_CEILING = 1e-2


@dataclass(frozen=True, eq=False)
class ZubovProblem:
    alpha: float
    equilibrium: NDArray
    collocation: NDArray
    boundary: NDArray
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS  # (residual, equilibrium, boundary)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        w = tuple(float(v) for v in self.weights)
        if len(w) != 3 or min(w) < 0 or max(w) == 0:
            raise ConfigError("weights must be three nonnegative numbers, not all zero")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "equilibrium", np.asarray(self.equilibrium, dtype=float).reshape(-1))
        d = self.equilibrium.size
        for name in ("collocation", "boundary"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1, d)
            object.__setattr__(self, name, arr)


@dataclass
class ZubovSolution:
    theta: NDArray
    residual_rms: float
    equilibrium: NDArray
    equilibrium_value: float
    boundary_rms: float | None
    level: float | None = None
    meta: dict = field(default_factory=dict)

    def u(self, dictionary, X: ArrayLike) -> NDArray:
        return dictionary.evaluate(X) @ self.theta

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(
            {
                "theta": self.theta.tolist(),
                "residual_rms": self.residual_rms,
                "equilibrium": self.equilibrium.tolist(),
                "equilibrium_value": self.equilibrium_value,
                "boundary_rms": self.boundary_rms,
                "level": self.level,
                "meta": self.meta,
            },
            sort_keys=True,
        )
        if path is not None:
            Path(path).write_text(text)
        return text


def lattice(bounds: ArrayLike, counts: int | Sequence[int]) -> tuple[NDArray, ...]:
    """Per-axis grids including the box faces."""
    bounds = np.asarray(bounds, dtype=float)
    counts = [int(counts)] * bounds.shape[0] if np.isscalar(counts) else [int(c) for c in counts]
    return tuple(np.linspace(a, b, n) for (a, b), n in zip(bounds, counts))


def lattice_points(axes: Sequence[NDArray]) -> NDArray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def default_problem(
    bounds: ArrayLike,
    equilibrium: ArrayLike,
    alpha: float = 0.1,
    counts: int = 50,
    exclusion: float = 0.02,
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
) -> ZubovProblem:
    """Uniform lattice collocation minus a small ball around ``x_eq``; boundary rows on the box faces.

    The excluded radius is ``exclusion`` times the smallest axis span.
    """
    bounds = np.asarray(bounds, dtype=float)
    x_eq = np.asarray(equilibrium, dtype=float).reshape(-1)
    pts = lattice_points(lattice(bounds, counts))
    lo, hi = bounds[:, 0], bounds[:, 1]
    on_face = np.any(np.isclose(pts, lo) | np.isclose(pts, hi), axis=1)
    radius = exclusion * float(np.min(hi - lo))
    near = np.linalg.norm(pts - x_eq, axis=1) < radius
    return ZubovProblem(alpha, x_eq, pts[~on_face & ~near], pts[on_face], weights)


def zubov_solve(gen: LearnedGenerator, prob: ZubovProblem, residual_ceiling: float = RESIDUAL_CEILING) -> ZubovSolution:
    """Weighted least-squares collocation of the Zubov equation."""
    dictionary = gen.require_dictionary()
    if prob.equilibrium.size != dictionary.dim:
        raise ConfigError("equilibrium dimension does not match the dictionary")
    w_res, w_eq, w_bd = prob.weights
    Zc = dictionary.evaluate(prob.collocation)
    r2 = np.sum((prob.collocation - prob.equilibrium) ** 2, axis=1)
    res_rows = Zc @ gen.L - prob.alpha * r2[:, None] * Zc
    res_rhs = -prob.alpha * r2
    Ze = dictionary.evaluate(prob.equilibrium[None, :])
    blocks = [w_res * res_rows, w_eq * Ze]
    rhs = [w_res * res_rhs, np.zeros(1)]
    if w_bd > 0 and prob.boundary.shape[0]:
        Zb = dictionary.evaluate(prob.boundary)
        blocks.append(w_bd * Zb)
        rhs.append(w_bd * np.ones(Zb.shape[0]))
    Amat, b = np.vstack(blocks), np.concatenate(rhs)
    if not np.any(Amat):
        raise DegenerateDataError("Zubov system is identically zero")
    theta = linalg.lstsq(Amat, b)
    residual = res_rows @ theta - res_rhs
    rms = float(np.sqrt(np.mean(residual ** 2))) if residual.size else 0.0
    bd_rms = None
    if prob.boundary.shape[0]:
        bd_rms = float(np.sqrt(np.mean((dictionary.evaluate(prob.boundary) @ theta - 1.0) ** 2)))
    if rms > residual_ceiling:
        warnings.warn(f"Zubov residual RMS {rms:.3e} exceeds {residual_ceiling:.1e}", RuntimeWarning, stacklevel=2)
    return ZubovSolution(theta, rms, prob.equilibrium.copy(), float((Ze @ theta)[0]), bd_rms, meta={"alpha": prob.alpha})


@dataclass
class RoaEstimate:
    mask: NDArray  # boolean, lattice shape
    values: NDArray  # u on the lattice
    axes: tuple[NDArray, ...]
    level: float

    @property
    def fraction(self) -> float:
        return float(self.mask.mean())

    def area(self) -> float:
        """Covered fraction times the measure of the lattice box."""
        box = np.prod([ax[-1] - ax[0] for ax in self.axes])
        return float(self.fraction * box)

    def to_csv(self, path: str | Path) -> None:
        pts = lattice_points(self.axes)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{j + 1}" for j in range(pts.shape[1])] + ["u", "in_roa"])
            for p, u, m in zip(pts, self.values.ravel(), self.mask.ravel()):
                w.writerow([repr(float(v)) for v in p] + [repr(float(u)), int(m)])


def roa_extract(sol: ZubovSolution, dictionary, axes: Sequence[NDArray], epsilon: float) -> RoaEstimate:
    """Connected component of ``{u <= 1 - epsilon}`` on the lattice that contains ``x_eq``."""
    if not 0 < epsilon < 1:
        raise ConfigError("epsilon must lie in (0, 1)")
    axes = tuple(np.asarray(a, dtype=float) for a in axes)
    shape = tuple(a.size for a in axes)
    values = (dictionary.evaluate(lattice_points(axes)) @ sol.theta).reshape(shape)
    level = 1.0 - epsilon
    sub = values <= level
    seed = tuple(int(np.argmin(np.abs(a - x))) for a, x in zip(axes, sol.equilibrium))
    if not sub[seed]:
        raise EmptyRegionError("equilibrium is not inside the sublevel set")
    labels, _ = ndimage.label(sub)
    sol.level = level
    return RoaEstimate(labels == labels[seed], values, axes, level)


def lie_derivative_check(gen: LearnedGenerator, theta: ArrayLike, points: ArrayLike) -> float:
    """``max_x Z(x)^T L theta``; negative away from ``x_eq`` for a valid decrease condition."""
    return float(np.max(gen.apply(np.atleast_2d(np.asarray(points, dtype=float)), theta)))


def find_equilibrium(
    sys: IdentifiedSystem,
    start: ArrayLike | None = None,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> NDArray:
    """Damped Newton iteration for ``f_hat(x) = 0`` starting from ``start`` (default: origin)."""
    x = np.zeros(sys.dim) if start is None else np.asarray(start, dtype=float).reshape(-1).copy()
    fx = sys(x)
    for _ in range(max_iter):
        norm = float(np.linalg.norm(fx))
        if norm <= tol:
            return x
        J = sys.theta @ sys.dictionary.gradient(x[None, :])[0]  # (d, d)
        try:
            step = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            step = linalg.lstsq(J, -fx)
        t = 1.0
        while t > 1e-8:
            cand = x + t * step
            fc = sys(cand)
            if np.linalg.norm(fc) < (1 - 1e-4 * t) * norm:
                break
            t *= 0.5
        else:
            if norm < 1e3 * tol:
                return x
            raise EquilibriumNotFoundError(f"Newton stalled at |f| = {norm:.3e}")
        x, fx = cand, fc
    if np.linalg.norm(fx) <= 1e3 * tol:
        return x
    raise EquilibriumNotFoundError(f"Newton did not converge in {max_iter} iterations (|f| = {np.linalg.norm(fx):.3e})")
