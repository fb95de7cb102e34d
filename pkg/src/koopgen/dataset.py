"""Trajectory snapshot datasets shared by every learning method."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, DegenerateDataError
from .quadrature import QuadratureRule, gl_rule
from .systems import DEFAULT_ATOL, DEFAULT_RTOL, SystemSpec, Trajectory, integrate_batch, sample_initial_conditions


@dataclass(frozen=True, eq=False)
class SnapshotDataset:
    """Snapshots of ``M`` trajectories over ``[0, T]``.

    Attributes
    ----------
    initial : (M, d)
        Initial states.
    T, gamma_count :
        Horizon and snapshots per trajectory; ``tau = T / gamma_count``.
    node_states : (M, G, d) or None
        States at the Gauss-Legendre abscissae of ``[0, T]``.
    uniform_states : (M, G + 1, d) or None
        States at ``k tau`` for ``k = 0..G`` (first entry is ``initial``).
    end_states : (M, d)
        States at ``t = T``.
    """

    initial: NDArray
    T: float
    gamma_count: int
    end_states: NDArray
    node_states: NDArray | None = None
    uniform_states: NDArray | None = None
    rule: QuadratureRule | None = None
    meta: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return int(self.initial.shape[0])

    @property
    def dim(self) -> int:
        return int(self.initial.shape[1])

    @property
    def tau(self) -> float:
        return self.T / self.gamma_count

    @property
    def uniform_times(self) -> NDArray:
        return np.linspace(0.0, self.T, self.gamma_count + 1)

    def first_step_states(self) -> NDArray:
        """States one sampling period after the initial ones, ``phi(tau, x)``."""
        if self.uniform_states is None:
            raise ConfigError("dataset carries no uniform-grid snapshots")
        return self.uniform_states[:, 1]

    def subset(self, rows: Sequence[int] | NDArray) -> "SnapshotDataset":
        rows = np.asarray(rows)
        pick = lambda a: None if a is None else a[rows]  # noqa: E731
        return SnapshotDataset(
            self.initial[rows], self.T, self.gamma_count, self.end_states[rows],
            pick(self.node_states), pick(self.uniform_states), self.rule, dict(self.meta),
        )

    def trajectories(self) -> list[Trajectory]:
        if self.uniform_states is None:
            raise ConfigError("dataset carries no uniform-grid snapshots")
        t = self.uniform_times
        return [Trajectory(self.initial[m].copy(), t, self.uniform_states[m]) for m in range(self.M)]


def generate_dataset(
    spec: SystemSpec,
    M: int,
    T: float,
    gamma_count: int,
    seed: int,
    initial: NDArray | None = None,
    gl_nodes: bool = True,
    uniform: bool = True,
    tol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> SnapshotDataset:
    """Sample initial conditions and integrate the true system.

    One integration per trajectory serves the GL abscissae, the uniform grid
    and the endpoint, so all methods see the same flow.
    """
    if gamma_count < 1 or not T > 0:
        raise ConfigError("need gamma_count >= 1 and T > 0")
    if initial is None:
        initial = sample_initial_conditions(spec, M, seed)
    initial = np.atleast_2d(np.asarray(initial, dtype=float))
    if initial.shape[0] == 0:
        raise DegenerateDataError("no trajectories")
    rule = gl_rule(T, gamma_count) if gl_nodes else None
    grid = np.linspace(0.0, T, gamma_count + 1)
    parts = [grid if uniform else np.array([0.0, T])]
    if rule is not None:
        parts.append(rule.nodes)
    times, inverse = np.unique(np.concatenate(parts), return_inverse=True)
    states, left, _ = integrate_batch(spec, initial, times, tol, atol)
    n_grid = parts[0].size
    grid_states = states[:, inverse[:n_grid]]
    node_states = states[:, inverse[n_grid:]] if rule is not None else None
    return SnapshotDataset(
        initial=initial,
        T=float(T),
        gamma_count=int(gamma_count),
        end_states=grid_states[:, -1],
        node_states=node_states,
        uniform_states=grid_states if uniform else None,
        rule=rule,
        meta={"system": spec.name, "seed": seed, "left_domain": int(left.sum())},
    )


def dataset_from_trajectories(trajectories: Sequence[Trajectory]) -> SnapshotDataset:
    """Wrap externally sampled trajectories on a shared uniform grid starting at 0."""
    if not trajectories:
        raise DegenerateDataError("no trajectories")
    t = np.asarray(trajectories[0].times, dtype=float)
    if t.size < 2 or t[0] != 0.0:
        raise ConfigError("trajectories must start at t=0 with at least two samples")
    G = t.size - 1
    if not np.allclose(t, np.linspace(0.0, t[-1], G + 1), rtol=1e-9, atol=1e-12):
        raise ConfigError("trajectory times must be uniformly spaced")
    for tr in trajectories[1:]:
        if tr.times.shape != t.shape or not np.allclose(tr.times, t, rtol=1e-12, atol=1e-15):
            raise ConfigError("all trajectories must share one time grid")
    U = np.stack([np.asarray(tr.states, dtype=float) for tr in trajectories])
    return SnapshotDataset(U[:, 0].copy(), float(t[-1]), G, U[:, -1].copy(), uniform_states=U, meta={"source": "external"})
