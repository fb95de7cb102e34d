"""Vector-field recovery, trajectory prediction and error metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import linalg
from .dataset import SnapshotDataset
from .dictionary import Dictionary
from .errors import ConfigError, DegenerateDataError
from .generator import LearnedGenerator
from .ode import solve_batch
from .systems import DEFAULT_ATOL, DEFAULT_RTOL, SystemSpec, Trajectory

DEFAULT_ESCAPE_RADIUS = 1e6


@dataclass(frozen=True, eq=False)
class IdentifiedSystem:
    """Identified field ``f_j(x) = Z(x)^T theta[j]``."""

    theta: NDArray  # (d, N)
    dictionary: Dictionary
    method: str
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return int(self.theta.shape[0])

    def field(self, X: ArrayLike) -> NDArray:
        return self.dictionary.evaluate(X) @ self.theta.T

    def __call__(self, X: ArrayLike) -> NDArray:
        X = np.asarray(X, dtype=float)
        out = self.field(np.atleast_2d(X))
        return out[0] if X.ndim == 1 else out

    def to_system(self, domain: Sequence[Sequence[float]]) -> SystemSpec:
        dom = tuple(tuple(map(float, ab)) for ab in domain)
        return SystemSpec(f"identified_{self.method.lower()}", self.dim, self.field, dom)

    def to_dict(self) -> dict:
        return {"method": self.method, "theta": self.theta.tolist(), "dictionary": self.dictionary.to_dict()}


def recover_field(gen: LearnedGenerator) -> IdentifiedSystem:
    """Read the field off the generator: ``theta[j] = L[:, index of x_j]``."""
    dictionary = gen.require_dictionary()
    cols = [dictionary.coordinate_index(j) for j in range(dictionary.dim)]
    return IdentifiedSystem(gen.L[:, cols].T.copy(), dictionary, gen.method)


# --------------------------------------------------------------------------- prediction


def predict_flow_batch(
    sys: IdentifiedSystem,
    X0: ArrayLike,
    T_s: float,
    snapshot_count: int,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
    tol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> tuple[NDArray, NDArray]:
    """Integrate the identified field from every row of ``X0``.

    Returns states of shape ``(M, snapshot_count + 1, d)`` at ``k T_s / snapshot_count``
    and a blow-up flag per trajectory (NaN states after the blow-up).
    """
    times = np.linspace(0.0, T_s, snapshot_count + 1)
    sol = solve_batch(sys.field, np.atleast_2d(np.asarray(X0, dtype=float)), times, tol, atol, escape_radius)
    return sol.states, sol.escaped


def predict_flow(sys: IdentifiedSystem, x0: ArrayLike, T_s: float, snapshot_count: int, **kw) -> Trajectory:
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    states, escaped = predict_flow_batch(sys, x0[None, :], T_s, snapshot_count, **kw)
    times = np.linspace(0.0, T_s, snapshot_count + 1)
    return Trajectory(x0.copy(), times, states[0], {"blowup": bool(escaped[0])})


# --------------------------------------------------------------------------- metrics


def _stack(trajs) -> NDArray:
    if isinstance(trajs, np.ndarray):
        return np.asarray(trajs, dtype=float)
    return np.stack([np.asarray(t.states if isinstance(t, Trajectory) else t, dtype=float) for t in trajs])


def per_trajectory_rmse(truth, predicted) -> NDArray:
    """RMS Euclidean deviation of each trajectory over samples ``k = 1..G_s``."""
    a, b = _stack(truth), _stack(predicted)
    if a.ndim == 2:
        a, b = a[..., None], b[..., None] if b.ndim == 2 else b
    if a.shape != b.shape:
        raise ValueError(f"trajectory shapes differ: {a.shape} vs {b.shape}")
    if a.shape[1] < 2:
        raise ValueError("need at least one sample after t=0")
    sq = np.sum((a[:, 1:] - b[:, 1:]) ** 2, axis=2)
    return np.sqrt(np.mean(sq, axis=1))


def rmse_flow(truth, predicted) -> float:
    """Mean over trajectories of the per-trajectory RMS deviation (initial sample excluded)."""
    return float(np.mean(per_trajectory_rmse(truth, predicted)))


def rmse_weights(theta_hat: ArrayLike, theta_true: ArrayLike) -> float:
    """``sqrt(mean((theta_hat - theta_true)^2))`` over all ``d N`` weights."""
    a, b = np.asarray(theta_hat, dtype=float), np.asarray(theta_true, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"weight shapes differ: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


@dataclass
class FlowMetrics:
    rmse_flow: float
    per_trajectory: NDArray
    blowups: int
    T_s: float
    snapshot_count: int
    rmse_weights: float | None = None


def flow_metrics(
    sys: IdentifiedSystem,
    truth_states: NDArray,
    T_s: float,
    snapshot_count: int,
    theta_true: NDArray | None = None,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
) -> FlowMetrics:
    """Predict from the initial states of ``truth_states`` and score.

    Trajectories of the identified system that blow up are counted in
    ``blowups`` and left out of the flow RMSE; if all blow up it is ``inf``.
    """
    pred, escaped = predict_flow_batch(sys, truth_states[:, 0], T_s, snapshot_count, escape_radius)
    keep = ~escaped & np.all(np.isfinite(pred), axis=(1, 2))
    per = np.full(truth_states.shape[0], np.inf)
    if np.any(keep):
        per[keep] = per_trajectory_rmse(truth_states[keep], pred[keep])
    value = float(np.mean(per[keep])) if np.any(keep) else float("inf")
    w = None if theta_true is None else rmse_weights(sys.theta, theta_true)
    return FlowMetrics(value, per, int((~keep).sum()), T_s, snapshot_count, w)


def true_weights(spec: SystemSpec, dictionary: Dictionary) -> NDArray:
    """Exact ``(d, N)`` weights of a polynomial system on a monomial dictionary."""
    if spec.polynomial_terms is None:
        raise ConfigError(f"{spec.name} has no polynomial expansion")
    if dictionary.kind != "monomial":
        raise ConfigError("true weights exist only for monomial dictionaries")
    lookup = {tuple(int(v) for v in alpha): i for i, alpha in enumerate(dictionary.exponents)}
    theta = np.zeros((spec.dim, dictionary.size))
    for j, terms in enumerate(spec.polynomial_terms):
        for alpha, c in terms.items():
            if alpha not in lookup:
                raise ConfigError(f"{spec.name}: monomial {alpha} of f_{j + 1} is not in the dictionary")
            theta[j, lookup[alpha]] = c
    return theta


# --------------------------------------------------------------------------- sparsification


def stlsq(
    features: NDArray,
    targets: NDArray,
    threshold: float,
    max_iters: int = 10,
    initial: NDArray | None = None,
    support: NDArray | None = None,
) -> NDArray:
    """Sequential thresholded least squares, one column of ``targets`` at a time.

    Returns coefficients of shape ``(n_targets, n_features)``. ``initial``
    replaces the first unrestricted fit; ``support`` restricts the fit to a
    boolean mask of the same shape.
    """
    F = np.asarray(features, dtype=float)
    Y = np.asarray(targets, dtype=float)
    Y = Y[:, None] if Y.ndim == 1 else Y
    n_out, n_feat = Y.shape[1], F.shape[1]
    coef = np.zeros((n_out, n_feat))
    for j in range(n_out):
        active = np.ones(n_feat, bool) if support is None else np.asarray(support[j], bool).copy()
        if initial is not None:
            xi = np.where(active, initial[j], 0.0)
        else:
            xi = np.zeros(n_feat)
            if np.any(active):
                xi[active] = linalg.lstsq(F[:, active], Y[:, j])
        for it in range(max_iters):
            new_active = active & (np.abs(xi) >= threshold)
            # always refit once so a supplied starting point gets fitted to the data
            if it > 0 and np.array_equal(new_active, active):
                break
            active = new_active
            xi = np.zeros(n_feat)
            if np.any(active):
                xi[active] = linalg.lstsq(F[:, active], Y[:, j])
        coef[j] = xi
    if not np.any(coef):
        raise DegenerateDataError("thresholding removed every term")
    return coef


def srtm_sparsify(
    gen: LearnedGenerator,
    validation: SnapshotDataset,
    threshold: float,
    max_iters: int = 10,
) -> IdentifiedSystem:
    """Sparsify an RTM field on held-out trajectories.

    Starting from :func:`recover_field`, terms below ``threshold`` are dropped
    and the survivors refit so that the generator identity ``Y_A theta = Y_B e_j``
    holds on the validation trajectories.
    """
    from .rtm import RtmConfig, assemble, solve_resolvent_weights

    base = recover_field(gen)
    if threshold <= 0:
        return base
    if validation.M < base.dictionary.size:
        # too few held-out rows to pin down a refit; threshold the RTM weights only
        theta = np.where(np.abs(base.theta) < threshold, 0.0, base.theta)
        return IdentifiedSystem(theta, base.dictionary, "RTM", {"sparsified": True, "threshold": threshold,
                                                                 "refit": False})
    cfg = RtmConfig(**{k: v for k, v in gen.config.items() if k in RtmConfig.__dataclass_fields__})
    inter = assemble(validation, base.dictionary, cfg)
    Xi, _ = solve_resolvent_weights(inter, cfg)
    XXi = inter.X @ Xi
    Y_A = (cfg.lam - cfg.mu) * XXi + inter.X
    Y_B = cfg.lam * cfg.mu * XXi - cfg.lam * inter.X
    cols = [base.dictionary.coordinate_index(j) for j in range(base.dim)]
    theta = stlsq(Y_A, Y_B[:, cols], threshold, max_iters, initial=base.theta)
    return IdentifiedSystem(theta, base.dictionary, "RTM", {"sparsified": True, "threshold": threshold})
