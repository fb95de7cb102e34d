"""Resolvent-type learning of the generator matrix.

Pipeline, for a dictionary ``Z`` and trajectories started at ``x^(m)``:

1. ``X[m] = Z(x^(m))`` and ``Phi_T[m] = Z(phi(T, x^(m)))``.
2. ``I_quad[m] ~ int_0^T e^{-mu t} Z(phi(t, x^(m))) dt`` by quadrature.
3. ``Xi = pinv(X - e^{-mu T} Phi_T) I_quad``; ``X Xi`` samples the projected
   resolvent at ``mu`` applied to every dictionary function.
4. The resolvent identity moves from ``mu`` to a large ``lambda``:
   ``Y_A = (lambda - mu) X Xi + X`` and ``Y_B = lambda mu X Xi - lambda X``.
5. ``A = lstsq(X, Y_A)``, ``B = lstsq(X, Y_B)`` and ``L = pinv(A) B`` (or the
   Tikhonov pseudoinverse of ``A`` when ``delta > 0``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import NDArray

from . import linalg
from .dataset import SnapshotDataset
from .dictionary import Dictionary
from .errors import ConfigError, DegenerateDataError
from .generator import LearnedGenerator
from .quadrature import _composite, gl_rule, integrate_uniform

QUADRATURE_MODES = ("gl_nodes", "uniform_interp", "uniform_composite")
COND_WARNING = 1e10


@dataclass(frozen=True)
class RtmConfig:
    mu: float = 2.5
    lam: float = 1e8
    T: float = 1.0
    gamma_count: int = 50
    delta: float = 0.0
    quadrature_mode: str = "gl_nodes"
    rcond: float = linalg.DEFAULT_RCOND

    def __post_init__(self):
        if not self.mu > 0:
            raise ConfigError("mu must be positive")
        if not self.lam > self.mu:
            raise ConfigError("lambda must exceed mu")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if self.gamma_count < 1:
            raise ConfigError("gamma_count must be at least 1")
        if self.delta < 0:
            raise ConfigError("delta must be nonnegative")
        if self.quadrature_mode not in QUADRATURE_MODES:
            raise ConfigError(f"quadrature_mode must be one of {QUADRATURE_MODES}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RtmIntermediates:
    X: NDArray
    I_quad: NDArray
    Phi_T: NDArray
    Xi: NDArray | None = None
    Y_A: NDArray | None = None
    Y_B: NDArray | None = None
    A: NDArray | None = None
    B: NDArray | None = None


def assemble(data: SnapshotDataset, dictionary: Dictionary, cfg: RtmConfig) -> RtmIntermediates:
    """Feature, quadrature and endpoint matrices (all ``M x N``)."""
    if data.M == 0:
        raise DegenerateDataError("dataset has no trajectories")
    if not math.isclose(data.T, cfg.T, rel_tol=1e-12):
        raise ConfigError(f"dataset horizon {data.T} differs from configured T={cfg.T}")
    if data.gamma_count != cfg.gamma_count:
        raise ConfigError(f"dataset has {data.gamma_count} snapshots, config expects {cfg.gamma_count}")
    X = dictionary.evaluate(data.initial)
    Phi_T = dictionary.evaluate(data.end_states)
    G, mu = cfg.gamma_count, cfg.mu

    if cfg.quadrature_mode == "gl_nodes":
        if data.node_states is None:
            raise ConfigError("gl_nodes quadrature needs snapshots at the Gauss-Legendre abscissae")
        rule = data.rule if data.rule is not None else gl_rule(cfg.T, G)
        I_quad = np.zeros_like(X)
        for k in range(G):
            I_quad += (rule.weights[k] * math.exp(-mu * rule.nodes[k])) * dictionary.evaluate(data.node_states[:, k])
    else:
        if data.uniform_states is None:
            raise ConfigError(f"{cfg.quadrature_mode} quadrature needs uniform-grid snapshots")
        times = data.uniform_times
        if cfg.quadrature_mode == "uniform_composite":
            # the composite rule is linear, so fold it into per-sample weights
            w = _composite(np.eye(G + 1), cfg.T / G)
            I_quad = np.zeros_like(X)
            for k in range(G + 1):
                I_quad += (w[k] * math.exp(-mu * times[k])) * dictionary.evaluate(data.uniform_states[:, k])
        else:
            samples = np.stack(
                [math.exp(-mu * times[k]) * dictionary.evaluate(data.uniform_states[:, k]) for k in range(G + 1)]
            )
            I_quad = integrate_uniform(cfg.T, samples, mode="interp_gl")
    return RtmIntermediates(X=X, I_quad=np.asarray(I_quad), Phi_T=Phi_T)


def solve_resolvent_weights(inter: RtmIntermediates, cfg: RtmConfig) -> tuple[NDArray, float]:
    """``Xi = pinv(X - e^{-mu T} Phi_T) I_quad``; also returns the condition number of the system."""
    D = inter.X - math.exp(-cfg.mu * cfg.T) * inter.Phi_T
    if D.shape[0] == 0:
        raise DegenerateDataError("no trajectories")
    s = linalg.singular_values(D)
    if s.size == 0 or s[0] == 0.0 or np.all(s <= cfg.rcond * s[0]):
        raise DegenerateDataError("resolvent system has collapsed rank")
    cond = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
    Xi = linalg.lstsq(D, inter.I_quad, cfg.rcond)
    inter.Xi = Xi
    return Xi, cond


def learn(
    data: SnapshotDataset,
    dictionary: Dictionary,
    cfg: RtmConfig,
    keep_intermediates: bool = True,
) -> LearnedGenerator:
    """Full resolvent-type estimate of the generator matrix."""
    inter = assemble(data, dictionary, cfg)
    Xi, cond_res = solve_resolvent_weights(inter, cfg)
    lam, mu = cfg.lam, cfg.mu
    XXi = inter.X @ Xi
    inter.Y_A = (lam - mu) * XXi + inter.X
    inter.Y_B = lam * mu * XXi - lam * inter.X
    P = linalg.pinv(inter.X, cfg.rcond)
    inter.A = P @ inter.Y_A
    inter.B = P @ inter.Y_B
    cond_A = linalg.condition_number(inter.A)
    if cond_A > COND_WARNING:
        warnings.warn(f"RTM: cond(A) = {cond_A:.3e} exceeds {COND_WARNING:.0e}", RuntimeWarning, stacklevel=2)
    Ainv = linalg.tikhonov_pinv(inter.A, cfg.delta, cfg.rcond)
    L = Ainv @ inter.B
    diagnostics = {
        "cond_A": cond_A,
        "cond_resolvent": cond_res,
        "cond_X": linalg.condition_number(inter.X),
        "M": data.M,
        "N": dictionary.size,
    }
    return LearnedGenerator(
        L, "RTM", dictionary, config=cfg.to_dict(), diagnostics=diagnostics,
        intermediates=inter if keep_intermediates else None,
    )


def truncation_bound(lam: float, T: float, omega: float, C: float) -> float:
    """Finite-horizon truncation estimate ``C lam^2 e^{-lam T} / (lam - omega)``.

    ``omega`` and ``C`` are the growth bound and constant of the semigroup,
    which cannot be inferred from data and must be supplied.
    """
    if lam <= omega:
        raise ConfigError("lambda must exceed omega")
    if T < 0 or C < 0:
        raise ConfigError("T and C must be nonnegative")
    return C * math.exp(2 * math.log(lam) - lam * T - math.log(lam - omega)) if C > 0 else 0.0
