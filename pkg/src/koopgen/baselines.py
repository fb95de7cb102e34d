"""Comparison methods built on a one-step Koopman matrix, plus STLSQ SINDy.

All of them read the same :class:`~koopgen.dataset.SnapshotDataset` as the
resolvent method, using the pair ``(x, phi(tau, x))`` with ``tau = T / G``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import linalg
from .dataset import SnapshotDataset
from .dictionary import Dictionary
from .errors import ConfigError, DegenerateDataError
from .generator import LearnedGenerator
from .sysid import IdentifiedSystem, stlsq

SINDY_THRESHOLD = 0.05
SINDY_MAX_ITERS = 10


@dataclass(frozen=True, eq=False)
class KoopmanMatrix:
    K: NDArray
    tau: float
    dictionary: Dictionary | None = None


def edmd_learn(
    X: NDArray,
    Phi_tau: NDArray,
    tau: float,
    dictionary: Dictionary | None = None,
    rcond: float = linalg.DEFAULT_RCOND,
) -> KoopmanMatrix:
    """Least-squares Koopman matrix ``K = argmin ||Phi_tau - X K||_F``."""
    if not tau > 0:
        raise ConfigError("tau must be positive")
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise DegenerateDataError("no samples")
    s = linalg.singular_values(X)
    if s[0] == 0.0:
        raise DegenerateDataError("feature matrix is zero")
    return KoopmanMatrix(linalg.lstsq(X, Phi_tau, rcond), float(tau), dictionary)


def edmd_from_dataset(data: SnapshotDataset, dictionary: Dictionary) -> KoopmanMatrix:
    return edmd_learn(
        dictionary.evaluate(data.initial), dictionary.evaluate(data.first_step_states()), data.tau, dictionary
    )


def fdm_learn(km: KoopmanMatrix) -> LearnedGenerator:
    """Forward difference ``(K - I) / tau``."""
    L = (km.K - np.eye(km.K.shape[0])) / km.tau
    return LearnedGenerator(L, "FDM", km.dictionary, config={"tau": km.tau})


def klm_learn(km: KoopmanMatrix) -> LearnedGenerator:
    """Principal logarithm ``log(K) / tau``; the real part is kept.

    The largest imaginary entry (divided by ``tau``) is reported as
    ``imag_norm``. Branch-cut and defective-basis failures propagate as
    :class:`~koopgen.errors.NumericalFailure` subclasses.
    """
    re, im = linalg.matrix_log(km.K)
    imag_norm = float(np.max(np.abs(im))) / km.tau if im.size else 0.0
    return LearnedGenerator(re / km.tau, "KLM", km.dictionary, config={"tau": km.tau}, imag_norm=imag_norm)


def central_differences(states: NDArray, tau: float) -> NDArray:
    """Second-order time derivatives along axis 1 of ``(M, n, d)`` uniform snapshots.

    Interior points use central differences, the two ends second-order
    one-sided stencils.
    """
    states = np.asarray(states, dtype=float)
    if states.shape[1] < 3:
        raise ConfigError("need at least three snapshots per trajectory")
    return np.gradient(states, tau, axis=1, edge_order=2)


def sindy_stlsq(
    states: NDArray,
    derivatives: NDArray,
    dictionary: Dictionary,
    threshold: float = SINDY_THRESHOLD,
    max_iters: int = SINDY_MAX_ITERS,
    support: NDArray | None = None,
) -> IdentifiedSystem:
    """Sparse regression ``derivatives ~ Z(states) theta^T`` by STLSQ.

    Parameters
    ----------
    states, derivatives : (M', d)
        Sampled states and their time derivatives.
    support : (d, N) bool, optional
        Restrict the regression to these terms.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    derivatives = np.asarray(derivatives, dtype=float).reshape(states.shape)
    theta = stlsq(dictionary.evaluate(states), derivatives, threshold, max_iters, support=support)
    return IdentifiedSystem(theta, dictionary, "SINDY", {"threshold": threshold})


def sindy_from_dataset(
    data: SnapshotDataset, dictionary: Dictionary, threshold: float = SINDY_THRESHOLD, max_iters: int = SINDY_MAX_ITERS
) -> IdentifiedSystem:
    if data.uniform_states is None:
        raise ConfigError("SINDy needs uniform-grid snapshots")
    dX = central_differences(data.uniform_states, data.tau)
    d = data.dim
    return sindy_stlsq(data.uniform_states.reshape(-1, d), dX.reshape(-1, d), dictionary, threshold, max_iters)
