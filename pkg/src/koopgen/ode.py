"""Batched Dormand-Prince 5(4) integrator with dense output.

All trajectories in a batch share one step-size sequence, chosen from the
worst per-trajectory error norm. That keeps the inner loop as a handful of
``(M, d)`` array operations, which is what makes generating thousands of
trajectories cheap. Requested output times are served by the 4th-order
continuous extension of the scheme.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .errors import StiffnessError

# Dormand & Prince (1980) tableau, c6 chosen as in Shampine (1986) for the
# dense-output coefficients.
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@dataclass
class BatchSolution:
    times: NDArray
    states: NDArray  # (M, n_times, d); NaN after a trajectory escapes
    escaped: NDArray  # (M,) bool
    n_steps: int
    n_rejected: int


def _rms(x: NDArray) -> NDArray:
    return np.sqrt(np.mean(x * x, axis=-1))


def _initial_step(fun, y0, f0, rtol, atol, t_span):
    scale = atol + np.abs(y0) * rtol
    d0 = np.max(_rms(y0 / scale))
    d1 = np.max(_rms(f0 / scale))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t_span)
    f1 = fun(y0 + h0 * f0)
    d2 = np.max(_rms((f1 - f0) / scale)) / h0
    if not np.isfinite(d2):
        return h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, t_span)


def solve_batch(
    fun: Callable[[NDArray], NDArray],
    y0: NDArray,
    t_eval: NDArray,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    escape_radius: float | None = None,
    max_steps: int = 5_000_000,
) -> BatchSolution:
    """Integrate the autonomous system ``y' = fun(y)`` from ``t = 0``.

    Parameters
    ----------
    fun : callable
        Vectorized field, maps an ``(M, d)`` array to an ``(M, d)`` array.
    y0 : ndarray, shape (M, d)
        Initial states.
    t_eval : ndarray
        Ascending nonnegative output times.
    escape_radius : float, optional
        Trajectories whose Euclidean norm exceeds this value (or turns
        non-finite) are dropped from the batch and flagged in ``escaped``.
        Without it, a diverging trajectory ends in :class:`StiffnessError`.
    """
    y0 = np.atleast_2d(np.asarray(y0, dtype=float))
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1:
        raise ValueError("t_eval must be one-dimensional")
    if t_eval.size and (t_eval[0] < 0 or np.any(np.diff(t_eval) < 0)):
        raise ValueError("t_eval must be ascending and nonnegative")
    M, d = y0.shape
    out = np.full((M, t_eval.size, d), np.nan)
    escaped = np.zeros(M, dtype=bool)

    n_done = int(np.searchsorted(t_eval, 0.0, side="right"))
    out[:, :n_done] = y0[:, None, :]
    t_end = float(t_eval[-1]) if t_eval.size else 0.0
    if n_done == t_eval.size or M == 0:
        return BatchSolution(t_eval, out, escaped, 0, 0)

    idx = np.arange(M)
    y = y0.copy()
    f = fun(y)
    t = 0.0
    h = _initial_step(fun, y, f, rtol, atol, t_end)
    n_steps = n_rejected = 0
    K = np.empty((7, M, d))

    while n_done < t_eval.size:
        if n_steps + n_rejected > max_steps:
            raise StiffnessError(f"exceeded {max_steps} steps at t={t:.6g}")
        h = min(h, t_end - t)
        if h < 10 * np.finfo(float).eps * max(abs(t), 1.0):
            raise StiffnessError(f"step size underflow at t={t:.6g}")

        K[0, : idx.size] = f
        for s in range(1, 6):
            dy = np.tensordot(_A[s], K[:s, : idx.size], axes=(0, 0))
            K[s, : idx.size] = fun(y + h * dy)
        y_new = y + h * np.tensordot(_B, K[:6, : idx.size], axes=(0, 0))
        f_new = fun(y_new)
        K[6, : idx.size] = f_new
        err = h * np.tensordot(_E, K[:, : idx.size], axes=(0, 0))
        scale = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
        with np.errstate(invalid="ignore", over="ignore"):
            err_norm = _rms(err / scale)
        err_max = np.max(err_norm) if err_norm.size else 0.0
        if not np.isfinite(err_max):
            err_max = np.inf

        if err_max > 1.0:
            n_rejected += 1
            factor = _MIN_FACTOR if not np.isfinite(err_max) else max(
                _MIN_FACTOR, _SAFETY * err_max ** -0.2
            )
            h *= factor
            continue

        t_new = t + h
        hi = int(np.searchsorted(t_eval, t_new, side="right"))
        if hi > n_done:
            req = t_eval[n_done:hi]
            theta = (req - t) / h
            powers = np.cumprod(np.repeat(theta[:, None], 4, axis=1), axis=1)
            Q = np.tensordot(K[:, : idx.size], _P, axes=(0, 0))  # (Ma, d, 4)
            dense = y[:, None, :] + h * np.einsum("mdp,kp->mkd", Q, powers)
            exact = req == t_new
            dense[:, exact] = y_new[:, None, :]
            out[idx, n_done:hi] = dense
            n_done = hi

        t, y, f = t_new, y_new, f_new
        n_steps += 1
        factor = _MAX_FACTOR if err_max == 0 else min(_MAX_FACTOR, _SAFETY * err_max ** -0.2)
        h *= factor

        if escape_radius is not None:
            with np.errstate(invalid="ignore", over="ignore"):
                norms = np.linalg.norm(y, axis=1)
            bad = ~np.isfinite(norms) | (norms > escape_radius)
            if np.any(bad):
                escaped[idx[bad]] = True
                out[idx[bad], n_done:] = np.nan
                keep = ~bad
                idx, y, f = idx[keep], y[keep], f[keep]
                if idx.size == 0:
                    break

    return BatchSolution(t_eval, out, escaped, n_steps, n_rejected)
