"""Observable dictionaries: monomial families and random tanh features.

Monomials come in two layouts. The per-axis layout enumerates the full
``P x Q x ...`` exponent grid in mixed-radix order with the first axis varying
fastest, so for caps ``(P, Q, J)`` index ``i`` holds ``x1^p x2^q x3^j`` with
``i = p + P*q + P*Q*j``. The total-degree layout lists every multi-index with
``|alpha| <= cap`` in graded lexicographic order.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConfigError, MissingCoordinateError


@dataclass(frozen=True, eq=False)
class Dictionary:
    kind: str  # "monomial" | "tanh_random"
    dim: int
    exponents: NDArray | None = None  # (N, d) ints, monomial kind
    W: NDArray | None = None  # (sigma, d), tanh kind
    b: NDArray | None = None  # (sigma,), tanh kind
    include_coordinates: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        if self.kind == "monomial":
            return int(self.exponents.shape[0])
        return int(self.W.shape[0]) + (self.dim if self.include_coordinates else 0)

    def __len__(self) -> int:
        return self.size

    @property
    def coordinate_slots(self) -> dict[int, int]:
        if self.kind == "monomial":
            slots = {}
            for i, alpha in enumerate(self.exponents):
                if alpha.sum() == 1:
                    slots[int(np.argmax(alpha))] = i
            return slots
        if not self.include_coordinates:
            return {}
        sigma = self.W.shape[0]
        return {j: sigma + j for j in range(self.dim)}

    def coordinate_index(self, axis: int) -> int:
        """Index ``i`` with ``z_i(x) = x[axis]`` (axes are 0-based)."""
        slots = self.coordinate_slots
        if axis not in slots:
            raise MissingCoordinateError(f"dictionary has no coordinate observable for axis {axis}")
        return slots[axis]

    def has_coordinates(self) -> bool:
        return len(self.coordinate_slots) == self.dim

    # ------------------------------------------------------------------ evaluation

    def _check(self, X: ArrayLike) -> NDArray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, self.dim) if self.dim > 1 or X.size != 1 else X.reshape(1, 1)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ValueError(f"points must have shape (M, {self.dim}), got {X.shape}")
        return X

    def evaluate(self, X: ArrayLike) -> NDArray:
        """Feature matrix; row ``m`` is ``Z_N(x^(m))``."""
        X = self._check(X)
        if self.kind == "monomial":
            return _monomials(X, self.exponents)
        feats = np.tanh(X @ self.W.T + self.b)
        return np.hstack([feats, X]) if self.include_coordinates else feats

    __call__ = evaluate

    def gradient(self, X: ArrayLike) -> NDArray:
        """Jacobian of every observable, shape ``(M, N, d)``."""
        X = self._check(X)
        M = X.shape[0]
        if self.kind == "monomial":
            G = np.zeros((M, self.size, self.dim))
            for k in range(self.dim):
                lowered = self.exponents.copy()
                coef = lowered[:, k].astype(float)
                lowered[:, k] = np.maximum(lowered[:, k] - 1, 0)
                G[:, :, k] = coef * _monomials(X, lowered)
            return G
        t = np.tanh(X @ self.W.T + self.b)
        G = (1.0 - t * t)[:, :, None] * self.W[None, :, :]
        if self.include_coordinates:
            G = np.concatenate([G, np.broadcast_to(np.eye(self.dim), (M, self.dim, self.dim))], axis=1)
        return G

    def lie_derivative(self, X: ArrayLike, velocities: ArrayLike) -> NDArray:
        """``grad z_i(x) . f(x)`` for every observable, shape ``(M, N)``."""
        return np.einsum("mnd,md->mn", self.gradient(X), np.asarray(velocities, dtype=float))

    # ------------------------------------------------------------------ transforms / io

    def permuted(self, perm: Sequence[int]) -> "Dictionary":
        """Monomial dictionary with entries reordered as ``new[i] = old[perm[i]]``."""
        if self.kind != "monomial":
            raise ConfigError("only monomial dictionaries can be permuted")
        return Dictionary("monomial", self.dim, self.exponents[np.asarray(perm)], meta={"layout": "custom"})

    def to_dict(self) -> dict:
        base = {"kind": self.kind, "dim": self.dim, "meta": self.meta}
        if self.kind == "monomial":
            base["exponents"] = self.exponents.tolist()
        else:
            base.update(W=self.W.tolist(), b=self.b.tolist(), include_coordinates=self.include_coordinates)
        return base

    @classmethod
    def from_dict(cls, data: dict) -> "Dictionary":
        kind = data["kind"]
        if kind == "monomial":
            return cls("monomial", int(data["dim"]), np.asarray(data["exponents"], dtype=int), meta=data.get("meta", {}))
        if kind == "tanh_random":
            return cls(
                "tanh_random",
                int(data["dim"]),
                W=np.asarray(data["W"], dtype=float),
                b=np.asarray(data["b"], dtype=float),
                include_coordinates=bool(data.get("include_coordinates", True)),
                meta=data.get("meta", {}),
            )
        raise ConfigError(f"unknown dictionary kind {kind!r}")

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Dictionary":
        return cls.from_dict(json.loads(text))


def _monomials(X: NDArray, exponents: NDArray) -> NDArray:
    out = np.ones((X.shape[0], exponents.shape[0]))
    for k in range(X.shape[1]):
        col = exponents[:, k]
        top = int(col.max(initial=0))
        if top == 0:
            continue
        powers = X[:, k, None] ** np.arange(top + 1)
        out *= powers[:, col]
    return out


def monomial_dictionary(
    dim: int,
    caps: Sequence[int] | int | None = None,
    total_degree: int | None = None,
) -> Dictionary:
    """Monomial dictionary, either per-axis caps or a total-degree cap.

    Parameters
    ----------
    caps : int or sequence of int
        Number of exponents per axis (``P`` means exponents ``0..P-1``). A
        scalar applies to every axis.
    total_degree : int
        Include all multi-indices with ``|alpha| <= total_degree``.
    """
    if (caps is None) == (total_degree is None):
        raise ConfigError("give exactly one of caps or total_degree")
    if dim < 1:
        raise ConfigError("dim must be positive")
    if caps is not None:
        caps = [int(caps)] * dim if np.isscalar(caps) else [int(c) for c in caps]
        if len(caps) != dim or min(caps) < 1:
            raise ConfigError("caps must be >= 1 for every axis")
        n = int(np.prod(caps))
        radix = np.cumprod([1] + caps[:-1])
        i = np.arange(n)[:, None]
        exps = (i // radix[None, :]) % np.asarray(caps)[None, :]
        return Dictionary("monomial", dim, exps.astype(int), meta={"layout": "per_axis", "caps": caps})
    if total_degree < 1:
        raise ConfigError("total_degree must be >= 1")
    exps = []
    for deg in range(total_degree + 1):
        level = [a for a in itertools.product(range(deg + 1), repeat=dim) if sum(a) == deg]
        exps.extend(sorted(level, reverse=True))
    return Dictionary(
        "monomial", dim, np.asarray(exps, dtype=int).reshape(-1, dim),
        meta={"layout": "total_degree", "total_degree": int(total_degree)},
    )


def tanh_random_dictionary(
    dim: int,
    sigma: int,
    seed: int,
    scale_W: float = 1.0,
    scale_b: float = 1.0,
    include_coordinates: bool = True,
) -> Dictionary:
    """``sigma`` random features ``tanh(x W^T + b)`` followed by the raw coordinates.

    ``W`` has i.i.d. ``N(0, scale_W^2)`` entries and ``b`` i.i.d.
    ``U(-scale_b, scale_b)`` entries, both drawn from one seeded PCG64 stream.
    """
    if sigma < 1:
        raise ConfigError("sigma must be at least 1")
    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, scale_W, size=(sigma, dim))
    b = rng.uniform(-scale_b, scale_b, size=sigma)
    return Dictionary(
        "tanh_random", dim, W=W, b=b, include_coordinates=include_coordinates,
        meta={"seed": int(seed), "scale_W": float(scale_W), "scale_b": float(scale_b), "sigma": int(sigma)},
    )
