"""The learned generator matrix and its JSON model format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .dictionary import Dictionary
from .errors import ConfigError, NumericalFailure

METHODS = ("RTM", "FDM", "KLM", "SINDY", "EXACT")


@dataclass(frozen=True, eq=False)
class LearnedGenerator:
    """``N x N`` matrix ``L`` acting on dictionary weights: ``L h_theta ~ Z(x)^T L theta``."""

    L: NDArray
    method: str
    dictionary: Dictionary | None = None
    config: dict = field(default_factory=dict)
    imag_norm: float = 0.0
    diagnostics: dict = field(default_factory=dict)
    intermediates: object | None = None

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise ValueError(f"generator must be square, got shape {L.shape}")
        if self.dictionary is not None and L.shape[0] != self.dictionary.size:
            raise ValueError(f"generator shape {L.shape} does not match dictionary size {self.dictionary.size}")
        if not np.all(np.isfinite(L)):
            raise NumericalFailure(f"{self.method}: generator has non-finite entries")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method tag {self.method!r}")
        object.__setattr__(self, "L", L)

    @property
    def size(self) -> int:
        return int(self.L.shape[0])

    def require_dictionary(self) -> Dictionary:
        if self.dictionary is None:
            raise ConfigError(f"{self.method} generator carries no dictionary")
        return self.dictionary

    def apply(self, X, theta) -> NDArray:
        """Evaluate ``Z(x)^T L theta`` at the rows of ``X``."""
        self.require_dictionary()
        return self.dictionary.evaluate(X) @ (self.L @ np.asarray(theta, dtype=float))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "dictionary": None if self.dictionary is None else self.dictionary.to_dict(),
            "L": self.L.tolist(),
            "config": self.config,
            "imag_norm": self.imag_norm,
            "diagnostics": self.diagnostics,
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_dict(cls, data: dict) -> "LearnedGenerator":
        return cls(
            np.asarray(data["L"], dtype=float),
            data["method"],
            None if data.get("dictionary") is None else Dictionary.from_dict(data["dictionary"]),
            data.get("config", {}),
            float(data.get("imag_norm", 0.0)),
            data.get("diagnostics", {}),
        )

    @classmethod
    def from_json(cls, text_or_path: str | Path) -> "LearnedGenerator":
        text = str(text_or_path)
        if not text.lstrip().startswith("{"):
            text = Path(text).read_text()
        return cls.from_dict(json.loads(text))


def projected_generator(dictionary: Dictionary, field, points) -> LearnedGenerator:
    """Least-squares projection of the true generator onto the dictionary span.

    Solves ``Z(x) L ~ grad Z(x) . f(x)`` over ``points``; with a closed
    dictionary (e.g. monomials under a linear field) this is exact.
    """
    from . import linalg

    X = np.atleast_2d(np.asarray(points, dtype=float))
    Lie = dictionary.lie_derivative(X, field(X))
    return LearnedGenerator(linalg.lstsq(dictionary.evaluate(X), Lie), "EXACT", dictionary)
