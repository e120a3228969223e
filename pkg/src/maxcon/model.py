"""Problem data for consensus maximization: data points, instances, errors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

LINEAR = "linear"
FRACTIONAL = "fractional"


class MaxconError(Exception):
    pass


class DomainViolation(MaxconError):
    """A fractional residual was evaluated where its denominator is not positive."""


class DomainEmpty(MaxconError):
    """No model keeps every fractional denominator of a subset positive."""


class ConstraintsInfeasible(MaxconError):
    """The forced points cannot all be inliers of one model."""


@dataclass(frozen=True)
class LinearDatum:
    a: np.ndarray
    b: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        if not np.all(np.isfinite(a)) or not np.isfinite(self.b):
            raise ValueError("linear datum entries must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))


@dataclass(frozen=True)
class FractionalDatum:
    """Residual ||A^T theta - b||_inf / (c^T theta - d0), A of shape (d, m)."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d0: float
    norm: float = np.inf

    def __post_init__(self):
        if self.norm != np.inf:
            raise ValueError("only the infinity norm is supported")
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if A.shape != (c.size, b.size):
            raise ValueError(f"A has shape {A.shape}, expected {(c.size, b.size)}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d0", float(self.d0))


class ProblemInstance:
    """An ordered dataset with a common residual family, dimension and threshold.

    Points are addressed by their 0-based position in ``data``. Internally the
    data are kept as stacked arrays so the solvers can slice subsets cheaply.
    """

    def __init__(self, data: Sequence[LinearDatum | FractionalDatum], epsilon: float, dim: int | None = None):
        data = list(data)
        if not data:
            raise ValueError("an instance needs at least one datum")
        if epsilon < 0 or not np.isfinite(epsilon):
            raise ValueError("epsilon must be finite and nonnegative")
        kinds = {type(s) for s in data}
        if len(kinds) != 1:
            raise ValueError("all data must be of the same kind")
        self.epsilon = float(epsilon)
        if isinstance(data[0], LinearDatum):
            self.kind = LINEAR
            d = data[0].a.size if dim is None else dim
            if any(s.a.size != d for s in data):
                raise ValueError(f"every regressor must have length {d}")
            self.A = np.ascontiguousarray(np.stack([s.a for s in data]))
            self.b = np.array([s.b for s in data], dtype=float)
        else:
            self.kind = FRACTIONAL
            d = data[0].c.size if dim is None else dim
            m = data[0].b.size
            if any(s.A.shape != (d, m) for s in data):
                raise ValueError(f"every A must have shape {(d, m)}")
            self.A = np.ascontiguousarray(np.stack([s.A for s in data]))
            self.b = np.stack([s.b for s in data])
            self.c = np.stack([s.c for s in data])
            self.d0 = np.array([s.d0 for s in data], dtype=float)
        if d < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(d)
        self.data = tuple(data)

    @classmethod
    def linear(cls, A, b, epsilon: float) -> "ProblemInstance":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.size:
            raise ValueError("A and b disagree on the number of points")
        return cls([LinearDatum(a, bi) for a, bi in zip(A, b)], epsilon)

    def __len__(self) -> int:
        return len(self.data)

    @property
    def n(self) -> int:
        return len(self.data)

    def with_epsilon(self, epsilon: float) -> "ProblemInstance":
        return ProblemInstance(self.data, epsilon, self.dim)

    def subset(self, indices: Iterable[int]) -> "ProblemInstance":
        return ProblemInstance([self.data[i] for i in canonical(indices)], self.epsilon, self.dim)

    def residuals(self, theta, indices=None) -> np.ndarray:
        """Residuals of ``theta`` on the given points (all points by default).

        Fractional points outside the positive-denominator domain get ``inf``.
        """
        theta = np.asarray(theta, dtype=float)
        idx = slice(None) if indices is None else np.asarray(indices, dtype=np.intp)
        if self.kind == LINEAR:
            return np.abs(self.A[idx] @ theta - self.b[idx])
        num = np.max(np.abs(np.einsum("ndm,d->nm", self.A[idx], theta) - self.b[idx]), axis=1)
        den = self.c[idx] @ theta - self.d0[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = num / den
        return np.where(den > 0, r, np.inf)

    def consensus(self, theta) -> int:
        return int(np.count_nonzero(self.residuals(theta) <= self.epsilon))

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        if (self.kind, self.dim, self.epsilon, self.n) != (other.kind, other.dim, other.epsilon, other.n):
            return False
        fields = ["A", "b"] if self.kind == LINEAR else ["A", "b", "c", "d0"]
        return all(np.array_equal(getattr(self, f), getattr(other, f)) for f in fields)

    def __repr__(self):
        return f"ProblemInstance(kind={self.kind!r}, n={self.n}, dim={self.dim}, epsilon={self.epsilon})"


def canonical(indices: Iterable[int]) -> np.ndarray:
    """Sorted, duplicate-free index array; the canonical form of an index set."""
    return np.unique(np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices, dtype=np.intp))
