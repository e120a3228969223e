"""Synthetic robust-regression instances and the JSON instance file format.

Instance files are JSON documents::

    {
      "version": 1,
      "kind": "linear",            # or "fractional"
      "dim": 8,
      "epsilon": 0.1,
      "points": [{"a": [...], "b": 0.3}, ...],
      "ground_truth": {"theta": [...], "inliers": [...], "outliers": [...]}
    }

Fractional points are ``{"A": [[...], ...], "b": [...], "c": [...], "d0": x}``
with ``A`` stored row by row as a d x m matrix. ``ground_truth`` is optional.
Every float is written with 17 significant digits, so a save/load round trip
is bit-exact.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import FRACTIONAL, LINEAR, FractionalDatum, LinearDatum, MaxconError, ProblemInstance

FORMAT_VERSION = 1


class ParseError(MaxconError):
    def __init__(self, message, field=None, line=None):
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


class DimensionMismatch(ParseError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    n: int
    d: int
    o: int
    epsilon: float = 0.1
    inlier_noise: float = 0.1
    outlier_noise_range: tuple[float, float] = (0.1, 5.0)
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if not 0 <= self.o <= self.n:
            raise ValueError(f"o must lie in [0, n], got o={self.o}, n={self.n}")
        if self.epsilon < 0 or self.inlier_noise < 0:
            raise ValueError("epsilon and inlier_noise must be nonnegative")
        if self.inlier_noise > self.epsilon:
            raise ValueError("inlier_noise must not exceed epsilon")
        lo, hi = self.outlier_noise_range
        if lo < self.inlier_noise or hi <= max(lo, self.epsilon):
            raise ValueError("outlier noise range must lie beyond the inlier band and reach past epsilon")


@dataclass(frozen=True)
class GroundTruth:
    theta_true: np.ndarray
    inlier_indices: tuple[int, ...]
    outlier_indices: tuple[int, ...]

    def __eq__(self, other):
        if not isinstance(other, GroundTruth):
            return NotImplemented
        return (
            np.array_equal(self.theta_true, other.theta_true)
            and self.inlier_indices == other.inlier_indices
            and self.outlier_indices == other.outlier_indices
        )


def generate_synthetic(spec: GeneratorSpec) -> tuple[ProblemInstance, GroundTruth]:
    """Planted-model linear regression data.

    Streams come from ``SeedSequence(seed).spawn(n + 2)``: stream 0 draws the
    true model, stream 1 picks the outliers, stream 2 + i draws point i
    (regressor uniform on [-1, 1]^d, then its response noise). Regressors and
    the true model are uniform on [-1, 1]^d.
    """
    n, d, w = spec.n, spec.d, spec.inlier_noise
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(n + 2)]
    theta = streams[0].uniform(-1.0, 1.0, d)
    outliers = np.sort(streams[1].permutation(n)[: spec.o])
    is_outlier = np.zeros(n, dtype=bool)
    is_outlier[outliers] = True
    lo, hi = spec.outlier_noise_range
    A = np.empty((n, d))
    b = np.empty(n)
    for i in range(n):
        rng = streams[2 + i]
        A[i] = rng.uniform(-1.0, 1.0, d)
        clean = A[i] @ theta
        if not is_outlier[i]:
            b[i] = clean + rng.uniform(-w, w)
            continue
        while True:
            # magnitude in (lo, hi], random sign
            noise = (hi - (hi - lo) * rng.random()) * (1.0 if rng.random() < 0.5 else -1.0)
            b[i] = clean + noise
            if abs(b[i] - clean) > spec.epsilon:
                break
    inst = ProblemInstance.linear(A, b, spec.epsilon)
    truth = GroundTruth(theta, tuple(np.flatnonzero(~is_outlier).tolist()), tuple(outliers.tolist()))
    return inst, truth


# -- serialization ---------------------------------------------------------------


def _num(x) -> str:
    return format(float(x), ".17g")


def _vec(v) -> str:
    return "[" + ", ".join(_num(x) for x in np.asarray(v).reshape(-1)) + "]"


def dumps_instance(instance: ProblemInstance, truth: GroundTruth | None = None) -> str:
    lines = [
        "{",
        f'  "version": {FORMAT_VERSION},',
        f'  "kind": "{instance.kind}",',
        f'  "dim": {instance.dim},',
        f'  "epsilon": {_num(instance.epsilon)},',
        '  "points": [',
    ]
    pts = []
    for s in instance.data:
        if isinstance(s, LinearDatum):
            pts.append(f'    {{"a": {_vec(s.a)}, "b": {_num(s.b)}}}')
        else:
            rows = ", ".join(_vec(r) for r in s.A)
            pts.append(f'    {{"A": [{rows}], "b": {_vec(s.b)}, "c": {_vec(s.c)}, "d0": {_num(s.d0)}}}')
    lines.append(",\n".join(pts))
    if truth is None:
        lines.append("  ]")
    else:
        lines.append("  ],")
        lines.append('  "ground_truth": {')
        lines.append(f'    "theta": {_vec(truth.theta_true)},')
        lines.append(f'    "inliers": [{", ".join(map(str, truth.inlier_indices))}],')
        lines.append(f'    "outliers": [{", ".join(map(str, truth.outlier_indices))}]')
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def atomic_write(path, text: str):
    """Write through a temporary file and rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def save_instance(path, instance: ProblemInstance, truth: GroundTruth | None = None):
    atomic_write(path, dumps_instance(instance, truth))


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError("missing field", field=f"{where}{key}")
    return obj[key]


def _floats(value, field, shape=None):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("expected numbers", field=field) from None
    if shape is not None and arr.shape != shape:
        raise DimensionMismatch(f"expected shape {shape}, got {arr.shape}", field=field)
    if not np.all(np.isfinite(arr)):
        raise ParseError("non-finite value", field=field)
    return arr


def loads_instance(text: str) -> tuple[ProblemInstance, GroundTruth | None]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    version = _require(doc, "version", "")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported version {version!r}", field="version")
    kind = _require(doc, "kind", "")
    if kind not in (LINEAR, FRACTIONAL):
        raise ParseError(f"unknown kind {kind!r}", field="kind")
    dim = _require(doc, "dim", "")
    if not isinstance(dim, int) or dim < 1:
        raise ParseError("dim must be a positive integer", field="dim")
    eps = float(_floats(_require(doc, "epsilon", ""), "epsilon"))
    points = _require(doc, "points", "")
    if not isinstance(points, list) or not points:
        raise ParseError("points must be a nonempty list", field="points")
    data = []
    m = None
    for i, p in enumerate(points):
        at = f"points[{i}]."
        if kind == LINEAR:
            a = _floats(_require(p, "a", at), at + "a", (dim,))
            b = float(_floats(_require(p, "b", at), at + "b", ()))
            data.append(LinearDatum(a, b))
        else:
            b = _floats(_require(p, "b", at), at + "b")
            if b.ndim != 1 or (m is not None and b.size != m):
                raise DimensionMismatch("inconsistent residual length", field=at + "b")
            m = b.size
            A = _floats(_require(p, "A", at), at + "A", (dim, m))
            c = _floats(_require(p, "c", at), at + "c", (dim,))
            d0 = float(_floats(_require(p, "d0", at), at + "d0", ()))
            data.append(FractionalDatum(A, b, c, d0))
    try:
        inst = ProblemInstance(data, eps, dim)
    except ValueError as exc:
        raise ParseError(str(exc), field="epsilon" if "epsilon" in str(exc) else "points") from None
    truth = None
    if "ground_truth" in doc:
        gt = doc["ground_truth"]
        theta = _floats(_require(gt, "theta", "ground_truth."), "ground_truth.theta", (dim,))
        inl = tuple(int(i) for i in _require(gt, "inliers", "ground_truth."))
        out = tuple(int(i) for i in _require(gt, "outliers", "ground_truth."))
        if sorted(inl + out) != list(range(inst.n)):
            raise ParseError("inliers and outliers must partition the points", field="ground_truth")
        truth = GroundTruth(theta, inl, out)
    return inst, truth


def load_instance(path) -> tuple[ProblemInstance, GroundTruth | None]:
    return loads_instance(Path(path).read_text())
