"""Data model and file I/O shared by every other module.

Class indices are 0-based everywhere, including the file formats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from numbers import Real
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import softmax

ROW_SUM_TOL = 1e-9
DIST_SUM_TOL = 1e-12


class AvgKError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(AvgKError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class ValidationError(AvgKError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class DomainError(AvgKError, ValueError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """N x C matrix of per-sample class scores.

    ``probabilistic`` marks matrices whose rows are validated probability
    vectors (entries in [0, 1], rows summing to 1 within ``ROW_SUM_TOL``).
    """

    values: np.ndarray
    probabilistic: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValidationError(f"score matrix must be 2-D, got shape {values.shape}")
        n, c = values.shape
        if n < 1:
            raise ValidationError("score matrix has no rows")
        if c < 2:
            raise ValidationError(f"score matrix needs at least 2 classes, got {c}")
        bad = ~np.isfinite(values)
        if bad.any():
            row = int(np.argwhere(bad)[0][0])
            raise ValidationError("non-finite score", line=row + 1)
        if self.probabilistic:
            _check_probabilistic(values)
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def from_probabilities(cls, values) -> "ScoreMatrix":
        return cls(values, probabilistic=True)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_classes(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _check_probabilistic(values: np.ndarray) -> None:
    out_of_range = (values < 0.0) | (values > 1.0)
    if out_of_range.any():
        row = int(np.argwhere(out_of_range)[0][0])
        raise ValidationError("probability outside [0, 1]", line=row + 1)
    sums = values.sum(axis=1)
    off = np.abs(sums - 1.0) > ROW_SUM_TOL
    if off.any():
        row = int(np.flatnonzero(off)[0])
        raise ValidationError(f"row sums to {sums[row]!r}, expected 1", line=row + 1)


@dataclass(frozen=True, eq=False)
class LabelVector:
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ValidationError("labels must be 1-D")
        if labels.size == 0:
            raise ValidationError("empty label vector")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValidationError("labels must be integers")
        bad = (labels < 0) | (labels >= self.n_classes)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ValidationError(
                f"label {int(labels[i])} outside [0, {self.n_classes})", line=i + 1
            )
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int64)))

    def __len__(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True, eq=False)
class SetPrediction:
    """Boolean N x C membership mask of predicted label sets."""

    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 2:
            raise ValidationError("set mask must be 2-D")
        object.__setattr__(self, "mask", _frozen(mask))

    @property
    def sizes(self) -> np.ndarray:
        return self.mask.sum(axis=1)

    @property
    def total(self) -> int:
        return int(self.mask.sum())

    def as_lists(self) -> list[list[int]]:
        return [np.flatnonzero(row).tolist() for row in self.mask]

    def __eq__(self, other):
        if not isinstance(other, SetPrediction):
            return NotImplemented
        return self.mask.shape == other.mask.shape and bool(np.array_equal(self.mask, other.mask))

    __hash__ = None


@dataclass(frozen=True)
class FiniteZoneDistribution:
    """Joint law made of finitely many zones with constant conditional probabilities.

    Weights and etas may be floats or :class:`fractions.Fraction`; every
    closed form in :mod:`avgk.oracle` is written so that Fraction inputs give
    exact rational results.
    """

    weights: tuple
    etas: tuple

    def __post_init__(self):
        weights = tuple(self.weights)
        etas = tuple(tuple(e) for e in self.etas)
        if not weights:
            raise ValidationError("distribution has no zones")
        if len(weights) != len(etas):
            raise ValidationError("one eta vector is needed per zone")
        c = len(etas[0])
        if c < 2:
            raise ValidationError("need at least 2 classes")
        for z, (w, eta) in enumerate(zip(weights, etas)):
            if not isinstance(w, Real) or not (0 < w <= 1):
                raise ValidationError(f"zone {z}: weight {w!r} not in (0, 1]")
            if len(eta) != c:
                raise ValidationError(f"zone {z}: eta has {len(eta)} entries, expected {c}")
            if any(not isinstance(p, Real) or not (0 <= p <= 1) for p in eta):
                raise ValidationError(f"zone {z}: eta entries must lie in [0, 1]")
            if abs(float(sum(eta)) - 1.0) > DIST_SUM_TOL:
                raise ValidationError(f"zone {z}: eta sums to {float(sum(eta))!r}")
        if abs(float(sum(weights)) - 1.0) > DIST_SUM_TOL:
            raise ValidationError(f"weights sum to {float(sum(weights))!r}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "etas", etas)

    @property
    def n_classes(self) -> int:
        return len(self.etas[0])

    @property
    def n_zones(self) -> int:
        return len(self.weights)

    @cached_property
    def sorted_etas(self) -> tuple:
        """Each zone's eta in descending order."""
        return tuple(tuple(sorted(eta, reverse=True)) for eta in self.etas)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(w, Fraction) for w in self.weights) and all(
            isinstance(p, Fraction) for eta in self.etas for p in eta
        )

    def eta_matrix(self) -> np.ndarray:
        return np.array([[float(p) for p in eta] for eta in self.etas])

    def weight_array(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])

    def with_etas(self, etas) -> "FiniteZoneDistribution":
        return FiniteZoneDistribution(self.weights, tuple(tuple(e) for e in etas))

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "zones": [
                {"weight": float(w), "eta": [float(p) for p in eta]}
                for w, eta in zip(self.weights, self.etas)
            ],
        }

    @classmethod
    def from_dict(cls, data) -> "FiniteZoneDistribution":
        try:
            c = data["n_classes"]
            zones = data["zones"]
            weights = [z["weight"] for z in zones]
            etas = [z["eta"] for z in zones]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed distribution: {exc}") from None
        if not isinstance(c, int) or isinstance(c, bool):
            raise ValidationError("n_classes must be an integer")
        for z, eta in enumerate(etas):
            if not isinstance(eta, list) or len(eta) != c:
                raise ValidationError(f"zone {z}: eta must be a list of {c} numbers")
        return cls(tuple(weights), tuple(tuple(e) for e in etas))


# -- text formats ----------------------------------------------------------


def _read_lines(path) -> list[str]:
    text = Path(path).read_text()
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    return lines


def parse_scores(text: str, expect_probabilistic: bool = False) -> ScoreMatrix:
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ValidationError("empty score file")
    rows = []
    width = None
    for i, line in enumerate(lines, start=1):
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ParseError(f"expected {width} fields, got {len(fields)}", line=i)
        try:
            rows.append([float(f.strip()) for f in fields])
        except ValueError:
            raise ParseError(f"not a number in {line!r}", line=i) from None
    return ScoreMatrix(np.array(rows), probabilistic=expect_probabilistic)


def load_scores(path, expect_probabilistic: bool = False) -> ScoreMatrix:
    """Read a headerless comma-separated score matrix."""
    return parse_scores(Path(path).read_text(), expect_probabilistic)


def format_scores(scores: ScoreMatrix | np.ndarray) -> str:
    values = scores.values if isinstance(scores, ScoreMatrix) else np.asarray(scores)
    # repr() of a Python float is the shortest round-tripping decimal
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in values)


def save_scores(path, scores: ScoreMatrix | np.ndarray) -> None:
    Path(path).write_text(format_scores(scores))


def load_labels(path, n_classes: int) -> LabelVector:
    """Read one base-10 integer label per line."""
    lines = _read_lines(path)
    if not lines:
        raise ValidationError("empty label file")
    labels = []
    for i, line in enumerate(lines, start=1):
        try:
            value = int(line.strip())
        except ValueError:
            raise ParseError(f"not an integer: {line!r}", line=i) from None
        if not 0 <= value < n_classes:
            raise ValidationError(f"label {value} outside [0, {n_classes})", line=i)
        labels.append(value)
    return LabelVector(np.array(labels, dtype=np.int64), n_classes)


def save_labels(path, labels: LabelVector | Sequence[int]) -> None:
    values = labels.labels if isinstance(labels, LabelVector) else labels
    Path(path).write_text("".join(f"{int(v)}\n" for v in values))


def load_distribution(path) -> FiniteZoneDistribution:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return FiniteZoneDistribution.from_dict(data)


def save_distribution(path, dist: FiniteZoneDistribution) -> None:
    Path(path).write_text(json.dumps(dist.to_dict(), indent=2, sort_keys=True) + "\n")


# -- transforms ------------------------------------------------------------


def row_normalize_softmax(logits: ScoreMatrix | np.ndarray, temperature: float) -> ScoreMatrix:
    """Row-wise softmax of ``logits / temperature`` with max-shift."""
    if not temperature > 0 or not math.isfinite(temperature):
        raise DomainError(f"temperature must be positive, got {temperature!r}")
    z = logits.values if isinstance(logits, ScoreMatrix) else np.asarray(logits, dtype=float)
    probs = softmax(z / temperature, axis=1)
    return ScoreMatrix(probs, probabilistic=True)


def as_array(scores) -> np.ndarray:
    if isinstance(scores, ScoreMatrix):
        return scores.values
    arr = np.asarray(scores, dtype=np.float64)
    if arr.ndim != 2:
        raise DomainError(f"expected a 2-D score array, got shape {arr.shape}")
    return arr


def as_labels(labels) -> np.ndarray:
    if isinstance(labels, LabelVector):
        return labels.labels
    return np.asarray(labels, dtype=np.int64)


def as_mask(sets) -> np.ndarray:
    if isinstance(sets, SetPrediction):
        return sets.mask
    return np.asarray(sets, dtype=bool)
