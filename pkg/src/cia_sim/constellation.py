"""Enumerated received constellations, exact minimum distance, hard detection.

A constellation is the image of a box of integer label vectors under a
linear map ``label -> scale * sum(coef * label)``. Labels are never stored
per point: each point keeps its mixed-radix index into the label box, which
decodes back to the integer tuple on demand. Values are kept unscaled
(``unit_values``) so the same enumeration can be reused at any power.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .channel import ScalarField
from .errors import CoefficientCollisionError, ConfigError, SizeCapError
from .monomials import numeric_min_separation

DEFAULT_POINT_CAP = 10**6
COLLISION_RTOL = 1e-12


def format_count(n: int) -> str:
    """Exact count when short, otherwise an order of magnitude."""
    digits = len(str(n))
    return str(n) if digits <= 15 else f"~1e{digits - 1}"


def check_point_cap(size: int, cap: int):
    if size > cap:
        raise SizeCapError(f"constellation of {format_count(size)} points exceeds cap {cap}")


@dataclass(frozen=True, eq=False)
class AlignedConstellation:
    receiver: int
    state: int
    field: ScalarField
    coefficients: np.ndarray
    radices: tuple[int, ...]
    offsets: tuple[int, ...]
    n_favorite: int
    unit_values: np.ndarray
    order: np.ndarray
    scale: float = 1.0
    monomials: tuple = ()
    merged_index: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.unit_values)

    @property
    def values(self) -> np.ndarray:
        return self.scale * self.unit_values

    @property
    def coefficient_table(self) -> list:
        """``(Monomial, unscaled coefficient)`` pairs in label order."""
        mons = self.monomials or (None,) * len(self.coefficients)
        return list(zip(mons, self.coefficients))

    def rescaled(self, scale: float) -> "AlignedConstellation":
        """Same enumeration at a different normaliser (new power, same Q)."""
        clone = object.__new__(AlignedConstellation)
        clone.__dict__.update({k: v for k, v in self.__dict__.items() if k != "values"})
        object.__setattr__(clone, "scale", float(scale))
        return clone

    def labels(self, positions) -> np.ndarray:
        """Integer label rows for sorted positions (shape ``(..., n_coef)``)."""
        idx = self.order[np.asarray(positions)]
        digits = np.unravel_index(idx, self.radices)
        return np.stack(digits, axis=-1) - np.asarray(self.offsets)

    def label(self, position: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.labels(position))

    def favorite_labels(self, positions) -> np.ndarray:
        return self.labels(positions)[..., : self.n_favorite]

    def value_of(self, labels) -> np.ndarray:
        """Point value(s) for integer label row(s), computed directly."""
        return self.scale * (np.asarray(labels) @ self.coefficients)

    def points(self):
        """Yield ``(value, label)`` in sorted order; only for small constellations."""
        for i in range(len(self)):
            yield self.scale * self.unit_values[i], self.label(i)

    @cached_property
    def _tree(self) -> cKDTree:
        return cKDTree(np.column_stack([self.unit_values.real, self.unit_values.imag]))


def enumerate_values(coefficients: np.ndarray, radices: Sequence[int], offsets: Sequence[int]
                     ) -> np.ndarray:
    """Values of all label vectors in C order (first coefficient most significant)."""
    dtype = np.result_type(coefficients.dtype, np.float64)
    vals = np.zeros(1, dtype=dtype)
    for c, R, o in zip(coefficients, radices, offsets):
        digits = np.arange(R, dtype=np.float64) - o
        vals = (vals[:, None] + c * digits[None, :]).ravel()
    return vals


def build_constellation(coefficients, radices, offsets, n_favorite: int, field: ScalarField,
                        *, scale: float = 1.0, receiver: int = 0, state: int = 0,
                        monomials: Sequence = (), merged_index: dict | None = None,
                        cap: int = DEFAULT_POINT_CAP) -> AlignedConstellation:
    coefficients = np.asarray(coefficients, dtype=np.complex128 if field is ScalarField.COMPLEX
                              else np.float64)
    radices = tuple(int(r) for r in radices)
    offsets = tuple(int(o) for o in offsets)
    if len(radices) != len(coefficients) or len(offsets) != len(coefficients):
        raise ConfigError("one radix and offset per coefficient required")
    size = 1
    for R in radices:
        size *= R
    check_point_cap(size, cap)
    if len(coefficients) > 1:
        sep = numeric_min_separation(coefficients)
        if sep < COLLISION_RTOL:
            raise CoefficientCollisionError(
                f"two distinct pseudo-vectors evaluate to (nearly) the same value "
                f"(relative gap {sep:.3g}) at receiver {receiver}, state {state}"
            )
    vals = enumerate_values(coefficients, radices, offsets)
    if field is ScalarField.COMPLEX:
        order = np.lexsort((vals.imag, vals.real))
    else:
        order = np.argsort(vals, kind="stable")
    unit_values = vals[order]
    unit_values.setflags(write=False)
    order.setflags(write=False)
    return AlignedConstellation(
        receiver=receiver,
        state=state,
        field=field,
        coefficients=coefficients,
        radices=radices,
        offsets=offsets,
        n_favorite=int(n_favorite),
        unit_values=unit_values,
        order=order,
        scale=float(scale),
        monomials=tuple(monomials),
        merged_index=dict(merged_index or {}),
    )


def from_values(values, field: ScalarField = ScalarField.REAL, scale: float = 1.0
                ) -> AlignedConstellation:
    """Constellation over explicit points; the label of a point is its input index."""
    vals = np.asarray(values, dtype=field.dtype).ravel()
    order = (np.lexsort((vals.imag, vals.real)) if field is ScalarField.COMPLEX
             else np.argsort(vals, kind="stable"))
    unit_values = vals[order]
    unit_values.setflags(write=False)
    order.setflags(write=False)
    return AlignedConstellation(receiver=0, state=0, field=field, coefficients=np.zeros(0),
                                radices=(len(vals),), offsets=(0,), n_favorite=1,
                                unit_values=unit_values, order=order, scale=float(scale))


def min_distance(c: AlignedConstellation) -> float:
    """Exact minimum distance between constellation points (0 on any collision)."""
    if len(c) < 2:
        raise ConfigError("minimum distance needs at least two points")
    if c.field is ScalarField.COMPLEX:
        d, _ = c._tree.query(c._tree.data, k=2)
        return float(c.scale * d[:, 1].min())
    return float(c.scale * np.diff(c.unit_values).min())


def detect_positions(y, c: AlignedConstellation) -> np.ndarray:
    """Sorted-array positions of the nearest points to observations ``y``.

    Ties go to the smaller value (real) or the lexicographically smaller
    ``(re, im)`` point (complex).
    """
    if len(c) == 0:
        raise ConfigError("empty constellation")
    u = np.asarray(y) / c.scale
    if c.field is ScalarField.COMPLEX:
        u = np.asarray(u, dtype=np.complex128)
        k = min(2, len(c))
        pts = np.column_stack([u.real.ravel(), u.imag.ravel()])
        d, j = c._tree.query(pts, k=k)
        if k == 1:
            return j.reshape(u.shape)
        pick = np.where(d[:, 0] == d[:, 1], np.minimum(j[:, 0], j[:, 1]), j[:, 0])
        return pick.reshape(u.shape)
    v = c.unit_values
    pos = np.searchsorted(v, u)
    lo = np.clip(pos - 1, 0, len(v) - 1)
    hi = np.clip(pos, 0, len(v) - 1)
    take_lo = np.abs(u - v[lo]) <= np.abs(v[hi] - u)
    return np.where(take_lo, lo, hi)


def detect(y, c: AlignedConstellation) -> tuple[int, ...]:
    """Label of the constellation point nearest to a single observation."""
    return c.label(int(detect_positions(np.asarray([y]), c)[0]))
