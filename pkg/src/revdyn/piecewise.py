"""Piecewise function machinery shared by protocols and update maps.

Two representations are used throughout:

* :class:`Piecewise` -- a scalar function on [0, 1] given by closed-form
  callables on half-open pieces [x_i, x_{i+1}) (the last piece is closed at
  1).  Switch rates are stored this way; each callable is only ever
  evaluated on its own piece, so rational expressions with poles outside
  their piece are safe.

* :class:`PiecewisePoly` -- per-piece polynomials in the absolute
  coordinate x (degree <= 3 in practice).  Update maps and displacement
  fields of the built-in protocol families are exact in this form, which
  is what makes itinerary-exact period solving and analytic critical
  points possible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

BREAK_TOL = 1e-12


def _as_breaks(breakpoints) -> np.ndarray:
    breaks = np.asarray(breakpoints, dtype=float)
    if breaks.ndim != 1 or breaks.size < 2:
        raise ValueError("need at least two breakpoints")
    if abs(breaks[0]) > BREAK_TOL or abs(breaks[-1] - 1.0) > BREAK_TOL:
        raise ValueError(f"breakpoints must span [0, 1], got {breaks}")
    if np.any(np.diff(breaks) <= 0):
        raise ValueError(f"breakpoints must be strictly increasing, got {breaks}")
    breaks = breaks.copy()
    breaks[0], breaks[-1] = 0.0, 1.0
    return breaks


def piece_index(breaks: np.ndarray, x):
    """Index of the half-open piece containing x (last piece closed at 1)."""
    idx = np.searchsorted(breaks, x, side="right") - 1
    return np.clip(idx, 0, len(breaks) - 2)


@dataclass(frozen=True)
class Piecewise:
    """Closed-form scalar function on [0, 1] with half-open pieces."""

    breakpoints: tuple
    funcs: tuple

    def __post_init__(self):
        breaks = _as_breaks(self.breakpoints)
        if len(self.funcs) != len(breaks) - 1:
            raise ValueError("need one function per piece")
        object.__setattr__(self, "breakpoints", tuple(breaks))
        object.__setattr__(self, "funcs", tuple(self.funcs))

    def __call__(self, x):
        breaks = np.asarray(self.breakpoints)
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        out = np.empty_like(arr)
        idx = piece_index(breaks, arr)
        for i, func in enumerate(self.funcs):
            mask = idx == i
            if np.any(mask):
                out[mask] = func(arr[mask])
        return float(out[0]) if scalar else out

    def reflected(self) -> "Piecewise":
        """The function x -> self(1 - x), with reflected breakpoints.

        Branch choice at interior breakpoints flips orientation; for the
        continuous rates used here the value is unchanged.
        """
        breaks = 1.0 - np.asarray(self.breakpoints)[::-1]
        funcs = tuple(
            (lambda f: (lambda x: f(1.0 - np.asarray(x))))(f) for f in self.funcs[::-1]
        )
        return Piecewise(tuple(breaks), funcs)


def constant(value: float) -> Callable:
    return lambda x: np.full_like(np.asarray(x, dtype=float), float(value))


class PiecewisePoly:
    """Per-piece polynomials c0 + c1 x + ... on half-open pieces of [0, 1]."""

    __slots__ = ("breakpoints", "coeffs")

    def __init__(self, breakpoints, coeffs):
        self.breakpoints = _as_breaks(breakpoints)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[0] != len(self.breakpoints) - 1:
            raise ValueError("coeffs must have one row per piece")
        self.coeffs = coeffs
        self.breakpoints.setflags(write=False)
        self.coeffs.setflags(write=False)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def n_pieces(self) -> int:
        return len(self.breakpoints) - 1

    def __call__(self, x):
        from . import kernels

        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        out = kernels.eval_poly(self.breakpoints, self.coeffs, np.atleast_1d(arr))
        return float(out[0]) if scalar else out

    def eval_piece(self, i: int, x):
        """Evaluate piece i's polynomial at x, ignoring piece bounds."""
        out = 0.0
        for k in range(self.coeffs.shape[1] - 1, -1, -1):
            out = out * x + self.coeffs[i, k]
        return out

    def derivative(self) -> "PiecewisePoly":
        c = self.coeffs
        if c.shape[1] == 1:
            return PiecewisePoly(self.breakpoints, np.zeros((c.shape[0], 1)))
        dc = c[:, 1:] * np.arange(1, c.shape[1])
        return PiecewisePoly(self.breakpoints, dc)

    def one_sided_derivatives(self, x: float) -> tuple:
        """(left, right) derivatives at x; they differ only at breakpoints."""
        deriv = self.derivative()
        right = int(piece_index(self.breakpoints, x))
        interior = np.asarray(self.breakpoints[1:-1])
        at_break = interior[np.isclose(interior, x, rtol=0.0, atol=BREAK_TOL)]
        left = right - 1 if (at_break.size and right > 0) else right
        return deriv.eval_piece(left, x), deriv.eval_piece(right, x)

    def scale_add_identity(self, delta: float) -> "PiecewisePoly":
        """The polynomial x + delta * self(x), piece by piece."""
        coeffs = self.coeffs * float(delta)
        if coeffs.shape[1] < 2:
            coeffs = np.pad(coeffs, ((0, 0), (0, 1)))
        coeffs = coeffs.copy()
        coeffs[:, 1] += 1.0
        return PiecewisePoly(self.breakpoints, coeffs)

    def _compose_1mx(self) -> np.ndarray:
        # coefficient rows of p(1 - x), pieces reversed to match reflected breaks
        from math import comb

        n = self.coeffs.shape[1]
        basis = np.zeros((n, n))  # basis[k] = coefficients of (1 - x)^k
        for k in range(n):
            for j in range(k + 1):
                basis[k, j] = comb(k, j) * (-1.0) ** j
        return (self.coeffs @ basis)[::-1]

    def conjugated(self) -> "PiecewisePoly":
        """Exact representation of x -> 1 - self(1 - x)."""
        breaks = 1.0 - self.breakpoints[::-1]
        coeffs = -self._compose_1mx()
        coeffs[:, 0] += 1.0
        return PiecewisePoly(breaks, coeffs)

    def reflected_negated(self) -> "PiecewisePoly":
        """Exact representation of x -> -self(1 - x) (displacement reflection)."""
        breaks = 1.0 - self.breakpoints[::-1]
        return PiecewisePoly(breaks, -self._compose_1mx())

    def piece_roots(self, i: int, shift: float = 0.0, tol: float = BREAK_TOL):
        """Real roots of piece i's polynomial minus ``shift`` inside its piece."""
        c = self.coeffs[i].copy()
        c[0] -= shift
        lead = np.nonzero(np.abs(c) > 0.0)[0]
        if lead.size == 0:
            return []  # identically zero: a continuum, handled by callers
        deg = lead[-1]
        if deg == 0:
            return []
        if deg == 1:
            roots = [-c[0] / c[1]]
        elif deg == 2:
            disc = c[1] * c[1] - 4.0 * c[2] * c[0]
            if disc < 0.0:
                roots = []
            else:
                # stable quadratic: avoid cancellation in the smaller root
                q = -0.5 * (c[1] + np.copysign(np.sqrt(disc), c[1]))
                roots = [q / c[2]] if q == 0.0 else [q / c[2], c[0] / q]
        else:
            roots = [r.real for r in np.roots(c[: deg + 1][::-1]) if abs(r.imag) <= 1e-9]
        lo, hi = self.breakpoints[i], self.breakpoints[i + 1]
        out = []
        for r in roots:
            x = float(r)
            if lo - tol <= x <= hi + tol:
                out.append(min(max(x, lo), hi))
        return sorted(out)

    def interior_extrema(self, lo: float = 0.0, hi: float = 1.0):
        """Local extrema in (lo, hi): derivative roots plus corner sign flips.

        Returns a list of (x, kind) with kind in {"max", "min"}; corner
        extrema at breakpoints (one-sided derivative sign change) are
        included.
        """
        deriv = self.derivative()
        candidates = []
        for i in range(self.n_pieces):
            for x in deriv.piece_roots(i):
                if lo < x < hi:
                    candidates.append(x)
        for x in self.breakpoints[1:-1]:
            if lo < x < hi:
                candidates.append(float(x))
        out = []
        h = 1e-9
        for x in sorted(set(np.round(candidates, 12))):
            dl = float(deriv(max(x - h, 0.0)))
            dr = float(deriv(min(x + h, 1.0)))
            if dl > 0.0 > dr:
                out.append((float(x), "max"))
            elif dl < 0.0 < dr:
                out.append((float(x), "min"))
        return out

    def range_on(self, lo: float = 0.0, hi: float = 1.0) -> tuple:
        """Exact (min, argmin, max, argmax) over [lo, hi]."""
        xs = [lo, hi]
        xs.extend(b for b in self.breakpoints if lo < b < hi)
        xs.extend(x for x, _ in self.interior_extrema(lo, hi))
        xs = np.asarray(sorted(set(xs)))
        vals = self(xs)
        imin, imax = int(np.argmin(vals)), int(np.argmax(vals))
        return float(vals[imin]), float(xs[imin]), float(vals[imax]), float(xs[imax])

    def is_continuous(self, tol: float = BREAK_TOL) -> bool:
        for i, x in enumerate(self.breakpoints[1:-1], start=1):
            left = self.eval_piece(i - 1, x)
            right = self.eval_piece(i, x)
            if abs(left - right) > tol * max(1.0, abs(left), abs(right)):
                return False
        return True

    def as_linear(self) -> tuple:
        """(slopes, intercepts) if every piece is affine, else raises."""
        if np.any(np.abs(self.coeffs[:, 2:]) > 0.0):
            raise ValueError("map is not piecewise linear")
        c = np.pad(self.coeffs, ((0, 0), (0, max(0, 2 - self.coeffs.shape[1]))))
        return c[:, 1].copy(), c[:, 0].copy()


def pl_from_knots(xs: Sequence[float], ys: Sequence[float]) -> PiecewisePoly:
    """Continuous piecewise-linear interpolant through (xs, ys) knots."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size or xs.size < 2:
        raise ValueError("need matching xs/ys with at least two knots")
    slopes = np.diff(ys) / np.diff(xs)
    intercepts = ys[:-1] - slopes * xs[:-1]
    return PiecewisePoly(xs, np.column_stack([intercepts, slopes]))


def merge_pieces(*polys: PiecewisePoly) -> np.ndarray:
    """Union of all breakpoints of the given piecewise polynomials."""
    breaks = np.unique(np.concatenate([p.breakpoints for p in polys]))
    keep = [breaks[0]]
    for b in breaks[1:]:
        if b - keep[-1] > BREAK_TOL:
            keep.append(b)
    keep[-1] = 1.0
    return np.asarray(keep)
