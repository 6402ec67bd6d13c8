"""Discrete-time update maps induced by revision protocols.

The dynamics of the A-strategist share is the interval map

    f(x) = x + delta * [(1 - x) rho_BA(x) - x rho_AB(x)],

iterated on [0, 1].  Built-in protocols carry an exact piecewise-polynomial
displacement, so their maps have exact per-piece polynomial coefficients
for every step size; user-supplied rates fall back to closed-form
evaluation.  Orbits are never projected back into [0, 1]: an excursion
beyond round-off tolerance aborts with a diagnostic, since it signals an
inadmissible parameter set.  Sub-tolerance (<= 1e-12) overshoot at the
boundary -- e.g. a critical point mapping exactly to 1 -- is snapped back.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .piecewise import PiecewisePoly, pl_from_knots
from .protocols import IMITATIVE, INNOVATIVE, ProtocolError, RevisionProtocol

CLAMP_TOL = 1e-12
RANGE_TOL = 1e-12

DELTA_CAPPED_FAMILIES = frozenset(
    {"perturbed_ppi", "truncated_ppi", "perturbed_ppi~reflected", "truncated_ppi~reflected"}
)


class MapRangeError(RuntimeError):
    """Raised when iterating a map flagged as not an interval self-map."""


class OrbitError(RuntimeError):
    """Raised when an orbit escapes [0, 1] beyond round-off tolerance."""


@dataclass(frozen=True)
class RangeReport:
    """Where the map attains its extremes and whether it stays in [0, 1]."""

    ok: bool
    min_value: float
    argmin: float
    max_value: float
    argmax: float
    method: str
    grid_size: int
    tolerance: float = RANGE_TOL

    @property
    def max_excursion(self) -> float:
        return max(0.0, -self.min_value, self.max_value - 1.0)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "min_value": self.min_value,
            "argmin": self.argmin,
            "max_value": self.max_value,
            "argmax": self.argmax,
            "max_excursion": self.max_excursion,
            "method": self.method,
        }


@dataclass(frozen=True)
class Orbit:
    """A finite trajectory: samples[k] = f^k(x0)."""

    x0: float
    delta: float
    samples: np.ndarray

    def __len__(self) -> int:
        return len(self.samples)


class UpdateMap:
    """The interval self-map induced by a protocol and step size.

    ``poly`` is the exact piecewise-polynomial representation when the
    protocol family provides one; ``closed_form`` evaluates the rate-based
    formula directly.  At least one of the two is always present, and when
    both are they agree to float round-off.
    """

    __slots__ = (
        "protocol",
        "delta",
        "kind",
        "family",
        "equilibrium",
        "poly",
        "closed_form",
        "params",
        "range_report",
    )

    def __init__(self, *, delta, kind, family, equilibrium=None, protocol=None,
                 poly=None, closed_form=None, params=None, range_report=None):
        if poly is None and closed_form is None:
            raise ValueError("update map needs a polynomial or closed-form evaluator")
        self.protocol = protocol
        self.delta = float(delta)
        self.kind = kind
        self.family = family
        self.equilibrium = equilibrium
        self.poly = poly
        self.closed_form = closed_form
        self.params = dict(params or {})
        if range_report is None:
            range_report = range_check(self)
        self.range_report = range_report

    def __call__(self, x):
        if self.poly is not None:
            return self.poly(x)
        return self.eval_closed_form(x)

    def eval_closed_form(self, x):
        """Rate-based evaluation x + delta [(1-x) rho_BA - x rho_AB]."""
        if self.closed_form is None:
            raise ValueError("map has no closed-form (rate) representation")
        return self.closed_form(x)

    @property
    def is_interval_map(self) -> bool:
        return self.range_report.ok

    def fixes_boundary(self) -> bool:
        return self.kind == IMITATIVE

    def describe(self) -> dict:
        return {
            "family": self.family,
            "kind": self.kind,
            "delta": self.delta,
            "equilibrium": self.equilibrium,
            "interval_map": self.is_interval_map,
        }


def _closed_form_from_rates(protocol: RevisionProtocol, delta: float) -> Callable:
    def f(x):
        x = np.asarray(x, dtype=float)
        return x + delta * ((1.0 - x) * protocol.rho_ba(x) - x * protocol.rho_ab(x))

    return f


def build_update_map(protocol: RevisionProtocol, delta: float,
                     enforce_delta_cap: bool = True) -> UpdateMap:
    """Induced map for step size delta, range-checked on construction.

    For the perturbed/truncated PPI families delta is capped at 1 (their
    admissible parameter sets require it); other protocols accept any
    positive delta, gated only by the range check.  A failing range check
    flags the map rather than raising; iteration then refuses to start.
    """
    if delta <= 0.0:
        raise ProtocolError(f"step size must be positive, got {delta}")
    if enforce_delta_cap and protocol.family in DELTA_CAPPED_FAMILIES and delta > 1.0:
        raise ProtocolError(
            f"step size {delta} exceeds 1, the admissible bound for the "
            f"{protocol.family} family"
        )
    poly = None
    if protocol.displacement is not None:
        poly = protocol.displacement.scale_add_identity(delta)
    return UpdateMap(
        protocol=protocol,
        delta=delta,
        kind=protocol.kind,
        family=protocol.family,
        equilibrium=protocol.equilibrium,
        poly=poly,
        closed_form=_closed_form_from_rates(protocol, delta),
        params=dict(protocol.params),
    )


# ---------------------------------------------------------------------------
# Piecewise-linear bimodal constructors


def pl_bimodal_innovative(c_l, c_r, beta1, beta2, beta3) -> UpdateMap:
    """Three-lap decreasing-increasing-decreasing map with f(c_l) = 0.

    Pieces: beta1 (x - c_l) on [0, c_l), beta2 (x - c_l) on [c_l, c_r),
    beta3 (x - c_r) + beta2 (c_r - c_l) on [c_r, 1].  The slope bounds are
    exactly the ones making this a continuous self-map of [0, 1] with
    f(0) > c_r.
    """
    if not 0.0 < c_l < c_r < 1.0:
        raise ProtocolError(f"need 0 < c_l < c_r < 1, got c_l={c_l}, c_r={c_r}")
    if not -1.0 / c_l <= beta1 < -c_r / c_l:
        raise ProtocolError(
            f"beta1={beta1} outside [{-1.0 / c_l}, {-c_r / c_l}) (B1 bound)"
        )
    if not c_l / (c_r - c_l) < beta2 <= 1.0 / (c_r - c_l):
        raise ProtocolError(
            f"beta2={beta2} outside ({c_l / (c_r - c_l)}, {1.0 / (c_r - c_l)}] (B2 bound)"
        )
    if not -c_l / (1.0 - c_r) <= beta3 < 0.0:
        raise ProtocolError(
            f"beta3={beta3} outside [{-c_l / (1.0 - c_r)}, 0) (B3 bound)"
        )
    mid = beta2 * (c_r - c_l)
    poly = PiecewisePoly(
        (0.0, c_l, c_r, 1.0),
        np.array(
            [
                [-beta1 * c_l, beta1],
                [-beta2 * c_l, beta2],
                [mid - beta3 * c_r, beta3],
            ]
        ),
    )
    fixed = beta1 * c_l / (beta1 - 1.0)  # interior fixed point on the first lap
    return UpdateMap(
        delta=1.0,
        kind=INNOVATIVE,
        family="pl_innovative",
        equilibrium=fixed,
        poly=poly,
        params={"c_l": c_l, "c_r": c_r, "beta1": beta1, "beta2": beta2, "beta3": beta3},
    )


def pl_bimodal_imitative(c_l, c_r, beta2) -> UpdateMap:
    """Increasing-decreasing-increasing map with f(0) = 0, f(c_l) = 1, f(1) = 1.

    Pieces: x / c_l on [0, c_l), 1 - beta2 (x - c_l) on [c_l, c_r),
    1 - beta2 (c_r - c_l)(1 - (x - c_r)/(1 - c_r)) on [c_r, 1].
    """
    if not 0.0 < c_l < c_r < 1.0:
        raise ProtocolError(f"need 0 < c_l < c_r < 1, got c_l={c_l}, c_r={c_r}")
    lo = (1.0 - c_l) / (c_r - c_l)
    hi = 1.0 / (c_r - c_l)
    if not lo < beta2 <= hi:
        raise ProtocolError(f"beta2={beta2} outside ({lo}, {hi}] (B2~ bound)")
    drop = beta2 * (c_r - c_l)
    s3 = drop / (1.0 - c_r)
    poly = PiecewisePoly(
        (0.0, c_l, c_r, 1.0),
        np.array(
            [
                [0.0, 1.0 / c_l],
                [1.0 + beta2 * c_l, -beta2],
                [1.0 - s3, s3],
            ]
        ),
    )
    fixed = (1.0 + beta2 * c_l) / (1.0 + beta2)  # interior fixed point, middle lap
    return UpdateMap(
        delta=1.0,
        kind=IMITATIVE,
        family="pl_imitative",
        equilibrium=fixed,
        poly=poly,
        params={"c_l": c_l, "c_r": c_r, "beta2": beta2},
    )


def pl_map_from_values(xs, ys) -> UpdateMap:
    """Piecewise-linear map through knots (xs, ys); xs must span [0, 1]."""
    poly = pl_from_knots(xs, ys)
    return UpdateMap(
        delta=1.0,
        kind="custom",
        family="pl_values",
        poly=poly,
        params={"xs": list(map(float, xs)), "ys": list(map(float, ys))},
    )


# ---------------------------------------------------------------------------
# Range checking, iteration


def range_check(m: UpdateMap, grid_size: int = 4097,
                tolerance: float = RANGE_TOL) -> RangeReport:
    """Verify f([0, 1]) stays in [0, 1].

    Polynomial maps are checked exactly: all interior extrema (derivative
    roots per piece plus breakpoint corners), breakpoints, and endpoints
    are evaluated analytically, with the grid as a cross-check.  Maps with
    only a closed form are checked on the grid alone.
    """
    xs = np.linspace(0.0, 1.0, grid_size)
    if m.poly is not None:
        vals = m.poly(xs)
        lo, arglo, hi, arghi = m.poly.range_on(0.0, 1.0)
        imin, imax = int(np.argmin(vals)), int(np.argmax(vals))
        if vals[imin] < lo:
            lo, arglo = vals[imin], xs[imin]
        if vals[imax] > hi:
            hi, arghi = vals[imax], xs[imax]
        method = "analytic+grid"
    else:
        vals = np.asarray(m.eval_closed_form(xs), dtype=float)
        imin, imax = int(np.argmin(vals)), int(np.argmax(vals))
        lo, arglo, hi, arghi = vals[imin], xs[imin], vals[imax], xs[imax]
        method = "grid"
    ok = bool(lo >= -tolerance and hi <= 1.0 + tolerance)
    return RangeReport(
        ok=ok,
        min_value=float(lo),
        argmin=float(arglo),
        max_value=float(hi),
        argmax=float(arghi),
        method=method,
        grid_size=grid_size,
        tolerance=tolerance,
    )


def iterate(m: UpdateMap, x0: float, n: int) -> Orbit:
    """Orbit x0, f(x0), ..., f^n(x0); refuses maps that failed range check."""
    if not 0.0 <= x0 <= 1.0:
        raise OrbitError(f"starting point {x0} outside [0, 1]")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if not m.is_interval_map:
        raise MapRangeError(
            "map is not an interval self-map "
            f"(range [{m.range_report.min_value}, {m.range_report.max_value}]); "
            "iteration refused"
        )
    if m.poly is not None:
        samples, status = kernels.iterate_map(
            m.poly.breakpoints, m.poly.coeffs, float(x0), int(n), CLAMP_TOL
        )
    else:
        samples, status = _iterate_callable(m, float(x0), int(n))
    if status >= 0:
        raise OrbitError(
            f"orbit escaped [0, 1] at iteration {status}: "
            f"x = {samples[-1]!r} (inadmissible parameters?)"
        )
    return Orbit(x0=float(x0), delta=m.delta, samples=np.asarray(samples))


def _iterate_callable(m: UpdateMap, x0: float, n: int):
    samples = np.empty(n + 1)
    samples[0] = x = x0
    for step in range(1, n + 1):
        x = float(m.eval_closed_form(x))
        if not 0.0 <= x <= 1.0:
            if -CLAMP_TOL <= x < 0.0:
                x = 0.0
            elif 1.0 < x <= 1.0 + CLAMP_TOL:
                x = 1.0
            else:
                samples[step] = x
                return samples[: step + 1], step
        samples[step] = x
    return samples, -1


# ---------------------------------------------------------------------------
# Critical points, fixed points, conjugation


def critical_points(m: UpdateMap, grid_size: int = 4097) -> list:
    """Interior local extrema as (location, "max"|"min") pairs.

    Analytic for polynomial maps (per-piece derivative roots plus corner
    extrema at breakpoints); grid search with golden-section refinement
    otherwise.
    """
    if m.poly is not None:
        return m.poly.interior_extrema()
    return _grid_extrema(m, grid_size)


def _grid_extrema(m: UpdateMap, grid_size: int) -> list:
    xs = np.linspace(0.0, 1.0, grid_size)
    vals = np.asarray(m(xs), dtype=float)
    slopes = np.sign(np.diff(vals))
    out = []
    for i in range(1, len(slopes)):
        if slopes[i - 1] > 0 >= slopes[i]:
            out.append((_refine_extremum(m, xs[i - 1], xs[i + 1], True), "max"))
        elif slopes[i - 1] < 0 <= slopes[i]:
            out.append((_refine_extremum(m, xs[i - 1], xs[i + 1], False), "min"))
    return out


def _refine_extremum(m, lo, hi, maximize, iters: int = 80) -> float:
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    sign = 1.0 if maximize else -1.0
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = sign * float(m(c)), sign * float(m(d))
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = sign * float(m(c))
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = sign * float(m(d))
    return 0.5 * (a + b)


def find_fixed_points(m: UpdateMap, grid_size: int = 8193,
                      tol: float = 1e-10) -> list:
    """All solutions of f(x) = x in [0, 1], deduplicated and sorted.

    Exact per-piece root solving for polynomial maps, grid sign changes
    plus bisection otherwise; the endpoints are checked directly.
    """
    roots = []
    if m.poly is not None:
        coeffs = m.poly.coeffs.copy()
        if coeffs.shape[1] < 2:
            coeffs = np.pad(coeffs, ((0, 0), (0, 1)))
        coeffs[:, 1] -= 1.0
        diff = PiecewisePoly(m.poly.breakpoints, coeffs)
        for i in range(diff.n_pieces):
            roots.extend(diff.piece_roots(i))
    else:
        xs = np.linspace(0.0, 1.0, grid_size)
        vals = np.asarray(m(xs), dtype=float) - xs
        signs = np.sign(vals)
        for i in np.nonzero(signs[:-1] * signs[1:] < 0)[0]:
            roots.append(bisect(lambda t: float(m(t)) - t, xs[i], xs[i + 1]))
        roots.extend(xs[np.abs(vals) <= tol])
    for endpoint in (0.0, 1.0):
        if abs(float(m(endpoint)) - endpoint) <= tol:
            roots.append(endpoint)
    out = []
    for r in sorted(roots):
        if abs(float(m(r)) - r) > max(tol, 1e-9):
            continue
        if not out or r - out[-1] > 1e-9:
            out.append(float(r))
    return out


def bisect(func, lo, hi, tol: float = 1e-14, max_iter: int = 200) -> float:
    """Standard bisection for a sign change of ``func`` on [lo, hi]."""
    flo, fhi = func(lo), func(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = func(mid)
        if fmid == 0.0 or hi - lo < tol:
            return mid
        if flo * fmid < 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def conjugate_map(m: UpdateMap) -> UpdateMap:
    """The topologically conjugate map g(x) = 1 - f(1 - x).

    Exact segment-level reflection for polynomial maps; conjugating twice
    restores the original map.
    """
    poly = m.poly.conjugated() if m.poly is not None else None
    closed = None
    if m.closed_form is not None:
        inner = m.closed_form
        closed = lambda x: 1.0 - inner(1.0 - np.asarray(x, dtype=float))  # noqa: E731
    family = m.family
    family = family[: -len("~conjugate")] if family.endswith("~conjugate") else family + "~conjugate"
    return UpdateMap(
        delta=m.delta,
        kind=m.kind,
        family=family,
        equilibrium=None if m.equilibrium is None else 1.0 - m.equilibrium,
        poly=poly,
        closed_form=closed,
        params=dict(m.params),
    )


def default_probes(m: UpdateMap) -> tuple:
    """The family's reference critical points (z_l, z_r) for certification.

    Perturbed PPI probes at (p/2, (p+1)/2) and the truncated family at
    (p/2, gamma) -- the extrema of the maximal-parameter map, which are
    the points the sufficiency thresholds refer to.  Constructed families
    probe at their built-in critical points; anything else falls back to
    the map's own extrema.
    """
    p = m.equilibrium
    fam = m.family.replace("~reflected", "")
    reflected = m.family.endswith("~reflected")
    if fam in ("ppi", "perturbed_ppi") and p is not None:
        return (p / 2.0, (p + 1.0) / 2.0)
    if fam == "truncated_ppi" and p is not None:
        gamma = m.params.get("gamma")
        if gamma is not None and not reflected and gamma > p:
            return (p / 2.0, gamma)
        if gamma is not None and reflected:
            # reflected construction: max at 1 - gamma_orig, min at (1+p)/2
            return (1.0 - gamma, (1.0 + p) / 2.0)
    crits = sorted(critical_points(m))
    if len(crits) >= 2:
        return (crits[0][0], crits[-1][0])
    if p is not None:
        return (p / 2.0, (p + 1.0) / 2.0)
    return (0.25, 0.75)


# ---------------------------------------------------------------------------
# Exports


def orbit_to_csv(orbit: Orbit) -> str:
    lines = ["iteration,x"]
    lines.extend(f"{i},{float(x)!r}" for i, x in enumerate(orbit.samples))
    return "\n".join(lines) + "\n"


def map_to_json(m: UpdateMap) -> str:
    """JSON export of the exact piecewise representation.

    Piecewise-linear maps use the {breakpoints, slopes, intercepts}
    schema; higher-degree maps carry per-piece coefficient rows.
    """
    if m.poly is None:
        raise ValueError("map has no exact piecewise representation")
    doc: dict = {"breakpoints": [float(b) for b in m.poly.breakpoints]}
    try:
        slopes, intercepts = m.poly.as_linear()
        doc["slopes"] = [float(s) for s in slopes]
        doc["intercepts"] = [float(t) for t in intercepts]
    except ValueError:
        doc["coefficients"] = [[float(c) for c in row] for row in m.poly.coeffs]
    doc["family"] = m.family
    doc["delta"] = m.delta
    return json.dumps(doc, indent=2)
