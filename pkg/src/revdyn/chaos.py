"""Chaos certification, periodic orbits, stability, analytic thresholds.

The certification test: if z_l < z_r with f^2(z_l) > z_r and either

    (1)  f(z_r) < z_l   and  (2)  f(z_l) > z_r,      or
    (1') f(z_r) > z_l   and  (2') f(z_l) < z_l,

then some x in (z_l, z_r) satisfies f(x) < x < f^3(x), which forces a
period-3 orbit, hence periodic orbits of every period and an uncountable
scrambled set.  All inequalities are checked with a strictness guard of
1e-9 so float round-off cannot promote a boundary case to a certificate.

Periodic orbits are found exactly for piecewise-linear maps by composing
the affine pieces along lap itineraries (depth-first with interval
pruning), and numerically for smooth maps by locating sign changes of
f^n(x) - x on a fine grid and polishing with bisection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import UpdateMap, bisect, build_update_map, find_fixed_points, iterate
from .protocols import IMITATIVE, ProtocolError, RevisionProtocol

STRICT_MARGIN = 1e-9
WITNESS_TOL = 1e-12
PERIOD3_TOL = 1e-10
EXACT_PERIOD_BUDGET = 12

ATTRACTING = "attracting"
REPELLING = "repelling"
INCONCLUSIVE = "inconclusive"

BRANCH_MAIN = "(1,2)"
BRANCH_PRIME = "(1',2')"


class ChaosSearchError(RuntimeError):
    """Raised when a guaranteed construction step fails numerically."""


@dataclass(frozen=True)
class ChaosCertificate:
    """Self-verifying evidence record for the period-three route to chaos."""

    z_l: float
    z_r: float
    branch: str
    f_zl: float
    f_zr: float
    f2_zl: float
    witness: float
    witness_image: float
    witness_third: float
    period3: Optional[tuple] = None

    def inequalities(self) -> dict:
        """The recorded strict inequalities and their margins."""
        out = {"f2(z_l) > z_r": self.f2_zl - self.z_r}
        if self.branch == BRANCH_MAIN:
            out["f(z_r) < z_l"] = self.z_l - self.f_zr
            out["f(z_l) > z_r"] = self.f_zl - self.z_r
        else:
            out["f(z_r) > z_l"] = self.f_zr - self.z_l
            out["f(z_l) < z_l"] = self.z_l - self.f_zl
        out["witness: f(x*) < x*"] = self.witness - self.witness_image
        out["witness: x* < f3(x*)"] = self.witness_third - self.witness
        return out

    def verify(self, m: UpdateMap, tol: float = 1e-9) -> bool:
        """Re-evaluate every recorded quantity from the map."""
        checks = [
            abs(float(m(self.z_l)) - self.f_zl) <= tol,
            abs(float(m(self.z_r)) - self.f_zr) <= tol,
            abs(float(m(m(self.z_l))) - self.f2_zl) <= tol,
            abs(float(m(self.witness)) - self.witness_image) <= tol,
        ]
        checks.append(all(margin >= STRICT_MARGIN for margin in self.inequalities().values()))
        if self.period3 is not None:
            for x in self.period3:
                x3 = float(m(m(m(x))))
                checks.append(abs(x3 - x) <= max(PERIOD3_TOL, tol))
        return all(checks)

    def to_json(self) -> dict:
        from . import __version__

        return {
            "z_l": self.z_l,
            "z_r": self.z_r,
            "branch": self.branch,
            "f_zl": self.f_zl,
            "f_zr": self.f_zr,
            "f2_zl": self.f2_zl,
            "witness": self.witness,
            "witness_image": self.witness_image,
            "witness_third": self.witness_third,
            "period3": list(self.period3) if self.period3 else None,
            "margins": self.inequalities(),
            "tool_version": __version__,
        }


@dataclass(frozen=True)
class ConditionReport:
    """Why no certificate was emitted: each inequality with its margin."""

    z_l: float
    z_r: float
    f_zl: float
    f_zr: float
    f2_zl: float
    failures: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return False

    def to_json(self) -> dict:
        return {
            "z_l": self.z_l,
            "z_r": self.z_r,
            "f_zl": self.f_zl,
            "f_zr": self.f_zr,
            "f2_zl": self.f2_zl,
            "failures": self.failures,
        }


def check_chaos_conditions(m: UpdateMap, z_l: float, z_r: float,
                           margin: float = STRICT_MARGIN,
                           with_period3: bool = True):
    """Evaluate both condition branches at the probe points.

    Returns a :class:`ChaosCertificate` when a branch holds (with witness
    and, when found, a period-3 orbit) or a :class:`ConditionReport`
    stating which inequality failed by how much.
    """
    if not 0.0 <= z_l < z_r <= 1.0:
        raise ValueError(f"need 0 <= z_l < z_r <= 1, got {z_l}, {z_r}")
    f_zl = float(m(z_l))
    f_zr = float(m(z_r))
    f2_zl = float(m(f_zl))

    common = f2_zl - z_r  # must exceed the margin in both branches
    main = min(z_l - f_zr, f_zl - z_r)
    prime = min(f_zr - z_l, z_l - f_zl)

    branch = None
    if common >= margin and main >= margin:
        branch = BRANCH_MAIN
    elif common >= margin and prime >= margin:
        branch = BRANCH_PRIME
    if branch is None:
        failures = {}
        if common < margin:
            failures["f2(z_l) > z_r"] = common
        failures["branch (1,2) margin"] = main
        failures["branch (1',2') margin"] = prime
        return ConditionReport(
            z_l=z_l, z_r=z_r, f_zl=f_zl, f_zr=f_zr, f2_zl=f2_zl, failures=failures
        )

    witness = find_witness(m, z_l, z_r)
    w_img = float(m(witness))
    w_third = float(m(m(w_img)))
    if witness - w_img < margin or w_third - witness < margin:
        return ConditionReport(
            z_l=z_l,
            z_r=z_r,
            f_zl=f_zl,
            f_zr=f_zr,
            f2_zl=f2_zl,
            failures={"witness margins below strictness guard": min(
                witness - w_img, w_third - witness)},
        )
    period3 = find_period3(m) if with_period3 else None
    return ChaosCertificate(
        z_l=z_l,
        z_r=z_r,
        branch=branch,
        f_zl=f_zl,
        f_zr=f_zr,
        f2_zl=f2_zl,
        witness=witness,
        witness_image=w_img,
        witness_third=w_third,
        period3=period3,
    )


def find_witness(m: UpdateMap, z_l: float, z_r: float,
                 tol: float = WITNESS_TOL, scan: int = 257) -> float:
    """A point x* in (z_l, z_r) with f(x*) = z_l, located by bisection.

    Signals :class:`ChaosSearchError` if f - z_l has no sign change inside
    the interval (the chaos conditions then did not actually hold).
    """
    eps = max(1e-15, (z_r - z_l) * 1e-12)
    xs = np.linspace(z_l + eps, z_r - eps, scan)
    vals = np.asarray(m(xs), dtype=float) - z_l
    hit = np.nonzero(np.abs(vals) == 0.0)[0]
    if hit.size:
        return float(xs[hit[0]])
    signs = np.sign(vals)
    crossings = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    if crossings.size == 0:
        raise ChaosSearchError(
            f"f(x) = z_l has no solution inside ({z_l}, {z_r}); "
            "conditions not satisfied"
        )
    i = int(crossings[0])
    return bisect(lambda x: float(m(x)) - z_l, float(xs[i]), float(xs[i + 1]), tol=tol)


# ---------------------------------------------------------------------------
# Periodic orbits


def _compose_n(m: UpdateMap, x, n: int):
    out = np.asarray(x, dtype=float)
    for _ in range(n):
        out = np.asarray(m(out), dtype=float)
    return out


def _pl_itinerary_fixed_points(m: UpdateMap, n: int, tol: float = 1e-12) -> list:
    """Fixed points of f^n for a piecewise-linear map, itinerary-exact.

    Depth-first over lap itineraries, pruning by the feasible interval of
    starting points; each surviving leaf yields a linear fixed-point
    equation.  Points landing on a lap boundary are accepted from either
    adjacent itinerary and deduplicated by the caller.
    """
    slopes, intercepts = m.poly.as_linear()
    breaks = m.poly.breakpoints
    n_pieces = len(slopes)
    found: list = []

    def dfs(depth: int, s: float, t: float, lo: float, hi: float):
        if depth == n:
            if abs(s - 1.0) < 1e-12:
                return  # neutral composition: no isolated fixed points
            x = t / (1.0 - s)
            if lo - tol <= x <= hi + tol:
                found.append(min(max(x, 0.0), 1.0))
            return
        for j in range(n_pieces):
            a, b = breaks[j], breaks[j + 1]
            if s > 0.0:
                nlo, nhi = (a - t) / s, (b - t) / s
            elif s < 0.0:
                nlo, nhi = (b - t) / s, (a - t) / s
            else:
                if a - tol <= t <= b + tol:
                    dfs(depth + 1, 0.0, slopes[j] * t + intercepts[j], lo, hi)
                continue
            new_lo, new_hi = max(lo, nlo), min(hi, nhi)
            if new_lo <= new_hi + tol:
                dfs(depth + 1, slopes[j] * s, slopes[j] * t + intercepts[j],
                    new_lo, new_hi)

    dfs(0, 1.0, 0.0, 0.0, 1.0)
    return found


def _numeric_fixed_points_of_power(m: UpdateMap, n: int, grid_size: int) -> list:
    xs = np.linspace(0.0, 1.0, grid_size)
    vals = _compose_n(m, xs, n) - xs
    signs = np.sign(vals)
    roots = list(xs[vals == 0.0])
    for i in np.nonzero(signs[:-1] * signs[1:] < 0)[0]:
        roots.append(
            bisect(lambda x: float(_compose_n(m, x, n)) - x, xs[i], xs[i + 1])
        )
    return roots


def _minimal_period(m: UpdateMap, x: float, n: int, tol: float) -> int:
    for d in range(1, n):
        if n % d == 0 and abs(float(_compose_n(m, x, d)) - x) <= tol:
            return d
    return n


def _orbit_key(orbit, decimals: int = 9) -> tuple:
    return tuple(sorted(round(float(x), decimals) for x in orbit))


def find_periodic_orbits(m: UpdateMap, n_max: int, mode: str = "auto",
                         grid_size: int = 200_001, tol: float = 1e-9) -> list:
    """Distinct minimal-period orbits up to n_max as (period, points) pairs.

    ``mode`` is "exact" (piecewise-linear itinerary solving), "numeric"
    (grid + bisection on f^n(x) - x), or "auto".  Exact mode is limited to
    n_max <= 12 (itinerary count grows as laps^n); beyond that it falls
    back to numeric with a warning in the result via plain ValueError.
    """
    is_linear = False
    if m.poly is not None:
        try:
            m.poly.as_linear()
            is_linear = True
        except ValueError:
            pass
    within_budget = (
        is_linear
        and n_max <= EXACT_PERIOD_BUDGET
        and m.poly.n_pieces ** n_max <= 5_000_000
    )
    if mode == "auto":
        mode = "exact" if within_budget else "numeric"
    if mode == "exact" and not is_linear:
        raise ValueError("exact mode requires a piecewise-linear map")
    if mode == "exact" and not within_budget:
        import warnings

        warnings.warn(
            f"n_max={n_max} beyond the exact-mode itinerary budget; "
            "falling back to numeric mode"
        )
        mode = "numeric"

    orbits = []
    seen = set()
    for n in range(1, n_max + 1):
        if n == 1:
            candidates = find_fixed_points(m)
        elif mode == "exact":
            candidates = _pl_itinerary_fixed_points(m, n)
        else:
            candidates = _numeric_fixed_points_of_power(m, n, grid_size)
        for x in candidates:
            if abs(float(_compose_n(m, x, n)) - x) > max(tol, 1e-8):
                continue
            if _minimal_period(m, x, n, tol) != n:
                continue
            orbit = [float(x)]
            for _ in range(n - 1):
                orbit.append(float(m(orbit[-1])))
            key = _orbit_key(orbit)
            if key in seen:
                continue
            seen.add(key)
            orbits.append((n, tuple(orbit)))
    return orbits


def find_period3(m: UpdateMap, grid_size: int = 100_001) -> Optional[tuple]:
    """One period-3 orbit (three distinct points), or None.

    Exact itinerary solving for piecewise-linear maps, sign-change scan of
    f^3(x) - x otherwise; candidates that are fixed points of f are
    discarded.
    """
    is_linear = False
    if m.poly is not None:
        try:
            m.poly.as_linear()
            is_linear = True
        except ValueError:
            pass
    if is_linear:
        candidates = _pl_itinerary_fixed_points(m, 3)
    else:
        candidates = _numeric_fixed_points_of_power(m, 3, grid_size)
    for x in sorted(candidates):
        if abs(float(_compose_n(m, x, 3)) - x) > PERIOD3_TOL:
            continue
        if abs(float(m(x)) - x) <= PERIOD3_TOL:
            continue  # fixed point of f
        orbit = (float(x), float(m(x)), float(m(m(x))))
        gaps = (abs(orbit[0] - orbit[1]), abs(orbit[1] - orbit[2]),
                abs(orbit[0] - orbit[2]))
        if min(gaps) > PERIOD3_TOL:
            return orbit
    return None


# ---------------------------------------------------------------------------
# Stability


@dataclass(frozen=True)
class StabilityReport:
    """One-sided derivatives at a fixed point and their classification."""

    point: float
    left_derivative: float
    right_derivative: float
    classification: str
    method: str

    def to_json(self) -> dict:
        return {
            "point": self.point,
            "left_derivative": self.left_derivative,
            "right_derivative": self.right_derivative,
            "classification": self.classification,
            "method": self.method,
        }


def _classify(left: float, right: float) -> str:
    if abs(left) > 1.0 and abs(right) > 1.0:
        return REPELLING
    if abs(left) < 1.0 and abs(right) < 1.0:
        return ATTRACTING
    return INCONCLUSIVE


def _one_sided_numeric(m: UpdateMap, x: float, side: int, h: float = 1e-5) -> float:
    # 3-point one-sided difference with one Richardson extrapolation step
    def d(step):
        s = side * step
        f0 = float(m(x))
        f1 = float(m(x + s))
        f2 = float(m(x + 2.0 * s))
        return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * s)

    h = min(h, (1.0 - x) / 2.0 if side > 0 else x / 2.0)
    return (4.0 * d(h / 2.0) - d(h)) / 3.0


def one_sided_derivatives(m: UpdateMap, x: float, mode: str = "auto") -> StabilityReport:
    """f'-(x) and f'+(x) with the attracting/repelling classification.

    Analytic from the per-piece polynomial derivative when available;
    otherwise one-sided finite differences with Richardson extrapolation.
    Classification follows the one-sided criterion: both magnitudes above 1
    is repelling, both below is attracting, anything else (including a
    magnitude of exactly 1) is inconclusive.
    """
    if not 0.0 < x < 1.0:
        raise ValueError(f"stability point must be interior, got {x}")
    if mode == "auto":
        mode = "analytic" if m.poly is not None else "numeric"
    if mode == "analytic":
        if m.poly is None:
            raise ValueError("map has no polynomial representation")
        left, right = m.poly.one_sided_derivatives(x)
    else:
        left = _one_sided_numeric(m, x, -1)
        right = _one_sided_numeric(m, x, +1)
    return StabilityReport(
        point=x,
        left_derivative=float(left),
        right_derivative=float(right),
        classification=_classify(float(left), float(right)),
        method=mode,
    )


def basin_probe(m: UpdateMap, x: float, offset: float = 1e-4,
                steps: int = 5000, tol: float = 1e-6) -> str:
    """Heuristic probe: do orbits started beside x return to it?

    Reported alongside an inconclusive classification; never upgrades it.
    """
    verdicts = []
    for x0 in (x - offset, x + offset):
        if not 0.0 <= x0 <= 1.0:
            continue
        try:
            orbit = iterate(m, x0, steps)
        except RuntimeError:
            verdicts.append("escapes")
            continue
        verdicts.append("converges" if abs(orbit.samples[-1] - x) <= tol else "wanders")
    if not verdicts:
        return "unclear (heuristic)"
    if all(v == "converges" for v in verdicts):
        return "converges (heuristic)"
    if all(v == "wanders" for v in verdicts):
        return "wanders (heuristic)"
    return "mixed: " + "/".join(verdicts) + " (heuristic)"


# ---------------------------------------------------------------------------
# Analytic step-size thresholds


@dataclass(frozen=True)
class ThresholdReport:
    """Closed-form threshold components and their maximum."""

    components: dict
    threshold: float
    valid: bool

    def to_json(self) -> dict:
        return {
            "components": self.components,
            "threshold": self.threshold,
            "valid": self.valid,
        }


def delta_threshold_perturbed(p: float) -> ThresholdReport:
    """Sufficient step-size threshold for the maximal perturbed-PPI family.

    delta_1 = 1/(p+1), delta_2 = 1/(2-p),
    delta_3 = (p + 3 + sqrt((-p^3 - 4p^2 - 13p + 34)/(2 - p)))/8;
    chaos is certified at the reference probes for every delta above the
    maximum of the three (which is max(delta_1, delta_3) and stays < 1).
    """
    if not 0.0 < p < 0.5:
        raise ProtocolError(
            f"threshold formulas need p in (0, 1/2), got {p}; reflect first"
        )
    d1 = 1.0 / (p + 1.0)
    d2 = 1.0 / (2.0 - p)
    d3 = float(
        (p + 3.0 + np.sqrt((-p ** 3 - 4.0 * p ** 2 - 13.0 * p + 34.0) / (2.0 - p))) / 8.0
    )
    threshold = max(d1, d2, d3)
    return ThresholdReport(
        components={"delta_1": d1, "delta_2": d2, "delta_3": d3},
        threshold=threshold,
        valid=threshold < 1.0,
    )


def delta_threshold_truncated(p: float) -> ThresholdReport:
    """Sufficient threshold for the maximal truncated family at gamma = p + p^2/2.

    delta*_1 = (p+1)/(p+2), delta*_2 = p(p+1)/(2-p),
    delta*_3 = (p^2 + 2p + sqrt(p (p^4 + 10p^3 + 20p^2 - 8p - 16)/(p - 2)))/4,
    delta*_4 = p/(2(1-p)), delta*_5 = p(2 - 2p - p^2)/(2(1-p));
    the maximum reduces to max(delta*_1, delta*_3).  Above it the map is
    certified chaotic with the equilibrium repelling.
    """
    if not 0.0 < p < 0.5:
        raise ProtocolError(
            f"threshold formulas need p in (0, 1/2), got {p}; reflect first"
        )
    d1 = (p + 1.0) / (p + 2.0)
    d2 = p * (p + 1.0) / (2.0 - p)
    d3 = float((p * p + 2.0 * p + np.sqrt(
        p * (p ** 4 + 10.0 * p ** 3 + 20.0 * p ** 2 - 8.0 * p - 16.0) / (p - 2.0)
    )) / 4.0)
    d4 = p / (2.0 * (1.0 - p))
    d5 = p * (2.0 - 2.0 * p - p * p) / (2.0 * (1.0 - p))
    threshold = max(d1, d2, d3, d4, d5)
    return ThresholdReport(
        components={
            "delta_star_1": d1,
            "delta_star_2": d2,
            "delta_star_3": d3,
            "delta_star_4": d4,
            "delta_star_5": d5,
        },
        threshold=threshold,
        valid=threshold < 1.0,
    )


# ---------------------------------------------------------------------------
# Symmetric (p = 1/2) imitative chaos


def _left_max(m: UpdateMap) -> tuple:
    """(argmax, max) of the map over [0, 1/2]."""
    if m.poly is not None:
        lo, arglo, hi, arghi = m.poly.range_on(0.0, 0.5)
        return arghi, hi
    xs = np.linspace(0.0, 0.5, 20001)
    vals = np.asarray(m(xs), dtype=float)
    i = int(np.argmax(vals))
    return float(xs[i]), float(vals[i])


def delta_star_symmetric(protocol: RevisionProtocol, tol: float = 1e-10,
                         max_delta: float = 2.0 ** 40,
                         grid_size: int = 10_001) -> float:
    """The step size at which the left-half maximum of the map reaches 1.

    Requires an imitative protocol on a game with equilibrium 1/2 whose
    imitation rates satisfy the exchange symmetry
    r_AB(x) + r_AB(1-x) = r_BA(x) + r_BA(1-x); the induced map then obeys
    f(1-x) = 1-f(x), so its left maximum touching 1 makes the map onto and
    certifiably chaotic at the pair (z_l, 1 - z_l).

    The maximiser z_l depends on delta, so the equation f_delta(z_l^delta)=1
    is solved by one-dimensional root search over delta; the search expands
    its bracket geometrically and reports failure if none is found below
    ``max_delta``.
    """
    if protocol.kind != IMITATIVE:
        raise ProtocolError("symmetric chaos threshold applies to imitative protocols")
    p = protocol.equilibrium
    if abs(p - 0.5) > 1e-12:
        raise ProtocolError(f"requires equilibrium 1/2, got p={p}")
    xs = np.linspace(0.0, 1.0, grid_size)
    lhs = np.asarray(protocol.r_ab(xs), dtype=float) + np.asarray(
        protocol.r_ab(1.0 - xs), dtype=float
    )
    rhs = np.asarray(protocol.r_ba(xs), dtype=float) + np.asarray(
        protocol.r_ba(1.0 - xs), dtype=float
    )
    worst = float(np.max(np.abs(lhs - rhs)))
    if worst > 1e-9:
        raise ProtocolError(
            f"imitation rates violate the exchange symmetry by {worst:.3e}"
        )

    def overshoot(delta: float) -> float:
        m = build_update_map(protocol, delta, enforce_delta_cap=False)
        _, peak = _left_max(m)
        return peak - 1.0

    lo = 1e-8
    if overshoot(lo) >= 0.0:
        raise ChaosSearchError("map already exceeds 1 at vanishing step size")
    hi = 1.0
    while overshoot(hi) < 0.0:
        hi *= 2.0
        if hi > max_delta:
            raise ChaosSearchError(
                f"no step size below {max_delta} drives the left maximum to 1"
            )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = overshoot(mid)
        if abs(val) <= tol:
            return mid
        if val < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Scrambled-pair diagnostic


def scrambled_pair_stat(m: UpdateMap, x: float, x_prime: float,
                        horizon: int) -> tuple:
    """Finite-horizon proxy for the scrambled-pair condition.

    Returns (min over n <= horizon of |f^n(x) - f^n(x')|, max over the
    final half of the horizon).  A small first value with a large second is
    the expected signature of a scrambled pair; this is an indicator, not
    a proof.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    a = iterate(m, x, horizon).samples
    b = iterate(m, x_prime, horizon).samples
    gaps = np.abs(a[1:] - b[1:])
    tail = gaps[horizon // 2:]
    return float(np.min(gaps)), float(np.max(tail))
