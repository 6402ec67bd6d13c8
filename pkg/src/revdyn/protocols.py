"""Revision protocols for 2x2 anti-coordination games.

A protocol is a pair of conditional switch rates rho_AB, rho_BA on [0, 1].
Imitative protocols factor through conditional imitation rates,
rho_AB(x) = (1 - x) r_AB(x) and rho_BA(x) = x r_BA(x), and fix the
monomorphic states 0 and 1 of the induced dynamics; innovative (direct)
protocols instead satisfy the sign condition: the switch rate toward a
strategy is positive exactly when that strategy pays strictly more.

Built-in families:

* ``ppi`` -- pairwise proportional imitation, rho_ij = x_j [u_j - u_i]_+.
* ``pc`` -- pairwise comparison, rho_ij = [u_j - u_i]_+.
* ``perturbed_ppi`` -- PPI with the two imitation rates rescaled by eta
  (toward B) and xi (toward A).
* ``truncated_ppi`` -- perturbed PPI with one imitation rate frozen at its
  value at the truncation level gamma.
* ``innovative_constructed`` / ``imitative_constructed`` -- the explicit
  Lipschitz rate constructions whose unit-step update maps are the
  piecewise-linear bimodal maps with certified chaotic dynamics.

Every built-in protocol carries, alongside its closed-form rates, the exact
piecewise-polynomial displacement d(x) = (1 - x) rho_BA(x) - x rho_AB(x),
so the induced update map x + delta d(x) has an exact representation for
every step size delta.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .games import AntiCoordinationGame, reflected_game
from .piecewise import Piecewise, PiecewisePoly, constant

IMITATIVE = "imitative"
INNOVATIVE = "innovative"

MEMBERSHIP_RTOL = 1e-12


class ProtocolError(ValueError):
    """Raised for parameters outside the admissible ranges of a family."""


@dataclass(frozen=True)
class RevisionProtocol:
    """Immutable pair of switch rates, optionally with imitation rates.

    ``displacement`` is the exact piecewise-polynomial form of
    (1 - x) rho_BA(x) - x rho_AB(x) when the family provides one; the
    update map for step delta is then x + delta * displacement(x) exactly.
    """

    kind: str
    game: AntiCoordinationGame
    rho_ab: Piecewise
    rho_ba: Piecewise
    family: str
    r_ab: Optional[Piecewise] = None
    r_ba: Optional[Piecewise] = None
    displacement: Optional[PiecewisePoly] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (IMITATIVE, INNOVATIVE):
            raise ProtocolError(f"unknown protocol kind {self.kind!r}")
        if self.kind == IMITATIVE and (self.r_ab is None or self.r_ba is None):
            raise ProtocolError("imitative protocols need imitation rates r_AB, r_BA")

    @property
    def equilibrium(self) -> float:
        return self.game.equilibrium

    def displacement_at(self, x):
        """(1 - x) rho_BA(x) - x rho_AB(x), evaluated from the closed forms."""
        x = np.asarray(x, dtype=float)
        return (1.0 - x) * self.rho_ba(x) - x * self.rho_ab(x)

    def to_json(self) -> dict:
        doc = {"kind": self.family, "game": self.game.to_json()}
        doc.update(
            {k: v for k, v in self.params.items() if isinstance(v, (int, float))}
        )
        return doc


# ---------------------------------------------------------------------------
# PPI / perturbed PPI / truncated PPI


def eta_max_perturbed(game: AntiCoordinationGame) -> float:
    """Largest eta keeping the perturbed-PPI map inside [0, 1]: 4p/((1-p)^2 (b-d))."""
    p = game.equilibrium
    return 4.0 * p / ((1.0 - p) ** 2 * game.payoff_scale)

def xi_max_perturbed(game: AntiCoordinationGame) -> float:
    """Largest xi keeping the perturbed-PPI map inside [0, 1]: 4/(p (b-d))."""
    return 4.0 / (game.equilibrium * game.payoff_scale)


def eta_max_truncated(game: AntiCoordinationGame) -> float:
    """Largest eta for the truncated family at gamma = p + p^2/2."""
    p = game.equilibrium
    return 4.0 / (p * (2.0 - 2.0 * p - p * p) * game.payoff_scale)


def in_delta_p(game, eta, xi, delta, rtol=MEMBERSHIP_RTOL) -> bool:
    """Membership of (eta, xi, delta) in the perturbed-PPI admissible set."""
    if min(eta, xi, delta) <= 0.0:
        return False
    return (
        eta <= eta_max_perturbed(game) * (1.0 + rtol)
        and xi <= xi_max_perturbed(game) * (1.0 + rtol)
        and delta <= 1.0 + rtol
    )


def in_delta_star_p(game, eta, xi, delta, rtol=MEMBERSHIP_RTOL) -> bool:
    """Admissible set of the truncated family at gamma = p + p^2/2, p < 1/2."""
    p = game.equilibrium
    if not 0.0 < p < 0.5:
        raise ProtocolError(f"truncated admissible set needs p in (0, 1/2), got p={p}")
    if min(eta, xi, delta) <= 0.0:
        return False
    return (
        eta <= eta_max_truncated(game) * (1.0 + rtol)
        and xi <= xi_max_perturbed(game) * (1.0 + rtol)
        and delta <= 1.0 + rtol
    )


def in_gamma_star_p(game, eta, xi, delta, rtol=MEMBERSHIP_RTOL) -> bool:
    """Admissible set of the reflected truncated family, for p > 1/2."""
    p = game.equilibrium
    if not 0.5 < p < 1.0:
        raise ProtocolError(f"reflected truncated set needs p in (1/2, 1), got p={p}")
    if min(eta, xi, delta) <= 0.0:
        return False
    s = game.payoff_scale
    eta_bound = 4.0 * p / ((1.0 - p) ** 2 * s)
    xi_bound = 4.0 * p / ((1.0 - p) ** 2 * (-1.0 + 4.0 * p - p * p) * s)
    return (
        eta <= eta_bound * (1.0 + rtol)
        and xi <= xi_bound * (1.0 + rtol)
        and delta <= 1.0 + rtol
    )


def perturbed_ppi_protocol(game, eta: float = 1.0, xi: float = 1.0) -> RevisionProtocol:
    """PPI with imitation rates rescaled by eta (A -> B) and xi (B -> A).

    r_AB(x) = eta (b-d)/p [x - p]_+ and r_BA(x) = xi (b-d)/p [p - x]_+;
    eta = xi = 1 recovers plain PPI.
    """
    if eta <= 0.0 or xi <= 0.0:
        raise ProtocolError(f"multipliers must be positive, got eta={eta}, xi={xi}")
    p = game.equilibrium
    k = game.payoff_scale / p
    r_ab = Piecewise((0.0, p, 1.0), (constant(0.0), lambda x: eta * k * (x - p)))
    r_ba = Piecewise((0.0, p, 1.0), (lambda x: xi * k * (p - x), constant(0.0)))
    rho_ab = Piecewise(
        (0.0, p, 1.0), (constant(0.0), lambda x: (1.0 - x) * eta * k * (x - p))
    )
    rho_ba = Piecewise(
        (0.0, p, 1.0), (lambda x: x * xi * k * (p - x), constant(0.0))
    )
    # displacement x(1-x)(r_BA - r_AB) = coef * x(1-x)(p-x) on both sides:
    # the factor (p-x) already carries the sign flip across p
    disp = PiecewisePoly(
        (0.0, p, 1.0),
        np.array(
            [_cubic_displacement(xi * k, p), _cubic_displacement(eta * k, p)]
        ),
    )
    family = "ppi" if eta == 1.0 and xi == 1.0 else "perturbed_ppi"
    return RevisionProtocol(
        kind=IMITATIVE,
        game=game,
        rho_ab=rho_ab,
        rho_ba=rho_ba,
        r_ab=r_ab,
        r_ba=r_ba,
        displacement=disp,
        family=family,
        params={"eta": eta, "xi": xi},
    )


def _cubic_displacement(coef: float, p: float):
    # coefficients of coef * x (1 - x)(p - x) = coef (p x - (p+1) x^2 + x^3)
    return [0.0, coef * p, -coef * (p + 1.0), coef]


def _quadratic_displacement(coef: float):
    # coefficients of coef * x (1 - x), padded to cubic width
    return [0.0, coef, -coef, 0.0]


def ppi_protocol(game) -> RevisionProtocol:
    """Pairwise proportional imitation: rho_ij(x) = x_j [u_j(x) - u_i(x)]_+."""
    return perturbed_ppi_protocol(game, 1.0, 1.0)


def pairwise_comparison_protocol(game) -> RevisionProtocol:
    """Pairwise comparison: rho_ij(x) = [u_j(x) - u_i(x)]_+ (innovative)."""
    p = game.equilibrium
    k = game.payoff_scale / p
    rho_ab = Piecewise((0.0, p, 1.0), (constant(0.0), lambda x: k * (x - p)))
    rho_ba = Piecewise((0.0, p, 1.0), (lambda x: k * (p - x), constant(0.0)))
    # (1-x) k (p-x) on the left, -x k (x-p) on the right: quadratics
    disp = PiecewisePoly(
        (0.0, p, 1.0),
        np.array(
            [
                [k * p, -k * (p + 1.0), k, 0.0],
                [0.0, k * p, -k, 0.0],
            ]
        ),
    )
    return RevisionProtocol(
        kind=INNOVATIVE,
        game=game,
        rho_ab=rho_ab,
        rho_ba=rho_ba,
        displacement=disp,
        family="pc",
        params={},
    )


def truncated_ppi_protocol(game, eta, xi, gamma) -> RevisionProtocol:
    """Perturbed PPI with one imitation rate frozen beyond the level gamma.

    For gamma > p the rate toward B is held at r_AB(gamma) on [gamma, 1];
    for gamma < p the rate toward A is held at r_BA(gamma) on [0, gamma].
    gamma in {0, 1} reduces exactly to the perturbed protocol; gamma = p is
    excluded (it would freeze the rate into a piecewise constant).
    """
    if eta <= 0.0 or xi <= 0.0:
        raise ProtocolError(f"multipliers must be positive, got eta={eta}, xi={xi}")
    if not 0.0 <= gamma <= 1.0:
        raise ProtocolError(f"truncation level must lie in [0, 1], got {gamma}")
    p = game.equilibrium
    if gamma == p:
        raise ProtocolError(
            "gamma = p excluded: truncating at the equilibrium degenerates the "
            "rate to a piecewise constant"
        )
    if gamma in (0.0, 1.0):
        base = perturbed_ppi_protocol(game, eta, xi)
        return RevisionProtocol(
            kind=IMITATIVE,
            game=game,
            rho_ab=base.rho_ab,
            rho_ba=base.rho_ba,
            r_ab=base.r_ab,
            r_ba=base.r_ba,
            displacement=base.displacement,
            family="truncated_ppi",
            params={"eta": eta, "xi": xi, "gamma": gamma},
        )
    k = game.payoff_scale / p
    if gamma > p:
        plateau = eta * k * (gamma - p)
        r_ab = Piecewise(
            (0.0, p, gamma, 1.0),
            (constant(0.0), lambda x: eta * k * (x - p), constant(plateau)),
        )
        r_ba = Piecewise((0.0, p, 1.0), (lambda x: xi * k * (p - x), constant(0.0)))
        disp = PiecewisePoly(
            (0.0, p, gamma, 1.0),
            np.array(
                [
                    _cubic_displacement(xi * k, p),
                    _cubic_displacement(eta * k, p),
                    _quadratic_displacement(-plateau),
                ]
            ),
        )
    else:
        plateau = xi * k * (p - gamma)
        r_ab = Piecewise((0.0, p, 1.0), (constant(0.0), lambda x: eta * k * (x - p)))
        r_ba = Piecewise(
            (0.0, gamma, p, 1.0),
            (constant(plateau), lambda x: xi * k * (p - x), constant(0.0)),
        )
        disp = PiecewisePoly(
            (0.0, gamma, p, 1.0),
            np.array(
                [
                    _quadratic_displacement(plateau),
                    _cubic_displacement(xi * k, p),
                    _cubic_displacement(eta * k, p),
                ]
            ),
        )
    rho_ab = Piecewise(r_ab.breakpoints, tuple(
        (lambda f: (lambda x: (1.0 - np.asarray(x)) * f(x)))(f) for f in r_ab.funcs
    ))
    rho_ba = Piecewise(r_ba.breakpoints, tuple(
        (lambda f: (lambda x: np.asarray(x) * f(x)))(f) for f in r_ba.funcs
    ))
    return RevisionProtocol(
        kind=IMITATIVE,
        game=game,
        rho_ab=rho_ab,
        rho_ba=rho_ba,
        r_ab=r_ab,
        r_ba=r_ba,
        displacement=disp,
        family="truncated_ppi",
        params={"eta": eta, "xi": xi, "gamma": gamma},
    )


# ---------------------------------------------------------------------------
# Explicit chaotic constructions


def innovative_beta_ranges(p: float) -> dict:
    """Admissible (beta2, beta3) for the innovative construction at p < 1/2."""
    return {
        "beta2": (1.0 / (1.0 - 2.0 * p), 2.0 * (1.0 - p) / (1.0 - 2.0 * p)),
        "beta3": (-p / ((1.0 - 2.0 * p) * (1.0 - p)), 0.0),
    }


def innovative_chaotic_protocol(game, beta2, beta3) -> RevisionProtocol:
    """Innovative Lipschitz switch rates whose unit-step map is piecewise
    linear and bimodal with critical points p/(1-p) and 2p.

    Defined for p in (0, 1/2); reflect for p > 1/2.  The map decreases on
    the outer laps, fixes only p, and p is repelling (first-lap slope
    (p-1)/p < -1).
    """
    p = game.equilibrium
    if not 0.0 < p < 0.5:
        raise ProtocolError(
            f"innovative construction needs p in (0, 1/2), got p={p}; "
            "use reflect_protocol for p > 1/2"
        )
    ranges = innovative_beta_ranges(p)
    lo2, hi2 = ranges["beta2"]
    if not lo2 < beta2 < hi2:
        raise ProtocolError(f"beta2={beta2} outside ({lo2}, {hi2})")
    lo3, hi3 = ranges["beta3"]
    if not lo3 <= beta3 < hi3:
        raise ProtocolError(f"beta3={beta3} outside [{lo3}, {hi3})")
    cl = p / (1.0 - p)
    cr = 2.0 * p
    mid_height = beta2 * p * (1.0 - 2.0 * p) / (1.0 - p)  # value of the map at cr

    rho_ab = Piecewise(
        (0.0, p, cl, cr, 1.0),
        (
            constant(0.0),
            lambda x: (x - p) / (p * x),
            lambda x: 1.0 - beta2 * (1.0 - p / ((1.0 - p) * x)),
            lambda x: 1.0 - beta3 * (1.0 - cr / x) - mid_height / x,
        ),
    )
    rho_ba = Piecewise(
        (0.0, p, 1.0),
        (lambda x: (p - x) / (p * (1.0 - x)), constant(0.0)),
    )
    # unit-step map: [(p-1)/p x + 1, beta2 (x - cl), beta3 (x - cr) + mid_height]
    disp = PiecewisePoly(
        (0.0, cl, cr, 1.0),
        np.array(
            [
                [1.0, -1.0 / p],
                [-beta2 * cl, beta2 - 1.0],
                [mid_height - beta3 * cr, beta3 - 1.0],
            ]
        ),
    )
    return RevisionProtocol(
        kind=INNOVATIVE,
        game=game,
        rho_ab=rho_ab,
        rho_ba=rho_ba,
        displacement=disp,
        family="innovative_constructed",
        params={"beta2": beta2, "beta3": beta3},
    )


def imitative_chaotic_protocol(game) -> RevisionProtocol:
    """Imitative Lipschitz rates whose unit-step map is piecewise linear and
    bimodal with critical points p/2 and p + p^2/2, fixing {0, p, 1}.

    Defined for p in (0, 1/2); reflect for p > 1/2.
    """
    p = game.equilibrium
    if not 0.0 < p < 0.5:
        raise ProtocolError(
            f"imitative construction needs p in (0, 1/2), got p={p}; "
            "use reflect_protocol for p > 1/2"
        )
    cl = p / 2.0
    cr = p + p * p / 2.0
    q = p * p + 2.0 * p - 2.0  # negative for p < sqrt(3) - 1

    r_ba = Piecewise(
        (0.0, cl, p, 1.0),
        (
            lambda x: (2.0 - p) / (p * (1.0 - x)),
            lambda x: (x - p) * (p - 2.0) / (p * x * (1.0 - x)),
            constant(0.0),
        ),
    )
    r_ab = Piecewise(
        (0.0, p, cr, 1.0),
        (
            constant(0.0),
            lambda x: (x - p) * (2.0 - p) / (p * x * (1.0 - x)),
            lambda x: p * (p - 2.0) / (q * x),
        ),
    )
    rho_ba = Piecewise(
        (0.0, cl, p, 1.0),
        (
            lambda x: (2.0 - p) * x / (p * (1.0 - x)),
            lambda x: (x - p) * (p - 2.0) / (p * (1.0 - x)),
            constant(0.0),
        ),
    )
    rho_ab = Piecewise(
        (0.0, p, cr, 1.0),
        (
            constant(0.0),
            lambda x: (x - p) * (2.0 - p) / (p * x),
            lambda x: p * (p - 2.0) * (1.0 - x) / (q * x),
        ),
    )
    # unit-step map: [2x/p, -2(1-p)/p x + 2 - p, 2(1-p^2)/q (1-x) + 1]
    s3 = -2.0 * (1.0 - p * p) / q
    disp = PiecewisePoly(
        (0.0, cl, cr, 1.0),
        np.array(
            [
                [0.0, 2.0 / p - 1.0],
                [2.0 - p, -2.0 * (1.0 - p) / p - 1.0],
                [1.0 - s3, s3 - 1.0],
            ]
        ),
    )
    return RevisionProtocol(
        kind=IMITATIVE,
        game=game,
        rho_ab=rho_ab,
        rho_ba=rho_ba,
        r_ab=r_ab,
        r_ba=r_ba,
        displacement=disp,
        family="imitative_constructed",
        params={},
    )


# ---------------------------------------------------------------------------
# Reflection


def reflect_protocol(protocol: RevisionProtocol) -> RevisionProtocol:
    """Protocol of the reflected game (payoffs (d, c, b, a), equilibrium 1-p).

    Swap-and-flip of the rates: rho~_AB(x) = rho_BA(1-x) and
    rho~_BA(x) = rho_AB(1-x), and the same swap on imitation rates.  The
    induced map is topologically conjugate to the original through
    x -> 1 - x; reflecting twice restores the original rates.
    """
    g = reflected_game(protocol.game)
    disp = None
    if protocol.displacement is not None:
        disp = protocol.displacement.reflected_negated()
    family = protocol.family
    family = family[: -len("~reflected")] if family.endswith("~reflected") else family + "~reflected"
    return RevisionProtocol(
        kind=protocol.kind,
        game=g,
        rho_ab=protocol.rho_ba.reflected(),
        rho_ba=protocol.rho_ab.reflected(),
        r_ab=None if protocol.r_ba is None else protocol.r_ba.reflected(),
        r_ba=None if protocol.r_ab is None else protocol.r_ab.reflected(),
        displacement=disp,
        family=family,
        params=dict(protocol.params),
    )


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ProtocolValidation:
    """Grid report: sign-condition and negativity violations, Lipschitz bound."""

    grid_size: int
    sign_violations: list
    negativity_violations: list
    nonfinite: list
    lipschitz_estimate: float

    @property
    def ok(self) -> bool:
        return not (self.sign_violations or self.negativity_violations or self.nonfinite)


def validate_protocol(protocol, game=None, grid_size: int = 10_001,
                      atol: float = 1e-9) -> ProtocolValidation:
    """Check the defining sign conditions of the protocol on a grid.

    Innovative: rho toward a strategy must be positive exactly where that
    strategy pays strictly more.  Imitative: the net imitation rate must
    favour the better-paying strategy.  Also flags negative or non-finite
    rates and reports an empirical Lipschitz constant (max finite-difference
    slope of the rates at grid midpoints).
    """
    if game is None:
        game = protocol.game
    x = np.linspace(0.0, 1.0, grid_size)
    gap = game.payoff_gap(x)  # u_B - u_A, positive right of p
    rho_ab = np.asarray(protocol.rho_ab(x), dtype=float)
    rho_ba = np.asarray(protocol.rho_ba(x), dtype=float)

    sign_violations = []
    negativity = []
    nonfinite = []
    for name, values in (("rho_AB", rho_ab), ("rho_BA", rho_ba)):
        bad = ~np.isfinite(values)
        nonfinite.extend((name, float(xi)) for xi in x[bad])
        neg = values < -atol
        negativity.extend((name, float(xi), float(v)) for xi, v in zip(x[neg], values[neg]))

    if protocol.kind == INNOVATIVE:
        # rho_AB > 0 iff u_B > u_A;  rho_BA > 0 iff u_A > u_B
        bad_ab = ((gap > atol) & (rho_ab <= 0.0)) | ((gap <= 0.0) & (rho_ab > atol))
        bad_ba = ((-gap > atol) & (rho_ba <= 0.0)) | ((-gap <= 0.0) & (rho_ba > atol))
        sign_violations.extend(("rho_AB", float(v)) for v in x[bad_ab])
        sign_violations.extend(("rho_BA", float(v)) for v in x[bad_ba])
        slopes = [rho_ab, rho_ba]
    else:
        r_ab = np.asarray(protocol.r_ab(x), dtype=float)
        r_ba = np.asarray(protocol.r_ba(x), dtype=float)
        net = r_ab - r_ba  # favours B when positive
        bad = ((gap > atol) & (net < -atol)) | ((gap < -atol) & (net > atol))
        sign_violations.extend(("net_imitation", float(v)) for v in x[bad])
        slopes = [r_ab, r_ba]

    dx = np.diff(x)
    lipschitz = max(
        float(np.max(np.abs(np.diff(values)) / dx)) for values in slopes
    )
    return ProtocolValidation(
        grid_size=grid_size,
        sign_violations=sign_violations,
        negativity_violations=negativity,
        nonfinite=nonfinite,
        lipschitz_estimate=lipschitz,
    )
