"""2x2 symmetric anti-coordination games and their interior equilibrium.

The payoff matrix is

        A    B
    A   a    b
    B   c    d

with ``a < c`` and ``d < b``, so each strategy earns less as its own share
of the population grows.  The state of the population is summarised by the
share ``x`` of A-strategists; payoffs are affine in ``x`` and the unique
interior Nash equilibrium is ``p = (b - d) / (c - a + b - d)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

REL_TOL = 1e-12


class GameError(ValueError):
    """Raised for payoff matrices that are not strictly anti-coordination."""


@dataclass(frozen=True)
class AntiCoordinationGame:
    """Immutable payoff matrix (a, b, c, d) with a < c and d < b.

    The equilibrium share ``p`` is computed once at construction and cached
    on the instance; all derived formulas reference it.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            value = getattr(self, name)
            object.__setattr__(self, name, float(value))
        if not self.a < self.c:
            raise GameError(
                f"not anti-coordination: need a < c, got a={self.a}, c={self.c}"
            )
        if not self.d < self.b:
            raise GameError(
                f"not anti-coordination: need d < b, got d={self.d}, b={self.b}"
            )
        p = (self.b - self.d) / (self.c - self.a + self.b - self.d)
        object.__setattr__(self, "_p", p)

    @property
    def equilibrium(self) -> float:
        """Interior Nash equilibrium share of A-strategists, in (0, 1)."""
        return self._p

    @property
    def payoff_scale(self) -> float:
        """The gap b - d (> 0); sets the scale of payoff differences."""
        return self.b - self.d

    def payoff_a(self, x):
        """Payoff to A-strategists at state x: (a - b) x + b."""
        return (self.a - self.b) * x + self.b

    def payoff_b(self, x):
        """Payoff to B-strategists at state x: (c - d) x + d."""
        return (self.c - self.d) * x + self.d

    def payoff_gap(self, x):
        """u_B(x) - u_A(x); positive exactly when x > p."""
        return self.payoff_b(x) - self.payoff_a(x)

    def mean_payoff(self, x):
        """Population mean payoff x u_A(x) + (1 - x) u_B(x)."""
        return x * self.payoff_a(x) + (1.0 - x) * self.payoff_b(x)

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}


def nash_equilibrium(game: AntiCoordinationGame) -> float:
    """Equilibrium share p = (b - d)/(c - a + b - d)."""
    return game.equilibrium


def game_with_equilibrium(p: float, payoff_scale: float = 1.0) -> AntiCoordinationGame:
    """Canonical game (0, s, s(1-p)/p, 0) whose equilibrium is ``p``.

    ``payoff_scale`` is the gap b - d = s.
    """
    if not 0.0 < p < 1.0:
        raise GameError(f"equilibrium must lie in (0, 1), got {p}")
    if payoff_scale <= 0.0:
        raise GameError(f"payoff scale must be positive, got {payoff_scale}")
    s = float(payoff_scale)
    return AntiCoordinationGame(0.0, s, s * (1.0 - p) / p, 0.0)


def reflected_game(game: AntiCoordinationGame) -> AntiCoordinationGame:
    """The game with payoff entries (d, c, b, a); its equilibrium is 1 - p."""
    return AntiCoordinationGame(game.d, game.c, game.b, game.a)


def game_from_json(source) -> AntiCoordinationGame:
    """Load a game from a dict, JSON string, or path to a JSON file.

    The descriptor is an object with numeric keys "a", "b", "c", "d".
    Invariant violations report which inequality failed.
    """
    if isinstance(source, dict):
        data = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            data = json.loads(text)
        else:
            with open(text) as fh:
                data = json.load(fh)
    missing = [k for k in ("a", "b", "c", "d") if k not in data]
    if missing:
        raise GameError(f"game descriptor missing keys: {missing}")
    return AntiCoordinationGame(data["a"], data["b"], data["c"], data["d"])
