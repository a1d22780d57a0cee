from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .records import TunerError


@dataclass(frozen=True)
class Rung:
    n: int
    budget: float
    keep: int


@dataclass(frozen=True)
class Bracket:
    s: int
    n: int
    r: float
    rungs: tuple[Rung, ...]

    @property
    def cost(self) -> float:
        return math.fsum(rung.n * rung.budget for rung in self.rungs)


@dataclass(frozen=True)
class BracketSchedule:
    R: float
    eta: int
    s_max: int
    brackets: tuple[Bracket, ...]

    @property
    def total_budget(self) -> float:
        return math.fsum(rung.n * rung.budget for b in self.brackets for rung in b.rungs)

    def fractions(self) -> list[float]:
        """Distinct rung budgets as fractions of ``R``, ascending."""
        return sorted({rung_fraction(self.eta, b.s, i) for b in self.brackets for i in range(len(b.rungs))})

    def table(self) -> str:
        header = "  ".join(f"s={b.s:<11d}" for b in self.brackets)
        lines = ["i   " + header, "    " + "  ".join(f"{'n_i':>5s} {'r_i':>7s}" for _ in self.brackets)]
        for i in range(self.s_max + 1):
            cells = []
            for b in self.brackets:
                if i < len(b.rungs):
                    cells.append(f"{b.rungs[i].n:5d} {b.rungs[i].budget:7.2f}")
                else:
                    cells.append(" " * 13)
            lines.append(f"{i:<4d}" + "  ".join(cells).rstrip())
        lines.append(f"total budget: {self.total_budget:.4f}")
        return "\n".join(lines)


def _s_max(R, eta) -> int:
    # Integer search avoids floating error in log(R)/log(eta) at exact powers.
    s = 0
    while Fraction(eta) ** (s + 1) <= Fraction(R):
        s += 1
    return s


def rung_fraction(eta: int, s: int, i: int) -> float:
    """Budget of rung ``i`` in bracket ``s`` as a fraction of R, correctly rounded."""
    return float(Fraction(eta) ** (i - s))


def bracket_schedule(R: float, eta: int = 3) -> BracketSchedule:
    """Hyperband brackets for maximum budget ``R`` and increase ratio ``eta``.

    Rung budgets stay real-valued (``R * eta**(i - s)``), rung sizes are
    ``floor(n * eta**-i)`` and each rung keeps ``floor(n_i / eta)``.
    """
    if isinstance(eta, bool) or int(eta) != eta or eta < 2:
        raise TunerError(f"eta must be an integer >= 2, got {eta}")
    if not R >= 1:
        raise TunerError(f"R must be >= 1, got {R}")
    eta = int(eta)
    s_max = _s_max(R, eta)
    brackets = []
    for s in range(s_max, -1, -1):
        n = math.ceil(Fraction(s_max + 1, s + 1) * Fraction(eta) ** s)
        rungs = []
        for i in range(s + 1):
            n_i = n // eta**i
            budget = float(Fraction(R) * Fraction(eta) ** (i - s))
            rungs.append(Rung(n_i, budget, n_i // eta))
        brackets.append(Bracket(s, n, float(Fraction(R) / Fraction(eta) ** s), tuple(rungs)))
    return BracketSchedule(float(R), eta, s_max, tuple(brackets))
