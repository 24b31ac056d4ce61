"""Piecewise-exponential concession laws with an atom at time zero.

A law describes a whole population (rational types and commitment types)
sorted by concession order: positions u in [0, atom) concede at t=0, later
positions concede when the survival function falls to 1-u, and positions
at or above 1-floor never concede.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class ConcessionLaw:
    atom: float
    breaks: tuple = (0.0,)
    hazards: tuple = ()

    def __post_init__(self):
        if not (0.0 <= self.atom <= 1.0 + 1e-12):
            raise ValueError("atom must lie in [0, 1]")
        if len(self.breaks) != len(self.hazards) + 1:
            raise ValueError("need one more break than hazards")
        if any(h < 0 for h in self.hazards):
            raise ValueError("hazards must be nonnegative")
        if any(b < a for a, b in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breaks must be nondecreasing")
        object.__setattr__(self, "atom", min(float(self.atom), 1.0))

    @classmethod
    def never(cls):
        return cls(0.0)

    @classmethod
    def immediate(cls, mass):
        return cls(float(mass))

    @property
    def b(self):
        return np.asarray(self.breaks, dtype=float)

    @property
    def h(self):
        return np.asarray(self.hazards, dtype=float)

    @property
    def end(self):
        return float(self.breaks[-1])

    def log_survival_at_breaks(self):
        with np.errstate(divide="ignore"):
            base = np.log1p(-self.atom) if self.atom < 1 else -np.inf
        return base - np.concatenate(([0.0], np.cumsum(self.h * np.diff(self.b))))

    def survival(self, t):
        """P(not conceded by t), t > 0 (the atom counts as conceded)."""
        t = np.asarray(t, dtype=float)
        if not self.hazards:
            return np.full(t.shape, 1.0 - self.atom)
        b, h = self.b, self.h
        logs = self.log_survival_at_breaks()
        k = np.clip(np.searchsorted(b, t, side="right") - 1, 0, h.size - 1)
        dt = np.clip(np.minimum(t, b[-1]) - b[k], 0.0, None)
        return np.exp(logs[k] - h[k] * dt)

    @property
    def floor(self):
        """Mass that never concedes."""
        return float(np.exp(self.log_survival_at_breaks()[-1]))

    def discounted_mass(self, r, t=np.inf):
        """atom + integral over (0, t] of e^{-rs} dF(s)."""
        return float(_kernels.concession_values(np.array([t if t > 0 else 1e-300]), self.atom,
                                                self.b, self.h, 1.0, 0.0, 0.0, r)[0])

    def times(self, u):
        return _kernels.inverse_survival(u, self.atom, self.b, self.h)

    def position(self, t):
        """Population position reached at time t (1 - survival)."""
        return 1.0 - self.survival(t)


def concession_payoffs(times, opponent, win, lose, tie, r):
    """Payoff from conceding at each of `times` against `opponent`."""
    return _kernels.concession_values(np.atleast_1d(times), opponent.atom, opponent.b,
                                      opponent.h, win, lose, tie, r)


def band_expectation(own, lo, hi, fn, extra_breaks=()):
    """Mean of fn(t) over the concession times of positions [lo, hi) of `own`.

    fn maps an array of times to values; it must accept 0 and inf.  The
    integral is split at every break (own and extra) and evaluated with
    Gauss-Legendre nodes, so piecewise-smooth integrands are exact to
    rounding.
    """
    mass = hi - lo
    if mass <= 0:
        return float("nan")
    total = 0.0
    a0 = min(max(own.atom - lo, 0.0), mass)
    if a0 > 0:
        total += a0 * float(fn(np.array([0.0]))[0])
    floor_pos = 1.0 - own.floor
    never = hi - max(lo, floor_pos)
    if never > 0:
        total += never * float(fn(np.array([np.inf]))[0])
    u0 = max(lo, own.atom)
    u1 = min(hi, floor_pos)
    if u1 > u0 and own.hazards:
        t0, t1 = own.times(np.array([u0, np.nextafter(u1, 0.0)]))
        t1 = min(t1, own.end)
        cuts = sorted({t0, t1} | {float(x) for x in list(own.breaks) + list(extra_breaks)
                                  if t0 < x < t1})
        b, h = own.b, own.h
        for a, c in zip(cuts, cuts[1:]):
            if c <= a:
                continue
            mid = 0.5 * (a + c)
            k = min(max(int(np.searchsorted(b, mid, side="right")) - 1, 0), h.size - 1)
            if h[k] == 0:
                continue
            x = 0.5 * (c - a) * _GL_X + mid
            dens = h[k] * own.survival(x)
            total += 0.5 * (c - a) * float(np.sum(_GL_W * dens * fn(x)))
    return total / mass
