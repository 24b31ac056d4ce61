"""Best-response oracle for strategy profiles and indifference checks for
concession-game solutions.

Deviations cover the opening offer (buyer), the counteroffer (each seller
type, after every buyer offer the rational buyer makes), the concession
time in every resulting war of attrition and, with adoption costs, the
technology choice.  Mid-game offer revisions are not part of the model.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .laws import concession_payoffs
from .params import PriceGrid
from .sim import _key
from .woa import off_path_weights, woa_values

N_TIMES = 1000
DEFAULT_TOL = 5e-3


def time_grid(sol, n=N_TIMES):
    """Concession times to scan: 0, 0+, a geometric grid on (0, 2T], breaks and never."""
    ends = [x for x in (sol.T_end, sol.buyer_law.end, sol.seller_law.end) if 0 < x < math.inf]
    h = 2.0 * max(ends) if ends else 1.0
    pts = np.concatenate(([0.0, 1e-300], np.geomspace(h * 1e-6, h, n),
                          sol.buyer_law.breaks, sol.seller_law.breaks, [np.inf]))
    return np.unique(pts)


def best_concession(sol, who, j=None, times=None):
    """(best payoff, time) over the scanned concession times.

    who="buyer" or "seller" (type index j).
    """
    t = time_grid(sol) if times is None else times
    p_b, p_s = sol.p_b, sol.p_s
    mid = 0.5 * (p_b + p_s)
    if who == "buyer":
        u = concession_payoffs(t, sol.seller_law, 1 - p_b, 1 - p_s, 1 - mid, sol.r_b)
    else:
        th = sol.costs[j]
        u = concession_payoffs(t, sol.buyer_law, p_s - th, p_b - th, mid - th, sol.r_s)
    k = int(np.argmax(u))
    return float(u[k]), float(t[k])


@dataclass
class GapReport:
    gains: dict  # "buyer": gain, "seller": {cost: gain}, "adoption": gain or None
    argmax: dict  # player -> description of the most profitable deviation
    policy: str
    tolerance: float
    passed: bool
    gap: float  # largest gain over players and types
    eps: float | None = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        g = dict(self.gains)
        g["seller"] = {repr(k): v for k, v in g["seller"].items()}
        a = dict(self.argmax)
        a["seller"] = {repr(k): v for k, v in a.get("seller", {}).items()}
        return {"gains": g, "argmax": a, "policy": self.policy, "tolerance": self.tolerance,
                "passed": self.passed, "gap": self.gap, "eps": self.eps, "notes": self.notes}

    @classmethod
    def from_dict(cls, d):
        g = dict(d["gains"])
        g["seller"] = {float(k): v for k, v in g["seller"].items()}
        a = dict(d["argmax"])
        a["seller"] = {float(k): v for k, v in a.get("seller", {}).items()}
        return cls(g, a, d["policy"], d["tolerance"], d["passed"], d["gap"], d.get("eps"),
                   list(d.get("notes", [])))

    def to_json(self):
        return json.dumps(self.to_dict())


def _onehot(k):
    def policy(costs, p_s):
        w = np.zeros(len(costs))
        w[k] = 1.0
        return w
    return policy


def _grid_points(grid, fallback):
    if grid is None:
        return sorted(fallback)
    if isinstance(grid, PriceGrid):
        return list(grid.points)
    return sorted(float(x) for x in grid)


class _Oracle:
    def __init__(self, profile, policy):
        self.pr = profile
        self.policy = policy
        self._extra = {}

    def solution(self, p_b, p_s, policy=None):
        """Solution on (p_b, p_s); off-path demands use `policy` when given."""
        if policy is None:
            return self.pr.solution(p_b, p_s)
        key = (_key(p_b), _key(p_s), id(policy))
        if key not in self._extra:
            self._extra[key] = self.pr.solve(p_b, p_s, self.pr.beliefs(p_b, p_s, policy))
        return self._extra[key]

    def responses(self, p_b):
        """Demand p_s -> (rational mass, commitment mass) after buyer offer p_b."""
        pr = self.pr
        out = {}
        for j in range(pr.n):
            for p_s, w in pr.seller_offer(j, p_b).items():
                r, c = out.get(p_s, (0.0, 0.0))
                out[p_s] = (r + (1 - pr.eps_s) * pr.pi[j] * w, c)
        for p_s, w in pr.mu_s.items():
            r, c = out.get(p_s, (0.0, 0.0))
            out[p_s] = (r, c + pr.eps_s * w)
        return out

    def buyer_value(self, p_b, best):
        """Rational buyer's payoff from offering p_b; best=True optimises concession times."""
        total = 0.0
        for p_s, (rat, com) in self.responses(p_b).items():
            mass = rat + com
            if mass <= 0:
                continue
            if p_s <= p_b + 1e-12:
                v = 1 - p_b
            elif rat <= 0:
                v = 1 - p_s  # only commitment types: concede at once
            else:
                sol = self.solution(p_b, p_s)
                v = best_concession(sol, "buyer")[0] if best else woa_values(sol)[0]
            total += mass * v
        return total

    def on_path_seller(self, j, p_b):
        th = self.pr.costs[j]
        v = 0.0
        for p_s, w in self.pr.seller_offer(j, p_b).items():
            if p_s <= p_b + 1e-12:
                v += w * (p_b - th)
            else:
                v += w * woa_values(self.pr.solution(p_b, p_s))[1][j]
        return v

    def seller_deviations(self, p_b, grid, values):
        """Best payoff per type after p_b, and the demand achieving it."""
        pr = self.pr
        n = pr.n
        best = [(p_b - th, "accept") for th in pr.costs]
        resp = self.responses(p_b)
        for p_s in grid:
            if p_s <= p_b + 1e-12:
                continue
            on_path = resp.get(_key(p_s), (0.0, 0.0))[0] > 0
            if on_path:
                cands = [None]
            elif self.policy == "deterrent":
                ok = off_path_weights("prior", pr.costs, p_s)
                cands = ["prior"] + [_onehot(k) for k in range(n) if ok[k] > 0 and pr.pi[k] > 0]
            else:
                cands = [self.policy]
            chosen = None
            for cand in cands:
                sol = self.solution(p_b, p_s, cand)
                pays = [best_concession(sol, "seller", j) for j in range(n)]
                worst = max(pays[j][0] - values[j] for j in range(n))
                if chosen is None or worst < chosen[0]:
                    chosen = (worst, pays)
            for j, (u, t) in enumerate(chosen[1]):
                if u > best[j][0]:
                    best[j] = (u, f"demand {p_s:.12g}, concede at {t:.6g}")
        return best


def best_response_gap(profile, buyer_grid=None, seller_grid=None, tol=DEFAULT_TOL,
                      policy=None):
    """Largest expected gain from a unilateral deviation, per player and type.

    Grids default to the commitment grids of the profile (or just the
    offers in use).  policy sets the beliefs after demands no rational type
    makes: "prior", "lowest", a callable, or "deterrent", which picks for
    each such demand the admissible belief (prior weights or a point mass on
    one undominated type) that minimises the largest deviation gain.
    """
    pr = profile
    policy = pr.policy if policy is None else policy
    params = pr.params
    on_b = [p for p, w in pr.buyer_offers.items() if w > 0]
    demands = {p for j in range(pr.n) for b in on_b for p in pr.seller_offer(j, b)}
    bgrid = _grid_points(buyer_grid if buyer_grid is not None else
                         (params.buyer_grid if params else None), on_b)
    sgrid = _grid_points(seller_grid if seller_grid is not None else
                         (params.seller_grid if params else None), demands)
    orc = _Oracle(pr, policy)

    # buyer
    v_b = sum(w * orc.buyer_value(p, best=False) for p, w in pr.buyer_offers.items())
    dev = [(orc.buyer_value(p, best=True), p) for p in bgrid]
    u_b, arg_b = max(dev)
    gains = {"buyer": u_b - v_b, "seller": {}, "adoption": None}
    argmax = {"buyer": f"offer {arg_b:.12g}", "seller": {}}

    # sellers: ex-ante over buyer offers, commitment-only offers give no gain
    mass = {p: pr.offer_mass(p) for p in set(on_b) | set(pr.mu_b)}
    br = np.zeros(pr.n)
    eq = np.zeros(pr.n)
    where = [None] * pr.n
    best_gain = np.full(pr.n, -np.inf)
    for p_b, m in mass.items():
        if m <= 0:
            continue
        if p_b not in on_b:
            v = [max(p_b - th, 0.0) for th in pr.costs]
            br += m * np.array(v)
            eq += m * np.array(v)
            continue
        values = [orc.on_path_seller(j, p_b) for j in range(pr.n)]
        best = orc.seller_deviations(p_b, sgrid, values)
        for j in range(pr.n):
            br[j] += m * best[j][0]
            eq[j] += m * values[j]
            g = best[j][0] - values[j]
            if g > best_gain[j]:
                best_gain[j] = g
                where[j] = f"after offer {p_b:.12g}: {best[j][1]}"
    for j, th in enumerate(pr.costs):
        gains["seller"][th] = float(br[j] - eq[j])
        argmax["seller"][th] = where[j]

    if pr.adoption_costs is not None:
        c = np.asarray(pr.adoption_costs, dtype=float)
        gains["adoption"] = float(np.max(br - c) - np.dot(pr.pi, eq - c))
        argmax["adoption"] = f"adopt cost {pr.costs[int(np.argmax(br - c))]:.12g}"

    allg = [gains["buyer"], *gains["seller"].values()]
    if gains["adoption"] is not None:
        allg.append(gains["adoption"])
    gap = float(max(allg))
    return GapReport(gains, argmax, policy if isinstance(policy, str) else "custom", tol,
                     gap <= tol, gap, pr.eps_s)


@dataclass
class IndifferenceReport:
    passed: bool
    tolerance: float
    vacuous: bool
    max_indifference_error: float  # spread of payoffs over each mixing support
    max_excess: float  # best payoff over all times minus equilibrium value
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return dict(self.__dict__)


def _support(law, lo, hi, t):
    """Mask of times at which positions [lo, hi) of `law` concede."""
    mask = np.zeros(t.shape, dtype=bool)
    if hi <= lo:
        return mask
    if law.atom > lo:
        mask |= t == 0
    u0, u1 = max(lo, law.atom), min(hi, 1.0 - law.floor)
    if u1 > u0 and law.hazards:
        a, b = law.times(np.array([u0, np.nextafter(u1, 0.0)]))
        b = min(b, law.end)
        k = np.clip(np.searchsorted(law.b, t, side="left") - 1, 0, len(law.hazards) - 1)
        mask |= (t > a) & (t <= b) & (law.h[k] > 0)
    return mask


def verify_woa_indifference(sol, tol=1e-6, n_times=N_TIMES):
    """Mixing players are indifferent over their support and nobody gains by timing.

    The payoff spread across each mixing support must be within tol, and
    no concession time may beat the closed-form value by more than tol.
    """
    if sol.T_end <= 0 and not sol.buyer_law.hazards and not sol.seller_law.hazards:
        return IndifferenceReport(True, tol, True, 0.0, 0.0, {"reason": "immediate agreement"})
    t = time_grid(sol, n_times)
    t = t[np.isfinite(t)]
    buyer, values, _ = woa_values(sol)
    p_b, p_s = sol.p_b, sol.p_s
    mid = 0.5 * (p_b + p_s)
    spread, excess, details = 0.0, -np.inf, {}
    u = concession_payoffs(t, sol.seller_law, 1 - p_b, 1 - p_s, 1 - mid, sol.r_b)
    lo, hi = sol.buyer_band()
    sup = _support(sol.buyer_law, lo, hi, t)
    if sup.any():
        s = float(np.max(np.abs(u[sup] - buyer)))
        spread = max(spread, s)
        details["buyer_spread"] = s
    excess = max(excess, float(np.max(u)) - buyer)
    for j, th in enumerate(sol.costs):
        u = concession_payoffs(t, sol.buyer_law, p_s - th, p_b - th, mid - th, sol.r_s)
        if th < p_b:
            lo, hi = sol.seller_band(j)
            sup = _support(sol.seller_law, lo, hi, t)
            if sup.any():
                s = float(np.max(np.abs(u[sup] - values[j])))
                spread = max(spread, s)
                details[f"type{j}_spread"] = s
        excess = max(excess, float(np.max(u)) - values[j])
    passed = spread <= tol and excess <= tol
    return IndifferenceReport(passed, tol, False, spread, float(excess), details)


def perturb_buyer_hazards(sol, factor=1.1):
    """Copy of `sol` whose buyer hazards are scaled by `factor` (for negative tests)."""
    law = sol.buyer_law
    new = type(law)(law.atom, law.breaks, tuple(h * factor for h in law.hazards))
    d = {**sol.__dict__, "buyer_law": new, "payoffs": None}
    return type(sol)(**d)
