"""War-of-attrition continuation game after incompatible demands p_b < p_s.

Seller types are indexed 0..n-1 in code (cost order).  Types with cost
below p_b concede in cost order: the cheapest type exhausts first, then the
next one, while the buyer's hazard steps down to keep the currently
conceding type indifferent.  Types at or above p_b never concede.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .laws import ConcessionLaw, band_expectation, concession_payoffs
from .params import ParamError

TOL = 1e-12


@dataclass(frozen=True)
class BeliefState:
    eps_b_hat: float
    eps_s_hat: float
    pi_hat: tuple
    off_path_b: bool = False
    off_path_s: bool = False

    def __post_init__(self):
        pi = tuple(float(x) for x in self.pi_hat)
        object.__setattr__(self, "pi_hat", pi)
        vals = (self.eps_b_hat, self.eps_s_hat) + pi
        if any(v < -TOL or v > 1 + TOL for v in vals):
            raise ParamError("belief components must lie in [0, 1]", "beliefs")
        if abs(self.eps_s_hat + sum(pi) - 1.0) > 1e-9:
            raise ParamError("seller beliefs must sum to 1", "beliefs")


@dataclass(frozen=True)
class Rates:
    lambda_s: float
    lambda_b: tuple  # one per type; 0 for types that never concede
    m: int  # number of types with cost strictly below p_b


def concession_rates(p_b, p_s, costs, r=1.0, r_s=None):
    """Hazards that keep the opponent indifferent.

    lambda_s uses the buyer's rate r, lambda_b uses the seller's rate r_s
    (defaults to r).  p_s = 1 gives lambda_s = 0: the seller never concedes.
    """
    r_s = r if r_s is None else r_s
    if p_s <= p_b:
        raise ParamError("seller demand must exceed the buyer offer (p_s > p_b)", "p_s")
    if p_s > 1 or p_b < 0:
        raise ParamError("offers must lie in [0, 1]", "p_s")
    gap = p_s - p_b
    lam_s = r * (1.0 - p_s) / gap
    lam_b = tuple(r_s * (p_b - t) / gap if t < p_b else 0.0 for t in costs)
    m = sum(1 for t in costs if t < p_b)
    return Rates(lam_s, lam_b, m)


def dominated(theta, p_s):
    """A seller type gains nothing from demanding p_s <= its cost."""
    return p_s <= theta


def off_path_weights(policy, costs, p_s):
    """Relative weights on rational seller types after an unexpected demand.

    "prior": every type for which the demand is not dominated keeps its prior
    weight.  "lowest": only the cheapest undominated type is suspected.
    A callable policy(costs, p_s) may return any nonnegative weights.
    """
    if callable(policy):
        return np.asarray(policy(costs, p_s), dtype=float)
    ok = np.array([not dominated(t, p_s) for t in costs], dtype=float)
    if policy == "prior":
        return ok
    if policy == "lowest":
        w = np.zeros(len(costs))
        idx = np.flatnonzero(ok)
        if idx.size:
            w[idx[0]] = 1.0
        return w
    raise ParamError(f"unknown off-path policy {policy!r}", "policy")


def bayes_update(eps_b, mu_b_p, sigma_b_p, eps_s, mu_s_p, sigma_s_p, pi, costs, p_s,
                 policy="prior", buyer_policy="bayes"):
    """Posteriors after offers (p_b, p_s) from the prior masses at those offers.

    mu_b_p, mu_s_p: commitment weights on the observed offers.
    sigma_b_p: rational buyer's probability of p_b.
    sigma_s_p: each rational type's probability of p_s given p_b.
    Seller demands no rational type makes are resolved with `policy`.
    A buyer offer the rational buyer never makes reveals commitment under
    buyer_policy="bayes"; "prior" treats it as off-path and keeps the prior
    odds, which is how deviations are scored against a fixed profile.
    """
    pi = np.asarray(pi, dtype=float)
    nb = eps_b * mu_b_p
    rb = (1 - eps_b) * sigma_b_p
    off_b = rb == 0
    if off_b and (buyer_policy == "prior" or nb == 0):
        rb = 1 - eps_b
    elif buyer_policy not in ("bayes", "prior"):
        raise ParamError(f"unknown buyer policy {buyer_policy!r}", "buyer_policy")
    eb = nb / (nb + rb) if nb + rb > 0 else 0.0
    ns = eps_s * mu_s_p
    w = (1 - eps_s) * pi * np.asarray(sigma_s_p, dtype=float)
    off_s = w.sum() == 0
    if off_s:
        w = (1 - eps_s) * pi * off_path_weights(policy, costs, p_s)
    den = ns + w.sum()
    if den == 0:
        return BeliefState(eb, 1.0, tuple(np.zeros(len(pi))), off_b, True)
    return BeliefState(eb, ns / den, tuple(w / den), off_b, off_s)


def posterior_beliefs(params, sigma_b, sigma_s, pi, p_b, p_s, policy="prior",
                      buyer_policy="bayes"):
    """Bayes posteriors after offers (p_b, p_s) under `params`.

    sigma_b: mapping price -> probability for the rational buyer.
    sigma_s: callable (type index, p_b) -> mapping price -> probability.
    """
    sig = [float(sigma_s(j, p_b).get(p_s, 0.0)) for j in range(len(pi))]
    return bayes_update(params.eps, params.mu_b_at(p_b), float(sigma_b.get(p_b, 0.0)),
                        params.eps, params.mu_s_at(p_s), sig, pi, params.costs, p_s, policy,
                        buyer_policy)


@dataclass(frozen=True)
class PayoffProfile:
    buyer_value: float
    seller_values: tuple
    discount_factors: tuple
    buyer_concession_discount: float
    buyer_discount: float


@dataclass(frozen=True)
class WoaSolution:
    p_b: float
    p_s: float
    costs: tuple
    beliefs: BeliefState
    r_b: float
    r_s: float
    lambda_s: float
    lambda_b: tuple
    L: float
    j_star: int | None  # 1-based index of the first type conceding after t=0
    c_b: float
    c_s: float
    phase_times: tuple
    T_end: float
    m: int
    T_s: tuple
    branch: str
    buyer_law: ConcessionLaw
    seller_law: ConcessionLaw
    payoffs: PayoffProfile | None = field(default=None, compare=False)

    @property
    def weak(self):
        if self.c_b > 0:
            return "buyer"
        if self.c_s > 0:
            return "seller"
        return "none"

    def seller_band(self, j):
        pi = self.beliefs.pi_hat
        lo = sum(pi[:j])
        return lo, lo + pi[j]

    def buyer_band(self):
        return 0.0, 1.0 - self.beliefs.eps_b_hat

    def to_dict(self):
        p = self.payoffs
        return {
            "p_b": self.p_b, "p_s": self.p_s, "costs": list(self.costs),
            "eps_b_hat": self.beliefs.eps_b_hat, "eps_s_hat": self.beliefs.eps_s_hat,
            "pi_hat": list(self.beliefs.pi_hat), "r_b": self.r_b, "r_s": self.r_s,
            "lambda_s": self.lambda_s, "lambda_b": list(self.lambda_b), "L": self.L,
            "j_star": self.j_star, "c_b": self.c_b, "c_s": self.c_s,
            "phase_times": list(self.phase_times), "T_end": self.T_end, "m": self.m,
            "T_s": list(self.T_s), "branch": self.branch, "weak": self.weak,
            "payoffs": None if p is None else {
                "buyer_value": p.buyer_value, "seller_values": list(p.seller_values),
                "discount_factors": list(p.discount_factors),
                "buyer_concession_discount": p.buyer_concession_discount,
                "buyer_discount": p.buyer_discount,
            },
        }


def _log(x):
    return math.log(x) if x > 0 else -math.inf


def _law(atom, times, hazards):
    """Law with pieces (times[k], times[k+1]) at hazards[k]; empty pieces dropped."""
    bs, hs = [0.0], []
    for t0, t1, h in zip(times[:-1], times[1:], hazards):
        if t1 > t0:
            if bs[-1] != t0:
                bs.append(t0)
                hs.append(0.0)
            bs.append(t1)
            hs.append(h)
    return ConcessionLaw(atom, tuple(bs), tuple(hs))


def solve_woa(p_b, p_s, beliefs, costs, r=1.0, r_s=None, with_payoffs=True):
    """Equilibrium of the concession game at (p_b, p_s) under `beliefs`."""
    r_s = r if r_s is None else r_s
    costs = tuple(float(c) for c in costs)
    if len(beliefs.pi_hat) != len(costs):
        raise ParamError("one posterior weight per cost type is required", "beliefs")
    rates = concession_rates(p_b, p_s, costs, r, r_s)
    lam_s, m = rates.lambda_s, rates.m
    lam = np.array(rates.lambda_b[:m] + (0.0,))  # lam[m] = 0 sentinel
    eb = beliefs.eps_b_hat
    es = beliefs.eps_s_hat
    pi = np.asarray(beliefs.pi_hat)
    cum = np.cumsum(pi)
    tail = np.array([es + pi[j + 1:].sum() for j in range(len(costs))])  # committed or cost above j
    Q = float(cum[m - 1]) if m else 0.0  # conceding mass
    floor_s = float(tail[m - 1]) if m else 1.0
    log_eb = _log(eb)
    with np.errstate(divide="ignore"):
        T_s = tuple(float(-np.log(tail[j]) / lam_s) if lam_s > 0 else math.inf
                    for j in range(m))

    def done(branch, L, c_b, c_s, j_star, times, buyer_law, seller_law):
        sol = WoaSolution(p_b, p_s, costs, beliefs, r, r_s, lam_s, tuple(lam[:m]), L,
                          j_star, c_b, c_s, tuple(times),
                          float(times[-1]) if len(times) else 0.0, m, T_s, branch,
                          buyer_law, seller_law)
        if with_payoffs:
            sol = _with_payoffs(sol)
        return sol

    if eb >= 1.0:
        # Buyer surely committed: conceding seller types give up at once.
        return done("buyer-committed", 0.0, 0.0, Q, None, (0.0,),
                    ConcessionLaw.never(), ConcessionLaw.immediate(Q))
    if m == 0:
        # Every type's cost is at least p_b: nobody on the seller side concedes.
        return done("no-conceding-seller", math.inf, 1.0 - eb, 0.0, None, (0.0,),
                    ConcessionLaw.immediate(1.0 - eb), ConcessionLaw.never())
    if lam_s == 0.0:
        # Demand of 1: the cheapest conceding type in the support (the cheapest
        # type overall if none has mass) leaves at t=0, then the buyer concedes
        # at the rate that keeps it indifferent until exhausted.  Dearer types
        # strictly prefer to wait against that rate and never concede.
        live = np.flatnonzero(pi[:m] > 0)
        k = int(live[0]) if live.size else 0
        lbk = r_s * (p_b - costs[k]) / (p_s - p_b)
        T = -log_eb / lbk
        atom = float(cum[k])
        return done("seller-never", 0.0, 0.0, atom, k + 1, (0.0, T),
                    ConcessionLaw(0.0, (0.0, T), (lbk,)), ConcessionLaw.immediate(atom))
    if Q <= 0.0:
        # Nobody on the seller side ever concedes: concede at once.
        return done("no-conceding-seller", math.inf, 1.0 - eb, 0.0, None, (0.0,),
                    ConcessionLaw.immediate(1.0 - eb), ConcessionLaw.never())
    if floor_s <= 0.0:
        # Seller known rational and every type concedes: seller gives up at once.
        return done("seller-exposed", 0.0, 0.0, Q, None, (0.0,),
                    ConcessionLaw.never(), ConcessionLaw.immediate(Q))

    dlam = lam[:m] - lam[1:m + 1]
    Ts = np.array(T_s)
    den = float(np.dot(dlam, Ts))
    L = math.inf if log_eb == -math.inf else (-log_eb / den if den > 0 else math.inf)

    if L > 1.0 + TOL or L >= 1.0 - TOL:
        # Buyer weak (or balanced): seller concedes from t=0 without an atom.
        prev = np.concatenate(([0.0], Ts[:-1]))
        if log_eb == -math.inf:
            c_b = 1.0
        else:
            c_b = float(-np.expm1(log_eb + np.dot(lam[:m], Ts - prev)))
            c_b = max(0.0, c_b)
        if abs(L - 1.0) <= TOL:
            c_b = 0.0
        if c_b >= 1.0 - 1e-15:
            return done("interior", L, 1.0, 0.0, None, (0.0,),
                        ConcessionLaw.immediate(1.0), ConcessionLaw.never())
        j_star = int(np.flatnonzero(pi[:m] > 0)[0]) + 1
        times = [0.0] + list(Ts)
        return done("interior", L, c_b, 0.0, j_star, Ts,
                    _law(c_b, times, lam[:m]), _law(0.0, times, [lam_s] * m))

    # Seller weak: the cheapest types give up at t=0 until the clocks align.
    log_tail = np.log(tail[:m])
    c_hat = np.empty(m)
    for i in range(m):
        logk = (-lam_s * log_eb + np.dot(dlam[i:], log_tail[i:])) / lam[i]
        c_hat[i] = -np.expm1(logk)
    hits = np.flatnonzero(c_hat < cum[:m] - TOL)
    if hits.size == 0:
        return done("interior", L, 0.0, Q, None, (0.0,),
                    ConcessionLaw.never(), ConcessionLaw.immediate(Q))
    js = int(hits[0])
    c_s = max(0.0, float(c_hat[js]))
    shift = math.log1p(-c_s) / lam_s
    phase = [max(0.0, Ts[j] + shift) for j in range(js, m)]
    times = [0.0] + phase
    return done("interior", L, 0.0, c_s, js + 1, phase,
                _law(0.0, times, lam[js:m]), _law(c_s, times, [lam_s] * (m - js)))


def woa_values(sol):
    """Equilibrium continuation values: (buyer, per-type seller, buyer discounted mass)."""
    p_b, p_s = sol.p_b, sol.p_s
    A = sol.buyer_law.discounted_mass(sol.r_s)
    if sol.c_b > 0 or sol.branch == "no-conceding-seller":
        buyer = 1.0 - p_s
    else:
        buyer = sol.c_s * (1.0 - p_b) + (1.0 - sol.c_s) * (1.0 - p_s)
    # a conceding type's value is its payoff at the start of its own phase;
    # earlier phases run at a higher buyer hazard, so it gains by waiting them out
    lo = np.concatenate(([0.0], np.cumsum(sol.beliefs.pi_hat)[:-1]))
    start = np.maximum(sol.seller_law.times(np.minimum(lo, np.nextafter(1.0, 0.0))), 1e-300)
    values = []
    for j, th in enumerate(sol.costs):
        if th < p_b:
            v = concession_payoffs(start[j:j + 1], sol.buyer_law, p_s - th, p_b - th,
                                   0.5 * (p_b + p_s) - th, sol.r_s)[0]
            values.append(float(v))
        else:
            values.append((p_s - th) * A)
    return buyer, tuple(values), A


def woa_payoffs(sol):
    """Closed-form continuation values and discount factors of the solution."""
    buyer, values, A = woa_values(sol)
    factors = []
    disc = lambda t: concession_payoffs(t, sol.buyer_law, 1.0, 1.0, 1.0, sol.r_s)
    for j, th in enumerate(sol.costs):
        if th < sol.p_b:
            lo, hi = sol.seller_band(j)
            factors.append(band_expectation(sol.seller_law, lo, hi, disc, sol.buyer_law.breaks)
                           if hi > lo else 1.0)
        else:
            factors.append(A)
    lo, hi = sol.buyer_band()
    bdisc = lambda t: concession_payoffs(t, sol.seller_law, 1.0, 1.0, 1.0, sol.r_b)
    bd = band_expectation(sol.buyer_law, lo, hi, bdisc, sol.seller_law.breaks) if hi > lo else 0.0
    return PayoffProfile(buyer, values, tuple(float(f) for f in factors), A, float(bd))


def _with_payoffs(sol):
    return WoaSolution(**{**sol.__dict__, "payoffs": woa_payoffs(sol)})


def exhaustion_residuals(sol):
    """(buyer, seller) gaps between log survival at T_end and the committed mass.

    Both vanish when each side's posterior of facing a committed opponent
    reaches one exactly at T_end.
    """
    eb = sol.beliefs.eps_b_hat
    pi = np.asarray(sol.beliefs.pi_hat)
    floor_s = sol.beliefs.eps_s_hat + pi[sol.m:].sum()
    t = np.array([sol.T_end + 1.0])
    sb = float(sol.buyer_law.survival(t)[0]) if sol.buyer_law.hazards else 1 - sol.buyer_law.atom
    ss = float(sol.seller_law.survival(t)[0]) if sol.seller_law.hazards else 1 - sol.seller_law.atom
    rb = abs(math.log(sb) - math.log(eb)) if eb > 0 and sb > 0 else abs(sb - eb)
    rs = abs(math.log(ss) - math.log(floor_s)) if floor_s > 0 and ss > 0 else abs(ss - floor_s)
    return rb, rs


@dataclass(frozen=True)
class ConcessionLimit:
    weak: str  # "seller", "buyer" or "indeterminate"
    c_b: float | None
    c_s: float | None
    case: int | None


def limit_weak_player(p_b, p_s, limit_beliefs, costs, r=1.0):
    """Which time-zero atom tends to one as commitment probabilities vanish.

    `limit_beliefs` holds the limits of the posteriors; zero entries are the
    vanishing components.  Binary cost case, types 1 and 2.
    """
    rates = concession_rates(p_b, p_s, costs, r)
    lam_s = rates.lambda_s
    lb1 = rates.lambda_b[0]
    lb2 = rates.lambda_b[1] if len(costs) > 1 else 0.0
    th2 = costs[1] if len(costs) > 1 else math.inf
    eb, es = limit_beliefs.eps_b_hat, limit_beliefs.eps_s_hat
    pi2 = limit_beliefs.pi_hat[1] if len(costs) > 1 else 0.0
    if es == 0 and lb2 > lam_s:
        return ConcessionLimit("seller", 0.0, 1.0, 1)
    if eb == 0 and pi2 > 0 and (lam_s > lb2 or p_b <= th2):
        return ConcessionLimit("buyer", 1.0, 0.0, 2)
    if eb == 0 and (es > 0 or lam_s > lb1):
        return ConcessionLimit("buyer", 1.0, 0.0, 3)
    return ConcessionLimit("indeterminate", None, None, None)
