"""Unobservable technology adoption before bargaining: regimes and limit
equilibria for two technologies, plus the multi-technology candidate."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .limiteq import (TIE_TOL, delay_factor_high_type, pi_star, screening_gap_condition,
                      seller_counteroffer)
from .params import ParamError, rubinstein_price

NO_ADOPTION = "no-adoption"
EFFICIENT = "efficient-adoption"
UNIQUE_INEFFICIENT = "unique-inefficient"
MULTIPLE = "multiple-limits"
LABELS = (NO_ADOPTION, EFFICIENT, UNIQUE_INEFFICIENT, MULTIPLE)


@dataclass(frozen=True)
class Regime:
    label: str
    conditions: dict
    boundary: bool = False
    neighbors: tuple = ()

    def to_dict(self):
        return {"label": self.label, "conditions": self.conditions, "boundary": self.boundary,
                "neighbors": list(self.neighbors)}


def _screening_values(theta1, theta2, r_b=1.0, r_s=1.0):
    """Limit bargaining values of both types after the optimal screening offer."""
    offer = min(rubinstein_price(theta1, r_b, r_s), theta2)
    low = seller_counteroffer(theta1, offer, (theta1, theta2), r_b, r_s) - theta1
    high = delay_factor_high_type(theta1, theta2, r_b, r_s) * (1 - theta2)
    return offer, low, high


def lower_bracket(theta1, theta2, r_b=1.0, r_s=1.0):
    """Smallest adoption cost that sustains mixing: the screening value gap.

    Equals max{1/2, (1-theta2)/(1-theta1)} times the cost gap at equal rates.
    """
    _, low, high = _screening_values(theta1, theta2, r_b, r_s)
    return low - high


def classify_regime(theta1, theta2, c, r_b=1.0, r_s=1.0, tol=TIE_TOL):
    if not 0 < theta1 < theta2 < 1:
        raise ParamError("costs not increasing" if theta1 >= theta2 else
                         "costs must lie in (0, 1)", "theta")
    if c <= 0:
        raise ParamError("adoption cost must be positive", "c")
    delta = theta2 - theta1
    p1 = rubinstein_price(theta1, r_b, r_s)
    gap = screening_gap_condition(theta1, theta2, tol)
    lo = lower_bracket(theta1, theta2, r_b, r_s)
    cond = {"gap_condition": gap.holds, "gap_margin": gap.margin, "p_theta1_below_theta2": p1 < theta2,
            "delta": delta, "c": c, "c_lower": lo, "c_upper": delta}

    def inner(cc):
        if cc > delta:
            return NO_ADOPTION
        if not gap.holds or cc < lo:
            return EFFICIENT
        return UNIQUE_INEFFICIENT if p1 < theta2 else MULTIPLE

    label = inner(c)
    edges = []
    if abs(c - delta) <= tol:
        edges.append(delta)
    if gap.holds and abs(c - lo) <= tol:
        edges.append(lo)
    # the gap condition and the price kink only matter when adoption can pay
    kinks = c < delta - tol and (gap.boundary or abs(p1 - theta2) <= tol)
    boundary = bool(edges) or kinks
    neighbors = ()
    if edges:
        neighbors = tuple(sorted({inner(x + d) for x in edges for d in (-1e-9, 1e-9)}))
    elif boundary:
        neighbors = (label,)
    return Regime(label, cond, boundary, neighbors)


def rho_star(theta1, theta2, c):
    """Limit probability of the pooling offer that keeps the seller indifferent."""
    delta = theta2 - theta1
    p1 = rubinstein_price(theta1)
    if p1 < theta2:
        lo, rho = delta / 2, (2 * c - delta) / delta
    else:
        lo = (1 - theta2) * delta / (1 - theta1)
        rho = ((1 - theta1) * c - (1 - theta2) * delta) / delta ** 2
    if not lo - TIE_TOL <= c <= delta + TIE_TOL:
        raise ParamError(f"c must lie in ({lo:.12g}, {delta:.12g}) for a mixed buyer", "c")
    return min(max(rho, 0.0), 1.0)


def delay_closed_form(theta1, theta2, c):
    """Limit expected delay of the inefficient equilibrium (equal rates)."""
    delta = theta2 - theta1
    if rubinstein_price(theta1) < theta2:
        return (delta - c) / (1 - theta1)
    return (3 * theta2 - 1 - 2 * theta1) * (delta - c) / (2 * delta ** 2)


@dataclass(frozen=True)
class AdoptionEquilibrium:
    adoption_prob: float
    buyer_mix: float  # probability of the pooling offer
    offers: tuple  # (screening offer, pooling offer)
    expected_delay: float
    seller_value: float  # net of the adoption cost when adopting
    buyer_value: float
    efficient: bool
    label: str = ""
    type_values: tuple = ()  # bargaining values of (theta1, theta2) before c
    flags: tuple = field(default_factory=tuple)
    welfare_loss: float = 0.0  # surplus lost to delay
    welfare: float = 0.0  # discounted surplus minus expected adoption cost

    def to_dict(self):
        d = asdict(self)
        for k in ("offers", "type_values", "flags"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for k in ("offers", "type_values", "flags"):
            d[k] = tuple(d[k])
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict())


def _inefficient(theta1, theta2, c, r_b, r_s, label):
    delta = theta2 - theta1
    offer, low, high = _screening_values(theta1, theta2, r_b, r_s)
    p2 = rubinstein_price(theta2, r_b, r_s)
    gap = low - high
    # adopting minus c equals not adopting:
    # rho*delta + (1-rho)*gap = c
    rho = min(max((c - gap) / (delta - gap), 0.0), 1.0)
    ps = pi_star(theta1, theta2, r_b, r_s)
    factor = delay_factor_high_type(theta1, theta2, r_b, r_s)
    delay = (1 - ps) * (1 - rho) * (1 - factor)
    v1 = rho * (p2 - theta1) + (1 - rho) * low
    v2 = rho * (p2 - theta2) + (1 - rho) * high
    buyer = 1 - p2
    flags = ("extension",) if r_b != r_s else ()
    loss = (1 - theta2) * delay
    welfare = ps * (1 - theta1 - c) + (1 - ps) * (1 - theta2) - loss
    return AdoptionEquilibrium(ps, rho, (offer, p2), delay, v2, buyer, False, label, (v1, v2), flags,
                               loss, welfare)


def _efficient(theta1, theta2, c, r_b, r_s, pooling, label):
    offer, low, high = _screening_values(theta1, theta2, r_b, r_s)
    p1 = rubinstein_price(theta1, r_b, r_s)
    p2 = rubinstein_price(theta2, r_b, r_s)
    if pooling:
        v1, v2, buyer, mix = p2 - theta1, p2 - theta2, 1 - p2, 1.0
    elif label == MULTIPLE:
        # buyer expects adoption almost surely and offers the low type's price;
        # a non-adopter concedes in finite time at about that price
        offer = p1
        v1, v2, buyer, mix = p1 - theta1, p1 - theta2, 1 - p1, 0.0
    else:
        v1, v2, buyer, mix = low, high, 1 - (low + theta1), 0.0
    flags = ("extension",) if r_b != r_s else ()
    return AdoptionEquilibrium(1.0, mix, (offer, p2), 0.0, v1 - c, buyer, True, label,
                               (v1, v2), flags, 0.0, 1 - theta1 - c)


def _equilibria_for(label, theta1, theta2, c, r_b, r_s):
    p2 = rubinstein_price(theta2, r_b, r_s)
    if label == NO_ADOPTION:
        offer, _, _ = _screening_values(theta1, theta2, r_b, r_s)
        return [AdoptionEquilibrium(0.0, 1.0, (offer, p2), 0.0, p2 - theta2, 1 - p2, True, label,
                                    (p2 - theta1, p2 - theta2), (), 0.0, 1 - theta2)]
    if label == EFFICIENT:
        pooling = not screening_gap_condition(theta1, theta2).holds
        return [_efficient(theta1, theta2, c, r_b, r_s, pooling, label)]
    if label == UNIQUE_INEFFICIENT:
        return [_inefficient(theta1, theta2, c, r_b, r_s, label)]
    return [_inefficient(theta1, theta2, c, r_b, r_s, label),
            _efficient(theta1, theta2, c, r_b, r_s, False, label)]


def limit_equilibria_endogenous(theta1, theta2, c, r_b=1.0, r_s=1.0):
    """Every limit equilibrium of the adoption game.

    On a regime boundary the equilibria of both neighbouring regimes are
    returned, each flagged "boundary".
    """
    reg = classify_regime(theta1, theta2, c, r_b, r_s)
    if reg.boundary and len(reg.neighbors) > 1:
        out = []
        for lab in reg.neighbors:
            for e in _equilibria_for(lab, theta1, theta2, c, r_b, r_s):
                out.append(AdoptionEquilibrium(**{**e.__dict__, "flags": e.flags + ("boundary",)}))
        return out
    return _equilibria_for(reg.label, theta1, theta2, c, r_b, r_s)


@dataclass(frozen=True)
class RegimeMulti:
    label: str  # "efficient" or "inefficient-candidate"
    j_o: int  # 1-based cheapest total-cost technology
    gap_condition: bool
    adoption_prob: float
    guaranteed_inefficient: bool
    partial: bool = True

    def to_dict(self):
        return asdict(self)


def classify_regime_multi(costs, adoption_costs, r_b=1.0, r_s=1.0, tol=TIE_TOL):
    """Regime with several technologies; only the two-point mix candidate is built."""
    costs = tuple(float(x) for x in costs)
    cs = tuple(float(x) for x in adoption_costs)
    n = len(costs)
    if len(cs) != n or n < 2:
        raise ParamError("one adoption cost per technology, at least two", "adoption_costs")
    if any(b <= a for a, b in zip(costs, costs[1:])):
        raise ParamError("costs not increasing", "costs")
    if any(b >= a for a, b in zip(cs, cs[1:])) or cs[-1] != 0:
        raise ParamError("adoption costs must decrease to 0", "adoption_costs")
    total = [t + c for t, c in zip(costs, cs)]
    best = min(total)
    winners = [i for i, v in enumerate(total) if v <= best + tol]
    if len(winners) > 1:
        raise ParamError("cheapest technology is not unique", "adoption_costs")
    jo = winners[0]
    if jo == n - 1:
        raise ParamError("cheapest technology is the default one", "adoption_costs")
    tj, tn = costs[jo], costs[-1]
    pj = rubinstein_price(tj, r_b, r_s)
    pn = rubinstein_price(tn, r_b, r_s)
    holds = tn - tj > (1 - tn) / 2
    prob = min(1.0, (pn - tn) / (min(pj, tn) - tj))
    forced = holds and pj < tn and (tn - tj) / 2 < cs[jo] < tn - tj
    if not holds:
        return RegimeMulti("efficient", jo + 1, False, 1.0, False)
    return RegimeMulti("inefficient-candidate", jo + 1, True, prob, forced)
