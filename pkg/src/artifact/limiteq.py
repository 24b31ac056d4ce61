"""Limiting outcomes (vanishing commitment probability, fine grids) when the
cost distribution is exogenous."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .params import NonGenericError, ParamError, rubinstein_price

TIE_TOL = 1e-12


def _check_costs(costs):
    costs = tuple(float(c) for c in costs)
    if not costs:
        raise ParamError("at least one cost is required", "costs")
    if any(not 0 < c < 1 for c in costs):
        raise ParamError("costs must lie in (0, 1)", "costs")
    if any(b <= a for a, b in zip(costs, costs[1:])):
        raise ParamError("costs not increasing", "costs")
    return costs


def pi_star(theta1, theta2, r_b=1.0, r_s=1.0):
    """Low-type probability at which screening and pooling pay the buyer the same."""
    _check_costs((theta1, theta2))
    p1 = rubinstein_price(theta1, r_b, r_s)
    p2 = rubinstein_price(theta2, r_b, r_s)
    return min(1.0, (p2 - theta2) / (min(p1, theta2) - theta1))


@dataclass(frozen=True)
class GapCondition:
    holds: bool
    boundary: bool
    margin: float  # (theta2 - theta1) - (1 - theta2) / 2


def screening_gap_condition(theta1, theta2, tol=TIE_TOL):
    """Is the cost gap large enough for screening to ever pay?"""
    _check_costs((theta1, theta2))
    margin = (theta2 - theta1) - (1 - theta2) / 2
    boundary = abs(margin) <= tol
    return GapCondition(margin > tol, boundary, margin)


def seller_counteroffer(theta, p_b, costs, r_b=1.0, r_s=1.0):
    """Limit counteroffer of type theta to the buyer offer p_b.

    Types at or above p_b demand 1.  Otherwise let theta_j be the largest
    cost below p_b; the seller asks for the price at which both sides would
    concede at the same rate against theta_j, or accepts if that is p_b.
    With unequal rates the equal-rate demand is 1 - (r_s/r_b)(p_b - theta_j).
    """
    costs = _check_costs(costs)
    if not 0 <= p_b <= 1:
        raise ParamError("p_b must lie in [0, 1]", "p_b")
    if p_b <= theta:
        return 1.0
    theta_j = max(c for c in costs if c < p_b)
    return max(p_b, 1.0 - (r_s / r_b) * (p_b - theta_j))


def delay_factor_high_type(theta1, theta2, r_b=1.0, r_s=1.0):
    """Discount factor of the delayed trade with a type that demands 1."""
    p1 = rubinstein_price(theta1, r_b, r_s)
    return (max(p1, 1 - (theta2 - theta1)) - theta1) / (1 - theta1)


def screening_payoffs(pi, costs, r_b=1.0, r_s=1.0):
    """Buyer payoff from screening at each cutoff i (pooling for i = n)."""
    costs = _check_costs(costs)
    pi = np.asarray(pi, dtype=float)
    nxt = costs[1:] + (1.0,)
    cum = np.cumsum(pi)
    return np.array([cum[i] * (min(rubinstein_price(costs[i], r_b, r_s), nxt[i]) - costs[i])
                     for i in range(len(costs))])


def i_star(pi, costs, r_b=1.0, r_s=1.0, tol=TIE_TOL):
    """1-based cutoff type of the optimal screening offer."""
    vals = screening_payoffs(pi, costs, r_b, r_s)
    best = vals.max()
    winners = np.flatnonzero(vals >= best - tol)
    if winners.size > 1:
        raise NonGenericError("screening cutoff is not unique",
                              [int(i) + 1 for i in winners], "pi")
    return int(winners[0]) + 1


@dataclass(frozen=True)
class LimitEquilibrium:
    costs: tuple
    pi: tuple
    buyer_offer: float
    seller_offer_map: dict
    trade_price_map: dict
    delay_factor_map: dict
    welfare_loss: float
    buyer_payoff: float
    seller_payoffs: dict
    regime_label: str
    i_star: int
    pi_star: float | None = None
    r_b: float = 1.0
    r_s: float = 1.0
    extension: bool = False
    conditional_loss: dict = field(default_factory=dict)

    @property
    def expected_delay(self):
        return float(sum(p * (1 - self.delay_factor_map[c]) for p, c in zip(self.pi, self.costs)))

    def to_dict(self):
        d = asdict(self)
        for k in ("seller_offer_map", "trade_price_map", "delay_factor_map", "seller_payoffs",
                  "conditional_loss"):
            d[k] = {repr(c): v for c, v in d[k].items()}
        d["costs"], d["pi"] = list(self.costs), list(self.pi)
        d["expected_delay"] = self.expected_delay
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("expected_delay", None)
        for k in ("seller_offer_map", "trade_price_map", "delay_factor_map", "seller_payoffs",
                  "conditional_loss"):
            d[k] = {float(c): v for c, v in d[k].items()}
        d["costs"], d["pi"] = tuple(d["costs"]), tuple(d["pi"])
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict())

    CSV_FIELDS = ("regime_label", "i_star", "buyer_offer", "buyer_payoff", "welfare_loss",
                  "expected_delay")

    def csv_row(self):
        return [getattr(self, f) for f in self.CSV_FIELDS]


def _equilibrium_at(k, pi, costs, r_b, r_s, pstar):
    """Limit outcome when the buyer screens at cutoff k (1-based; k = n pools)."""
    n = len(costs)
    nxt = costs[1:] + (1.0,)
    th = costs[k - 1]
    offer = min(rubinstein_price(th, r_b, r_s), nxt[k - 1])
    factor = delay_factor_high_type(th, nxt[k - 1], r_b, r_s) if k < n else 1.0
    offers, prices, factors, values, losses = {}, {}, {}, {}, {}
    buyer = 0.0
    for j, (c, p) in enumerate(zip(costs, pi)):
        demand = seller_counteroffer(c, offer, costs, r_b, r_s)
        offers[c] = demand
        if j < k:
            prices[c], factors[c] = demand, 1.0
            buyer += p * (1 - demand)
        else:
            prices[c], factors[c] = 1.0, factor
        values[c] = factors[c] * (prices[c] - c)
        losses[c] = (1 - c) * (1 - factors[c])
    loss = float(sum(p * losses[c] for c, p in zip(costs, pi)))
    return LimitEquilibrium(costs, tuple(pi), offer, offers, prices, factors, loss, buyer, values,
                            "pooling" if k == n else "screening", k, pstar, r_b, r_s,
                            r_b != r_s, losses)


def limit_equilibrium_exogenous(pi, costs, r_b=1.0, r_s=1.0):
    """Limit outcome for an exogenous, full-support cost distribution."""
    costs = _check_costs(costs)
    pi = tuple(float(p) for p in pi)
    if len(pi) != len(costs):
        raise ParamError("one probability per cost is required", "pi")
    if any(p <= 0 for p in pi) or abs(sum(pi) - 1) > 1e-9:
        raise ParamError("pi must be a full-support distribution", "pi")
    pstar = pi_star(*costs, r_b, r_s) if len(costs) == 2 else None
    try:
        k = i_star(pi, costs, r_b, r_s)
    except NonGenericError as e:
        cands = [_equilibrium_at(i, pi, costs, r_b, r_s, pstar) for i in e.candidates]
        raise NonGenericError("knife-edge distribution: several limit outcomes",
                              cands, "pi") from None
    return _equilibrium_at(k, pi, costs, r_b, r_s, pstar)
