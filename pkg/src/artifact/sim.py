"""Monte Carlo play of the bargaining game under an explicit strategy profile.

Concession times are drawn exactly by inverting the piecewise-exponential
survival function of each war of attrition, so there is no time grid.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .params import ParamError, make_params
from .woa import bayes_update, solve_woa

CHUNK = 1 << 16


def _key(p):
    return round(float(p), 12)


def _norm(d):
    """Probability dict with rounded price keys and zero entries dropped."""
    out = {}
    for p, w in d.items():
        if w > 0:
            out[_key(p)] = out.get(_key(p), 0.0) + float(w)
    return out


class CounterofferRule:
    """Limit counteroffer rule evaluated on a finite seller grid.

    A type whose cost is at least p_b demands 1.  Otherwise the target is
    the demand that equalises both concession rates against the largest
    supported cost below p_b.  snap="below" takes the largest grid point
    strictly under the target, so the seller's rate exceeds the buyer's and
    the buyer is the side that gives in; snap="floor" allows the target.
    Targets at or below p_b mean acceptance, encoded as a demand of p_b.
    """

    def __init__(self, costs, pi, seller_grid, r_b=1.0, r_s=1.0, snap="below", overrides=None):
        if snap not in ("below", "floor"):
            raise ParamError(f"unknown snap mode {snap!r}", "snap")
        self.costs = tuple(costs)
        self.pi = tuple(pi)
        self.grid = seller_grid
        self.r_b, self.r_s = r_b, r_s
        self.snap = snap
        self.overrides = {(j, _key(p)): _norm(d) for (j, p), d in (overrides or {}).items()}
        self._cache = {}

    def __call__(self, j, p_b):
        key = (j, _key(p_b))
        if key in self.overrides:
            return self.overrides[key]
        if key not in self._cache:
            self._cache[key] = self._rule(j, p_b)
        return self._cache[key]

    def _rule(self, j, p_b):
        th = self.costs[j]
        if p_b <= th:
            return {1.0: 1.0}
        below = [c for c, w in zip(self.costs, self.pi) if w > 0 and c < p_b] + [th]
        target = 1.0 - (self.r_s / self.r_b) * (p_b - max(below))
        if target <= p_b + 1e-12:
            return {_key(p_b): 1.0}
        q = self.grid.below(target) if self.snap == "below" else self.grid.floor(target)
        if q is None or q <= p_b + 1e-12:
            return {_key(p_b): 1.0}
        return {_key(q): 1.0}


@dataclass
class StrategyProfile:
    """Offers, priors and (lazily solved) concession laws for every offer pair."""
    costs: tuple
    pi: tuple
    buyer_offers: dict
    seller_rule: object  # callable (type index, p_b) -> {p_s: prob}
    eps_b: float
    eps_s: float
    mu_b: dict
    mu_s: dict
    r_b: float = 1.0
    r_s: float = 1.0
    adoption_costs: tuple | None = None
    policy: object = "prior"
    label: str = ""
    params: object = None
    fixed: dict = field(default_factory=dict)  # (p_b, p_s) -> WoaSolution
    _solutions: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.buyer_offers = _norm(self.buyer_offers)
        self.mu_b = _norm(self.mu_b)
        self.mu_s = _norm(self.mu_s)
        self.pi = tuple(float(p) for p in self.pi)
        self.fixed = {(_key(a), _key(b)): s for (a, b), s in self.fixed.items()}
        if abs(sum(self.buyer_offers.values()) - 1) > 1e-9:
            raise ParamError("buyer offer probabilities must sum to 1", "buyer_offers")
        if abs(sum(self.pi) - 1) > 1e-9 or len(self.pi) != len(self.costs):
            raise ParamError("pi must be a distribution over the costs", "pi")

    @property
    def n(self):
        return len(self.costs)

    def seller_offer(self, j, p_b):
        return self.seller_rule(j, _key(p_b))

    def offer_mass(self, p_b):
        """Prior probability that the buyer opens with p_b."""
        p = _key(p_b)
        return self.eps_b * self.mu_b.get(p, 0.0) + (1 - self.eps_b) * self.buyer_offers.get(p, 0.0)

    def beliefs(self, p_b, p_s, policy=None):
        p_b, p_s = _key(p_b), _key(p_s)
        sig = [self.seller_offer(j, p_b).get(p_s, 0.0) for j in range(self.n)]
        return bayes_update(self.eps_b, self.mu_b.get(p_b, 0.0), self.buyer_offers.get(p_b, 0.0),
                            self.eps_s, self.mu_s.get(p_s, 0.0), sig, self.pi, self.costs, p_s,
                            self.policy if policy is None else policy,
                            buyer_policy="prior")  # buyer deviations are scored off-path

    def solve(self, p_b, p_s, beliefs):
        return solve_woa(p_b, p_s, beliefs, self.costs, self.r_b, self.r_s, with_payoffs=False)

    def solution(self, p_b, p_s):
        """Concession-game solution on the path (p_b, p_s); requires p_s > p_b."""
        key = (_key(p_b), _key(p_s))
        if key in self.fixed:
            return self.fixed[key]
        if key not in self._solutions:
            self._solutions[key] = self.solve(key[0], key[1], self.beliefs(*key))
        return self._solutions[key]

    def describe(self):
        return {"label": self.label, "costs": list(self.costs), "pi": list(self.pi),
                "buyer_offers": self.buyer_offers, "eps_b": self.eps_b, "eps_s": self.eps_s,
                "policy": self.policy if isinstance(self.policy, str) else "custom"}

    # builders -----------------------------------------------------------

    @classmethod
    def from_woa(cls, sol, label="woa"):
        """Profile whose only reachable concession game is `sol` under its beliefs."""
        b = sol.beliefs
        es = b.eps_s_hat
        if es >= 1:
            raise ParamError("the seller must be rational with positive probability", "beliefs")
        pi = tuple(p / (1 - es) for p in b.pi_hat)
        p_b, p_s = _key(sol.p_b), _key(sol.p_s)
        return cls(sol.costs, pi, {p_b: 1.0}, lambda j, q: {p_s: 1.0}, b.eps_b_hat, es,
                   {p_b: 1.0}, {p_s: 1.0}, sol.r_b, sol.r_s, label=label,
                   fixed={(p_b, p_s): sol})

    @classmethod
    def from_offers(cls, costs, pi, buyer_offers, eps, nu=0.02, r_b=1.0, r_s=1.0,
                    adoption_costs=None, snap="below", overrides=None, policy="prior", label=""):
        """Instantiate limit strategies at commitment probability eps on the grid for nu.

        The grids are augmented with the buyer's offers so they are feasible.
        """
        offers = _norm(buyer_offers)
        params = make_params(costs, adoption_costs, r_b, r_s, eps, nu, extra_prices=list(offers))
        rule = CounterofferRule(params.costs, pi, params.seller_grid, r_b, r_s, snap, overrides)
        mu_b = dict(zip(params.buyer_grid.points, params.mu_b))
        mu_s = dict(zip(params.seller_grid.points, params.mu_s))
        return cls(params.costs, tuple(pi), offers, rule, eps, eps, mu_b, mu_s, r_b, r_s,
                   adoption_costs, policy, label, params)

    @classmethod
    def from_limit(cls, le, eps, nu=0.02, **kw):
        """Profile for a LimitEquilibrium of the exogenous game."""
        kw.setdefault("label", f"{le.regime_label} pi={list(le.pi)}")
        return cls.from_offers(le.costs, le.pi, {le.buyer_offer: 1.0}, eps, nu, le.r_b, le.r_s,
                               **kw)

    @classmethod
    def from_adoption(cls, eq, theta1, theta2, c, eps, nu=0.02, r_b=1.0, r_s=1.0, **kw):
        """Profile for an AdoptionEquilibrium: adoption mix and buyer offer mix."""
        screen, pool = eq.offers
        offers = {}
        for p, w in ((screen, 1 - eq.buyer_mix), (pool, eq.buyer_mix)):
            if w > 0:
                offers[_key(p)] = offers.get(_key(p), 0.0) + w
        pi = (eq.adoption_prob, 1 - eq.adoption_prob)
        kw.setdefault("label", f"{eq.label} adoption={eq.adoption_prob:.6g}")
        return cls.from_offers((theta1, theta2), pi, offers, eps, nu, r_b, r_s, (c, 0.0), **kw)


@dataclass
class PathOutcome:
    tau: float
    price: float | None
    buyer_committed: bool
    seller_type: int | None  # None for a committed seller
    p_b: float
    p_s: float
    buyer_payoff: float
    seller_payoff: float
    tied: bool = False


def _choice(rng, d, size):
    keys = np.fromiter(d.keys(), dtype=float)
    probs = np.fromiter(d.values(), dtype=float)
    return keys[rng.choice(keys.size, size=size, p=probs / probs.sum())]


def simulate(profile, n, rng, tie_window=0.0):
    """Draw n independent paths; returns a dict of per-path arrays."""
    n = int(n)
    s_commit = rng.random(n) < profile.eps_s
    s_type = rng.choice(profile.n, size=n, p=np.asarray(profile.pi))
    s_type = np.where(s_commit, -1, s_type)
    b_commit = rng.random(n) < profile.eps_b
    b_offer = np.where(b_commit, _choice(rng, profile.mu_b, n), _choice(rng, profile.buyer_offers, n))
    p_s = np.where(s_commit, _choice(rng, profile.mu_s, n), 0.0)
    u_b = rng.random(n)
    u_s = rng.random(n)
    for j in range(profile.n):
        idx = np.flatnonzero(s_type == j)
        if idx.size == 0:
            continue
        offers = b_offer[idx]
        for pb in np.unique(offers):
            sub = idx[offers == pb]
            d = profile.seller_offer(j, pb)
            p_s[sub] = _choice(rng, d, sub.size) if len(d) > 1 else next(iter(d))
    tau_b = np.full(n, np.inf)
    tau_s = np.full(n, np.inf)
    accept = p_s <= b_offer + 1e-12
    tau_s[accept] = 0.0
    war = np.flatnonzero(~accept)
    if war.size:
        pairs = np.stack([b_offer[war], p_s[war]], axis=1)
        uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
        inv = inv.ravel()
        for g, (pb, ps) in enumerate(uniq):
            rows = war[inv == g]
            sol = profile.solution(pb, ps)
            bel = sol.beliefs
            rb = rows[~b_commit[rows]]
            if rb.size:
                pos = u_b[rb] * (1.0 - bel.eps_b_hat)
                tau_b[rb] = sol.buyer_law.times(pos)
            cum = np.concatenate(([0.0], np.cumsum(bel.pi_hat)))
            for j in range(profile.n):
                rj = rows[s_type[rows] == j]
                if rj.size == 0:
                    continue
                lo, hi = cum[j], cum[j + 1]
                if hi > lo:
                    tau_s[rj] = sol.seller_law.times(lo + u_s[rj] * (hi - lo))
    t, price, tied = _kernels.resolve_trades(tau_b, tau_s, b_offer, p_s, tie_window)
    price = np.where(accept, b_offer, price)
    tied = tied & ~accept
    trade = np.isfinite(t)
    disc_b = np.where(trade, np.exp(-profile.r_b * np.where(trade, t, 0.0)), 0.0)
    disc_s = np.where(trade, np.exp(-profile.r_s * np.where(trade, t, 0.0)), 0.0)
    theta = np.where(s_type >= 0, np.asarray(profile.costs)[np.maximum(s_type, 0)], np.nan)
    ac = np.zeros(n)
    if profile.adoption_costs is not None:
        ac = np.where(s_type >= 0, np.asarray(profile.adoption_costs)[np.maximum(s_type, 0)], 0.0)
    buyer = disc_b * (1.0 - np.where(trade, price, 0.0))
    seller = disc_s * (np.where(trade, price, 0.0) - theta) - ac
    seller = np.where(trade, seller, -ac)
    return {"tau": t, "price": np.where(trade, price, np.nan), "tied": tied, "b_commit": b_commit,
            "s_type": s_type, "p_b": b_offer, "p_s": np.where(accept, b_offer, p_s),
            "buyer": buyer, "seller": seller, "disc_b": disc_b, "disc_s": disc_s}


def sample_path(profile, seed=None, tie_window=0.0):
    """One play of the game; the first path of estimate_outcomes with the same seed."""
    ss = np.random.SeedSequence(seed).spawn(1)[0]
    out = simulate(profile, 1, np.random.default_rng(ss), tie_window)
    st = int(out["s_type"][0])
    t = float(out["tau"][0])
    return PathOutcome(t, None if not np.isfinite(t) else float(out["price"][0]),
                       bool(out["b_commit"][0]), None if st < 0 else st, float(out["p_b"][0]),
                       float(out["p_s"][0]), float(out["buyer"][0]), float(out["seller"][0]),
                       bool(out["tied"][0]))


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return (float("nan"), float("nan"))
    se = float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0
    return (float(np.mean(x)), se)


@dataclass
class EstimateReport:
    n_paths: int
    seed: object
    buyer_payoff: tuple  # (mean, standard error) over rational buyers
    seller_payoffs: dict  # cost -> (mean, se) over rational sellers of that type
    buyer_discount: tuple  # E[exp(-r_b min tau)] for rational buyers
    seller_discounts: dict  # cost -> E[exp(-r_s min tau)]
    discount: tuple  # rational buyer against rational seller, rate r_b
    trade_prob: tuple
    tie_freq: float
    conditional_delay: dict = field(default_factory=dict)  # cost -> 1 - E[disc | type]

    @property
    def expected_delay(self):
        return (1.0 - self.discount[0], self.discount[1])

    def to_dict(self):
        key = lambda d: {repr(k): list(v) if isinstance(v, tuple) else v for k, v in d.items()}
        return {"n_paths": self.n_paths, "seed": self.seed, "buyer_payoff": list(self.buyer_payoff),
                "seller_payoffs": key(self.seller_payoffs),
                "buyer_discount": list(self.buyer_discount),
                "seller_discounts": key(self.seller_discounts), "discount": list(self.discount),
                "expected_delay": list(self.expected_delay), "trade_prob": list(self.trade_prob),
                "tie_freq": self.tie_freq, "conditional_delay": key(self.conditional_delay)}

    @classmethod
    def from_dict(cls, d):
        unkey = lambda m: {float(k): tuple(v) if isinstance(v, list) else v for k, v in m.items()}
        return cls(d["n_paths"], d["seed"], tuple(d["buyer_payoff"]), unkey(d["seller_payoffs"]),
                   tuple(d["buyer_discount"]), unkey(d["seller_discounts"]), tuple(d["discount"]),
                   tuple(d["trade_prob"]), d["tie_freq"], unkey(d["conditional_delay"]))

    def to_json(self):
        return json.dumps(self.to_dict())


def estimate_outcomes(profile, n_paths=100_000, seed=0, tie_window=0.0, dump=None, dump_cap=10_000):
    """Means and standard errors from n_paths simulated plays.

    Paths are drawn in fixed-size chunks with child seeds spawned from
    `seed`, so results do not depend on how the work is split.  `dump`, if
    given, receives up to dump_cap rows of per-path data as CSV.
    """
    if n_paths < 1:
        raise ParamError("n_paths must be at least 1", "n_paths")
    n_chunks = -(-n_paths // CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    parts = []
    for k, ss in enumerate(children):
        size = min(CHUNK, n_paths - k * CHUNK)
        parts.append(simulate(profile, size, np.random.default_rng(ss), tie_window))
    out = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    rb = ~out["b_commit"]
    rs = out["s_type"] >= 0
    sellers, sdisc, cdelay = {}, {}, {}
    for j, th in enumerate(profile.costs):
        m = out["s_type"] == j
        sellers[th] = _mean_se(out["seller"][m])
        sdisc[th] = _mean_se(out["disc_s"][m])
        both = m & rb
        d = _mean_se(out["disc_b"][both])
        cdelay[th] = 1.0 - d[0]
    if dump is not None:
        cols = ("p_b", "p_s", "s_type", "b_commit", "tau", "price", "buyer", "seller")
        dump.write(",".join(cols) + "\n")
        for i in range(min(dump_cap, n_paths)):
            dump.write(",".join(f"{float(out[c][i]):.12g}" for c in cols) + "\n")
    return EstimateReport(
        n_paths, seed, _mean_se(out["buyer"][rb]), sellers, _mean_se(out["disc_b"][rb]), sdisc,
        _mean_se(out["disc_b"][rb & rs]), _mean_se(np.isfinite(out["tau"][rb & rs])),
        float(np.mean(out["tied"])), cdelay)
