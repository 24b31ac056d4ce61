"""Parameter sweeps over the limit objects and monotonicity certification."""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import adoption, limiteq
from .params import NonGenericError, ParamError, rubinstein_price

STRICT_TOL = 1e-9
QUANTITIES = ("label", "welfare_loss", "expected_delay", "adoption_prob", "buyer_payoff",
              "rho_star", "pi_star", "n_equilibria")
ALIASES = {"delay": "expected_delay", "loss": "welfare_loss", "adoption": "adoption_prob"}
AXES = ("theta1", "theta2", "gap", "c", "pi1", "r_b", "r_s")


@dataclass
class SweepTable:
    axes: tuple  # ((name, values), ...)
    quantities: tuple
    rows: list = field(default_factory=list)

    def column(self, name):
        name = ALIASES.get(name, name)
        return [r[name] for r in self.rows]

    @property
    def header(self):
        return [a for a, _ in self.axes] + list(self.quantities) + ["boundary", "flags"]

    def to_csv(self, digits=12):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([_fmt(r[h], digits) for h in self.header])
        return buf.getvalue()


def _fmt(v, digits=12):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.{digits}g}"
    if isinstance(v, (list, tuple)):
        return ";".join(str(x) for x in v)
    return "" if v is None else str(v)


def evaluate_point(point):
    """Limit quantities at one parameter point.

    With "c" present the adoption game is solved (the inefficient limit is
    reported when several coexist); otherwise "pi1" selects the exogenous
    binary game.
    """
    p = dict(point)
    r_b, r_s = p.get("r_b", 1.0), p.get("r_s", 1.0)
    t1 = p["theta1"]
    t2 = p["theta2"] if "theta2" in p else t1 + p["gap"]
    row = {k: None for k in QUANTITIES}
    flags = []
    tol = 1e-12
    if not (0 < t1 < 1 and t2 < 1) or t2 < t1 - tol:
        row.update(label="infeasible", n_equilibria=0)
        return row, True, ["outside the cost domain"]
    if "c" in p:
        c = p["c"]
        if abs(t2 - t1) <= tol:
            row.update(label=adoption.NO_ADOPTION, adoption_prob=0.0, expected_delay=0.0,
                       welfare_loss=0.0, n_equilibria=1)
            return row, True, ["identical technologies"]
        if c <= tol:
            row.update(label=adoption.EFFICIENT, adoption_prob=1.0, expected_delay=0.0,
                       welfare_loss=0.0, n_equilibria=1)
            return row, True, ["free adoption"]
        reg = adoption.classify_regime(t1, t2, c, r_b, r_s)
        eqs = adoption.limit_equilibria_endogenous(t1, t2, c, r_b, r_s)
        e = next((q for q in eqs if not q.efficient), eqs[0])
        row.update(label=reg.label, welfare_loss=e.welfare_loss, expected_delay=e.expected_delay,
                   adoption_prob=e.adoption_prob, buyer_payoff=e.buyer_value,
                   rho_star=None if e.efficient else e.buyer_mix,
                   pi_star=limiteq.pi_star(t1, t2, r_b, r_s),
                   n_equilibria=len({q.label + str(q.efficient) for q in eqs}))
        if reg.boundary:
            flags.append("boundary:" + "|".join(reg.neighbors))
        return row, reg.boundary, flags
    pi1 = p["pi1"]
    ps = limiteq.pi_star(t1, t2, r_b, r_s)
    try:
        le = limiteq.limit_equilibrium_exogenous((pi1, 1 - pi1), (t1, t2), r_b, r_s)
        boundary = False
    except NonGenericError as err:
        le = err.candidates[0]
        boundary = True
        flags.append("boundary:pi1=pi_star")
    gap = limiteq.screening_gap_condition(t1, t2)
    if gap.boundary or abs(rubinstein_price(t1, r_b, r_s) - t2) <= tol:
        boundary = True
        flags.append("boundary:kink")
    row.update(label=le.regime_label, welfare_loss=le.welfare_loss,
               expected_delay=le.expected_delay, adoption_prob=None,
               buyer_payoff=le.buyer_payoff, pi_star=ps, n_equilibria=1)
    return row, boundary, flags


def sweep(axes, quantities=("welfare_loss", "expected_delay"), base=None):
    """Evaluate the limit objects on the product grid of `axes`.

    axes: sequence of (name, values); values must be strictly increasing.
    base: fixed parameters for names not swept.
    """
    axes = tuple((n, tuple(float(v) for v in vals)) for n, vals in axes)
    if not axes:
        raise ParamError("at least one axis is required", "axes")
    for name, vals in axes:
        if name not in AXES:
            raise ParamError(f"unknown axis {name!r}", "axes")
        if not vals:
            raise ParamError(f"axis {name} is empty", "axes")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ParamError(f"axis {name} must be strictly increasing", "axes")
    quantities = tuple(ALIASES.get(q, q) for q in quantities)
    for q in quantities:
        if q not in QUANTITIES:
            raise ParamError(f"unknown quantity {q!r}", "quantity")
    base = dict(base or {})
    table = SweepTable(axes, quantities)
    names = [n for n, _ in axes]
    for combo in itertools.product(*(v for _, v in axes)):
        point = {**base, **dict(zip(names, combo))}
        vals, boundary, flags = evaluate_point(point)
        row = dict(zip(names, combo))
        row.update({q: vals[q] for q in quantities})
        row["label"] = vals["label"]
        row["boundary"] = boundary
        row["flags"] = flags
        table.rows.append(row)
    return table


def figure_grid(theta1=0.1, step=0.01):
    """Regime map over (theta2 - theta1, c) on [0, 1]^2 at fixed theta1."""
    g = np.round(np.arange(0.0, 1.0 + step / 2, step), 12)
    return sweep([("gap", g), ("c", g)], ("label", "adoption_prob", "expected_delay"),
                 {"theta1": theta1})


@dataclass(frozen=True)
class Claim:
    quantity: str
    direction: str  # "increasing" or "decreasing"
    strict: bool = False
    lo: float = -np.inf  # open interval on the axis
    hi: float = np.inf
    by_regime: bool = False  # compare only rows sharing a regime label


@dataclass
class MonotonicityReport:
    claim: Claim
    passed: bool
    n_pairs: int
    violations: list

    def to_dict(self):
        return {"quantity": self.claim.quantity, "direction": self.claim.direction,
                "strict": self.claim.strict, "passed": self.passed, "n_pairs": self.n_pairs,
                "violations": self.violations}


def check_monotonicity(table, claim, tol=1e-12, strict_tol=STRICT_TOL):
    """Confirm or refute a one-axis monotonicity claim on consecutive rows."""
    if len(table.axes) != 1:
        raise ParamError("monotonicity needs a single-axis table", "table")
    axis = table.axes[0][0]
    q = ALIASES.get(claim.quantity, claim.quantity)
    rows = [r for r in table.rows if claim.lo < r[axis] < claim.hi]
    sign = 1.0 if claim.direction == "increasing" else -1.0
    violations, n = [], 0
    for a, b in zip(rows, rows[1:]):
        if a["boundary"] or b["boundary"]:
            continue
        if a["label"] != b["label"]:
            if claim.by_regime:
                continue
        d = sign * (b[q] - a[q])
        n += 1
        bad = d <= strict_tol if claim.strict else d < -tol
        if bad:
            violations.append({axis: (a[axis], b[axis]), q: (a[q], b[q])})
    return MonotonicityReport(claim, not violations, n, violations)


@dataclass
class ComparisonReport:
    theta1: float
    theta1_hat: float
    theta2: float
    c: float
    adoption: tuple  # (at theta1, at theta1_hat)
    delay: tuple
    adoption_higher: bool
    delay_lower: bool

    def to_dict(self):
        return dict(self.__dict__)


def compare_adoption(theta1, theta1_hat, theta2, c):
    """Effect of a cheaper new technology on adoption and delay (equal rates)."""
    delta = theta2 - theta1
    checks = [
        (theta2 - theta1 > (1 - theta2) / 2, "theta2 - theta1 > (1 - theta2)/2"),
        (max(0.5, (1 - theta2) / (1 - theta1)) * delta < c < delta,
         "max{1/2, (1-theta2)/(1-theta1)}(theta2-theta1) < c < theta2-theta1"),
        (theta1_hat <= theta1, "theta1_hat <= theta1"),
        (rubinstein_price(theta1_hat) < theta2, "p(theta1_hat) < theta2"),
        (theta2 - 2 * c < theta1_hat < theta2 - c, "theta2 - 2c < theta1_hat < theta2 - c"),
    ]
    for ok, text in checks:
        if not ok:
            raise ParamError(f"precondition failed: {text}", "theta1_hat")

    def outcome(t1):
        eqs = adoption.limit_equilibria_endogenous(t1, theta2, c)
        e = next((q for q in eqs if not q.efficient), eqs[0])
        return e.adoption_prob, e.expected_delay

    a1, d1 = outcome(theta1)
    a0, d0 = outcome(theta1_hat)
    if theta1_hat == theta1:
        return ComparisonReport(theta1, theta1_hat, theta2, c, (a1, a0), (d1, d0), False, False)
    return ComparisonReport(theta1, theta1_hat, theta2, c, (a1, a0), (d1, d0),
                            a1 > a0 + STRICT_TOL, d1 < d0 - STRICT_TOL)


@dataclass
class WelfareComparison:
    part: int  # 1: equal in the limit, 2: strict ranking, 0: no adoption
    welfare_with: tuple  # one per limit equilibrium
    welfare_without: float
    lowest_with: float
    difference: float  # lowest_with - welfare_without
    holds: bool

    def to_dict(self):
        return dict(self.__dict__)


def welfare_with_without_adoption(theta1, theta2, c, tol=STRICT_TOL):
    """Limit welfare with the adoption opportunity against bargaining at theta2 alone."""
    delta = theta2 - theta1
    without = 1 - theta2
    if c > delta:
        part = 0
    elif delta > 1 - theta2 and delta / 2 < c < delta:
        part = 1
    elif (1 - theta2) / 2 < delta < 1 - theta2 and (1 - theta2) * delta / (1 - theta1) < c < delta:
        part = 2
    else:
        raise ParamError("parameters outside both welfare-comparison regions", "c")
    ws = tuple(e.welfare for e in adoption.limit_equilibria_endogenous(theta1, theta2, c))
    low = min(ws)
    diff = low - without
    holds = abs(diff) <= tol if part in (0, 1) else diff > tol
    return WelfareComparison(part, ws, without, low, diff, holds)
