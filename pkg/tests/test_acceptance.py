"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import csv
import io
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from artifact.adoption import (classify_regime, classify_regime_multi, limit_equilibria_endogenous,
                               rho_star)
from artifact.limiteq import (i_star, limit_equilibrium_exogenous, pi_star, screening_gap_condition,
                              screening_payoffs)
from artifact.params import rubinstein_price
from artifact.sim import StrategyProfile, estimate_outcomes
from artifact.statics import (Claim, check_monotonicity, compare_adoption, sweep,
                              welfare_with_without_adoption)
from artifact.verify import best_response_gap, verify_woa_indifference
from artifact.woa import BeliefState, exhaustion_residuals, solve_woa, woa_payoffs

EPS_LADDER = (1e-2, 1e-3, 1e-4)


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {k:>2} {'PASS' if ok else 'FAIL'}: {detail}")
    return emit


def p_rub(t):
    return (1 + t) / 2


# 1 -------------------------------------------------------------------------

def test_c01_cutoffs(report):
    t0 = time.perf_counter()
    vals = [pi_star(0.1, 0.7), pi_star(0.2, 0.6), pi_star(0.4, 0.5)]
    elapsed = time.perf_counter() - t0
    want = [1 / 3, 1 / 2, 1.0]
    err = max(abs(a - b) for a, b in zip(vals, want))
    ok = err <= 1e-12 and elapsed < 1e-3 and min(vals) > 0
    report(1, ok, f"cutoffs {vals}, max error {err:.1e}, {elapsed * 1e3:.3f} ms")
    assert ok


# 2 -------------------------------------------------------------------------

def test_c02_screening_loss(report):
    eq = limit_equilibrium_exogenous((0.5, 0.5), (0.1, 0.7))
    want = (1 - 0.7) * (1 - 0.5)
    err = abs(eq.conditional_loss[0.7] - want)
    ok = eq.regime_label == "screening" and err <= 1e-12
    report(2, ok, f"loss given high cost {eq.conditional_loss[0.7]!r}, error {err:.1e}")
    assert ok


# 3 -------------------------------------------------------------------------

def test_c03_unique_inefficient(report):
    t0 = time.perf_counter()
    (eq,) = limit_equilibria_endogenous(0.1, 0.7, 0.4)
    point = (abs(eq.adoption_prob - 1 / 3), abs(eq.buyer_mix - 1 / 3), abs(eq.expected_delay - 2 / 9))
    worst, n = 0.0, 0
    for t1 in np.linspace(0.01, 0.6, 50):
        for t2 in np.linspace(t1 + 0.005, 0.995, 50):
            d = t2 - t1
            if not (d > (1 - t2) / 2 and p_rub(t1) < t2):
                continue
            for s in np.linspace(0.01, 0.99, 50):
                c = d / 2 + s * d / 2
                ps = (p_rub(t2) - t2) / (p_rub(t1) - t1)  # closed-form cutoff
                lhs = (1 - pi_star(t1, t2)) * (1 - rho_star(t1, t2, c)) / 2
                worst = max(worst, abs(lhs - (d - c) / (1 - t1)), abs(pi_star(t1, t2) - ps))
                n += 1
    elapsed = time.perf_counter() - t0
    ok = max(point) <= 1e-12 and worst <= 1e-12 and elapsed < 5 and n > 10_000
    report(3, ok, f"point errors {max(point):.1e}; identity on {n} cells max error {worst:.1e}; "
                  f"{elapsed:.2f} s")
    assert ok


# 4 -------------------------------------------------------------------------

def test_c04_multiple_limits(report):
    eqs = limit_equilibria_endogenous(0.3, 0.6, 0.24)
    bad = next(e for e in eqs if not e.efficient)
    point = max(abs(bad.buyer_mix - 8 / 15), abs(bad.expected_delay - 1 / 15))
    worst, n = 0.0, 0
    for t1 in np.linspace(0.01, 0.6, 50):
        for t2 in np.linspace(t1 + 0.005, 0.995, 50):
            d = t2 - t1
            if not (d > (1 - t2) / 2 and p_rub(t1) >= t2):
                continue
            lo = (1 - t2) * d / (1 - t1)
            for s in np.linspace(0.01, 0.99, 50):
                c = lo + s * (d - lo)
                closed = (3 * t2 - 1 - 2 * t1) * (d - c) / (2 * d * d)
                lhs = (1 - pi_star(t1, t2)) * (1 - rho_star(t1, t2, c)) * d / (1 - t1)
                (e,) = [q for q in limit_equilibria_endogenous(t1, t2, c) if not q.efficient] or [None]
                worst = max(worst, abs(lhs - closed), abs(e.expected_delay - closed))
                n += 1
    ok = point <= 1e-12 and worst <= 1e-12 and n > 1000
    report(4, ok, f"point error {point:.1e}; identity on {n} cells max error {worst:.1e}")
    assert ok


# 5 -------------------------------------------------------------------------

def _battery(n_points=40, seed=2024):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n_points:
        n = int(rng.integers(1, 5))
        costs = tuple(np.sort(rng.uniform(0.01, 0.9, n)))
        if n > 1 and min(np.diff(costs)) < 0.02:
            continue
        p_b = float(rng.uniform(costs[0] + 0.01, 0.95))
        p_s = float(rng.uniform(p_b + 0.01, 0.999))
        es = float(rng.uniform(0.01, 0.4))
        w = rng.dirichlet(np.ones(n)) * (1 - es)
        beliefs = BeliefState(float(rng.uniform(0.01, 0.6)), es, tuple(w))
        out.append(solve_woa(p_b, p_s, beliefs, costs, 1.0, float(rng.uniform(0.5, 2.0))))
    return out


def test_c05_woa_consistency(report):
    sols = _battery()
    excl = max(min(s.c_b, s.c_s) for s in sols)
    exhaust = max(max(exhaustion_residuals(s)) for s in sols)
    reps = [verify_woa_indifference(s, tol=1e-6) for s in sols]
    indiff = max(r.max_indifference_error for r in reps)
    one = solve_woa(0.5, 0.8, BeliefState(0.1, 0.1, (0.9,)), (0.2,))
    two = solve_woa(0.5, 0.8, BeliefState(0.1, 0.1, (0.45, 0.45)), (0.2, 0.6))
    # oracle for the two-type example: the low type's mass 0.45 runs out at rate
    # 2/3 when survival reaches 0.55; the buyer's atom then clears her rational mass
    t_end = 1.5 * math.log(1 / 0.55)
    cb_exact = 1 - 0.1 * math.exp(t_end)
    worked = max(abs(one.c_s - 0.53584), abs(two.c_b - cb_exact))
    ok = (len(sols) >= 10 and excl <= 1e-12 and exhaust <= 1e-10 and all(r.passed for r in reps)
          and worked <= 1e-5)
    report(5, ok, f"{len(sols)} points: atom overlap {excl:.1e}, exhaustion {exhaust:.1e}, "
                  f"indifference {indiff:.1e}; worked c_s={one.c_s:.6f} c_b={two.c_b:.6f} "
                  f"(exact {cb_exact:.6f}; the rounded 0.75485 differs by {abs(two.c_b - 0.75485):.1e})")
    assert ok


# 6 -------------------------------------------------------------------------

def _within(est, want, k=3.0):
    return abs(est[0] - want) <= k * est[1] + 1e-12


def test_c06_monte_carlo(report):
    t0 = time.perf_counter()
    checks, fails = 0, []
    for i, sol in enumerate(_battery(8, seed=77)):
        v = woa_payoffs(sol)
        rep = estimate_outcomes(StrategyProfile.from_woa(sol), 100_000, seed=i)
        pairs = [("buyer", rep.buyer_payoff, v.buyer_value), ("discount", rep.buyer_discount, v.buyer_discount)]
        pairs += [(f"seller {th:.3f}", rep.seller_payoffs[th], v.seller_values[j])
                  for j, th in enumerate(sol.costs) if sol.beliefs.pi_hat[j] > 0]
        for name, est, want in pairs:
            checks += 1
            if not _within(est, want):
                fails.append((i, name, est, want))
    # limit closed forms, instantiated at a tiny commitment probability
    le = limit_equilibrium_exogenous((0.5, 0.5), (0.1, 0.7))
    rep = estimate_outcomes(StrategyProfile.from_limit(le, 1e-8), 100_000, seed=100)
    for name, est, want in [("screen buyer", rep.buyer_payoff, le.buyer_payoff),
                            ("screen seller 0.1", rep.seller_payoffs[0.1], le.seller_payoffs[0.1]),
                            ("screen seller 0.7", rep.seller_payoffs[0.7], le.seller_payoffs[0.7])]:
        checks += 1
        if not _within(est, want):
            fails.append(("limit", name, est, want))
    (eq,) = limit_equilibria_endogenous(0.1, 0.7, 0.4)
    rep = estimate_outcomes(StrategyProfile.from_adoption(eq, 0.1, 0.7, 0.4, 1e-8), 100_000, seed=101)
    checks += 1
    if not _within(rep.expected_delay, 2 / 9):
        fails.append(("limit", "adoption delay", rep.expected_delay, 2 / 9))
    elapsed = time.perf_counter() - t0
    ok = not fails and elapsed < 30
    report(6, ok, f"{checks} comparisons over 10 points at 1e5 paths, {len(fails)} outside 3 SE, "
                  f"{elapsed:.1f} s")
    assert ok, fails


# 7 -------------------------------------------------------------------------

def _ladder(make):
    return [best_response_gap(make(eps), policy="deterrent").gap for eps in EPS_LADDER]


def _exo(pi, costs):
    le = limit_equilibrium_exogenous(pi, costs)
    return lambda eps: StrategyProfile.from_limit(le, eps)


def _endo(t1, t2, c, efficient=None):
    def make(eps):
        eqs = limit_equilibria_endogenous(t1, t2, c)
        eq = next(e for e in eqs if efficient is None or e.efficient == efficient)
        return StrategyProfile.from_adoption(eq, t1, t2, c, eps)
    return make


CONVERGING = {
    "screening (0.1,0.7) pi=0.5": _exo((0.5, 0.5), (0.1, 0.7)),
    "pooling (0.1,0.7) pi=0.2": _exo((0.2, 0.8), (0.1, 0.7)),
    "unique-inefficient (0.1,0.7,0.4)": _endo(0.1, 0.7, 0.4, efficient=False),
}
EXACT = {
    "single type 0.3": _exo((1.0,), (0.3,)),
    "no-adoption (0.2,0.6,0.5)": _endo(0.2, 0.6, 0.5),
    "efficient-adoption (0.1,0.7,0.2)": _endo(0.1, 0.7, 0.2, efficient=True),
}
NOT_CONVERGING = {
    "multiple-limits inefficient (0.3,0.6,0.24)": _endo(0.3, 0.6, 0.24, efficient=False),
    "multiple-limits efficient (0.3,0.6,0.24)": _endo(0.3, 0.6, 0.24, efficient=True),
    "efficient pooling (0.4,0.5,0.08)": _endo(0.4, 0.5, 0.08, efficient=True),
}


@pytest.mark.parametrize("name", list(CONVERGING))
def test_c07_gap_shrinks(name, report):
    g = _ladder(CONVERGING[name])
    ok = all(x >= 0 for x in g) and g[0] > g[1] > g[2] and g[2] <= 5e-3
    report(7, ok, f"{name}: gaps {['%.3e' % x for x in g]}")
    assert ok


@pytest.mark.parametrize("name", list(EXACT))
def test_c07_gap_vanishes(name, report):
    g = _ladder(EXACT[name])
    ok = all(0 <= x <= 1e-9 for x in g)
    report(7, ok, f"{name}: gaps {['%.1e' % x for x in g]} (exact equilibrium)")
    assert ok


@pytest.mark.xfail(strict=True, reason="the instantiated limit profile is not an epsilon-equilibrium "
                                       "at attainable epsilon; analysis in the decision ledger")
@pytest.mark.parametrize("name", list(NOT_CONVERGING))
def test_c07_gap_does_not_shrink(name, report):
    g = _ladder(NOT_CONVERGING[name])
    ok = g[0] > g[1] > g[2] and g[2] <= 5e-3
    report(7, ok, f"{name}: gaps {['%.3e' % x for x in g]}")
    assert ok


def test_c07_corrupted_profiles_rejected(report):
    le = limit_equilibrium_exogenous((0.5, 0.5), (0.1, 0.7))
    gaps = []
    for eps in EPS_LADDER:
        high = StrategyProfile.from_limit(le, eps, overrides={(1, 0.55): {0.9: 1.0}})
        buyer = StrategyProfile.from_offers((0.1, 0.7), (0.5, 0.5), {0.1: 1.0}, eps)
        gaps.append((best_response_gap(high, policy="deterrent").gap,
                     best_response_gap(buyer, policy="deterrent").gap))
    ok = all(a > 5e-3 and b > 5e-3 for a, b in gaps)
    report(7, ok, "corrupted profiles rejected: high type demanding 0.9 gaps "
                  f"{['%.3f' % a for a, _ in gaps]}, buyer offering 0.1 gaps {['%.3f' % b for _, b in gaps]}")
    assert ok


# 8 -------------------------------------------------------------------------

def _screening_pair(rng):
    while True:
        t1 = rng.uniform(0.01, 0.6)
        t2 = rng.uniform(t1 + 0.01, 0.99)
        if t2 - t1 > (1 - t2) / 2 + 1e-3:
            return t1, t2


def test_c08_corollaries(report):
    rng = np.random.default_rng(8)
    fails = []
    for g in range(100):
        t1, t2 = _screening_pair(rng)
        ps = pi_star(t1, t2)
        pis = np.sort(rng.uniform(0.001, 0.999, 25))
        pis = pis[np.abs(pis - ps) > 1e-6]
        tab = sweep([("pi1", pis)], ("welfare_loss", "expected_delay"), {"theta1": t1, "theta2": t2})
        below = [r for r in tab.rows if r["pi1"] < ps]
        above = [r for r in tab.rows if r["pi1"] > ps]
        if any(r["welfare_loss"] != 0 or r["expected_delay"] != 0 for r in below):
            fails.append(("cor1 zero", g))
        if any(r["welfare_loss"] <= 0 or r["expected_delay"] <= 0 for r in above):
            fails.append(("cor1 positive", g))
        for q in ("welfare_loss", "expected_delay"):
            if not check_monotonicity(tab, Claim(q, "decreasing", True, lo=ps)).passed:
                fails.append(("cor1 strict", g))
    for g in range(100):
        t2 = rng.uniform(0.3, 0.99)
        pi1 = rng.uniform(0.01, 0.99)
        t1s = np.sort(rng.uniform(0.005, t2 - 0.005, 25))
        tab = sweep([("theta1", t1s)], ("welfare_loss", "expected_delay"), {"theta2": t2, "pi1": pi1})
        for q in ("welfare_loss", "expected_delay"):
            if not check_monotonicity(tab, Claim(q, "decreasing")).passed:
                fails.append(("cor2", g))
    crossings = 0
    for g in range(100):
        t1 = rng.uniform(0.01, 0.6)
        pi1 = rng.uniform(0.01, 0.99)
        t2s = np.sort(rng.uniform(t1 + 0.005, 0.995, 25))
        tab = sweep([("theta2", t2s)], ("welfare_loss", "expected_delay"), {"theta1": t1, "pi1": pi1})
        kink = rubinstein_price(t1)
        checks = [Claim("expected_delay", "increasing"),
                  Claim("welfare_loss", "increasing", hi=kink),
                  Claim("welfare_loss", "decreasing", lo=kink, by_regime=True)]
        for cl in checks:
            if not check_monotonicity(tab, cl).passed:
                fails.append(("cor3 " + cl.quantity, g))
        if not check_monotonicity(tab, Claim("welfare_loss", "decreasing", lo=kink)).passed:
            crossings += 1
    cmp4 = compare_adoption(0.3, 0.1, 0.7, 0.35)
    a_hi = (p_rub(0.7) - 0.7) / (p_rub(0.3) - 0.3)  # independent closed forms
    a_lo = (p_rub(0.7) - 0.7) / (p_rub(0.1) - 0.1)
    d_hi, d_lo = (0.4 - 0.35) / 0.7, (0.6 - 0.35) / 0.9
    err4 = max(abs(cmp4.adoption[0] - a_hi), abs(cmp4.adoption[1] - a_lo),
               abs(cmp4.delay[0] - d_hi), abs(cmp4.delay[1] - d_lo))
    ok4 = cmp4.adoption_higher and cmp4.delay_lower and err4 <= 1e-9 and abs(a_lo - 1 / 3) <= 1e-12
    w = welfare_with_without_adoption(0.3, 0.6, 0.24)
    # inefficient limit: adopters (2/3) trade 0.7 - 0.24 at once, the rest trade 0.4,
    # and the delay 1/15 destroys the high type's surplus 0.4 in that proportion
    lowest = 2 / 3 * (0.7 - 0.24) + 1 / 3 * 0.4 - 0.4 / 15
    err5 = max(abs(w.lowest_with - lowest), abs(w.welfare_without - 0.4))
    ok5 = w.part == 2 and err5 <= 1e-9 and w.lowest_with - w.welfare_without > 1e-9
    ok = not fails and ok4 and ok5
    report(8, ok, f"corollary grids 3x100, {len(fails)} violations ({crossings} welfare-loss breaks at "
                  f"pooling/screening switches excluded by regime); adoption {cmp4.adoption[0]:.6f} vs "
                  f"{cmp4.adoption[1]:.6f}, delay {cmp4.delay[0]:.4f} vs {cmp4.delay[1]:.4f}; welfare "
                  f"lowest with investment {w.lowest_with:.6f} > without {w.welfare_without:.6f}")
    assert ok, fails


# 9 -------------------------------------------------------------------------

def _enumerate_cutoff(pi, costs):
    best, arg = -np.inf, None
    for i in range(len(costs)):
        nxt = costs[i + 1] if i + 1 < len(costs) else 1.0
        v = sum(pi[: i + 1]) * (min(p_rub(costs[i]), nxt) - costs[i])
        if v > best:
            best, arg = v, i + 1
    return arg


def test_c09_multi_technology(report):
    rng = np.random.default_rng(9)
    n_inst, mismatches = 0, 0
    while n_inst < 1000:
        n = int(rng.integers(3, 6))
        costs = tuple(np.sort(rng.uniform(0.01, 0.95, n)))
        if min(np.diff(costs)) < 1e-3:
            continue
        pi = tuple(rng.dirichlet(np.ones(n)))
        top = np.sort(screening_payoffs(pi, costs))[-2:]
        if top[1] - top[0] < 1e-9:
            continue
        n_inst += 1
        mismatches += i_star(pi, costs) != _enumerate_cutoff(pi, costs)
    worked = classify_regime_multi((0.1, 0.4, 0.8), (0.3, 0.25, 0.0))
    want = (p_rub(0.8) - 0.8) / (min(p_rub(0.1), 0.8) - 0.1)
    err = abs(worked.adoption_prob - 2 / 9)
    reduction = checked = 0
    while checked < 200:
        t1 = rng.uniform(0.01, 0.9)
        t2 = rng.uniform(t1 + 0.01, 0.99)
        c = rng.uniform(0.01, 0.99) * (t2 - t1)
        reg = classify_regime(t1, t2, c)
        if reg.boundary:
            continue
        checked += 1
        r = classify_regime_multi((t1, t2), (c, 0.0))
        if r.gap_condition != screening_gap_condition(t1, t2).holds:
            reduction += 1
        elif not r.gap_condition:
            reduction += not (r.label == "efficient" and reg.label == "efficient-adoption")
        else:
            same = r.adoption_prob == pi_star(t1, t2)
            if reg.label == "unique-inefficient":
                (eq,) = limit_equilibria_endogenous(t1, t2, c)
                same = same and r.adoption_prob == eq.adoption_prob
            reduction += not same
    ok = mismatches == 0 and err <= 1e-12 and abs(want - 2 / 9) <= 1e-12 and reduction == 0
    report(9, ok, f"{n_inst} random instances, {mismatches} cutoff mismatches; worked adoption "
                  f"{worked.adoption_prob!r}; two-type reduction mismatches {reduction}/{checked}")
    assert ok


# 10 ------------------------------------------------------------------------

def test_c10_regime_map(report):
    t1 = 0.1
    t0 = time.perf_counter()
    out = subprocess.run([sys.executable, "-m", "artifact", "sweep", "--preset", "figure",
                          "--theta1", str(t1), "--step", "0.01"], capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    rows = list(csv.DictReader(io.StringIO(out.stdout)))
    wrong, unflagged, diagonal = [], 0, 0
    for r in rows:
        gap, c, label, boundary = float(r["gap"]), float(r["c"]), r["label"], r["boundary"] == "true"
        t2 = t1 + gap
        if not label:
            wrong.append(r)
            continue
        if abs(c - gap) < 1e-9 and gap > 0 and t2 < 1:
            diagonal += 1
            unflagged += not boundary
        if boundary:
            continue
        if t2 >= 1:
            expect = "infeasible"
        elif c > gap:
            expect = "no-adoption"
        elif not (gap > (1 - t2) / 2) or c < max(0.5, (1 - t2) / (1 - t1)) * gap:
            expect = "efficient-adoption"
        elif p_rub(t1) < t2:
            expect = "unique-inefficient"
        else:
            expect = "multiple-limits"
        if label != expect:
            wrong.append((gap, c, label, expect))
    ok = (out.returncode == 0 and len(rows) == 101 * 101 and not wrong and unflagged == 0
          and elapsed < 10)
    counts = {}
    for r in rows:
        counts[r["label"]] = counts.get(r["label"], 0) + 1
    report(10, ok, f"{len(rows)} points in {elapsed:.2f} s, {len(wrong)} misclassified, "
                   f"{diagonal - unflagged}/{diagonal} diagonal points flagged; {counts}")
    assert ok, wrong[:5]
