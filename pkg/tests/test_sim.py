import io

import numpy as np

from artifact.adoption import limit_equilibria_endogenous
from artifact.params import PriceGrid
from artifact.sim import (CounterofferRule, EstimateReport, StrategyProfile, estimate_outcomes,
                          sample_path, simulate)
from artifact.woa import BeliefState, solve_woa, woa_payoffs


def within(est, want, k=3.0):
    mean, se = est
    return abs(mean - want) <= k * se + 1e-12


def test_counteroffer_rule():
    rule = CounterofferRule((0.2, 0.6), (0.5, 0.5), PriceGrid((0.0, 0.8, 0.9, 1.0)), snap="floor")
    assert rule(1, 0.4) == {1.0: 1.0}
    assert rule(0, 0.4) == {0.8: 1.0}
    assert rule(0, 0.7) == {0.9: 1.0}


def test_counteroffer_rule_ignores_massless_types():
    rule = CounterofferRule((0.2, 0.6), (1.0, 0.0), PriceGrid((0.0, 0.8, 0.9, 1.0)), snap="floor")
    # without the 0.6 type the 0.2 type simply accepts 0.7
    assert rule(0, 0.7) == {0.7: 1.0}


def test_incompatible_commitments_never_trade():
    p = StrategyProfile.from_offers((0.1, 0.7), (0.5, 0.5), {0.55: 1.0}, 0.5, nu=0.1,
                                    adoption_costs=(0.3, 0.0))
    o = simulate(p, 20000, np.random.default_rng(0))
    m = o["b_commit"] & (o["s_type"] < 0) & (o["p_s"] > o["p_b"])
    assert m.sum() > 0
    assert np.all(np.isinf(o["tau"][m])) and np.all(o["buyer"][m] == 0) and np.all(o["seller"][m] == 0)
    compatible = o["p_s"] <= o["p_b"]
    assert np.all(o["tau"][compatible] == 0)


def test_seller_atom_one_trades_at_buyer_price():
    sol = solve_woa(0.5, 0.8, BeliefState(0.1, 0.0, (1.0,)), (0.2,))
    assert sol.c_s == 1.0
    path = sample_path(StrategyProfile.from_woa(sol), seed=3)
    assert path.tau == 0.0 and path.price == 0.5


def test_single_type_matches_closed_form(one_type):
    sol = solve_woa(**one_type)
    v = woa_payoffs(sol)
    rep = estimate_outcomes(StrategyProfile.from_woa(sol), 100_000, seed=11)
    assert within(rep.buyer_payoff, v.buyer_value)
    assert within(rep.seller_payoffs[0.2], v.seller_values[0])


def test_single_path_report():
    sol = solve_woa(0.5, 0.8, BeliefState(0.1, 0.1, (0.9,)), (0.2,))
    prof = StrategyProfile.from_woa(sol)
    path = sample_path(prof, seed=5)
    rep = estimate_outcomes(prof, 1, seed=5)
    if not path.buyer_committed:
        assert rep.buyer_payoff == (path.buyer_payoff, 0.0)


def test_same_seed_same_report(two_types):
    prof = StrategyProfile.from_woa(solve_woa(**two_types))
    a = estimate_outcomes(prof, 5000, seed=7)
    b = estimate_outcomes(prof, 5000, seed=7)
    assert a.to_json() == b.to_json()
    assert EstimateReport.from_dict(a.to_dict()).buyer_payoff == a.buyer_payoff


def test_ties_vanish_with_window(one_type):
    prof = StrategyProfile.from_woa(solve_woa(**one_type))
    freqs = [estimate_outcomes(prof, 20000, seed=1, tie_window=w).tie_freq for w in (0.1, 0.01, 0.0)]
    assert freqs[0] > freqs[1] > freqs[2] == 0.0


def test_dump_writes_rows(one_type):
    buf = io.StringIO()
    estimate_outcomes(StrategyProfile.from_woa(solve_woa(**one_type)), 100, seed=0, dump=buf, dump_cap=10)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 11 and lines[0].startswith("p_b,")


def test_adoption_delay_estimate():
    (eq,) = limit_equilibria_endogenous(0.1, 0.7, 0.4)
    prof = StrategyProfile.from_adoption(eq, 0.1, 0.7, 0.4, eps=1e-8)
    rep = estimate_outcomes(prof, 100_000, seed=0)
    assert within(rep.expected_delay, 2 / 9)
