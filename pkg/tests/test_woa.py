import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact.params import ParamError
from artifact.woa import (BeliefState, bayes_update, concession_rates, exhaustion_residuals,
                          limit_weak_player, solve_woa, woa_payoffs)


def test_rates_single_type():
    r = concession_rates(0.5, 0.8, (0.2,))
    assert r.lambda_s == pytest.approx(2 / 3, abs=1e-12)
    assert r.lambda_b[0] == pytest.approx(1.0, abs=1e-12)


def test_rates_two_types_high_type_does_not_concede():
    r = concession_rates(0.5, 0.8, (0.2, 0.6))
    assert r.lambda_b[0] == pytest.approx(1.0) and r.lambda_b[1] == 0.0 and r.m == 1


def test_rates_seller_never_concedes_at_one():
    assert concession_rates(0.5, 1.0, (0.2,)).lambda_s == 0.0


def test_rates_reject_misordered_offers():
    with pytest.raises(ParamError):
        concession_rates(0.8, 0.5, (0.2,))


def test_bayes_update_examples():
    b = bayes_update(0.1, 0.5, 0.5, 0.1, 0.5, (1.0,), (1.0,), (0.2,), 0.8)
    assert b.eps_b_hat == pytest.approx(0.1, abs=1e-12)
    only_commitment = bayes_update(0.1, 0.5, 0.0, 0.1, 0.5, (1.0,), (1.0,), (0.2,), 0.8)
    assert only_commitment.eps_b_hat == 1.0
    scored = bayes_update(0.1, 0.5, 0.0, 0.1, 0.5, (1.0,), (1.0,), (0.2,), 0.8, buyer_policy="prior")
    assert scored.off_path_b and scored.eps_b_hat == pytest.approx(0.05 / 0.95)
    b = bayes_update(0.1, 0.5, 0.5, 0.1, 0.5, (0.0, 1.0), (0.5, 0.5), (0.2, 0.6), 0.8)
    assert b.pi_hat[0] == 0.0


def test_single_type_example(one_type):
    sol = solve_woa(**one_type)
    assert sol.weak == "seller"
    assert sol.L == pytest.approx(2 / 3, abs=1e-12)
    assert sol.c_b == 0.0
    assert sol.c_s == pytest.approx(0.53584, abs=1e-5)
    assert sol.T_end == pytest.approx(math.log(10), abs=1e-6)
    v = woa_payoffs(sol)
    assert v.buyer_value == pytest.approx(sol.c_s * 0.5 + (1 - sol.c_s) * 0.2, abs=1e-12)
    assert v.seller_values[0] == pytest.approx(0.3, abs=1e-12)


def test_two_type_example(two_types):
    sol = solve_woa(**two_types)
    assert sol.m == 1 and sol.weak == "buyer"
    assert sol.L == pytest.approx(2.568, abs=1e-3)
    assert sol.T_end == pytest.approx(0.8967, abs=1e-4)
    assert sol.c_b == pytest.approx(1 - 0.1 * math.exp(sol.T_end), abs=1e-12)
    # the type-0.2 seller runs out when its survival reaches 0.55
    assert sol.c_b == pytest.approx(1 - 0.1 * 0.55 ** -1.5, abs=1e-12)
    assert sol.c_s == 0.0


def test_non_conceding_value_when_buyer_atom_is_one():
    # commitment-free buyer facing many types: buyer concedes at once
    sol = solve_woa(0.5, 0.8, BeliefState(0.0, 0.1, (0.45, 0.45)), (0.2, 0.6))
    assert sol.c_b == pytest.approx(1.0)
    assert woa_payoffs(sol).seller_values[1] == pytest.approx(0.8 - 0.6, abs=1e-12)


def test_committed_buyer_leaves_high_type_nothing():
    sol = solve_woa(0.5, 0.8, BeliefState(1.0, 0.1, (0.45, 0.45)), (0.2, 0.6))
    assert sol.c_b == 0.0
    assert woa_payoffs(sol).seller_values[1] == pytest.approx(0.0, abs=1e-12)


def test_limit_weak_player_cases():
    costs = (0.2, 0.6)
    assert limit_weak_player(0.5, 0.8, BeliefState(0.1, 0.0, (0.5, 0.5)), costs).weak == "indeterminate"
    assert limit_weak_player(0.5, 0.8, BeliefState(0.0, 0.0, (0.5, 0.5)), costs).c_b == 1.0
    assert limit_weak_player(0.5, 0.8, BeliefState(0.2, 0.3, (0.35, 0.35)), costs).case is None
    # seller side: high type concedes faster than the seller's own rate
    out = limit_weak_player(0.7, 0.95, BeliefState(0.1, 0.0, (0.5, 0.5)), costs)
    assert out.weak == "seller" and out.c_s == 1.0


beliefs = st.tuples(st.floats(0.01, 0.99), st.floats(0.01, 0.5),
                    st.lists(st.floats(0.05, 1.0), min_size=1, max_size=4))


@settings(max_examples=150, deadline=None)
@given(beliefs, st.floats(0.05, 0.45), st.floats(0.5, 0.99), st.floats(0.3, 3.0))
def test_exclusive_atoms_and_joint_exhaustion(b, pb, ps, rs):
    eb, es, w = b
    w = np.asarray(w) / sum(w) * (1 - es)
    costs = tuple(np.linspace(0.0, 0.9, len(w) + 1)[:-1] + 0.01)
    sol = solve_woa(pb, ps, BeliefState(eb, es, tuple(w)), costs, 1.0, rs)
    assert min(sol.c_b, sol.c_s) <= 1e-12
    assert max(exhaustion_residuals(sol)) <= 1e-10
    assert 0 <= sol.c_b <= 1 and 0 <= sol.c_s <= 1


def test_solution_round_trip(two_types):
    d = solve_woa(**two_types).to_dict()
    assert d["branch"] and d["payoffs"]["buyer_value"] > 0
