"""Sign classification, flow balance, admissibility rules, simplex surveys."""

import numpy as np
import pytest

from streampop import (
    LogisticParams,
    SignPattern,
    canonical_three_node,
    check_admissibility,
    net_flows,
    positive_equilibrium,
    sign_pattern,
    survey_patterns,
)

# Admissible pattern sets for the three reference configurations, in the
# letter encoding (P/M/Z), keyed by node index order.
TRIBUTARY_SET = {"ZZZ", "PZM", "ZPM", "PPM"}
STRAIGHT_SET = {"ZZZ", "ZPM", "PZM", "PMZ", "PPM", "PMM"}
DISTRIBUTARY_SET = {"ZZZ", "PZM", "PMZ", "PMM"}

D, Q, K = 0.1, 0.3, 3.0


def _equilibrium(kind, rates):
    net = canonical_three_node(kind, D, Q)
    params = LogisticParams(r=rates, K=K)
    return net, params, positive_equilibrium(net, params)


def test_sign_pattern_balanced_cases():
    _, params, eq = _equilibrium("straight", (5.0, 0.0, 0.0))
    assert sign_pattern(eq, params).code == "ZZZ"
    _, params, eq = _equilibrium("tributary", (0.0, 0.0, 5.0))
    assert sign_pattern(eq, params).code == "ZZZ"


def test_sign_pattern_source_sink_case():
    # mass grown midstream spills both ways: + at the source, - downstream
    _, params, eq = _equilibrium("straight", (0.0, 2.5, 2.5))
    pat = sign_pattern(eq, params)
    assert pat.symbols[0] == "0"  # r1 = 0 forces a zero sign
    assert pat.code in STRAIGHT_SET


def test_sign_pattern_tolerance_band():
    params = LogisticParams(r=(1.0, 1.0), K=1.0)

    class FakeEq:
        u_star = np.array([1.0 + 5e-8, 1.0 - 5e-8])

    pat = sign_pattern(FakeEq(), params, tol=1e-7)
    assert pat.code == "ZZ"
    pat = sign_pattern(FakeEq(), params, tol=1e-9)
    assert pat.code == "MP"


def test_net_flows_balanced_on_closed_form():
    net, _, eq = _equilibrium("straight", (5.0, 0.0, 0.0))
    report = net_flows(eq, net)
    assert all(f.direction == "balanced" for f in report.flows)
    assert np.max(np.abs(report.node_net_inflow)) < 1e-8


def test_net_flows_sign_consistency():
    net, params, eq = _equilibrium("straight", (0.0, 2.5, 2.5))
    pat = sign_pattern(eq, params)
    report = net_flows(eq, net)
    for i, sym in enumerate(pat.symbols):
        if sym == "-":
            assert report.node_net_inflow[i] > 1e-9
        if sym == "+":
            assert report.node_net_inflow[i] < -1e-9


def test_net_flow_definition():
    net, _, eq = _equilibrium("tributary", (1.0, 2.0, 2.0))
    report = net_flows(eq, net)
    for flow in report.flows:
        assert flow.flow_down == pytest.approx((D + Q) * eq.u_star[flow.upstream], rel=1e-12)
        assert flow.flow_up == pytest.approx(D * eq.u_star[flow.downstream], rel=1e-12)
        assert flow.net == pytest.approx(flow.flow_down - flow.flow_up, rel=1e-12)


def test_admissibility_rules():
    trib = canonical_three_node("tributary", 1.0, 1.0)
    verdict = check_admissibility(SignPattern(("-", "0", "0"), 1e-7), trib)
    assert not verdict.admissible and "upstream-minus" in verdict.violated_rules

    dist = canonical_three_node("distributary", 1.0, 1.0)
    verdict = check_admissibility(SignPattern(("0", "+", "0"), 1e-7), dist)
    assert not verdict.admissible and "downstream-plus" in verdict.violated_rules

    strt = canonical_three_node("straight", 1.0, 1.0)
    verdict = check_admissibility(SignPattern(("+", "+", "0"), 1e-7), strt)
    assert not verdict.admissible and "sum-rule" in verdict.violated_rules

    verdict = check_admissibility(SignPattern(("0", "0", "0"), 1e-7), strt)
    assert verdict.admissible and verdict.violated_rules == ()

    verdict = check_admissibility(SignPattern(("+", "-", "0"), 1e-7), strt)
    assert verdict.admissible


def test_survey_subsets_and_sum_rule():
    expected = {
        "tributary": TRIBUTARY_SET,
        "straight": STRAIGHT_SET,
        "distributary": DISTRIBUTARY_SET,
    }
    for kind, allowed in expected.items():
        net = canonical_three_node(kind, D, Q)
        base = LogisticParams(r=(5 / 3, 5 / 3, 5 / 3), K=K)
        survey = survey_patterns(net, base, 12)
        assert survey.failures == ()
        assert set(survey.codes) <= allowed
        for pat in survey.patterns:
            assert check_admissibility(pat, net).admissible
        for row in survey.rows:
            r = np.asarray(row.allocation)
            u = np.asarray(row.u_star)
            assert abs(np.sum(r * u * (1.0 - u / K))) < 1e-10
            assert abs(r.sum() - 5.0) < 1e-11


def test_survey_rows_cover_grid_and_extras():
    net = canonical_three_node("straight", D, Q)
    base = LogisticParams(r=(1.0, 1.0, 1.0), K=1.0)
    survey = survey_patterns(net, base, 4)
    # lattice C(6,2)=15 points; odd-resolution midpoints are off-lattice
    assert len(survey.rows) == 15
    survey = survey_patterns(net, base, 5)
    assert len(survey.rows) == 21 + 3


def test_surveyed_boundary_components_respect_capacity():
    # at every surveyed point: headwater nodes with growth stay at or below
    # K, most-downstream nodes with growth at or above K
    for kind in ("tributary", "straight", "distributary"):
        net = canonical_three_node(kind, D, Q)
        base = LogisticParams(r=(5 / 3, 5 / 3, 5 / 3), K=K)
        top = max(net.levels)
        for row in survey_patterns(net, base, 8).rows:
            for i in range(3):
                if row.allocation[i] <= 0:
                    continue
                if net.levels[i] == 0:
                    assert row.u_star[i] <= K * (1 + 1e-7)
                if net.levels[i] == top:
                    assert row.u_star[i] >= K * (1 - 1e-7)


def test_pattern_validation():
    with pytest.raises(ValueError):
        SignPattern(("x", "0"), 1e-7)
    net = canonical_three_node("straight", 1.0, 1.0)
    with pytest.raises(ValueError):
        check_admissibility(SignPattern(("0", "0"), 1e-7), net)
