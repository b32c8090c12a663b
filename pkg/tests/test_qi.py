import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarsedim import qi
from coarsedim import setgen as sg
from coarsedim.covering import dyadic_radii
from coarsedim.errors import BudgetExceeded

Z50 = sg.Integers().enumerate(50)


def brute_violations(X, f, lam, delta):
    """Pairs breaking either inequality, straight from the definition."""
    pts = X.points[:, 0].tolist()
    bad = []
    for i, x in enumerate(pts):
        for xp in pts[i + 1:]:
            d, df = abs(x - xp), abs(f(x) - f(xp))
            if df < d / lam - delta - 1e-9 or df > lam * d + delta + 1e-9:
                bad.append((x, xp))
    return bad


def test_params_normalised():
    assert qi.QiParams(0.5, 1.0).lam == 1.0
    with pytest.raises(ValueError):
        qi.QiParams(1.0, 0.0)


def test_identity_holds():
    rep = qi.verify_qi(Z50, Z50, lambda p: p, qi.QiParams(1.0, 0.1))
    assert rep.holds and rep.exhaustive
    assert rep.pairs_checked == 99 * 98 // 2
    assert rep.coarse_surjectivity_gap == 0.0


def test_doubling_holds():
    Y = sg.Scale(sg.Integers(), (2.0,)).enumerate(100)
    rep = qi.verify_qi(Z50, Y, lambda p: 2 * p, qi.QiParams(2.0, 0.5))
    assert rep.holds


def test_square_fails_with_far_pair():
    rep = qi.verify_qi(Z50, Z50, lambda p: p**2, qi.QiParams(2.0, 1.0))
    assert not rep.holds
    assert rep.violation_count == len(brute_violations(Z50, lambda x: x * x, 2.0, 1.0))
    pairs = {(x, xp) for x, xp, *_ in rep.violating_pairs}
    assert (0.0, 49.0) in pairs
    assert len(rep.violating_pairs) == qi.MAX_VIOLATIONS
    # reported in lexicographic pair order
    keys = [(x, xp) for x, xp, *_ in rep.violating_pairs]
    assert keys == sorted(keys)


def test_surjectivity_gap():
    Y = sg.Integers().enumerate(50)
    X = sg.Scale(sg.Integers(), (2.0,)).enumerate(50)
    rep = qi.verify_qi(X, Y, lambda p: p, qi.QiParams(1.0, 0.5))
    assert rep.coarse_surjectivity_gap == 1.0
    assert not rep.holds
    assert qi.verify_qi(X, Y, lambda p: p, qi.QiParams(1.0, 1.5)).holds


def test_pair_budget():
    with pytest.raises(BudgetExceeded):
        qi.verify_qi(Z50, Z50, lambda p: p, qi.QiParams(1.0, 0.1), max_pairs=10)
    rep = qi.verify_qi(Z50, Z50, lambda p: p, qi.QiParams(1.0, 0.1), max_pairs=10, sample=True)
    assert rep.holds and not rep.exhaustive


def test_chunked_pairs_match_triu():
    X = sg.ArithmeticProgression(0.0, 0.01).enumerate(25)  # 4999 points
    f = lambda p: np.sin(p) * 3  # noqa: E731
    rep = qi.verify_qi(X, X, f, qi.QiParams(1.5, 0.2))
    assert rep.pairs_checked == len(X) * (len(X) - 1) // 2
    assert not rep.holds


@given(st.lists(st.integers(-20, 20).map(float), min_size=2, max_size=15, unique=True),
       st.sampled_from([0.5, 1.0, 3.0]), st.sampled_from([1.0, 1.5, 3.0]),
       st.sampled_from([0.1, 1.0, 4.0]))
@settings(max_examples=80)
def test_violation_count_matches_definition(xs, a, lam, delta):
    X = sg.PointCloud.from_points(np.array(xs), 100, 1)
    f = lambda x: a * x + 0.1 * x * x  # noqa: E731
    rep = qi.verify_qi(X, X, f, qi.QiParams(lam, delta))
    assert rep.violation_count == len(brute_violations(X, f, lam, delta))


@given(st.lists(st.integers(-20, 20).map(float), min_size=2, max_size=15, unique=True),
       st.floats(1, 4), st.floats(0.05, 3), st.floats(0, 2), st.floats(0, 2))
@settings(max_examples=60)
def test_monotone_in_params(xs, lam, delta, dl, dd):
    X = sg.PointCloud.from_points(np.array(xs), 100, 1)
    f = lambda p: 1.7 * p + np.round(p / 3)  # noqa: E731
    if qi.verify_qi(X, X, f, qi.QiParams(lam, delta)).violation_count == 0:
        assert qi.verify_qi(X, X, f, qi.QiParams(lam + dl, delta + dd)).violation_count == 0


@pytest.mark.parametrize("c,b", [(2.0, 0.0), (0.5, 0.3), (3.0, 1.0)])
def test_inverse_map_passes_with_inflated_delta(c, b):
    X = sg.Integers().enumerate(30)
    Y = sg.PointCloud.from_points(c * X.points + b, math.inf, 1)
    lam, delta = max(c, 1 / c), 0.5
    assert qi.verify_qi(X, Y, lambda p: c * p + b, qi.QiParams(lam, delta)).holds
    back = qi.verify_qi(Y, X, lambda p: (p - b) / c, qi.QiParams(lam, lam * delta + lam * delta))
    assert back.holds


def test_min_lambda():
    assert qi.min_lambda_profile(Z50, lambda p: p, [0.01, 1.0]) == [(0.01, 1.0), (1.0, 1.0)]
    (delta, lam), = qi.min_lambda_profile(Z50, lambda p: 2 * p, [0.01])
    assert lam == pytest.approx(2.0, abs=0.01)
    (_, none), = qi.min_lambda_profile(Z50, lambda p: p**3, [0.01], lam_max=10)
    assert none is None
    with pytest.raises(ValueError):
        qi.min_lambda_profile(Z50, lambda p: p, [1.0, 0.5])


def test_min_lambda_of_line_projection_matches_cone_prediction():
    from coarsedim.wedge import avoidance_search, projection
    t = np.arange(-60, 61.0)
    line = sg.PointCloud.from_points(np.c_[t, t / 2], 200, 2)
    cert = avoidance_search(sg.difference_cloud(line, line, 200))
    s = cert.wedge.inner_radius
    f = lambda p: projection(cert.wedge.direction, p)  # noqa: E731
    (_, lam), = qi.min_lambda_profile(line, f, [s])
    lam_cone = cert.cone_slope
    # the certificate constant 1 + lam_cone bounds the optimum from above; the
    # sharp Euclidean constant outside the cone is 1 / sin(theta) = sqrt(1 + lam_cone^2)
    assert lam <= 1.0 + lam_cone
    assert lam == pytest.approx(math.sqrt(1.0 + lam_cone**2), rel=0.1)


def test_perturb_keeps_origin_and_bound():
    pts = sg.Integers().enumerate(100).points
    moved = qi.perturb(pts, 0.4, seed=3)
    assert moved[pts[:, 0] == 0].tolist() == [[0.0]]
    assert np.max(np.abs(moved - pts)) <= 0.4
    assert np.array_equal(moved, qi.perturb(pts, 0.4, seed=3))


def test_perturbation_experiment():
    rep = qi.qi_dimension_experiment(sg.Integers(), 0.4, dyadic_radii(6, 14), seed=1)
    assert rep.slope_difference <= 0.05
    zero = qi.qi_dimension_experiment(sg.Integers(), 0.0, dyadic_radii(6, 14), seed=1)
    assert zero.slope_difference == 0.0
    with pytest.raises(ValueError):
        qi.qi_dimension_experiment(sg.Integers(), 0.5, dyadic_radii(6, 8), seed=1)
    with pytest.raises(ValueError):
        qi.qi_dimension_experiment(sg.PowersPlusIndex(), 0.4, dyadic_radii(6, 8), seed=1)


def test_perturbation_of_translated_d():
    D0 = sg.Union((sg.ExplicitList((0.0,)), sg.PowersPlusIndex()))
    rep = qi.qi_dimension_experiment(D0, 0.4, dyadic_radii(10, 24), seed=1)
    assert rep.slope_original <= 0.15 and rep.slope_perturbed <= 0.15


def test_report_json():
    rep = qi.verify_qi(Z50, Z50, lambda p: p**2, qi.QiParams(2.0, 1.0), max_violations=3)
    js = rep.to_json()
    assert len(js["violating_pairs"]) == 3
    assert set(js["violating_pairs"][0]) == {"x", "x_prime", "lhs", "mid", "rhs"}
