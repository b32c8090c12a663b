import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarsedim import setgen as sg
from coarsedim.cloudio import format_cloud, parse_cloud, read_cloud, write_cloud
from coarsedim.errors import BudgetExceeded, ConfigError
from coarsedim.sexpr import parse_generator


def vals(cloud):
    return cloud.points[:, 0].tolist()


def cloud1(xs, window=1e6):
    return sg.PointCloud.from_points(np.array(xs, float), window, 1)


def test_integers_in_ball():
    assert vals(sg.Integers().enumerate(3.5)) == [-3, -2, -1, 0, 1, 2, 3]


def test_integers_open_boundary():
    assert vals(sg.Integers().enumerate(3.0)) == [-2, -1, 0, 1, 2]


def test_powers_plus_index_matches_direct_listing():
    expected = sorted({v for n in range(10) for v in (2**n, 2**n + n) if v < 20})
    assert vals(sg.PowersPlusIndex().enumerate(20)) == expected == [1, 2, 3, 4, 6, 8, 11, 16]


def test_powers_plus_index_large_radius_is_exact():
    r = 2.0**40 + 41
    got = vals(sg.PowersPlusIndex().enumerate(r))
    expected = sorted({v for n in range(41) for v in (2**n, 2**n + n)})
    assert got == expected


def test_reciprocals_head_and_zero_cell():
    c = sg.Reciprocals().enumerate(2)
    v = np.array(vals(c))
    assert v.max() == 1.0
    assert 0.5 in v and 1 / 3 in v
    assert v.min() >= 0
    # every point is a genuine 1/n or 0
    nonzero = v[v > 0]
    n = np.rint(1 / nonzero)
    assert np.allclose(1 / n, nonzero, rtol=0, atol=1e-15)
    # cells of width rho are pairwise distinct
    assert len(np.unique(np.rint(v / sg.RHO_DEDUP))) == len(v)


def test_reciprocals_coarse_resolution_is_small():
    c = sg.Reciprocals().enumerate(2, resolution=0.01)
    assert 10 < len(c) < 200


def test_ap_two_sided():
    assert vals(sg.ArithmeticProgression(1.0, 3.0).enumerate(8)) == [-5, -2, 1, 4, 7]


def test_cantor_depth_two():
    got = vals(sg.CantorLike(1 / 3, 2).enumerate(2))
    assert np.allclose(got, [0, 2 / 9, 2 / 3, 8 / 9])


def test_cantor_budget():
    with pytest.raises(BudgetExceeded):
        sg.CantorLike(1 / 3, 30).enumerate(2, max_points=1000)


def test_budget_env(monkeypatch):
    monkeypatch.setenv("COARSEDIM_BUDGET", "100")
    with pytest.raises(BudgetExceeded):
        sg.Integers().enumerate(1000)


def test_scale_vector_embeds_line():
    c = sg.Scale(sg.Integers(), (1.0, 0.5)).enumerate(3)
    assert c.ambient_dim == 2
    assert c.tolist() == [[-2, -1], [-1, -0.5], [0, 0], [1, 0.5], [2, 1]]


def test_scale_zero_rejected():
    with pytest.raises(ConfigError):
        sg.Scale(sg.Integers(), (0.0,))


def test_translate_and_union():
    g = sg.Union((sg.ExplicitList((0.0, 1.0)), sg.Translate(sg.ExplicitList((0.0,)), (5.0,))))
    assert vals(g.enumerate(10)) == [0, 1, 5]


def test_difference_examples():
    A = cloud1([0, 1, 3])
    assert vals(sg.difference_cloud(A, A, 10)) == [-3, -2, -1, 0, 1, 2, 3]
    Z = sg.Integers().enumerate(5)
    assert vals(sg.difference_cloud(Z, Z, 4)) == [-3, -2, -1, 0, 1, 2, 3]
    O = cloud1([0])
    assert vals(sg.difference_cloud(O, O, 0.5)) == [0]


def test_power_examples():
    assert sg.power_cloud(cloud1([0, 1]), 2, 10).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    assert sg.power_cloud(cloud1([0, 1, 2]), 2, 2).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    assert sg.power_cloud(cloud1([0]), 3, 1).tolist() == [[0, 0, 0]]


def test_apply_linear_examples():
    A = sg.PointCloud.from_points([[0, 0], [1, 0], [0, 1]], 10)
    assert vals(sg.apply_linear(sg.LinearMap((1, -1)), A, 10)) == [-1, 0, 1]
    Z2 = sg.power_cloud(sg.Integers().enumerate(3), 2, 10)
    img = sg.apply_linear(sg.LinearMap((1, math.sqrt(2))), Z2, 2)
    brute = sorted({a + math.sqrt(2) * b for a in range(-2, 3) for b in range(-2, 3)
                    if abs(a + math.sqrt(2) * b) < 2})
    assert np.allclose(vals(img), brute)
    assert np.any(np.isclose(vals(img), math.sqrt(2) - 1))


def test_s_of_d4_contains_small_integers():
    D = sg.PowersPlusIndex().enumerate(2.0**10)
    img = sg.image_of_power(sg.LinearMap((1, -1, math.sqrt(2), -math.sqrt(2))), D, 5)
    for k in range(5):
        assert np.any(np.abs(img.values - k) < 1e-9)


def test_contains_origin():
    assert sg.contains_origin(sg.Integers())
    assert not sg.contains_origin(sg.PowersPlusIndex())
    assert sg.contains_origin(sg.Reciprocals())


small_sets = st.lists(st.integers(-30, 30).map(float), min_size=1, max_size=12, unique=True)


@given(small_sets, small_sets, st.floats(0.5, 40))
def test_difference_cloud_matches_pairs(a, b, w):
    got = vals(sg.difference_cloud(cloud1(a), cloud1(b), w))
    assert got == sorted({x - y for x in a for y in b if abs(x - y) < w})


@given(small_sets, st.floats(0.5, 40))
def test_difference_negation_symmetric(a, w):
    d = vals(sg.difference_cloud(cloud1(a), cloud1(a), w))
    assert d == sorted(-x for x in d)


@given(st.lists(st.integers(-6, 6).map(float), min_size=1, max_size=5, unique=True),
       st.integers(1, 3), st.floats(0.5, 12))
def test_power_cloud_matches_product(a, k, w):
    got = sg.power_cloud(cloud1(a), k, w).tolist()
    brute = sorted(list(p) for p in itertools.product(sorted(a), repeat=k)
                   if math.sqrt(sum(x * x for x in p)) < w)
    assert got == brute


@given(st.lists(st.integers(-5, 5).map(float), min_size=1, max_size=5, unique=True),
       st.lists(st.sampled_from([1.0, -1.0, 0.5, math.sqrt(2), -math.sqrt(3)]),
                min_size=1, max_size=4),
       st.floats(0.5, 20))
@settings(max_examples=60)
def test_image_of_power_matches_brute_force(a, coeffs, w):
    E = cloud1(a)
    got = sg.image_of_power(sg.LinearMap(coeffs), E, w).values
    brute = {sum(c * x for c, x in zip(coeffs, p))
             for p in itertools.product(a, repeat=len(coeffs))}
    brute = np.array(sorted(v for v in brute if abs(v) < w))
    # dedup at rho may keep one representative of near-equal sums
    assert all(np.min(np.abs(brute - g)) < 1e-8 for g in got)
    assert all(np.min(np.abs(got - b)) < 1e-8 for b in brute)


@given(st.permutations([1.0, -2.0, 0.5]))
def test_apply_linear_power_commutes_with_permutation(perm):
    A = sg.power_cloud(cloud1([-2, 0, 1, 3]), 3, 100)
    base = sg.apply_linear(sg.LinearMap((1.0, -2.0, 0.5)), A, 100).values
    permuted = sg.apply_linear(sg.LinearMap(tuple(perm)), A, 100).values
    assert np.allclose(base, permuted)


GENERATORS = [
    sg.Integers(), sg.PowersPlusIndex(), sg.Reciprocals(), sg.ExplicitList((0.0, 2.5, -1.0)),
    sg.ArithmeticProgression(0.5, 2.0), sg.CantorLike(1 / 3, 4),
    sg.Union((sg.Integers(), sg.ExplicitList((0.5,)))), sg.Scale(sg.Integers(), (0.5,)),
    sg.Translate(sg.Integers(), (0.25,)), sg.Product((sg.Integers(), sg.PowersPlusIndex())),
    sg.Power(sg.Integers(), 2), sg.LinearImage(sg.Power(sg.Integers(), 2), (1.0, math.sqrt(2))),
    sg.Difference(sg.PowersPlusIndex(), sg.PowersPlusIndex(), 1.0, 0.0),
]


@pytest.mark.parametrize("gen", GENERATORS, ids=lambda g: g.to_sexpr()[:40])
@pytest.mark.parametrize("r1,r2", [(1.5, 7.0), (3.0, 20.0)])
def test_monotone_enumeration(gen, r1, r2):
    small = gen.enumerate(r1, resolution=1e-6)
    big = gen.enumerate(r2, resolution=1e-6)
    assert np.all(sg.norms(small.points) < r1)
    big_rows = {tuple(p) for p in big.points.tolist()}
    assert all(tuple(p) in big_rows for p in small.points.tolist())


@pytest.mark.parametrize("gen", GENERATORS, ids=lambda g: g.to_sexpr()[:40])
def test_sexpr_round_trip(gen):
    assert parse_generator(gen.to_sexpr()) == gen


def test_sexpr_forms():
    g = parse_generator("(linear (power (integers) 2) 1 (sqrt 2) :expansion 2 :slack 1)")
    assert g.coefficients == (1.0, math.sqrt(2))
    assert (g.expansion, g.slack) == (2.0, 1.0)
    p = parse_generator("(list (0 0) (1 2))")
    assert p.ambient_dim == 2


@pytest.mark.parametrize("bad", ["(integers", "(nope)", "(power (integers))", "(list a)",
                                 "(integers) (integers)", "(ap 1 2 :slack 1)"])
def test_sexpr_rejects(bad):
    with pytest.raises(ConfigError):
        parse_generator(bad)


def test_cloud_file_round_trip(tmp_path):
    c = sg.Power(sg.ArithmeticProgression(0.0, 0.1), 2).enumerate(0.35)
    path = tmp_path / "c.txt"
    write_cloud(path, c)
    back = read_cloud(path)
    assert np.array_equal(back.points, c.points)
    assert back.window_radius == c.window_radius
    assert path.read_text().splitlines()[0] == "# dim=2 window=0.35"


def test_cloud_file_rejects_bad_header():
    with pytest.raises(ConfigError):
        parse_cloud("dim 2\n0 0\n")
    with pytest.raises(ConfigError):
        parse_cloud("# dim=2 window=1\n0\n")
    assert format_cloud(cloud1([1.5], 3)).endswith("1.5\n")
