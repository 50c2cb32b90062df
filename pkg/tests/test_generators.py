import numpy as np
import pytest

from moebspace.errors import SpecError
from moebspace.generators import (DendrogramSpec, balanced_dendrogram, gen_circle,
                                  gen_dendrogram, gen_discrete, gen_quasimetric,
                                  random_dendrogram, random_point, zoo)
from moebspace.space import quasimetric_constant, validate_space


def test_discrete():
    for n in (2, 3, 7):
        sp = gen_discrete(n)
        assert np.array_equal(sp.rho, 1 - np.eye(n))
        assert sp.qm_constant == 1.0
    with pytest.raises(ValueError):
        gen_discrete(1)


def test_circle():
    c4 = gen_circle(4)
    assert set(np.round(c4.rho.ravel(), 12)) == {0.0, round(np.sqrt(2) / 2, 12), 1.0}
    c8 = gen_circle(8)
    assert np.isclose(c8.rho[0, 1], 0.38268343236508984)
    for n in (4, 8, 16, 10):
        r = gen_circle(n).rho
        assert all(r[j, (j + n // 2) % n] == 1.0 for j in range(n))
    with pytest.raises(ValueError):
        gen_circle(7)


def test_dendrogram_balanced():
    sp = gen_dendrogram(balanced_dendrogram(2, [1.0, 0.5]))
    expected = np.array([[0, .5, 1, 1], [.5, 0, 1, 1], [1, 1, 0, .5], [1, 1, .5, 0]])
    assert np.array_equal(sp.rho, expected)
    assert sp.qm_constant == 1.0


def test_dendrogram_star_is_discrete():
    sp = gen_dendrogram({"height": 1, "children": ["a", "b", "c"]})
    assert np.array_equal(sp.rho, 1 - np.eye(3))


def test_dendrogram_rational_heights():
    spec = {"height": "1", "children": [{"height": "1/3", "children": ["a", "b"]},
                                       {"height": "2/3", "children": ["c", {"height": "1/2", "children": ["d", "e"]}]}]}
    sp = gen_dendrogram(spec)
    assert sp.labels == ("a", "b", "c", "d", "e")
    assert sp.rho[0, 1] == 1 / 3 and sp.rho[2, 3] == 2 / 3 and sp.rho[3, 4] == 0.5


@pytest.mark.parametrize("spec", [
    {"height": 1, "children": [{"height": 1, "children": ["a", "b"]}, "c"]},
    {"height": 0.9, "children": ["a", "b"]},
    {"height": 1, "children": ["a", "a"]},
    {"height": 1, "children": ["a"]},
])
def test_dendrogram_bad_specs(spec):
    with pytest.raises(SpecError):
        gen_dendrogram(spec)


def test_random_dendrogram_and_quasimetric():
    for seed in range(5):
        sp = gen_dendrogram(random_dendrogram(7, seed))
        assert sp.n == 7 and quasimetric_constant(sp.rho)[0] == 1.0
    q = gen_quasimetric(8, 4.0, seed=2)
    assert np.isclose(q.qm_constant, 4.0)


def test_random_point_deterministic(spaces):
    sp = spaces["circle-8"]
    a, b = random_point(sp, 42), random_point(sp, 42)
    assert np.array_equal(a.tau, b.tau)
    tiny = random_point(sp, 1, amplitude=1e-9)
    assert np.max(np.abs(tiny.tau)) < 1e-8


def test_zoo_validates():
    for name, sp in zoo().items():
        assert validate_space(sp.rho).ok, name
