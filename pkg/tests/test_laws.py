import numpy as np
import pytest

from samplespace import Circle, Euclidean, Sphere, Spider
from samplespace.errors import ConfigError
from samplespace.laws import law_from_json, sample_point, sample_points


def test_dirac_law_always_returns_its_atom(rng):
    space = Euclidean(2)
    law = law_from_json(space, {"kind": "finite", "atoms": [[1.5, -2]], "weights": [1]})
    np.testing.assert_array_equal(sample_points(space, law, rng, 50), np.tile([1.5, -2], (50, 1)))


def test_degenerate_spider_mixture_stays_on_leg_one(rng):
    space = Spider(3)
    law = law_from_json(space, {"kind": "spider_mixture", "leg_weights": [1, 0, 0],
                                "radial": {"kind": "uniform", "low": 0.5, "high": 2}})
    pts = sample_points(space, law, rng, 500)
    assert np.all(pts[:, 0] == 1)


def test_gaussian_law_of_large_numbers():
    space = Euclidean(1)
    law = law_from_json(space, {"kind": "gaussian", "mean": [0], "std": 1})
    x = sample_points(space, law, np.random.default_rng(0), 100_000)
    assert abs(x.mean()) < 0.02


def test_draws_are_deterministic_given_the_rng_state():
    space = Sphere(2)
    law = law_from_json(space, {"kind": "wrapped_gaussian", "pole": [0, 0, 1], "sigma": 0.3})
    a = sample_points(space, law, np.random.default_rng(5), 20)
    b = sample_points(space, law, np.random.default_rng(5), 20)
    np.testing.assert_array_equal(a, b)
    rng = np.random.default_rng(5)
    assert not np.array_equal(sample_point(space, law, rng), sample_point(space, law, rng))


def test_draws_are_valid_points(rng):
    cases = [
        (Euclidean(3), {"kind": "uniform_ball", "center": [1, 1, 1], "radius": 0.5}),
        (Sphere(2), {"kind": "uniform"}),
        (Circle(), {"kind": "arc_uniform", "center": 6.0, "half_width": 1.0}),
        (Spider(4), {"kind": "spider_mixture", "leg_weights": [0.25] * 4, "radial": {"kind": "exponential"}}),
        (Euclidean(1), {"kind": "mixture", "weights": [0.5, 0.5],
                        "components": [{"kind": "gaussian", "mean": [-3], "std": 1},
                                       {"kind": "gaussian", "mean": [3], "std": 1}]}),
    ]
    for space, obj in cases:
        law = law_from_json(space, obj)
        pts = sample_points(space, law, rng, 200)
        np.testing.assert_allclose(space.points(pts), pts, atol=1e-15)
        assert law_from_json(space, law.to_json(space)) == law
    ball = sample_points(Euclidean(3), law_from_json(Euclidean(3), cases[0][1]), rng, 1000)
    assert np.all(np.linalg.norm(ball - 1, axis=1) <= 0.5)
    sph = sample_points(Sphere(2), law_from_json(Sphere(2), {"kind": "uniform"}), rng, 1000)
    np.testing.assert_allclose(np.linalg.norm(sph, axis=1), 1, atol=1e-12)


@pytest.mark.parametrize("space,obj", [
    (Sphere(2), {"kind": "gaussian", "mean": [0, 0, 0], "std": 1}),
    (Euclidean(2), {"kind": "spider_mixture", "leg_weights": [1, 0, 0]}),
    (Euclidean(2), {"kind": "gaussian", "mean": [0], "std": 1}),
    (Circle(), {"kind": "arc_uniform", "center": 0, "half_width": 4}),
    (Spider(3), {"kind": "spider_mixture", "leg_weights": [0.5, 0.5]}),
    (Euclidean(1), {"kind": "nonsense"}),
    (Euclidean(1), {"kind": "gaussian"}),
])
def test_law_space_mismatch_is_a_config_error(space, obj):
    with pytest.raises(ConfigError):
        law_from_json(space, obj)
