"""Master-equation dynamics tests."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from mrtsim.dynamics import (boltzmann, escape_rate_from_decay, evolve,
                             generator_matrix, steady_state)
from mrtsim.errors import ParameterError, ResolutionError


def test_generator_matrix():
    gamma = np.array([[0.0, 2.0], [1.0, 0.0]])
    a = generator_matrix(gamma)
    assert np.allclose(a, [[-1.0, 2.0], [1.0, -2.0]])
    assert np.allclose(a.sum(axis=0), 0.0)
    with pytest.raises(ParameterError):
        generator_matrix(np.array([[0.0, -1.0], [1.0, 0.0]]))
    with pytest.raises(ParameterError):
        generator_matrix(np.array([[1.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(ParameterError):
        generator_matrix(np.zeros((2, 3)))


def test_evolve_matches_matrix_exponential():
    rng = np.random.default_rng(7)
    gamma = rng.uniform(0.1, 2.0, (4, 4))
    np.fill_diagonal(gamma, 0.0)
    a = generator_matrix(gamma)
    p0 = np.array([1.0, 0.0, 0.0, 0.0])
    t = np.linspace(0.0, 3.0, 7)
    traj = evolve(p0, gamma, t)
    for k, tk in enumerate(t):
        exact = expm(a * tk) @ p0
        assert np.max(np.abs(traj.populations[k] - exact)) < 1e-8


def test_evolve_conserves_probability():
    gamma = np.array([[0.0, 5.0, 0.01], [3.0, 0.0, 2.0], [0.5, 1e-4, 0.0]])
    traj = evolve(np.array([1.0, 0.0, 0.0]), gamma, np.linspace(0, 50, 101))
    sums = traj.populations.sum(axis=1)
    assert np.max(np.abs(sums - 1.0)) < 1e-9
    assert np.min(traj.populations) > -1e-8


def test_evolve_input_validation():
    gamma = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ParameterError):
        evolve(np.array([0.7, 0.7]), gamma, np.linspace(0, 1, 3))
    with pytest.raises(ParameterError):
        evolve(np.array([1.2, -0.2]), gamma, np.linspace(0, 1, 3))


def test_evolve_single_time_point():
    gamma = np.array([[0.0, 1.0], [1.0, 0.0]])
    traj = evolve(np.array([1.0, 0.0]), gamma, np.array([0.0]))
    assert traj.populations.shape == (1, 2)
    assert traj.populations[0, 0] == 1.0


def test_steady_state_two_level():
    up, down = 0.3, 1.7
    gamma = np.array([[0.0, down], [up, 0.0]])
    p = steady_state(gamma)
    assert math.isclose(p[0], down / (up + down), rel_tol=1e-10)
    assert math.isclose(p.sum(), 1.0, rel_tol=1e-12)


def test_steady_state_matches_long_time_limit():
    rng = np.random.default_rng(3)
    gamma = rng.uniform(0.05, 1.0, (5, 5))
    np.fill_diagonal(gamma, 0.0)
    p_ss = steady_state(gamma)
    traj = evolve(np.eye(5)[2], gamma, np.linspace(0, 500, 5))
    assert np.max(np.abs(traj.populations[-1] - p_ss)) < 1e-8


def test_steady_state_reducible_warns():
    gamma = np.zeros((2, 2))
    with pytest.warns(UserWarning, match="reducible"):
        p = steady_state(gamma)
    assert np.allclose(p, [0.5, 0.5])


def test_escape_rate_from_decay():
    rate = 0.02
    gamma = np.array([[0.0, 0.0], [rate, 0.0]])
    traj = evolve(np.array([1.0, 0.0]), gamma, np.linspace(0, 0.5, 51))
    est = escape_rate_from_decay(traj)
    assert abs(est - rate) / rate < 1e-3
    coarse = evolve(np.array([1.0, 0.0]), gamma, np.linspace(0, 500, 6))
    with pytest.raises(ResolutionError):
        escape_rate_from_decay(coarse)


def test_boltzmann():
    p = boltzmann([0.0, 1.0], temperature=1.0)
    assert math.isclose(p[1] / p[0], math.exp(-1.0), rel_tol=1e-12)
    assert math.isclose(p.sum(), 1.0, rel_tol=1e-12)
    # invariant under a constant energy offset
    q = boltzmann([100.0, 101.0], temperature=1.0)
    assert np.allclose(p, q)
    with pytest.raises(ParameterError):
        boltzmann([0.0, 1.0], temperature=0.0)
