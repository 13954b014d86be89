"""Hybrid spectrum, dressing, relaxation, and escape-rate tests."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from mrtsim import units
from mrtsim.noise import (NoiseParams, charge_thermal_factor,
                          gaussian_envelope, hf_envelope, pair_params)
from mrtsim.rates import (FrequencyGrid, LevelDressing, RateOptions,
                          charge_coupling, escape_rate, grid_convolve,
                          hybrid_spectrum, level_broadening, level_shift,
                          lorentzian, mrt_sweep, pv_convolve, rate_matrix,
                          relaxation_rate, tunneling_amplitude)
from mrtsim.squid import PhaseGrid, SquidParams, solve_basis

PARAMS = SquidParams(
    main_inductance=250e-12,
    cjj_inductance=14e-12,
    capacitance=110e-15,
    critical_current=2.3e-6,
    cjj_bias=units.mphi0_to_wb(244.1418),
)
GRID = PhaseGrid(n_points=1024)
NOISE = NoiseParams.from_experiment(w_mk=28.0, t_mk=10.0, lambda_mk=9.6,
                                    alpha=0.0, tan_delta_c=5e-3,
                                    capacitance=110e-15)
T = NOISE.temperature


def _basis(bias_mphi0, n_left=1, n_right=1):
    p = PARAMS.with_flux_bias(units.mphi0_to_wb(bias_mphi0))
    return solve_basis(p, GRID, n_left=n_left, n_right=n_right)


def _pair_grid(basis, noise):
    pairs, omegas = [], [0.0]
    for i in range(basis.n_states):
        for j in range(i + 1, basis.n_states):
            pairs.append(pair_params(noise.low_freq, noise.high_freq,
                                     basis.currents[i], basis.currents[j],
                                     basis.params.main_inductance))
            omegas += [basis.omega(i, j), basis.omega(j, i)]
    return FrequencyGrid.for_pairs(omegas, pairs, noise.temperature)


@pytest.fixture(scope="module")
def two_state():
    basis = _basis(0.05)
    grid = _pair_grid(basis, NOISE)
    spectrum = hybrid_spectrum(basis, NOISE, grid)
    return basis, grid, spectrum


def test_frequency_grid():
    g = FrequencyGrid(spacing=0.01, n_half=100)
    assert g.n_points == 201
    assert g.omega[0] == -g.omega[-1] == -1.0
    fine = g.refined()
    assert fine.spacing == 0.005 and fine.half_width == g.half_width


def test_grid_convolve_gaussian_oracle():
    # two unit-normalized Gaussians convolve to a wider one
    s1, s2, mu = 0.7, 0.4, 0.3
    grid = FrequencyGrid(spacing=0.02, n_half=600)
    w = grid.omega

    def gauss(x, mu, s):
        return np.sqrt(2 * math.pi) / s * np.exp(-((x - mu) ** 2) / (2 * s**2))

    result = grid_convolve(lambda d: gauss(d, 0.0, s1), gauss(w, mu, s2), grid)
    s_tot = math.hypot(s1, s2)
    exact = gauss(w, mu, s_tot)
    mask = np.abs(w - mu) < 5 * s_tot
    assert np.max(np.abs(result - exact)[mask]) / np.max(exact) < 1e-6


def test_pv_convolve_oracle():
    gam = 0.5
    points = (-2.0, -0.3, 0.0, 0.7, 3.0)

    def worst_error(grid):
        result = pv_convolve(lorentzian(grid.omega, gam), grid)
        worst = 0.0
        for x in points:
            # same finite principal-value window as the grid transform
            oracle, _ = quad(
                lambda u: (lorentzian(x - u, gam) - lorentzian(x + u, gam)) / u,
                1e-12, grid.half_width, limit=800)
            oracle /= 2 * math.pi
            idx = np.argmin(np.abs(grid.omega - x))
            worst = max(worst, abs(result[idx] - oracle))
        return worst / np.max(np.abs(result))

    coarse = worst_error(FrequencyGrid(spacing=0.005, n_half=4000))
    fine = worst_error(FrequencyGrid(spacing=0.00125, n_half=16000))
    assert coarse < 5e-3
    # the transform converges toward the quadrature oracle as the mesh shrinks
    assert fine < 0.5 * coarse


def test_spectrum_diagonal_zero(two_state):
    _, _, spectrum = two_state
    assert np.max(np.abs(spectrum.value(0, 0))) == 0.0
    assert np.max(np.abs(spectrum.value(1, 1))) == 0.0


def test_spectrum_detailed_balance(two_state):
    basis, grid, spectrum = two_state
    w = grid.omega
    pos = w >= 0
    fac = np.exp(-w[pos] / T)
    s01, s10 = spectrum.value(0, 1), spectrum.value(1, 0)
    scale = max(np.max(s01), np.max(s10))
    r1 = np.max(np.abs(s10[::-1][pos] - fac * s01[pos]))
    r2 = np.max(np.abs(s01[::-1][pos] - fac * s10[pos]))
    assert max(r1, r2) / scale < 1e-6


def test_spectrum_flux_definition(two_state):
    # with charge noise off, S_01 is |amp|^2 times the Voigt-like base
    basis, grid, _ = two_state
    noise = NoiseParams(NOISE.low_freq, NOISE.high_freq,
                        type(NOISE.charge)(0.0, 110e-15, T))
    spectrum = hybrid_spectrum(basis, noise, grid)
    pair = pair_params(noise.low_freq, noise.high_freq, basis.currents[0],
                       basis.currents[1], basis.params.main_inductance)
    base = grid_convolve(lambda d: gaussian_envelope(d, pair),
                         hf_envelope(grid.omega, pair, noise.high_freq), grid)
    amp = np.abs(tunneling_amplitude(grid.omega, basis, 0, 1)) ** 2
    ref = amp * base
    assert np.max(np.abs(spectrum.value(0, 1) - ref)) < 1e-12 * np.max(ref)


def test_broadening_routes_agree():
    # the closed per-partner form vs the spectral sum restricted to the same
    # intrawell partners (the full spectral sum additionally carries
    # interwell tunneling terms)
    basis = _basis(2.0, n_left=2, n_right=3)
    grid = _pair_grid(basis, NOISE)
    spectrum = hybrid_spectrum(basis, NOISE, grid)
    closed = level_broadening(basis, NOISE, grid, route="closed")
    scale = np.max(closed.gamma)
    for n in range(basis.n_states):
        spectral = np.zeros(grid.n_points)
        valid = np.ones(grid.n_points, dtype=bool)
        for k in range(basis.n_states):
            if k != n and basis.same_well(n, k):
                x = grid.omega + basis.omega(n, k)
                spectral += 0.5 * spectrum.at(n, k, x)
                pair = pair_params(NOISE.low_freq, NOISE.high_freq,
                                   basis.currents[n], basis.currents[k],
                                   basis.params.main_inductance)
                # the narrow-Gaussian approximation of the closed form only
                # holds away from the partner resonance, and the sampled
                # spectrum clamps arguments beyond the grid span
                valid &= np.abs(x) > 20 * pair.width
                valid &= np.abs(x) <= grid.half_width - 20 * pair.width
        diff = np.abs(closed.gamma[n] - spectral)
        ref = closed.gamma[n]
        mask = valid & (ref > 1e-4 * scale)
        if np.any(mask):
            assert np.max(diff[mask] / ref[mask]) < 5e-2
        assert np.max(diff[valid & ~mask]) < 1e-4 * scale


def test_ground_state_broadening_suppressed():
    # the escape-channel assembly relies on a (near) zero-linewidth initial
    # state: all its intrawell partners lie above it
    basis = _basis(2.0, n_left=2, n_right=3)
    grid = _pair_grid(basis, NOISE)
    dressing = level_broadening(basis, NOISE, grid)
    i0 = basis.index_of(0)
    assert dressing.gamma_at(i0, 0.0) < 1e-12 * np.max(dressing.gamma)


def test_zero_width_relaxation_golden_rule(two_state):
    basis, grid, spectrum = two_state
    zero = LevelDressing(grid=grid,
                         gamma=np.zeros((2, grid.n_points)),
                         shift=np.zeros((2, grid.n_points)))
    rate = relaxation_rate(basis, spectrum, zero, 0, 1, include_shifts=False)
    golden = float(spectrum.at(1, 0, basis.omega(1, 0)))
    assert abs(rate - golden) / golden < 1e-6


def test_narrow_core_relaxation(two_state):
    # a constant tiny broadening must reproduce the golden-rule value, not
    # blow up on the unresolved Lorentzian core
    basis, grid, spectrum = two_state
    small = LevelDressing(grid=grid,
                          gamma=np.full((2, grid.n_points), 1e-6 * T),
                          shift=np.zeros((2, grid.n_points)))
    rate = relaxation_rate(basis, spectrum, small, 0, 1, include_shifts=False)
    golden = float(spectrum.at(1, 0, basis.omega(1, 0)))
    assert abs(rate - golden) / golden < 1e-2


def test_rate_matrix_structure():
    basis = _basis(2.0, n_left=2, n_right=3)
    grid = _pair_grid(basis, NOISE)
    spectrum = hybrid_spectrum(basis, NOISE, grid)
    dressing = level_broadening(basis, NOISE, grid)
    gam = rate_matrix(basis, spectrum, dressing, include_shifts=False)
    assert np.all(gam >= 0)
    assert np.all(np.diag(gam) == 0)
    # intrawell relaxation dominates interwell tunneling by far
    i2, i0 = basis.index_of(2), basis.index_of(0)
    i1 = basis.index_of(1)
    assert gam[i0, i2] > 1e3 * gam[i0, i1]


def test_level_shift_fills_dressing(two_state):
    basis, grid, spectrum = two_state
    dressing = level_broadening(basis, NOISE, grid)
    dressed = level_shift(basis, spectrum, dressing)
    assert dressed.shift.shape == dressing.gamma.shape
    assert np.any(dressed.shift != 0)


def test_escape_rate_zero_broadening_oracle():
    # single channel with no intrawell partner: the target Lorentzian is a
    # delta and the rate is the hybrid kernel at the level splitting
    basis = _basis(2.0)
    options = RateOptions(refine_rel_tol=1e-6, max_refinements=8)
    res = escape_rate(basis, NOISE, options)
    assert res.converged and list(res.channels) == [1]

    pair = pair_params(NOISE.low_freq, NOISE.high_freq, basis.currents[0],
                       basis.currents[1], basis.params.main_inductance)
    q01 = charge_coupling(basis, NOISE, 0, 1)
    d2 = abs(basis.delta[0, 1]) ** 2 / 4.0
    x = basis.omega(0, 1)

    def integrand(w):
        k = d2 * hf_envelope(w, pair, NOISE.high_freq) \
            + q01 * charge_thermal_factor(w / T)
        return gaussian_envelope(x - w, pair) * k

    lo, hi = x - pair.eps - 15 * pair.width, x - pair.eps + 15 * pair.width
    oracle, _ = quad(integrand, lo, hi, limit=2000,
                     points=[0.0] if lo < 0 < hi else None)
    oracle /= 2 * math.pi
    assert abs(res.total - oracle) / oracle < 1e-4


def test_escape_rate_flux_only_smaller():
    basis = _basis(3.0, n_left=2, n_right=3)
    full = escape_rate(basis, NOISE, RateOptions())
    flux = escape_rate(basis, NOISE, RateOptions(flux_only=True))
    assert 0 < flux.total <= full.total
    assert set(full.channels) == {1, 3, 5}
    assert all(v >= 0 for v in full.channels.values())
    assert math.isclose(full.total, sum(full.channels.values()),
                        rel_tol=1e-12)


def test_mrt_sweep_validation_and_units():
    with pytest.raises(ValueError):
        mrt_sweep(PARAMS, GRID, NOISE, [0.2, 0.1])
    sweep = mrt_sweep(PARAMS, GRID, NOISE, [2.0, 2.2], n_left=1, n_right=1)
    assert len(sweep.points) == 2
    assert np.all(sweep.totals > 0)
    # library sweeps report 1/us: cross-check one point by hand
    basis = _basis(2.0)
    res = escape_rate(basis, NOISE)
    assert math.isclose(sweep.points[0].total,
                        units.rate_ghz_to_per_us(res.total), rel_tol=5e-3)
