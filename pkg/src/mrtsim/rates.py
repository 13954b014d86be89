"""Hybrid noise spectra, level dressing, relaxation rates, and escape rates.

All frequencies/energies are in internal units (h GHz).  The central objects
are the hybrid spectrum S_mn(w) -- a low-frequency Gaussian convolved with a
high-frequency flux envelope plus the charge-noise spectrum -- the level
broadenings gamma_n(w) and shifts delta_n(w) built from it, the relaxation
matrix Gamma_mn, and the interwell escape rate Gamma_0 assembled as a double
convolution of the target-level Lorentzian with the hybrid kernel.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from . import noise as noise_mod
from . import units
from .errors import ResolutionError, SingularPairError
from .noise import (NoiseParams, charge_thermal_factor, gaussian_envelope,
                    hf_envelope, pair_params)

# a pair scale below spacing * RESOLVE_FACTOR cannot be sampled and is
# handled by a delta/analytic branch instead
RESOLVE_FACTOR = 4.0
# pair scales below T / SCALE_FLOOR are never allowed to drive the grid
# spacing (they would demand millions of points); those pairs always take
# the analytic branch
SCALE_FLOOR = 50.0


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency grid, symmetric about zero (odd point count)."""

    spacing: float
    n_half: int

    def __post_init__(self):
        if self.spacing <= 0 or self.n_half < 8:
            raise ResolutionError("grid needs positive spacing and >= 17 points")

    @property
    def n_points(self):
        return 2 * self.n_half + 1

    @property
    def half_width(self):
        return self.spacing * self.n_half

    @property
    def omega(self):
        return self.spacing * np.arange(-self.n_half, self.n_half + 1)

    def refined(self):
        """Same span, half the spacing."""
        return FrequencyGrid(self.spacing / 2.0, self.n_half * 2)

    @staticmethod
    def for_pairs(omega_mn, pairs, temperature, pad_width=10.0, pad_temp=20.0,
                  points_per_scale=8.0):
        """Grid spanning all level splittings with room for the envelopes.

        The span covers [min(omega_mn) - pad_width*W_max - pad_temp*T,
        max(omega_mn) + ...], symmetrized about zero; the spacing resolves
        the temperature and every pair scale above the resolvability floor.
        """
        omega_mn = np.atleast_1d(np.asarray(omega_mn, dtype=float))
        w_max = max([p.width for p in pairs], default=0.0)
        margin = pad_width * w_max + pad_temp * temperature
        half = max(abs(omega_mn.min() - margin), abs(omega_mn.max() + margin))
        scales = [temperature]
        floor = temperature / SCALE_FLOOR
        for p in pairs:
            for s in (p.width, p.gamma):
                if s >= floor:
                    scales.append(s)
        spacing = min(scales) / points_per_scale
        return FrequencyGrid(spacing, int(math.ceil(half / spacing)))


def grid_convolve(kernel_fn, samples, grid):
    """(kernel * samples)(w_i) = sum_j kernel(w_i - w_j) samples_j dw / 2pi.

    The kernel is evaluated analytically on the (2N-1)-point difference
    grid; trapezoid end weights are applied to the samples.
    """
    n = grid.n_points
    diffs = grid.spacing * np.arange(-(n - 1), n)
    kern = kernel_fn(diffs)
    weighted = np.array(samples, dtype=float)
    weighted[0] *= 0.5
    weighted[-1] *= 0.5
    return fftconvolve(kern, weighted, mode="valid") * grid.spacing / (2.0 * math.pi)


def pv_convolve(samples, grid):
    """Principal-value transform g(w) = PV int dW/2pi f(w - W)/W.

    Implemented in the symmetric-difference form: the odd 1/W kernel is
    sampled on the difference grid with its central point set to zero, so
    no singular quadrature is ever performed.  The W integral is cut off
    at the grid edge.
    """
    n = grid.n_points
    j = np.arange(-(n - 1), n)
    kern = np.zeros(2 * n - 1)
    nz = j != 0
    kern[nz] = 1.0 / j[nz]
    weighted = np.array(samples, dtype=float)
    weighted[0] *= 0.5
    weighted[-1] *= 0.5
    return fftconvolve(kern, weighted, mode="valid") / (2.0 * math.pi)


def lorentzian(omega, gamma):
    """Normalized line shape 2 gamma / (w^2 + gamma^2); int dw/2pi = 1."""
    return 2.0 * gamma / (omega**2 + gamma**2)


def current_ratio(basis, i, j):
    """I_ij / (I_i - I_j), the intrawell coupling ratio of a state pair."""
    num = basis.phi_mat[i, j]
    den = basis.phi_mean[i] - basis.phi_mean[j]
    scale = np.max(np.abs(basis.phi_mean))
    if abs(den) < 1e-12 * scale:
        if abs(num) < 1e-12 * scale:
            return 0.0
        raise SingularPairError(
            f"states {basis.labels[i]} and {basis.labels[j]} carry equal mean "
            f"currents but a nonzero current matrix element"
        )
    return num / den


def tunneling_amplitude(omega, basis, i, j):
    """Frequency-dependent amplitude Delta_ij/2 + w I_ij/(I_i - I_j)."""
    if i == j:
        raise SingularPairError("tunneling amplitude requires two distinct states")
    return 0.5 * basis.delta[i, j] + np.asarray(omega, dtype=float) * current_ratio(
        basis, i, j
    )


def charge_coupling(basis, noise_params, i, j):
    """|q_ij/C|^2 prefactor of S_q, i.e. 16 E_C |N_ij|^2 tan(delta_C) in front
    of the dimensionless charge thermal factor."""
    return (
        16.0
        * basis.e_c
        * abs(basis.n_mat[i, j]) ** 2
        * noise_params.charge.loss_tangent
    )


@dataclass
class HybridSpectrum:
    """Sampled spectra S_mn(w) for all ordered state pairs on one grid."""

    grid: FrequencyGrid
    values: np.ndarray          # (n_states, n_states, n_points)
    basis: object
    noise: NoiseParams

    def value(self, i, j):
        return self.values[i, j]

    def at(self, i, j, x):
        """Linear interpolation; clamps to the edge values outside the span
        (the charge part is flat there, the flux part negligible)."""
        v = self.values[i, j]
        return np.interp(x, self.grid.omega, v, left=v[0], right=v[-1])


def _pair_flux_base(pair, noise_params, grid):
    """(G^L * G^H)(w) for one pair, with delta branches for unresolved scales."""
    omega = grid.omega
    t = noise_params.temperature
    lim = RESOLVE_FACTOR * grid.spacing
    w_ok = pair.width >= lim
    g_ok = pair.gamma >= lim
    if w_ok and g_ok:
        samples = hf_envelope(omega, pair, noise_params.high_freq)
        return grid_convolve(lambda d: gaussian_envelope(d, pair), samples, grid)
    if g_ok:            # Gaussian too narrow: G^L -> delta(w - eps)
        return hf_envelope(omega - pair.eps, pair, noise_params.high_freq)
    if w_ok and pair.gamma > 0:
        # envelope peak unresolved but its tails are analytic; keep them and
        # let the Gaussian carry the line shape near the center
        core = gaussian_envelope(omega, pair)
        tail = hf_envelope(omega - pair.eps, pair, noise_params.high_freq)
        return np.maximum(core, tail)
    if pair.gamma > 0:  # both narrow: evaluate the envelope pointwise
        return hf_envelope(omega - pair.eps, pair, noise_params.high_freq)
    if w_ok:            # G^H -> delta(w): flux kernel reduces to the Gaussian
        return gaussian_envelope(omega, pair)
    return np.zeros_like(omega)  # both scales identically zero


def _pair_charge_base(pair, noise_params, grid):
    """(G^L * ctf)(w): Gaussian convolved with the charge thermal factor."""
    omega = grid.omega
    t = noise_params.temperature
    if pair.width >= RESOLVE_FACTOR * grid.spacing:
        samples = charge_thermal_factor(omega / t)
        return grid_convolve(lambda d: gaussian_envelope(d, pair), samples, grid)
    return charge_thermal_factor((omega - pair.eps) / t)


def hybrid_spectrum(basis, noise_params, grid):
    """Assemble S_mn(w) for every ordered pair; S_nn = 0 identically."""
    n = basis.n_states
    omega = grid.omega
    values = np.zeros((n, n, grid.n_points))
    ind = basis.params.main_inductance
    for i in range(n):
        for j in range(i + 1, n):
            pair = pair_params(noise_params.low_freq, noise_params.high_freq,
                               basis.currents[i], basis.currents[j], ind)
            flux_base = _pair_flux_base(pair, noise_params, grid)
            charge_base = _pair_charge_base(pair, noise_params, grid)
            q_ij = charge_coupling(basis, noise_params, i, j)
            amp_ij = np.abs(tunneling_amplitude(omega, basis, i, j)) ** 2
            values[i, j] = amp_ij * flux_base + q_ij * charge_base
            # Delta~_ji(w) = Delta~_ij(-w), so |amp| is just reindexed
            values[j, i] = amp_ij[::-1] * flux_base + q_ij * charge_base
    return HybridSpectrum(grid=grid, values=values, basis=basis,
                          noise=noise_params)


@dataclass
class LevelDressing:
    """Broadening gamma_n(w) and shift delta_n(w), sampled per state."""

    grid: FrequencyGrid
    gamma: np.ndarray   # (n_states, n_points), >= 0
    shift: np.ndarray   # (n_states, n_points)

    def gamma_at(self, n, x):
        g = self.gamma[n]
        return np.interp(x, self.grid.omega, g, left=g[0], right=g[-1])

    def shift_at(self, n, x):
        d = self.shift[n]
        return np.interp(x, self.grid.omega, d, left=d[0], right=d[-1])


def intrawell_broadening_fn(basis, noise_params, m):
    """Closed-form gamma_m(w) = gamma^F + gamma^C over intrawell partners.

    Each partner is evaluated at its spectral argument w + w_mk, matching
    the definition gamma_m(w) = 1/2 sum_k S_mk(w + w_mk) with the narrow
    low-frequency Gaussian taken as a delta:
      gamma^F term: 1/2 |I_mk/(I_m-I_k)|^2 (w+w_mk)^2 G^H_mk(w+w_mk),
      gamma^C term: 8 E_C tan(delta_C) |N_mk|^2 ctf((w+w_mk)/T).
    Absorption partners (w_mk < 0) are thereby thermally suppressed, so the
    intrawell ground state keeps (near) zero linewidth.
    """
    ind = basis.params.main_inductance
    t = noise_params.temperature
    terms = []
    for k in range(basis.n_states):
        if k == m or not basis.same_well(m, k):
            continue
        pair = pair_params(noise_params.low_freq, noise_params.high_freq,
                           basis.currents[m], basis.currents[k], ind)
        r = current_ratio(basis, m, k)
        q_coeff = 8.0 * basis.e_c * noise_params.charge.loss_tangent \
            * abs(basis.n_mat[m, k]) ** 2
        terms.append((basis.omega(m, k), r * r, pair, q_coeff))

    def gamma_m(omega):
        omega = np.asarray(omega, dtype=float)
        out = np.zeros_like(omega)
        for w_mk, r_sq, pair, q_coeff in terms:
            x = omega + w_mk
            out = out + q_coeff * charge_thermal_factor(x / t)
            if pair.gamma > 0 and r_sq != 0.0:
                out = out + 0.5 * r_sq * x**2 * hf_envelope(
                    x, pair, noise_params.high_freq
                )
        return out

    return gamma_m


def level_broadening(basis, noise_params, grid, route="closed", spectrum=None):
    """Sample gamma_n(w) for all states.

    route "closed" uses the intrawell single-photon decomposition;
    route "spectrum" evaluates gamma_n(w) = 1/2 sum_k S_nk(w + w_nk)
    from a precomputed HybridSpectrum (all partners).
    """
    n = basis.n_states
    gamma = np.zeros((n, grid.n_points))
    if route == "closed":
        for m in range(n):
            gamma[m] = intrawell_broadening_fn(basis, noise_params, m)(grid.omega)
    elif route == "spectrum":
        if spectrum is None:
            spectrum = hybrid_spectrum(basis, noise_params, grid)
        for m in range(n):
            for k in range(n):
                if k == m:
                    continue
                gamma[m] += 0.5 * spectrum.at(m, k, grid.omega + basis.omega(m, k))
    else:
        raise ValueError(f"unknown broadening route: {route!r}")
    # floor FFT roundoff: broadenings are non-negative by construction
    np.maximum(gamma, 0.0, out=gamma)
    return LevelDressing(grid=grid, gamma=gamma, shift=np.zeros_like(gamma))


def level_shift(basis, spectrum, dressing=None):
    """Fill in delta_n(w) = sum_k PV int dW/2pi S_nk(w + w_nk - W)/W."""
    grid = spectrum.grid
    n = basis.n_states
    shift = np.zeros((n, grid.n_points))
    for m in range(n):
        for k in range(n):
            if k == m:
                continue
            g = pv_convolve(spectrum.value(m, k), grid)
            shift[m] += np.interp(grid.omega + basis.omega(m, k),
                                  grid.omega, g, left=g[0], right=g[-1])
    if dressing is None:
        dressing = LevelDressing(grid=grid, gamma=np.zeros((n, grid.n_points)),
                                 shift=shift)
    else:
        dressing.shift = shift
    return dressing


def relaxation_rate(basis, spectrum, dressing, m, n, include_shifts=True):
    """Transition rate n -> m (internal energy units).

    Gamma_mn = 2 int dw/2pi [g(w) / ((w - d(w))^2 + g(w)^2)] S_nm(w - w_mn)
    with g = gamma_n(w) + gamma_m(-w), d = delta_n(w) - delta_m(-w).
    With vanishing g the Lorentzian is a delta and the rate reduces to the
    golden-rule value S_nm(w_nm).
    """
    grid = dressing.grid
    omega = grid.omega
    g = dressing.gamma[n] + dressing.gamma[m][::-1]
    w_mn = basis.omega(m, n)
    s = spectrum.at(n, m, omega - w_mn)
    if np.max(g) < 1e-12 * max(abs(w_mn), spectrum.noise.temperature):
        return float(spectrum.at(n, m, basis.omega(n, m)))
    d = np.zeros_like(omega)
    if include_shifts:
        d = dressing.shift[n] - dressing.shift[m][::-1]
    core = RESOLVE_FACTOR * grid.spacing
    center = float(np.interp(0.0, omega, d))  # line center: omega - d = 0
    g_core = 0.5 * float(np.interp(center + core, omega, g)
                         + np.interp(center - core, omega, g))
    if g_core < core:
        # Lorentzian core narrower than the mesh: analytic mass at the line
        # center plus the sampled tails outside |omega - center| < core
        tail_mask = np.abs(omega - center) >= core
        tail = np.trapezoid(
            np.where(tail_mask, g / ((omega - d) ** 2 + g**2) * s, 0.0), omega
        ) / math.pi
        core_mass = (2.0 / math.pi) * math.atan2(core, g_core)
        return float(core_mass * spectrum.at(n, m, center - w_mn) + tail)
    integrand = g / ((omega - d) ** 2 + g**2) * s
    return float(2.0 * np.trapezoid(integrand, omega) / (2.0 * math.pi))


def rate_matrix(basis, spectrum, dressing, include_shifts=True):
    """Gamma[m, n] = rate of the n -> m transition; zero diagonal."""
    n_states = basis.n_states
    gam = np.zeros((n_states, n_states))
    for m in range(n_states):
        for n in range(n_states):
            if m != n:
                gam[m, n] = relaxation_rate(basis, spectrum, dressing, m, n,
                                            include_shifts=include_shifts)
    return gam


@dataclass(frozen=True)
class RateOptions:
    """Knobs for the escape-rate assembly."""

    flux_only: bool = False
    refine_rel_tol: float = 5e-3
    max_refinements: int = 6
    broadening_route: str = "closed"
    include_shifts: bool = False


@dataclass
class EscapeRate:
    """Total escape rate and its per-channel decomposition (internal units)."""

    total: float
    channels: dict              # odd label -> rate
    grid: FrequencyGrid
    refinements: int
    converged: bool
    n_channels_available: int = 0


def _escape_grid(basis, noise_params, channel_idx):
    """Frequency grid driven by the interwell channel pairs only."""
    ind = basis.params.main_inductance
    pairs = [
        pair_params(noise_params.low_freq, noise_params.high_freq,
                    basis.currents[0], basis.currents[m], ind)
        for m in channel_idx
    ]
    omegas = [basis.omega(0, m) for m in channel_idx] + [0.0]
    return FrequencyGrid.for_pairs(omegas, pairs, noise_params.temperature)


def _escape_channels(basis):
    """Indices of right-well target states (odd labels)."""
    return [i for i, lab in enumerate(basis.labels) if lab % 2 == 1]


def _channel_rate(basis, noise_params, grid, m, gamma_m, flux_only):
    """Gamma_0m: Lorentzian of the target level against the hybrid kernel."""
    omega = grid.omega
    h = grid.spacing
    ind = basis.params.main_inductance
    pair = pair_params(noise_params.low_freq, noise_params.high_freq,
                       basis.currents[0], basis.currents[m], ind)
    w_0m = basis.omega(0, m)
    t = noise_params.temperature

    # inner convolution F(x) = int dw2/2pi G^L(x - w2) K(w2)
    kernel = (abs(basis.delta[0, m]) ** 2 / 4.0) * hf_envelope(
        omega, pair, noise_params.high_freq
    )
    if not flux_only:
        kernel = kernel + charge_coupling(basis, noise_params, 0, m) \
            * charge_thermal_factor(omega / t)
    f = grid_convolve(lambda d: gaussian_envelope(d, pair), kernel, grid)

    def f_at(x):
        return np.interp(x, omega, f, left=f[0], right=f[-1])

    gam = gamma_m(omega)
    core = RESOLVE_FACTOR * h
    gam_core = 0.5 * float(gamma_m(core) + gamma_m(-core))
    if np.max(gam) <= 0.0:
        return float(f_at(w_0m))
    if gam_core < core:
        # Lorentzian core narrower than the mesh: take its mass analytically
        # at the line center and add the sampled tails outside |w| < core
        tail = np.abs(omega) >= core
        tail_sum = np.trapezoid(
            np.where(tail, lorentzian(omega, gam) * f_at(w_0m - omega), 0.0),
            omega,
        ) / (2.0 * math.pi)
        core_mass = (2.0 / math.pi) * math.atan2(core, gam_core)
        return float(core_mass * f_at(w_0m) + tail_sum)
    integrand = lorentzian(omega, gam) * f_at(w_0m - omega)
    return float(np.trapezoid(integrand, omega) / (2.0 * math.pi))


def _clamped(x):
    """Floor tiny negative FFT roundoff at zero (the integrand is >= 0)."""
    return max(x, 0.0)


def escape_rate(basis, noise_params, options=None, grid=None):
    """Escape rate from the left-well ground state (internal energy units).

    The result is refined by doubling the grid resolution until the total
    changes by less than options.refine_rel_tol.
    """
    options = options or RateOptions()
    channel_idx = _escape_channels(basis)
    if not channel_idx:
        warnings.warn("no right-well target states below the barrier",
                      stacklevel=2)
        return EscapeRate(0.0, {}, grid, 0, True, 0)
    if grid is None:
        grid = _escape_grid(basis, noise_params, channel_idx)
    gamma_fns = {m: intrawell_broadening_fn(basis, noise_params, m)
                 for m in channel_idx}

    def assemble(g):
        per = {
            int(basis.labels[m]): _clamped(
                _channel_rate(basis, noise_params, g, m, gamma_fns[m],
                              options.flux_only))
            for m in channel_idx
        }
        return per, sum(per.values())

    per, total = assemble(grid)
    converged = False
    refinements = 0
    for _ in range(options.max_refinements):
        finer = grid.refined()
        per_f, total_f = assemble(finer)
        refinements += 1
        change = abs(total_f - total) / max(abs(total_f), 1e-300)
        grid, per, total = finer, per_f, total_f
        if change < options.refine_rel_tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"escape rate not converged to {options.refine_rel_tol:.1e} after "
            f"{refinements} refinements", stacklevel=2)
    return EscapeRate(total=total, channels=per, grid=grid,
                      refinements=refinements, converged=converged,
                      n_channels_available=len(channel_idx))


@dataclass
class SweepPoint:
    """One bias point of an MRT sweep; rates in 1/us."""

    flux_bias_mphi0: float
    total: float
    channels: dict
    converged: bool


@dataclass
class MrtSweep:
    points: list = field(default_factory=list)

    @property
    def biases(self):
        return np.array([p.flux_bias_mphi0 for p in self.points])

    @property
    def totals(self):
        return np.array([p.total for p in self.points])


def mrt_sweep(params, phase_grid, noise_params, biases_mphi0, options=None,
              n_left=2, n_right=3):
    """Escape rate versus flux bias; one basis re-solve per point."""
    from .squid import solve_basis

    biases = np.asarray(biases_mphi0, dtype=float)
    if np.any(np.diff(biases) <= 0):
        raise ValueError("bias list must be strictly increasing")
    sweep = MrtSweep()
    for b in biases:
        p = params.with_flux_bias(units.mphi0_to_wb(b))
        basis = solve_basis(p, phase_grid, n_left=n_left, n_right=n_right)
        res = escape_rate(basis, noise_params, options)
        sweep.points.append(SweepPoint(
            flux_bias_mphi0=float(b),
            total=units.rate_ghz_to_per_us(res.total),
            channels={k: units.rate_ghz_to_per_us(v)
                      for k, v in res.channels.items()},
            converged=res.converged,
        ))
    return sweep
