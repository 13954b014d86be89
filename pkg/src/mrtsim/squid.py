"""rf-SQUID double-well model: Hamiltonian, well states, matrix elements.

The device is reduced to a single phase coordinate phi (the CJJ loop is
frozen at its bias value).  The Hamiltonian on the phase grid is

    H = 4 E_C N^2 + E_L phi^2 / 2 + E_J cos(phi_cjj_x / 2) cos(phi + phi_x)

with N = -i d/dphi.  Both derivative operators are discretized with the
Fourier-grid (sinc-DVR) scheme, which converges exponentially for bound
states, so grid-refinement checks are cheap.

Well-localized metastable states are built from the exact low-energy
eigenstates: the well-indicator operator (1 right of the barrier top,
0 left of it) is diagonalized inside the low-energy subspace, which
splits the subspace into left- and right-localized states even at exact
interwell resonances, and the Hamiltonian is then re-diagonalized within
each well block.  Energies and tunneling amplitudes are read off the
full Hamiltonian: E_n = <n|H|n>, Delta_mn = -2 <m|H|n>.  Unlike a
hard-wall construction this preserves the under-barrier tails, so the
exponentially small Delta_mn are grid-stable.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from . import units
from .errors import (
    ConfigurationError,
    LevelCountError,
    ParameterError,
    PotentialShapeError,
)


@dataclass(frozen=True)
class SquidParams:
    """Circuit constants (SI) and flux biases (weber).

    flux_bias is measured relative to Phi0/2: flux_bias = 0 is the
    degeneracy point of the symmetric double well.
    """

    main_inductance: float      # L, henry
    cjj_inductance: float       # L_CJJ, henry
    capacitance: float          # C, farad
    critical_current: float     # I_C, ampere
    flux_bias: float = 0.0      # Phi^x, weber (relative to Phi0/2)
    cjj_bias: float = 0.0       # Phi^x_CJJ, weber

    def __post_init__(self):
        if self.main_inductance <= 0:
            raise ParameterError("main inductance must be positive")
        if self.capacitance <= 0:
            raise ParameterError("capacitance must be positive")
        if self.critical_current <= 0:
            raise ParameterError("critical current must be positive")
        if self.cjj_inductance < 0:
            raise ParameterError("CJJ inductance must be non-negative")
        if self.cjj_inductance / self.main_inductance > 0.2:
            warnings.warn(
                "L_CJJ/L > 0.2: the frozen-CJJ reduction assumes L_CJJ << L",
                stacklevel=2,
            )

    def with_flux_bias(self, phi_x_wb):
        return SquidParams(
            self.main_inductance,
            self.cjj_inductance,
            self.capacitance,
            self.critical_current,
            phi_x_wb,
            self.cjj_bias,
        )

    @property
    def josephson_scale(self):
        """cos(phi_cjj_x / 2), the CJJ suppression of E_J."""
        return math.cos(math.pi * self.cjj_bias / units.PHI0)

    @property
    def current_per_phase(self):
        """Phi0 / (2 pi L): converts a mean phase to a current, in ampere."""
        return units.PHI0 / (2.0 * math.pi * self.main_inductance)


def derived_energies(params):
    """Charging, inductive and Josephson energies (internal GHz units)."""
    e_c = units.E_CHARGE**2 / (2.0 * params.capacitance)
    e_l = (units.PHI0 / (2.0 * math.pi)) ** 2 / params.main_inductance
    e_j = (units.PHI0 / (2.0 * math.pi)) * params.critical_current
    return tuple(units.joule_to_ghz(e) for e in (e_c, e_l, e_j))


@dataclass(frozen=True)
class PhaseGrid:
    min_phase: float = -1.5 * math.pi
    max_phase: float = 1.5 * math.pi
    n_points: int = 2048

    def __post_init__(self):
        if self.n_points < 128:
            raise ConfigurationError("phase grid needs at least 128 points")
        if self.max_phase <= self.min_phase:
            raise ConfigurationError("empty phase grid")

    @property
    def points(self):
        return np.linspace(self.min_phase, self.max_phase, self.n_points)

    @property
    def spacing(self):
        return (self.max_phase - self.min_phase) / (self.n_points - 1)

    def refined(self, factor=2):
        return PhaseGrid(self.min_phase, self.max_phase, self.n_points * factor)

    def widened(self, fraction=0.2):
        half = 0.5 * (self.max_phase - self.min_phase) * fraction
        return PhaseGrid(self.min_phase - half, self.max_phase + half, self.n_points)


def _fgh_second_derivative(n, dx):
    """Sinc-DVR matrix of -d^2/dx^2 on a uniform grid."""
    k = math.pi / dx
    idx = np.arange(n)
    diff = idx[:, None] - idx[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = 2.0 * k**2 / math.pi**2 * ((-1.0) ** diff) / diff.astype(float) ** 2
    np.fill_diagonal(t, k**2 / 3.0)
    return t


def _fgh_first_derivative(n, dx):
    """Sinc-DVR matrix of d/dx on a uniform grid (antisymmetric)."""
    idx = np.arange(n)
    diff = idx[:, None] - idx[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        d = ((-1.0) ** diff) / (diff.astype(float) * dx)
    np.fill_diagonal(d, 0.0)
    return d


def potential_on_grid(params, grid):
    """U(phi) in internal GHz units."""
    _, e_l, e_j = derived_energies(params)
    phi = grid.points
    phi_x = 2.0 * math.pi * params.flux_bias / units.PHI0
    return e_l * phi**2 / 2.0 + e_j * params.josephson_scale * np.cos(phi + phi_x)


def build_hamiltonian(params, grid):
    """Dense real-symmetric Hamiltonian and potential samples on the grid."""
    e_c, _, _ = derived_energies(params)
    u = potential_on_grid(params, grid)
    h = 4.0 * e_c * _fgh_second_derivative(grid.n_points, grid.spacing)
    h[np.diag_indices_from(h)] += u
    return h, u


def _locate_wells(u):
    """Indices of the two well minima and the barrier top between them."""
    interior = np.arange(1, len(u) - 1)
    minima = interior[(u[1:-1] < u[:-2]) & (u[1:-1] <= u[2:])]
    if len(minima) != 2:
        raise PotentialShapeError(
            f"expected a double-well potential, found {len(minima)} minima"
        )
    lo, hi = int(minima[0]), int(minima[1])
    barrier = lo + int(np.argmax(u[lo : hi + 1]))
    if barrier in (lo, hi):
        raise PotentialShapeError("no barrier between the two minima")
    return lo, hi, barrier


def _localized_well_states(h, barrier_idx, n_subspace):
    """Split the lowest eigenstates into left/right-localized well states.

    Diagonalizes the right-side indicator projected into the span of the
    n_subspace lowest eigenstates; eigenvalues cluster at 0 (left) and 1
    (right).  Within each cluster the projected Hamiltonian is
    re-diagonalized so intrawell off-diagonal elements vanish.
    """
    _, vecs = eigh(h, subset_by_index=(0, n_subspace - 1))
    indicator = np.zeros(h.shape[0])
    indicator[barrier_idx + 1 :] = 1.0
    proj = vecs.T @ (indicator[:, None] * vecs)
    weight, rot = eigh(proj)
    localized = vecs @ rot

    states = []
    for well, mask in (("L", weight <= 0.5), ("R", weight > 0.5)):
        if not mask.any():
            continue
        block = localized[:, mask]
        h_block = block.T @ h @ block
        e_block, v_block = eigh(h_block)
        psi_block = block @ v_block
        for e, psi in zip(e_block, psi_block.T):
            states.append((well, float(e), psi))
    states.sort(key=lambda s: s[1])
    return states


@dataclass
class LrBasis:
    """Well-labeled metastable basis with all noise-facing matrix elements.

    States are ordered by their global label: left-well states carry even
    labels 0, 2, ..., right-well states odd labels 1, 3, ....  Matrices are
    indexed by position in `labels`.
    """

    labels: np.ndarray          # global state labels
    wells: list                 # 'L' or 'R' per state
    energies: np.ndarray        # E_n, GHz
    psi: np.ndarray             # (n_states, n_grid), sum(psi^2) = 1
    delta: np.ndarray           # Delta_mn, GHz; zero within a well
    phi_mean: np.ndarray        # <n|phi|n>
    phi_mat: np.ndarray         # <m|phi|n>; zero across wells
    n_mat: np.ndarray           # <m|N|n>, complex; zero diagonal
    barrier_top: float          # GHz
    grid: PhaseGrid
    params: SquidParams
    e_c: float = field(default=0.0)     # charging energy, GHz
    n_below_left: int = 0
    n_below_right: int = 0

    @property
    def currents(self):
        """Persistent currents I_n in ampere."""
        return self.params.current_per_phase * self.phi_mean

    @property
    def current_mat(self):
        """Current matrix elements I_mn in ampere."""
        return self.params.current_per_phase * self.phi_mat

    @property
    def charge_mat(self):
        """Charge matrix elements q_mn in coulomb."""
        return 2.0 * units.E_CHARGE * self.n_mat

    def omega(self, i, j):
        """omega_ij = E_i - E_j (positional indices)."""
        return self.energies[i] - self.energies[j]

    def index_of(self, label):
        hits = np.nonzero(self.labels == label)[0]
        if len(hits) == 0:
            raise KeyError(f"no state with label {label}")
        return int(hits[0])

    def same_well(self, i, j):
        return self.wells[i] == self.wells[j]

    @property
    def n_states(self):
        return len(self.labels)


def solve_wells(h, u, grid, params, n_left, n_right):
    """Construct the left-right metastable basis from the discretized H."""
    lo, hi, barrier = _locate_wells(u)
    barrier_top = float(u[barrier])
    u_min = float(min(u[lo], u[hi]))
    edge = float(min(u[0], u[-1]))
    if edge <= barrier_top:
        raise ConfigurationError(
            "grid endpoints lie below the barrier top; widen the phase grid"
        )
    if edge - u_min < 1.5 * (barrier_top - u_min):
        warnings.warn("phase-grid endpoints are close to the barrier top",
                      stacklevel=2)

    # grow the subspace until enough sub-barrier states exist in each well
    n_subspace = n_left + n_right + 2
    for _ in range(4):
        states = _localized_well_states(h, barrier, n_subspace)
        left = [s for s in states if s[0] == "L" and s[1] < barrier_top]
        right = [s for s in states if s[0] == "R" and s[1] < barrier_top]
        if len(left) >= n_left and len(right) >= n_right:
            break
        if any(s[1] >= barrier_top for s in states):
            break  # the subspace already reaches past the barrier
        n_subspace += 4
    if n_left > len(left):
        raise LevelCountError(n_left, len(left), "left")
    if n_right > len(right):
        raise LevelCountError(n_right, len(right), "right")

    avail_l, avail_r = len(left), len(right)
    chosen = ([("L", 2 * k, s) for k, s in enumerate(left[:n_left])]
              + [("R", 2 * k + 1, s) for k, s in enumerate(right[:n_right])])
    chosen.sort(key=lambda item: item[1])
    wells = [item[0] for item in chosen]
    labels = np.array([item[1] for item in chosen])
    psi = np.array([item[2][2] for item in chosen])

    h_mat = psi @ h @ psi.T
    energies = np.diag(h_mat).copy()
    delta = -2.0 * h_mat
    np.fill_diagonal(delta, 0.0)
    same = np.array([[wells[i] == wells[j] for j in range(len(wells))]
                     for i in range(len(wells))])
    delta[same] = 0.0

    phi = grid.points
    phi_mat = psi @ (phi[None, :] * psi).T
    phi_mean = np.diag(phi_mat).copy()
    phi_mat = np.where(same, phi_mat, 0.0)

    d1 = _fgh_first_derivative(grid.n_points, grid.spacing)
    n_mat = -1j * (psi @ d1 @ psi.T)

    e_c, _, _ = derived_energies(params)
    return LrBasis(
        labels=labels,
        wells=wells,
        energies=energies,
        psi=psi,
        delta=delta,
        phi_mean=phi_mean,
        phi_mat=phi_mat,
        n_mat=n_mat,
        barrier_top=barrier_top,
        grid=grid,
        params=params,
        e_c=e_c,
        n_below_left=avail_l,
        n_below_right=avail_r,
    )


def solve_basis(params, grid, n_left, n_right):
    """Convenience: build H and solve the well basis in one step."""
    h, u = build_hamiltonian(params, grid)
    return solve_wells(h, u, grid, params, n_left, n_right)


def bias_sweep_basis(params, grid, flux_biases_wb, n_left, n_right):
    """One LrBasis per bias point, with labels tracked across the sweep.

    flux_biases_wb must be sorted.  States at adjacent points are matched
    by maximal wavefunction overlap; a well-label flip raises.
    """
    if np.any(np.diff(flux_biases_wb) < 0):
        raise ConfigurationError("flux-bias list must be sorted")
    out = []
    prev = None
    for phi_x in flux_biases_wb:
        try:
            basis = solve_basis(params.with_flux_bias(phi_x), grid,
                                n_left, n_right)
        except (PotentialShapeError, LevelCountError) as err:
            raise type(err)(
                f"{err} (at flux bias {units.wb_to_mphi0(phi_x):.4f} mPhi0)"
            ) from err
        if prev is not None:
            overlap = np.abs(basis.psi @ prev.psi.T)
            match = np.argmax(overlap, axis=1)
            if not np.array_equal(match, np.arange(basis.n_states)):
                raise PotentialShapeError(
                    "state tracking lost across the bias sweep near "
                    f"{units.wb_to_mphi0(phi_x):.4f} mPhi0"
                )
        prev = basis
        out.append(basis)
    return out
