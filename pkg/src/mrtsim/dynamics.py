"""Master-equation dynamics of the state populations P_n(t).

The rate matrix Gamma[m, n] is the n -> m transition rate; populations obey
dP_n/dt = sum_m (Gamma_nm P_m - Gamma_mn P_n).  Units are caller-defined:
with rates in 1/us, times are in us.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse.csgraph import connected_components

from .errors import IntegrationError, ParameterError, ResolutionError


@dataclass
class Trajectory:
    """Sampled populations: times (n_t,) and populations (n_t, n_states)."""

    times: np.ndarray
    populations: np.ndarray


def generator_matrix(gamma):
    """A with dP/dt = A P: off-diagonal Gamma_nm, diagonal -sum_m Gamma_mn."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
        raise ParameterError("rate matrix must be square")
    if np.any(gamma < 0) or np.any(np.diag(gamma) != 0):
        raise ParameterError("rate matrix needs non-negative entries and zero "
                             "diagonal")
    return gamma - np.diag(gamma.sum(axis=0))


def evolve(p0, gamma, t_grid, rtol=1e-10, atol=1e-14, neg_tol=1e-8):
    """Integrate the master equation with an implicit (BDF) scheme.

    The generator is linear and can be very stiff (intrawell vs interwell
    rates differ by many orders of magnitude), so the exact Jacobian is
    passed to the integrator.
    """
    p0 = np.asarray(p0, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if abs(p0.sum() - 1.0) > 1e-9 or np.any(p0 < 0):
        raise ParameterError("initial populations must be normalized and "
                             "non-negative")
    a = generator_matrix(gamma)
    if t_grid.size == 1:
        return Trajectory(times=t_grid, populations=p0[None, :].copy())
    sol = solve_ivp(lambda t, p: a @ p, (t_grid[0], t_grid[-1]), p0,
                    method="BDF", t_eval=t_grid, jac=lambda t, p: a,
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegrationError(f"master-equation integration failed: "
                               f"{sol.message}")
    pops = sol.y.T
    if np.any(pops < -neg_tol):
        raise IntegrationError(
            f"negative population {pops.min():.3e} beyond tolerance {neg_tol}"
        )
    if np.max(np.abs(pops.sum(axis=1) - 1.0)) > 1e-9:
        raise IntegrationError("probability not conserved within 1e-9")
    return Trajectory(times=sol.t, populations=pops)


def _closed_classes(gamma):
    """Strongly-connected classes with no outgoing rate (absorbing classes)."""
    n = gamma.shape[0]
    n_comp, labels = connected_components(gamma > 0, directed=True,
                                          connection="strong")
    closed = []
    for c in range(n_comp):
        members = np.flatnonzero(labels == c)
        outside = np.setdiff1d(np.arange(n), members)
        if outside.size == 0 or not np.any(gamma[np.ix_(outside, members)] > 0):
            closed.append(members)
    return n_comp, closed


def steady_state(gamma):
    """Stationary distribution via the nullspace of the generator.

    For an irreducible rate matrix the nullspace is one-dimensional.  A
    reducible matrix has one equilibrium per closed class; they are then
    combined with equal class weights and a warning is emitted.
    """
    gamma = np.asarray(gamma, dtype=float)
    n = gamma.shape[0]
    n_comp, closed = _closed_classes(gamma)
    if n_comp > 1:
        warnings.warn(
            f"rate matrix is reducible ({n_comp} communicating classes, "
            f"{len(closed)} closed); returning equally weighted per-class "
            f"equilibria", stacklevel=2)
        p = np.zeros(n)
        for members in closed:
            sub = steady_state(gamma[np.ix_(members, members)]) \
                if members.size > 1 else np.ones(1)
            p[members] = sub / len(closed)
        return p
    a = generator_matrix(gamma)
    scale = gamma.max() if gamma.max() > 0 else 1.0
    # solve the balance equations at unit scale plus the normalization row
    m = np.vstack([a / scale, np.ones(n)])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    p, *_ = np.linalg.lstsq(m, rhs, rcond=None)
    p = np.maximum(p, 0.0)
    p /= p.sum()
    resid = np.max(np.abs(a @ p))
    if resid > 1e-10 * scale:
        raise IntegrationError(f"steady-state residual {resid:.3e} exceeds "
                               f"1e-10 of the largest rate")
    return p


def escape_rate_from_decay(traj):
    """Initial decay rate -dP_0/dt at t = 0 from the first trajectory step."""
    t, p = traj.times, traj.populations
    if t.size < 2:
        raise ResolutionError("trajectory needs at least two time points")
    dt = t[1] - t[0]
    slope = (p[1, 0] - p[0, 0]) / dt
    # first-step curvature error ~ dt * Gamma * slope; demand a short step
    if p[0, 0] - p[1, 0] > 0.05 * p[0, 0]:
        raise ResolutionError("first time step too coarse for an initial "
                              "slope estimate")
    return -slope


def boltzmann(energies, temperature):
    """Normalized Boltzmann weights exp(-(E - E_min)/T)."""
    if temperature <= 0:
        raise ParameterError("temperature must be positive")
    e = np.asarray(energies, dtype=float)
    w = np.exp(-(e - e.min()) / temperature)
    return w / w.sum()


def shifted_levels(basis, dressing=None):
    """E~_n = E_n + delta_n(0); plain E_n when no dressing is supplied."""
    e = np.array(basis.energies, dtype=float)
    if dressing is not None:
        e = e + np.array([dressing.shift_at(n, 0.0)
                          for n in range(len(e))])
    return e
