"""Command-line interface: config-driven runs serialized as commented CSV.

Subcommands: levels | sweep | spectra | dynamics | validate.  Exit codes:
0 success, 1 invariant/check failure, 2 configuration or solver error.
"""

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy.integrate import quad

from . import dynamics, units
from .config import load_config, parse_config
from .errors import MrtError
from .noise import (PairNoiseParams, charge_thermal_factor, gaussian_envelope,
                    hf_envelope, kappa, pair_params, thermal_factor)
from .rates import (FrequencyGrid, LevelDressing, RateOptions, _pair_charge_base,
                    charge_coupling, escape_rate, hybrid_spectrum,
                    level_broadening, level_shift, rate_matrix, relaxation_rate)
from .squid import (PhaseGrid, SquidParams, build_hamiltonian,
                    derived_energies, solve_basis)

FLOAT_FMT = "%.12e"


def _rate_options(cfg, args):
    o = cfg.options
    flux_only = o.flux_only or bool(getattr(args, "flux_only", False))
    tol = o.refine_rel_tol
    max_ref = o.max_refinements
    if getattr(args, "refine", False):
        tol /= 10.0
        max_ref += 4
    return RateOptions(flux_only=flux_only, refine_rel_tol=tol,
                       max_refinements=max_ref,
                       include_shifts=o.include_shifts)


def _n_right(cfg, args):
    k = getattr(args, "channels", None)
    return int(k) if k else cfg.options.n_right


def _header(cfg, command, columns, extra=()):
    g = cfg.phase_grid
    lines = [
        f"# mrtsim {command}",
        f"# config-hash: {cfg.config_hash}",
        f"# phase-grid: {g.n_points} points on [{g.min_phase:.12g}, "
        f"{g.max_phase:.12g}] rad",
        "# units: flux mPhi0, energy GHz, rate 1/us, current uA, time us",
    ]
    lines += list(extra)
    lines.append("# columns: " + ",".join(columns))
    return lines


def _write_rows(out, lines, rows):
    text = "\n".join(lines + [",".join(FLOAT_FMT % v if isinstance(v, float)
                                       else str(v) for v in row)
                              for row in rows]) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _solve_cfg_basis(cfg, n_right):
    return solve_basis(cfg.squid, cfg.phase_grid,
                       n_left=cfg.options.n_left, n_right=n_right)


def _all_pair_grid(basis, noise_params):
    """Frequency grid resolving every ordered pair and level splitting."""
    ind = basis.params.main_inductance
    pairs, omegas = [], [0.0]
    for i in range(basis.n_states):
        for j in range(i + 1, basis.n_states):
            pairs.append(pair_params(noise_params.low_freq,
                                     noise_params.high_freq,
                                     basis.currents[i], basis.currents[j], ind))
            omegas.append(basis.omega(i, j))
            omegas.append(basis.omega(j, i))
    return FrequencyGrid.for_pairs(omegas, pairs, noise_params.temperature)


def cmd_levels(cfg, args):
    basis = _solve_cfg_basis(cfg, _n_right(cfg, args))
    idx0 = basis.index_of(0)
    columns = ["label", "well", "energy_ghz", "current_ua", "abs_delta0_ghz"]
    extra = [
        f"# barrier-top: {FLOAT_FMT % basis.barrier_top} GHz",
        f"# sub-barrier levels: left {basis.n_below_left}, "
        f"right {basis.n_below_right}",
    ]
    rows = []
    for i in range(basis.n_states):
        rows.append([
            int(basis.labels[i]), str(basis.wells[i]),
            float(basis.energies[i]),
            float(basis.currents[i] * 1e6),
            float(abs(basis.delta[idx0, i])) if i != idx0 else 0.0,
        ])
    _write_rows(args.out, _header(cfg, "levels", columns, extra), rows)
    return 0


def _sweep_worker(task):
    params, grid, noise_params, bias, options, n_left, n_right = task
    p = params.with_flux_bias(units.mphi0_to_wb(bias))
    basis = solve_basis(p, grid, n_left=n_left, n_right=n_right)
    res = escape_rate(basis, noise_params, options)
    return (float(bias), units.rate_ghz_to_per_us(res.total),
            {k: units.rate_ghz_to_per_us(v) for k, v in res.channels.items()})


def cmd_sweep(cfg, args):
    options = _rate_options(cfg, args)
    n_right = _n_right(cfg, args)
    labels = [2 * k + 1 for k in range(n_right)]
    biases = cfg.sweep.biases()
    tasks = [(cfg.squid, cfg.phase_grid, cfg.noise, b, options,
              cfg.options.n_left, n_right) for b in biases]
    workers = min(os.cpu_count() or 1, len(tasks)) if len(tasks) > 4 else 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, tasks, chunksize=4))
    else:
        results = [_sweep_worker(t) for t in tasks]
    columns = ["flux_mphi0", "rate_total"] + [f"rate_ch{m}" for m in labels]
    extra = [f"# channels: {len(labels)} (right-well labels "
             f"{', '.join(str(m) for m in labels)})",
             f"# flux-only: {options.flux_only}"]
    rows = [[b, total] + [ch.get(m, 0.0) for m in labels]
            for b, total, ch in results]
    _write_rows(args.out, _header(cfg, "sweep", columns, extra), rows)
    return 0


def _db_residual(s_ij, s_ji, omega, t):
    """Max grid residual of S_ji(-w) = exp(-w/T) S_ij(w), both orderings.

    Checked at w >= 0 in each direction, so the Boltzmann factor only ever
    suppresses (amplifying it would just magnify FFT roundoff at points
    where the spectrum is vanishingly small).
    """
    pos = omega >= 0
    fac = np.exp(-omega[pos] / t)
    scale = max(np.max(s_ij), np.max(s_ji), 1e-300)
    r1 = np.max(np.abs(s_ji[::-1][pos] - fac * s_ij[pos]))
    r2 = np.max(np.abs(s_ij[::-1][pos] - fac * s_ji[pos]))
    return max(r1, r2) / scale


def _parse_pair(text, basis):
    try:
        a, b = (int(x) for x in text.split(","))
        return basis.index_of(a), basis.index_of(b)
    except (ValueError, KeyError):
        valid = ", ".join(str(int(l)) for l in basis.labels)
        raise MrtError(f"unknown pair {text!r}; valid labels: {valid}")


def cmd_spectra(cfg, args):
    basis = _solve_cfg_basis(cfg, _n_right(cfg, args))
    i, j = _parse_pair(args.pair, basis)
    grid = _all_pair_grid(basis, cfg.noise)
    spectrum = hybrid_spectrum(basis, cfg.noise, grid)
    omega = grid.omega
    if i == j:
        gl = gh = qterm = s = np.zeros_like(omega)
    else:
        pair = pair_params(cfg.noise.low_freq, cfg.noise.high_freq,
                           basis.currents[i], basis.currents[j],
                           basis.params.main_inductance)
        gl = gaussian_envelope(omega, pair) if pair.width > 0 \
            else np.zeros_like(omega)
        gh = hf_envelope(omega, pair, cfg.noise.high_freq) if pair.gamma > 0 \
            else np.zeros_like(omega)
        qterm = charge_coupling(basis, cfg.noise, i, j) \
            * _pair_charge_base(pair, cfg.noise, grid)
        s = spectrum.value(i, j)
    # detailed balance: S_ji(-w) = exp(-w/T) S_ij(w), checked on the grid
    t = cfg.noise.temperature
    resid = _db_residual(s, spectrum.value(j, i), omega, t) if i != j else 0.0
    columns = ["omega_ghz", "g_low", "g_high", "charge_term", "s_mn"]
    extra = [f"# pair: {args.pair}",
             f"# frequency-grid: spacing {FLOAT_FMT % grid.spacing} GHz, "
             f"{grid.n_points} points"]
    rows = [[float(omega[k]), float(gl[k]), float(gh[k]), float(qterm[k]),
             float(s[k])] for k in range(grid.n_points)]
    lines = _header(cfg, "spectra", columns, extra)
    _write_rows(args.out, lines, rows)
    footer = f"# detailed-balance residual: {resid:.3e}\n"
    if args.out:
        with open(args.out, "a") as fh:
            fh.write(footer)
    else:
        sys.stdout.write(footer)
    return 0


def cmd_dynamics(cfg, args):
    basis = _solve_cfg_basis(cfg, _n_right(cfg, args))
    grid = _all_pair_grid(basis, cfg.noise)
    spectrum = hybrid_spectrum(basis, cfg.noise, grid)
    dressing = level_broadening(basis, cfg.noise, grid)
    if cfg.options.include_shifts:
        dressing = level_shift(basis, spectrum, dressing)
    gam = rate_matrix(basis, spectrum, dressing,
                      include_shifts=cfg.options.include_shifts)
    gam_us = units.rate_ghz_to_per_us(gam)
    p0 = np.zeros(basis.n_states)
    p0[basis.index_of(0)] = 1.0
    if args.t_max > 0:
        t_grid = np.linspace(0.0, args.t_max, args.n_times)
    else:
        t_grid = np.array([0.0])
    traj = dynamics.evolve(p0, gam_us, t_grid)
    columns = ["t_us"] + [f"p_{int(l)}" for l in basis.labels]
    rows = [[float(traj.times[k])] + [float(v) for v in traj.populations[k]]
            for k in range(traj.times.size)]
    _write_rows(args.out, _header(cfg, "dynamics", columns), rows)
    return 0


def _run_checks(cfg):
    """Invariant suite; yields (name, passed, detail)."""
    t = cfg.noise.temperature
    lf, hf = cfg.noise.low_freq, cfg.noise.high_freq

    pair = pair_params(lf, hf, 1.0e-6, -1.0e-6, cfg.squid.main_inductance)
    norm, _ = quad(lambda w: gaussian_envelope(w, pair),
                   pair.eps - 12 * pair.width, pair.eps + 12 * pair.width)
    err = abs(norm / (2 * math.pi) - 1.0)
    yield "gaussian-normalization", err < 1e-8, f"rel err {err:.2e}"

    small = PairNoiseParams(eps=pair.eps, width=pair.width, gamma=1e-3 * t)
    norm, _ = quad(lambda w: hf_envelope(w, small, hf), -10 * t, 10 * t,
                   limit=400)
    err = abs(norm / (2 * math.pi) - 1.0)
    yield "hf-normalization", err < 1e-3, \
        f"rel err {err:.2e} at gamma/T = 1e-3, window 10 T"

    yield "kappa-ohmic", kappa(0.0) == 2.0, f"kappa(0) = {kappa(0.0)}"
    # the bare envelope shape integrates to 2 pi / kappa
    k_closed = kappa(hf.alpha)
    shape, _ = quad(lambda y: 1.0 / (1.0 + abs(y) ** (2.0 + hf.alpha)),
                    -np.inf, np.inf, limit=400)
    err = abs(k_closed - 2.0 * math.pi / shape) / k_closed
    yield "kappa-numerical", err < 1e-3, \
        f"alpha = {hf.alpha}, rel err {err:.2e}"

    x = np.linspace(0.1, 30.0, 50)
    fdt = np.max(np.abs(thermal_factor(-x) - np.exp(-x) * thermal_factor(x)))
    cdt = np.max(np.abs(charge_thermal_factor(-x)
                        - np.exp(-x) * charge_thermal_factor(x)))
    yield "fdt-envelopes", max(fdt, cdt) < 1e-12, \
        f"max residual {max(fdt, cdt):.2e}"

    p = cfg.squid.with_flux_bias(units.mphi0_to_wb(0.05))
    basis = solve_basis(p, cfg.phase_grid, n_left=1, n_right=1)
    grid = _all_pair_grid(basis, cfg.noise)
    spectrum = hybrid_spectrum(basis, cfg.noise, grid)
    s01, s10 = spectrum.value(0, 1), spectrum.value(1, 0)
    resid = _db_residual(s01, s10, grid.omega, t)
    yield "detailed-balance", resid < 1e-6, f"grid residual {resid:.2e}"

    zero = LevelDressing(grid=grid, gamma=np.zeros((2, grid.n_points)),
                         shift=np.zeros((2, grid.n_points)))
    rate = relaxation_rate(basis, spectrum, zero, 0, 1, include_shifts=False)
    golden = float(spectrum.at(1, 0, basis.omega(1, 0)))
    err = abs(rate - golden) / max(abs(golden), 1e-300)
    yield "bloch-redfield-limit", err < 1e-6, f"rel err {err:.2e}"

    harm = SquidParams(
        main_inductance=cfg.squid.main_inductance,
        cjj_inductance=cfg.squid.cjj_inductance,
        capacitance=cfg.squid.capacitance,
        critical_current=cfg.squid.critical_current,
        flux_bias=0.0, cjj_bias=units.PHI0 / 2.0,
    )
    h, _ = build_hamiltonian(harm, cfg.phase_grid)
    evals = np.linalg.eigvalsh(h)[:6]
    e_c, e_l, _ = derived_energies(harm)
    w0 = math.sqrt(8.0 * e_c * e_l)
    exact = w0 * (np.arange(6) + 0.5)
    err = np.max(np.abs(evals - exact) / exact)
    yield "harmonic-limit", err < 1e-6, f"6-level rel err {err:.2e}"


def cmd_validate(cfg, args):
    failed = 0
    out_lines = []
    for name, ok, detail in _run_checks(cfg):
        out_lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += 0 if ok else 1
    out_lines.append("all checks passed" if failed == 0
                     else f"{failed} check(s) failed")
    text = "\n".join(out_lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if failed == 0 else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mrtsim",
        description="Multilevel resonant-tunneling escape rates of an "
                    "rf-SQUID flux qubit under flux and charge noise.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML config file (defaults apply "
                                        "to omitted fields)")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--channels", type=int, metavar="K",
                       help="cap the number of right-well target levels")

    p = sub.add_parser("levels", help="level report at the configured bias")
    common(p)
    p.set_defaults(func=cmd_levels)

    p = sub.add_parser("sweep", help="escape rate vs flux bias (CSV)")
    common(p)
    p.add_argument("--flux-only", action="store_true",
                   help="drop the charge-noise kernel from the escape rate")
    p.add_argument("--refine", action="store_true",
                   help="tighten the adaptive-refinement tolerance 10x")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectra", help="dump S_mn(omega) for one state pair")
    common(p)
    p.add_argument("--pair", required=True, metavar="M,N",
                   help="state labels, e.g. 0,1")
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("dynamics", help="integrate the populations P_n(t)")
    common(p)
    p.add_argument("--t-max", type=float, default=1000.0, metavar="T",
                   help="final time in us (0: emit the initial row only)")
    p.add_argument("--n-times", type=int, default=201,
                   help="number of output time points")
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("validate", help="run the invariant check suite")
    common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else parse_config({})
        return args.func(cfg, args)
    except MrtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
