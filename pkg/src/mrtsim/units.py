"""Physical constants and unit conversions.

Internal unit system: hbar = k_B = 1, energies (and angular frequencies)
measured in units of h * 1 GHz.  Circuit constants are accepted in SI,
temperatures and noise widths in millikelvin, fluxes in mPhi0, and rates
are reported in 1/us.
"""

import math

# CODATA 2018 exact values
H_PLANCK = 6.62607015e-34       # J s
E_CHARGE = 1.602176634e-19      # C
K_BOLTZMANN = 1.380649e-23      # J/K
PHI0 = H_PLANCK / (2.0 * E_CHARGE)  # flux quantum, Wb

# internal energy unit: h * 1 GHz, in joule
ENERGY_UNIT_J = H_PLANCK * 1e9

# k_B * 1 mK expressed in internal units
MK_TO_GHZ = K_BOLTZMANN * 1e-3 / ENERGY_UNIT_J


def joule_to_ghz(e):
    return e / ENERGY_UNIT_J


def mk_to_ghz(t_mk):
    return t_mk * MK_TO_GHZ


def ghz_to_mk(e_ghz):
    return e_ghz / MK_TO_GHZ


def mphi0_to_wb(x):
    return x * 1e-3 * PHI0


def wb_to_mphi0(x):
    return x / (1e-3 * PHI0)


def rate_ghz_to_per_us(g):
    """Internal energy (h GHz units) to a decay rate in 1/us.

    With hbar = 1 an energy E corresponds to the rate E/hbar, i.e.
    2*pi*1e9 1/s per internal unit.
    """
    return g * 2.0 * math.pi * 1e3
