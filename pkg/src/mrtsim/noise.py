"""Noise spectral densities and envelope functions.

All energies and frequencies are in internal units (h GHz, hbar = k_B = 1).
Low-frequency flux noise enters through a Gaussian envelope with first
moment eps_mn and width W_mn tied by the fluctuation-dissipation relation
W_mn^2 = 2 eps_mn T.  High-frequency flux noise is (sub-)Ohmic and enters
through a Lorentzian-like envelope of width gamma_mn; charge noise has a
flat-at-zero spectrum parameterized by a constant loss tangent.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import units
from .errors import ParameterError


@dataclass(frozen=True)
class LowFreqFluxNoise:
    """Gaussian low-frequency flux noise: MRT width W and temperature T (GHz)."""

    width: float        # W
    temperature: float  # T

    def __post_init__(self):
        if self.width <= 0 or self.temperature <= 0:
            raise ParameterError("W and T must be positive")

    @property
    def reorganization(self):
        """eps_L = W^2 / 2T (fluctuation-dissipation)."""
        return self.width**2 / (2.0 * self.temperature)


@dataclass(frozen=True)
class HighFreqFluxNoise:
    """(Sub-)Ohmic high-frequency flux noise.

    coupling is lambda_phi (GHz), the state-independent energy scale;
    alpha >= 0 is the sub-Ohmic exponent (alpha = 0 is Ohmic).
    """

    coupling: float     # lambda_phi
    alpha: float
    temperature: float  # T

    def __post_init__(self):
        if self.coupling < 0:
            raise ParameterError("lambda_phi must be non-negative")
        if self.alpha < 0:
            raise ParameterError("sub-Ohmic exponent must be non-negative")
        if self.temperature <= 0:
            raise ParameterError("T must be positive")


@dataclass(frozen=True)
class ChargeNoise:
    """Charge noise with constant loss tangent tan(delta_C)."""

    loss_tangent: float
    capacitance: float  # farad
    temperature: float  # T, GHz

    def __post_init__(self):
        if self.loss_tangent < 0:
            raise ParameterError("tan(delta_C) must be non-negative")
        if self.capacitance <= 0 or self.temperature <= 0:
            raise ParameterError("C and T must be positive")


@dataclass(frozen=True)
class NoiseParams:
    """Bundle of the three noise channels sharing one temperature."""

    low_freq: LowFreqFluxNoise
    high_freq: HighFreqFluxNoise
    charge: ChargeNoise

    @property
    def temperature(self):
        return self.low_freq.temperature

    @staticmethod
    def from_experiment(w_mk, t_mk, lambda_mk, alpha, tan_delta_c, capacitance):
        """Build from Table-style inputs: W, T, lambda_phi in mK."""
        t = units.mk_to_ghz(t_mk)
        return NoiseParams(
            LowFreqFluxNoise(units.mk_to_ghz(w_mk), t),
            HighFreqFluxNoise(units.mk_to_ghz(lambda_mk), alpha, t),
            ChargeNoise(tan_delta_c, capacitance, t),
        )


@dataclass(frozen=True)
class PairNoiseParams:
    """Per state-pair dissipative parameters, all in GHz.

    eps = (I_m - I_n)^2 eps_phi, width W_mn = |I_m - I_n| W_phi, and
    gamma_mn = lambda_phi [L |I_m - I_n| / Phi0]^(2/(1+alpha)).
    """

    eps: float
    width: float
    gamma: float


def pair_params(lf, hf, current_m, current_n, inductance):
    """Dissipative parameters for the (m, n) pair from its current difference."""
    u = inductance * abs(current_m - current_n) / units.PHI0
    width = u * lf.width
    eps = width**2 / (2.0 * lf.temperature)
    if u == 0.0:
        gamma = 0.0
    else:
        gamma = hf.coupling * u ** (2.0 / (1.0 + hf.alpha))
    return PairNoiseParams(eps=eps, width=width, gamma=gamma)


def thermal_factor(x):
    """x / (1 - exp(-x)), continued through the removable point x = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-6
    # evaluate with non-positive exponents only, for overflow safety
    denom = -np.expm1(-np.abs(np.where(small, 1.0, x)))
    mag = np.abs(x) / denom
    out = np.where(small, 1.0 + x / 2.0 + x**2 / 12.0,
                   np.where(x >= 0, mag, mag * np.exp(-np.abs(x))))
    return out if out.ndim else float(out)


def charge_thermal_factor(x):
    """tanh(x) / (1 - exp(-x)) = (1 + exp(-x)) / (1 + exp(-2x)).

    Flat (= 1) at x = 0 and for x >> 1; decays as exp(-|x|) for x << 0.
    """
    x = np.asarray(x, dtype=float)
    # evaluate with non-positive exponents only, for overflow safety
    pos = np.exp(-np.abs(x))
    out = np.where(
        x >= 0,
        (1.0 + pos) / (1.0 + pos**2),
        pos * (1.0 + pos) / (1.0 + pos**2),
    )
    return out if out.ndim else float(out)


def gaussian_envelope(omega, pair):
    """Low-frequency Gaussian envelope G^L_mn(omega), units 1/GHz."""
    if pair.width <= 0:
        raise ParameterError("zero-width pair: use the delta branch")
    w2 = pair.width**2
    return np.sqrt(2.0 * math.pi / w2) * np.exp(
        -((np.asarray(omega, dtype=float) - pair.eps) ** 2) / (2.0 * w2)
    )


def kappa(alpha):
    """Normalization factor of the high-frequency envelope (closed form)."""
    if alpha < 0:
        raise ParameterError("sub-Ohmic exponent must be non-negative")
    p = 2.0 + alpha
    # equal to pi p / [Gamma(1/p) Gamma((1+alpha)/p)] by the reflection
    # formula; this form gives kappa(0) = 2 exactly
    return p * math.sin(math.pi / p)


def hf_envelope(omega, pair, hf):
    """High-frequency envelope G^H_mn(omega), units 1/GHz."""
    if pair.gamma <= 0:
        raise ParameterError("zero-gamma pair: use the delta branch")
    omega = np.asarray(omega, dtype=float)
    beta = 1.0 / hf.temperature
    k = kappa(hf.alpha)
    return (k / pair.gamma) * thermal_factor(beta * omega) / (
        1.0 + (np.abs(omega) / pair.gamma) ** (2.0 + hf.alpha)
    )


def gamma_phi_from_lambda(hf, inductance):
    """Bare coupling gamma_phi from the pair-level scale lambda_phi."""
    return hf.coupling * (inductance / units.PHI0) ** (2.0 / (1.0 + hf.alpha))


def lambda_from_gamma_phi(gamma_phi, alpha, inductance):
    return gamma_phi * (units.PHI0 / inductance) ** (2.0 / (1.0 + alpha))


def flux_hf_spectrum(omega, hf, gamma_phi):
    """High-frequency flux-noise spectrum S_Phi^H(omega).

    S = kappa gamma_phi^(1+alpha) / |omega|^alpha * beta omega/(1-e^-beta omega).
    For alpha > 0 the |omega|^-alpha prefactor diverges at omega = 0; this
    standalone form is exposed for diagnostics only (the envelope that
    enters rates is regular everywhere).
    """
    omega = np.asarray(omega, dtype=float)
    beta = 1.0 / hf.temperature
    k = kappa(hf.alpha)
    if hf.alpha == 0:
        return k * gamma_phi * thermal_factor(beta * omega)
    mag = np.where(omega == 0.0, np.inf, np.abs(omega))
    return k * gamma_phi ** (1.0 + hf.alpha) / mag**hf.alpha * thermal_factor(
        beta * omega
    )


def inductive_loss_tangent(omega, hf, inductance):
    """tan(delta_L)(omega) of the high-frequency flux noise."""
    omega = np.asarray(omega, dtype=float)
    gamma_phi = gamma_phi_from_lambda(hf, inductance)
    k = kappa(hf.alpha)
    return (
        k * omega / (2.0 * inductance * hf.temperature)
        * gamma_phi ** (1.0 + hf.alpha) / np.abs(omega) ** hf.alpha
    )


def shunt_conductance(omega, hf, inductance):
    """1/R_s(omega), the inverse shunting resistance."""
    omega = np.asarray(omega, dtype=float)
    gamma_phi = gamma_phi_from_lambda(hf, inductance)
    k = kappa(hf.alpha)
    return (
        k / (2.0 * inductance**2 * hf.temperature)
        * gamma_phi ** (1.0 + hf.alpha) / np.abs(omega) ** hf.alpha
    )


def noise_inductance(omega, hf, inductance):
    """L_phi(omega) = gamma_phi (gamma_phi/|omega|)^alpha."""
    omega = np.asarray(omega, dtype=float)
    gamma_phi = gamma_phi_from_lambda(hf, inductance)
    return gamma_phi * (gamma_phi / np.abs(omega)) ** hf.alpha


def flux_spectrum_routes(omega, hf, inductance):
    """S_Phi^H computed through all four equivalent parameterizations.

    Returns a dict keyed by route name; all entries must agree pointwise.
    """
    omega = np.asarray(omega, dtype=float)
    beta = 1.0 / hf.temperature
    gamma_phi = gamma_phi_from_lambda(hf, inductance)
    tf = thermal_factor(beta * omega)
    return {
        "coupling": flux_hf_spectrum(omega, hf, gamma_phi),
        "loss_tangent": 2.0 * inductance
        * inductive_loss_tangent(omega, hf, inductance) / beta / omega * tf,
        "noise_inductance": kappa(hf.alpha)
        * noise_inductance(omega, hf, inductance) * tf,
        "shunt_resistance": 2.0 * inductance**2
        * shunt_conductance(omega, hf, inductance) / beta * tf,
    }


def charge_spectrum(omega, cn):
    """Charge-noise spectrum S_q(omega) = 2 C tan(delta_C) tanh(w/T)/(1-e^-w/T).

    Returned in farad * (dimensionless thermal factor); flat at omega = 0
    with value 2 C tan(delta_C).
    """
    x = np.asarray(omega, dtype=float) / cn.temperature
    return 2.0 * cn.capacitance * cn.loss_tangent * charge_thermal_factor(x)


def charge_loss_tangent(omega, cn):
    """Frequency-dependent loss tangent tan(delta_C)(omega)."""
    return cn.loss_tangent * np.tanh(np.asarray(omega, dtype=float)
                                     / cn.temperature)
