"""Unit conversions. Every energy in the package is stored as E/hbar in rad/s."""
from scipy import constants as _c

HBAR = _c.hbar
K_B = _c.k
E_CHARGE = _c.e

#: 1 micro-electronvolt divided by hbar, in rad/s (~1.519e9).
MICRO_EV = 1e-6 * _c.e / _c.hbar
#: k_B * 1 K / hbar, in rad/s (~1.309e11).
KELVIN = _c.k / _c.hbar


def uev_to_rad_s(energy_uev: float) -> float:
    return energy_uev * MICRO_EV


def rad_s_to_uev(freq: float) -> float:
    return freq / MICRO_EV


def thermal_frequency(temperature: float) -> float:
    """k_B T / hbar in rad/s."""
    return temperature * KELVIN
