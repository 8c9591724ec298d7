"""Flux-pulsed charge-qubit cat-state generation: perturbative phases, exact
Fock-space dynamics, Ohmic decoherence and field-state diagnostics."""

from .model import DeviceParams, PulseSpec, TimeGrid

__all__ = ["DeviceParams", "PulseSpec", "TimeGrid"]
__version__ = "0.1.0"
