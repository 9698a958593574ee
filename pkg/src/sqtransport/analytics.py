"""Closed-form large-N disorder averages of the Fano factor.

These are the leading-order random-matrix results for a quasi-1D waveguide,
expressed through the dimensionless length s = L / xi_a and the ratio of the
mean free path to the absorption (amplification) length.  The absorbing and
amplifying expressions are analytic continuations of each other under
xi_a -> i xi_a, i.e. sinh -> sin and cotanh -> cotan.  The amplifying forms
hold below the laser threshold s = pi only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import ThresholdReached, ValidityWarning
from .photostatistics import DetectionConfig, SqueezedInput, fano_in_squeezed

#: the diffusive window l << L << N l is flagged outside this safety factor
_VALIDITY_FACTOR = 5.0


@dataclass(frozen=True)
class WaveguideRatios:
    """Dimensionless parameters of an ensemble-averaged Fano factor.

    Attributes:
        s: waveguide length over absorption/amplification length, L / xi_a.
        l_over_xi: mean free path over absorption/amplification length.
        efficiency: detection efficiency d.
        occupation: signed Bose-Einstein occupation f of the medium.
        fano_in: Fano factor of the incident radiation (direct detection).
        rho: squeezing magnitude of the incident state (homodyne detection).
        coupling: homodyne beam-splitter coupling kappa.
        n_modes: number of propagating modes N (homodyne only).
    """

    s: float
    l_over_xi: float
    efficiency: float = 1.0
    occupation: float = 0.0
    fano_in: float | None = None
    rho: float | None = None
    coupling: float | None = None
    n_modes: int | None = None

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError("s must be positive")
        if self.l_over_xi <= 0:
            raise ValueError("l_over_xi must be positive")
        if not 0 <= self.efficiency <= 1:
            raise ValueError("efficiency must lie in [0, 1]")
        if self.n_modes is not None and self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")


def _warn_outside_window(w: WaveguideRatios) -> None:
    length_over_l = w.s / w.l_over_xi
    if length_over_l < _VALIDITY_FACTOR:
        warnings.warn(
            f"L = {length_over_l:.2f} l is not large compared to the mean free path",
            ValidityWarning,
            stacklevel=3,
        )
    elif w.n_modes is not None and length_over_l > w.n_modes / _VALIDITY_FACTOR:
        # localization sets in at L ~ N l; stay well below it
        warnings.warn(
            "L approaches the localization length N l",
            ValidityWarning,
            stacklevel=3,
        )


def _require(w: WaveguideRatios, *names: str) -> None:
    for name in names:
        if getattr(w, name) is None:
            raise ValueError(f"WaveguideRatios.{name} is required here")


def _check_below_threshold(s: float) -> None:
    if s >= math.pi:
        raise ThresholdReached(f"s = {s:.6f} is at or beyond the laser threshold s = pi")


def direct_bracket_absorbing(s: float) -> float:
    """3 - (2s + cotanh s)/sinh s - (s cotanh s - 1)/sinh^2 s + s/sinh^3 s."""
    sh = math.sinh(s)
    coth = 1.0 / math.tanh(s)
    return 3.0 - (2.0 * s + coth) / sh - (s * coth - 1.0) / sh**2 + s / sh**3


def direct_bracket_amplifying(s: float) -> float:
    """3 - (2s - cotan s)/sin s + (s cotan s - 1)/sin^2 s - s/sin^3 s."""
    sn = math.sin(s)
    cot = math.cos(s) / sn
    return 3.0 - (2.0 * s - cot) / sn + (s * cot - 1.0) / sn**2 - s / sn**3


def fano_direct_absorbing_avg(w: WaveguideRatios) -> float:
    """Average direct-detection Fano factor of an absorbing waveguide.

    1 + (4 l d / 3 xi_a sinh s)(F_in - 1) + (d f / 2) * bracket(s); tends to
    the universal value 1 + (3/2) d f for strong absorption.
    """
    _require(w, "fano_in")
    _warn_outside_window(w)
    d = w.efficiency
    incident = (4.0 * w.l_over_xi * d / (3.0 * math.sinh(w.s))) * (w.fano_in - 1.0)
    return 1.0 + incident + 0.5 * d * w.occupation * direct_bracket_absorbing(w.s)


def fano_direct_amplifying_avg(w: WaveguideRatios) -> float:
    """Average direct-detection Fano factor of an amplifying waveguide, s < pi.

    Obtained from the absorbing result by xi_a -> i xi_a; diverges at the
    laser threshold s = pi.

    Raises:
        ThresholdReached: s >= pi.
    """
    _require(w, "fano_in")
    _check_below_threshold(w.s)
    _warn_outside_window(w)
    d = w.efficiency
    incident = (4.0 * w.l_over_xi * d / (3.0 * math.sin(w.s))) * (w.fano_in - 1.0)
    return 1.0 + incident + 0.5 * d * w.occupation * direct_bracket_amplifying(w.s)


def _homo_avg(w: WaveguideRatios, amplifying: bool, incident_factor: float) -> float:
    _require(w, "rho", "coupling", "n_modes")
    if amplifying:
        _check_below_threshold(w.s)
    _warn_outside_window(w)
    front = 8.0 * w.l_over_xi * w.efficiency * w.coupling / 3.0
    sh = math.sinh(w.rho)
    if amplifying:
        geometry = math.sin(w.s)
        thermal_shape = math.cos(w.s) / geometry - 1.0 / geometry
    else:
        geometry = math.sinh(w.s)
        thermal_shape = math.cosh(w.s) / geometry + 1.0 / geometry
    incident = front / (w.n_modes * geometry) * incident_factor * sh
    thermal = front * w.occupation * thermal_shape
    return 1.0 + incident + thermal


def fano_homo_min_absorbing_avg(w: WaveguideRatios) -> float:
    """Average phase-minimised homodyne Fano factor, absorbing waveguide.

    1 - (8 l d k / 3 N xi_a sinh s) e^{-rho} sinh rho
      + (8 l d k / 3 xi_a) f [cotanh s + 1/sinh s]
    """
    return _homo_avg(w, amplifying=False, incident_factor=-math.exp(-w.rho))


def fano_homo_min_amplifying_avg(w: WaveguideRatios) -> float:
    """Average phase-minimised homodyne Fano factor, amplifying waveguide (s < pi)."""
    return _homo_avg(w, amplifying=True, incident_factor=-math.exp(-w.rho))


def fano_homo_fixed_phase_avg(w: WaveguideRatios, amplifying: bool = False) -> float:
    """Average homodyne Fano factor at a fixed probe phase.

    The random phase of t_{n0 m0} averages the phase-sensitive term to zero,
    which amounts to replacing e^{-rho} by -sinh(rho) in the minimised
    expressions.
    """
    return _homo_avg(w, amplifying=amplifying, incident_factor=math.sinh(w.rho))


def zero_length_limits(state: SqueezedInput, config: DetectionConfig) -> tuple[float, float]:
    """Fano factors of a zero-length (fully transparent) segment.

    Returns (direct, homodyne-minimised): 1 + d (F_in - 1) and
    1 - 2 delta_{n0 m0} d k e^{-rho} sinh(rho).
    """
    d = config.efficiency
    direct = 1.0 + d * (fano_in_squeezed(state) - 1.0)
    if config.homodyne is None:
        return direct, 1.0
    same_mode = config.homodyne.probe_mode == state.incident_mode
    rho = state.rho
    homodyne = 1.0
    if same_mode:
        homodyne -= 2.0 * d * config.homodyne.coupling * math.exp(-rho) * math.sinh(rho)
    return direct, homodyne
