"""Photocount statistics of coherent and squeezed light behind a scattering medium.

All cumulants are spectral densities at a single working frequency: counts per
unit time and unit bandwidth/(2 pi).  Fano factors are ratios of such
densities, so the overall detection-time prefactor never appears.  The signal
is a single-mode ideal squeezed state entering the medium from the left; the
medium injects thermal (or, for an amplifier, inverted-population) noise with
signed occupation f through the deviation of S from unitarity.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    GeneratingFunctionDomainError,
    PrecisionLossWarning,
    SingularResolvent,
    ZeroMeanCount,
    ZeroTransmission,
)
from .medium import ScatteringMatrix, deviation_from_unitarity

TRANSMISSION = "transmission"
REFLECTION = "reflection"
ALL_MODES = "all"


@dataclass(frozen=True)
class SqueezedInput:
    """Single-mode ideal squeezed state |alpha, rho e^{i phi}> entering mode m0.

    Attributes:
        alpha: complex displacement.
        rho: squeezing magnitude, >= 0.
        phi: squeezing phase.
        incident_mode: 0-based left-side mode index carrying the input.
    """

    alpha: complex
    rho: float = 0.0
    phi: float = 0.0
    incident_mode: int = 0

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("squeezing magnitude rho must be >= 0")
        if self.incident_mode < 0:
            raise ValueError("incident_mode must be a 0-based mode index")

    @property
    def mean_photon_number(self) -> float:
        return abs(self.alpha) ** 2 + math.sinh(self.rho) ** 2


@dataclass(frozen=True)
class HomodyneConfig:
    """Strong coherent probe superimposed on the transmitted beam.

    Attributes:
        coupling: beam-splitter coupling kappa in (0, 1); the signal reaches
            the detector with weight kappa.
        probe_mode: 0-based transmitted-mode index carrying the probe.
        probe_phase: phase of the probe displacement (its magnitude drops out
            in the strong-probe limit).
    """

    coupling: float
    probe_mode: int = 0
    probe_phase: float = 0.0

    def __post_init__(self):
        if not 0 < self.coupling < 1:
            raise ValueError("homodyne coupling must lie in (0, 1)")
        if self.probe_mode < 0:
            raise ValueError("probe_mode must be a 0-based mode index")


@dataclass(frozen=True)
class DetectionConfig:
    """Which output modes are detected, and how efficiently.

    Attributes:
        efficiency: detector efficiency d in [0, 1], equal for all detected
            modes.
        mode_set: "transmission" (right-side modes), "reflection" (left-side
            modes) or "all".
        homodyne: optional strong-probe configuration.
    """

    efficiency: float = 1.0
    mode_set: str = TRANSMISSION
    homodyne: HomodyneConfig | None = None

    def __post_init__(self):
        if not 0 <= self.efficiency <= 1:
            raise ValueError("efficiency must lie in [0, 1]")
        if self.mode_set not in (TRANSMISSION, REFLECTION, ALL_MODES):
            raise ValueError(f"unknown mode_set {self.mode_set!r}")

    def mode_mask(self, n_modes: int) -> np.ndarray:
        """Boolean mask of the detected entries of a 2N output vector."""
        mask = np.zeros(2 * n_modes, dtype=bool)
        if self.mode_set in (REFLECTION, ALL_MODES):
            mask[:n_modes] = True
        if self.mode_set in (TRANSMISSION, ALL_MODES):
            mask[n_modes:] = True
        return mask


@dataclass(frozen=True)
class CumulantDensities:
    """First two factorial cumulant densities, with their thermal parts."""

    kappa1: float
    kappa2: float
    thermal_kappa1: float
    thermal_kappa2: float


@dataclass(frozen=True)
class FanoBreakdown:
    """A Fano factor with its additive decomposition.

    value = 1 + incident_term + beating_term + probe_term holds by
    construction.  ``incident_term`` carries the incident radiation's own
    excess noise, ``beating_term`` the beating against the medium's thermal or
    spontaneous-emission fluctuations, and ``probe_term`` the probe-phase
    sensitive homodyne part (zero for direct detection).
    """

    value: float
    incident_term: float
    beating_term: float
    probe_term: float
    optimal_probe_phase: float | None = None

    @classmethod
    def from_terms(cls, incident_term: float, beating_term: float, probe_term: float = 0.0,
                   optimal_probe_phase: float | None = None) -> "FanoBreakdown":
        return cls(
            value=1.0 + incident_term + beating_term + probe_term,
            incident_term=incident_term,
            beating_term=beating_term,
            probe_term=probe_term,
            optimal_probe_phase=optimal_probe_phase,
        )


def bose_einstein(hbar_omega_over_kt: float) -> float:
    """Bose-Einstein occupation 1 / (exp(x) - 1).

    A negative argument encodes a negative temperature (amplifying medium) and
    yields values <= -1, approaching -1 for complete population inversion.
    """
    if hbar_omega_over_kt == 0:
        raise ValueError("Bose-Einstein occupation diverges at zero argument")
    return 1.0 / math.expm1(hbar_omega_over_kt)


def squeezed_number_bracket(state: SqueezedInput) -> float:
    """|alpha cosh(rho) - alpha* e^{i phi} sinh(rho)|^2 - |alpha|^2 + sinh^2(rho) cosh(2 rho).

    This combination equals (mean photon number) * (F_in - 1) and is the
    state-dependent part of the second factorial cumulant.
    """
    c = math.cosh(state.rho)
    s = math.sinh(state.rho)
    quadrature = abs(state.alpha * c - np.conj(state.alpha) * cmath.exp(1j * state.phi) * s) ** 2
    return quadrature - abs(state.alpha) ** 2 + s * s * (c * c + s * s)


def fano_in_squeezed(state: SqueezedInput) -> float:
    """Fano factor of the incident squeezed state under unit-efficiency counting.

    1 for a coherent state, 1 + cosh(2 rho) for squeezed vacuum, approaching
    exp(-2 rho) for a large real displacement with phi = 0.
    """
    mean = state.mean_photon_number
    if mean == 0:
        raise ZeroMeanCount("the vacuum state has no mean count to normalize by")
    return 1.0 + squeezed_number_bracket(state) / mean


def _detected_deviation_block(s: ScatteringMatrix, config: DetectionConfig) -> np.ndarray:
    mask = config.mode_mask(s.n_modes)
    x = deviation_from_unitarity(s)
    return x[np.ix_(mask, mask)]


def thermal_cumulant_densities(s: ScatteringMatrix, config: DetectionConfig,
                               occupation: float) -> tuple[float, float]:
    """Thermal factorial cumulant densities of the detected output modes.

    kappa1 = d f tr[P (1 - S S+) P] and kappa2 = d^2 f^2 tr[(P (1 - S S+) P)^2]
    with P projecting onto the detected mode set.  Both vanish for a lossless
    medium.
    """
    block = _detected_deviation_block(s, config)
    d = config.efficiency
    trace = float(np.trace(block).real)
    trace_sq = float(np.sum(np.abs(block) ** 2))  # tr(A^2) = |A|_F^2 for Hermitian A
    return d * occupation * trace, (d * occupation) ** 2 * trace_sq


def _transmission_weights(s: ScatteringMatrix, state: SqueezedInput,
                          config: DetectionConfig) -> tuple[float, float]:
    """Detected weight [S+ D S]_mm and beating weight [S+ D (1-SS+) D S]_mm."""
    mask = config.mode_mask(s.n_modes)
    column = s.full[:, state.incident_mode]
    detected = column[mask]
    d = config.efficiency
    weight = d * float(np.sum(np.abs(detected) ** 2))
    block = _detected_deviation_block(s, config)
    beating = d * d * float((detected.conj() @ block @ detected).real)
    return weight, beating


def direct_cumulants_squeezed(s: ScatteringMatrix, state: SqueezedInput,
                              config: DetectionConfig, occupation: float) -> CumulantDensities:
    """First two factorial cumulant densities for direct detection.

    For detection in transmission these reduce to::

        kappa1 = kappa1_th + d (|alpha|^2 + sinh^2 rho) [t+ t]_{m0 m0}
        kappa2 = kappa2_th
                 + 2 d^2 f (|alpha|^2 + sinh^2 rho) [t+ (1 - r r+ - t t+) t]_{m0 m0}
                 + d^2 [t+ t]^2_{m0 m0} (|alpha|^2 + sinh^2 rho) (F_in - 1)

    where the last bracket is evaluated through ``squeezed_number_bracket``.
    """
    k1_th, k2_th = thermal_cumulant_densities(s, config, occupation)
    weight, beating = _transmission_weights(s, state, config)
    mean = state.mean_photon_number
    kappa1 = k1_th + mean * weight
    kappa2 = k2_th + 2.0 * occupation * mean * beating + weight**2 * squeezed_number_bracket(state)
    return CumulantDensities(kappa1=kappa1, kappa2=kappa2,
                             thermal_kappa1=k1_th, thermal_kappa2=k2_th)


def _efficiency_matrix(s: ScatteringMatrix, config: DetectionConfig) -> np.ndarray:
    return config.efficiency * config.mode_mask(s.n_modes).astype(float)


def m_element(s: ScatteringMatrix, incident_mode: int, config: DetectionConfig,
              occupation: float, z: float) -> float:
    """Diagonal element -z [S+ (1 - z D (1 - S S+) f)^-1 D S]_{m0 m0}.

    Real (it is the diagonal element of a Hermitian matrix); the imaginary
    residue is asserted to stay below 1e-10.
    """
    if z == 0:
        return 0.0
    full = s.full
    d_diag = _efficiency_matrix(s, config)
    x = deviation_from_unitarity(s)
    resolvent = np.eye(2 * s.n_modes) - z * occupation * (d_diag[:, None] * x)
    column = full[:, incident_mode]
    try:
        solved = np.linalg.solve(resolvent, d_diag * column)
    except np.linalg.LinAlgError as exc:
        raise SingularResolvent(str(exc)) from None
    m = -z * complex(column.conj() @ solved)
    assert abs(m.imag) < 1e-10, f"m acquired imaginary part {m.imag:.3e}"
    return m.real


def log_generating_density_direct(z: float, s: ScatteringMatrix, state: SqueezedInput,
                                  config: DetectionConfig, occupation: float) -> float:
    """Spectral density of the log generating function of the photocount.

    Thermal part -ln det[1 - z D (1 - S S+) f] plus the single-incident-mode
    squeezed-state part::

        -1/2 ln(1 + 2 m sinh^2 rho - m^2 sinh^2 rho)
        - m |alpha|^2 (1 + m sinh rho [sinh rho + cosh rho cos(2 arg alpha - phi)])
          / (1 + 2 m sinh^2 rho - m^2 sinh^2 rho)

    The factorial cumulant densities are its derivatives at z = 0.

    Raises:
        GeneratingFunctionDomainError: a logarithm argument is not positive.
    """
    mask = config.mode_mask(s.n_modes)
    x = deviation_from_unitarity(s)
    block = config.efficiency * x[np.ix_(mask, mask)]
    eigenvalues = np.linalg.eigvalsh(block)
    factors = 1.0 - z * occupation * eigenvalues
    if np.any(factors <= 0):
        raise GeneratingFunctionDomainError("thermal determinant crossed zero")
    thermal = -float(np.sum(np.log(factors)))

    m = m_element(s, state.incident_mode, config, occupation, z)
    sh = math.sinh(state.rho)
    ch = math.cosh(state.rho)
    gauge = 1.0 + 2.0 * m * sh * sh - m * m * sh * sh
    if gauge <= 0:
        raise GeneratingFunctionDomainError("squeezed log argument crossed zero")
    squeezed = -0.5 * math.log(gauge)
    amp2 = abs(state.alpha) ** 2
    if amp2 > 0:
        phase = math.cos(2.0 * cmath.phase(complex(state.alpha)) - state.phi)
        displaced = -m * amp2 * (1.0 + m * sh * (sh + ch * phase)) / gauge
    else:
        displaced = 0.0
    return thermal + squeezed + displaced


_STENCILS = {
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
    4: ((-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)),
}


def numeric_factorial_cumulants(s: ScatteringMatrix, state: SqueezedInput,
                                config: DetectionConfig, occupation: float,
                                order: int = 2, step: float = 1e-3) -> list[float]:
    """Factorial cumulant densities by numerical differentiation at z = 0.

    Central stencils with two Richardson extrapolation steps, starting from
    ``step``.  Orders one and two must agree with the closed forms; higher
    orders probe the full generating function.

    Warns:
        PrecisionLossWarning: the two extrapolation levels disagree by more
            than 1e-5 relative.
    """
    if not 1 <= order <= 4:
        raise ValueError("order must be between 1 and 4")

    def generating(z: float) -> float:
        if z == 0:
            return 0.0
        return log_generating_density_direct(z, s, state, config, occupation)

    results = []
    for j in range(1, order + 1):
        stencil = _STENCILS[j]

        def estimate(h: float) -> float:
            return sum(w * generating(k * h) for k, w in stencil) / h**j

        candidates = []
        for h0 in (step, 8.0 * step):  # the larger step escapes the round-off floor
            d0, d1, d2 = estimate(h0), estimate(h0 / 2), estimate(h0 / 4)
            first = (4.0 * d1 - d0) / 3.0
            second = (4.0 * d2 - d1) / 3.0
            scale = max(abs(second), 1e-300)
            candidates.append((abs(second - first) / scale,
                               (16.0 * second - first) / 15.0))
        disagreement, value = min(candidates)
        if disagreement > 1e-5:
            warnings.warn(
                f"order-{j} cumulant extrapolations disagree by "
                f"{disagreement:.2e} relative",
                PrecisionLossWarning,
                stacklevel=2,
            )
        results.append(value)
    return results


def fano_direct(s: ScatteringMatrix, state: SqueezedInput, config: DetectionConfig,
                occupation: float) -> FanoBreakdown:
    """Fano factor of direct detection in transmission, narrowband measurement.

    F = 1 + d [t+ t]_{m0 m0} (F_in - 1)
          + 2 d f [t+ (1 - r r+ - t t+) t]_{m0 m0} / [t+ t]_{m0 m0}

    The broadband thermal densities are excluded; they are available
    separately through ``thermal_cumulant_densities``.
    """
    column = s.t[:, state.incident_mode]
    transmittance = float(np.sum(np.abs(column) ** 2))
    if transmittance < 1e-200:
        raise ZeroTransmission("no transmitted signal in the incident mode")
    x_bb = (
        np.eye(s.n_modes)
        - s.r @ s.r.conj().T
        - s.t @ s.t.conj().T
    )
    beating_weight = float((column.conj() @ x_bb @ column).real)
    d = config.efficiency
    incident = d * transmittance * (fano_in_squeezed(state) - 1.0)
    beating = 2.0 * d * occupation * beating_weight / transmittance
    return FanoBreakdown.from_terms(incident, beating)


def _homodyne_pieces(s: ScatteringMatrix, state: SqueezedInput,
                     config: DetectionConfig, occupation: float):
    if config.homodyne is None:
        raise ValueError("homodyne configuration required")
    hom = config.homodyne
    t_element = complex(s.t[hom.probe_mode, state.incident_mode])
    x_bb = (
        np.eye(s.n_modes)
        - s.r @ s.r.conj().T
        - s.t @ s.t.conj().T
    )
    noise_element = float(x_bb[hom.probe_mode, hom.probe_mode].real)
    dk = config.efficiency * hom.coupling
    beating = 2.0 * dk * occupation * noise_element
    return hom, t_element, dk, beating


def fano_homodyne(s: ScatteringMatrix, state: SqueezedInput, config: DetectionConfig,
                  occupation: float) -> FanoBreakdown:
    """Fano factor of strong-probe homodyne detection at the configured probe phase.

    F - 1 = 2 d k |t_{n0 m0}|^2 sinh^2 rho
            + 2 d k f (1 - r r+ - t t+)_{n0 n0}
            - d k Re[e^{i(phi - 2 arg beta)} t_{n0 m0}^2] sinh(2 rho)

    independent of the displacement alpha and of the probe amplitude.
    """
    hom, t_element, dk, beating = _homodyne_pieces(s, state, config, occupation)
    sh = math.sinh(state.rho)
    incident = 2.0 * dk * abs(t_element) ** 2 * sh * sh
    interference = cmath.exp(1j * (state.phi - 2.0 * hom.probe_phase)) * t_element**2
    probe = -dk * interference.real * math.sinh(2.0 * state.rho)
    return FanoBreakdown.from_terms(incident, beating, probe)


def fano_homodyne_min(s: ScatteringMatrix, state: SqueezedInput, config: DetectionConfig,
                      occupation: float) -> FanoBreakdown:
    """Homodyne Fano factor minimised over the probe phase.

    The minimum occurs at arg beta = phi/2 + arg t_{n0 m0}, where

        F = 1 - 2 d k |t_{n0 m0}|^2 e^{-rho} sinh rho
              + 2 d k f (1 - r r+ - t t+)_{n0 n0}

    The optimal phase is reported in ``optimal_probe_phase``; the incident and
    probe terms of the breakdown are those of ``fano_homodyne`` evaluated
    there, so their sum is the e^{-rho} sinh(rho) combination above.
    """
    hom, t_element, dk, beating = _homodyne_pieces(s, state, config, occupation)
    sh = math.sinh(state.rho)
    magnitude = abs(t_element) ** 2
    incident = 2.0 * dk * magnitude * sh * sh
    probe = -dk * magnitude * math.sinh(2.0 * state.rho)
    best_phase = 0.5 * state.phi + cmath.phase(t_element)
    return FanoBreakdown.from_terms(incident, beating, probe, optimal_probe_phase=best_phase)
