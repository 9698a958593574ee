"""Brute-force photon-number statistics in a truncated Fock basis.

Single-channel verification engine: a squeezed or coherent state is sent
through a beam-splitter loss channel (thermal environment) or a two-mode
squeezer gain channel (inverted-population environment), and the exact output
photon-number distribution is computed by applying the two-mode unitaries
through their Fock-basis matrix elements.  Thermal environments are handled
as mixtures over environment occupation numbers, so every branch stays a pure
state.  This module is deliberately independent of the scattering-matrix
machinery: it shares no code with it beyond elementary arithmetic.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import TruncationLeak

#: environment occupation branches are included up to this probability weight
ENV_WEIGHT_CUTOFF = 1e-12
#: maximum tolerated probability lost to truncation
LEAK_TOL = 1e-8


@dataclass(frozen=True)
class FockState:
    """Single-mode pure state as amplitudes over occupations 0..n_max."""

    amplitudes: np.ndarray
    n_max: int

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex)
        if amplitudes.ndim != 1 or amplitudes.size != self.n_max + 1:
            raise ValueError("amplitudes must be a vector of length n_max + 1")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    def photon_distribution(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def mean_photon_number(self) -> float:
        p = self.photon_distribution()
        return float(np.arange(p.size) @ p)


@dataclass(frozen=True)
class ChannelStatistics:
    """Exact output photon-number distribution and its first two factorial cumulants."""

    distribution: np.ndarray
    kappa1: float
    kappa2: float
    fano: float


def _statistics_from_distribution(p: np.ndarray) -> ChannelStatistics:
    total = float(p.sum())
    if 1.0 - total > LEAK_TOL:
        raise TruncationLeak(f"output distribution lost {1.0 - total:.3e} probability")
    n = np.arange(p.size)
    kappa1 = float(n @ p)
    kappa2 = float((n * (n - 1)) @ p) - kappa1**2
    fano = 1.0 + kappa2 / kappa1 if kappa1 > 0 else float("nan")
    return ChannelStatistics(distribution=p, kappa1=kappa1, kappa2=kappa2, fano=fano)


def squeezed_coherent_fock(alpha: complex, rho: float, phi: float, n_max: int) -> FockState:
    """Fock amplitudes of the displaced squeezed vacuum.

    The state is the eigenstate of a cosh(rho) + a+ e^{i phi} sinh(rho) with
    eigenvalue gamma = alpha cosh(rho) + alpha* e^{i phi} sinh(rho); its
    amplitudes satisfy

        cosh(rho) sqrt(n+1) c_{n+1} = gamma c_n - e^{i phi} sinh(rho) sqrt(n) c_{n-1}

    seeded by the exact vacuum overlap, then renormalized.

    Raises:
        ValueError: n_max below 4 (|alpha|^2 + sinh^2 rho) + 40.
        TruncationLeak: more than ``LEAK_TOL`` of the norm lies above n_max.
    """
    if rho < 0:
        raise ValueError("rho must be >= 0")
    mean = abs(alpha) ** 2 + math.sinh(rho) ** 2
    if n_max < 4 * mean + 40:
        raise ValueError(f"n_max={n_max} below the truncation rule 4*{mean:.2f}+40")

    ch = math.cosh(rho)
    sh = math.sinh(rho)
    phase = cmath.exp(1j * phi)
    gamma = alpha * ch + np.conj(alpha) * phase * sh
    c = np.zeros(n_max + 1, dtype=complex)
    c[0] = math.sqrt(1.0 / ch) * cmath.exp(
        -0.5 * abs(alpha) ** 2 - 0.5 * np.conj(alpha) ** 2 * phase * math.tanh(rho)
    )
    if n_max >= 1:
        c[1] = gamma * c[0] / ch
    for n in range(1, n_max):
        c[n + 1] = (gamma * c[n] - phase * sh * math.sqrt(n) * c[n - 1]) / (
            ch * math.sqrt(n + 1)
        )
    norm_sq = float(np.sum(np.abs(c) ** 2))
    if 1.0 - norm_sq > LEAK_TOL:
        raise TruncationLeak(f"state lost {1.0 - norm_sq:.3e} of its norm at n_max={n_max}")
    return FockState(amplitudes=c / math.sqrt(norm_sq), n_max=n_max)


def _thermal_weights(occupation: float) -> np.ndarray:
    """Bose-Einstein occupation-number weights, cut at ``ENV_WEIGHT_CUTOFF``."""
    if occupation < 0:
        raise ValueError("thermal occupation must be >= 0")
    if occupation == 0:
        return np.array([1.0])
    ratio = occupation / (1.0 + occupation)
    k_max = max(1, int(math.ceil(math.log(ENV_WEIGHT_CUTOFF) / math.log(ratio))))
    k = np.arange(k_max + 1)
    return ratio**k / (1.0 + occupation)


def _beamsplitter_blocks(t_amp: complex, n_total: int) -> list[np.ndarray]:
    """Matrix elements <m1, N-m1| U |n1, N-n1> of the two-mode mixer.

    U satisfies U+ a U = t a + r b with r = sqrt(1 - |t|^2).  One unitary
    block per conserved total photon number N, built by the stable raising
    recursion from the vacuum block.
    """
    r_amp = math.sqrt(max(0.0, 1.0 - abs(t_amp) ** 2))
    blocks = [np.ones((1, 1), dtype=complex)]
    for total in range(1, n_total + 1):
        prev = blocks[total - 1]
        block = np.zeros((total + 1, total + 1), dtype=complex)
        m_root = np.sqrt(np.arange(1, total + 1))
        for n1 in range(total + 1):
            n2 = total - n1
            column = np.zeros(total, dtype=complex)
            if n1 >= 1:
                column += t_amp * math.sqrt(n1) * prev[:, n1 - 1]
            if n2 >= 1:
                column += r_amp * math.sqrt(n2) * prev[:, n1]
            block[1:, n1] = column / m_root
            # the m1 = 0 row follows from the conjugate relation for mode b
            low = 0.0
            if n1 >= 1:
                low += -np.conj(r_amp) * math.sqrt(n1) * prev[0, n1 - 1]
            if n2 >= 1:
                low += np.conj(t_amp) * math.sqrt(n2) * prev[0, n1]
            block[0, n1] = low / math.sqrt(total)
        blocks.append(block)
    return blocks


def lossy_channel_photostats(state: FockState, transmission_amplitude: complex,
                             env_occupation: float, n_max: int | None = None) -> ChannelStatistics:
    """Send the state through a beam splitter coupled to a thermal environment.

    The environment mode (occupation ``env_occupation``) is mixed over its
    occupation numbers up to the ``ENV_WEIGHT_CUTOFF`` weight; within each
    branch the two-mode joint output amplitudes are formed explicitly and the
    environment is traced out.

    Returns the exact output distribution, its factorial cumulants and Fano
    factor.
    """
    if abs(transmission_amplitude) > 1 + 1e-12:
        raise ValueError("loss channel needs |t| <= 1")
    if n_max is None:
        n_max = state.n_max
    weights = _thermal_weights(env_occupation)
    k_max = weights.size - 1
    n_total = n_max + k_max
    blocks = _beamsplitter_blocks(transmission_amplitude, n_total)

    c = state.amplitudes[: n_max + 1]
    p_out = np.zeros(n_total + 1)
    for k, weight in enumerate(weights):
        # joint output of branch |psi> x |k>; each output cell (m1, m2)
        # receives exactly one input amplitude, the one with n1 = m1 + m2 - k
        joint = np.zeros((n_total + 1, n_total + 1))
        for n1 in range(n_max + 1):
            if c[n1] == 0:
                continue
            total = n1 + k
            column = blocks[total][:, n1]
            amp_sq = abs(c[n1]) ** 2 * np.abs(column) ** 2
            joint[: total + 1, total] = amp_sq  # (m1, m2 = total - m1) flattened on m1
        p_out += weight * joint.sum(axis=1)
    return _statistics_from_distribution(p_out)


def _amplifier_kernel(gain: float, n_sig: int, idler_in: int, m2_max: int,
                      previous: np.ndarray | None) -> np.ndarray:
    """Amplitudes B[n + m2 - j, m2; n, j] of the two-mode squeezer, vectorized in m2.

    ``previous`` is the (n_sig+1, m2_max+1) layer at idler occupation j-1;
    pass None for j = 0 (built directly from the squeezed-vacuum column).
    """
    h = math.sqrt(gain**2 - 1.0)
    m2 = np.arange(m2_max + 1)
    layer = np.zeros((n_sig + 1, m2_max + 1))
    if previous is None:
        layer[0] = (h / gain) ** m2 / gain
        for n in range(1, n_sig + 1):
            layer[n] = layer[n - 1] * np.sqrt(m2 + n) / (gain * math.sqrt(n))
        return layer
    j = idler_in
    root_m2 = np.sqrt(m2)
    shifted = np.zeros(m2_max + 1)
    shifted[1:] = previous[0, :-1]
    layer[0] = root_m2 * shifted / (gain * math.sqrt(j))
    for n in range(1, n_sig + 1):
        shifted[1:] = previous[n, :-1]
        shifted[0] = 0.0
        layer[n] = (root_m2 * shifted - h * math.sqrt(n) * previous[n - 1]) / (
            gain * math.sqrt(j)
        )
    return layer


def amplifying_channel_photostats(state: FockState, gain_amplitude: complex,
                                  n_max: int | None = None,
                                  idler_occupation: float = 0.0) -> ChannelStatistics:
    """Send the state through a phase-insensitive amplifier.

    The two-mode squeezer realizes a_out = g a_in + sqrt(|g|^2 - 1) c+ with
    the idler mode in vacuum (complete population inversion, occupation -1 in
    the signed convention).  A thermal ``idler_occupation`` n_id > 0 emulates
    a partially inverted medium with signed occupation -(1 + n_id), again as a
    mixture over idler Fock states.

    The output truncation is enlarged by the gain factor |g|^2 relative to the
    input truncation.
    """
    gain = abs(gain_amplitude)
    if gain < 1:
        raise ValueError("amplifying channel needs |g| >= 1")
    if n_max is None:
        n_max = state.n_max
    weights = _thermal_weights(idler_occupation)
    j_max = weights.size - 1

    c = state.amplitudes[: n_max + 1]
    occupied = np.nonzero(np.abs(c) ** 2 > 1e-30)[0]
    n_sig = int(occupied[-1]) if occupied.size else 0
    m2_max = int(math.ceil((gain**2 - 1.0) * (n_sig + j_max + 1) * 3)) + 60
    m_out_max = n_sig + m2_max

    p_out = np.zeros(m_out_max + 1)
    layer = None
    for j, weight in enumerate(weights):
        layer = _amplifier_kernel(gain, n_sig, j, m2_max, layer if j else None)
        for n in occupied:
            if n > n_sig:
                continue
            # output cells (m1 = n + m2 - j, m2); drop the few with m1 < 0
            prob = abs(c[n]) ** 2 * layer[n] ** 2
            start = max(0, j - n)
            m1 = n + np.arange(start, m2_max + 1) - j
            p_out[m1] += weight * prob[start:]
    return _statistics_from_distribution(p_out)
