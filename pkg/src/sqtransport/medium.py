"""Random scattering matrices of quasi-1D absorbing or amplifying waveguides.

A disordered waveguide segment is modelled as an alternation of thin random
scattering slices and uniform loss/gain propagation units, combined with the
Redheffer star product.  All lengths are measured in units of the elementary
slice thickness.  The 2N x 2N scattering matrix is stored through its four
N x N blocks::

        S = [[r', t'],
             [t,  r ]]

with modes 1..N on the left of the medium and modes N+1..2N on the right,
so r' reflects left-to-left, t transmits left-to-right, and the star-product
identity element is the perfectly transparent segment r = r' = 0, t = t' = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    FitFailed,
    GainPositivityViolation,
    NearSingularCavity,
    PhysicalityError,
)

PASSIVE = "passive"
ABSORBING = "absorbing"
AMPLIFYING = "amplifying"

#: tolerance on singular values of passive / absorbing composites
SINGULAR_VALUE_TOL = 1e-10
#: maximum allowed unitarity drift of a freshly sampled slice
UNITARITY_DRIFT_TOL = 1e-12
#: condition-number limit of the cavity factor in a star product
CONDITION_LIMIT = 1e12

_KIND_FROM_SIGN = {1: ABSORBING, -1: AMPLIFYING, 0: PASSIVE}


@dataclass(frozen=True)
class ScatteringMatrix:
    """Immutable 2N x 2N scattering matrix held as four N x N blocks."""

    r_prime: np.ndarray
    t_prime: np.ndarray
    t: np.ndarray
    r: np.ndarray
    medium_kind: str = PASSIVE

    def __post_init__(self):
        blocks = {}
        shape = None
        for name in ("r_prime", "t_prime", "t", "r"):
            block = np.array(getattr(self, name), dtype=complex)
            if block.ndim != 2 or block.shape[0] != block.shape[1]:
                raise ValueError(f"block {name} must be a square matrix")
            if shape is None:
                shape = block.shape
            elif block.shape != shape:
                raise ValueError("all four blocks must have the same shape")
            block.setflags(write=False)
            blocks[name] = block
        if shape[0] < 1:
            raise ValueError("need at least one propagating mode")
        if self.medium_kind not in (PASSIVE, ABSORBING, AMPLIFYING):
            raise ValueError(f"unknown medium kind {self.medium_kind!r}")
        for name, block in blocks.items():
            object.__setattr__(self, name, block)

    @property
    def n_modes(self) -> int:
        return self.r_prime.shape[0]

    @property
    def full(self) -> np.ndarray:
        """The assembled 2N x 2N matrix [[r', t'], [t, r]]."""
        return np.block([[self.r_prime, self.t_prime], [self.t, self.r]])

    @classmethod
    def from_full(cls, matrix: np.ndarray, medium_kind: str = PASSIVE) -> "ScatteringMatrix":
        matrix = np.asarray(matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2:
            raise ValueError("expected a square matrix of even dimension")
        n = matrix.shape[0] // 2
        return cls(
            r_prime=matrix[:n, :n],
            t_prime=matrix[:n, n:],
            t=matrix[n:, :n],
            r=matrix[n:, n:],
            medium_kind=medium_kind,
        )

    @classmethod
    def identity_transmission(cls, n_modes: int, medium_kind: str = PASSIVE) -> "ScatteringMatrix":
        """The star-product identity: full transmission, no reflection."""
        eye = np.eye(n_modes, dtype=complex)
        zero = np.zeros((n_modes, n_modes), dtype=complex)
        return cls(r_prime=zero, t_prime=eye, t=eye, r=zero, medium_kind=medium_kind)

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.full, compute_uv=False)

    def validate(self) -> None:
        """Check the physicality constraints of the medium kind.

        Raises:
            PhysicalityError: passive matrix not unitary, or absorbing matrix
                not a contraction, within ``SINGULAR_VALUE_TOL``.
            GainPositivityViolation: amplifying matrix with an eigenvalue of
                S S+ - 1 below ``-SINGULAR_VALUE_TOL``.
        """
        if self.medium_kind == AMPLIFYING:
            full = self.full
            gain = full @ full.conj().T - np.eye(2 * self.n_modes)
            lowest = np.linalg.eigvalsh(gain)[0]
            if lowest < -SINGULAR_VALUE_TOL:
                raise GainPositivityViolation(
                    f"eigenvalue of S S+ - 1 at {lowest:.3e} below tolerance"
                )
            return
        sigma = self.singular_values()
        if self.medium_kind == PASSIVE:
            drift = np.max(np.abs(sigma - 1.0))
            if drift > SINGULAR_VALUE_TOL:
                raise PhysicalityError(f"passive matrix deviates from unitarity by {drift:.3e}")
        else:
            excess = np.max(sigma) - 1.0
            if excess > SINGULAR_VALUE_TOL:
                raise PhysicalityError(f"absorbing matrix has singular value 1 + {excess:.3e}")


@dataclass(frozen=True)
class MediumSpec:
    """Physical description of a disordered waveguide segment.

    Attributes:
        n_modes: number of propagating modes N per side.
        total_length: segment length in units of the slice thickness.
        scatter_strength: dimensionless slice scattering strength.
        loss_gain_sign: +1 absorbing, -1 amplifying, 0 passive.
        ballistic_decay_length: amplitude decays (grows) by
            exp(-(+)1 / (2 * ballistic_decay_length)) per slice; ignored for
            a passive medium.
        occupation: signed Bose-Einstein occupation of the medium's internal
            modes (negative for an amplifier).
        seed: 64-bit integer fixing the disorder realization.
    """

    n_modes: int
    total_length: float
    scatter_strength: float
    loss_gain_sign: int
    ballistic_decay_length: float | None
    occupation: float
    seed: int

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if self.total_length < 0:
            raise ValueError("total_length must be >= 0")
        if self.scatter_strength <= 0:
            raise ValueError("scatter_strength must be positive")
        if self.loss_gain_sign not in (-1, 0, 1):
            raise ValueError("loss_gain_sign must be -1, 0 or +1")
        if self.loss_gain_sign != 0:
            if self.ballistic_decay_length is None or self.ballistic_decay_length <= 0:
                raise ValueError("ballistic_decay_length must be positive for lossy/gainy media")
        if self.loss_gain_sign == 1 and self.occupation < 0:
            raise ValueError("absorbing medium needs occupation >= 0")
        if self.loss_gain_sign == -1 and not (-1 <= self.occupation < 0):
            raise ValueError("amplifying medium needs occupation in [-1, 0)")

    @property
    def medium_kind(self) -> str:
        return _KIND_FROM_SIGN[self.loss_gain_sign]


def _slice_unitaries(n_modes: int, scatter_strength: float, rng: np.random.Generator,
                     count: int) -> np.ndarray:
    """Sample ``count`` unitaries exp(i * eps * K) with K from the Gaussian ensemble.

    K is Hermitian 2N x 2N with independent complex Gaussian off-diagonal
    entries of variance 1/(2N) and real Gaussian diagonal entries of the same
    variance.  The exponential is taken through the eigendecomposition, so the
    result is unitary to round-off.
    """
    m = 2 * n_modes
    if count == 0:
        return np.empty((0, m, m), dtype=complex)
    # one contiguous draw per slice, so shorter media are stream prefixes
    draws = rng.standard_normal((count, 2, m, m))
    x, y = draws[:, 0], draws[:, 1]
    scale = 0.5 / math.sqrt(2 * n_modes)
    k = np.empty((count, m, m), dtype=complex)
    # (G + G+)/2 has off-diagonal variance 1 and diagonal variance 1 before scaling
    k.real = x + x.transpose(0, 2, 1)
    k.imag = y - y.transpose(0, 2, 1)
    k *= scale
    w, v = np.linalg.eigh(k)
    phases = np.exp(1j * scatter_strength * w)
    np.multiply(v, phases[:, None, :], out=k)
    s = k @ np.conj(v).transpose(0, 2, 1)
    # eigh keeps the batch unitary to round-off; spot-check a few slices and
    # fall back to a full polar cleanup if any drifted
    probes = sorted({0, count // 2, count - 1})
    drift = max(
        np.max(np.abs(s[i] @ s[i].conj().T - np.eye(m))) for i in probes
    )
    if drift > UNITARITY_DRIFT_TOL:
        u, _, vh = np.linalg.svd(s)
        s = u @ vh
    return s


def _transparent_order(unitary: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Read a 2N x 2N unitary as scattering blocks with a transparent weak limit.

    The blocks are assigned so that exp(i * eps * K) -> identity corresponds to
    the identity-transmission matrix: the dominant (diagonal) blocks of the
    unitary become the transmission blocks t and t'.
    """
    n = unitary.shape[0] // 2
    r_prime = unitary[n:, :n]
    t_prime = unitary[n:, n:]
    t = unitary[:n, :n]
    r = unitary[:n, n:]
    return r_prime, t_prime, t, r


def sample_slice(n_modes: int, scatter_strength: float,
                 rng: np.random.Generator) -> ScatteringMatrix:
    """Draw one thin random scattering slice.

    The slice is a random unitary exp(i * eps * K) close to the transparent
    segment, with per-mode reflectance of order eps**2 / 2.

    Args:
        n_modes: number of modes per side.
        scatter_strength: eps > 0; values up to about 0.5 keep the slice weak.
        rng: numpy random generator.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if scatter_strength <= 0:
        raise ValueError("scatter_strength must be positive")
    unitary = _slice_unitaries(n_modes, scatter_strength, rng, 1)[0]
    r_prime, t_prime, t, r = _transparent_order(unitary)
    return ScatteringMatrix(r_prime=r_prime, t_prime=t_prime, t=t, r=r, medium_kind=PASSIVE)


def propagation_unit(n_modes: int, loss_gain_sign: int, decay_length: float | None,
                     rng: np.random.Generator) -> ScatteringMatrix:
    """One slice of free propagation with uniform loss or gain.

    Pure transmission: r = r' = 0 and t = t' = diag(exp(i theta_n) * a) with
    independent uniform phases and amplitude a = exp(-sign / (2 * decay_length)).
    """
    if loss_gain_sign not in (-1, 0, 1):
        raise ValueError("loss_gain_sign must be -1, 0 or +1")
    if loss_gain_sign != 0 and (decay_length is None or decay_length <= 0):
        raise ValueError("decay_length must be positive for lossy/gainy propagation")
    theta = rng.uniform(0.0, 2.0 * np.pi, n_modes)
    amplitude = 1.0 if loss_gain_sign == 0 else math.exp(-loss_gain_sign / (2.0 * decay_length))
    diag = amplitude * np.exp(1j * theta)
    zero = np.zeros((n_modes, n_modes), dtype=complex)
    return ScatteringMatrix(
        r_prime=zero,
        t_prime=np.diag(diag),
        t=np.diag(diag),
        r=zero,
        medium_kind=_KIND_FROM_SIGN[loss_gain_sign],
    )


def _combined_kind(kind_a: str, kind_b: str) -> str:
    if kind_a == kind_b:
        return kind_a
    if kind_a == PASSIVE:
        return kind_b
    if kind_b == PASSIVE:
        return kind_a
    raise ValueError("cannot combine absorbing and amplifying segments")


def star_compose(a: ScatteringMatrix, b: ScatteringMatrix) -> ScatteringMatrix:
    """Redheffer star product of two segments, ``a`` to the left of ``b``.

    The composite blocks are::

        t_AB  = t_B (1 - r_A r'_B)^-1 t_A
        r'_AB = r'_A + t'_A r'_B (1 - r_A r'_B)^-1 t_A
        r_AB  = r_B + t_B r_A (1 - r'_B r_A)^-1 t'_B
        t'_AB = t'_A (1 - r'_B r_A)^-1 t'_B

    computed with linear solves rather than explicit inverses.

    Raises:
        NearSingularCavity: condition number of (1 - r_A r'_B) above
            ``CONDITION_LIMIT`` (an amplifying cavity at or beyond threshold).
    """
    if a.n_modes != b.n_modes:
        raise ValueError("segments must carry the same number of modes")
    n = a.n_modes
    kind = _combined_kind(a.medium_kind, b.medium_kind)

    if not (a.r.any() and b.r_prime.any()):
        # no internal cavity: one of the facing reflections vanishes exactly
        t_ab = b.t @ a.t
        r_prime_ab = a.r_prime + a.t_prime @ b.r_prime @ a.t
        r_ab = b.r + b.t @ a.r @ b.t_prime
        t_prime_ab = a.t_prime @ b.t_prime
        return ScatteringMatrix(r_prime_ab, t_prime_ab, t_ab, r_ab, kind)

    eye = np.eye(n)
    loop = a.r @ b.r_prime
    # sigma_max(loop) <= sqrt(norm1 * norminf); when the bound keeps 1 - loop
    # far from singular the SVD condition check is unnecessary
    abs_loop = np.abs(loop)
    bound = math.sqrt(abs_loop.sum(axis=0).max() * abs_loop.sum(axis=1).max())
    cavity = eye - loop
    if bound > 0.9:
        sigma = np.linalg.svd(cavity, compute_uv=False)
        if sigma[-1] == 0.0 or sigma[0] / sigma[-1] > CONDITION_LIMIT:
            raise NearSingularCavity(
                f"cavity factor condition number exceeds {CONDITION_LIMIT:.0e}"
            )
    cavity_rev = eye - b.r_prime @ a.r

    x = np.linalg.solve(cavity, a.t)
    y = np.linalg.solve(cavity_rev, b.t_prime)
    t_ab = b.t @ x
    r_prime_ab = a.r_prime + a.t_prime @ (b.r_prime @ x)
    r_ab = b.r + b.t @ (a.r @ y)
    t_prime_ab = a.t_prime @ y
    return ScatteringMatrix(r_prime_ab, t_prime_ab, t_ab, r_ab, kind)


def build_medium_checkpoints(spec: MediumSpec, lengths) -> list:
    """Composites of one disorder realization at several lengths, one pass.

    Because the slice and phase streams are deterministic functions of the
    seed, the medium of length L is a prefix of the medium of any longer
    length built from the same spec.  This grows the composite once up to
    max(lengths) and captures (and validates) it at every requested length,
    bit-identical to building each length separately.

    Returns one entry per requested length, in the given order: the validated
    ScatteringMatrix, or the NearSingularCavity / GainPositivityViolation
    instance if that length is unreachable (every longer length then carries
    the same failure).
    """
    lengths = list(lengths)
    if any(length < 0 for length in lengths):
        raise ValueError("lengths must be >= 0")
    if sorted(lengths) != lengths:
        raise ValueError("lengths must be sorted ascending")
    period_targets = [int(math.ceil(length)) for length in lengths]
    n_periods = period_targets[-1] if period_targets else 0

    composite = ScatteringMatrix.identity_transmission(spec.n_modes, spec.medium_kind)
    results: list = [None] * len(lengths)

    slice_seq, phase_seq = np.random.SeedSequence(spec.seed).spawn(2)
    rng_slices = np.random.default_rng(slice_seq)
    rng_phases = np.random.default_rng(phase_seq)
    unitaries = _slice_unitaries(spec.n_modes, spec.scatter_strength, rng_slices, n_periods)
    thetas = rng_phases.uniform(0.0, 2.0 * np.pi, (n_periods, spec.n_modes))
    amplitude = (
        1.0
        if spec.loss_gain_sign == 0
        else math.exp(-spec.loss_gain_sign / (2.0 * spec.ballistic_decay_length))
    )
    zero = np.zeros((spec.n_modes, spec.n_modes), dtype=complex)

    failure = None
    done = 0
    for target in range(n_periods + 1):
        while done < len(lengths) and period_targets[done] == target:
            if failure is not None:
                results[done] = failure
            else:
                try:
                    composite.validate()
                    results[done] = composite
                except GainPositivityViolation as exc:
                    results[done] = exc
            done += 1
        if target == n_periods or failure is not None:
            if done == len(lengths):
                break
            continue
        try:
            r_prime, t_prime, t, r = _transparent_order(unitaries[target])
            slice_matrix = ScatteringMatrix(r_prime, t_prime, t, r, PASSIVE)
            composite = star_compose(composite, slice_matrix)
            diag = np.diag(amplitude * np.exp(1j * thetas[target]))
            unit = ScatteringMatrix(zero, diag, diag, zero, spec.medium_kind)
            composite = star_compose(composite, unit)
        except NearSingularCavity as exc:
            failure = exc
    return results


def build_medium(spec: MediumSpec) -> ScatteringMatrix:
    """Assemble the scattering matrix of a full waveguide segment.

    Alternates random slices and loss/gain propagation units over
    ceil(total_length) periods.  Deterministic for a fixed seed: the slice
    and phase streams are two children of ``SeedSequence(spec.seed)``, so
    shorter segments built from the same seed share their leading slices.

    Raises:
        NearSingularCavity: propagated from ``star_compose`` (an amplifying
            realization at or beyond the laser threshold).
        GainPositivityViolation: amplifying composite failing the positivity
            check of S S+ - 1.
    """
    result = build_medium_checkpoints(spec, [spec.total_length])[0]
    if isinstance(result, Exception):
        raise result
    return result


def derive_sample_seed(master_seed: int, index: int) -> int:
    """Deterministic 64-bit seed for ensemble sample ``index``."""
    seq = np.random.SeedSequence(entropy=(master_seed, index))
    return int(seq.generate_state(1, np.uint64)[0])


def deviation_from_unitarity(s: ScatteringMatrix) -> np.ndarray:
    """Return the Hermitian matrix 1 - S S+ (2N x 2N).

    Positive semidefinite for an absorbing medium, negative semidefinite for
    an amplifying one, zero for a lossless medium.
    """
    full = s.full
    return np.eye(2 * s.n_modes) - full @ full.conj().T


@dataclass(frozen=True)
class CalibrationResult:
    """Ohm's-law fit N / <tr t+ t> = intercept + L / mean_free_path."""

    mean_free_path: float
    stderr: float
    intercept: float
    residual_rel: float
    lengths: tuple
    inverse_transmittance: tuple


def calibrate_mean_free_path(n_modes: int, scatter_strength: float, lengths,
                             samples_per_length: int, seed: int) -> CalibrationResult:
    """Estimate the mean free path of the passive slice model.

    Builds passive media at each requested length, averages tr(t+ t) over
    disorder, and fits N / <tr t+ t> = 1 + L / l by (weighted) least squares.
    Media at different lengths share per-sample seeds, so the fitted curve is
    smooth in L.

    Args:
        lengths: at least three lengths spanning a factor of four or more.
        samples_per_length: disorder realizations per length.
        seed: master seed for the disorder ensemble.

    Raises:
        FitFailed: rms relative residual of the affine fit above 10%
            (scattering too strong for the slice model).
    """
    lengths = sorted(float(v) for v in lengths)
    if len(lengths) < 3:
        raise ValueError("need at least three lengths")
    if lengths[0] <= 0:
        raise ValueError("lengths must be positive")
    if lengths[-1] / lengths[0] < 4:
        raise ValueError("lengths must span at least a factor of four")

    y = np.empty(len(lengths))
    y_var = np.empty(len(lengths))
    for j, length in enumerate(lengths):
        g = np.empty(samples_per_length)
        for k in range(samples_per_length):
            spec = MediumSpec(
                n_modes=n_modes,
                total_length=length,
                scatter_strength=scatter_strength,
                loss_gain_sign=0,
                ballistic_decay_length=None,
                occupation=0.0,
                seed=derive_sample_seed(seed, k),
            )
            t = build_medium(spec).t
            g[k] = np.sum(np.abs(t) ** 2)
        g_mean = g.mean()
        g_var = g.var(ddof=1) / samples_per_length
        y[j] = n_modes / g_mean
        y_var[j] = (n_modes / g_mean**2) ** 2 * g_var

    weights = 1.0 / y_var
    x = np.asarray(lengths)
    design = np.column_stack([np.ones_like(x), x])
    wdesign = design * weights[:, None]
    normal = design.T @ wdesign
    coeffs = np.linalg.solve(normal, wdesign.T @ y)
    covariance = np.linalg.inv(normal)
    intercept, slope = coeffs
    fit = design @ coeffs
    residual_rel = float(np.sqrt(np.mean(((y - fit) / y) ** 2)))
    if residual_rel > 0.10:
        raise FitFailed(f"affine fit residual {residual_rel:.1%} exceeds 10%")
    if slope <= 0:
        raise FitFailed("non-positive Ohm's-law slope")
    mean_free_path = 1.0 / slope
    stderr = math.sqrt(covariance[1, 1]) / slope**2
    return CalibrationResult(
        mean_free_path=float(mean_free_path),
        stderr=float(stderr),
        intercept=float(intercept),
        residual_rel=residual_rel,
        lengths=tuple(lengths),
        inverse_transmittance=tuple(float(v) for v in y),
    )
