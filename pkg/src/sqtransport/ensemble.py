"""Monte Carlo disorder averages of Fano factors.

Sample k of an ensemble uses the seed derived from (master_seed, k), so runs
are reproducible and media at different lengths share their leading slices
(common random numbers across a length sweep).  Averages follow the
separate-averaging convention of the large-N theory: the disorder averages of
numerator and denominator of each Fano-factor term are taken individually
before forming the ratio ("ratio of means"); the plain sample mean of the
per-realization Fano factors ("mean of ratios") is always reported alongside
as a diagnostic.  Standard errors come from leave-one-out jackknife, which
adds no random-number stream of its own.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import AllSamplesAboveThreshold, GainPositivityViolation, NearSingularCavity
from .medium import (
    MediumSpec,
    build_medium_checkpoints,
    derive_sample_seed,
)
from .photostatistics import DetectionConfig, SqueezedInput, fano_in_squeezed

RATIO_OF_MEANS = "ratio_of_means"
MEAN_OF_RATIOS = "mean_of_ratios"

MIN_PHASE = "min"
FIXED_PHASE = "fixed"


@dataclass(frozen=True)
class SampleStatistics:
    """Disorder-dependent scalars of one realization, enough for any Fano assembly.

    Attributes:
        transmittance: [t+ t]_{m0 m0}, or tr(t+ t)/N when mode-averaged.
        beating: [t+ (1 - r r+ - t t+) t]_{m0 m0}, or its trace/N.
        probe_transmittance: |t_{n0 m0}|^2, or tr(t t+)/N^2 when mode-averaged.
        probe_noise: (1 - r r+ - t t+)_{n0 n0}.
        probe_amplitude: the complex element t_{n0 m0}.
    """

    transmittance: float
    beating: float
    probe_transmittance: float
    probe_noise: float
    probe_amplitude: complex


@dataclass(frozen=True)
class EnsembleResult:
    """Disorder-averaged Fano factor with jackknife error.

    ``mean_fano``/``stderr`` follow ``averaging_mode``; the mean-of-ratios
    diagnostic is carried alongside.  ``n_samples`` counts the realizations
    that entered the average; above-threshold amplifying realizations are
    skipped and counted in ``n_skipped_above_threshold``.
    """

    mean_fano: float
    stderr: float
    n_samples: int
    n_skipped_above_threshold: int
    averaging_mode: str
    mean_of_ratios: float
    mean_of_ratios_stderr: float
    per_sample: tuple | None = None


@dataclass(frozen=True)
class SweepPoint:
    s: float
    result: EnsembleResult | None
    error: str | None = None


def spec_for_ratios(n_modes: int, s: float, l_over_xi: float, mean_free_path: float,
                    loss_gain_sign: int, occupation: float, scatter_strength: float,
                    seed: int) -> MediumSpec:
    """Medium spec realizing the dimensionless ratios (s, l/xi_a).

    Uses the calibrated mean free path: xi_a = l / (l/xi_a), total length
    L = s xi_a, and ballistic decay length 3 xi_a^2 / l (the diffusive
    relation between the absorption length and the decay rate).
    """
    xi = mean_free_path / l_over_xi
    return MediumSpec(
        n_modes=n_modes,
        total_length=s * xi,
        scatter_strength=scatter_strength,
        loss_gain_sign=loss_gain_sign,
        ballistic_decay_length=3.0 * xi**2 / mean_free_path,
        occupation=occupation,
        seed=seed,
    )


def _measure(matrix, incident_mode: int, probe_mode: int, mode_average: bool) -> SampleStatistics:
    t = matrix.t
    n = matrix.n_modes
    x_bb = np.eye(n) - matrix.r @ matrix.r.conj().T - t @ t.conj().T
    if mode_average:
        transmittance = float(np.sum(np.abs(t) ** 2)) / n
        beating = float(np.trace(t.conj().T @ x_bb @ t).real) / n
        probe_transmittance = float(np.sum(np.abs(t) ** 2)) / n**2
    else:
        column = t[:, incident_mode]
        transmittance = float(np.sum(np.abs(column) ** 2))
        beating = float((column.conj() @ x_bb @ column).real)
        probe_transmittance = float(abs(t[probe_mode, incident_mode]) ** 2)
    return SampleStatistics(
        transmittance=transmittance,
        beating=beating,
        probe_transmittance=probe_transmittance,
        probe_noise=float(x_bb[probe_mode, probe_mode].real),
        probe_amplitude=complex(t[probe_mode, incident_mode]),
    )


def _simulate_sample(args):
    """One realization at several lengths; module-level for multiprocessing."""
    spec, lengths, incident_mode, probe_mode, mode_average = args
    matrices = build_medium_checkpoints(spec, lengths)
    out = []
    for matrix in matrices:
        if isinstance(matrix, (NearSingularCavity, GainPositivityViolation)):
            out.append(None)
        else:
            out.append(_measure(matrix, incident_mode, probe_mode, mode_average))
    return out


def collect_statistics(base_spec: MediumSpec, lengths, n_samples: int, master_seed: int,
                       incident_mode: int = 0, probe_mode: int = 0,
                       mode_average: bool = True,
                       workers: int = 1) -> list[list[SampleStatistics | None]]:
    """Per-sample statistics at each length; entry None marks a skipped realization.

    Results are ordered [length][sample] and independent of worker scheduling.
    """
    tasks = []
    for k in range(n_samples):
        spec = dataclasses.replace(base_spec, seed=derive_sample_seed(master_seed, k),
                                   total_length=max(lengths))
        tasks.append((spec, list(lengths), incident_mode, probe_mode, mode_average))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_simulate_sample, tasks, chunksize=4))
    else:
        rows = [_simulate_sample(task) for task in tasks]
    return [[rows[k][j] for k in range(n_samples)] for j in range(len(lengths))]


def _jackknife(samples: np.ndarray, assemble) -> tuple[float, float]:
    """Jackknife mean/stderr of assemble(column means) over sample rows."""
    n = samples.shape[0]
    sums = samples.sum(axis=0)
    full = assemble(sums / n)
    if n < 2:
        return full, 0.0
    leave_out = np.array([assemble((sums - samples[i]) / (n - 1)) for i in range(n)])
    center = leave_out.mean()
    variance = (n - 1) / n * np.sum((leave_out - center) ** 2)
    return full, math.sqrt(variance)


def assemble_direct_fano(stats: list[SampleStatistics], fano_in: float, efficiency: float,
                         occupation: float, averaging_mode: str = RATIO_OF_MEANS
                         ) -> tuple[float, float]:
    """Disorder-averaged direct-detection Fano factor from per-sample statistics."""
    d = efficiency
    columns = np.array([[s.transmittance, s.beating] for s in stats])

    if averaging_mode == RATIO_OF_MEANS:
        def assemble(means):
            t_mean, b_mean = means
            return 1.0 + d * t_mean * (fano_in - 1.0) + 2.0 * d * occupation * b_mean / t_mean

        return _jackknife(columns, assemble)
    if averaging_mode == MEAN_OF_RATIOS:
        per_sample = (
            1.0
            + d * columns[:, 0] * (fano_in - 1.0)
            + 2.0 * d * occupation * columns[:, 1] / columns[:, 0]
        )
        return _jackknife(per_sample[:, None], lambda means: float(means[0]))
    raise ValueError(f"unknown averaging mode {averaging_mode!r}")


def assemble_homodyne_fano(stats: list[SampleStatistics], rho: float, phi: float,
                           efficiency: float, coupling: float, occupation: float,
                           probe_phase: float | None = None,
                           averaging_mode: str = RATIO_OF_MEANS,
                           relative_offset: float = 0.0) -> tuple[float, float]:
    """Disorder-averaged homodyne Fano factor from per-sample statistics.

    ``probe_phase=None`` re-adjusts the probe phase per realization so each
    sample sits at its own minimum, optionally detuned from it by
    ``relative_offset``; a number holds the phase fixed across the ensemble,
    in which case the phase-sensitive term is averaged directly (and averages
    toward zero through the random phase of t_{n0 m0}).
    """
    dk = efficiency * coupling
    sh = math.sinh(rho)
    rows = []
    for s in stats:
        if probe_phase is None:
            phase_term = (-dk * s.probe_transmittance * math.cos(2.0 * relative_offset)
                          * math.sinh(2.0 * rho))
        else:
            rotated = np.exp(1j * (phi - 2.0 * probe_phase)) * s.probe_amplitude**2
            phase_term = -dk * rotated.real * math.sinh(2.0 * rho)
        incident = 2.0 * dk * s.probe_transmittance * sh * sh
        thermal = 2.0 * dk * occupation * s.probe_noise
        rows.append([incident, thermal, phase_term])
    columns = np.array(rows)

    if averaging_mode == RATIO_OF_MEANS:
        return _jackknife(columns, lambda means: 1.0 + float(means.sum()))
    if averaging_mode == MEAN_OF_RATIOS:
        per_sample = 1.0 + columns.sum(axis=1)
        return _jackknife(per_sample[:, None], lambda means: float(means[0]))
    raise ValueError(f"unknown averaging mode {averaging_mode!r}")


def run_ensemble(medium: MediumSpec, state: SqueezedInput, config: DetectionConfig,
                 n_samples: int, master_seed: int, *, incident_fano: float | None = None,
                 mode_average: bool = True, probe_phase_policy=MIN_PHASE,
                 averaging_mode: str = RATIO_OF_MEANS, workers: int = 1,
                 keep_samples: bool = False) -> EnsembleResult:
    """Monte Carlo average of the requested Fano factor over disorder.

    Direct detection is used unless ``config.homodyne`` is present.  The
    incident state enters the direct-detection average only through its Fano
    factor, which may be overridden by ``incident_fano`` (the average holds
    for any incident state, also non-Gaussian ones with F_in unreachable by a
    squeezed state).   ``probe_phase_policy`` is "min" (per-sample optimal
    phase), "fixed" (the phase of ``config.homodyne``), or a number.

    Raises:
        AllSamplesAboveThreshold: no realization was below the laser threshold.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    probe_mode = config.homodyne.probe_mode if config.homodyne is not None else 0
    per_length = collect_statistics(
        medium, [medium.total_length], n_samples, master_seed,
        incident_mode=state.incident_mode, probe_mode=probe_mode,
        mode_average=mode_average, workers=workers,
    )
    return result_from_statistics(
        per_length[0], state, config, medium.occupation,
        incident_fano=incident_fano, probe_phase_policy=probe_phase_policy,
        averaging_mode=averaging_mode, keep_samples=keep_samples,
    )


def result_from_statistics(stats_with_gaps, state: SqueezedInput, config: DetectionConfig,
                           occupation: float, *, incident_fano: float | None = None,
                           probe_phase_policy=MIN_PHASE,
                           averaging_mode: str = RATIO_OF_MEANS,
                           keep_samples: bool = False) -> EnsembleResult:
    """Assemble an EnsembleResult from already-collected per-sample statistics."""
    stats = [s for s in stats_with_gaps if s is not None]
    n_skipped = len(stats_with_gaps) - len(stats)
    if not stats:
        raise AllSamplesAboveThreshold("every realization was at or beyond threshold")

    if config.homodyne is None:
        fano_in = fano_in_squeezed(state) if incident_fano is None else incident_fano

        def run(mode):
            return assemble_direct_fano(stats, fano_in, config.efficiency, occupation, mode)
    else:
        if probe_phase_policy == MIN_PHASE:
            phase = None
        elif probe_phase_policy == FIXED_PHASE:
            phase = config.homodyne.probe_phase
        else:
            phase = float(probe_phase_policy)

        def run(mode):
            return assemble_homodyne_fano(
                stats, state.rho, state.phi, config.efficiency,
                config.homodyne.coupling, occupation, phase, mode,
            )

    primary = run(averaging_mode)
    diagnostic = primary if averaging_mode == MEAN_OF_RATIOS else run(MEAN_OF_RATIOS)
    return EnsembleResult(
        mean_fano=primary[0],
        stderr=primary[1],
        n_samples=len(stats),
        n_skipped_above_threshold=n_skipped,
        averaging_mode=averaging_mode,
        mean_of_ratios=diagnostic[0],
        mean_of_ratios_stderr=diagnostic[1],
        per_sample=tuple(stats) if keep_samples else None,
    )


def sweep_lengths(base_spec: MediumSpec, s_values, state: SqueezedInput,
                  config: DetectionConfig, n_samples: int, master_seed: int,
                  mean_free_path: float, **kwargs) -> list[SweepPoint]:
    """Ensemble averages over a grid of dimensionless lengths s = L / xi_a.

    ``base_spec`` fixes everything but the length; xi_a is recovered from its
    ballistic decay length through xi_a = sqrt(l * l_decay / 3).  All points
    share per-sample seeds (and hence their leading slices), so the curve is
    smooth in s; realizations above threshold are skipped per point, and a
    fully skipped point is recorded as an error rather than raised.
    """
    s_values = list(s_values)
    if sorted(s_values) != s_values:
        raise ValueError("s_values must be sorted ascending")
    if base_spec.ballistic_decay_length is None:
        raise ValueError("sweeping in s needs a lossy or amplifying base spec")
    xi = math.sqrt(mean_free_path * base_spec.ballistic_decay_length / 3.0)
    lengths = [s * xi for s in s_values]

    probe_mode = config.homodyne.probe_mode if config.homodyne is not None else 0
    per_length = collect_statistics(
        base_spec, lengths, n_samples, master_seed,
        incident_mode=state.incident_mode, probe_mode=probe_mode,
        mode_average=kwargs.pop("mode_average", True),
        workers=kwargs.pop("workers", 1),
    )
    points = []
    for s, stats in zip(s_values, per_length):
        try:
            result = result_from_statistics(stats, state, config, base_spec.occupation, **kwargs)
            points.append(SweepPoint(s=s, result=result))
        except AllSamplesAboveThreshold as exc:
            points.append(SweepPoint(s=s, result=None, error=str(exc)))
    return points
