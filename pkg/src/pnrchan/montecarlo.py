"""Monte Carlo shot generation and empirical estimation.

Shot generation mirrors the experimental acquisitions: equal numbers of
pulses per symbol, one integer count pair per pulse.  Reproducibility rests
on numpy's counter-based Philox generator with substreams keyed by
(seed, symbol, chunk index), so regeneration is deterministic regardless of
chunking or scheduling.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .channel import ChannelParams, detection_rates
from .errors import CalibrationError, ValidationError
from .information import mutual_information

__all__ = [
    "ShotRecord",
    "ExperimentRun",
    "EmpiricalDistributions",
    "PluginEstimate",
    "PluginMiReport",
    "CalibrationResult",
    "sample_shot",
    "run_experiment",
    "empirical_distributions",
    "plugin_mi",
    "calibrate_params",
    "calibrate_from_means",
]

_LN2 = math.log(2.0)
_CHUNK = 1 << 16


class ShotRecord(NamedTuple):
    """One detected pulse: encoded symbol and the two arm counts."""

    symbol: int
    n: int
    m: int


@dataclass(frozen=True)
class ExperimentRun:
    """A column-wise batch of shot records, optionally with provenance."""

    symbols: np.ndarray
    n: np.ndarray
    m: np.ndarray
    params: Optional[ChannelParams] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if not (len(self.symbols) == len(self.n) == len(self.m)):
            raise ValidationError("symbol and count columns must have equal length")
        if len(self.symbols) == 0:
            raise ValidationError("a run must contain at least one shot")
        if np.any((self.symbols != 0) & (self.symbols != 1)):
            raise ValidationError("symbols must be 0 or 1")
        if np.any(self.n < 0) or np.any(self.m < 0):
            raise ValidationError("counts must be nonnegative")

    def __len__(self):
        return len(self.symbols)

    def shots_for(self, symbol):
        mask = self.symbols == symbol
        return self.n[mask], self.m[mask]


def sample_shot(params: ChannelParams, symbol: int, rng: np.random.Generator) -> ShotRecord:
    """Draw one count pair: independent Poissons on the two arms."""
    r = detection_rates(params, symbol)
    return ShotRecord(symbol=symbol, n=int(rng.poisson(r.mu_t)),
                      m=int(rng.poisson(r.mu_r)))


def _symbol_counts(params, symbol, shots, seed):
    r = detection_rates(params, symbol)
    n_parts, m_parts = [], []
    for chunk_index in range(0, shots, _CHUNK):
        size = min(_CHUNK, shots - chunk_index)
        ss = np.random.SeedSequence((seed, symbol, chunk_index // _CHUNK))
        gen = np.random.Generator(np.random.Philox(ss))
        n_parts.append(gen.poisson(r.mu_t, size))
        m_parts.append(gen.poisson(r.mu_r, size))
    return np.concatenate(n_parts), np.concatenate(m_parts)


def run_experiment(params: ChannelParams, shots_per_symbol: int, seed: int) -> ExperimentRun:
    """Generate a balanced run: ``shots_per_symbol`` pulses for each symbol.

    Deterministic for fixed (params, shots_per_symbol, seed); the record
    order is all symbol-0 shots followed by all symbol-1 shots.
    """
    if shots_per_symbol < 1:
        raise ValidationError("shots_per_symbol must be >= 1")
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValidationError("seed must be a nonnegative integer")
    n0, m0 = _symbol_counts(params, 0, shots_per_symbol, int(seed))
    n1, m1 = _symbol_counts(params, 1, shots_per_symbol, int(seed))
    symbols = np.concatenate(
        [np.zeros(shots_per_symbol, dtype=np.uint8), np.ones(shots_per_symbol, dtype=np.uint8)]
    )
    return ExperimentRun(
        symbols=symbols,
        n=np.concatenate([n0, n1]).astype(np.int64),
        m=np.concatenate([m0, m1]).astype(np.int64),
        params=params,
        seed=int(seed),
    )


@dataclass(frozen=True)
class EmpiricalDistributions:
    """Relative-frequency estimates of the three readout laws.

    ``wf[k]`` is the count-pair law on a common (n_max+1, m_max+1) grid,
    ``hl[k]`` the difference law on ``deltas``, ``bds[k]`` the binary sign
    law.  ``shots`` holds the per-symbol shot counts.
    """

    wf: np.ndarray
    hl: np.ndarray
    deltas: np.ndarray
    bds: np.ndarray
    shots: tuple


def empirical_distributions(run: ExperimentRun, tie_break="half",
                            rng=None) -> EmpiricalDistributions:
    """Histogram a run into the three conditional outcome laws.

    The sign readout resolves difference zero either as an even half-count
    split (``tie_break='half'``, matching the analytic convention) or by an
    actual coin flip (``tie_break='coin'``, requires ``rng``).
    """
    if tie_break not in ("half", "coin"):
        raise ValidationError(f"tie_break must be 'half' or 'coin', got {tie_break!r}")
    if tie_break == "coin" and rng is None:
        raise ValidationError("tie_break='coin' needs an rng")
    shots = []
    per_symbol = []
    for k in (0, 1):
        n, m = run.shots_for(k)
        if len(n) == 0:
            raise ValidationError(f"run contains no shots for symbol {k}")
        shots.append(len(n))
        per_symbol.append((n, m))
    n_max = int(max(ns.max() for ns, _ in per_symbol))
    m_max = int(max(ms.max() for _, ms in per_symbol))
    wf = np.zeros((2, n_max + 1, m_max + 1))
    hl = np.zeros((2, n_max + m_max + 1))
    bds = np.zeros((2, 2))
    for k in (0, 1):
        n, m = per_symbol[k]
        total = float(len(n))
        flat = np.bincount(n * (m_max + 1) + m, minlength=(n_max + 1) * (m_max + 1))
        wf[k] = flat.reshape(n_max + 1, m_max + 1) / total
        delta = n - m
        hl[k] = np.bincount(delta + m_max, minlength=n_max + m_max + 1) / total
        negative = float((delta < 0).sum())
        zeros = float((delta == 0).sum())
        if tie_break == "half":
            j0 = negative + 0.5 * zeros
        else:
            j0 = negative + float(rng.integers(0, 2, size=int(zeros)).sum())
        bds[k] = (j0 / total, 1.0 - j0 / total)
    deltas = np.arange(-m_max, n_max + 1)
    return EmpiricalDistributions(wf=wf, hl=hl, deltas=deltas, bds=bds,
                                  shots=tuple(shots))


@dataclass(frozen=True)
class PluginEstimate:
    """Plug-in MI with its Miller-Madow bias estimate (reported, not applied)."""

    value: float
    miller_madow_bias: float


@dataclass(frozen=True)
class PluginMiReport:
    wf: PluginEstimate
    hl: PluginEstimate
    bds: PluginEstimate
    priors: tuple


def _miller_madow(mixture, total_shots):
    support = int(np.count_nonzero(mixture))
    return max(support - 1, 0) / (2.0 * total_shots * _LN2)


def plugin_mi(emp: EmpiricalDistributions, priors=None) -> PluginMiReport:
    """Plug-in MI of all three readouts from empirical conditionals.

    The Miller-Madow first-order bias (K - 1) / (2 N ln 2), with K the
    observed support of the outcome mixture, is attached as metadata for each
    strategy; the reported values stay uncorrected.
    """
    if priors is None:
        total = sum(emp.shots)
        priors = (emp.shots[0] / total, emp.shots[1] / total)
    total = sum(emp.shots)
    out = {}
    for name, conds in (("wf", (emp.wf[0].ravel(), emp.wf[1].ravel())),
                        ("hl", (emp.hl[0], emp.hl[1])),
                        ("bds", (emp.bds[0], emp.bds[1]))):
        mixture = priors[0] * conds[0] + priors[1] * conds[1]
        out[name] = PluginEstimate(
            value=mutual_information(conds, priors),
            miller_madow_bias=_miller_madow(mixture, total),
        )
    return PluginMiReport(wf=out["wf"], hl=out["hl"], bds=out["bds"],
                          priors=tuple(priors))


@dataclass(frozen=True)
class CalibrationResult:
    """Channel parameters inferred from per-symbol arm means.

    ``params`` carries the receiver-equivalent parameterization (unit
    transmissivity, amplitude set by the signal mean at the receiver).
    ``xi_raw`` is the unclamped visibility estimate; ``clamped`` flags a raw
    value above 1.  ``xi_stderr`` is a first-order propagation of Poisson
    counting noise (None when shot counts are unknown).
    """

    params: ChannelParams
    signal_mean: float
    lo_mean: float
    xi: float
    xi_raw: float
    xi_stderr: Optional[float]
    clamped: bool
    total_mean: float
    cross_mean: float


def calibrate_from_means(means_symbol0, means_symbol1, known_lo_mean=None,
                         known_signal_mean=None, shots_per_symbol=None) -> CalibrationResult:
    """Solve the rate equations given per-symbol arm means.

    The two observable means per symbol determine only the total rate
    S = T*alpha^2 + z^2 and the cross term xi*sqrt(T*alpha^2*z^2), so exactly
    one of ``known_lo_mean`` (z^2) or ``known_signal_mean`` (T*alpha^2) must
    be supplied to separate the remaining unknowns.
    """
    if (known_lo_mean is None) == (known_signal_mean is None):
        raise ValidationError(
            "exactly one of known_lo_mean or known_signal_mean is required"
        )
    t0, r0 = means_symbol0
    t1, r1 = means_symbol1
    if min(t0, r0, t1, r1) < 0.0:
        raise ValidationError("arm means must be >= 0")
    total = 0.5 * (t0 + r0 + t1 + r1)
    cross = 0.25 * (abs(t1 - r1) + abs(t0 - r0))
    if known_lo_mean is not None:
        lo_mean = float(known_lo_mean)
        signal_mean = total - lo_mean
        known_label = "lo_mean"
    else:
        signal_mean = float(known_signal_mean)
        lo_mean = total - signal_mean
        known_label = "signal_mean"
    unknown = signal_mean if known_label == "lo_mean" else lo_mean
    if unknown < 0.0:
        raise CalibrationError(
            f"inconsistent system: total rate {total:.6g} is below the known "
            f"{known_label}, leaving a negative {('signal' if known_label == 'lo_mean' else 'LO')} "
            f"mean {unknown:.6g}"
        )
    denom_sq = signal_mean * lo_mean
    if denom_sq <= 0.0:
        if cross > 1e-9 * max(total, 1.0):
            raise CalibrationError(
                f"inconsistent system: cross term {cross:.6g} with a dark arm "
                f"(signal_mean={signal_mean:.6g}, lo_mean={lo_mean:.6g})"
            )
        xi_raw = 0.0
    else:
        xi_raw = cross / math.sqrt(denom_sq)
    clamped = xi_raw > 1.0
    xi = min(xi_raw, 1.0)
    stderr = None
    if shots_per_symbol:
        var_total = total / (2.0 * shots_per_symbol)
        var_cross = total / (8.0 * shots_per_symbol)
        if denom_sq > 0.0:
            var_xi = var_cross / denom_sq + (xi * xi / (4.0 * unknown * unknown)) * var_total
            stderr = math.sqrt(var_xi)
    params = ChannelParams(
        alpha=math.sqrt(max(signal_mean, 0.0)),
        transmissivity=1.0,
        lo_amplitude=math.sqrt(max(lo_mean, 0.0)),
        visibility=xi,
    )
    return CalibrationResult(
        params=params, signal_mean=signal_mean, lo_mean=lo_mean, xi=xi,
        xi_raw=xi_raw, xi_stderr=stderr, clamped=clamped,
        total_mean=total, cross_mean=cross,
    )


def calibrate_params(run: ExperimentRun, known_lo_mean=None,
                     known_signal_mean=None) -> CalibrationResult:
    """Infer channel parameters from a run's per-symbol arm means."""
    means = []
    shots = None
    for k in (0, 1):
        n, m = run.shots_for(k)
        if len(n) == 0:
            raise ValidationError(f"run contains no shots for symbol {k}")
        means.append((float(n.mean()), float(m.mean())))
        shots = len(n) if shots is None else min(shots, len(n))
    return calibrate_from_means(
        means[0], means[1],
        known_lo_mean=known_lo_mean,
        known_signal_mean=known_signal_mean,
        shots_per_symbol=shots,
    )
