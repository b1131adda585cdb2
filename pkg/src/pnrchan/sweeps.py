"""Parameter-sweep drivers behind the CLI.

A sweep walks a strictly monotone grid (LO energy or signal loss), computes
the requested information figures per point, and returns rows in grid order.
Grid points are independent pure computations, so they may be farmed out to
a process pool; rows are assembled in grid order regardless of completion
order, which keeps the output byte-identical for any worker count.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .channel import ChannelParams, loss_db_to_transmissivity
from .errors import ValidationError
from .information import (
    certified_error_bound,
    mi_bds,
    mi_hl,
    mi_homodyne,
    mi_wf,
)
from .receivers import DEFAULT_TAIL_TOL
from .security import security_report_for

__all__ = [
    "STRATEGIES",
    "SECURITY_SCENARIOS",
    "SweepSpec",
    "SecuritySpec",
    "sweep_columns",
    "security_columns",
    "run_sweep",
    "run_security",
    "resolve_workers",
]

STRATEGIES = ("wf", "hl", "bds", "hom")
SECURITY_SCENARIOS = ("ia-dr", "ia-rr", "ca-rr")

WORKERS_ENV = "PNRCHAN_WORKERS"


def _check_grid(grid):
    if len(grid) == 0:
        raise ValidationError("grid must not be empty")
    diffs = [b - a for a, b in zip(grid, grid[1:])]
    if diffs and not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
        raise ValidationError("grid must be strictly monotone")


@dataclass(frozen=True)
class SweepSpec:
    """A mutual-information sweep over LO energy or signal loss.

    In ``lo`` mode the grid is the LO mean photon number and ``signal_mean``
    is the signal mean at the receiver.  In ``loss`` mode the grid is the
    attenuation in dB, ``signal_mean`` is the zero-loss reference, and
    ``lo_mean`` stays fixed.
    """

    mode: str
    signal_mean: float
    grid: tuple
    strategies: tuple = ("wf", "hl", "bds")
    visibilities: tuple = (1.0,)
    lo_mean: Optional[float] = None
    fixed_loss_db: float = 0.0
    security: tuple = ()
    eve_lo_mean: Optional[float] = None
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if self.mode not in ("lo", "loss"):
            raise ValidationError(f"mode must be 'lo' or 'loss', got {self.mode!r}")
        if self.signal_mean < 0.0:
            raise ValidationError("signal_mean must be >= 0")
        if not self.strategies:
            raise ValidationError("strategies must not be empty")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ValidationError(f"unknown strategy {s!r}")
        for s in self.security:
            if s not in SECURITY_SCENARIOS:
                raise ValidationError(f"unknown security scenario {s!r}")
        if not self.visibilities:
            raise ValidationError("need at least one visibility")
        if self.security and len(self.visibilities) != 1:
            raise ValidationError("security columns need a single visibility")
        if self.mode == "loss" and self.lo_mean is None:
            raise ValidationError("loss mode needs a fixed lo_mean")
        _check_grid(self.grid)


def sweep_columns(spec: SweepSpec):
    cols = ["lo_mean"] if spec.mode == "lo" else ["loss_db", "transmissivity", "signal_mean"]
    for xi in spec.visibilities:
        tag = f"[xi={xi:g}]" if len(spec.visibilities) > 1 else ""
        cols.extend(f"i_{s}{tag}" for s in spec.strategies)
    if "ia-dr" in spec.security:
        cols += ["i_ae_wf", "delta_ia_dr", "k_dr"]
    if "ia-rr" in spec.security:
        cols += ["i_be_wf", "delta_ia_rr", "k_rr"]
    if "ca-rr" in spec.security:
        cols += ["chi_be_wf", "chi_be_bds", "delta_ca_wf", "delta_ca_bds",
                 "k_ca_wf", "k_ca_bds"]
    cols.append("trunc_err")
    return cols


def _bob_params(spec: SweepSpec, value, xi):
    if spec.mode == "lo":
        return ChannelParams.from_means(
            spec.signal_mean, value, visibility=xi, loss_db=spec.fixed_loss_db
        )
    t = loss_db_to_transmissivity(value)
    return ChannelParams(
        alpha=spec.signal_mean ** 0.5,
        transmissivity=t,
        lo_amplitude=spec.lo_mean ** 0.5,
        visibility=xi,
    )


_MI_FUNCS = {"wf": mi_wf, "hl": mi_hl, "bds": mi_bds}


def _sweep_row(args):
    spec, value = args
    if spec.mode == "lo":
        cells = [value]
    else:
        t = loss_db_to_transmissivity(value)
        cells = [value, t, spec.signal_mean * t]
    bound = 0.0
    for xi in spec.visibilities:
        bob = _bob_params(spec, value, xi)
        for strat in spec.strategies:
            if strat == "hom":
                cells.append(mi_homodyne(bob))
            else:
                cells.append(_MI_FUNCS[strat](bob, spec.tail_tol))
        bound = max(bound, certified_error_bound(bob, spec.tail_tol))
    if spec.security:
        bob = _bob_params(spec, value, spec.visibilities[0])
        eve_lo = None if spec.eve_lo_mean is None else spec.eve_lo_mean ** 0.5
        report = security_report_for(bob, eve_lo_amplitude=eve_lo,
                                     tail_tol=spec.tail_tol)
        if "ia-dr" in spec.security:
            cells += [report.i_ae_wf, report.delta_ia_dr, report.k_dr]
        if "ia-rr" in spec.security:
            cells += [report.i_be_wf, report.delta_ia_rr, report.k_rr]
        if "ca-rr" in spec.security:
            cells += [report.chi_be_wf, report.chi_be_bds, report.delta_ca_wf,
                      report.delta_ca_bds, report.k_ca_wf, report.k_ca_bds]
    cells.append(bound)
    return cells


@dataclass(frozen=True)
class SecuritySpec:
    """A wiretap security sweep over signal loss.

    ``signal_mean`` is the source mean photon number (received mean at zero
    loss); the grid is the attenuation in dB of the honest arm, with the
    eavesdropper collecting the complementary fraction.
    """

    signal_mean: float
    lo_mean: float
    visibility: float
    grid: tuple
    eve_lo_mean: Optional[float] = None
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if self.signal_mean < 0.0 or self.lo_mean < 0.0:
            raise ValidationError("mean photon numbers must be >= 0")
        _check_grid(self.grid)


SECURITY_TABLE_COLUMNS = (
    "loss_db", "transmissivity", "signal_mean",
    "i_ab_wf", "i_ab_bds", "i_ae_wf", "i_be_wf",
    "chi_be_wf", "chi_be_bds",
    "delta_ia_dr", "delta_ia_rr", "delta_ca_wf", "delta_ca_bds",
    "k_dr", "k_rr", "k_ca_wf", "k_ca_bds",
    "trunc_err",
)


def security_columns():
    return list(SECURITY_TABLE_COLUMNS)


def _security_row(args):
    spec, loss_db = args
    t = loss_db_to_transmissivity(loss_db)
    bob = ChannelParams(
        alpha=spec.signal_mean ** 0.5,
        transmissivity=t,
        lo_amplitude=spec.lo_mean ** 0.5,
        visibility=spec.visibility,
    )
    eve_lo = None if spec.eve_lo_mean is None else spec.eve_lo_mean ** 0.5
    rep = security_report_for(bob, eve_lo_amplitude=eve_lo, tail_tol=spec.tail_tol)
    bound = certified_error_bound(bob, spec.tail_tol)
    return [
        loss_db, t, spec.signal_mean * t,
        rep.i_ab_wf, rep.i_ab_bds, rep.i_ae_wf, rep.i_be_wf,
        rep.chi_be_wf, rep.chi_be_bds,
        rep.delta_ia_dr, rep.delta_ia_rr, rep.delta_ca_wf, rep.delta_ca_bds,
        rep.k_dr, rep.k_rr, rep.k_ca_wf, rep.k_ca_bds,
        bound,
    ]


def resolve_workers(flag_value=None):
    """Worker count: explicit flag, else the environment, else 1."""
    if flag_value is not None:
        value = flag_value
    else:
        env = os.environ.get(WORKERS_ENV)
        if env is None:
            return 1
        try:
            value = int(env)
        except ValueError as exc:
            raise ValidationError(f"{WORKERS_ENV} must be an integer") from exc
    if value < 1:
        raise ValidationError("worker count must be >= 1")
    return value


def _map_rows(row_func, spec, grid, workers):
    tasks = [(spec, value) for value in grid]
    if workers <= 1 or len(tasks) <= 1:
        return [row_func(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(row_func, tasks))


def run_sweep(spec: SweepSpec, workers=1):
    """Evaluate a MI sweep; returns (columns, rows) in grid order."""
    return sweep_columns(spec), _map_rows(_sweep_row, spec, spec.grid, workers)


def run_security(spec: SecuritySpec, workers=1):
    """Evaluate a security sweep; returns (columns, rows) in grid order."""
    return security_columns(), _map_rows(_security_row, spec, spec.grid, workers)
