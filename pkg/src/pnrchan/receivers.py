"""Exact conditional outcome statistics of the three readout strategies.

Three ways to read the same pair of photon-number-resolving detectors:

* weak-field (WF): keep the raw count tuple (n, m) from both arms; the
  conditional law is a product of two Poissons on a truncated grid.
* homodyne-like (HL): keep only the count difference Delta = n - m; the
  conditional law is Skellam, evaluated here through the exponentially
  scaled modified Bessel function of the first kind in log domain.
* binary decision by sign (BDS): keep sign(Delta) with a fair split of the
  Delta = 0 mass; a two-outcome law derived analytically from the Skellam.

Every distribution carries an explicit truncation window and a certified
tail mass.  Windows default to mean + 12*sigma + 30 and grow until the
certificate (Poisson survival function per arm, Chernoff bound for the
difference) falls below the requested tolerance; failure to certify raises
:class:`~pnrchan.errors.NumericsError`.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ive
from scipy.stats import poisson as _poisson

from .channel import ChannelParams, detection_rates
from .errors import NumericsError, ValidationError

__all__ = [
    "DEFAULT_TAIL_TOL",
    "WfDistribution",
    "HlDistribution",
    "BdsDistribution",
    "GaussianDensity",
    "poisson_logpmf",
    "poisson_pmf",
    "poisson_window",
    "skellam_window",
    "skellam_pmf_grid",
    "wf_pmf",
    "skellam_pmf",
    "bds_probs",
    "homodyne_pdf",
]

DEFAULT_TAIL_TOL = 1e-10

_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_WINDOW_GROWTH_STEPS = 60
_GRID_CELL_LIMIT = 40_000_000
# Below this product of rates the Bessel closed form is abandoned for the
# direct log-domain convolution series.
_TINY_RATE_PRODUCT = 1e-280


# ---------------------------------------------------------------------------
# Poisson pmf, log domain, saddle-point style (no factorial is ever formed)
# ---------------------------------------------------------------------------

def _stirlerr(n):
    """log(n!) - Stirling approximation, for float array n >= 1."""
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    small = n < 16.0
    if small.any():
        ns = n[small]
        out[small] = gammaln(ns + 1.0) - (
            ns * np.log(ns) - ns + 0.5 * np.log(2.0 * np.pi * ns)
        )
    big = ~small
    if big.any():
        nb = n[big]
        nn = nb * nb
        s0, s1, s2, s3, s4 = (
            1.0 / 12.0,
            1.0 / 360.0,
            1.0 / 1260.0,
            1.0 / 1680.0,
            1.0 / 1188.0,
        )
        out[big] = (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / nb
    return out


def _bd0(x, mu):
    """Deviance term x*log(x/mu) + mu - x, stable for x near mu (x > 0)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    near = np.abs(x - mu) < 0.1 * (x + mu)
    if near.any():
        xn = x[near]
        v = (xn - mu) / (xn + mu)
        s = (xn - mu) * v
        ej = 2.0 * xn * v
        v2 = v * v
        term = np.ones_like(v)
        for j in range(1, 40):
            term = term * v2
            inc = ej * term / (2 * j + 1)
            s_new = s + inc
            if np.array_equal(s_new, s):
                break
            s = s_new
        out[near] = s
    far = ~near
    if far.any():
        xf = x[far]
        out[far] = xf * np.log(xf / mu) + mu - xf
    return out


def poisson_logpmf(n, mu):
    """log of the Poisson pmf, vectorized over counts ``n``.

    Evaluated through the Stirling-error/deviance decomposition so that no
    factorial or power ever overflows and the result stays accurate to a few
    ulp even for counts of order 1e6.
    """
    if mu < 0.0 or not math.isfinite(mu):
        raise ValidationError(f"Poisson rate must be finite and >= 0, got {mu}")
    n_arr = np.asarray(n)
    if n_arr.ndim == 0:
        return float(poisson_logpmf(n_arr.reshape(1), mu)[0])
    if np.any(n_arr < 0) or not np.issubdtype(n_arr.dtype, np.integer):
        if np.any(n_arr < 0) or np.any(n_arr != np.floor(n_arr)):
            raise ValidationError("counts must be nonnegative integers")
    nf = n_arr.astype(float)
    out = np.full(nf.shape, -np.inf)
    if mu == 0.0:
        out[nf == 0] = 0.0
        return out
    zero = nf == 0
    out[zero] = -mu
    pos = ~zero
    if pos.any():
        npos = nf[pos]
        out[pos] = -_stirlerr(npos) - _bd0(npos, mu) - (
            _LN_SQRT_2PI + 0.5 * np.log(npos)
        )
    return out


def poisson_pmf(n, mu):
    """Poisson pmf exp(-mu) mu^n / n!, exponentiated from the log form."""
    return np.exp(poisson_logpmf(n, mu))


def poisson_window(mu, tail_tol=DEFAULT_TAIL_TOL):
    """Smallest rule-based count window [0, n_max] with certified tail.

    Returns ``(n_max, tail_bound)`` where ``tail_bound = P(N > n_max)`` from
    the Poisson survival function.  The base rule mu + 12*sqrt(mu) + 30 is
    grown geometrically if the certificate misses ``tail_tol``.
    """
    if tail_tol <= 0.0:
        raise NumericsError(
            "a zero tail tolerance cannot be certified on an infinite alphabet"
        )
    if mu == 0.0:
        return 0, 0.0
    n_max = int(math.ceil(mu + 12.0 * math.sqrt(mu) + 30.0))
    for _ in range(_WINDOW_GROWTH_STEPS):
        bound = float(_poisson.sf(n_max, mu))
        if bound <= tail_tol:
            return n_max, bound
        n_max = int(math.ceil(n_max * 1.5)) + 10
    raise NumericsError(
        f"cannot certify Poisson tail below {tail_tol:g} for rate {mu:g}"
    )


# ---------------------------------------------------------------------------
# Skellam law of the count difference
# ---------------------------------------------------------------------------

def _skellam_chernoff_upper(mu_t, mu_r, d):
    """Chernoff bound on P(Delta >= d), valid for d above the mean."""
    u = (d + math.sqrt(d * d + 4.0 * mu_t * mu_r)) / (2.0 * mu_t)
    if u <= 1.0:
        return 1.0
    expo = mu_t * (u - 1.0) + mu_r * (1.0 / u - 1.0) - d * math.log(u)
    return math.exp(expo)


def _skellam_tail_bound(mu_t, mu_r, lo, hi):
    """Certified bound on the Skellam mass outside [lo, hi]."""
    upper = _skellam_chernoff_upper(mu_t, mu_r, hi + 1)
    lower = _skellam_chernoff_upper(mu_r, mu_t, -(lo - 1))
    return upper + lower


def skellam_window(mu_t, mu_r, tail_tol=DEFAULT_TAIL_TOL):
    """Integer window [lo, hi] around the difference mean with certified tail.

    Returns ``(lo, hi, tail_bound)``.  Both rates must be positive; the
    one-sided degenerate cases are handled by the callers.
    """
    if tail_tol <= 0.0:
        raise NumericsError(
            "a zero tail tolerance cannot be certified on an infinite alphabet"
        )
    mean = mu_t - mu_r
    sig = math.sqrt(mu_t + mu_r)
    half = int(math.ceil(12.0 * sig + 30.0))
    lo = int(math.floor(mean)) - half
    hi = int(math.ceil(mean)) + half
    for _ in range(_WINDOW_GROWTH_STEPS):
        bound = _skellam_tail_bound(mu_t, mu_r, lo, hi)
        if bound <= tail_tol:
            return lo, hi, bound
        half = int(math.ceil(half * 1.5)) + 10
        lo = int(math.floor(mean)) - half
        hi = int(math.ceil(mean)) + half
    raise NumericsError(
        f"cannot certify Skellam tail below {tail_tol:g} for rates "
        f"({mu_t:g}, {mu_r:g})"
    )


def _log_ive_series(v, x):
    """log(I_v(x) * exp(-x)) by the ascending series, for scalar integer v >= 0.

    Used where the scaled Bessel underflows, which only happens for order far
    above the argument; there the series peaks at small index and a short
    log-domain sum is accurate to a few ulp.  The result can be far below
    log(double tiny) and must stay finite: the pmf prefactor it combines with
    can be just as far above zero at extreme rate ratios.
    """
    mstar = 0.5 * (-(v + 1.0) + math.sqrt((v + 1.0) ** 2 + x * x))
    n_terms = 2 * int(math.ceil(mstar)) + 30
    lx = math.log(0.5 * x)
    m = np.arange(n_terms + 1, dtype=float)
    t = (2.0 * m + v) * lx - gammaln(m + 1.0) - gammaln(m + v + 1.0)
    tm = t.max()
    return float(tm + math.log(np.exp(t - tm).sum()) - x)


def _skellam_pmf_bessel(mu_t, mu_r, deltas):
    """Closed-form Skellam pmf on an integer grid, both rates positive."""
    x = 2.0 * math.sqrt(mu_t * mu_r)
    base = -((math.sqrt(mu_t) - math.sqrt(mu_r)) ** 2)
    half_log_ratio = 0.5 * (math.log(mu_t) - math.log(mu_r))
    logp = base + deltas * half_log_ratio
    scaled = ive(np.abs(deltas).astype(float), x)
    probs = np.zeros(len(deltas))
    ok = scaled > 0.0
    probs[ok] = np.exp(logp[ok] + np.log(scaled[ok]))
    for i in np.nonzero(~ok)[0]:
        # base = -(mu_t + mu_r) + x, so the scaled series slots in directly
        log_iv = _log_ive_series(abs(int(deltas[i])), x)
        lp = base + deltas[i] * half_log_ratio + log_iv
        if lp > -745.0:
            probs[i] = math.exp(lp)
    return probs


def _skellam_pmf_convolution(mu_t, mu_r, deltas):
    """Direct convolution-series pmf; the stable route for tiny rate products."""
    mu_min = min(mu_t, mu_r)
    m_hi = poisson_window(mu_min, 1e-16)[0] if mu_min > 0 else 0
    m = np.arange(0, m_hi + 1)
    probs = np.empty(len(deltas))
    for i, d in enumerate(deltas):
        n = m + int(d)
        valid = n >= 0
        if not valid.any():
            probs[i] = 0.0
            continue
        lt = poisson_logpmf(n[valid], mu_t) + poisson_logpmf(m[valid], mu_r)
        tm = lt.max()
        probs[i] = 0.0 if tm == -np.inf else math.exp(tm) * np.exp(lt - tm).sum()
    return probs


def skellam_pmf_grid(mu_t, mu_r, tail_tol=DEFAULT_TAIL_TOL):
    """Skellam pmf of the count difference over a certified window.

    Returns ``(deltas, probs, tail_bound)``.  Degenerate rates collapse to the
    one-sided Poisson law; otherwise the exponentially scaled Bessel closed
    form is used, with a log-domain series fallback where it underflows and a
    direct convolution series when the rate product is below 1e-280.
    """
    if mu_t < 0.0 or mu_r < 0.0:
        raise ValidationError("rates must be >= 0")
    if mu_t == 0.0 and mu_r == 0.0:
        return np.array([0]), np.array([1.0]), 0.0
    if mu_r == 0.0:
        n_max, bound = poisson_window(mu_t, tail_tol)
        deltas = np.arange(0, n_max + 1)
        return deltas, poisson_pmf(deltas, mu_t), bound
    if mu_t == 0.0:
        m_max, bound = poisson_window(mu_r, tail_tol)
        deltas = np.arange(-m_max, 1)
        return deltas, poisson_pmf(-deltas, mu_r), bound
    lo, hi, bound = skellam_window(mu_t, mu_r, tail_tol)
    deltas = np.arange(lo, hi + 1)
    if mu_t * mu_r < _TINY_RATE_PRODUCT:
        probs = _skellam_pmf_convolution(mu_t, mu_r, deltas)
    else:
        probs = _skellam_pmf_bessel(mu_t, mu_r, deltas)
    return deltas, probs, bound


# ---------------------------------------------------------------------------
# Distribution containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WfDistribution:
    """Joint count-pair law p(n, m | symbol) on a truncated grid.

    ``probs[n, m]`` covers 0 <= n <= n_max, 0 <= m <= m_max; ``tail_mass`` is
    the probability outside the grid (1 minus the grid sum, clipped at 0).
    """

    n_max: int
    m_max: int
    probs: np.ndarray
    tail_mass: float
    symbol: int

    @property
    def arm_t(self):
        """Marginal pmf of the transmitted-arm count."""
        return self.probs.sum(axis=1)

    @property
    def arm_r(self):
        """Marginal pmf of the reflected-arm count."""
        return self.probs.sum(axis=0)


@dataclass(frozen=True)
class HlDistribution:
    """Count-difference law p(Delta | symbol) on a certified integer window."""

    delta_min: int
    delta_max: int
    probs: np.ndarray
    tail_mass: float
    symbol: int

    @property
    def deltas(self):
        return np.arange(self.delta_min, self.delta_max + 1)

    @property
    def mean(self):
        return float((self.deltas * self.probs).sum())

    @property
    def variance(self):
        d = self.deltas
        m = self.mean
        return float((((d - m) ** 2) * self.probs).sum())


@dataclass(frozen=True)
class BdsDistribution:
    """Binary sign-readout law: p0 for outcome 0, p1 = 1 - p0 for outcome 1."""

    p0: float
    p1: float
    symbol: int


@dataclass(frozen=True)
class GaussianDensity:
    """Gaussian descriptor of the macroscopic-LO limit of the difference law."""

    mean: float
    variance: float = 1.0

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * (x - self.mean) ** 2 / self.variance) / math.sqrt(
            2.0 * math.pi * self.variance
        )


# ---------------------------------------------------------------------------
# Strategy distributions conditioned on the encoded symbol
# ---------------------------------------------------------------------------

def wf_pmf(params: ChannelParams, symbol: int, tail_tol=DEFAULT_TAIL_TOL) -> WfDistribution:
    """Product-Poisson grid of the raw count pair for one symbol."""
    r = detection_rates(params, symbol)
    n_max, bound_t = poisson_window(r.mu_t, 0.5 * tail_tol)
    m_max, bound_r = poisson_window(r.mu_r, 0.5 * tail_tol)
    if (n_max + 1) * (m_max + 1) > _GRID_CELL_LIMIT:
        raise ValidationError(
            f"count grid ({n_max + 1} x {m_max + 1}) exceeds the cell limit; "
            "use the difference-based operations at this LO energy"
        )
    pt = poisson_pmf(np.arange(n_max + 1), r.mu_t)
    pr = poisson_pmf(np.arange(m_max + 1), r.mu_r)
    probs = np.outer(pt, pr)
    tail = max(0.0, 1.0 - float(probs.sum()))
    if bound_t + bound_r > tail_tol:
        raise NumericsError("count-grid tail certification failed")
    return WfDistribution(n_max=n_max, m_max=m_max, probs=probs, tail_mass=tail,
                          symbol=symbol)


def skellam_pmf(params: ChannelParams, symbol: int, tail_tol=DEFAULT_TAIL_TOL) -> HlDistribution:
    """Count-difference law for one symbol."""
    r = detection_rates(params, symbol)
    deltas, probs, _ = skellam_pmf_grid(r.mu_t, r.mu_r, tail_tol)
    tail = max(0.0, 1.0 - float(probs.sum()))
    return HlDistribution(delta_min=int(deltas[0]), delta_max=int(deltas[-1]),
                          probs=probs, tail_mass=tail, symbol=symbol)


def bds_probs(params: ChannelParams, symbol: int, tail_tol=DEFAULT_TAIL_TOL) -> BdsDistribution:
    """Binary sign readout: negative differences and half the zero mass.

    The tie at Delta = 0 is resolved analytically as an even split; sampling
    the actual coin lives in the Monte Carlo module.
    """
    hl = skellam_pmf(params, symbol, tail_tol)
    d = hl.deltas
    p0 = float(hl.probs[d < 0].sum() + 0.5 * hl.probs[d == 0].sum())
    p0 = min(max(p0, 0.0), 1.0)
    return BdsDistribution(p0=p0, p1=1.0 - p0, symbol=symbol)


def homodyne_pdf(params: ChannelParams, symbol: int) -> GaussianDensity:
    """Macroscopic-LO limit of the standardized difference, x = Delta / z.

    In that limit the law is Gaussian with mean +-2*xi*sqrt(T)*alpha and unit
    variance; it serves as the ideal-homodyne reference curve.
    """
    if symbol not in (0, 1):
        raise ValidationError(f"symbol must be 0 or 1, got {symbol}")
    sign = 1.0 if symbol == 1 else -1.0
    mean = sign * 2.0 * params.visibility * math.sqrt(params.signal_mean)
    return GaussianDensity(mean=mean, variance=1.0)
