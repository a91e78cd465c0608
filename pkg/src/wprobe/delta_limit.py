"""Sharp-switching limit ``eta -> 0`` of comb responses.

Non-local terms have a finite limit fixed by the correlator at the kick
times.  Local terms diverge; for the massless vacuum a single kick behaves
as ``P / lambda^2 ~ c_d * eta^(1-d)`` and :func:`scaling_experiment`
measures that exponent and prefactor.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .correlators import CorrelatorSpec, mode_integral_correlator
from .errors import (ConvergenceWarning, DomainError, InvalidParameterError, IRDivergenceError,
                     QuadratureError)
from .quadrature import extrapolate_to_zero, integrate, pmap, subdivide
from .response import Detector, functional_W, nonlocal_correlations
from .switching import NascentDelta, shape_from_name

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EtaSchedule:
    """Strictly decreasing tooth widths and the assumed convergence order."""

    etas: tuple
    order: int = 2

    def __post_init__(self):
        etas = tuple(float(e) for e in self.etas)
        object.__setattr__(self, "etas", etas)
        if len(etas) < 3:
            raise InvalidParameterError("an eta schedule needs at least 3 widths")
        if any(not (np.isfinite(e) and e > 0) for e in etas):
            raise InvalidParameterError("eta values must be positive")
        if any(b >= a for a, b in zip(etas, etas[1:])):
            raise InvalidParameterError("eta schedule must be strictly decreasing")
        if self.order not in (1, 2):
            raise InvalidParameterError("extrapolation order must be 1 or 2")

    @classmethod
    def geometric(cls, start, ratio=0.5, count=4, order=2):
        return cls(tuple(start * ratio**k for k in range(count)), order)

    def __len__(self):
        return len(self.etas)


@dataclass(frozen=True)
class Extrapolation:
    value: complex
    error: float
    order: int
    ratios: tuple
    monotone: bool


def richardson(etas, values, order=2):
    """Extrapolate ``values(eta)`` to ``eta = 0`` in powers of ``eta**order``.

    The assumed order is checked against the observed contraction of
    successive differences; when the data look first order the fit falls
    back to ``order = 1``.  A non-monotone difference sequence clears the
    ``monotone`` flag but the extrapolant is still returned.
    """
    etas = np.asarray(etas, dtype=float)
    values = np.asarray(values, dtype=complex)
    diffs = np.abs(np.diff(values))
    scale = max(np.abs(values).max(), 1e-300)
    if np.all(diffs <= 1e-15 * scale):
        return Extrapolation(complex(values[-1]), 0.0, order, (), True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = tuple(float(r) for r in diffs[:-1] / diffs[1:])
    monotone = all(r > 1.0 for r in ratios)
    used = order
    if order == 2 and ratios:
        steps = etas[:-1] / etas[1:]
        step = float(np.median(steps))
        observed = np.median(ratios)
        # closer (in log) to eta than to eta^2 contraction: fall back
        if np.isfinite(observed) and observed > 0:
            d1 = abs(math.log(observed) - math.log(step))
            d2 = abs(math.log(observed) - 2 * math.log(step))
            if d1 < d2:
                used = 1
    est, err = extrapolate_to_zero(etas**used, values)
    return Extrapolation(complex(est), float(err), used, ratios, monotone)


def _pointwise(corr, t1, t2):
    if getattr(corr, "stationary", False):
        s = t1 - t2
        ref = corr.reference(s) if corr.closed_form else None
        return complex(ref) if ref is not None else complex(corr(s))
    return complex(corr(t1, t2))


def nonlocal_delta_limit(N, zeta, tau0, gap, corr):
    """``sum_m exp(-i gap zeta m) sum_n W(tau0 + (n+m) zeta, tau0 + n zeta)``.

    Evaluated straight from the correlator at the kick times, with no
    quadrature.  Evaluation failures are re-raised naming the pair ``(m, n)``.
    """
    if int(N) != N or N < 1:
        raise InvalidParameterError("N must be a positive integer")
    if not zeta > 0:
        raise InvalidParameterError("zeta must be positive")
    total = 0j
    for m in range(1, int(N)):
        inner = 0j
        for n in range(int(N) - m):
            try:
                inner += _pointwise(corr, tau0 + (n + m) * zeta, tau0 + n * zeta)
            except Exception as exc:
                raise type(exc)(f"correlator evaluation failed at (m={m}, n={n}): {exc}") from exc
        total += np.exp(-1j * gap * zeta * m) * inner
    return complex(total)


@dataclass(frozen=True)
class SweepResult:
    etas: tuple
    values: tuple
    errors: tuple
    limit: complex
    limit_error: float
    order: int
    ratios: tuple
    monotone: bool
    reference: complex | None = None

    def to_dict(self):
        d = asdict(self)
        for key in ("values",):
            d[key] = [[v.real, v.imag] for v in d[key]]
        for key in ("limit", "reference"):
            v = d[key]
            d[key] = None if v is None else [v.real, v.imag]
        return d


def eta_sweep(comb, det, corr, schedule, *, quad=None, workers=None):
    """Non-local correlations ``C(eta)`` over ``schedule`` and their ``eta -> 0`` extrapolant."""
    if not isinstance(schedule, EtaSchedule):
        schedule = EtaSchedule(tuple(schedule))

    def run(eta):
        return nonlocal_correlations(comb.with_eta(eta), det.gap, corr, quad=quad, full_output=True)

    runs = pmap(run, schedule.etas, workers)
    values = [r[0] for r in runs]
    ex = richardson(schedule.etas, values, schedule.order)
    if not ex.monotone:
        warnings.warn("eta sweep errors do not shrink monotonically; extrapolant may be unreliable",
                      ConvergenceWarning, stacklevel=2)
    reference = None
    if comb.teeth > 1:
        try:
            reference = nonlocal_delta_limit(comb.teeth, comb.zeta, comb.tau0, det.gap, corr)
        except (DomainError, QuadratureError):
            reference = None
    return SweepResult(schedule.etas, tuple(values), tuple(r[1] for r in runs), ex.value,
                       ex.error + max(r[1] for r in runs), ex.order, ex.ratios, ex.monotone, reference)


# single-kick asymptotics ----------------------------------------------

def density_of_states(d, m, omega):
    """``D_d(w, m) = 2^(1-d) pi^(d/2) / Gamma(d/2) * w (w^2 - m^2)^((d-2)/2)``, zero below ``m``.

    In ``d = 1`` the value at ``w = m`` is an integrable singularity; it is
    returned as ``inf`` with a warning.
    """
    if d not in (1, 2, 3):
        raise InvalidParameterError("d must be 1, 2 or 3")
    if not m >= 0:
        raise InvalidParameterError("mass must be >= 0")
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise InvalidParameterError("frequency must be >= 0")
    pref = 2.0 ** (1 - d) * np.pi ** (d / 2) / special.gamma(d / 2)
    above = w > m
    k2 = np.where(above, w * w - m * m, 1.0)
    out = np.where(above, pref * w * k2 ** ((d - 2) / 2), 0.0)
    if d == 1 and np.any(w == m):
        warnings.warn("d=1 density of states has an integrable singularity at omega = m",
                      RuntimeWarning, stacklevel=2)
        out = np.where(w == m, np.inf, out)
    return out if out.ndim else float(out)


def single_kick_coefficient(d, shape="gaussian", rtol=1e-12):
    """Prefactor ``c_d`` of ``P / lambda^2 ~ c_d eta^(1-d)`` for one massless kick.

    ``c_d = int_0^inf dw / (2 pi)^d * D_d(w, 0) / (2 w) * |phi~(w)|^2``.
    """
    if d == 1:
        raise IRDivergenceError("d=1 single kicks diverge in the infrared as well as the ultraviolet")
    if d not in (2, 3):
        raise InvalidParameterError("d must be 2 or 3")
    shape = shape_from_name(shape)
    extent = shape.spectral_extent

    def f(w):
        return density_of_states(d, 0.0, w) / (2.0 * w * (2.0 * np.pi) ** d) * shape.fourier(w) ** 2

    res = integrate(f, subdivide([0.0, extent], shape.resolution * 4.0), rtol=rtol, max_depth=14)
    if not res.converged:
        raise QuadratureError("single-kick coefficient did not converge", res.value, res.error)
    return float(res.value.real)


@dataclass(frozen=True)
class ScalingReport:
    """Single-kick ``P/lambda^2`` against ``eta`` and the fitted power law.

    ``slope`` and ``coefficient`` come from fitting
    ``log P = slope log eta + log c + b1 eta + b2 eta^2 + b3 eta^3``, which
    separates the leading power from analytic finite-width corrections;
    ``naive_slope`` is the plain straight-line fit of ``log P`` on
    ``log eta``.
    """

    dim: int
    mass: float
    gap: float
    shape: str
    etas: tuple
    probabilities: tuple
    slope: float
    coefficient: float
    naive_slope: float
    theory_slope: float
    theory_coefficient: float
    r_squared: float
    residual_rms: float
    inconclusive: bool
    corrections: tuple = field(default=())

    def to_dict(self):
        return asdict(self)


def _fit(etas, probs, n_corr=3):
    x, y = np.log(etas), np.log(probs)
    naive = float(np.polyfit(x, y, 1)[0])
    n_corr = min(n_corr, len(etas) - 3)
    cols = [x, np.ones_like(x)] + [np.asarray(etas) ** (k + 1) for k in range(max(n_corr, 0))]
    X = np.vstack(cols).T
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    rms = float(np.sqrt((resid**2).mean()))
    return float(coef[0]), float(np.exp(coef[1])), naive, r2, rms, tuple(float(c) for c in coef[2:])


def scaling_experiment(d, shape, det, schedule, *, mass=0.0, quad=None, workers=None, residual_tol=1e-4):
    """Measure the ``eta^(1-d)`` growth of a single kick in the inertial vacuum.

    The probabilities come from :func:`functional_W` on the mode-integral
    correlator.  A fit residual above ``residual_tol`` flags the report
    inconclusive.
    """
    if d == 1:
        raise IRDivergenceError("d=1 single kicks diverge in the infrared as well as the ultraviolet")
    if not isinstance(schedule, EtaSchedule):
        schedule = EtaSchedule(tuple(schedule))
    if not isinstance(det, Detector):
        det = Detector(float(det))
    shape = shape_from_name(shape)
    corr = mode_integral_correlator(CorrelatorSpec(mass=mass, dim=d))

    def run(eta):
        tooth = NascentDelta(shape, eta, 0.0)
        return functional_W(tooth, tooth, det.gap, corr, quad=quad).real

    probs = np.array(pmap(run, schedule.etas, workers))
    if np.any(probs <= 0):
        raise DomainError("non-positive single-kick probability; cannot fit a power law")
    slope, coef, naive, r2, rms, corr_coefs = _fit(np.array(schedule.etas), probs)
    theory = single_kick_coefficient(d, shape)
    inconclusive = rms > residual_tol
    if inconclusive:
        log.warning("scaling fit residual %.3g exceeds %.3g", rms, residual_tol)
    return ScalingReport(d, float(mass), det.gap, shape.kind, schedule.etas, tuple(float(p) for p in probs),
                         slope, coef, naive, float(1 - d), theory, r2, rms, inconclusive, corr_coefs)
