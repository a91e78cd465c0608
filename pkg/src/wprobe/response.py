"""Leading-order detector response to a switching function.

The central object is the bi-functional

    W[f, g] = int dtau dtau' f(tau) g(tau') exp(-i gap (tau - tau')) W(tau, tau')

computed in lapse coordinates ``s = tau - tau'``, ``u = tau'``.  For a
stationary correlator the inner ``u`` integral is the cross-correlation
``A(s) = int du f(u + s) g(u)`` of the two switching functions, so only a
one-dimensional oscillatory (and, at small ``eps``, sharply peaked) integral
in ``s`` remains.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .correlators import EPS_FACTORS, require_stationary
from .errors import InvalidParameterError, PerturbativityWarning
from .quadrature import composite_unit_rule, extrapolate_to_zero, graded_points, integrate, pmap, subdivide
from .switching import Comb, as_teeth

log = logging.getLogger(__name__)

PERTURBATIVE_LIMIT = 0.1
METHODS = ("auto", "lapse", "spectral")


@dataclass(frozen=True)
class QuadSettings:
    """Quadrature controls shared by all response integrals.

    ``tol`` is the relative tolerance of each adaptive integral and
    ``max_depth`` the bisection cap.  ``workers`` > 1 evaluates tooth pairs
    on a thread pool; results do not depend on it.
    """

    tol: float = 1e-10
    max_depth: int = 12
    order: int = 16
    tail_tol: float = 1e-12
    workers: int | None = None

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise InvalidParameterError("quadrature tol must lie in (0, 1)")
        if int(self.max_depth) != self.max_depth or self.max_depth < 1:
            raise InvalidParameterError("quadrature max_depth must be a positive integer")


DEFAULT_QUAD = QuadSettings()


@dataclass(frozen=True)
class Detector:
    """Two-level detector with gap ``gap`` (negative for de-excitation) and coupling ``coupling``."""

    gap: float
    coupling: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.gap):
            raise InvalidParameterError("detector gap must be finite")
        if not (np.isfinite(self.coupling) and self.coupling >= 0):
            raise InvalidParameterError("coupling must be a non-negative real number")


@dataclass(frozen=True)
class FunctionalResult:
    value: complex
    error: float
    method: str
    evaluations: int
    eps_values: tuple = ()
    raw_values: tuple = ()
    quad_error: float = math.nan


@dataclass(frozen=True)
class ProbeOutcome:
    """Excitation probability of a comb and its decomposition.

    ``total`` is the direct full-comb value; ``decomposed`` is
    ``sum(local_terms) + 2 lambda^2 Re(nonlocal_c)``.  ``error`` includes
    the quadrature errors and their mutual difference.
    """

    total: float
    local_terms: tuple
    nonlocal_c: complex
    error: float
    coupling: float
    decomposed: float = math.nan
    pair_values: dict = field(default_factory=dict, compare=False)

    @property
    def per_lambda2(self):
        return self.total / self.coupling**2 if self.coupling else math.nan


# switching-function geometry ---------------------------------------------

def _windows(teeth, tail_tol):
    return [(t.center, t.halfwidth(tail_tol)) for t in teeth]


def _union(intervals):
    out = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return out


def _lapse_intervals(fteeth, gteeth, tail_tol):
    fw, gw = _windows(fteeth, tail_tol), _windows(gteeth, tail_tol)
    return _union([(cf - cg - hf - hg, cf - cg + hf + hg) for cf, hf in fw for cg, hg in gw])


def _eval_teeth(teeth, tau):
    total = np.zeros(np.shape(tau))
    for t in teeth:
        total = total + t.shape.pdf((tau - t.center) / t.eta) / t.eta
    return total


def _inner_nodes(gteeth, tail_tol, resolution=math.inf):
    """Composite rule over the windows of ``gteeth``, fine enough to resolve
    both those teeth and any feature of width ``resolution``."""
    us, ws = [], []
    for t in gteeth:
        h = t.halfwidth(tail_tol)
        panels = max(2, int(math.ceil(2.0 * h / min(t.shape.resolution * t.eta, resolution))))
        nodes, weights = composite_unit_rule(panels)
        u = t.center - h + 2.0 * h * nodes
        us.append(u)
        ws.append(2.0 * h * weights * (t.shape.pdf((u - t.center) / t.eta) / t.eta))
    return np.concatenate(us), np.concatenate(ws)


def _resolution(teeth):
    return min(t.shape.resolution * t.eta for t in teeth)


def cross_correlation(fteeth, gteeth, tail_tol=1e-12):
    """Return ``A(s) = int du f(u + s) g(u)`` as a vectorised callable."""
    if (len(fteeth) == 1 and len(gteeth) == 1
            and fteeth[0].shape.kind == "gaussian" and gteeth[0].shape.kind == "gaussian"):
        f, g = fteeth[0], gteeth[0]
        mu = f.center - g.center
        var = f.eta**2 + g.eta**2
        norm = 1.0 / math.sqrt(2.0 * math.pi * var)
        return lambda s: norm * np.exp(-0.5 * (np.asarray(s) - mu) ** 2 / var)

    # integrate over the narrower switching function; A(s) = int dv f(v) g(v - s)
    res = min(_resolution(fteeth), _resolution(gteeth))
    if _span(fteeth, tail_tol) < _span(gteeth, tail_tol):
        nodes, w = _inner_nodes(fteeth, tail_tol, res)
        other, sign = gteeth, -1.0
    else:
        nodes, w = _inner_nodes(gteeth, tail_tol, res)
        other, sign = fteeth, 1.0

    def A(s):
        s = np.asarray(s, dtype=float)
        flat = np.ravel(s)
        out = np.empty(flat.shape)
        step = max(1, 2**22 // max(nodes.size, 1))
        for i in range(0, flat.size, step):
            out[i:i + step] = _eval_teeth(other, nodes[None, :] + sign * flat[i:i + step, None]) @ w
        return out.reshape(s.shape)
    return A


def _span(teeth, tail_tol):
    return sum(2.0 * t.halfwidth(tail_tol) for t in teeth)


# bi-functional ---------------------------------------------------------

def _panel_width(teeth, gap, frequency):
    width = _resolution(teeth)
    for rate in (abs(gap), frequency):
        if rate > 0:
            width = min(width, np.pi / (4.0 * rate))
    return width


def _lapse_stationary(fteeth, gteeth, gap, corr, eps, quad):
    """Lapse integral for each regulator in ``eps``; all share one adaptive pass."""
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    A = cross_correlation(fteeth, gteeth, quad.tail_tol)
    # A is as smooth as the smoother of the two switching functions
    smoother = fteeth if _resolution(fteeth) >= _resolution(gteeth) else gteeth
    width = _panel_width(smoother, gap, corr.frequency)
    value, error, evals = np.zeros(eps.size, complex), np.zeros(eps.size), 0
    for lo, hi in _lapse_intervals(fteeth, gteeth, quad.tail_tol):
        bp = [lo, hi]
        if corr.regulated and lo < 0.0 < hi:
            bp = np.concatenate([bp, graded_points(0.0, eps.min(), min(-lo, hi))])
        bp = subdivide(bp, width)

        def integrand(s):
            w = A(s) * np.exp(-1j * gap * s)
            return np.stack([w * corr.evaluate(s, e) for e in eps], axis=1)

        res = integrate(integrand, bp, rtol=quad.tol, max_depth=quad.max_depth, order=quad.order)
        value += res.value
        error += res.error
        evals += res.evaluations
    return value, error, evals


def _lapse_general(fteeth, gteeth, gap, corr, quad):
    u, w = _inner_nodes(gteeth, quad.tail_tol, _resolution(fteeth))
    width = _panel_width(fteeth + gteeth, gap, corr.frequency)

    def integrand(s):
        s = np.asarray(s, dtype=float)
        tau = u[None, :] + s[:, None]
        inner = (_eval_teeth(fteeth, tau) * corr(tau, u[None, :])) @ w
        return inner * np.exp(-1j * gap * s)

    value, error, evals = 0j, 0.0, 0
    for lo, hi in _lapse_intervals(fteeth, gteeth, quad.tail_tol):
        res = integrate(integrand, subdivide([lo, hi], width), rtol=quad.tol,
                        max_depth=quad.max_depth, order=quad.order)
        value += res.value
        error += res.error
        evals += res.evaluations
    return complex(value), error, evals


def transform(teeth, q):
    """``int chi(tau) exp(-i q tau) dtau`` for a sum of teeth."""
    q = np.asarray(q, dtype=float)
    out = np.zeros(q.shape, dtype=complex)
    for t in teeth:
        out = out + np.exp(-1j * q * t.center) * t.shape.fourier(q * t.eta)
    return out


def _spectral(fteeth, gteeth, gap, density, eps, quad):
    teeth = fteeth + gteeth
    wmax = max(t.shape.spectral_extent / t.eta for t in teeth) + abs(gap)
    if eps > 0:
        wmax = min(wmax, -math.log(1e-16) / eps)
    if wmax <= density.mass:
        return 0j, 0.0, 0
    kmax = math.sqrt(wmax**2 - density.mass**2)
    spread = max(abs(a.center - b.center) for a in teeth for b in teeth)
    # a unit tooth lives on a window of order 1, so its transform varies on a unit k scale
    width = min(1.0 / t.eta for t in teeth)
    if spread > 0:
        width = min(width, np.pi / (4.0 * spread))
    bp = [density.kmin, kmax]
    if gap < -density.mass:
        # q = w + gap changes sign here
        kq = math.sqrt(gap * gap - density.mass**2)
        if density.kmin < kq < kmax:
            bp.append(kq)
    bp = subdivide(bp, width)

    def integrand(k):
        w = density.frequency(k)
        q = w + gap
        return density.weight(k) * np.exp(-eps * w) * transform(fteeth, q) * np.conj(transform(gteeth, q))

    res = integrate(integrand, bp, rtol=quad.tol, max_depth=quad.max_depth, order=quad.order)
    return complex(res.value), res.error, res.evaluations


def functional_W(f, g, gap, corr, *, quad=None, method="auto", full_output=False):
    """Bi-functional ``W[f, g]`` of two switching functions at detector gap ``gap``.

    Parameters
    ----------
    f, g
        A :class:`NascentDelta`, a :class:`Comb` or a list of teeth.
    corr
        Stationary or general correlator.  A regulated stationary correlator
        with ``epsilon=None`` is evaluated at three regulators proportional to
        the narrowest tooth width and extrapolated to ``eps -> 0``.
    method
        ``lapse`` integrates in the lapse variable; ``spectral`` integrates
        over field modes (mode-integral correlators only); ``auto`` prefers
        the spectral route when it is available.

    Raises
    ------
    QuadratureError
        When an adaptive integral fails to converge; the exception carries
        the best estimate and its residual.
    """
    quad = quad or DEFAULT_QUAD
    if method not in METHODS:
        raise InvalidParameterError(f"unknown method {method!r}; expected one of {METHODS}")
    fteeth, gteeth = as_teeth(f), as_teeth(g)
    gap = float(gap)

    if not getattr(corr, "stationary", False):
        value, error, evals = _lapse_general(fteeth, gteeth, gap, corr, quad)
        out = FunctionalResult(value, error, "lapse", evals, quad_error=error)
        return out if full_output else out.value

    spectral = corr.spectral is not None and method in ("auto", "spectral")
    if method == "spectral" and corr.spectral is None:
        raise InvalidParameterError("the spectral route needs a mode-integral correlator")
    if spectral:
        value, error, evals = _spectral(fteeth, gteeth, gap, corr.spectral, corr.epsilon or 0.0, quad)
        out = FunctionalResult(value, error, "spectral", evals, quad_error=error)
        return out if full_output else out.value

    if corr.regulated and corr.epsilon is None:
        t_char = min(t.eta for t in fteeth + gteeth)
        eps = tuple(fac * t_char for fac in EPS_FACTORS)
        values, errors, evals = _lapse_stationary(fteeth, gteeth, gap, corr, eps, quad)
        value, extrap_err = extrapolate_to_zero(eps, values)
        qerr = float(errors.max())
        out = FunctionalResult(complex(value), extrap_err + qerr, "lapse", evals, eps,
                               tuple(complex(v) for v in values), qerr)
    else:
        eps = corr.epsilon or 0.0
        values, errors, evals = _lapse_stationary(fteeth, gteeth, gap, corr, eps, quad)
        value, error = complex(values[0]), float(errors[0])
        out = FunctionalResult(value, error, "lapse", evals, (eps,), (value,), error)
    return out if full_output else out.value


# probabilities ---------------------------------------------------------

def _check_perturbative(p, coupling):
    if coupling and p >= PERTURBATIVE_LIMIT:
        warnings.warn(f"single-tooth probability {p:.3g} is not small; the leading-order "
                      "result is unreliable", PerturbativityWarning, stacklevel=3)


def local_term(n, comb, det, corr, *, quad=None, full_output=False):
    """``lambda^2 W[xi_n, xi_n]``, the probability from tooth ``n`` alone."""
    res = functional_W(comb.tooth_at(n), comb.tooth_at(n), det.gap, corr, quad=quad, full_output=True)
    lam2 = det.coupling**2
    value = lam2 * res.value.real
    return (value, lam2 * res.error) if full_output else value


def _pair_sums(comb, gap, corr, quad, pairs):
    teeth = comb.teeth_list()
    workers = (quad or DEFAULT_QUAD).workers
    results = pmap(lambda p: functional_W(teeth[p[0]], teeth[p[1]], gap, corr, quad=quad, full_output=True),
                   pairs, workers)
    return dict(zip(pairs, results))


def nonlocal_correlations(comb, gap, corr, *, quad=None, full_output=False):
    """``C = sum_{m>=1} sum_n W[xi_{n+m}, xi_n]`` over distinct tooth pairs.

    A single tooth gives exactly zero.
    """
    pairs = [(n + m, n) for m in range(1, comb.teeth) for n in range(comb.teeth - m)]
    results = _pair_sums(comb, gap, corr, quad, pairs)
    value = complex(sum(results[p].value for p in pairs)) if pairs else 0j
    error = float(sum(results[p].error for p in pairs))
    return (value, error) if full_output else value


def excitation_probability(comb, det, corr, *, quad=None, direct=True):
    """Excitation probability of a detector switched by ``comb``.

    The probability is computed directly from the full comb and, separately,
    from its local and non-local parts; the difference is folded into the
    reported error.  With ``direct=False`` only the decomposition is used.
    """
    if not isinstance(comb, Comb):
        raise InvalidParameterError("excitation_probability needs a Comb")
    lam2 = det.coupling**2
    N = comb.teeth
    pairs = [(n, n) for n in range(N)] + [(n + m, n) for m in range(1, N) for n in range(N - m)]
    results = _pair_sums(comb, det.gap, corr, quad, pairs)
    local = tuple(lam2 * results[(n, n)].value.real for n in range(N))
    c = complex(sum(results[(n + m, n)].value for m in range(1, N) for n in range(N - m))) if N > 1 else 0j
    decomposed = float(sum(local) + 2.0 * lam2 * c.real)
    error = lam2 * float(sum(r.error for r in results.values()))
    total = decomposed
    if direct and N > 1:
        res = functional_W(comb, comb, det.gap, corr, quad=quad, full_output=True)
        total = lam2 * res.value.real
        error += lam2 * res.error + abs(total - decomposed)
    _check_perturbative(max(local), det.coupling)
    return ProbeOutcome(total, local, c, error, det.coupling, decomposed,
                        {p: r.value for p, r in results.items()})


def stationary_probability(comb, det, corr, *, quad=None):
    """Excitation probability using shift invariance of a stationary correlator.

    ``P = N P_single + 2 lambda^2 Re sum_m (N - m) W[xi_m, xi_0]``
    """
    require_stationary(corr, "stationary_probability")
    lam2 = det.coupling**2
    N = comb.teeth
    pairs = [(m, 0) for m in range(N)]
    results = _pair_sums(comb, det.gap, corr, quad, pairs)
    single = lam2 * results[(0, 0)].value.real
    c = complex(sum((N - m) * results[(m, 0)].value for m in range(1, N))) if N > 1 else 0j
    total = N * single + 2.0 * lam2 * c.real
    error = lam2 * float(sum((N - m) * results[(m, 0)].error for m in range(N)))
    _check_perturbative(single, det.coupling)
    return ProbeOutcome(total, (single,) * N, c, error, det.coupling, total,
                        {p: r.value for p, r in results.items()})
