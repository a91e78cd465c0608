"""Two-point correlators pulled back to a detector worldline.

Every stationary correlator is a function of the proper-time lapse ``s``.
The distributional kernels are regulated by ``s -> s - i*eps`` (closed
forms) or by ``exp(-eps*omega)`` damping (mode integrals).  When a
correlator has ``epsilon=None`` the ``eps -> 0`` limit is taken by
evaluating at ``eps = (1e-2, 5e-3, 2.5e-3) * t_char`` and extrapolating.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from .errors import (ContractViolationError, DomainError, InvalidParameterError,
                     IRDivergenceError, NotSupportedError)
from .quadrature import extrapolate_to_zero, graded_points, integrate, subdivide
from .trajectories import Worldline

log = logging.getLogger(__name__)

STATES = ("vacuum", "thermal", "single_mode")
EPS_FACTORS = (1e-2, 5e-3, 2.5e-3)
DEFAULT_IMAGES = 64
# exp(-eps*omega) below this is dropped from mode integrals
MODE_CUTOFF = 1e-16

_FOUR_PI2 = 4.0 * np.pi**2


@dataclass(frozen=True)
class CorrelatorSpec:
    """Field, state, worldline and regulator of a two-point correlator.

    Parameters
    ----------
    mass, dim
        Field mass ``m >= 0`` and spatial dimension ``d`` in {1, 2, 3}.
    state
        ``vacuum``, ``thermal`` (needs ``beta``) or ``single_mode`` (needs
        ``omega``; occupation ``n``).
    trajectory
        Worldline the field is pulled back to.
    epsilon
        Fixed regulator, or ``None`` for the extrapolated ``eps -> 0`` limit.
    ir_cutoff
        Lower momentum cutoff; required for massless ``d = 1``.
    """

    mass: float = 0.0
    dim: int = 3
    state: str = "vacuum"
    beta: float | None = None
    omega: float | None = None
    n: float = 0
    trajectory: Worldline = field(default_factory=Worldline)
    epsilon: float | None = None
    ir_cutoff: float | None = None
    images: int = DEFAULT_IMAGES

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise InvalidParameterError(f"spatial dimension must be 1, 2 or 3, got {self.dim!r}")
        if not (np.isfinite(self.mass) and self.mass >= 0):
            raise InvalidParameterError("field mass must be >= 0")
        if self.state not in STATES:
            raise InvalidParameterError(f"unknown state {self.state!r}; expected one of {STATES}")
        if self.state == "thermal" and not (self.beta is not None and self.beta > 0):
            raise InvalidParameterError("thermal state needs inverse temperature beta > 0")
        if self.state == "single_mode":
            if not (self.omega is not None and self.omega > 0):
                raise InvalidParameterError("single_mode state needs frequency omega > 0")
            if not self.n >= 0:
                raise InvalidParameterError("occupation n must be >= 0")
        if self.epsilon is not None and not self.epsilon > 0:
            raise InvalidParameterError("regulator epsilon must be positive (or None for the limit)")
        if self.ir_cutoff is not None and not self.ir_cutoff > 0:
            raise InvalidParameterError("ir_cutoff must be positive")
        if self.dim == 1 and self.mass == 0 and self.ir_cutoff is None and self.state != "single_mode":
            raise IRDivergenceError(
                "massless field in d=1 has an infrared divergence; give a mass or an ir_cutoff")
        if int(self.images) != self.images or self.images < 1:
            raise InvalidParameterError("images must be a positive integer")
        if self.trajectory.dim != self.dim:
            object.__setattr__(self, "trajectory", _with_dim(self.trajectory, self.dim))


def _with_dim(w, dim):
    if w.kind == "inertial":
        if any(w.velocity) or any(w.offset):
            raise InvalidParameterError("trajectory dimension does not match field dimension")
        return Worldline.inertial(dim=dim)
    return Worldline.accelerated(w.acceleration, dim=dim)


@dataclass(frozen=True)
class SpectralDensity:
    """Mode-sum representation ``W_eps(s) = int dk J(k) exp(-i w_k (s - i eps))``."""

    dim: int
    mass: float
    kmin: float = 0.0

    def weight(self, k):
        k = np.asarray(k, dtype=float)
        w = np.sqrt(k * k + self.mass**2)
        return _mode_constant(self.dim) * k ** (self.dim - 1) / (2.0 * w * (2.0 * np.pi) ** self.dim)

    def frequency(self, k):
        return np.sqrt(np.asarray(k, dtype=float) ** 2 + self.mass**2)


def _mode_constant(d):
    return 2.0 ** (1 - d) * np.pi ** (d / 2) / special.gamma(d / 2)


@dataclass(frozen=True)
class StationaryCorrelator:
    """Stationary pullback ``W(s)`` with ``s = tau - tau'``.

    ``kernel(s, eps)`` evaluates the regulated kernel on arrays.  Calling the
    correlator uses its own ``epsilon``, or the extrapolated limit when that
    is ``None`` and the kernel needs a regulator.
    """

    kernel: object
    label: str
    epsilon: float | None = None
    regulated: bool = True
    frequency: float = 0.0
    decay_time: float = math.inf
    bound: float | None = None
    closed_form: bool = False
    spectral: SpectralDensity | None = None
    spec: CorrelatorSpec | None = None

    stationary = True

    def __call__(self, s):
        if self.epsilon is None and self.regulated:
            return self.limit(s)
        return self.evaluate(s, self.epsilon or 0.0)

    def evaluate(self, s, eps):
        s = np.asarray(s, dtype=float)
        out = np.asarray(self.kernel(s, float(eps)), dtype=complex)
        return out if out.ndim else complex(out)

    def limit(self, s, full_output=False):
        """``eps -> 0`` value at real ``s != 0`` (``t_char = |s|``)."""
        s = np.asarray(s, dtype=float)
        if not self.regulated:
            val = self.evaluate(s, 0.0)
            return (val, np.zeros(np.shape(s))) if full_output else val
        if np.any(s == 0):
            raise DomainError("the Wightman kernel is singular at zero lapse")
        flat = np.ravel(s)
        eps = np.outer(EPS_FACTORS, np.abs(flat))
        vals = np.array([np.ravel(self.evaluate(flat, e[0])) if _uniform(e) else
                         np.array([self.evaluate(x, ei) for x, ei in zip(flat, e)])
                         for e in eps])
        est = np.empty(flat.size, dtype=complex)
        err = np.empty(flat.size)
        for j in range(flat.size):
            est[j], err[j] = extrapolate_to_zero(eps[:, j], vals[:, j])
        est = est.reshape(s.shape)
        err = err.reshape(s.shape)
        if not est.ndim:
            est, err = complex(est), float(err)
        return (est, err) if full_output else est

    def reference(self, s):
        """Exact ``eps -> 0`` value at ``s != 0`` for closed-form correlators."""
        if not self.closed_form:
            return None
        if np.any(np.asarray(s) == 0) and self.regulated:
            raise DomainError("the Wightman kernel is singular at zero lapse")
        return self.evaluate(s, 0.0)

    def with_epsilon(self, epsilon):
        return replace(self, epsilon=epsilon)


def _uniform(e):
    return np.all(e == e[0])


@dataclass(frozen=True)
class TwoPointCorrelator:
    """General, possibly non-stationary, correlator ``W(tau, tau')``.

    ``kernel(tau, tau_prime)`` acts on broadcastable arrays and must be
    smooth (no regulator is applied).
    """

    kernel: object
    label: str = "general"
    frequency: float = 0.0

    stationary = False
    regulated = False
    epsilon = None
    spec = None
    spectral = None

    def __call__(self, tau, tau_prime):
        out = np.asarray(self.kernel(np.asarray(tau, float), np.asarray(tau_prime, float)), dtype=complex)
        return out if out.ndim else complex(out)


def require_stationary(corr, what="operation"):
    if not getattr(corr, "stationary", False):
        raise ContractViolationError(f"{what} needs a stationary correlator, got {type(corr).__name__}")
    return corr


# closed forms -----------------------------------------------------------

def _inertial_vacuum(s, eps):
    z = s - 1j * eps
    return -1.0 / (_FOUR_PI2 * z * z)


def _csch2(x):
    """``1/sinh(x)**2`` for complex ``x`` without overflow."""
    x = np.asarray(x, dtype=complex)
    x = np.where(x.real < 0, -x, x)
    big = x.real > 20.0
    # sinh is accurate near zero; the exponential form avoids overflow far out
    xs = np.where(big, 1.0, x)
    q = np.exp(-2.0 * np.where(big, x, 20.0))
    return np.where(big, 4.0 * q / (1.0 - q) ** 2, 1.0 / np.sinh(xs) ** 2)


def _accelerated_vacuum(a):
    def kernel(s, eps):
        return -(a * a) / (16.0 * np.pi**2) * _csch2(0.5 * a * (s - 1j * eps))
    return kernel


def _image_derivative(z, c, x, k):
    # k-th x-derivative of (z + c*x)^-2
    return (-1) ** k * math.factorial(k + 1) * c**k * (z + c * x) ** (-(k + 2))


def _thermal(beta, images):
    def kernel(s, eps):
        s = np.asarray(s, dtype=float)
        z = np.ravel(s) - 1j * eps
        out = np.empty(z.shape, dtype=complex)
        n = np.arange(1, images + 1)
        for start in range(0, z.size, 4096):
            zc = z[start:start + 4096, None]
            total = 1.0 / zc[:, 0] ** 2
            total = total + (1.0 / (zc + 1j * n * beta) ** 2 + 1.0 / (zc - 1j * n * beta) ** 2).sum(axis=1)
            # midpoint Euler-Maclaurin estimate of the images beyond K
            x0 = images + 0.5
            zz = zc[:, 0]
            tail = -2.0 * x0 / (zz * zz + (x0 * beta) ** 2)
            for sign in (1j * beta, -1j * beta):
                tail = tail + _image_derivative(zz, sign, x0, 1) / 24.0
                tail = tail - 7.0 * _image_derivative(zz, sign, x0, 3) / 5760.0
            out[start:start + 4096] = -(total + tail) / _FOUR_PI2
        return out.reshape(s.shape)
    return kernel


VALID_CLOSED_FORMS = ("vacuum on inertial or uniformly accelerated worldlines",
                      "thermal on an inertial worldline at rest")


def closed_form_pullback(spec):
    """Closed-form massless ``d = 3`` correlator along the spec's worldline.

    Raises
    ------
    NotSupportedError
        For any combination other than those in ``VALID_CLOSED_FORMS``.
    """
    w = spec.trajectory
    valid = f"closed forms exist only for m=0, d=3 and {' or '.join(VALID_CLOSED_FORMS)}"
    if spec.mass != 0 or spec.dim != 3:
        raise NotSupportedError(valid)
    if spec.state == "vacuum" and w.kind == "inertial":
        return StationaryCorrelator(_inertial_vacuum, "inertial_vacuum", spec.epsilon,
                                    closed_form=True, spec=spec)
    if spec.state == "vacuum":
        a = w.acceleration
        return StationaryCorrelator(_accelerated_vacuum(a), f"accelerated_vacuum(a={a:g})", spec.epsilon,
                                    frequency=a, decay_time=1.0 / a, closed_form=True, spec=spec)
    if spec.state == "thermal" and w.at_rest:
        beta = spec.beta
        return StationaryCorrelator(_thermal(beta, spec.images), f"inertial_thermal(beta={beta:g})",
                                    spec.epsilon, frequency=2.0 * np.pi / beta,
                                    decay_time=beta / (2.0 * np.pi), closed_form=True, spec=spec)
    raise NotSupportedError(valid)


# mode integrals ---------------------------------------------------------

def _mode_kernel(density, rtol):
    def one(s, eps):
        if not eps > 0:
            raise DomainError("mode integrals need a positive regulator epsilon")
        wmax = -math.log(MODE_CUTOFF) / eps
        if wmax <= density.mass:
            return 0j
        kmax = math.sqrt(wmax * wmax - density.mass**2)
        width = min(kmax / 8.0, np.pi / (4.0 * abs(s)) if s else math.inf)
        # resolve the massive phase near k = 0 and the exp(-eps w) roll-off
        bp = subdivide([density.kmin, kmax], width)

        m2 = density.mass**2

        def f(k):
            # w = k + m^2/(w + k): keeps the large phase k*s free of sqrt rounding
            dw = m2 / (density.frequency(k) + k) if m2 else 0.0
            return density.weight(k) * np.exp(-(1j * s + eps) * k) * np.exp(-(1j * s + eps) * dw)

        return integrate(f, bp, rtol=rtol, max_depth=10).value

    def kernel(s, eps):
        s = np.asarray(s, dtype=float)
        out = np.array([one(float(x), eps) for x in np.ravel(s)], dtype=complex)
        return out.reshape(s.shape)
    return kernel


def mode_integral_correlator(spec, rtol=1e-12):
    """Vacuum Wightman function as a regulated mode integral on an inertial worldline.

    ``W_eps(s) = int_0^inf dw / (2 pi)^d * D_d(w, m) / (2 w) * exp(-i w (s - i eps))``
    is evaluated in the momentum variable, cut where ``exp(-eps w) < 1e-16``.
    """
    if spec.trajectory.kind != "inertial":
        raise NotSupportedError("mode integrals are implemented for inertial worldlines only")
    if spec.state != "vacuum":
        raise NotSupportedError("mode integrals are implemented for the vacuum state only")
    if spec.dim == 1 and spec.mass == 0 and spec.ir_cutoff is None:
        raise IRDivergenceError("massless field in d=1 has an infrared divergence")
    density = SpectralDensity(spec.dim, spec.mass, spec.ir_cutoff or 0.0)
    return StationaryCorrelator(_mode_kernel(density, rtol), f"mode_integral(d={spec.dim},m={spec.mass:g})",
                                spec.epsilon, frequency=spec.mass, spectral=density, spec=spec)


# toys -------------------------------------------------------------------

def single_mode_correlator(omega, n=0):
    """``W(s) = (n+1) exp(-i w s) + n exp(i w s)``: one mode with occupation ``n``."""
    if not (np.isfinite(omega) and omega > 0):
        raise InvalidParameterError("mode frequency must be positive")
    if not n >= 0:
        raise InvalidParameterError("occupation must be >= 0")

    def kernel(s, eps):
        return (n + 1) * np.exp(-1j * omega * s) + n * np.exp(1j * omega * s)

    return StationaryCorrelator(kernel, f"single_mode(omega={omega:g},n={n:g})", None, regulated=False,
                                frequency=omega, bound=2 * n + 1, closed_form=True)


def constant_correlator(c):
    c = complex(c)

    def kernel(s, eps):
        return np.full(np.shape(s), c)

    return StationaryCorrelator(kernel, f"constant({c})", None, regulated=False, bound=abs(c), closed_form=True)


def build_correlator(spec, method="auto"):
    """Pick the closed form when available, else the mode integral."""
    if spec.state == "single_mode":
        return single_mode_correlator(spec.omega, spec.n)
    if method not in ("auto", "closed_form", "mode_integral"):
        raise InvalidParameterError(f"unknown correlator method {method!r}")
    if method == "closed_form" or (method == "auto" and spec.mass == 0 and spec.dim == 3):
        return closed_form_pullback(spec)
    return mode_integral_correlator(spec)


# spectra ----------------------------------------------------------------

def adiabatic_rate(corr, gap, *, window=200.0, epsilon=None, rtol=1e-10, full_output=False):
    """Long-time response rate ``W~(gap) = int ds exp(-i gap s) W(s)``.

    The integrand is tapered by ``exp(-s^2 / (2 window^2))`` and the
    regulated kernel ``W(s - i eps)`` is integrated along the real axis;
    the factor ``exp(-eps gap)`` undoes the contour shift exactly.

    Returns the real part, or ``(value, imag_residue, error)`` with
    ``full_output``.
    """
    require_stationary(corr, "adiabatic_rate")
    if not window > 0:
        raise InvalidParameterError("window must be positive")
    eps = epsilon if epsilon is not None else (corr.epsilon or 0.1 * min(1.0, corr.decay_time))
    if not corr.regulated:
        eps = 0.0
    extent = min(8.0 * window, 60.0 * corr.decay_time)
    scale = max(abs(gap), corr.frequency)
    width = np.pi / (4.0 * scale) if scale > 0 else extent / 64.0
    bp = [-extent, 0.0, extent]
    if corr.regulated:
        bp = np.concatenate([bp, graded_points(0.0, eps, min(extent, 4.0 * max(1.0, corr.decay_time)))])
    bp = subdivide(bp, width)

    def f(s):
        return np.exp(-1j * gap * s - 0.5 * (s / window) ** 2) * corr.evaluate(s, eps)

    res = integrate(f, bp, rtol=rtol, atol=1e-14, max_depth=14)
    value = complex(res.value) * math.exp(-eps * gap)
    if full_output:
        return value.real, value.imag, res.error
    return value.real


def commutator_spectrum(corr, gap, **kwargs):
    """``C(gap) = W~(gap) - W~(-gap)``: the Fourier transform of the field commutator."""
    return adiabatic_rate(corr, gap, **kwargs) - adiabatic_rate(corr, -gap, **kwargs)
