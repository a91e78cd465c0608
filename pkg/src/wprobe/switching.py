"""Tooth profiles, nascent deltas and comb switching functions.

A tooth is a unit-area, symmetric, non-negative profile ``phi(u)``.  A
nascent delta rescales it to width ``eta`` around a centre,
``phi_eta(tau) = phi((tau - centre) / eta) / eta``, and a comb places ``N``
copies of one nascent delta at ``tau0 + l*zeta`` for ``l = 0 .. N-1``.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from .errors import InvalidParameterError, OverlapWarning
from .quadrature import composite_unit_rule

SHAPES = ("gaussian", "smooth_bump")
DEFAULT_TAIL_TOL = 1e-12

_SQRT2PI = np.sqrt(2.0 * np.pi)


def _bump_raw(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ui * ui))
    return out


@functools.lru_cache(maxsize=None)
def _bump_norm():
    nodes, weights = composite_unit_rule(512)
    return 2.0 * float(np.dot(weights, _bump_raw(nodes)))


def _pdf(kind, u):
    u = np.asarray(u, dtype=float)
    if kind == "gaussian":
        return np.exp(-0.5 * u * u) / _SQRT2PI
    return _bump_raw(u) / _bump_norm()


@functools.lru_cache(maxsize=None)
def _check_unit_area(kind):
    h = 9.0 if kind == "gaussian" else 1.0
    nodes, weights = composite_unit_rule(64)
    u = -h + 2.0 * h * nodes
    area = 2.0 * h * np.dot(weights, _pdf(kind, u))
    if abs(area - 1.0) > 1e-10:
        raise InvalidParameterError(f"{kind} tooth has area {area!r}, expected 1")
    return area


@dataclass(frozen=True)
class ToothShape:
    """Unit-width tooth profile: ``gaussian`` or ``smooth_bump``.

    The gaussian is the standard normal density; the smooth bump is
    ``C exp(-1/(1-u^2))`` on ``(-1, 1)`` and zero outside.
    """

    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind not in SHAPES:
            raise InvalidParameterError(f"unknown tooth shape {self.kind!r}; expected one of {SHAPES}")
        _check_unit_area(self.kind)

    def pdf(self, u):
        return _pdf(self.kind, u)

    def support_halfwidth(self, tail_tol=DEFAULT_TAIL_TOL):
        """Half-width (unit tooth) outside which less than ``tail_tol`` of the mass lies."""
        if not 0.0 < tail_tol < 1.0:
            raise InvalidParameterError("tail_tol must lie in (0, 1)")
        if self.kind == "gaussian":
            return float(np.sqrt(2.0) * special.erfcinv(tail_tol))
        return 1.0

    @property
    def resolution(self):
        """Length scale (unit tooth) that a quadrature panel must resolve."""
        return 1.0 if self.kind == "gaussian" else 1.0 / 16.0

    @property
    def spectral_extent(self):
        """Unit-tooth frequency beyond which ``|phi~|**2`` is below ~1e-16."""
        return 9.0 if self.kind == "gaussian" else 200.0

    def fourier(self, k):
        """``int phi(u) exp(-i k u) du`` (real, since teeth are symmetric)."""
        k = np.asarray(k, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * k * k)
        return _bump_fourier(k)


def _bump_fourier(k):
    flat = np.abs(np.ravel(k))
    out = np.empty_like(flat)
    # group by oscillation count so each group uses an adequate panel count
    order = np.argsort(flat)
    chunk = 2048
    for start in range(0, flat.size, chunk):
        idx = order[start:start + chunk]
        kmax = flat[idx].max() if idx.size else 0.0
        panels = int(max(32, np.ceil(kmax / 1.5)))
        nodes, weights = composite_unit_rule(panels)
        vals = _bump_raw(nodes) / _bump_norm()
        # symmetric profile: 2 * int_0^1 phi(u) cos(k u) du
        out[idx] = 2.0 * (np.cos(flat[idx, None] * nodes[None, :]) * (weights * vals)[None, :]).sum(axis=1)
    return out.reshape(np.shape(k))


GAUSSIAN = ToothShape("gaussian")
SMOOTH_BUMP = ToothShape("smooth_bump")


def shape_from_name(name):
    if isinstance(name, ToothShape):
        return name
    return ToothShape(name)


@dataclass(frozen=True)
class NascentDelta:
    shape: ToothShape
    eta: float
    center: float = 0.0

    def __post_init__(self):
        if isinstance(self.shape, str):
            object.__setattr__(self, "shape", shape_from_name(self.shape))
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise InvalidParameterError(f"tooth width eta must be positive, got {self.eta!r}")

    def __call__(self, tau):
        return eval_tooth(self, tau)

    def halfwidth(self, tail_tol=DEFAULT_TAIL_TOL):
        return self.eta * self.shape.support_halfwidth(tail_tol)

    def shifted(self, center):
        return replace(self, center=float(center))


@dataclass(frozen=True)
class Comb:
    """``teeth`` copies of ``tooth`` centred at ``tau0 + l*zeta``, ``l = 0..teeth-1``.

    Only the shape and width of ``tooth`` are used; its own centre is ignored.
    """

    tooth: NascentDelta
    tau0: float
    zeta: float
    teeth: int

    def __post_init__(self):
        if not (np.isfinite(self.zeta) and self.zeta > 0):
            raise InvalidParameterError(f"lapse zeta must be positive, got {self.zeta!r}")
        if int(self.teeth) != self.teeth or self.teeth < 1:
            raise InvalidParameterError(f"teeth must be a positive integer, got {self.teeth!r}")
        object.__setattr__(self, "teeth", int(self.teeth))
        if self.teeth > 1 and self.zeta <= 2.0 * self.tooth.halfwidth():
            warnings.warn(
                f"comb teeth overlap: zeta={self.zeta:g} <= tooth support width "
                f"{2.0 * self.tooth.halfwidth():g}", OverlapWarning, stacklevel=3)

    @property
    def eta(self):
        return self.tooth.eta

    @property
    def shape(self):
        return self.tooth.shape

    def centers(self):
        return self.tau0 + self.zeta * np.arange(self.teeth)

    def tooth_at(self, l):
        if not 0 <= l < self.teeth:
            raise IndexError(f"tooth index {l} outside 0..{self.teeth - 1}")
        return self.tooth.shifted(self.tau0 + l * self.zeta)

    def teeth_list(self):
        return [self.tooth_at(l) for l in range(self.teeth)]

    def with_eta(self, eta):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OverlapWarning)
            return replace(self, tooth=replace(self.tooth, eta=float(eta)))

    def __call__(self, tau):
        return eval_comb(self, tau)


def make_comb(shape="gaussian", eta=0.05, tau0=0.0, zeta=1.0, teeth=2):
    return Comb(NascentDelta(shape_from_name(shape), eta, 0.0), tau0, zeta, teeth)


def eval_tooth(delta, tau):
    """Value of the nascent delta ``phi((tau - centre)/eta) / eta``."""
    if not delta.eta > 0:
        raise InvalidParameterError("eta must be positive")
    tau = np.asarray(tau, dtype=float)
    out = delta.shape.pdf((tau - delta.center) / delta.eta) / delta.eta
    return out if out.ndim else float(out)


def eval_comb(comb, tau):
    tau = np.asarray(tau, dtype=float)
    total = np.zeros_like(tau)
    for l in range(comb.teeth):
        total = total + eval_tooth(comb.tooth_at(l), tau)
    return total if total.ndim else float(total)


def tooth_support(delta, tail_tol=DEFAULT_TAIL_TOL):
    """Symmetric truncation window ``(lo, hi)`` holding all but ``tail_tol`` of the mass."""
    h = delta.halfwidth(tail_tol)
    return (delta.center - h, delta.center + h)


def as_teeth(switching):
    """Normalise a tooth, a comb or a sequence of teeth to a list of teeth."""
    if isinstance(switching, NascentDelta):
        return [switching]
    if isinstance(switching, Comb):
        return switching.teeth_list()
    teeth = list(switching)
    if not teeth or not all(isinstance(t, NascentDelta) for t in teeth):
        raise InvalidParameterError("switching function must be a NascentDelta, a Comb or a list of teeth")
    return teeth
