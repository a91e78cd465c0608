"""Flat-spacetime worldlines parametrised by proper time (c = 1)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidParameterError

KINDS = ("inertial", "uniformly_accelerated")


@dataclass(frozen=True)
class Event:
    t: float
    x: tuple

    @property
    def dim(self):
        return len(self.x)


@dataclass(frozen=True)
class Worldline:
    """Inertial line ``(gamma tau, x0 + gamma v tau)`` or the hyperbola of
    proper acceleration ``a`` along the first spatial axis."""

    kind: str = "inertial"
    dim: int = 3
    velocity: tuple = field(default=())
    offset: tuple = field(default=())
    acceleration: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown trajectory kind {self.kind!r}; expected one of {KINDS}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidParameterError("spatial dimension must be an integer >= 1")
        v = tuple(float(c) for c in self.velocity) or (0.0,) * self.dim
        x0 = tuple(float(c) for c in self.offset) or (0.0,) * self.dim
        if len(v) != self.dim or len(x0) != self.dim:
            raise InvalidParameterError("velocity and offset must have one component per spatial dimension")
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "offset", x0)
        if self.kind == "inertial":
            if np.dot(v, v) >= 1.0:
                raise InvalidParameterError("inertial speed must be below 1 (c = 1)")
        elif not (np.isfinite(self.acceleration) and self.acceleration > 0):
            raise InvalidParameterError("proper acceleration must be positive")

    @classmethod
    def inertial(cls, velocity=(), offset=(), dim=3):
        return cls("inertial", dim, tuple(velocity), tuple(offset))

    @classmethod
    def accelerated(cls, a, dim=3):
        return cls("uniformly_accelerated", dim, acceleration=float(a))

    @property
    def gamma(self):
        return 1.0 / np.sqrt(1.0 - np.dot(self.velocity, self.velocity))

    @property
    def at_rest(self):
        return self.kind == "inertial" and not any(self.velocity)

    def coordinates(self, tau):
        """Vectorised ``(t, x)`` with ``x`` of shape ``tau.shape + (dim,)``."""
        tau = np.asarray(tau, dtype=float)
        if self.kind == "inertial":
            g = self.gamma
            t = g * tau
            x = np.asarray(self.offset) + g * tau[..., None] * np.asarray(self.velocity)
            return t, x
        a = self.acceleration
        t = np.sinh(a * tau) / a
        x = np.zeros(tau.shape + (self.dim,))
        x[..., 0] = np.cosh(a * tau) / a
        return t, x


def position(w, tau):
    t, x = w.coordinates(float(tau))
    return Event(float(t), tuple(float(c) for c in x))


def interval(e1, e2, *, rtol=1e-12):
    """Signed proper interval ``sqrt((t1-t2)^2 - |x1-x2|^2) * sign(t1-t2)``.

    Raises :class:`DomainError` for spacelike separations (beyond round-off).
    """
    if e1.dim != e2.dim:
        raise InvalidParameterError("events live in different dimensions")
    dt = e1.t - e2.t
    r = float(np.linalg.norm(np.subtract(e1.x, e2.x)))
    sq = (abs(dt) - r) * (abs(dt) + r)
    if sq < 0.0:
        if -sq > rtol * (dt * dt + r * r):
            raise DomainError("events are spacelike separated; only timelike or null pairs can be probed")
        sq = 0.0
    return float(np.sign(dt) * np.sqrt(sq))


def proper_lapse(w, tau1, tau2):
    """Interval between the worldline events at ``tau1`` and ``tau2``."""
    return interval(position(w, tau1), position(w, tau2))


def four_velocity_norm(w, tau, step=1e-4):
    """Central-difference estimate of ``dx/dtau . dx/dtau`` (mostly-plus metric)."""
    tau = np.asarray(tau, dtype=float)
    tp, xp = w.coordinates(tau + step)
    tm, xm = w.coordinates(tau - step)
    tdot = (tp - tm) / (2 * step)
    xdot = (xp - xm) / (2 * step)
    return -tdot**2 + (xdot**2).sum(axis=-1)
