"""Two-kick reconstruction of the Wightman function from probabilities.

With two identical kicks a lapse ``zeta`` apart, the statistic

    S = (P_total - P_first - P_second) / (2 lambda^2)

tends to ``Re(exp(-i gap zeta) W(tau0 + zeta, tau0))`` as the kicks sharpen.
Tuning the gap so that ``gap * zeta`` is a multiple of ``2 pi`` picks out
``Re W``; a further quarter cycle picks out ``Im W``.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .delta_limit import richardson
from .errors import InvalidParameterError, OverlapWarning, WprobeError
from .quadrature import pmap
from .response import DEFAULT_QUAD, functional_W
from .switching import Comb, NascentDelta, shape_from_name

log = logging.getLogger(__name__)

ROUTES = ("measured", "direct")
MODES = ("even_cycles", "quarter_cycle")
CSV_COLUMNS = ("zeta", "re_w", "im_w", "re_ref", "im_ref", "abs_err", "rel_err", "flag")
# a probability difference below this multiple of its error is precision limited
CANCELLATION_MARGIN = 1e3


@dataclass(frozen=True)
class ProtocolConfig:
    """Settings of one reconstruction.

    ``eta_fractions`` are tooth widths in units of ``zeta``.  The two gaps
    are derived from ``zeta``, ``k_even`` and ``k_quarter`` and are never
    set directly.
    """

    zeta: float
    tau0: float = 0.0
    eta_fractions: tuple = (0.08, 0.04, 0.02, 0.01)
    k_even: int = 1
    k_quarter: int = 1
    coupling: float = 0.01
    route: str = "measured"
    shape: str = "gaussian"
    order: int = 2
    quad: object = None

    def __post_init__(self):
        if not (np.isfinite(self.zeta) and self.zeta > 0):
            raise InvalidParameterError("zeta must be positive")
        fr = tuple(float(f) for f in self.eta_fractions)
        object.__setattr__(self, "eta_fractions", fr)
        if len(fr) < 3 or any(f <= 0 for f in fr) or any(b >= a for a, b in zip(fr, fr[1:])):
            raise InvalidParameterError("eta_fractions must be >= 3 strictly decreasing positive numbers")
        if int(self.k_even) != self.k_even or self.k_even < 1:
            raise InvalidParameterError("k_even must be an integer >= 1")
        if int(self.k_quarter) != self.k_quarter or self.k_quarter < 0:
            raise InvalidParameterError("k_quarter must be an integer >= 0")
        if not (np.isfinite(self.coupling) and self.coupling > 0):
            raise InvalidParameterError("coupling must be positive")
        if self.route not in ROUTES:
            raise InvalidParameterError(f"route must be one of {ROUTES}")
        shape_from_name(self.shape)

    @property
    def etas(self):
        return tuple(f * self.zeta for f in self.eta_fractions)

    @property
    def gap_even(self):
        return synchronize_gap(self.zeta, self.k_even, "even_cycles")

    @property
    def gap_quarter(self):
        return synchronize_gap(self.zeta, self.k_quarter, "quarter_cycle")

    def at(self, zeta):
        kw = asdict(self)
        kw.update(zeta=float(zeta), quad=self.quad)
        return ProtocolConfig(**kw)


def statistic_S(p_total, p_first, p_second, coupling):
    """``(P_total - P_first - P_second) / (2 lambda^2)``."""
    if not coupling > 0:
        raise InvalidParameterError("coupling must be positive")
    return (p_total - p_first - p_second) / (2.0 * coupling**2)


def synchronize_gap(zeta, k, mode):
    """Gap ``2 pi k / zeta`` (``even_cycles``) or ``(2 pi k + pi/2) / zeta`` (``quarter_cycle``)."""
    if not zeta > 0:
        raise InvalidParameterError("zeta must be positive")
    if mode == "even_cycles":
        if k < 1:
            raise InvalidParameterError("even_cycles needs k >= 1")
        return 2.0 * np.pi * k / zeta
    if mode == "quarter_cycle":
        if k < 0:
            raise InvalidParameterError("quarter_cycle needs k >= 0")
        return (2.0 * np.pi * k + 0.5 * np.pi) / zeta
    raise InvalidParameterError(f"mode must be one of {MODES}")


@dataclass(frozen=True)
class StatisticRun:
    """``S(eta)`` over the schedule for one synchronised gap."""

    gap: float
    etas: tuple
    values: tuple
    errors: tuple
    limit: float
    limit_error: float
    order: int
    precision_limited: bool
    monotone: bool


def _two_kick_comb(cfg, eta):
    with warnings.catch_warnings():
        # gaussian tails always overlap at the 1e-12 mass level; harmless here
        warnings.simplefilter("ignore", OverlapWarning)
        return Comb(NascentDelta(shape_from_name(cfg.shape), eta, 0.0), cfg.tau0, cfg.zeta, 2)


def _statistic(cfg, corr, gap, eta):
    comb = _two_kick_comb(cfg, eta)
    quad = cfg.quad or DEFAULT_QUAD
    lam2 = cfg.coupling**2
    first, second = comb.tooth_at(0), comb.tooth_at(1)
    if cfg.route == "direct":
        r = functional_W(second, first, gap, corr, quad=quad, full_output=True)
        return r.value.real, r.error, False
    runs = [functional_W(f, f, gap, corr, quad=quad, full_output=True) for f in (comb, first, second)]
    p_total, p_first, p_second = (lam2 * r.value.real for r in runs)
    err = sum(r.error for r in runs) / 2.0
    diff = p_total - p_first - p_second
    limited = abs(diff) < CANCELLATION_MARGIN * lam2 * sum(r.quad_error for r in runs)
    return statistic_S(p_total, p_first, p_second, cfg.coupling), err, limited


def _run_gap(cfg, corr, gap):
    rows = [_statistic(cfg, corr, gap, eta) for eta in cfg.etas]
    values = [r[0] for r in rows]
    ex = richardson(cfg.etas, values, cfg.order)
    return StatisticRun(gap, cfg.etas, tuple(values), tuple(r[1] for r in rows), ex.value.real,
                        ex.error + max(r[1] for r in rows), ex.order, any(r[2] for r in rows), ex.monotone)


@dataclass(frozen=True)
class ReconstructionPoint:
    zeta: float
    tau0: float
    w: complex
    error: float
    route: str
    even: StatisticRun
    quarter: StatisticRun
    reference: complex | None = None
    flags: tuple = ()

    @property
    def abs_err(self):
        return abs(self.w - self.reference) if self.reference is not None else math.nan

    @property
    def rel_err(self):
        if self.reference is None or self.reference == 0:
            return math.nan
        return self.abs_err / abs(self.reference)


def _reference(corr, cfg):
    if getattr(corr, "stationary", False):
        return corr.reference(cfg.zeta) if corr.closed_form else None
    return None


def reconstruct_wightman(cfg, corr, *, full_output=False):
    """Estimate ``W(tau0 + zeta, tau0)`` from the two synchronised experiments.

    Returns ``S_even + i S_quarter`` extrapolated to ``eta -> 0``, or a
    :class:`ReconstructionPoint` with the per-width statistics when
    ``full_output`` is set.
    """
    even = _run_gap(cfg, corr, cfg.gap_even)
    quarter = _run_gap(cfg, corr, cfg.gap_quarter)
    w = complex(even.limit, quarter.limit)
    if not full_output:
        return w
    flags = []
    if even.precision_limited or quarter.precision_limited:
        flags.append("precision_limited")
    if not (even.monotone and quarter.monotone):
        flags.append("non_monotone")
    ref = _reference(corr, cfg)
    return ReconstructionPoint(cfg.zeta, cfg.tau0, w, even.limit_error + quarter.limit_error, cfg.route,
                               even, quarter, None if ref is None else complex(ref), tuple(flags))


@dataclass(frozen=True)
class FailedPoint:
    zeta: float
    message: str
    flags: tuple = ("failed",)


@dataclass
class ReconstructionResult:
    route: str
    points: list = field(default_factory=list)

    def rows(self):
        out = []
        for p in self.points:
            if isinstance(p, FailedPoint):
                out.append({"zeta": p.zeta, "re_w": math.nan, "im_w": math.nan, "re_ref": math.nan,
                            "im_ref": math.nan, "abs_err": math.nan, "rel_err": math.nan,
                            "flag": f"failed: {p.message}"})
                continue
            ref = p.reference
            out.append({"zeta": p.zeta, "re_w": p.w.real, "im_w": p.w.imag,
                        "re_ref": math.nan if ref is None else ref.real,
                        "im_ref": math.nan if ref is None else ref.imag,
                        "abs_err": p.abs_err, "rel_err": p.rel_err, "flag": ";".join(p.flags)})
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in self.rows():
                writer.writerow({k: _fmt(v) for k, v in row.items()})
        return path

    def report(self):
        """Per-point diagnostics as plain data (for the JSON convergence report)."""
        out = []
        for p in self.points:
            if isinstance(p, FailedPoint):
                out.append({"zeta": p.zeta, "failed": p.message})
                continue
            entry = {"zeta": p.zeta, "tau0": p.tau0, "route": p.route, "w": [p.w.real, p.w.imag],
                     "error": p.error, "flags": list(p.flags)}
            for name, run in (("even", p.even), ("quarter", p.quarter)):
                entry[name] = {"gap": run.gap, "etas": list(run.etas), "S": list(run.values),
                               "quad_errors": list(run.errors), "limit": run.limit,
                               "limit_error": run.limit_error, "order": run.order,
                               "precision_limited": run.precision_limited, "monotone": run.monotone}
            out.append(entry)
        return out

    @property
    def failed(self):
        return all(isinstance(p, FailedPoint) for p in self.points)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def reconstruction_sweep(zetas, cfg, corr, *, workers=None, csv_path=None):
    """Reconstruct ``W`` at each lapse in ``zetas``; failures are recorded and skipped."""
    zetas = [float(z) for z in zetas]
    if not zetas:
        raise InvalidParameterError("zeta grid is empty")
    if any(z <= 0 for z in zetas) or any(b <= a for a, b in zip(zetas, zetas[1:])):
        raise InvalidParameterError("zeta grid must be positive and strictly increasing")

    def run(z):
        try:
            return reconstruct_wightman(cfg.at(z), corr, full_output=True)
        except (WprobeError, ArithmeticError, ValueError) as exc:
            log.warning("reconstruction failed at zeta=%g: %s", z, exc)
            return FailedPoint(z, str(exc))

    result = ReconstructionResult(cfg.route, pmap(run, zetas, workers))
    if csv_path is not None:
        result.write_csv(csv_path)
    return result
