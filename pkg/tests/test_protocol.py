import math

import numpy as np
import pytest

from wprobe import (CorrelatorSpec, ProtocolConfig, Worldline, closed_form_pullback, reconstruct_wightman,
                    reconstruction_sweep, single_mode_correlator, statistic_S, synchronize_gap)
from wprobe.errors import InvalidParameterError

ACC = closed_form_pullback(CorrelatorSpec(trajectory=Worldline.accelerated(1.0)))
TH = closed_form_pullback(CorrelatorSpec(state="thermal", beta=2 * np.pi))


def w_acc(s):
    return -1 / (16 * np.pi**2 * np.sinh(s / 2) ** 2)


def test_statistic_definition():
    assert statistic_S(0.5, 0.1, 0.2, 0.5) == pytest.approx(0.4)
    with pytest.raises(InvalidParameterError):
        statistic_S(1.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("zeta,k", [(0.5, 1), (2.0, 3)])
def test_synchronised_gaps(zeta, k):
    even = synchronize_gap(zeta, k, "even_cycles")
    quarter = synchronize_gap(zeta, k, "quarter_cycle")
    assert np.exp(-1j * even * zeta) == pytest.approx(1.0, abs=1e-12)
    assert np.exp(-1j * quarter * zeta) == pytest.approx(-1j, abs=1e-12)


@pytest.mark.parametrize("mode,k", [("even_cycles", 0), ("quarter_cycle", -1), ("half_cycle", 1)])
def test_synchronise_rejects_bad_input(mode, k):
    with pytest.raises(InvalidParameterError):
        synchronize_gap(1.0, k, mode)


def test_config_derives_gaps_and_widths():
    cfg = ProtocolConfig(zeta=2.0)
    assert cfg.etas == pytest.approx((0.16, 0.08, 0.04, 0.02))
    assert cfg.gap_even == pytest.approx(np.pi)
    assert cfg.at(1.0).zeta == 1.0 and cfg.at(1.0).gap_even == pytest.approx(2 * np.pi)


@pytest.mark.parametrize("kwargs", [dict(zeta=0.0), dict(zeta=1.0, eta_fractions=(0.1, 0.05)),
                                    dict(zeta=1.0, eta_fractions=(0.1, 0.2, 0.05)),
                                    dict(zeta=1.0, k_even=0), dict(zeta=1.0, coupling=0.0),
                                    dict(zeta=1.0, route="telepathy"), dict(zeta=1.0, shape="boxcar")])
def test_invalid_protocol_config(kwargs):
    with pytest.raises(InvalidParameterError):
        ProtocolConfig(**kwargs)


@pytest.mark.parametrize("zeta", [0.5, 1.0])
def test_reconstruction_against_closed_form(zeta):
    point = reconstruct_wightman(ProtocolConfig(zeta=zeta), ACC, full_output=True)
    assert point.w == pytest.approx(w_acc(zeta), rel=1e-5)
    assert point.reference == pytest.approx(w_acc(zeta), rel=1e-14)
    assert point.rel_err < 1e-5 and not point.flags


def test_routes_agree():
    measured = reconstruct_wightman(ProtocolConfig(zeta=1.0, route="measured"), ACC, full_output=True)
    direct = reconstruct_wightman(ProtocolConfig(zeta=1.0, route="direct"), ACC, full_output=True)
    assert abs(measured.w - direct.w) <= measured.error + direct.error
    assert abs(measured.w - direct.w) <= 1e-8 * abs(direct.w)


def test_tau0_independence():
    a = reconstruct_wightman(ProtocolConfig(zeta=1.0, tau0=0.0), ACC)
    b = reconstruct_wightman(ProtocolConfig(zeta=1.0, tau0=1.7), ACC)
    assert abs(a - b) <= 1e-6 * abs(a)


def test_unruh_reconstructions_agree():
    cfg = ProtocolConfig(zeta=0.5)
    assert reconstruct_wightman(cfg, TH) == pytest.approx(reconstruct_wightman(cfg, ACC), rel=1e-6)


def test_higher_harmonic_synchronisation():
    cfg = ProtocolConfig(zeta=1.0, k_even=3, k_quarter=3, eta_fractions=(0.02, 0.01, 0.005, 0.0025))
    w = reconstruct_wightman(cfg, ACC)
    assert w.real == pytest.approx(w_acc(1.0), rel=1e-3)
    assert abs(w.imag) <= 1e-3 * abs(w.real)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_single_mode_exactness(n):
    omega, zeta = 1.0, 1.0
    corr = single_mode_correlator(omega, n)
    point = reconstruct_wightman(ProtocolConfig(zeta=zeta), corr, full_output=True)
    exact = (2 * n + 1) * math.cos(omega * zeta) - 1j * math.sin(omega * zeta)
    assert abs(point.w - exact) <= 1e-3


def test_cancellation_is_flagged():
    # Re W vanishes at omega * zeta = pi / 2, so P_total - P_1 - P_2 is pure round-off
    point = reconstruct_wightman(ProtocolConfig(zeta=np.pi / 2), single_mode_correlator(1.0, 0),
                                 full_output=True)
    assert "precision_limited" in point.flags
    assert point.w.imag == pytest.approx(-1.0, abs=1e-3)


def test_sweep_writes_csv(tmp_path):
    path = tmp_path / "w.csv"
    result = reconstruction_sweep([0.5, 1.0], ProtocolConfig(zeta=0.5), ACC, csv_path=path)
    lines = path.read_text().splitlines()
    assert lines[0] == "zeta,re_w,im_w,re_ref,im_ref,abs_err,rel_err,flag"
    assert len(lines) == 3 and not result.failed
    assert float(lines[1].split(",")[1]) == result.points[0].w.real


@pytest.mark.parametrize("grid", [[], [1.0, 0.5], [0.0, 1.0]])
def test_sweep_grid_validation(grid):
    with pytest.raises(InvalidParameterError):
        reconstruction_sweep(grid, ProtocolConfig(zeta=1.0), ACC)


def test_worked_statistics():
    assert statistic_S(2.1e-4, 1.0e-4, 1.0e-4, 0.01) == pytest.approx(0.05)
    assert statistic_S(2.0e-4, 1.0e-4, 1.0e-4, 0.01) == 0.0
    p_total, p_single, lam = 3.3e-4, 1.2e-4, 0.02
    assert statistic_S(p_total, p_single, p_single, lam) == pytest.approx((p_total - 2 * p_single) / (2 * lam**2), rel=1e-14)


def test_worked_gaps():
    assert synchronize_gap(2.0, 1, "even_cycles") == pytest.approx(np.pi)
    assert synchronize_gap(2.0, 0, "quarter_cycle") == pytest.approx(np.pi / 4)
    assert math.cos(synchronize_gap(2.0, 1, "even_cycles") * 2.0) == 1.0
    assert math.sin(synchronize_gap(2.0, 0, "quarter_cycle") * 2.0) == 1.0


def test_single_mode_quarter_period():
    w = reconstruct_wightman(ProtocolConfig(zeta=np.pi / 2), single_mode_correlator(1.0, 0))
    assert abs(w - (-1j)) <= 1e-3


@pytest.mark.parametrize("zeta", [0.5, 2.0])
def test_massless_vacuum_commutator_vanishes_off_cone(zeta):
    vac = closed_form_pullback(CorrelatorSpec())
    w = reconstruct_wightman(ProtocolConfig(zeta=zeta), vac)
    assert w.real == pytest.approx(-1 / (4 * np.pi**2 * zeta**2), rel=1e-4)
    assert abs(w.imag) <= 1e-3 * abs(w.real)
