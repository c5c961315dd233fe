import numpy as np
import pytest
from hypothesis import given, strategies as st

from phgen.device import ElectroChemParams, IsfetDevice, MosfetParams, SATURATION, SolutionSample, drain_current
from phgen.readout import (
    BiasInfeasibleError,
    CvccParams,
    OperatingPoint,
    PhRangeError,
    RailViolationError,
    ReadoutError,
    calibrate_ph,
    chain_v_out,
    closed_form_v_s,
    fit_slope,
    format_sweep_csv,
    output_voltage,
    solve_operating_point,
    sweep,
)


def test_table2_operating_point(device, cvcc):
    op = solve_operating_point(device, SolutionSample(5.8, 24.0), cvcc)
    assert op.v_ds == 0.5
    assert op.v_s == pytest.approx(0.2, abs=5e-3)
    assert op.v_d == pytest.approx(0.7, abs=5e-3)
    assert op.v_out == pytest.approx(2.07, abs=5e-3)
    assert op.i_ds == 50e-6


def test_vds_is_r1_times_ibias(cvcc):
    for vth0 in (-1.5, -0.9, 0.0):
        dev = IsfetDevice(MosfetParams(v_th0=vth0))
        op = solve_operating_point(dev, SolutionSample(7.0, 25.0), cvcc)
        assert op.v_d - op.v_s == pytest.approx(0.5, abs=1e-12)
        assert op.v_ds == cvcc.r1 * cvcc.i_bias


def _vth_device(vth, k):
    return IsfetDevice(MosfetParams(k_factor=k, v_th0=vth), ElectroChemParams(e0=0.0, ph_ref=7.0))


def test_closed_form_hand_example():
    # v_s = -(I/(k V_DS) + v_th + V_DS/2) = -(0.1 - 0.55 + 0.25)
    dev = _vth_device(-0.55, 1e-3)
    assert closed_form_v_s(dev, SolutionSample(7.0, 24.0), CvccParams()) == pytest.approx(0.2, abs=1e-15)


def test_hand_example_lands_in_saturation():
    # overdrive 0.35 V < V_DS 0.5 V, so the linear-region solve must refuse it
    dev = _vth_device(-0.55, 1e-3)
    with pytest.raises(BiasInfeasibleError) as exc:
        solve_operating_point(dev, SolutionSample(7.0, 24.0), CvccParams())
    assert exc.value.region == SATURATION
    assert "saturation" in str(exc.value)


def test_linear_hand_example():
    # k = 2e-4: overdrive 0.5 + 0.25 = 0.75 V; v_th = -0.95 gives v_s = 0.2
    dev = _vth_device(-0.95, 2e-4)
    op = solve_operating_point(dev, SolutionSample(7.0, 24.0), CvccParams())
    assert op.v_s == pytest.approx(0.2, abs=1e-9)


def test_rail_violation():
    dev = _vth_device(-6.0, 2e-4)
    with pytest.raises(RailViolationError):
        solve_operating_point(dev, SolutionSample(7.0, 24.0), CvccParams())


def test_drain_above_rail():
    # v_s just below the positive rail, v_d = v_s + 0.5 above it
    dev = _vth_device(-5.5, 2e-4)
    with pytest.raises(RailViolationError):
        solve_operating_point(dev, SolutionSample(7.0, 24.0), CvccParams())


@pytest.mark.parametrize("ph", np.arange(0, 15))
@pytest.mark.parametrize("temp", [0.0, 24.0, 30.0, 40.0])
def test_solver_matches_closed_form(device, cvcc, ph, temp):
    s = SolutionSample(float(ph), temp)
    op = solve_operating_point(device, s, cvcc)
    assert op.v_s == pytest.approx(closed_form_v_s(device, s, cvcc), abs=1e-9)
    assert abs(drain_current(device, -op.v_s, op.v_ds, s) - cvcc.i_bias) < 1e-9


@pytest.mark.parametrize(
    "gain, offset, v_s, expected", [(1.0, 0.0, 0.2, 0.2), (1.0, 1.87, 0.2, 2.07), (2.0, 0.0, 0.1, 0.2)]
)
def test_output_voltage(gain, offset, v_s, expected):
    c = CvccParams(output_gain=gain, output_offset=offset)
    op = OperatingPoint(v_s=v_s, v_d=v_s + 0.5, v_ds=0.5, i_ds=50e-6, v_out=0.0)
    assert output_voltage(op, c) == pytest.approx(expected, abs=1e-15)


def test_calibrate_table2(device, cvcc):
    assert calibrate_ph(device, cvcc, 2.07, 24.0) == pytest.approx(5.8, abs=1e-6)


@pytest.mark.parametrize("temp", [0.0, 24.0, 30.0, 55.0])
def test_calibrate_reference(device, cvcc, temp):
    assert calibrate_ph(device, cvcc, chain_v_out(device, cvcc, 7.0, temp), temp) == pytest.approx(7.0, abs=1e-12)


def test_calibrate_shift_one_ph(device, cvcc):
    v = chain_v_out(device, cvcc, 6.5, 30.0)
    shifted = calibrate_ph(device, cvcc, v + 0.0592, 30.0)
    assert shifted - 6.5 == pytest.approx(-1.0, abs=1e-3)


def test_calibrate_out_of_range(device, cvcc):
    with pytest.raises(PhRangeError):
        calibrate_ph(device, cvcc, 5.0, 24.0)


@pytest.mark.parametrize("sign", [1, -1])
@given(ph=st.floats(0.0, 14.0), temp=st.floats(-20.0, 90.0))
def test_calibrate_round_trip(sign, ph, temp):
    dev = IsfetDevice(chem=ElectroChemParams(sign=sign))
    c = CvccParams()
    assert abs(calibrate_ph(dev, c, chain_v_out(dev, c, ph, temp), temp) - ph) < 1e-9


def test_sweep_slope_and_span(device, cvcc):
    pts = sweep(device, cvcc, 4.0, 9.0, 6, 30.0)
    assert [p[0] for p in pts] == [4.0, 5.0, 6.0, 7.0, 8.0, 9.0]
    slope = fit_slope(pts)
    assert abs(slope) == pytest.approx(0.0592, abs=5e-5)
    assert slope == pytest.approx(-cvcc.output_gain * device.chem.sign * 0.05920226685232078, rel=1e-6)
    assert pts[0][1] - pts[-1][1] == pytest.approx(0.296, abs=5 * 5e-5)


def test_sweep_local_linearity(device, cvcc):
    eps = 1e-3
    (a, va), (b, vb) = sweep(device, cvcc, 7.0, 7.0 + eps, 2, 25.0)
    assert vb - va == pytest.approx(-eps * 0.98422 * 0.0591593496857215, rel=1e-6)


@pytest.mark.parametrize("sign", [1, -1])
def test_sweep_monotone_and_affine(sign, cvcc):
    dev = IsfetDevice(chem=ElectroChemParams(sign=sign))
    v = np.array([p[1] for p in sweep(dev, cvcc, 0.0, 14.0, 57, 37.0)])
    d = np.diff(v)
    assert np.all(d < 0) if sign == 1 else np.all(d > 0)
    assert np.max(np.abs(np.diff(d))) < 1e-12


@pytest.mark.parametrize("args", [(9.0, 4.0, 6), (4.0, 4.0, 6), (4.0, 9.0, 1)])
def test_sweep_preconditions(device, cvcc, args):
    with pytest.raises(ReadoutError):
        sweep(device, cvcc, *args, 30.0)


def test_sweep_csv(device, cvcc):
    text = format_sweep_csv(sweep(device, cvcc, 4.0, 9.0, 6, 30.0))
    lines = text.splitlines()
    assert lines[0] == "ph,v_out_volts"
    assert len(lines) == 7
    ph, v = lines[1].split(",")
    assert float(ph) == 4.0 and len(v.replace(".", "").lstrip("0")) >= 6


@pytest.mark.parametrize(
    "kwargs", [dict(i_bias=0.0), dict(r1=-1.0), dict(v_supply_pos=-5.0, v_supply_neg=-5.0)]
)
def test_cvcc_invariants(kwargs):
    with pytest.raises(ReadoutError):
        CvccParams(**kwargs)
