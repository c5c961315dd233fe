import math
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from phgen.device import (
    CUTOFF,
    LINEAR,
    SATURATION,
    DeviceError,
    ElectroChemParams,
    IsfetDevice,
    MosfetParams,
    SolutionSample,
    drain_current,
    effective_sensitivity,
    nernst_slope,
    region_check,
    v_chemical,
    v_th_isfet,
)

temps = st.floats(-50.0, 150.0)
phs = st.floats(0.0, 14.0)


def _slope_by_hand(t):
    # ln(10) R T / F written out from the constants, independent of the module
    return 2.302585092994046 * 8.314462618 * (t + 273.15) / 96485.33212


@pytest.mark.parametrize("temp, expected", [(25.0, 0.05916), (30.0, 0.06015)])
def test_nernst_slope_values(temp, expected):
    assert nernst_slope(temp) == pytest.approx(expected, abs=1e-5)
    assert nernst_slope(temp) == pytest.approx(_slope_by_hand(temp), rel=1e-14)


def test_nernst_slope_vanishes_near_absolute_zero():
    assert 0 < nernst_slope(-273.15 + 1e-9) < 1e-12


@pytest.mark.parametrize("bad", [-273.15, -300.0])
def test_nernst_slope_rejects_absolute_zero(bad):
    with pytest.raises(DeviceError):
        nernst_slope(bad)


@given(temps, temps)
def test_temperature_proportionality(t1, t2):
    ratio = nernst_slope(t1) / nernst_slope(t2)
    assert ratio == pytest.approx((t1 + 273.15) / (t2 + 273.15), rel=1e-12)


def test_effective_sensitivity_default_matches_measured_slope():
    dev = IsfetDevice()
    assert effective_sensitivity(dev, 30.0) == pytest.approx(0.0592, abs=5e-5)


def test_effective_sensitivity_nernst_limit():
    dev = IsfetDevice(chem=ElectroChemParams(alpha=1.0))
    assert effective_sensitivity(dev, 25.0) == pytest.approx(0.05916, abs=1e-5)
    for t in (-10.0, 0.0, 37.0, 85.0):
        assert effective_sensitivity(dev, t) == nernst_slope(t)


def test_v_chemical_reference_point():
    dev = IsfetDevice(chem=ElectroChemParams(e0=0.123, ph_ref=6.5))
    assert v_chemical(dev, SolutionSample(6.5, 40.0)) == 0.123


def test_v_chemical_one_ph_unit(device):
    e0 = device.chem.e0
    assert v_chemical(device, SolutionSample(8.0, 30.0)) == pytest.approx(e0 - 0.0592, abs=1e-4)


def test_v_chemical_ph4_to_ph9_span(device):
    span = v_chemical(device, SolutionSample(4.0, 30.0)) - v_chemical(device, SolutionSample(9.0, 30.0))
    assert span == pytest.approx(5 * 0.0592, abs=5 * 5e-5)


@pytest.mark.parametrize("sign", [1, -1])
@given(ph=st.floats(0.0, 13.0), temp=temps)
def test_nernst_linearity(sign, ph, temp):
    dev = IsfetDevice(chem=ElectroChemParams(sign=sign))
    step = v_chemical(dev, SolutionSample(ph + 1, temp)) - v_chemical(dev, SolutionSample(ph, temp))
    assert step == pytest.approx(-sign * effective_sensitivity(dev, temp), abs=1e-12)


@given(ph=phs, temp=temps, v_th0=st.floats(-2, 2), e0=st.floats(-1, 1))
def test_threshold_composition(ph, temp, v_th0, e0):
    dev = IsfetDevice(MosfetParams(v_th0=v_th0), ElectroChemParams(e0=e0))
    s = SolutionSample(ph, temp)
    assert v_th_isfet(dev, s) + v_chemical(dev, s) == pytest.approx(v_th0, abs=1e-15)


def test_v_th_isfet_substitutions():
    dev = IsfetDevice(MosfetParams(v_th0=0.4), ElectroChemParams(e0=0.0, ph_ref=7.0))
    assert v_th_isfet(dev, SolutionSample(7.0, 25.0)) == 0.4
    dev2 = replace(dev, chem=ElectroChemParams(e0=0.07, ph_ref=7.0))
    assert v_th_isfet(dev2, SolutionSample(7.0, 25.0)) == pytest.approx(0.4 - 0.07)


def test_v_th_isfet_rises_with_ph(device):
    a = v_th_isfet(device, SolutionSample(6.0, 30.0))
    b = v_th_isfet(device, SolutionSample(7.0, 30.0))
    assert b - a == pytest.approx(0.0592, abs=5e-5)


def _device_with_vth(vth, k=1e-3):
    # ph = ph_ref and e0 = 0 make v_th_isfet equal v_th0
    return IsfetDevice(MosfetParams(k_factor=k, v_th0=vth), ElectroChemParams(e0=0.0, ph_ref=7.0))


def test_drain_current_hand_value():
    dev = _device_with_vth(0.0)
    s = SolutionSample(7.0, 25.0)
    assert drain_current(dev, 1.1, 0.5, s) == pytest.approx(1e-3 * (1.1 * 0.5 - 0.125), rel=1e-15)
    assert drain_current(dev, 1.1, 0.5, s) == pytest.approx(4.25e-4)


@given(ph=phs, temp=temps, v_gs=st.floats(-3, 3))
def test_drain_current_zero_vds(ph, temp, v_gs):
    assert drain_current(IsfetDevice(), v_gs, 0.0, SolutionSample(ph, temp)) == 0.0


def test_drain_current_bracket_vanishes(device):
    s = SolutionSample(6.2, 30.0)
    v_ds = 0.5
    v_gs = v_th_isfet(device, s) + v_ds / 2
    assert drain_current(device, v_gs, v_ds, s) == pytest.approx(0.0, abs=1e-18)


@given(v_gs=st.floats(-2, 2), v_ds=st.floats(0.01, 1.0), ph=phs)
def test_drain_current_affine_in_vgs(v_gs, v_ds, ph):
    dev = IsfetDevice()
    s = SolutionSample(ph, 30.0)
    h = 1e-3
    fd = (drain_current(dev, v_gs + h, v_ds, s) - drain_current(dev, v_gs - h, v_ds, s)) / (2 * h)
    assert fd == pytest.approx(dev.mosfet.k_factor * v_ds, rel=1e-9)


@pytest.mark.parametrize(
    "overdrive, v_ds, region",
    [(1.1, 0.5, LINEAR), (0.3, 0.5, SATURATION), (0.0, 0.5, CUTOFF), (-0.2, 0.5, CUTOFF), (0.5, 0.5, SATURATION)],
)
def test_region_check(overdrive, v_ds, region):
    dev = _device_with_vth(0.25)
    assert region_check(dev, 0.25 + overdrive, v_ds, SolutionSample(7.0, 25.0)) == region


@pytest.mark.parametrize(
    "factory",
    [
        lambda: MosfetParams(k_factor=0.0),
        lambda: MosfetParams(v_th0=math.inf),
        lambda: ElectroChemParams(alpha=0.0),
        lambda: ElectroChemParams(alpha=1.2),
        lambda: ElectroChemParams(ph_ref=15.0),
        lambda: ElectroChemParams(sign=0),
        lambda: SolutionSample(-0.1, 25.0),
        lambda: SolutionSample(7.0, -274.0),
    ],
)
def test_invariants_rejected(factory):
    with pytest.raises(DeviceError):
        factory()


def test_negative_vds_rejected(device):
    with pytest.raises(DeviceError):
        drain_current(device, 0.0, -0.1, SolutionSample(7.0, 25.0))
