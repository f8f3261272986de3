import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lftnav.box import SCENARIO_BOX, ParameterBox
from lftnav.cr3bp import EARTH_MOON, PrimarySingularity, Rho, sigma_psi
from lftnav.sensing import (
    ARCSEC,
    ExogenousGenerator,
    NoiseSpec,
    measure,
    measurement_matrices,
    noise_weights,
    range_error_bounds,
    range_measure,
    sample_exogenous,
    write_measurement_csv,
)

PI2 = EARTH_MOON.pi2
R12_KM = 384400.0


def scenario_noise(**kw):
    return NoiseSpec.from_units(50, 500, 400, 4000, R12_KM, 0.01, SCENARIO_BOX, **kw)


def test_measure_unit_geometry():
    np.testing.assert_allclose(measure([0, 1, 0, 0], 0.0), [1, 0, 1 / math.sqrt(2), -1 / math.sqrt(2)], rtol=1e-15)


def test_measure_on_axis_initial_condition():
    np.testing.assert_allclose(measure([0.87, 0, 0, -1.4827], 0.01215), [0, 1, 0, -1], atol=1e-15)


def test_measure_at_primary_rejected():
    with pytest.raises(PrimarySingularity):
        measure([-PI2, 0, 0, 0], PI2)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_unit_circle_identity(x, y):
    if min(math.hypot(x + PI2, y), math.hypot(x + PI2 - 1, y)) < 1e-3:
        return
    m = measure([x, y, 0, 0], PI2)
    assert abs(m[0] ** 2 + m[1] ** 2 - 1) < 1e-12
    assert abs(m[2] ** 2 + m[3] ** 2 - 1) < 1e-12


def test_matrices_reproduce_measure():
    rng = np.random.default_rng(3)
    n = 0
    while n < 1000:
        s = np.concatenate([rng.uniform(-1.5, 1.5, 2), rng.uniform(-2, 2, 2)])
        try:
            rho = sigma_psi(s, PI2)
        except PrimarySingularity:
            continue
        if min(rho) < 0.01:
            continue
        C, d = measurement_matrices(rho, PI2)
        np.testing.assert_allclose(C @ s + d, measure(s, PI2), rtol=0, atol=1e-12)
        n += 1


def test_offset_vector_examples():
    _, d = measurement_matrices((0.5, 0.5), 0.5)
    np.testing.assert_array_equal(d, [0, 1, 0, -1])
    C, d = measurement_matrices((1.0, 1.0), 0.0)
    np.testing.assert_array_equal(d, [0, 0, 0, -1])
    # fourth row uses +1/psi on x
    assert C[3, 0] == 1.0


def test_weights_at_edges_and_midpoint():
    spec = scenario_noise()
    b = SCENARIO_BOX
    w = noise_weights((b.sigma_min, b.psi_max), spec)
    assert w[0] == w[1] == 50 * ARCSEC
    assert w[2] == w[3] == 500 * ARCSEC
    assert w[0] == pytest.approx(2.4241e-4, rel=1e-4)
    w = noise_weights(b.center, spec)
    assert w[0] == pytest.approx(275 * ARCSEC, rel=1e-13)
    assert w[2] == pytest.approx(275 * ARCSEC, rel=1e-13)


def test_weights_clamp_outside_box():
    spec = scenario_noise()
    assert noise_weights((0.01, 5.0), spec)[0] == 50 * ARCSEC
    assert noise_weights((0.01, 5.0), spec)[2] == 500 * ARCSEC


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1289, 0.9005), st.floats(0.1289, 0.9005))
def test_weights_monotone(a, b):
    spec = scenario_noise()
    lo, hi = sorted((a, b))
    assert noise_weights((lo, 1.0), spec)[0] <= noise_weights((hi, 1.0), spec)[0]


def test_degenerate_weight_box_rejected():
    spec = NoiseSpec.from_units(50, 500, 400, 4000, R12_KM, 0.01, ParameterBox(0.5, 0.5, 0.3, 1.0))
    with pytest.raises(ValueError):
        noise_weights((0.5, 0.5), spec)


def test_quadratic_model_matches_linear_at_far_edge():
    spec = scenario_noise(weight_model="quadratic")
    w = noise_weights((SCENARIO_BOX.sigma_max, SCENARIO_BOX.psi_max), spec)
    np.testing.assert_allclose(w, 500 * ARCSEC, rtol=1e-14)
    # proportional to range
    w_half = noise_weights((SCENARIO_BOX.sigma_max / 2, SCENARIO_BOX.psi_max / 2), spec)
    np.testing.assert_allclose(w_half, 250 * ARCSEC, rtol=1e-14)


def test_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec.from_units(500, 50, 400, 4000, R12_KM, 0.01, SCENARIO_BOX)
    with pytest.raises(ValueError):
        scenario_noise(band_limit=0.0)
    with pytest.raises(ValueError):
        scenario_noise(weight_model="cubic")


def test_range_error_normalization():
    spec = scenario_noise()
    assert spec.range_err_min == pytest.approx(1.0406e-3, rel=1e-4)
    e1, e2 = range_error_bounds((SCENARIO_BOX.sigma_max, SCENARIO_BOX.psi_min), spec)
    assert e1 == pytest.approx(4000 / R12_KM) and e2 == pytest.approx(400 / R12_KM)


def test_range_measure_noise_free_is_exact():
    spec = scenario_noise(enabled=False)
    s = np.array([0.5, 0.3, 0, 0])
    assert range_measure(s, PI2, spec, np.random.default_rng(0), SCENARIO_BOX) == sigma_psi(s, PI2)


def test_range_measure_clamped():
    spec = scenario_noise()
    rng = np.random.default_rng(0)
    # sigma at the lower edge: roughly half of the draws push below it
    s = np.array([SCENARIO_BOX.sigma_min - PI2, 0, 0, 0])
    vals = [range_measure(s, PI2, spec, rng, SCENARIO_BOX) for _ in range(50)]
    assert all(isinstance(v, Rho) for v in vals)
    assert min(v.sigma for v in vals) == SCENARIO_BOX.sigma_min


def test_process_noise_bounded():
    gen = ExogenousGenerator(scenario_noise(band_limit=1.0), np.random.default_rng(1))
    w = np.array([gen.sample() for _ in range(5000)])
    assert np.abs(w[:, :2]).max() <= 0.01
    assert np.abs(w[:, 2:]).max() <= 1.0


def test_band_limited_is_smoother():
    white = ExogenousGenerator(scenario_noise(), np.random.default_rng(1))
    lp = ExogenousGenerator(scenario_noise(band_limit=1.0), np.random.default_rng(1))
    a = np.array([white.sample() for _ in range(2000)])[:, 2]
    b = np.array([lp.sample() for _ in range(2000)])[:, 2]
    assert np.abs(np.diff(b)).mean() < 0.01 * np.abs(np.diff(a)).mean()


def test_infinite_band_limit_recovers_white():
    a = ExogenousGenerator(scenario_noise(), np.random.default_rng(5))
    b = ExogenousGenerator(scenario_noise(band_limit=math.inf), np.random.default_rng(5))
    for _ in range(100):
        np.testing.assert_array_equal(a.sample(), b.sample())


def test_seeded_replay_identical():
    def run():
        rng = np.random.default_rng(42)
        gen = ExogenousGenerator(scenario_noise(band_limit=1.0), rng)
        return np.array([sample_exogenous(gen.spec, k * 1e-3, rng, gen) for k in range(300)])

    np.testing.assert_array_equal(run(), run())


def test_measurement_csv(tmp_path):
    p = tmp_path / "m.csv"
    write_measurement_csv(p, [0.0], [[0.0, 1.0, 0.0, -1.0]], [(0.88, 0.12)])
    lines = p.read_text().splitlines()
    assert lines[0] == "t,y_m1,y_m2,y_m3,y_m4,sigma_meas,psi_meas"
    assert lines[1] == "0.0,0.0,1.0,0.0,-1.0,0.88,0.12"
