import math

import numpy as np
import pytest

from lftnav.box import SCENARIO_BOX, ParameterBox
from lftnav.cr3bp import EARTH_MOON, lpv_matrices, sigma_psi
from lftnav.lmi import solve_feasibility
from lftnav.plant import B_W, C_Z
from lftnav.sensing import NoiseSpec, noise_weights
from lftnav.synthesis import (
    ObserverGain,
    SynthesisInfeasible,
    _grid_data,
    _hinf_lmi,
    brl_certify,
    brl_matrix,
    certify,
    config_hash,
    dk_iterate,
    error_dynamics,
    hinf_norm_grid,
    hurwitz,
    read_gain,
    synthesize_hinf,
    write_gain,
)

PI2 = EARTH_MOON.pi2
NOISE = NoiseSpec.from_units(50, 500, 400, 4000, 384400.0, 0.01, SCENARIO_BOX)
X0 = (0.87, 0.0, 0.0, -1.4827)


# -- error dynamics -----------------------------------------------------------


def test_open_loop_error_system():
    rho = SCENARIO_BOX.center
    es = error_dynamics(rho, np.zeros((4, 4)), PI2, NOISE)
    np.testing.assert_array_equal(es.Acl, lpv_matrices(rho, PI2)[0])
    np.testing.assert_array_equal(es.Bcl, B_W)
    np.testing.assert_array_equal(es.Cz, C_Z)
    assert es.Acl.shape == (4, 4) and es.Bcl.shape == (4, 6) and es.Cz.shape == (2, 4)


def test_noise_channel_structure():
    L = np.arange(16.0).reshape(4, 4) + 1
    es = error_dynamics((0.4, 0.9), L, PI2, NOISE)
    # process channels bypass L, sensor channels only act through L
    np.testing.assert_array_equal(es.Bcl[:, :2], B_W[:, :2])
    W = noise_weights((0.4, 0.9), NOISE)
    np.testing.assert_allclose(es.Bcl[:, 2:], L * W, rtol=1e-15)


def test_column_norms_at_center():
    rho = SCENARIO_BOX.center
    L = np.diag([1.0, 2.0, 3.0, 4.0])
    es = error_dynamics(rho, L, PI2, NOISE)
    W = noise_weights(rho, NOISE)
    np.testing.assert_allclose(np.linalg.norm(es.Bcl, axis=0), [1, 1, W[0], 2 * W[1], 3 * W[2], 4 * W[3]], rtol=1e-14)


# -- hurwitz and norm oracles ------------------------------------------------


def test_hurwitz_examples():
    assert hurwitz(-np.eye(3))
    assert not hurwitz([[0.0, 1.0], [0.0, 0.0]])
    assert not hurwitz(-1e-10 * np.eye(2))
    A, _ = lpv_matrices(sigma_psi(X0, PI2), PI2)
    assert not hurwitz(A)
    with pytest.raises(ValueError):
        hurwitz(np.zeros((2, 3)))


def test_first_order_norm():
    assert hinf_norm_grid([[-1.0]], [[1.0]], [[1.0]]) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("zeta,wn", [(0.05, 1.0), (0.02, 7.3), (0.1, 0.2)])
def test_resonant_peak(zeta, wn):
    A = np.array([[0.0, 1.0], [-(wn**2), -2 * zeta * wn]])
    B = np.array([[0.0], [wn**2]])
    C = np.array([[1.0, 0.0]])
    exact = 1.0 / (2 * zeta * math.sqrt(1 - zeta**2))
    assert hinf_norm_grid(A, B, C) == pytest.approx(exact, rel=1e-3)


def test_norm_rejects_unstable():
    with pytest.raises(ValueError):
        hinf_norm_grid([[0.5]], [[1.0]], [[1.0]])


# -- bounded-real certificate ------------------------------------------------


def test_brl_scalar_feasible():
    r = brl_certify([[-1.0]], [[1.0]], [[1.0]], 2.0)
    assert r.feasible
    assert r.P[0, 0] > 0 and r.max_eig < 0


def test_brl_scalar_infeasible():
    assert brl_certify([[-1.0]], [[1.0]], [[1.0]], 0.5).status == "infeasible"


@pytest.mark.parametrize("gamma", [1e-3, 0.1, 10.0])
def test_brl_zero_output(gamma):
    A = np.array([[-1.0, 3.0], [0.0, -2.0]])
    assert brl_certify(A, np.eye(2), np.zeros((1, 2)), gamma).feasible


def test_brl_rejects_nonpositive_gamma():
    with pytest.raises(ValueError):
        brl_certify([[-1.0]], [[1.0]], [[1.0]], 0.0)


def test_brl_matches_norm():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(3, 3)) - 4 * np.eye(3)
    B = rng.normal(size=(3, 2))
    C = rng.normal(size=(2, 3))
    g = hinf_norm_grid(A, B, C)
    assert brl_certify(A, B, C, 1.01 * g).feasible
    assert brl_certify(A, B, C, 0.99 * g).status == "infeasible"


# -- gridded synthesis -------------------------------------------------------


def test_scenario_gain_certificate(hinf_gain):
    g = hinf_gain
    assert math.isfinite(g.gamma) and g.method == "hinf"
    assert np.all(np.linalg.eigvalsh(g.P) > 0)
    assert len(g.grid) == 9
    for rho in g.grid:
        es = error_dynamics(rho, g.L, PI2, NOISE)
        assert hurwitz(es.Acl)
        assert np.linalg.eigvalsh(brl_matrix(es.Acl, es.Bcl, es.Cz, g.P, g.gamma)).max() < 0
        assert hinf_norm_grid(es.Acl, es.Bcl, es.Cz) <= g.gamma * (1 + 1e-6)
        assert np.abs(np.linalg.eigvals(es.Acl)).max() < g.disk_radius


def test_bisection_bracket(hinf_gain):
    g = hinf_gain
    assert g.gamma_lo is not None and g.gamma_lo < g.gamma
    assert (g.gamma - g.gamma_lo) / g.gamma <= 1e-3
    data = _grid_data(g.grid, PI2, NOISE)
    assert solve_feasibility(_hinf_lmi(data, g.gamma_lo, g.disk_radius)).status == "infeasible"


def test_single_point_matches_norm():
    rho = (0.5, 1.0)
    box = ParameterBox(rho[0], rho[0], rho[1], rho[1])
    g = synthesize_hinf(box, PI2, NOISE, grid_density=1, gamma_bounds=(1e-6, 1e4))
    assert len(g.grid) == 1
    es = error_dynamics(rho, g.L, PI2, NOISE)
    nrm = hinf_norm_grid(es.Acl, es.Bcl, es.Cz)
    assert nrm <= g.gamma * (1 + 1e-6)
    assert nrm >= 0.95 * g.gamma


def test_widening_never_decreases_gamma(hinf_gain):
    # a grid point of the full box, and a quadrant whose 3x3 grid is nested in the 5x5 grid of the full box
    box = SCENARIO_BOX
    pt = ParameterBox(box.sigma_min, box.sigma_min, box.psi_max, box.psi_max)
    g_pt = synthesize_hinf(pt, PI2, NOISE, grid_density=1)
    assert g_pt.gamma <= hinf_gain.gamma * (1 + 1e-3)
    s_mid, p_mid = box.center
    quad = ParameterBox(box.sigma_min, s_mid, box.psi_min, p_mid)
    g_q = synthesize_hinf(quad, PI2, NOISE, grid_density=3)
    g_full5 = synthesize_hinf(box, PI2, NOISE, grid_density=5)
    assert g_q.gamma <= g_full5.gamma * (1 + 1e-3)


def test_infeasible_upper_bound_reported():
    with pytest.raises(SynthesisInfeasible):
        synthesize_hinf(SCENARIO_BOX, PI2, NOISE, gamma_bounds=(1e-4, 1e-3))


def test_certify_sample(hinf_gain):
    rep = certify(hinf_gain, NOISE, n_samples=300, seed=1)
    assert rep.grid_ok and rep.ok() and rep.worst_ratio <= 1 + 1e-6
    d = rep.to_dict()
    assert d["n_samples"] == 300 and d["pass_rate"] == 1.0


def test_certify_flags_corrupted_gain(hinf_gain):
    bad = ObserverGain(**{**hinf_gain.__dict__, "L": -hinf_gain.L})
    rep = certify(bad, NOISE, n_samples=50, seed=1)
    assert not rep.ok()
    assert any(why == "not Hurwitz" for _, why, _ in rep.failures)
    zero = ObserverGain(**{**hinf_gain.__dict__, "L": np.zeros((4, 4))})
    assert certify(zero, NOISE, n_samples=20).n_pass == 0


# -- artifact ------------------------------------------------------------------


def test_artifact_roundtrip(tmp_path, hinf_gain):
    hinf_gain.config_hash = config_hash({"a": 1})
    p = tmp_path / "gain.json"
    write_gain(p, hinf_gain)
    back = read_gain(p)
    for k in ("L", "P", "grid"):
        np.testing.assert_array_equal(getattr(back, k), getattr(hinf_gain, k))
    assert back.gamma == hinf_gain.gamma and back.gamma_lo == hinf_gain.gamma_lo
    assert back.box == hinf_gain.box and back.pi2 == hinf_gain.pi2
    assert back.config_hash == hinf_gain.config_hash
    write_gain(tmp_path / "again.json", back)
    assert (tmp_path / "again.json").read_bytes() == p.read_bytes()


def test_config_hash_is_order_free():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


# -- scaled iteration ----------------------------------------------------------


def test_dk_zero_rounds_keeps_initial_gain(hinf_gain):
    small = ParameterBox(0.5, 0.6, 0.9, 1.0)
    init = synthesize_hinf(small, PI2, NOISE)
    g = dk_iterate(small, PI2, NOISE, initial=init, cells=1, max_rounds=0)
    np.testing.assert_array_equal(g.L, init.L)
    assert g.gamma_history == [g.gamma]
    assert g.method == "dk-scaled"


def test_dk_monotone(dk_gain, hinf_gain):
    h = dk_gain.gamma_history
    assert all(b <= a for a, b in zip(h, h[1:]))
    assert h[-1] == dk_gain.gamma
    assert dk_gain.gamma <= h[0] + 1e-6
    assert len(h) <= 1 + 2 * 20


def test_dk_scales_commute_with_structure(dk_gain):
    cells = dk_gain.scales["cells"]
    assert len(cells) == 4
    rng = np.random.default_rng(0)
    for c in cells:
        labels = [lab for lab, _ in c["structure"]]
        assert set(c["scales"]) == set(labels)
        X = np.concatenate([c["scales"][lab] for lab in labels])
        assert np.all(X > 0)
        assert sum(n for _, n in c["structure"]) == len(X)
        delta = np.concatenate([np.full(n, rng.uniform(-1, 1)) for _, n in c["structure"]])
        D, Xm = np.diag(delta), np.diag(X)
        np.testing.assert_array_equal(D @ Xm, Xm @ D)


def test_dk_norm_below_scaled_certificate(dk_gain):
    # the scaled bound dominates the frozen-rho norm everywhere in the box
    rng = np.random.default_rng(2)
    for rho in dk_gain.box.sample(100, rng):
        es = error_dynamics(rho, dk_gain.L, PI2, NOISE)
        assert hurwitz(es.Acl)
        assert hinf_norm_grid(es.Acl, es.Bcl, es.Cz) <= dk_gain.gamma * (1 + 1e-6)
