import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chaosspec import montecarlo as mc
from chaosspec import schrodinger as sch
from chaosspec import sensitivity, she
from chaosspec.errors import ConfigurationError, DegenerateLawError, InvalidParameterError
from chaosspec.rng import block_generator

SMALL = mc.LatticeConfig(dx=0.1, dt=0.1 ** 2 / 4, half_width=2.0)


def lattice_second_moments(cfg, p, s):
    """Exact ``E[Z^2]`` and ``E[Z Z_s]`` of the discrete scheme at x = 0.

    The scheme is linear in ``Z`` with noise independent of the current state,
    so ``M = E[Z Z'^T]`` obeys ``M <- A M A^T + noise^2 rho diag(diag M)``.
    """
    n = cfg.n_interior
    steps = cfg.n_steps(p.t)
    dt = p.t / steps
    lam = dt / (2 * cfg.dx ** 2)
    a = np.eye(n) * (1 - 2 * lam) + lam * (np.eye(n, k=1) + np.eye(n, k=-1))
    noise2 = p.beta ** 2 * dt / cfg.dx
    out = []
    for rho in (1.0, math.exp(-s)):
        m = np.ones((n, n))
        for _ in range(steps):
            m = a @ m @ a.T + noise2 * rho * np.diag(np.diag(m))
        out.append(m[n // 2, n // 2])
    return out


# -- accumulators ------------------------------------------------------------------

@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=60), st.integers(1, 3))
def test_merged_moments_match_direct(values, cut):
    x = np.array(values)
    cut = min(cut, x.size - 1)
    merged = mc.MomentAccumulator.from_samples(x[:cut]).merge(mc.MomentAccumulator.from_samples(x[cut:]))
    assert merged.mean[0] == pytest.approx(x.mean(), abs=1e-9)
    assert merged.covariance[0, 0] == pytest.approx(np.var(x, ddof=1), rel=1e-9, abs=1e-9)


def test_tree_merge_order_fixed():
    parts = [mc.MomentAccumulator.from_samples(np.arange(k, k + 5.0)) for k in range(7)]
    assert mc.tree_merge(parts).n == 35
    with pytest.raises(InvalidParameterError):
        mc.tree_merge([])


# -- noise resampling ---------------------------------------------------------------

def test_resample_noise_limits():
    rng = block_generator(1, 0)
    v, vt = rng.standard_normal(1000), rng.standard_normal(1000)
    assert np.array_equal(mc.resample_noise(v, vt, 0.0), v)
    assert np.all(np.abs(mc.resample_noise(v, vt, 100.0) - vt) <= math.exp(-100) * np.abs(v) + 1e-15)
    with pytest.raises(InvalidParameterError):
        mc.resample_noise(v, vt[:-1], 0.5)
    with pytest.raises(InvalidParameterError):
        mc.resample_noise(v, vt, -0.1)


def test_resampled_noise_covariance_and_variance():
    stream = mc.PairedNoiseStream(seed=3, s=0.7)
    v, _, vs = stream.draw(0, (1000, 1000))
    n = v.size
    cov = np.mean(v * vs) - v.mean() * vs.mean()
    ratio = cov / v.var()
    # Var(v vs) = 1 + rho^2 for jointly standard normal pairs
    assert abs(ratio - math.exp(-0.7)) <= 3 * math.sqrt((1 + math.exp(-1.4)) / n)
    assert abs(vs.var() / v.var() - 1) <= 3 * math.sqrt(4 / n)


# -- lattice heat equation ----------------------------------------------------------

def test_lattice_config_guards():
    with pytest.raises(ConfigurationError):
        mc.LatticeConfig(dx=0.1, dt=0.006)
    with pytest.raises(ConfigurationError):
        mc.LatticeConfig(dx=0.1, dt=0.001, half_width=1.05)
    with pytest.raises(ConfigurationError):
        SMALL.validate_for(1.0)  # 4 sqrt(t) = 4 > 2
    assert mc.LatticeConfig().n_interior == 199


def test_boundary_guard_raised_before_sampling():
    with pytest.raises(ConfigurationError):
        mc.simulate_she_pair(SMALL, she.SheParams(1.0, 1.0), 0.5, 10, 0)


def test_lattice_matches_exact_discrete_moments():
    p = she.SheParams(1.0, 0.25)
    est = mc.simulate_she_pair(SMALL, p, 0.5, 20_000, seed=11)
    exact_z2, exact_zz = lattice_second_moments(SMALL, p, 0.5)
    assert abs(est.e_z2.value - exact_z2) <= 4 * est.e_z2.stderr
    assert abs(est.e_zz.value - exact_zz) <= 4 * est.e_zz.stderr
    # and the lattice is close to the continuum value
    assert exact_z2 == pytest.approx(she.second_moment(p), rel=0.1)


def test_weak_noise_gives_heat_flow_of_one():
    p = she.SheParams(1e-6, 0.25)
    est = mc.simulate_she_pair(SMALL, p, 1.0, 50, seed=2)
    flow_z2, flow_zz = lattice_second_moments(SMALL, p, 1.0)
    # first-order noise terms of size beta survive in a finite sample
    assert est.e_z2.value == pytest.approx(flow_z2, abs=1e-5)
    assert est.e_zz.value == pytest.approx(flow_zz, abs=1e-5)
    # the deterministic flow loses only boundary-sized mass at x = 0 when L = 4 sqrt(t)
    assert flow_z2 == pytest.approx(1.0, abs=1e-3)


def test_she_pair_independent_of_workers():
    p = she.SheParams(1.0, 0.25)
    runs = [mc.simulate_she_pair(SMALL, p, 0.5, 1100, seed=5, workers=w, block_size=100) for w in (1, 3)]
    assert runs[0] == runs[1]


def test_sim_estimate_json_line():
    line = mc.SimEstimate(1.5, 0.1, 10, 7).to_json_line("x", {"t": 1})
    assert '"op": "x"' in line and '"seed": 7' in line and '"n": 10' in line


# -- GBM ---------------------------------------------------------------------------

def test_gbm_zero_perturbation_is_exact():
    est = mc.simulate_gbm_pair(1.0, 0.0, 10_000, seed=1)
    assert est.value == pytest.approx(1.0, abs=1e-12)


def test_gbm_degenerate_and_invalid():
    with pytest.raises(DegenerateLawError):
        mc.simulate_gbm_pair(0.0, 1.0, 10, seed=1)
    with pytest.raises(InvalidParameterError):
        mc.simulate_gbm_pair(-1.0, 1.0, 10, seed=1)
    with pytest.raises(InvalidParameterError):
        mc.simulate_gbm_pair(1.0, 1.0, 0, seed=1)


def test_gbm_coverage_over_replications():
    exact = sensitivity.gbm_correlation(1.0, math.log(2))
    hits = 0
    for seed in range(100):
        est = mc.simulate_gbm_pair(1.0, math.log(2), 10 ** 5, seed=seed)
        hits += abs(est.value - exact) <= 3 * est.stderr
    assert hits >= 99


# -- kinetic process -----------------------------------------------------------------

def test_kinetic_at_time_zero():
    cov, init = sch.CovarianceModel(2), sch.InitialDataModel(2)
    est, counts = mc.simulate_kinetic(cov, init, 0.0, [0.3, -0.2], 500, seed=1)
    assert est.value == pytest.approx(float(init.fourier(np.array([0.3, -0.2]))), rel=1e-14)
    assert counts.tolist() == [500]


@pytest.mark.parametrize("d", [1, 2])
def test_kinetic_matches_chaos_sum(d):
    cov, init = sch.CovarianceModel(d), sch.InitialDataModel(d)
    t = 3.0
    est, counts = mc.simulate_kinetic(cov, init, t, 0.0, 50_000, seed=4)
    assert abs(est.value - math.exp(sch.log_second_moment(cov, init, t))) <= 3.5 * est.stderr
    mean_k = np.dot(np.arange(counts.size), counts) / counts.sum()
    sd = math.sqrt(cov.r0 * t / counts.sum())
    assert abs(mean_k - cov.r0 * t) <= 3.5 * sd


def test_kinetic_dimension_mismatch():
    with pytest.raises(InvalidParameterError):
        mc.simulate_kinetic(sch.CovarianceModel(1), sch.InitialDataModel(2), 1.0, 0.0, 10, 0)


def test_diffusive_check_trend():
    cov = sch.CovarianceModel(1)
    far = mc.diffusive_scaling_check(cov, 1e3, 10 ** 5, seed=1).ks
    near = mc.diffusive_scaling_check(cov, 0.5, 10 ** 5, seed=1).ks
    assert far <= 0.02
    assert near > far
