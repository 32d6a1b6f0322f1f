import math

import numpy as np
import pytest

import pulsedeconv as pd

linprog = pytest.importorskip("scipy.optimize").linprog


def highs_l1(y, kernel, delta):
    """min ||x||_1 s.t. ||y - G x||_1 <= delta as a dense LP solved by HiGHS."""
    n = len(y)
    G = np.array([[kernel.at(k - j) for j in range(n)] for k in range(n)])
    # Variables x+, x-, e+, e-; y = G(x+ - x-) + e+ - e-.
    A_eq = np.hstack([G, -G, np.eye(n), -np.eye(n)])
    c = np.concatenate([np.ones(2 * n), np.zeros(2 * n)])
    A_ub = np.concatenate([np.zeros(2 * n), np.ones(2 * n)])[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=[delta], A_eq=A_eq, b_eq=y, bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


def test_kernels_closed_form():
    g = pd.Kernel.gaussian()
    c = pd.Kernel.cauchy()
    for t in (-1.5, 0.0, 0.3, 2.0):
        assert g.eval(t) == pytest.approx(math.exp(-t * t / 2))
        assert c.eval(t) == pytest.approx(1 / (1 + t * t))
        assert g.eval(t, 1) == pytest.approx(-t * math.exp(-t * t / 2))
    assert pd.Kernel.from_name("Cauchy").name == c.name


def test_admissibility_constants():
    rep = pd.verify_admissibility(pd.Kernel.gaussian())
    assert rep.passed
    assert rep.C[0] == pytest.approx(1.2131, abs=1e-4)
    assert rep.epsilon > 0 and rep.beta > 0


def test_synthesize_and_noiseless_recovery():
    k = pd.sample_kernel(pd.Kernel.gaussian(), 1.0, 4)
    x = pd.SpikeTrain([pd.Spike(100, 3.0), pd.Spike(130, -2.0)], 256)
    m = pd.synthesize(x, k, pd.L1Budget(0.0))
    np.testing.assert_allclose(m.y, pd.convolve_same(x.dense(), k), atol=1e-15)
    sol = pd.solve_l1_deconvolution(m.y, k, 0.0)
    assert sol.status == pd.SolverStatus.Optimal
    assert sol.estimate().locations() == [100, 130]
    assert [s.amplitude for s in sol.support] == pytest.approx([3.0, -2.0], abs=1e-7)


@pytest.mark.parametrize("seed", range(4))
def test_l1_matches_highs(seed):
    rng = np.random.default_rng(seed)
    k = pd.sample_kernel(pd.Kernel.cauchy() if seed % 2 else pd.Kernel.gaussian(), 0.8, 2, 5e-2)
    n = 40
    x = np.zeros(n)
    x[[8, 19, 31]] = rng.uniform(-5, 5, 3)
    noise = 0.02 * (rng.random(n) - 0.5)
    y = pd.convolve_same(x, k) + noise
    delta = float(np.abs(noise).sum() * 2)
    sol = pd.solve_l1_deconvolution(y, k, delta)
    assert sol.objective == pytest.approx(highs_l1(y, k, delta), abs=1e-6)
    assert sol.residual_l1 <= delta * (1 + 1e-6)


def test_snr_is_realized():
    k = pd.sample_kernel(pd.Kernel.gaussian(), 1.0, 4)
    x = pd.SpikeTrain([pd.Spike(100 + 30 * i, 5.0 + i) for i in range(5)], 400)
    m = pd.synthesize(x, k, pd.GaussianSnr(20.0, 3))
    clean = pd.convolve_same(x.dense(), k)
    eta = m.y - clean
    assert 10 * math.log10(np.sum(clean**2) / np.sum(eta**2)) == pytest.approx(20.0, abs=1e-9)


def test_certificate_interpolates():
    g = pd.Kernel.gaussian()
    rep = pd.verify_admissibility(g)
    cert = pd.build_certificate([0.0, 3.0, 6.5], [1.0, -1.0, 1.0], g, 1.0)
    for t, u in zip(cert.nodes, cert.signs):
        assert cert.eval(t) == pytest.approx(u, abs=1e-9)
        assert cert.eval(t, 1) == pytest.approx(0.0, abs=1e-9)
    assert pd.verify_certificate(cert, rep.epsilon, rep.beta).passed
    with pytest.raises(pd.ConstructionFailed):
        pd.build_certificate([0.0, 1e-9], [1.0, -1.0], g, 1.0)


def test_invalid_arguments_raise_value_error():
    k = pd.sample_kernel(pd.Kernel.gaussian(), 1.0, 4)
    with pytest.raises(ValueError):
        pd.solve_l1_deconvolution(np.zeros(32), k, -1.0)
    with pytest.raises(ValueError):
        pd.SpikeTrain([pd.Spike(5, 1.0), pd.Spike(3, 1.0)], 10)


def test_baselines_find_isolated_spikes():
    k = pd.sample_kernel(pd.Kernel.gaussian(), 1.0, 4)
    x = pd.SpikeTrain([pd.Spike(60, 4.0), pd.Spike(120, -3.0)], 200)
    y = pd.synthesize(x, k, pd.L1Budget(0.0)).y
    omp = pd.omp_deconvolution(y, k, 2)
    assert omp.estimate.locations() == [60, 120]
    music = pd.music_deconvolution(y, k, 2)
    assert len(music.locations) == 2
    assert max(pd.localization_error(x, pd.SpikeTrain([pd.Spike(l, 1.0) for l in music.locations], 200))) <= 1


def test_metrics():
    a = pd.SpikeTrain([pd.Spike(10, 1.0), pd.Spike(30, -2.0)], 50)
    b = pd.SpikeTrain([pd.Spike(12, 1.0), pd.Spike(30, -1.0)], 50)
    assert pd.localization_error(a, b) == [2.0, 0.0]
    assert pd.l1_distance(a, b) == pytest.approx(3.0)
    assert pd.spearman(np.arange(5.0), np.arange(5.0) ** 3) == pytest.approx(1.0)


def test_run_experiment_small(tmp_path):
    rows = pd.run_experiment({
        "kernel": "gaussian",
        "sigmas": [1.0],
        "N": 4,
        "grid_len": 256,
        "spike_count": 3,
        "separations": [2.0],
        "snr_db": [30.0],
        "trials": 2,
        "methods": ["l1", "omp"],
        "threads": 1,
        "output_dir": str(tmp_path),
    })
    assert [r.method for r in rows] == ["l1", "omp"]
    assert all(r.trials == 2 for r in rows)
