import numpy as np
import pytest
from hypothesis import given, strategies as st

from cssim import diagnostics as dg
from cssim import geometry as geo
from cssim import model as md
from cssim.algebra import model_algebra
from cssim.jets import jet_space
from cssim.solver import DataConfig, GridConfig, HypConfig, RunConfig, SimState, TimeConfig, build_initial_data, evolve

from gauge_tools import gauge_transform

seeds = st.integers(0, 2**32 - 1)


def config(model="csh_abelian", n=64, hw=6.4, eps=0.01, t_end=1.0, coupled=True, taus=()):
    p = md.ModelParams(model, 1.0, 1.0, coupled)
    return RunConfig(model=model, params=p, data=DataConfig(epsilon=eps), grid=GridConfig(n, hw),
                     time=TimeConfig(t_end=t_end, diag_every=5), hyperboloid=HypConfig(taus=taus, n_y=24, n_theta=32))


def vacuum(model="csh_abelian", n=32):
    alg, rep = model_algebra(model)
    z = np.zeros((rep.v_dim, n, n), complex)
    return SimState(z, z.copy(), np.zeros((2, alg.dim, n, n)), np.zeros((alg.dim, n, n))), rep


def test_vacuum_records_are_zero():
    s, rep = vacuum()
    rec = dg.sigma_record(0, s, md.ModelParams(), rep, 0.1)
    assert all(v == 0 for v in rec.values())


def test_constant_field_energy():
    s, rep = vacuum(n=40)
    c = 0.3 - 0.4j
    s = SimState(np.full_like(s.phi, c), s.pi, s.a, s.b)
    h = 0.25
    p = md.ModelParams("csh_abelian", 1.0, 1.0)
    expect = 0.5 * abs(c) ** 2 * (40 * h) ** 2
    assert abs(dg.sigma_energy(s, p, rep, h) - expect) < 1e-14 * expect
    with pytest.raises(ValueError):
        dg.sigma_energy(s, p, rep, h, scheme="spectral")


def test_energy_schemes_agree_on_smooth_data():
    diffs = []
    for n in (64, 128):
        cfg = config(n=n, eps=0.3)
        _, rep = model_algebra(cfg.model)
        s = build_initial_data(cfg).state
        e1 = dg.sigma_energy(s, cfg.params, rep, cfg.grid.h)
        e2 = dg.sigma_energy(s, cfg.params, rep, cfg.grid.h, scheme="gradient")
        diffs.append(abs(e1 - e2) / e1)
    # both schemes are second order, so their gap shrinks by about 4 per halving
    assert diffs[0] / diffs[1] > 3.5 and diffs[1] < 2e-2


def test_free_energy_conserved_short_run():
    cfg = config(n=96, hw=4.8, t_end=1.0, coupled=False)
    cfg = RunConfig(**{**cfg.__dict__, "time": TimeConfig(t_end=1.0, cfl_safety=0.1, diag_every=5)})
    _, rep = model_algebra(cfg.model)
    mon = dg.SigmaMonitor(cfg.params, rep, cfg.grid.h, 5)
    evolve(cfg, [mon])
    e = np.array([r["sigma_energy"] for r in mon.records])
    assert np.max(np.abs(e - e[0])) < 1e-6 * e[0]


@given(seeds)
def test_energy_density_two_paths_and_lower_bounds(seed):
    r = np.random.default_rng(seed)
    P = 40
    tau, y, th = r.uniform(0.5, 4, P), r.uniform(0.01, 2.5, P), r.uniform(0, 2 * np.pi, P)
    X = np.stack(geo.from_hyperboloidal(tau, y, th))
    phi = r.normal(size=(3, P)) + 1j * r.normal(size=(3, P))
    D = r.normal(size=(3, 3, P)) + 1j * r.normal(size=(3, 3, P))
    q = dg.hyperboloid_quantities(X, phi, D, 1.7)
    np.testing.assert_allclose(q["ed"], dg.energy_density_tensor(X, phi, D, 1.7), rtol=1e-10, atol=1e-12)
    ch = np.cosh(y)
    Dy = np.einsum("mp,mvp->vp", geo.d_y(X), D) / tau
    n2 = lambda v: np.sum(np.abs(v) ** 2, axis=0)
    # 1/2 ch (a^2 + b^2) - sh a b >= 1/2 e^{-y} (a^2 + b^2)
    assert np.all(q["ed"] >= 0.5 * np.exp(-y) * (n2(q["Dtau"]) + n2(Dy)) - 1e-12 * ch * n2(D.reshape(9, P)))
    assert np.all(q["ed"] >= 0.5 * ch * 1.7 * n2(phi) * (1 - 1e-12))


def test_diamagnetic_inequality_exact():
    J = jet_space(4)
    _, rep = model_algebra("csh_adjoint_su2")
    r = np.random.default_rng(5)
    for _ in range(50):
        phi = J.random_polynomial(r, (3,), 3, complex_=True)
        A = J.random_polynomial(r, (3, 3), 3)
        assert dg.diamagnetic_jet(phi, A, rep, J) <= 1e-12


def test_diamagnetic_inequality_on_grid():
    cfg = config("csh_adjoint_su2", n=128, eps=0.005)
    _, rep = model_algebra(cfg.model)
    s = build_initial_data(cfg).state
    # violations only at truncation level
    assert dg.diamagnetic_grid(s, rep, cfg.grid.h) < 1e-3 * cfg.data.epsilon


def test_weighted_norm_closed_forms():
    q = geo.hyperboloid_quadrature(2.0, 1.5, 128, 64)
    ones = np.ones_like(q.y)
    assert abs(dg.weighted_norm(ones, q, 2) - np.sqrt(2 * np.pi * 4 * 1.5)) < 1e-10
    assert abs(dg.weighted_norm(ones, q, 1, weight_power=1) - 2 * np.pi * 4 * np.sinh(1.5)) < 1e-8
    assert dg.weighted_norm(2 * ones, q, "inf") == 2.0


def test_column_headers():
    assert dg.sigma_columns("csh_adjoint_su2", 3) == [
        "step", "t", "sigma_energy", "charge_0", "charge_1", "charge_2", "constraint_resid_max",
        "constraint_resid_l2", "constraint_source_max", "b_consistency", "sup_decay", "sup_covT_decay"]
    assert dg.sigma_columns("csd_abelian", 1)[-1] == "dirac_resid_max"
    assert dg.HYP_COLUMNS == ["tau", "hyp_energy", "weighted_L2", "weighted_L2_cosh", "weighted_Linf_cosh",
                              "ks_ratio", "ode_quantity_axis", "ode_quantity_mid"]


@pytest.fixture(scope="module")
def sampled_run():
    cfg = config(n=64, hw=6.4, t_end=3.0, taus=(2.0, 2.5))
    alg, rep = model_algebra(cfg.model)
    smp = dg.HyperboloidSampler(cfg.hyperboloid.taus, 1.0, cfg.grid.spec(), cfg.params, rep, 24, 32)
    evolve(cfg, [smp])
    smp.finalize()
    return smp


def test_sampler_results_sane(sampled_run):
    res = sampled_run.results()
    assert [r["tau"] for r in res] == [2.0, 2.5]
    for r in res:
        assert r["hyp_energy"] > 0 and r["weighted_L2"] > 0 and 0 < r["ks_ratio"] < np.inf
        assert abs(r["hyp_energy"] - r["energy_tensor"]) < 1e-12 * r["hyp_energy"]
        assert len(r["ode_quantity"]) == 2


def test_ks_ratio_scale_invariant(sampled_run):
    base = [sampled_run.evaluate(s) for s in sampled_run.samples]
    for s in sampled_run.samples:
        for k in s.buf:
            s.buf[k] = 2 * s.buf[k]
    scaled = [sampled_run.evaluate(s) for s in sampled_run.samples]
    for s in sampled_run.samples:
        for k in s.buf:
            s.buf[k] = s.buf[k] / 2
    for b, c in zip(base, scaled):
        assert abs(c["ks_ratio"] - b["ks_ratio"]) < 1e-12 * b["ks_ratio"]
        assert abs(c["hyp_energy"] - 4 * b["hyp_energy"]) < 1e-12 * c["hyp_energy"]
        assert abs(c["weighted_L2"] - 2 * b["weighted_L2"]) < 1e-12 * c["weighted_L2"]


def test_sampler_needs_long_enough_run():
    cfg = config(n=64, hw=6.4, t_end=0.5, taus=(3.0,))
    _, rep = model_algebra(cfg.model)
    smp = dg.HyperboloidSampler(cfg.hyperboloid.taus, 1.0, cfg.grid.spec(), cfg.params, rep, 8, 8)
    evolve(cfg, [smp])
    with pytest.raises(ValueError):
        smp.finalize()


def test_monitor_cadence():
    cfg = config(n=48, hw=4.8, t_end=0.5)
    _, rep = model_algebra(cfg.model)
    mon = dg.SigmaMonitor(cfg.params, rep, cfg.grid.h, 4, last_step=7)
    s = build_initial_data(cfg).state
    for k in range(8):
        mon(k, s, s)
    assert [r["step"] for r in mon.records] == [0, 4, 7]


def _gauge_pair(model, n):
    """Records before and after U = exp(chi e_1), chi a narrow Gaussian."""
    cfg = config(model, n=n, eps=0.05)
    alg, rep = model_algebra(model)
    s = build_initial_data(cfg).state
    g, h = cfg.grid.spec(), cfg.grid.h
    X1, X2 = np.meshgrid(g.nodes, g.nodes, indexing="ij")
    chi = 0.5 * np.exp(-((X1 - 0.3) ** 2) - (X2 + 0.2) ** 2)
    s2 = gauge_transform(s, chi, alg, rep, h)
    return dg.sigma_record(0, s, cfg.params, rep, h), dg.sigma_record(0, s2, cfg.params, rep, h)


@pytest.mark.parametrize("model", ["csh_abelian", "csh_adjoint_su2"])
def test_gauge_invariance_of_records(model):
    pointwise = ["charge_0", "constraint_source_max", "b_consistency", "sup_decay"]
    stencil = ["sigma_energy", "sup_covT_decay"]
    resid = ["constraint_resid_max", "constraint_resid_l2"]
    if model == "csh_abelian":
        pointwise += resid
        resid = []
    diffs = {}
    for n in (128, 256):
        r1, r2 = _gauge_pair(model, n)
        for k in pointwise:
            assert abs(r1[k] - r2[k]) < 1e-14 * max(1.0, abs(r1[k])), k
        # residuals sit at round-off, so they are measured against the source they balance
        scale = {k: abs(r1[k]) for k in stencil} | {k: r1["constraint_source_max"] for k in resid}
        diffs[n] = {k: abs(r1[k] - r2[k]) / scale[k] for k in scale}
    for k in diffs[256]:
        # differencing e^{chi T} phi is not exactly covariant, the gap is 4th-order truncation
        assert diffs[256][k] < diffs[128][k] / 8 and diffs[256][k] < 2e-4, (k, diffs)
