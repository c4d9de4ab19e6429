"""Acceptance suite: one reported line per criterion, tolerances as stated.

Run ``pytest tests/test_acceptance.py -v -s`` (the lines are printed even
without ``-s``).  Criteria with a known blocking analysis fail here on
purpose; see the project decisions log.
"""

import json
import time

import numpy as np
import pytest

from mqcdecay import cli, ed, fermion, fitting
from mqcdecay.core import ChainSpec, InitialState, make_initial_state, project_coherence
from mqcdecay.fermion import FermionModel
from mqcdecay.fitting import DecayCurve


@pytest.fixture
def report(capsys):
    def emit(number, passed, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if passed else 'FAIL'} {detail}")
        assert passed, detail

    return emit


def rel_dev(a, b, floor=1e-8):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.abs(a - b) / np.maximum(np.abs(b), floor)


def curvature_moment(signal, m):
    t = np.linspace(0, 0.05 / np.sqrt(m), 30)
    y = signal(t)
    c0, c2 = np.linalg.lstsq(np.column_stack([np.ones_like(t), t**2]), y, rcond=None)[0]
    return -2 * c2 / c0


@pytest.fixture(scope="module")
def cross_engine_runs():
    b = 1.0
    taus = np.linspace(0, 3 / b, 50)
    out = {}
    for n in (4, 6, 8):
        chain = ChainSpec(n, b)
        start = time.perf_counter()
        spectra = [ed.run_protocol(InitialState.THERMAL, chain, ed.ProtocolParams(t, (), K=n + 1)).spectra[0]
                   for t in taus]
        out[n] = (taus, spectra, time.perf_counter() - start)
    return b, out


def test_criterion_01_cross_engine_exactness(cross_engine_runs, report):
    b, runs = cross_engine_runs
    worst, runtime = 0.0, 0.0
    for n, (taus, spectra, dt) in runs.items():
        model = FermionModel(n, b)
        e0 = [s.normalized()[0] for s in spectra]
        e2 = [s.normalized()[2] for s in spectra]
        worst = max(worst, rel_dev(e0, fermion.i0(model, taus)).max(), rel_dev(e2, fermion.i2(model, taus)).max())
        runtime += dt
    report(1, worst <= 1e-6 and runtime < 60, f"max rel dev {worst:.2e} (tol 1e-6), runtime {runtime:.1f} s (< 60 s)")


def test_criterion_02_selection_rule(cross_engine_runs, report):
    _, runs = cross_engine_runs
    worst = 0.0
    for n, (_, spectra, _) in runs.items():
        for s in spectra:
            worst = max(worst, sum(abs(v) for m, v in s.normalized().items() if m not in (0, 2, -2)))
    report(2, worst < 1e-10, f"max weight outside m in {{0, +-2}}: {worst:.2e} (tol 1e-10)")


def test_criterion_03_sum_rules(report):
    taus = np.linspace(0, 3, 200)
    worst_a = max(np.abs(fermion.i0(FermionModel(n, 1.0), taus) + 2 * fermion.i2(FermionModel(n, 1.0), taus) - 1).max()
                  for n in (4, 8, 50, 1000))
    n = 6
    chain = ChainSpec(n, 1.0)
    ref = n * 2**n
    worst_e = 0.0
    hd = ed.build_dipolar(chain)
    for tau in np.linspace(0, 3, 7):
        res = ed.run_protocol(InitialState.THERMAL, chain, ed.ProtocolParams(tau, (), K=n + 1))
        worst_e = max(worst_e, abs(res.intensities[0].sum() - ref) / ref)
        rho = ed.prepared_state(InitialState.THERMAL, chain, tau)
        for t in (0.0, 0.7, 5.0):
            r = ed.evolve(rho, hd, t)
            total = sum(np.linalg.norm(project_coherence(r, m).matrix) ** 2 for m in range(-n, n + 1))
            worst_e = max(worst_e, abs(total - ref) / ref)
    report(3, worst_a <= 1e-12 and worst_e <= 1e-10,
           f"|i0 + 2 i2 - 1| max {worst_a:.1e} (tol 1e-12); ED sector-sum drift {worst_e:.1e} (tol 1e-10)")


def test_criterion_04_second_moment_equivalence(report):
    n, b = 8, 1.0
    chain = ChainSpec(n, b)
    model = FermionModel(n, b)
    worst, mismatched = 0.0, 0
    for tau in np.linspace(0.05, 3.0, 20):
        e = ed.sector_moments_ed(ed.prepared_state(InitialState.THERMAL, chain, tau), chain)
        a = fermion.moments(model, tau)
        for key in ("zz_zq", "zz_dq", "xx_zq", "xx_dq"):
            x, y = e[key], getattr(a, "m_" + key)
            if (x is None) != (y is None):
                mismatched += 1
            elif x is not None:
                worst = max(worst, float(rel_dev(x, y)))
    report(4, worst <= 1e-6 and mismatched == 0,
           f"N=8, 20 tau points: max per-sector rel dev {worst:.2e} (tol 1e-6), absent-sector mismatches {mismatched}")


def test_criterion_05_short_tau_double_quantum_limit(report):
    b, n = 1.0, 100
    m2 = fermion.moments(FermionModel(n, b), 1e-3 / b).m_dq
    target = b**2 / 12
    dev = abs(m2 - target) / target
    report(5, dev <= 0.01,
           f"M(2)(b tau = 1e-3, N = 100) = {m2:.4f} b^2 vs b^2/12 = {target:.4f} b^2, rel dev {dev:.3g} (tol 0.01)")


def test_criterion_06_short_time_law(report):
    worst = 0.0
    chain = ChainSpec(8, 1.0)
    h = ed.build_dipolar(chain)
    cases = [ed.prepared_state(InitialState.THERMAL, chain, tau) for tau in (0.2, 0.5, 1.0)]
    chain10 = ChainSpec(10, 1.0)
    h10 = ed.build_dipolar(chain10)
    cases10 = [make_initial_state(InitialState.TRANSVERSE_X, chain10)]
    for hh, rhos in ((h, cases), (h10, cases10)):
        for rho in rhos:
            m = ed.second_moment_ed(rho, rho, hh)
            s0 = ed.signal_curve(rho, rho, hh, [0.0])[0]
            fit = curvature_moment(lambda t: ed.signal_curve(rho, rho, hh, t) / s0, m)
            worst = max(worst, abs(fit - m) / m)
    report(6, worst <= 1e-3, f"quadratic-fit curvature vs trace moment: max rel dev {worst:.2e} (tol 1e-3)")


def test_criterion_07_ordering_and_anticorrelation(report):
    model = FermionModel(100, 1.0)
    grid = np.linspace(0.01, 3.0, 300)
    violations = sum(1 for bt in grid if (mb := fermion.moments(model, bt)).m_dq < mb.m_zq)
    period = np.linspace(0.05, 0.05 + 2 * np.pi / 16, 60)
    m0 = [fermion.moments(model, t).m_zq for t in period]
    corr = float(np.corrcoef(fermion.i0(model, period), m0)[0, 1])
    report(7, violations == 0 and corr < 0,
           f"M(2) < M(0) at {violations}/{len(grid)} grid points; corr(I0, M0) over one period = {corr:.3f} (< 0)")


def test_criterion_08_pulse_cycle(report):
    chain = ChainSpec(6, 1.0)
    hdq = ed.build_dq(chain)
    dts = 1e-2 / 2 ** np.arange(5)
    errs = []
    for dt in dts:
        p = ed.PulseCycleParams(dt, variant="P8")
        u = ed.pulse_cycle_propagator(chain, p).matrix
        v = ed.propagator(hdq, p.effective_dq_time()).matrix
        errs.append(np.linalg.norm(u - v))
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    p = ed.PulseCycleParams(1e-3, variant="P8")
    u = ed.pulse_cycle_propagator(chain, p).matrix
    v = ed.propagator(hdq, p.effective_dq_time()).matrix
    fid = abs(np.trace(v.conj().T @ u)) / 2**6
    report(8, monotone and fid > 0.999,
           f"error over delta_t {dts[0]:.1e}..{dts[-1]:.1e}: {', '.join(f'{e:.1e}' for e in errs)} "
           f"(monotone: {monotone}); fidelity at b dt = 1e-3: {fid:.8f} (> 0.999)")


def test_criterion_09_state_comparison(report):
    n, b = 10, 1.0
    chain = ChainSpec(n, b)
    h = ed.build_dipolar(chain)

    def moment(kind, tau):
        rho = ed.prepared_state(kind, chain, tau)
        return ed.second_moment_ed(rho, rho, h)

    m_th = moment(InitialState.THERMAL, 0.0)
    m_end = moment(InitialState.END_POLARIZED, 0.0)
    rho_x = make_initial_state(InitialState.TRANSVERSE_X, chain)
    m_x = moment(InitialState.TRANSVERSE_X, 0.0)
    s0 = ed.signal_curve(rho_x, rho_x, h, [0.0])[0]
    m_fid = curvature_moment(lambda t: ed.signal_curve(rho_x, rho_x, h, t) / s0, m_x)
    m_xx = [moment(InitialState.XX, tau) for tau in (0.0, 0.2 / b, 0.5 / b)]
    checks = {
        "thermal = 0": abs(m_th) < 1e-10 * b**2,
        "end = 0": abs(m_end) < 1e-10 * b**2,
        "x = FID": abs(m_x - m_fid) / m_fid <= 1e-3,
        "xx(0) < x": m_xx[0] < m_x,
        "xx rises": m_xx[0] < m_xx[1] < m_xx[2],
    }
    detail = (f"M_th = {m_th:.2e}, M_end = {m_end:.4g} b^2, M_x = {m_x:.4g} (FID fit {m_fid:.4g}), "
              f"M_xx(b tau = 0, 0.2, 0.5) = {', '.join(f'{v:.3g}' for v in m_xx)}; "
              + "; ".join(f"{k}: {'ok' if v else 'NO'}" for k, v in checks.items()))
    report(9, all(checks.values()), detail)


def _coverage(truth, model, fit, trials, rng, t):
    clean = model(t, **truth)
    hits = 0
    for _ in range(trials):
        y = clean * (1 + 0.01 * rng.standard_normal(t.size))
        r = fit(DecayCurve(t, y, sigma=0.01 * np.abs(y)))
        if r.stderr is None:
            continue
        if all(abs(r.params[k] - v) <= 3 * r.stderr[k] for k, v in truth.items()):
            hits += 1
    return hits / trials


def test_criterion_10_fit_recovery(report):
    rng = np.random.default_rng(20240601)
    t = np.linspace(0, 145e-6, 30)
    gauss = _coverage({"A": 1.0, "M": 4e8, "C": 0.3}, fitting.gaussian_model, fitting.fit_gaussian, 500, rng, t)
    sinc = _coverage({"A": 1.0, "m1": 1e8, "m2": 3e4, "C": 0.3}, fitting.sinc_gaussian_model,
                     fitting.fit_sinc_gaussian, 500, rng, t)
    b = 8.17e3
    taus = np.linspace(0, 400e-6, 40)
    fitted = fitting.fit_model_b(taus, fermion.i2_infinite(b, taus), fitting.FitModel.INTENSITY_I2).params["b"]
    b_dev = abs(fitted - b) / b
    report(10, gauss >= 0.95 and sinc >= 0.95 and b_dev < 1e-3,
           f"3-sigma coverage: Gaussian {gauss:.1%}, sinc-Gaussian {sinc:.1%} (>= 95%, 500 trials each); "
           f"I2 b-fit rel err {b_dev:.1e} (< 1e-3)")


def test_criterion_11_asymptote_identity(report):
    rng = np.random.default_rng(11)
    model = FermionModel(50, 1.0)
    taus = rng.uniform(0, 3, 40)
    gap = float(np.max(np.abs(fermion.asymptote_c(model, taus, verify=False)
                              - fermion.asymptote_c_population_form(model, taus))))
    chain = ChainSpec(8, 1.0)
    h = ed.build_dipolar(chain)
    m8 = FermionModel(8, 1.0)
    devs = []
    for tau in (0.1, 0.3, 0.6, 1.0):
        rho = ed.prepared_state(InitialState.THERMAL, chain, tau)
        devs.append((tau, ed.asymptote_ed(rho, rho, h), float(fermion.asymptote_c(m8, tau))))
    info = ", ".join(f"b tau={t}: ED {a:.3f} vs C {c:.3f}" for t, a, c in devs)
    report(11, gap <= 1e-12, f"two forms agree to {gap:.1e} (tol 1e-12); informational N=8: {info}")


def test_criterion_12_determinism(tmp_path, report):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "chain": {"n_spins": 6, "coupling_b": 7.7e3},
        "tau_grid": {"start": 0, "stop": 3e-4, "num": 6},
        "t_grid": {"start": 0, "stop": 5e-4, "num": 11},
        "outputs": {"formats": ["csv", "json"]},
        "seed": 3,
    }))
    codes = [cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / d)]) for d in ("a", "b")]
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in ("curves.csv", "curves.json"))
    report(12, codes == [0, 0] and same, f"exit codes {codes}; curves.csv/json byte-identical: {same}")
