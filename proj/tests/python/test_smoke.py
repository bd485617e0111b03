import math

import pytest

import qtunnel as qt


def test_model_basics():
    cw = qt.ModelSpec.curie_weiss(0.4, 0.0)
    assert qt.effective_potential(0.0, 1.0, cw) == pytest.approx(-0.4)
    assert qt.entropic_factor(0.0) == pytest.approx(math.log(2.0))
    ext = qt.static_extrema(cw, 4.0)
    assert ext["f0"] >= ext["f1"]
    assert qt.critical_ell(qt.ModelSpec.curie_weiss(0.3, 0.0)) == pytest.approx(0.3)


def test_spectra():
    assert qt.multiplicity(4, 2) == 3
    ev = qt.sector_eigenvalues(2, 2, qt.ModelSpec.curie_weiss(0.5, 0.0))
    assert ev[0] == pytest.approx((-1 - math.sqrt(5)) / 2)
    p = qt.equilibrium_mz_distribution(6, qt.ModelSpec.curie_weiss(0.5, 0.0), 2.0)
    assert sum(p) == pytest.approx(1.0, abs=1e-12)


def test_instanton_and_functional():
    cw = qt.ModelSpec.curie_weiss(0.5, 0.0)
    sol = qt.solve_instanton(cw, 8.0)
    assert sol.regime == "instanton"
    assert sol.alpha == pytest.approx(0.8799452294, abs=1e-9)
    assert sol.ell == pytest.approx(math.tanh(sol.script_i), abs=1e-10)
    tau, mz, mx, nu = sol.trajectory[0]
    assert tau == 0.0 and mz == pytest.approx(sol.a0)
    assert qt.delta_f(cw, 8.0) == pytest.approx(sol.alpha, abs=1e-6)
    assert all(res <= tol for _, res, tol in qt.verify_identities(cw, 8.0))


def test_errors_carry_codes():
    with pytest.raises(qt.QtunnelError) as info:
        qt.solve_instanton(qt.ModelSpec.curie_weiss(2.0, 0.0), 4.0)
    assert info.value.code == "MONOSTABLE"
    with pytest.raises(qt.QtunnelError):
        qt.multiplicity(4, 1)


def test_qmc_and_fit():
    cw = qt.ModelSpec.curie_weiss(0.5, 0.0)
    a = qt.escape_run(6, cw, 2.0, seed=3)
    b = qt.escape_run(6, cw, 2.0, seed=3)
    assert a.escaped and a.sweeps == b.sweeps
    p = qt.equilibrium_sample(4, cw, 1.0, seed=5, n_samples=20000, thin=5)
    exact = qt.equilibrium_mz_distribution(4, cw, 1.0)
    assert qt.total_variation(p, exact) < 0.03
    recs = [qt.EscapeRecord(n, 4.0, 0.5, 0.0, i, math.exp(0.3 * n) / n) for n in (12, 14, 16) for i in range(50)]
    fit = qt.fit_alpha(recs)
    assert fit["alpha"] == pytest.approx(0.3)
    assert fit["stderr"] < 1e-12


def test_spike_and_cli(tmp_path):
    spike = qt.SpikeSpec()
    spike.shape = qt.SpikeShape.RECTANGULAR
    rep = qt.spike_report(spike)
    assert rep["gamma_c"] == pytest.approx(4.0 / 3.0, abs=1e-15)
    assert abs(rep["mu_est"] - 1.0) < 0.05
    code, out, err = qt.run_cli(["verify", "-s", "gamma=0.4", "-s", "beta=4", "-s", f"output_dir={tmp_path}"])
    assert code == 0, err
    assert (tmp_path / "verify.txt").read_text().startswith("# qtunnel verify\n")
    code, _, err = qt.run_cli(["instanton", "-s", "gamma=0.5"])
    assert code == 2 and err.startswith("error: CONFIG: ")
