import numpy as np
import pytest

from ddregister.circuits import (
    Backend,
    Circuit,
    entangler_instructions,
    ideal_repetition_states,
    mqc_experiment,
    thermal_register_state,
)
from ddregister.fitting import (
    ResidualCrosstalk,
    bitflip_channel,
    crosstalk_trace,
    crosstalk_trace_matrix,
    fit_gate_error,
    fit_sinusoid,
    kraus_bitflip_ops,
    optimize_ghz_prep,
    predict_fidelity_decay,
    residual_mqc_theory,
    state_fidelity_approx,
    state_fidelity_exact,
)
from ddregister.linalg import DensityState, SZ, embed, pure_state, tensor


def random_density(rng, n_sites):
    d = 2**n_sites
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return DensityState(rho / np.trace(rho).real, (2,) * n_sites)


# -- sinusoid fits -------------------------------------------------------------


def test_fit_exact_single_tone():
    phi = np.linspace(0, 4 * np.pi, 40)
    p = 0.5 * (1 + np.cos(3 * phi - 0.4))
    model = fit_sinusoid(phi, p)
    assert model.l == pytest.approx(3.0, abs=1e-6)
    assert model.delta == pytest.approx(0.4, abs=1e-6)
    assert model.amplitude == pytest.approx(0.5, abs=1e-6)
    assert model.offset == pytest.approx(0.5, abs=1e-6)
    assert model.residual_norm < 1e-8


def test_fit_ideal_bipartite_pipeline(cfg):
    backend = Backend(cfg, "ideal")
    phi = np.linspace(0, 4 * np.pi, 25)
    res = mqc_experiment(backend, "bipartite", ["q1"], phi)
    model = fit_sinusoid(res.phi, res.p0)
    assert model.l == pytest.approx(1.0, abs=0.02)
    assert model.delta == pytest.approx(np.pi, abs=0.05)


def test_fit_two_tone_synthetic():
    phi = np.linspace(0, 4 * np.pi, 49)
    p = 0.5 + 0.3 * np.cos(1.0 * phi - 0.2) + 0.15 * np.cos(3.0 * phi - 1.1)
    model = fit_sinusoid(phi, p, tones=2)
    freqs = sorted(t.frequency for t in model.tones)
    assert freqs[0] == pytest.approx(1.0, abs=1e-4)
    assert freqs[1] == pytest.approx(3.0, abs=1e-4)


def test_fit_scale_consistency():
    phi = np.linspace(0, 4 * np.pi, 33)
    p = 0.5 * (1 + np.cos(2 * phi - 0.9))
    l_ref = fit_sinusoid(phi, p).l
    for c in (0.7, 1.1):
        scaled = c * (p - 0.5) + 0.5
        assert abs(fit_sinusoid(phi, scaled).l - l_ref) < 1e-6


def test_fit_requires_enough_samples():
    with pytest.raises(ValueError):
        fit_sinusoid([0, 1, 2], [0.5, 0.6, 0.7])
    phi = np.linspace(0, 0.5, 12)  # far less than one period
    with pytest.raises(ValueError):
        fit_sinusoid(phi, 0.5 * (1 + np.cos(phi)), l_init=1.0)


def test_fit_reports_uncertainties():
    rng = np.random.default_rng(3)
    phi = np.linspace(0, 4 * np.pi, 60)
    p = 0.5 * (1 + np.cos(phi - np.pi)) + rng.normal(scale=0.01, size=phi.size)
    model = fit_sinusoid(phi, p)
    assert 0 < model.tones[0].frequency_err < 0.05
    assert model.l == pytest.approx(1.0, abs=0.05)


# -- residual crosstalk closed form ---------------------------------------------


def random_xz_axis(rng):
    a = rng.uniform(0, 2 * np.pi)
    return (float(np.sin(a)), 0.0, float(np.cos(a)))


def test_crosstalk_trace_matches_matrix_oracle(rng):
    worst = 0.0
    for _ in range(60):
        ct = ResidualCrosstalk(
            random_xz_axis(rng), random_xz_axis(rng), float(rng.uniform(0, 2 * np.pi))
        )
        phi = rng.uniform(0, 2 * np.pi, size=7)
        closed = crosstalk_trace(ct, phi)
        direct = crosstalk_trace_matrix(ct, phi)
        worst = max(worst, float(np.max(np.abs(closed - direct))))
        assert float(np.max(np.abs(np.imag(direct)))) < 1e-10
    assert worst < 1e-10


def test_crosstalk_trace_zero_angle_reduces_to_ideal(rng):
    ct = ResidualCrosstalk(random_xz_axis(rng), random_xz_axis(rng), 0.0)
    phi = np.linspace(0, 2 * np.pi, 9)
    assert np.allclose(crosstalk_trace(ct, phi), 2.0, atol=1e-14)
    p_closed, _ = residual_mqc_theory(ct, 2.0, 0.3, phi)
    assert np.allclose(p_closed, 0.5 * (1 + 0.5 * np.real(np.exp(1j * (2 * phi - 0.3)) * 2)), atol=1e-12)


def test_crosstalk_requires_unit_axes():
    with pytest.raises(ValueError):
        ResidualCrosstalk((1.0, 0.0, 1.0), (1.0, 0.0, 0.0), 0.5)


def test_residual_theory_two_tone_content(rng):
    # tr[A] is harmonic in phi, so P picks up tones at L-1 and L+1
    ct = ResidualCrosstalk(
        (np.sin(0.8), 0, np.cos(0.8)), (np.sin(-0.6), 0, np.cos(-0.6)), 2.0
    )
    phi = np.linspace(0, 4 * np.pi, 64, endpoint=False)
    p_closed, _ = residual_mqc_theory(ct, 2.0, 0.0, phi)
    spec = np.abs(np.fft.rfft(p_closed - p_closed.mean()))
    # frequency axis in units of 1/(2) cycles per rad -> index = 2*frequency
    idx1, idx3 = 2, 6
    others = [i for i in range(1, 10) if i not in (idx1, idx3, 4)]
    assert spec[idx1] > 5 * max(spec[i] for i in others)
    assert spec[idx3] > 5 * max(spec[i] for i in others)


# -- GHZ optimizer ----------------------------------------------------------------


def test_optimizer_ideal_includes_analytic_prep(cfg):
    backend = Backend(cfg, "ideal")
    prep = optimize_ghz_prep(backend, ["q1", "q3"], "sequential", seed=1, iterations=400, restarts=2)
    assert prep.fidelity >= 0.999


def test_optimizer_deterministic_under_seed(cfg):
    backend = Backend(cfg, "compiled")
    a = optimize_ghz_prep(backend, ["q1", "q2"], "parallel", seed=7, iterations=150, restarts=2)
    b = optimize_ghz_prep(backend, ["q1", "q2"], "parallel", seed=7, iterations=150, restarts=2)
    assert a.repeats == b.repeats
    assert a.angles == b.angles
    assert a.fidelity == b.fidelity


def _unoptimized_ghz_fidelity(backend, targets, kind):
    """Phase-free GHZ fidelity of the uncompensated analytic prep."""
    from ddregister.circuits import ElectronRotation, NuclearLocal, run_circuit
    from ddregister.fitting import ghz_fidelity_free_phase
    from ddregister.linalg import partial_trace

    ins = [NuclearLocal(q, "x", np.pi / 2) for q in targets]
    ins.append(ElectronRotation("y", np.pi / 2))
    ins += entangler_instructions(kind, targets)
    rho = run_circuit(
        Circuit(ins), backend, thermal_register_state(backend.cfg, polarized=targets)
    )
    keep = [0] + [backend.cfg.site(q) for q in targets]
    return ghz_fidelity_free_phase(partial_trace(rho, keep))[0]


def test_optimizer_compiled_parallel_l3_fidelity(cfg):
    backend = Backend(cfg, "compiled")
    prep = optimize_ghz_prep(backend, ["q1", "q2", "q3"], "parallel", seed=11)
    assert prep.fidelity >= 0.95


def test_optimizer_sequential_beats_unoptimized(cfg):
    backend = Backend(cfg, "compiled")
    baseline = _unoptimized_ghz_fidelity(backend, ["q1", "q2", "q3"], "sequential")
    prep = optimize_ghz_prep(backend, ["q1", "q2", "q3"], "sequential", seed=11)
    assert prep.fidelity >= baseline + 0.1, (prep.fidelity, baseline)


# -- state fidelity estimators ------------------------------------------------------


def test_state_fidelity_approx_cases():
    assert state_fidelity_approx([1.0, 1.0, 1.0]) == pytest.approx(1.0)
    assert state_fidelity_approx([0.0, 0.0]) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        state_fidelity_approx([1.5])


def test_state_fidelity_exact_cases():
    ket = np.zeros(8)
    ket[0] = 1.0
    assert state_fidelity_exact(pure_state(ket)) == pytest.approx(1.0, abs=1e-12)
    ghz = np.zeros(8)
    ghz[0] = ghz[-1] = 1 / np.sqrt(2)
    assert state_fidelity_exact(pure_state(ghz)) == pytest.approx(0.5, abs=1e-12)


def test_fidelity_approx_equals_exact_on_product_states(rng):
    for _ in range(25):
        parts = []
        zs = []
        for _ in range(3):
            r = random_density(rng, 1)
            parts.append(r.matrix)
            zs.append(float(np.trace(SZ @ r.matrix).real))
        rho = DensityState(tensor(parts), (2, 2, 2))
        assert abs(state_fidelity_approx(zs) - state_fidelity_exact(rho)) < 1e-12


def test_exact_correlator_sum_equals_matrix_element(rng):
    for _ in range(100):
        rho = random_density(rng, int(rng.integers(1, 4)))
        assert abs(state_fidelity_exact(rho) - rho.matrix[0, 0].real) < 1e-12


def test_m2_gap_equals_minus_quarter_covariance(rng):
    for _ in range(25):
        rho = random_density(rng, 2)
        z_e = rho.expect(embed(SZ, 0, 2))
        z_n = rho.expect(embed(SZ, 1, 2))
        zz = rho.expect(tensor([SZ, SZ]))
        cov = zz - z_e * z_n
        gap = state_fidelity_approx([z_e, z_n]) - state_fidelity_exact(rho)
        assert abs(gap - (-cov / 4.0)) < 1e-12


# -- bit-flip channel and gate-error fit -----------------------------------------------


def test_bitflip_zero_rate_is_identity(rng):
    rho = random_density(rng, 3)
    out = bitflip_channel(rho, 0.0)
    assert np.max(np.abs(out.matrix - rho.matrix)) < 1e-14


def test_bitflip_single_flip_coefficient():
    ops = kraus_bitflip_ops(2, 0.1)
    # patterns in lexicographic order: II, IX, XI, XX
    assert np.max(np.abs(ops[1])) == pytest.approx(np.sqrt(0.09), abs=1e-12)
    assert np.max(np.abs(ops[2])) == pytest.approx(np.sqrt(0.09), abs=1e-12)


def test_bitflip_half_rate_fully_mixes():
    ket = np.zeros(4)
    ket[0] = 1.0
    out = bitflip_channel(pure_state(ket, (2, 2)), 0.5)
    assert np.allclose(np.diag(out.matrix).real, 0.25, atol=1e-12)


def test_bitflip_trace_preservation_identity():
    for m in range(1, 6):
        for eps in (0.0, 0.1, 0.37, 0.5, 0.9):
            total = sum(np.trace(k.conj().T @ k).real for k in kraus_bitflip_ops(m, eps))
            assert abs(total / 2**m - 1.0) < 1e-12


def test_gate_error_roundtrip():
    n_values = [0, 4, 8, 12, 16, 20]
    f = predict_fidelity_decay(n_values, 4, 0.3, 0.08)
    fit = fit_gate_error(list(zip(n_values, f)), 4)
    assert fit.eps_spam == pytest.approx(0.3, abs=0.01)
    assert fit.eps_gate == pytest.approx(0.08, abs=0.01)
    assert fit.gate_fidelity == pytest.approx((1 - fit.eps_gate) ** 4, abs=1e-12)


def test_gate_error_zero_noise():
    n_values = [0, 4, 8, 12]
    data = [(n, 1.0) for n in n_values]
    fit = fit_gate_error(data, 2)
    assert fit.eps_gate == pytest.approx(0.0, abs=0.005)


def test_gate_error_g2_identity():
    fit = fit_gate_error([(0, 1.0), (4, 0.92), (8, 0.85)], 2)
    assert fit.gate_fidelity == pytest.approx((1 - fit.eps_gate) ** 2, abs=1e-12)


def test_gate_error_with_ideal_initial_states(cfg):
    backend = Backend(cfg, "ideal")
    n_values = [8, 13, 20, 28]
    states = ideal_repetition_states(backend, ["q1", "q2", "q3"], n_values)
    # data generated from the ideal states with known channel rates
    f = predict_fidelity_decay(n_values, 4, 0.25, 0.05, states)
    fit = fit_gate_error(list(zip(n_values, f)), 4, states)
    assert fit.eps_spam == pytest.approx(0.25, abs=0.01)
    assert fit.eps_gate == pytest.approx(0.05, abs=0.01)


def test_gate_error_needs_three_points():
    with pytest.raises(ValueError):
        fit_gate_error([(0, 1.0), (4, 0.9)], 2)
