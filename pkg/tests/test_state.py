import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vqdenoise import state as qs
from vqdenoise.state import GateOp, NoiseSpec, QuantumState

SQ2 = 1 / np.sqrt(2)


def bell():
    return QuantumState.pure([SQ2, 0, 0, SQ2])


def plus():
    return QuantumState.pure([SQ2, SQ2])


# --- construction and serialization ---

def test_state_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        QuantumState.pure([1, 0, 0])


def test_state_json_round_trip_is_exact():
    rng = np.random.default_rng(3)
    for s in (qs.random_pure_state(3, rng), qs.random_mixed_state(2, rng)):
        back = QuantumState.from_json(s.to_json())
        assert back.kind == s.kind
        assert np.array_equal(back.data, s.data)


def test_mixed_json_is_row_major():
    rho = np.array([[0.5, 0.25j], [-0.25j, 0.5]])
    data = QuantumState.mixed(rho).to_json()["data"]
    assert data[1] == [0.0, 0.25]
    assert data[2] == [0.0, -0.25]


# --- gates ---

def test_ry_pi_flips_zero():
    out = qs.apply_gate(QuantumState.basis("0"), GateOp("RY", (0,), angle=np.pi))
    assert np.allclose(out.data, [0, 1])


def test_cz_on_11_gives_minus_sign():
    out = qs.apply_gate(QuantumState.basis("11"), GateOp("CZ", (0, 1)))
    assert np.allclose(out.data, [0, 0, 0, -1])


def test_cx_control_is_first_target():
    out = qs.apply_gate(QuantumState.basis("10"), GateOp("CX", (0, 1)))
    assert np.allclose(out.data, QuantumState.basis("11").data)
    out = qs.apply_gate(QuantumState.basis("01"), GateOp("CX", (1, 0)))
    assert np.allclose(out.data, QuantumState.basis("11").data)


def test_ry_inverse_pair_restores_state():
    s = qs.random_pure_state(3, 7)
    for q in range(3):
        s2 = qs.apply_gate(qs.apply_gate(s, GateOp("RY", (q,), angle=0.731)), GateOp("RY", (q,), angle=-0.731))
        assert np.max(np.abs(s2.data - s.data)) < 1e-12


def test_gate_on_qubit_zero_is_most_significant_bit():
    out = qs.apply_gate(QuantumState.basis("000"), GateOp("RX", (0,), angle=np.pi))
    assert abs(out.data[0b100]) == pytest.approx(1.0)


def test_gate_index_errors():
    s = QuantumState.basis("00")
    with pytest.raises(IndexError):
        qs.apply_gate(s, GateOp("RY", (2,), angle=0.1))
    with pytest.raises(IndexError):
        GateOp("CZ", (1, 1))


def test_mixed_gate_matches_pure_outer_product():
    rng = np.random.default_rng(11)
    for _ in range(20):
        s = qs.random_pure_state(3, rng)
        u = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
        targets = list(rng.choice(3, size=2, replace=False))
        pure = qs.apply_unitary(s, u, targets)
        mixed = qs.apply_unitary(s.to_mixed(), u, targets)
        assert np.max(np.abs(mixed.data - pure.density_matrix())) < 1e-12


def test_can_gate_is_product_of_pauli_rotations():
    expected = qs.pauli_rotation2(qs.X, np.pi) @ qs.pauli_rotation2(qs.Y, np.pi) @ qs.pauli_rotation2(qs.Z, np.pi)
    assert np.allclose(qs.CAN, expected)
    # with all three angles at pi the product collapses to a global phase
    assert np.allclose(qs.CAN, -1j * np.eye(4))


# --- tensor structure ---

def test_extend_with_zeros():
    out = qs.extend_with_zeros(QuantumState.basis("1"), 1)
    assert np.allclose(out.data, QuantumState.basis("10").data)
    mm = qs.extend_with_zeros(QuantumState.mixed(np.eye(2) / 2), 1)
    assert np.allclose(mm.data, np.kron(np.eye(2) / 2, np.diag([1, 0])))
    assert mm.trace() == pytest.approx(1.0)
    s = qs.random_pure_state(2, 0)
    assert qs.extend_with_zeros(s, 0) is s


def test_partial_trace_examples():
    assert np.allclose(qs.partial_trace(bell(), [1]).data, np.eye(2) / 2)
    assert np.allclose(qs.partial_trace(QuantumState.basis("01"), [0]).data, np.diag([0, 1]))
    ghz = QuantumState.pure(np.array([1, 0, 0, 0, 0, 0, 0, 1]) * SQ2)
    assert np.allclose(qs.partial_trace(ghz, [2]).data, np.diag([0.5, 0, 0, 0.5]))
    with pytest.raises(ValueError):
        qs.partial_trace(bell(), [0, 1])


def test_partial_trace_keeps_relative_order():
    s = QuantumState.basis("0110")
    out = qs.partial_trace(s, [0, 2])
    assert np.allclose(out.data, QuantumState.basis("10").density_matrix())
    out = qs.partial_trace(s.to_mixed(), [1])
    assert np.allclose(out.data, QuantumState.basis("010").density_matrix())


def test_partial_trace_undoes_extension():
    rng = np.random.default_rng(5)
    for n in (1, 2, 3):
        for k in range(4):
            for s in (qs.random_pure_state(n, rng), qs.random_mixed_state(n, rng)):
                ext = qs.extend_with_zeros(s, k)
                if k == 0:
                    continue
                back = qs.partial_trace(ext, range(n, n + k))
                assert np.max(np.abs(back.data - s.density_matrix())) < 1e-12


# --- fidelities ---

def test_fidelity_pure_examples():
    zero = QuantumState.basis("0")
    assert qs.fidelity_pure(zero, zero.to_mixed()) == pytest.approx(1.0)
    assert qs.fidelity_pure(zero, QuantumState.mixed(np.eye(2) / 2)) == pytest.approx(0.5)
    assert qs.fidelity_pure(plus(), zero.to_mixed()) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        qs.fidelity_pure(zero, bell())


def test_fidelity_pure_ignores_global_phase():
    s, t = qs.random_pure_state(3, 1), qs.random_mixed_state(3, 2)
    rotated = QuantumState.pure(np.exp(0.37j) * s.data)
    assert qs.fidelity_pure(s, t) == qs.fidelity_pure(rotated, t)


def test_uhlmann_examples():
    rho = qs.random_mixed_state(3, 4)
    assert qs.fidelity_uhlmann(rho, rho) == pytest.approx(1.0, abs=1e-8)
    zero, one = QuantumState.basis("0").to_mixed(), QuantumState.basis("1").to_mixed()
    assert qs.fidelity_uhlmann(zero, one) == pytest.approx(0.0, abs=1e-12)


def test_uhlmann_matches_pure_formula_and_is_symmetric():
    rng = np.random.default_rng(9)
    for _ in range(50):
        n = int(rng.integers(1, 4))
        psi = qs.random_pure_state(n, rng)
        rho = qs.random_mixed_state(n, rng, rank=int(rng.integers(1, 2**n + 1)))
        assert abs(qs.fidelity_uhlmann(psi.to_mixed(), rho) - qs.fidelity_pure(psi, rho)) < 1e-8
        sigma = qs.random_mixed_state(n, rng)
        assert abs(qs.fidelity_uhlmann(rho, sigma) - qs.fidelity_uhlmann(sigma, rho)) < 1e-8


def test_uhlmann_rejects_non_psd():
    bad = QuantumState.mixed(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        qs.fidelity_uhlmann(bad, QuantumState.basis("0"))


def test_overlap_equals_pure_fidelity_for_pure_argument():
    psi, rho = qs.random_pure_state(2, 1), qs.random_mixed_state(2, 1)
    assert qs.state_overlap(psi, rho) == pytest.approx(qs.fidelity_pure(psi, rho))
    assert qs.state_overlap(rho, psi) == pytest.approx(qs.fidelity_pure(psi, rho))


# --- noise ---

def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec("bitflip", 1.2)
    with pytest.raises(ValueError):
        NoiseSpec("amplitude", 0.1)


def test_full_depolarizing_gives_maximally_mixed():
    rho = qs.random_mixed_state(1, 3)
    out = qs.apply_noise_channel(rho, NoiseSpec("depolarizing", 1.0, "channel"), [0])
    assert np.allclose(out.data, np.eye(2) / 2)


def test_zero_probability_channel_is_identity():
    rho = qs.random_mixed_state(2, 3)
    for kind in qs.NOISE_KINDS:
        out = qs.apply_noise_channel(rho, NoiseSpec(kind, 0.0, "channel"), [0, 1])
        assert np.allclose(out.data, rho.data, atol=1e-14)


def test_half_bitflip_on_zero():
    out = qs.apply_noise_channel(QuantumState.basis("0"), NoiseSpec("bitflip", 0.5, "channel"), [0])
    assert np.allclose(out.data, np.eye(2) / 2)


def test_noise_channel_bad_qubit():
    with pytest.raises(IndexError):
        qs.apply_noise_channel(QuantumState.basis("0"), NoiseSpec("bitflip", 0.5), [1])


def test_trajectory_examples():
    out = qs.sample_noise_trajectory(QuantumState.basis("00"), NoiseSpec("bitflip", 1.0), 0)
    assert np.allclose(out.data, QuantumState.basis("11").data)
    s = qs.random_pure_state(3, 2)
    assert np.array_equal(qs.sample_noise_trajectory(s, NoiseSpec("depolarizing", 0.0), 5).data, s.data)
    with pytest.raises(ValueError):
        qs.sample_noise_trajectory(s.to_mixed(), NoiseSpec("bitflip", 0.1), 0)


def test_trajectory_average_matches_channel():
    noise = NoiseSpec("depolarizing", 0.2)
    zero = QuantumState.basis("0")
    rng = np.random.default_rng(2024)
    acc = np.zeros((2, 2), dtype=complex)
    trials = 10_000
    for _ in range(trials):
        acc += qs.sample_noise_trajectory(zero, noise, rng).density_matrix()
    mc = QuantumState.mixed(acc / trials)
    channel = qs.apply_noise_channel(zero, NoiseSpec("depolarizing", 0.2, "channel"), [0])
    assert qs.trace_distance(mc, channel) < 0.02


def test_two_qubit_depolarizing_full_strength():
    rho = qs.random_mixed_state(3, 8)
    out = qs.depolarize_pair(rho, 1.0, [0, 2])
    expected = np.kron(np.eye(4) / 4, qs.partial_trace(rho, [0, 2]).data)
    # reorder expected from (q0 q2 | q1) to (q0 q1 q2)
    expected = expected.reshape([2] * 6).transpose(0, 2, 1, 3, 5, 4).reshape(8, 8)
    assert np.allclose(out.data, expected)


# --- entropy and SWAP test ---

def test_entropy_examples():
    assert qs.entanglement_entropy(QuantumState.basis("01"), 1) == pytest.approx(0.0, abs=1e-12)
    assert qs.entanglement_entropy(bell(), 1) == pytest.approx(1.0, abs=1e-12)
    assert qs.entanglement_entropy(bell(), 1, base=np.e) == pytest.approx(np.log(2))
    with pytest.raises(ValueError):
        qs.entanglement_entropy(bell(), 2)


def test_swap_test_examples():
    assert qs.swap_test_estimate(1.0, 17, 3) == 1.0
    est = [qs.swap_test_estimate(0.0, 200, s) for s in range(2000)]
    assert abs(np.mean(est)) < 3 * np.sqrt(1 / 200) / np.sqrt(2000)
    with pytest.raises(ValueError):
        qs.swap_test_estimate(1.5, 10, 0)
    with pytest.raises(ValueError):
        qs.swap_test_estimate(0.5, 0, 0)


@settings(max_examples=20, deadline=None, derandomize=True)
@given(f=st.floats(0.0, 1.0), shots=st.integers(1, 500))
def test_swap_test_mean_is_unbiased(f, shots):
    trials = 400
    est = qs.swap_test_estimate(np.full(trials, f), shots, np.random.default_rng(shots))
    sigma = np.sqrt((1 - f**2) / shots)
    # 5 sigma keeps the false-alarm rate negligible across hypothesis examples
    assert abs(est.mean() - f) <= 5 * sigma / np.sqrt(trials) + 1e-12


# --- randomized invariant sweep ---

def random_operation(s: QuantumState, rng) -> QuantumState:
    n = s.num_qubits
    op = rng.integers(0, 6)
    if op == 0:
        kind = ["RX", "RY", "RZ"][rng.integers(0, 3)]
        return qs.apply_gate(s, GateOp(kind, (int(rng.integers(0, n)),), angle=float(rng.uniform(-4, 4))))
    if op == 1 and n >= 2:
        a, b = rng.choice(n, size=2, replace=False)
        return qs.apply_gate(s, GateOp(["CX", "CZ", "CAN"][rng.integers(0, 3)], (int(a), int(b))))
    if op == 2:
        noise = NoiseSpec(qs.NOISE_KINDS[rng.integers(0, 3)], float(rng.uniform()), "channel")
        qubits = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
        return qs.apply_noise_channel(s, noise, [int(q) for q in qubits])
    if op == 3 and n < 6:
        return qs.extend_with_zeros(s, int(rng.integers(1, 6 - n + 1)))
    if op == 4 and n >= 2:
        traced = rng.choice(n, size=int(rng.integers(1, n)), replace=False)
        return qs.partial_trace(s, [int(q) for q in traced])
    if op == 5 and n >= 2:
        a, b = rng.choice(n, size=2, replace=False)
        return qs.depolarize_pair(s, float(rng.uniform()), [int(a), int(b)])
    return s


def run_invariant_sweep(sequences: int, steps: int, seed: int) -> int:
    rng = np.random.default_rng(seed)
    checked = 0
    for _ in range(sequences):
        n = int(rng.integers(1, 7))
        s = qs.random_pure_state(n, rng) if rng.uniform() < 0.5 else qs.random_mixed_state(n, rng)
        for _ in range(steps):
            s = random_operation(s, rng)
            s.check(atol=1e-10)
            checked += 1
    return checked


def test_randomized_invariant_sweep_small():
    assert run_invariant_sweep(100, 6, seed=1) == 600
