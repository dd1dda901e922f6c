import numpy as np
import pytest

from choimle.channel import (
    ChoiMatrix,
    PAULIS,
    apply_choi,
    choi_from_action,
    choi_from_action_pauli,
    clone_apply,
    clone_choi,
    kraus_from_choi,
    max_entangled,
    pauli_basis,
    symmetric_projector,
    tp_residual,
)
from choimle.matlin import kron, partial_trace

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)

SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def random_pure_density(rng):
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


class TestPauliBasis:
    def test_orthonormality(self):
        vs = pauli_basis()
        for i, vi in enumerate(vs):
            for j, vj in enumerate(vs):
                expected = 1.0 if i == j else 0.0
                assert abs(np.trace(vi.conj().T @ vj) - expected) <= 1e-15

    def test_completeness(self):
        rng = np.random.default_rng(1)
        vs = pauli_basis()
        for _ in range(100):
            o = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            rebuilt = sum(np.trace(v.conj().T @ o) * v for v in vs)
            assert np.abs(rebuilt - o).max() <= 1e-14


class TestMaxEntangled:
    def test_qubit(self):
        assert np.array_equal(max_entangled(2).ravel(), [1, 0, 0, 1])

    def test_scalar(self):
        assert np.array_equal(max_entangled(1), [[1]])

    def test_reductions_are_identity(self):
        psi = max_entangled(2)
        proj = psi @ psi.conj().T
        assert np.allclose(partial_trace(proj, (2, 2), {1}), I2)
        assert np.allclose(partial_trace(proj, (2, 2), {0}), I2)


class TestSymmetricProjector:
    def test_matrix(self):
        expected = np.array(
            [[1, 0, 0, 0], [0, 0.5, 0.5, 0], [0, 0.5, 0.5, 0], [0, 0, 0, 1]]
        )
        assert np.array_equal(symmetric_projector(), expected)

    def test_idempotent_trace_three(self):
        s2 = symmetric_projector()
        assert np.abs(s2 @ s2 - s2).max() <= 1e-15
        assert np.trace(s2) == 3.0

    def test_reduction(self):
        assert np.allclose(partial_trace(symmetric_projector(), (2, 2), {0}), 1.5 * I2)


class TestCloneApply:
    def test_ground_state(self):
        out = clone_apply(np.diag([1.0, 0.0]))
        expected = np.zeros((4, 4))
        expected[0, 0] = 2 / 3
        for i in (1, 2):
            for j in (1, 2):
                expected[i, j] = 1 / 6
        assert np.abs(out - expected).max() <= 1e-15

    def test_maximally_mixed(self):
        out = clone_apply(I2 / 2)
        assert np.abs(out - symmetric_projector() / 3).max() <= 1e-15

    def test_reduced_clone_is_shrunk_input(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            rho = random_pure_density(rng)
            out = clone_apply(rho)
            for keep in ({0}, {1}):
                reduced = partial_trace(out, (2, 2), keep)
                assert np.abs(reduced - (2 / 3) * rho - I2 / 6).max() <= 1e-13

    def test_output_is_density(self):
        rng = np.random.default_rng(3)
        rho = random_pure_density(rng)
        out = clone_apply(rho)
        assert abs(np.trace(out) - 1) <= 1e-12
        assert np.linalg.eigvalsh(out).min() >= -1e-12

    def test_swap_symmetry(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            out = clone_apply(random_pure_density(rng))
            assert np.abs(SWAP @ out @ SWAP - out).max() <= 1e-12

    def test_symmetric_subspace_support(self):
        rng = np.random.default_rng(5)
        anti = I4 - symmetric_projector()
        for _ in range(10):
            out = clone_apply(random_pure_density(rng))
            assert np.abs(anti @ out @ anti).max() <= 1e-12

    def test_rejects_invalid_density(self):
        with pytest.raises(ValueError):
            clone_apply(np.diag([2.0, 0.0]))  # trace 2
        with pytest.raises(ValueError):
            clone_apply(np.array([[0.0, 1.0], [0.0, 0.0]]))  # not Hermitian


class TestChoiFromAction:
    def test_identity_channel(self):
        s = choi_from_action(lambda r: r, 2, 2)
        psi = max_entangled(2)
        assert np.abs(s.mat - psi @ psi.conj().T).max() <= 1e-14

    def test_cloner_matches_hardcoded(self):
        s = choi_from_action(clone_apply, 2, 4)
        assert np.abs(s.mat - clone_choi().mat).max() <= 1e-13

    def test_construction_routes_agree(self):
        s_units = choi_from_action(clone_apply, 2, 4)
        s_pauli = choi_from_action_pauli(clone_apply, 4)
        assert np.abs(s_units.mat - s_pauli.mat).max() <= 1e-13


class TestCloneChoi:
    def test_known_entries(self):
        mat = clone_choi().mat
        assert mat[0, 0] == 4 / 6
        assert mat[0, 5] == 2 / 6
        assert np.abs(mat[3, :]).max() == 0
        assert np.abs(mat.imag).max() == 0

    def test_trace_two(self):
        assert abs(np.trace(clone_choi().mat) - 2) <= 1e-14


class TestApplyChoi:
    def test_matches_direct_action(self):
        truth = clone_choi()
        rng = np.random.default_rng(6)
        assert np.abs(apply_choi(truth, np.diag([1.0, 0.0])) - clone_apply(np.diag([1.0, 0.0]))).max() <= 1e-13
        for _ in range(20):
            rho = random_pure_density(rng)
            assert np.abs(apply_choi(truth, rho) - clone_apply(rho)).max() <= 1e-13

    def test_identity_choi(self):
        psi = max_entangled(2)
        ident = ChoiMatrix(2, 2, psi @ psi.conj().T)
        rng = np.random.default_rng(7)
        rho = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        assert np.abs(apply_choi(ident, rho) - rho).max() <= 1e-13

    def test_linearity(self):
        truth = clone_choi()
        rng = np.random.default_rng(8)
        r1 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        r2 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        combo = apply_choi(truth, 0.3 * r1 + 1.7j * r2)
        parts = 0.3 * apply_choi(truth, r1) + 1.7j * apply_choi(truth, r2)
        assert np.abs(combo - parts).max() <= 1e-12

    def test_trace_preserved(self):
        rng = np.random.default_rng(9)
        rho = random_pure_density(rng)
        assert abs(np.trace(apply_choi(clone_choi(), rho)) - 1) <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            apply_choi(clone_choi(), np.eye(4))


class TestKrausFromChoi:
    def test_identity_channel_single_op(self):
        psi = max_entangled(2)
        ops = kraus_from_choi(ChoiMatrix(2, 2, psi @ psi.conj().T))
        assert len(ops) == 1
        a = ops[0]
        # Identity up to a global phase.
        assert abs(abs(a[0, 0]) - 1) <= 1e-12
        assert np.abs(a - a[0, 0] * I2).max() <= 1e-12

    def test_cloner_two_ops_complete(self):
        ops = kraus_from_choi(clone_choi())
        assert len(ops) == 2
        total = sum(a.conj().T @ a for a in ops)
        assert np.abs(total - I2).max() <= 1e-10

    def test_reassembly(self):
        ops = kraus_from_choi(clone_choi())
        rng = np.random.default_rng(10)
        for _ in range(100):
            rho = random_pure_density(rng)
            rebuilt = sum(a @ rho @ a.conj().T for a in ops)
            assert np.abs(rebuilt - clone_apply(rho)).max() <= 1e-10

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError):
            kraus_from_choi(ChoiMatrix(2, 2, np.diag([1.0, 1.0, 1.0, -1.0])))


class TestTpResidual:
    def test_truth_residual_vanishes(self):
        assert tp_residual(clone_choi()) <= 1e-15

    def test_scaling(self):
        half = ChoiMatrix(2, 4, clone_choi().mat / 2)
        assert abs(tp_residual(half) - 0.5) <= 1e-15


class TestChoiDuality:
    def test_roundtrip_on_random_tp_channels(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            # Random trace-preserving channel: orthonormal columns stacked
            # into four 4x2 Kraus blocks.
            g = rng.standard_normal((16, 2)) + 1j * rng.standard_normal((16, 2))
            qmat, _ = np.linalg.qr(g)
            ops = [qmat[4 * i:4 * (i + 1), :] for i in range(4)]

            def action(rho, ops=ops):
                return sum(a @ rho @ a.conj().T for a in ops)

            s = choi_from_action(action, 2, 4)
            assert tp_residual(s) <= 1e-10
            s2 = choi_from_action(lambda rho: apply_choi(s, rho), 2, 4)
            assert np.abs(s.mat - s2.mat).max() <= 1e-10


class TestChoiJson:
    def test_roundtrip(self):
        s = clone_choi()
        back = ChoiMatrix.from_json(s.to_json())
        assert back.dim_in == 2 and back.dim_out == 4
        assert np.array_equal(back.mat, s.mat)

    def test_complex_entries_roundtrip(self):
        rng = np.random.default_rng(13)
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        s = ChoiMatrix(2, 2, g)
        assert np.array_equal(ChoiMatrix.from_json(s.to_json()).mat, g)

    def test_malformed(self):
        with pytest.raises(ValueError):
            ChoiMatrix.from_json('{"dim_in": 2}')
