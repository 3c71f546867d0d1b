from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_hermitian, random_projector, random_state_matrix
from tomolab.qobj import (
    ChoiState,
    DensityOperator,
    DimensionMismatchError,
    Effect,
    InvalidOperatorError,
    PAULIS,
    apply_choi,
    choi_of_channel,
    devectorize,
    gell_mann_basis,
    hs_inner,
    partial_trace,
    pauli_basis,
    process_effect,
    standard_basis,
    vectorize,
)

I2 = np.eye(2)
X = PAULIS["X"]
Y = PAULIS["Y"]
Z = PAULIS["Z"]
H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)

HADAMARD_MIX_KRAUS = [np.sqrt(0.7) * I2, np.sqrt(0.3) * H]


def kraus_apply(kraus, rho):
    return sum(k @ rho @ k.conj().T for k in kraus)


class TestBases:
    def test_single_qubit_pauli_elements(self):
        basis = pauli_basis(1)
        expected = np.array([I2, X, Y, Z]) / np.sqrt(2)
        assert basis.labels == ("I", "X", "Y", "Z")
        assert np.abs(basis.elements - expected).max() < 1e-15

    def test_two_qubit_pauli_shape_and_labels(self):
        basis = pauli_basis(2)
        assert basis.size == 16
        assert basis.dim == 4
        assert basis.labels[0] == "II"
        assert "XZ" in basis.labels

    @pytest.mark.parametrize("basis_fn,arg", [(pauli_basis, 1), (pauli_basis, 2),
                                              (gell_mann_basis, 3), (gell_mann_basis, 4)])
    def test_orthonormality(self, basis_fn, arg):
        basis = basis_fn(arg)
        gram = np.einsum("aij,bij->ab", basis.elements.conj(), basis.elements)
        assert np.abs(gram - np.eye(basis.size)).max() < 1e-10

    def test_identity_element_first_and_rest_traceless(self):
        basis = gell_mann_basis(3)
        assert np.abs(basis.elements[0] - np.eye(3) / np.sqrt(3)).max() < 1e-12
        traces = np.einsum("aii->a", basis.elements[1:])
        assert np.abs(traces).max() < 1e-12

    def test_standard_basis_dispatch(self):
        assert standard_basis(2) is pauli_basis(1)
        assert standard_basis(4) is pauli_basis(2)
        assert standard_basis(3) is gell_mann_basis(3)

    def test_basis_caching(self):
        assert pauli_basis(1) is pauli_basis(1)

    def test_rejects_non_orthonormal_stack(self):
        el = np.stack([np.eye(2) / np.sqrt(2), np.eye(2) / np.sqrt(2), X / np.sqrt(2), Z / np.sqrt(2)])
        from tomolab.qobj import OperatorBasis
        with pytest.raises(InvalidOperatorError):
            OperatorBasis(name="bad", elements=el, labels=("a", "b", "c", "d"))


class TestVectorization:
    def test_plus_x_mixture_coordinates(self):
        # (I + X)/2 has coordinates (1, 1, 0, 0)/sqrt(2)
        coords = pauli_basis(1).vectorize((I2 + X) / 2)
        assert np.allclose(coords, [0.7071067811865476, 0.7071067811865476, 0.0, 0.0], atol=1e-12)

    def test_devectorize_ground_state(self):
        mat = pauli_basis(1).devectorize(np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2))
        assert np.abs(mat - np.diag([1.0, 0.0])).max() < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), dim=st.sampled_from([2, 3, 4]))
    def test_round_trip(self, seed, dim):
        rng = np.random.default_rng(seed)
        op = random_hermitian(rng, dim)
        basis = standard_basis(dim)
        coords = basis.vectorize(op)
        assert coords.dtype == float
        assert np.abs(basis.devectorize(coords) - op).max() < 1e-12

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_coord_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        coords = rng.standard_normal(9)
        basis = gell_mann_basis(3)
        back = basis.vectorize(basis.devectorize(coords))
        assert np.abs(back - coords).max() < 1e-12

    def test_vectorize_is_linear(self):
        basis = pauli_basis(1)
        rng = np.random.default_rng(7)
        a = random_hermitian(rng, 2)
        b = random_hermitian(rng, 2)
        lhs = basis.vectorize(0.3 * a + 1.7 * b)
        rhs = 0.3 * basis.vectorize(a) + 1.7 * basis.vectorize(b)
        assert np.abs(lhs - rhs).max() < 1e-12

    def test_non_hermitian_rejected(self):
        with pytest.raises(InvalidOperatorError):
            pauli_basis(1).vectorize(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DimensionMismatchError):
            pauli_basis(1).vectorize(np.eye(3))
        with pytest.raises(DimensionMismatchError):
            pauli_basis(1).devectorize(np.zeros(9))

    def test_batched_vectorize(self):
        basis = pauli_basis(1)
        rng = np.random.default_rng(3)
        ops = np.stack([random_hermitian(rng, 2) for _ in range(5)])
        coords = basis.vectorize(ops)
        assert coords.shape == (5, 4)
        singles = np.stack([basis.vectorize(op) for op in ops])
        assert np.abs(coords - singles).max() < 1e-12

    def test_wrapper_objects(self):
        basis = pauli_basis(1)
        vec = vectorize(DensityOperator(matrix=I2 / 2), basis)
        assert vec.size == 4
        assert np.abs(devectorize(vec) - I2 / 2).max() < 1e-12


class TestHsInner:
    def test_identity_with_itself(self):
        assert abs(hs_inner(np.eye(3), np.eye(3)) - 3.0) < 1e-12

    def test_orthogonal_paulis(self):
        assert abs(hs_inner(X, Z)) < 1e-12

    def test_coordinate_dot_equivalence(self):
        basis = gell_mann_basis(3)
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = random_hermitian(rng, 3)
            b = random_hermitian(rng, 3)
            direct = hs_inner(a, b).real
            dot = float(basis.vectorize(a) @ basis.vectorize(b))
            assert abs(direct - dot) < 1e-12


class TestPartialTrace:
    def test_product_operator(self):
        rng = np.random.default_rng(5)
        a = random_hermitian(rng, 2)
        b = random_hermitian(rng, 3)
        full = np.kron(a, b)
        assert np.abs(partial_trace(full, (2, 3), keep="first") - a * np.trace(b)).max() < 1e-12
        assert np.abs(partial_trace(full, (2, 3), keep="second") - b * np.trace(a)).max() < 1e-12

    def test_maximally_mixed(self):
        out = partial_trace(np.eye(4) / 4, (2, 2), keep="second")
        assert np.abs(out - np.eye(2) / 2).max() < 1e-15

    def test_trace_preservation(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            op = random_hermitian(rng, 4)
            kept = partial_trace(op, (2, 2), keep="first")
            assert abs(np.trace(kept) - np.trace(op)) < 1e-12

    def test_bad_arguments(self):
        with pytest.raises(DimensionMismatchError):
            partial_trace(np.eye(6), (2, 2), keep="first")
        with pytest.raises(ValueError):
            partial_trace(np.eye(4), (2, 2), keep="both")


class TestChoi:
    def test_identity_channel_is_maximally_entangled(self):
        choi = choi_of_channel([I2])
        bell = np.zeros((4, 4))
        for i in (0, 3):
            for j in (0, 3):
                bell[i, j] = 0.5
        assert np.abs(choi.matrix - bell).max() < 1e-12

    def test_depolarizing_channel_is_maximally_mixed(self):
        kraus = [I2 / 2, X / 2, Y / 2, Z / 2]
        choi = choi_of_channel(kraus)
        assert np.abs(choi.matrix - np.eye(4) / 4).max() < 1e-12

    def test_hadamard_mixture_rank_two(self):
        choi = choi_of_channel(HADAMARD_MIX_KRAUS)
        eig = np.sort(np.linalg.eigvalsh(choi.matrix))
        assert np.allclose(eig, [0.0, 0.0, 0.3, 0.7], atol=1e-10)

    def test_non_trace_preserving_kraus_rejected(self):
        with pytest.raises(InvalidOperatorError):
            choi_of_channel([0.9 * I2])

    def test_apply_matches_kraus_action(self):
        rng = np.random.default_rng(13)
        choi = choi_of_channel(HADAMARD_MIX_KRAUS)
        for _ in range(20):
            rho = random_state_matrix(rng, 2)
            direct = kraus_apply(HADAMARD_MIX_KRAUS, rho)
            assert np.abs(apply_choi(choi, rho) - direct).max() < 1e-12

    def test_choi_state_rejects_non_tp(self):
        # |0><0| (x) |0><0| is CP but its input marginal is not I/2
        mat = np.zeros((4, 4))
        mat[0, 0] = 1.0
        with pytest.raises(InvalidOperatorError):
            ChoiState(matrix=mat, dim_in=2, dim_out=2)


class TestProcessEffect:
    def test_hadamard_mixture_plus_probability(self):
        # prep |0><0|, measure |+><+|: 0.7 * 0.5 + 0.3 * 1.0 = 0.65
        choi = choi_of_channel(HADAMARD_MIX_KRAUS)
        prep = DensityOperator(matrix=np.diag([1.0, 0.0]))
        meas = Effect(matrix=(I2 + X) / 2)
        eff = process_effect(prep, meas)
        p = hs_inner(eff.matrix, choi.matrix).real
        assert abs(p - 0.65) < 1e-12

    def test_identity_channel_survival(self):
        choi = choi_of_channel([I2])
        prep = DensityOperator(matrix=np.diag([1.0, 0.0]))
        meas = Effect(matrix=np.diag([1.0, 0.0]))
        p = hs_inner(process_effect(prep, meas).matrix, choi.matrix).real
        assert abs(p - 1.0) < 1e-12

    def test_depolarizing_gives_tr_e_over_d(self):
        choi = choi_of_channel([I2 / 2, X / 2, Y / 2, Z / 2])
        rng = np.random.default_rng(17)
        prep = DensityOperator(matrix=random_state_matrix(rng, 2))
        meas = Effect(matrix=random_projector(rng, 2))
        p = hs_inner(process_effect(prep, meas).matrix, choi.matrix).real
        assert abs(p - np.trace(meas.matrix).real / 2) < 1e-12

    def test_contraction_identity_random_channels(self):
        from tomolab.randq import RngStream, bcsz_channel, ginibre_state
        stream = RngStream(4242)
        rng = np.random.default_rng(99)
        for i in range(100):
            choi = bcsz_channel(2, 4, stream.child(i))
            rho = ginibre_state(2, 2, stream.child(1000 + i))
            eff = Effect(matrix=random_projector(rng, 2))
            kraus_free = hs_inner(process_effect(rho, eff).matrix, choi.matrix).real
            # independent route: reconstruct the channel action by contraction
            lam_rho = apply_choi(choi, rho.matrix)
            direct = np.trace(eff.matrix @ lam_rho).real
            assert abs(kraus_free - direct) < 1e-10
            assert -1e-10 <= kraus_free <= 1 + 1e-10

    def test_composite_effect_upper_bound(self):
        prep = DensityOperator(matrix=np.diag([1.0, 0.0]))
        meas = Effect(matrix=np.diag([1.0, 0.0]))
        eff = process_effect(prep, meas)
        assert eff.upper == 2.0
        assert np.linalg.eigvalsh(eff.matrix).max() <= 2.0 + 1e-12


class TestValidation:
    def test_density_operator_rules(self):
        with pytest.raises(InvalidOperatorError):
            DensityOperator(matrix=np.diag([0.5, 0.6]))
        with pytest.raises(InvalidOperatorError):
            DensityOperator(matrix=np.diag([1.5, -0.5]))
        with pytest.raises(InvalidOperatorError):
            DensityOperator(matrix=np.array([[0.5, 0.5], [0.0, 0.5]]))

    def test_effect_rules(self):
        Effect(matrix=np.diag([1.0, 0.0]))
        with pytest.raises(InvalidOperatorError):
            Effect(matrix=np.diag([1.2, 0.0]))
        with pytest.raises(InvalidOperatorError):
            Effect(matrix=np.diag([-0.1, 0.5]))

    def test_immutability(self):
        rho = DensityOperator(matrix=I2 / 2)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 5.0
