import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import I2, SX, SZ, jordan_qubit_channel, random_complex
from disentangle import DensityMatrix, PartitionSpec, InvalidStateError, DimensionMismatchError
from disentangle.channels import depolarizing
from disentangle.entangle import bell_pair
from disentangle.linalg import (
    MAX_TOTAL_DIM,
    block_triangular_eigvals,
    embed_local,
    general_eig,
    hermitian_eig,
    kron,
    maximally_mixed,
    operator_norm,
    partial_trace,
    partial_transpose,
    pure_state,
    random_density,
    random_pure_state,
    trace_norm,
)

dims_strategy = st.lists(st.integers(2, 4), min_size=1, max_size=4).filter(lambda ds: np.prod(ds) <= 64)


# --- PartitionSpec ----------------------------------------------------------


@given(dims_strategy, st.data())
def test_index_maps_are_inverse(dims, data):
    spec = PartitionSpec(dims)
    flat = data.draw(st.integers(0, spec.total_dim - 1))
    assert spec.flat_index(spec.multi_index(flat)) == flat


def test_party_zero_is_slowest():
    spec = PartitionSpec((2, 3))
    assert spec.multi_index(1) == (0, 1)
    assert spec.multi_index(3) == (1, 0)


@pytest.mark.parametrize("dims", [(1, 2), (), (2, 0)])
def test_spec_rejects_bad_dims(dims):
    with pytest.raises(ValueError):
        PartitionSpec(dims)


def test_spec_caps_total_dimension():
    with pytest.raises(ValueError, match=str(MAX_TOTAL_DIM)):
        PartitionSpec((2,) * 13)


# --- DensityMatrix ----------------------------------------------------------


def test_density_invariants_accept_valid_state():
    rho = DensityMatrix(np.diag([0.25, 0.75]))
    assert rho.dims == (2,)
    assert rho.purity() == pytest.approx(0.625)


@pytest.mark.parametrize(
    "mat, msg",
    [
        (np.array([[1, 1], [0, 0]]), "Hermitian"),
        (np.diag([0.6, 0.6]), "trace"),
        (np.diag([1.5, -0.5]), "positive"),
    ],
)
def test_density_invariants_reject(mat, msg):
    with pytest.raises(InvalidStateError, match=msg):
        DensityMatrix(mat)


def test_density_dims_must_match():
    with pytest.raises(DimensionMismatchError):
        DensityMatrix(np.eye(4) / 4, (2, 3))


def test_density_is_read_only():
    rho = maximally_mixed((2, 2))
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 1


# --- kron -------------------------------------------------------------------


def test_kron_identities():
    np.testing.assert_array_equal(kron(I2, I2), np.eye(4))


def test_kron_pauli_z():
    np.testing.assert_array_equal(kron(SZ, SZ), np.diag([1, -1, -1, 1]))


def test_kron_mixed_product(rng):
    a, b, c, d = (random_complex(rng, 2, 2) for _ in range(4))
    np.testing.assert_allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d), atol=1e-12)


# --- partial trace ------------------------------------------------------------


def _ptrace_loops(mat, da, db):
    """Keep party 0 of a (da, db) system by explicit index summation."""
    out = np.zeros((da, da), dtype=complex)
    for i in range(da):
        for j in range(da):
            for k in range(db):
                out[i, j] += mat[i * db + k, j * db + k]
    return out


def test_partial_trace_bell_marginal():
    np.testing.assert_allclose(partial_trace(bell_pair(), {1}).mat, I2 / 2, atol=1e-15)


def test_partial_trace_product(rng):
    ra, rb = random_density(2, seed=1), random_density(3, seed=2)
    rho = DensityMatrix(kron(ra.mat, rb.mat), (2, 3))
    np.testing.assert_allclose(partial_trace(rho, {0}).mat, ra.mat, atol=1e-12)
    np.testing.assert_allclose(partial_trace(rho, {0}).mat, _ptrace_loops(rho.mat, 2, 3), atol=1e-12)


def test_partial_trace_generic_matches_loops():
    rho = DensityMatrix(random_density(6, seed=5).mat, (3, 2))
    np.testing.assert_allclose(partial_trace(rho, {0}).mat, _ptrace_loops(rho.mat, 3, 2), atol=1e-12)


def test_partial_trace_keeps_unit_trace():
    rho = DensityMatrix(random_density(8, seed=3).mat, (2, 2, 2))
    assert np.trace(partial_trace(rho, {2}).mat).real == pytest.approx(1.0, abs=1e-12)


def test_partial_trace_cannot_drop_everything():
    with pytest.raises(ValueError, match="everything"):
        partial_trace(bell_pair(), set())


# --- partial transpose ------------------------------------------------------------


def test_partial_transpose_bell_spectrum():
    w = np.linalg.eigvalsh(partial_transpose(bell_pair(), {1}))
    np.testing.assert_allclose(w, [-0.5, 0.5, 0.5, 0.5], atol=1e-12)


def test_partial_transpose_product_stays_psd():
    ra, rb = random_density(2, seed=7), random_density(2, seed=8)
    rho = DensityMatrix(kron(ra.mat, rb.mat), (2, 2))
    pt = partial_transpose(rho, {1})
    np.testing.assert_allclose(pt, kron(ra.mat, rb.mat.T), atol=1e-14)
    assert np.linalg.eigvalsh(pt).min() >= -1e-12


@given(st.sampled_from([(2, 2), (2, 3), (2, 2, 2)]), st.integers(0, 2**16))
def test_partial_transpose_is_involution(dims, seed):
    rho = DensityMatrix(random_density(int(np.prod(dims)), seed=seed).mat, dims)
    once = partial_transpose(rho, {0})
    np.testing.assert_allclose(partial_transpose(once, {0}, dims), rho.mat, atol=1e-14)


# --- eigensolvers -------------------------------------------------------------


def test_hermitian_eig_diagonal():
    w, _ = hermitian_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(w, [1, 2, 3])


def test_hermitian_eig_pauli_x():
    w, _ = hermitian_eig(SX)
    np.testing.assert_allclose(w, [-1, 1])


def test_hermitian_eig_resynthesis(rng):
    a = random_complex(rng, 8, 8)
    h = a + a.conj().T
    w, v = hermitian_eig(h)
    np.testing.assert_allclose((v * w) @ v.conj().T, h, atol=1e-12)


def test_general_eig_diagonal_moduli():
    res = general_eig(np.diag([1, 0.5, 0.5j]))
    np.testing.assert_allclose(np.abs(res.eigenvalues), [1, 0.5, 0.5])
    assert res.diagonalizable


def test_general_eig_jordan_block():
    res = general_eig(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert not res.diagonalizable
    np.testing.assert_allclose(res.eigenvalues, [1, 1])


def test_general_eig_depolarizing_superoperator():
    res = general_eig(depolarizing(2, 0.7).superoperator().mat)
    np.testing.assert_allclose(res.eigenvalues, [1, 0.7, 0.7, 0.7], atol=1e-12)


def test_general_eig_biorthogonal(rng):
    m = random_complex(rng, 6, 6)
    res = general_eig(m)
    np.testing.assert_allclose(res.left.conj().T @ res.right, np.eye(6), atol=1e-8)
    np.testing.assert_allclose(m @ res.right, res.right * res.eigenvalues, atol=1e-10)


def test_block_triangular_eigvals_exact_on_nilpotent_shift():
    # a cyclic shift with one entry cut is nilpotent; plain eig returns ~eps^(1/n) noise
    n = 12
    m = np.diag(np.ones(n - 1), -1)
    w = block_triangular_eigvals(m)
    np.testing.assert_array_equal(w, np.zeros(n))


# --- norms and embedding -----------------------------------------------------------


def test_pauli_norms():
    assert operator_norm(SZ) == pytest.approx(1)
    assert trace_norm(SZ) == pytest.approx(2)


@given(st.integers(0, 2**16))
def test_signed_projector_norm(seed):
    proj = random_pure_state(2, seed).mat
    assert operator_norm(3 * proj - I2) == pytest.approx(2, abs=1e-12)


def test_trace_norm_dominates(rng):
    for _ in range(50):
        m = random_complex(rng, 4, 4)
        assert trace_norm(m) >= operator_norm(m) - 1e-12


def test_embed_local_second_party():
    np.testing.assert_array_equal(embed_local(SX, 1, (2, 2)), kron(I2, SX))


def test_embed_local_identity():
    np.testing.assert_array_equal(embed_local(np.eye(3), 0, (3, 2, 2)), np.eye(12))


@given(st.integers(0, 2), st.integers(0, 2**16))
def test_embed_trace_duality(j, seed):
    rng = np.random.default_rng(seed)
    dims = (2, 3, 2)
    a = random_complex(rng, dims[j], dims[j])
    rho = DensityMatrix(random_density(12, seed=seed).mat, dims)
    lhs = np.trace(embed_local(a, j, dims) @ rho.mat)
    rhs = np.trace(a @ partial_trace(rho, {j}).mat)
    assert lhs == pytest.approx(rhs, abs=1e-12)


# --- random states ------------------------------------------------------------------


def test_random_pure_state_is_pure():
    assert random_pure_state(5, seed=3).purity() == pytest.approx(1, abs=1e-12)


def test_random_density_rank():
    w = random_density(4, rank=2, seed=9).eigvalsh()
    assert int(np.sum(w > 1e-12)) == 2


def test_random_states_deterministic():
    np.testing.assert_array_equal(random_density(3, seed=4).mat, random_density(3, seed=4).mat)
    np.testing.assert_array_equal(random_pure_state(3, seed=4).mat, random_pure_state(3, seed=4).mat)


def test_random_requires_seed():
    with pytest.raises(ValueError, match="seed"):
        random_density(2, seed=None)


def test_pure_state_normalizes():
    rho = pure_state([1, 1])
    np.testing.assert_allclose(rho.mat, np.full((2, 2), 0.5))


def test_general_eig_flags_jordan_block_inside_superoperator():
    # cond(vr) lands near 5e7 here, under the 1e8 cutoff; the cluster test catches it
    s = jordan_qubit_channel().superoperator().mat
    res = general_eig(s)
    assert not res.diagonalizable
    np.testing.assert_allclose(np.sort(np.abs(res.eigenvalues)), [0.3, 0.3, 0.3, 1.0], atol=1e-7)


def test_general_eig_keeps_genuine_degeneracy():
    res = general_eig(np.diag([1.0, 0.5, 0.5, 0.5]))
    assert res.diagonalizable
