import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import I2, SX, SY, SZ, jordan_qubit_channel, random_complex
from disentangle import (
    DensityMatrix,
    NoDampingGapError,
    NotDiagonalizableError,
    RankDeficientSteadyStateError,
)
from disentangle.channels import (
    ConvergenceEnvelope,
    KrausChannel,
    LocalProductChannel,
    Superoperator,
    amplitude_damping,
    apply,
    apply_local,
    check_contraction,
    compose,
    convergence_envelope,
    depolarizing,
    identity_channel,
    pauli_basis,
    power,
    random_channel,
    replacer_channel,
    shift_depolarize_ring,
    spectral_profile,
    tensor_channels,
    unitary_channel,
    unvec,
    vec,
)
from disentangle.designs import qubit_six_state
from disentangle.entangle import bell_pair, ghz
from disentangle.linalg import kron, maximally_mixed, operator_norm, pure_state, random_density

KET0 = pure_state([1, 0])


def test_vec_stacks_columns():
    x = np.array([[1, 2], [3, 4]])
    np.testing.assert_array_equal(vec(x), [1, 3, 2, 4])
    np.testing.assert_array_equal(unvec(vec(x)), x)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_pauli_basis_orthogonal(d):
    b = pauli_basis(d)
    gram = np.einsum("iab,jab->ij", b.conj(), b)
    np.testing.assert_allclose(gram, d * np.eye(d * d), atol=1e-12)
    np.testing.assert_array_equal(b[0], np.eye(d))


# --- KrausChannel / Superoperator --------------------------------------------


def test_kraus_completeness_enforced():
    with pytest.raises(ValueError, match="trace preserving"):
        KrausChannel([np.diag([1.0, 0.5])])


@pytest.mark.parametrize("seed", range(5))
def test_superoperator_matches_kraus(seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(3, 2, seed)
    x = random_complex(rng, 3, 3)
    np.testing.assert_allclose(ch.superoperator().mat @ vec(x), vec(ch.apply_operator(x)), atol=1e-10)


def test_trace_preservation_as_left_fixed_vector():
    s = random_channel(2, 3, 0).superoperator().mat
    v_id = vec(np.eye(2))
    np.testing.assert_allclose(v_id.conj() @ s, v_id.conj(), atol=1e-12)


def test_psd_in_psd_out():
    ch = random_channel(3, 4, 17)
    out = ch(random_density(3, seed=2))
    assert out.eigvalsh().min() >= -1e-12


@pytest.mark.parametrize("seed", range(3))
def test_choi_kraus_round_trip(seed):
    ch = random_channel(2, 3, seed)
    back = ch.superoperator().to_kraus()
    np.testing.assert_allclose(back.superoperator().mat, ch.superoperator().mat, atol=1e-12)


def test_choi_of_identity_is_unnormalized_bell():
    choi = identity_channel(2).superoperator().choi()
    np.testing.assert_allclose(choi, 2 * bell_pair().mat, atol=1e-14)


# --- apply / apply_local ------------------------------------------------------


def test_identity_channel_passthrough():
    rho = random_density(3, seed=1)
    np.testing.assert_allclose(apply(identity_channel(3), rho).mat, rho.mat, atol=1e-15)


def test_full_depolarization():
    np.testing.assert_allclose(apply(depolarizing(2, 0.0), random_density(2, seed=0)).mat, I2 / 2, atol=1e-15)


def test_half_depolarized_ket0():
    np.testing.assert_allclose(apply(depolarizing(2, 0.5), KET0).mat, np.diag([0.75, 0.25]), atol=1e-15)


def test_local_identity_passthrough():
    rho = DensityMatrix(random_density(6, seed=2).mat, (2, 3))
    np.testing.assert_allclose(apply_local(identity_channel(3), rho, 1).mat, rho.mat, atol=1e-15)


def test_local_full_depolarization_replaces_marginal():
    ra, rb = random_density(2, seed=3), random_density(2, seed=4)
    rho = DensityMatrix(kron(ra.mat, rb.mat), (2, 2))
    out = apply_local(depolarizing(2, 0.0), rho, 0)
    np.testing.assert_allclose(out.mat, kron(I2 / 2, rb.mat), atol=1e-15)


def test_local_half_depolarization_on_bell():
    out = apply_local(depolarizing(2, 0.5), bell_pair(), 1)
    # oracle: explicit Kraus sum on the global space
    ks = depolarizing(2, 0.5).kraus_ops
    direct = sum(kron(I2, k) @ bell_pair().mat @ kron(I2, k).conj().T for k in ks)
    np.testing.assert_allclose(out.mat, direct, atol=1e-15)
    np.testing.assert_allclose(out.mat, 0.5 * bell_pair().mat + 0.5 * np.eye(4) / 4, atol=1e-15)


def test_apply_local_dimension_check():
    with pytest.raises(ValueError):
        apply_local(depolarizing(3, 0.5), bell_pair(), 0)


# --- product channels -------------------------------------------------------------


def test_all_identities_is_identity():
    rho = DensityMatrix(random_density(8, seed=5).mat, (2, 2, 2))
    out = tensor_channels([identity_channel(2)] * 3)(rho)
    np.testing.assert_allclose(out.mat, rho.mat, atol=1e-15)


def test_party_order_irrelevant():
    rho = DensityMatrix(random_density(8, seed=6).mat, (2, 2, 2))
    prod = LocalProductChannel([random_channel(2, 2, s) for s in range(3)])
    a = prod.apply_operator(rho.mat)
    b = prod.apply_operator(rho.mat, order=[2, 0, 1])
    np.testing.assert_allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("t", [1, 2, 3])
def test_product_depolarizing_on_ghz_closed_form(t):
    out = tensor_channels([depolarizing(2, 0.5)] * 3).evolve(ghz(3), t)
    q = 0.5**t
    # closed form: each party is depolarizing(q) after t steps
    chans = [depolarizing(2, q)] * 3
    expect = ghz(3).mat
    for j, ch in enumerate(chans):
        expect = apply_local(ch, DensityMatrix(expect, (2, 2, 2), validate=False), j).mat
    np.testing.assert_allclose(out.mat, expect, atol=1e-14)


def test_product_kraus_matches_superoperator():
    prod = LocalProductChannel([random_channel(2, 2, 1), depolarizing(3, 0.3)])
    rho = DensityMatrix(random_density(6, seed=7).mat, (2, 3))
    np.testing.assert_allclose(prod.kraus()(rho).mat, prod(rho).mat, atol=1e-12)


# --- compose / power ---------------------------------------------------------------


def test_power_zero_is_identity():
    np.testing.assert_allclose(power(random_channel(2, 2, 3), 0).superoperator().mat, np.eye(4), atol=1e-15)


@pytest.mark.parametrize("d, p, t", [(2, 0.7, 3), (3, 0.4, 2), (2, 0.9, 8)])
def test_power_of_depolarizing(d, p, t):
    np.testing.assert_allclose(
        power(depolarizing(d, p), t).superoperator().mat, depolarizing(d, p**t).superoperator().mat, atol=1e-12
    )


def test_compose_superoperator_product():
    a, b = random_channel(2, 2, 11), random_channel(2, 3, 12)
    np.testing.assert_allclose(
        compose(a, b).superoperator().mat, a.superoperator().mat @ b.superoperator().mat, atol=1e-12
    )


def test_superoperator_power_and_matmul():
    s = random_channel(2, 2, 5).superoperator()
    np.testing.assert_allclose(s.power(3).mat, (s @ s @ s).mat, atol=1e-12)


# --- depolarizing ------------------------------------------------------------------


def test_depolarizing_p1_is_identity():
    np.testing.assert_allclose(depolarizing(3, 1.0).superoperator().mat, np.eye(9), atol=1e-15)


@pytest.mark.parametrize("d, p", [(2, 0.7), (3, 0.4)])
def test_depolarizing_profile(d, p):
    prof = spectral_profile(depolarizing(d, p))
    np.testing.assert_allclose(prof.fixed_point.mat, np.eye(d) / d, atol=1e-12)
    assert prof.lambda_min == pytest.approx(1 / d, abs=1e-12)
    assert prof.gap_mu == pytest.approx(p, abs=1e-12)
    assert prof.unique and prof.full_rank and prof.diagonalizable


def test_depolarizing_one_third_is_six_state_measurement():
    projs = qubit_six_state().projectors
    rho = random_density(2, seed=21).mat
    measured = sum(pi @ rho @ pi for pi in projs) / 3
    np.testing.assert_allclose(measured, depolarizing(2, 1 / 3).apply_operator(rho), atol=1e-14)


def test_depolarizing_rejects_out_of_range():
    with pytest.raises(ValueError):
        depolarizing(2, 1.5)


# --- ring ----------------------------------------------------------------------------


def test_ring_fixed_point_maximally_mixed():
    ring = shift_depolarize_ring(3, 2)
    prof = spectral_profile(ring.kraus())
    np.testing.assert_allclose(prof.fixed_point.mat, np.eye(8) / 8, atol=1e-12)


def test_ring_spectrum_single_one():
    w = shift_depolarize_ring(3, 2).spectrum()
    moduli = np.sort(np.abs(w))[::-1]
    assert abs(moduli[0] - 1) <= 1e-10
    assert moduli[1] <= 1e-10


def test_ring_kraus_matches_direct_action():
    ring = shift_depolarize_ring(3, 2)
    rho = DensityMatrix(random_density(8, seed=3).mat, (2, 2, 2))
    np.testing.assert_allclose(ring.kraus()(rho).mat, ring(rho).mat, atol=1e-13)


def test_ring_pauli_strings_die_within_n_steps():
    n = 3
    ring = shift_depolarize_ring(n, 2)
    paulis = [I2, SX, SY, SZ]
    for idx in itertools.product(range(4), repeat=n):
        string = kron(*(paulis[i] for i in idx))
        out = string
        for _ in range(n):
            out = ring.apply_operator(out)
        if any(idx):
            assert np.abs(out).max() <= 1e-14, idx
        else:
            np.testing.assert_allclose(out, string)


def test_ring_pauli_basis_is_exact():
    s = shift_depolarize_ring(3, 2).superoperator(basis="pauli")
    assert set(np.unique(np.round(np.abs(s), 14))) <= {0.0, 1.0}


# --- random channels ---------------------------------------------------------------------


def test_random_channel_complete():
    assert random_channel(3, 5, 0).completeness_defect() <= 1e-10


def test_random_channels_mostly_gapped_full_rank():
    good = 0
    for seed in range(100):
        prof = spectral_profile(random_channel(2, 4, seed))
        good += prof.full_rank and prof.gap_mu < 1
    assert good >= 99


def test_single_kraus_random_channel_is_unitary():
    with pytest.warns(RuntimeWarning, match="degenerate"):
        prof = spectral_profile(random_channel(2, 1, 4))
    assert prof.gap_mu == pytest.approx(1, abs=1e-10)
    assert not prof.unique


# --- spectral profile hypotheses ---------------------------------------------------


def test_amplitude_damping_pure_fixed_point():
    prof = spectral_profile(amplitude_damping(0.3))
    assert not prof.full_rank
    np.testing.assert_allclose(prof.fixed_point.mat, np.diag([1, 0]), atol=1e-12)


def test_unitary_not_unique():
    with pytest.warns(RuntimeWarning):
        prof = spectral_profile(unitary_channel(np.diag([1, 1j])))
    assert not prof.unique


def test_fixed_point_is_fixed():
    ch = random_channel(3, 3, 8)
    prof = spectral_profile(ch)
    np.testing.assert_allclose(ch.apply_operator(prof.fixed_point.mat), prof.fixed_point.mat, atol=1e-9)
    assert prof.lambda_min == pytest.approx(prof.fixed_point.eigvalsh()[0])


# --- envelopes -----------------------------------------------------------------------------


def test_rigorous_envelope_depolarizing():
    env = convergence_envelope(depolarizing(2, 0.5))
    assert env.kappa == pytest.approx(math.log(2))
    # exact worst case is p^t (d-1)/d, so C = 1/2 is the smallest valid constant
    assert env.c >= 0.5


def test_envelope_rejects_gapless():
    with pytest.warns(RuntimeWarning):
        with pytest.raises(NoDampingGapError, match="no damping gap"):
            convergence_envelope(depolarizing(2, 1.0))


def test_envelope_rejects_rank_deficient():
    with pytest.raises(RankDeficientSteadyStateError):
        convergence_envelope(amplitude_damping(0.4))


def test_rigorous_envelope_needs_diagonalizable():
    ch = jordan_qubit_channel()
    prof = spectral_profile(ch)
    assert not prof.diagonalizable
    with pytest.raises(NotDiagonalizableError):
        convergence_envelope(ch, "spectral-rigorous")


def test_empirical_envelope_on_defective_channel():
    ch = jordan_qubit_channel()
    env = convergence_envelope(ch, "empirical", 60)
    assert env.kappa < -math.log(spectral_profile(ch).gap_mu)
    assert check_contraction(ch, env, probes=500, t_max=60) == []


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_empirical_envelope_zero_violations(seed):
    ch = random_channel(2, 4, seed)
    env = convergence_envelope(ch, "empirical", 60, seed=seed)
    assert env.kappa < -math.log(spectral_profile(ch).gap_mu)
    assert check_contraction(ch, env, probes=500, t_max=60) == []


@pytest.mark.parametrize("seed", range(5))
def test_rigorous_envelope_zero_violations(seed):
    ch = random_channel(2, 4, 100 + seed)
    env = convergence_envelope(ch)
    assert env.kappa <= -math.log(spectral_profile(ch).gap_mu) + 1e-12
    assert check_contraction(ch, env, probes=500, t_max=60) == []


def test_exact_constants_pass_and_halved_fail():
    p = 0.5
    ch = depolarizing(2, p)
    exact = ConvergenceEnvelope(0.5, -math.log(p), "exact", 60)
    probes = [KET0, pure_state([0, 1])] + [random_density(2, seed=s) for s in range(20)]
    assert check_contraction(ch, exact, probes) == []
    halved = ConvergenceEnvelope(0.25, -math.log(p), "exact", 60)
    bad = check_contraction(ch, halved, [KET0])
    assert bad and bad[0].t == 1


def test_contraction_skips_t0():
    ch = depolarizing(2, 0.5)
    # C below the t=0 distance but valid for t >= 1
    env = ConvergenceEnvelope(0.5, -math.log(0.5), "exact", 10)
    viol = check_contraction(ch, env, [KET0])
    assert all(v.t >= 1 for v in viol)
    assert viol == []


def test_unknown_envelope_mode():
    with pytest.raises(ValueError, match="unknown envelope mode"):
        convergence_envelope(depolarizing(2, 0.5), "fast")


def test_replacer_channel_instant():
    sigma = np.diag([0.7, 0.3])
    ch = replacer_channel(sigma)
    np.testing.assert_allclose(ch.apply_operator(random_density(2, seed=1).mat), sigma, atol=1e-15)
    prof = spectral_profile(ch)
    assert prof.gap_mu <= 1e-12
