import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from revcap.channels import (
    ChannelSpec,
    KrausChannel,
    RangeError,
    apply,
    apply_to_half,
    canonical_isometry,
    channels_equal,
    choi,
    choi_distance,
    choi_trace_out_output,
    complementary,
    completeness_residual,
    compose,
    gad_env_qubit_channel,
    gad_environment_corrector,
    gad_isometry,
    gad_mixture_coefficient,
    identity_channel,
    make_ad,
    make_erasure,
    make_gad,
    random_channel,
    relaxation_unitary,
    tensor_channels,
    thermal_environment,
)
from revcap.closedform import InputParams, general_input
from revcap.linalg import (
    PreconditionError,
    hermitian_eigenvalues,
    partial_trace,
    projector,
    random_density_matrix,
    tensor,
)
from revcap.qinfo import von_neumann_entropy

unit = st.floats(0.0, 1.0)
seeds = st.integers(0, 2 ** 31 - 1)


def _swap_qubits(m):
    """Reorder a two-qubit operator from (A, B) to (B, A)."""
    return m.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)


# -- amplitude damping ------------------------------------------------------------

def test_ad_kraus_operators():
    ch = make_ad(0.36)
    np.testing.assert_allclose(ch.kraus[0], [[1, 0], [0, 0.6]], atol=1e-15)
    np.testing.assert_allclose(ch.kraus[1], [[0, 0.8], [0, 0]], atol=1e-15)


def test_ad_identity_at_eta_one():
    assert choi_distance(make_ad(1.0), identity_channel()) <= 1e-14


def test_ad_constant_at_eta_zero():
    rng = np.random.default_rng(1)
    for _ in range(5):
        np.testing.assert_allclose(apply(make_ad(0.0), random_density_matrix(2, rng)),
                                   np.diag([1.0, 0.0]), atol=1e-15)


def test_ad_output_population():
    np.testing.assert_allclose(apply(make_ad(0.8), np.eye(2) / 2), np.diag([0.6, 0.4]), atol=1e-15)


@pytest.mark.parametrize("bad", [-0.1, 1.5, math.nan])
def test_ad_range(bad):
    with pytest.raises(RangeError):
        make_ad(bad)


def test_ad_joint_state_matches_printed_matrix():
    eta, p, th, ph = 0.65, 0.35, 0.9, 1.3
    _, psi = general_input(InputParams(p, th, ph))
    rho = _swap_qubits(apply_to_half(make_ad(eta), projector(psi), (2, 2)))
    c, s = math.cos(th), math.sin(th)
    g = math.sqrt(eta * (1 - p) * p)
    em, ep = np.exp(-1j * ph), np.exp(1j * ph)
    printed = np.array([
        [1 - p + p * (1 - eta) * c * c, p * (1 - eta) * c * s, g * em * c, g * em * s],
        [p * (1 - eta) * c * s, p * (1 - eta) * s * s, 0, 0],
        [g * ep * c, 0, p * eta * c * c, p * eta * c * s],
        [g * ep * s, 0, p * eta * c * s, p * eta * s * s],
    ])
    np.testing.assert_allclose(rho, printed, atol=1e-15)


# -- generalized amplitude damping --------------------------------------------------

def test_relaxation_unitary_as_printed():
    eta = 0.3
    a, b = math.sqrt(eta), math.sqrt(1 - eta)
    printed = np.array([[1, 0, 0, 0], [0, a, b, 0], [0, -b, a, 0], [0, 0, 0, 1]])
    np.testing.assert_allclose(relaxation_unitary(eta), printed, atol=1e-15)


def test_thermal_environment_state():
    np.testing.assert_allclose(thermal_environment(0.36), [0.8, 0, 0, 0.6], atol=1e-15)


def test_gad_isometry_definition():
    eta, alpha = 0.55, 0.3
    iso = gad_isometry(eta, alpha)
    assert (iso.in_dim, iso.out_dim, iso.env_dim) == (2, 2, 4)
    rng = np.random.default_rng(0)
    psi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    expected = tensor(relaxation_unitary(eta), np.eye(2)) @ tensor(psi, thermal_environment(alpha))
    np.testing.assert_allclose(iso.V @ psi, expected, atol=1e-15)


def test_gad_alpha_zero_is_ad():
    assert choi_distance(make_gad(0.64, 0.0)[0], make_ad(0.64)) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(alpha=unit)
def test_gad_identity_at_eta_one(alpha):
    assert choi_distance(make_gad(1.0, alpha)[0], identity_channel()) <= 1e-12


def test_gad_fixed_point():
    np.testing.assert_allclose(apply(make_gad(0.7, 0.5)[0], np.eye(2) / 2), np.eye(2) / 2, atol=1e-15)


def test_gad_on_ground_state():
    np.testing.assert_allclose(apply(make_gad(0.6, 0.3)[0], np.diag([1.0, 0.0])),
                               np.diag([0.88, 0.12]), atol=1e-15)


def test_gad_kraus_and_isometry_agree():
    ch, iso = make_gad(0.4, 0.7)
    assert len(ch.kraus) == 4
    assert choi_distance(ch, iso.kraus_channel()) <= 1e-15


def test_gad_joint_state_matches_printed_blocks():
    eta, alpha, p, th = 0.62, 0.27, 0.4, 1.1
    _, psi = general_input(InputParams(p, th))
    rho = _swap_qubits(apply_to_half(make_gad(eta, alpha)[0], projector(psi), (2, 2)))
    c, s = math.cos(th), math.sin(th)
    q = alpha + (1 - alpha) * eta
    z = np.array([
        [(1 - p) * alpha * eta + (1 - alpha) * (1 - p + p * (1 - eta) * c * c),
         p * (1 - alpha) * (1 - eta) * c * s],
        [p * (1 - alpha) * (1 - eta) * c * s, p * (1 - alpha) * (1 - eta) * s * s],
    ])
    w = np.array([
        [alpha * (1 - p) * (1 - eta) + p * q * c * c, p * q * c * s],
        [p * q * c * s, p * q * s * s],
    ])
    g = math.sqrt(eta * (1 - p) * p)
    cb = np.array([[g * c, g * s], [0, 0]])
    np.testing.assert_allclose(rho[:2, :2], z, atol=1e-15)
    np.testing.assert_allclose(rho[2:, 2:], w, atol=1e-15)
    np.testing.assert_allclose(rho[:2, 2:], cb, atol=1e-15)


def test_gad_mixture_weight_is_fitted():
    for alpha in (0.1, 0.25, 0.4, 0.8):
        c, resid = gad_mixture_coefficient(0.6, alpha)
        assert resid <= 1e-12
        assert abs(c - (1.0 - alpha)) <= 1e-12


# -- erasure ------------------------------------------------------------------------

def test_erasure_no_erasure_is_embedding():
    out = apply(make_erasure(0.0), np.array([[0.3, 0.2j], [-0.2j, 0.7]]))
    np.testing.assert_allclose(out[:2, :2], [[0.3, 0.2j], [-0.2j, 0.7]], atol=1e-15)
    assert np.all(out[2, :] == 0) and np.all(out[:, 2] == 0)


def test_erasure_full_erasure_is_flag():
    rng = np.random.default_rng(4)
    np.testing.assert_allclose(apply(make_erasure(1.0), random_density_matrix(2, rng)),
                               np.diag([0, 0, 1.0]), atol=1e-15)


def test_erasure_output():
    np.testing.assert_allclose(apply(make_erasure(0.3), np.eye(2) / 2), np.diag([0.35, 0.35, 0.30]), atol=1e-15)


# -- operations -------------------------------------------------------------------

def test_apply_identity():
    rho = random_density_matrix(3, np.random.default_rng(8))
    np.testing.assert_allclose(apply(identity_channel(3), rho), rho, atol=1e-15)


def test_apply_dimension_mismatch():
    with pytest.raises(PreconditionError):
        apply(make_ad(0.5), np.eye(3) / 3)


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_trace_preservation_all_families(seed):
    rng = np.random.default_rng(seed)
    eta, alpha, eps = rng.uniform(size=3)
    channels = [identity_channel(), make_ad(eta), make_gad(eta, alpha)[0], make_erasure(eps),
                random_channel(2, 2, 3, seed)]
    for _ in range(7):
        rho = random_density_matrix(2, rng)
        for ch in channels:
            assert abs(np.trace(apply(ch, rho)) - 1.0) <= 1e-12


def test_apply_to_half_identity():
    rho = random_density_matrix(4, np.random.default_rng(1))
    np.testing.assert_allclose(apply_to_half(identity_channel(), rho, (2, 2)), rho, atol=1e-15)


def test_apply_to_half_bell_through_identity_ad():
    bell = projector(np.array([1, 0, 0, 1]) / math.sqrt(2))
    out = apply_to_half(make_ad(1.0), bell, (2, 2))
    np.testing.assert_allclose(out, bell, atol=1e-15)
    assert abs(von_neumann_entropy(out)) <= 1e-12


def test_apply_to_half_ad_spectrum():
    psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    out = apply_to_half(make_ad(0.8), projector(psi), (2, 2))
    np.testing.assert_allclose(hermitian_eigenvalues(out), [0.9, 0.1, 0, 0], atol=1e-12)


def test_apply_to_half_trivial_reference():
    rho = random_density_matrix(2, np.random.default_rng(2))
    ch = make_gad(0.3, 0.6)[0]
    np.testing.assert_allclose(apply_to_half(ch, rho, (1, 2)), apply(ch, rho), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_apply_to_half_on_product(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density_matrix(3, rng), random_density_matrix(2, rng)
    ch = random_channel(2, 3, 2, seed)
    np.testing.assert_allclose(apply_to_half(ch, tensor(rho, sigma), (3, 2)),
                               tensor(rho, apply(ch, sigma)), atol=1e-12)


def test_compose_with_identity():
    ch = random_channel(2, 2, 3, 11)
    assert choi_distance(compose(identity_channel(), ch), ch) <= 1e-14


def test_compose_concatenation_example():
    assert choi_distance(compose(make_ad(0.8), make_ad(0.5)), make_ad(0.4)) <= 1e-12


def test_compose_degrading_example():
    eta = 0.75
    assert choi_distance(compose(make_ad((1 - eta) / eta), make_ad(eta)), make_ad(0.25)) <= 1e-12


def test_concatenation_law_grid():
    for a in np.linspace(0, 1, 10):
        for b in np.linspace(0, 1, 10):
            assert choi_distance(compose(make_ad(a), make_ad(b)), make_ad(a * b)) <= 1e-12


def test_compose_dimension_mismatch():
    with pytest.raises(PreconditionError, match="compose"):
        compose(make_ad(0.5), make_erasure(0.5))


def test_tensor_channels():
    assert choi_distance(tensor_channels(identity_channel(), identity_channel()), identity_channel(4)) <= 1e-15
    a, b = make_gad(0.3, 0.2)[0], make_erasure(0.4)
    assert len(tensor_channels(a, b).kraus) == len(a.kraus) * len(b.kraus)
    rng = np.random.default_rng(6)
    r1, r2 = random_density_matrix(2, rng), random_density_matrix(2, rng)
    ch = make_ad(0.7)
    np.testing.assert_allclose(apply(tensor_channels(ch, ch), tensor(r1, r2)),
                               tensor(apply(ch, r1), apply(ch, r2)), atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(eta=unit)
def test_complement_of_ad(eta):
    assert choi_distance(complementary(make_ad(eta)), make_ad(1 - eta)) <= 1e-12


def test_complement_of_identity_is_constant_pure():
    rng = np.random.default_rng(9)
    comp = complementary(identity_channel())
    for _ in range(10):
        assert abs(von_neumann_entropy(apply(comp, random_density_matrix(2, rng)))) <= 1e-12


def test_double_complement_spectra():
    ch = make_ad(0.7)
    twice = complementary(complementary(ch))
    rng = np.random.default_rng(10)
    for _ in range(100):
        rho = random_density_matrix(2, rng)
        a = hermitian_eigenvalues(apply(ch, rho))
        b = hermitian_eigenvalues(apply(twice, rho))
        np.testing.assert_allclose(b[:2], a, atol=1e-12)
        np.testing.assert_allclose(b[2:], 0.0, atol=1e-12)


def test_canonical_isometry_is_isometry():
    iso = canonical_isometry(random_channel(3, 2, 4, 5))
    np.testing.assert_allclose(iso.V.conj().T @ iso.V, np.eye(3), atol=1e-12)


# -- environment of the GAD dilation ------------------------------------------------

def test_env_qubit_symmetric_point():
    assert choi_distance(gad_env_qubit_channel(0.5, 0.3), make_gad(0.5, 0.3)[0]) <= 1e-12


def test_env_qubit_channel_example():
    assert choi_distance(gad_env_qubit_channel(0.3, 0.2), make_gad(0.7, 0.2)[0]) <= 1e-10


def test_env_qubit_antidegrading_example():
    eta, alpha = 0.3, 0.2
    composed = compose(make_gad(eta / (1 - eta), alpha)[0], gad_env_qubit_channel(eta, alpha))
    assert choi_distance(composed, make_gad(eta, alpha)[0]) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(eta=unit, alpha=unit)
def test_env_qubit_plain_marginal_offset(eta, alpha):
    # the uncorrected marginal misses by exactly 2 alpha sqrt(1 - eta)
    d = choi_distance(gad_env_qubit_channel(eta, alpha, corrected=False), make_gad(1 - eta, alpha)[0])
    assert abs(d - 2 * alpha * math.sqrt(1 - eta)) <= 1e-12
    assert choi_distance(gad_env_qubit_channel(eta, alpha), make_gad(1 - eta, alpha)[0]) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(eta=unit, alpha=unit)
def test_env_corrector_acts_on_environment(eta, alpha):
    via_env = compose(gad_environment_corrector(), gad_isometry(eta, alpha).env_channel())
    assert choi_distance(via_env, gad_env_qubit_channel(eta, alpha)) <= 1e-12


# -- Choi matrices ------------------------------------------------------------------

def test_choi_of_identity():
    m = choi(identity_channel()).matrix
    np.testing.assert_allclose(m, projector(np.array([1, 0, 0, 1])), atol=0)
    np.testing.assert_allclose(hermitian_eigenvalues(m), [2, 0, 0, 0], atol=1e-14)


def test_choi_of_full_damping():
    m = choi(make_ad(0.0)).matrix
    np.testing.assert_allclose(np.diag(m).real, [1, 0, 1, 0], atol=0)
    np.testing.assert_allclose(m, tensor(np.eye(2), np.diag([1.0, 0.0])), atol=0)


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_choi_invariants(seed):
    rng = np.random.default_rng(seed)
    eta, alpha, eps = rng.uniform(size=3)
    for ch in (make_ad(eta), make_gad(eta, alpha)[0], make_erasure(eps), random_channel(2, 3, 2, seed)):
        c = choi(ch)
        assert abs(np.trace(c.matrix) - ch.in_dim) <= 1e-12
        assert hermitian_eigenvalues(c.matrix).min() >= -1e-10
        np.testing.assert_allclose(choi_trace_out_output(c), np.eye(ch.in_dim), atol=1e-10)


def test_channels_equal():
    assert channels_equal(make_gad(0.4, 0.0)[0], make_ad(0.4))
    assert not channels_equal(make_ad(0.4), make_ad(0.41))
    with pytest.raises(PreconditionError):
        choi_distance(make_ad(0.4), make_erasure(0.1))


# -- random channels and validation ------------------------------------------------

def test_random_channel_deterministic():
    a, b = random_channel(2, 2, 3, 42), random_channel(2, 2, 3, 42)
    for x, y in zip(a.kraus, b.kraus):
        assert np.array_equal(x, y)


def test_random_channel_completeness():
    for seed in range(100):
        assert completeness_residual(random_channel(2, 3, 2, seed)) <= 1e-12


def test_random_isometric_channel_preserves_entropy():
    rng = np.random.default_rng(12)
    ch = random_channel(2, 3, 1, 7)
    for _ in range(10):
        rho = random_density_matrix(2, rng)
        assert abs(von_neumann_entropy(apply(ch, rho)) - von_neumann_entropy(rho)) <= 1e-10


def test_random_channel_impossible_dims():
    with pytest.raises(PreconditionError, match="no isometry"):
        random_channel(4, 1, 2, 0)


def test_kraus_completeness_enforced():
    with pytest.raises(PreconditionError, match="complete"):
        KrausChannel((np.eye(2) * 0.9,), 2, 2)


def test_channel_spec_validation():
    with pytest.raises(PreconditionError, match="alpha required for gad"):
        ChannelSpec("gad", eta=0.5)
    with pytest.raises(PreconditionError, match="alpha not accepted for ad"):
        ChannelSpec("ad", eta=0.5, alpha=0.1)
    with pytest.raises(PreconditionError, match="unknown"):
        ChannelSpec("depolarizing")
    with pytest.raises(RangeError):
        ChannelSpec("erasure", epsilon=2.0)
    assert choi_distance(ChannelSpec("gad", eta=0.3, alpha=0.4).build(), make_gad(0.3, 0.4)[0]) == 0.0
    assert ChannelSpec("random", seed=3).build().kraus[0].shape == (2, 2)


def test_partial_trace_of_isometry_gives_channel():
    ch, iso = make_gad(0.45, 0.35)
    rho = random_density_matrix(2, np.random.default_rng(13))
    full = iso.V @ rho @ iso.V.conj().T
    np.testing.assert_allclose(partial_trace(full, [2, 4], [0]), apply(ch, rho), atol=1e-14)
