import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from assistance.qstate import (
    QState,
    StateError,
    basis_state,
    bell,
    ghz,
    group,
    haar_random_pure,
    haar_unitary,
    local_unitary,
    mixed,
    partial_trace,
    permute,
    product,
    pure,
    random_mixed,
    spectral,
    sub_seed,
    trace_norm,
)


def test_pure_validation():
    with pytest.raises(StateError, match="norm"):
        pure([1.0, 1.0], (2,))
    with pytest.raises(StateError, match="does not match"):
        pure([1.0, 0, 0], (2, 2))
    psi = pure(np.array([1, 1j]) / np.sqrt(2), (2,))
    assert psi.is_pure and psi.dims == (2,)


def test_mixed_validation_messages():
    with pytest.raises(StateError, match="trace 0.98"):
        mixed(np.eye(2) * 0.49)
    with pytest.raises(StateError, match="Hermitian"):
        mixed(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(StateError, match="negative eigenvalue"):
        mixed(np.diag([1.1, -0.1]))
    with pytest.raises(StateError, match="dims"):
        mixed(np.eye(4) / 4, (2, 3))


def test_tiny_negative_eigenvalues_are_clamped():
    rho = mixed(np.diag([1.0 + 5e-11, -5e-11]))
    assert np.linalg.eigvalsh(rho.data).min() >= 0.0


def test_state_data_is_read_only():
    psi = bell()
    with pytest.raises(ValueError):
        psi.data[0] = 0


def test_partial_trace_examples():
    assert np.allclose(partial_trace(bell(), [0]).data, np.eye(2) / 2, atol=1e-12)
    assert np.allclose(partial_trace(basis_state([0, 1]), [0]).data, np.diag([1, 0]))
    assert np.allclose(partial_trace(ghz(3), [0, 1]).data, np.diag([0.5, 0, 0, 0.5]), atol=1e-12)


def test_partial_trace_against_einsum_oracle():
    psi = haar_random_pure((2, 3, 2), 5)
    T = psi.data.reshape(2, 3, 2)
    ref = np.einsum("abc,adc->bd", T, T.conj())
    assert np.allclose(partial_trace(psi, [1]).data, ref, atol=1e-12)
    rho = random_mixed((2, 3), 3, 1)
    R = rho.data.reshape(2, 3, 2, 3)
    assert np.allclose(partial_trace(rho, [0]).data, np.einsum("abcb->ac", R), atol=1e-12)


def test_permute_and_group():
    psi = product(basis_state([0]), basis_state([1], (3,)))
    swapped = permute(psi, [1, 0])
    assert swapped.dims == (3, 2)
    assert np.allclose(swapped.data, np.kron([0, 1, 0], [1, 0]))
    g = group(ghz(3), [[0], [1, 2]])
    assert g.dims == (2, 4)


def test_spectral_examples():
    assert np.allclose(spectral(np.eye(2) / 2).eigenvalues, [0.5, 0.5])
    assert np.allclose(spectral(np.diag([0, 1.0])).eigenvalues, [1, 0])
    sd = spectral(np.diag([0.5, 0, 0, 0.5]))
    assert np.allclose(sd.eigenvalues, [0.5, 0.5, 0, 0])
    assert sd.rank() == 2


def test_spectral_reassembly():
    rng = np.random.default_rng(3)
    for _ in range(20):
        rho = random_mixed((2, 3), int(rng.integers(1, 7)), rng).data
        sd = spectral(rho)
        back = (sd.eigenvectors * sd.eigenvalues) @ sd.eigenvectors.conj().T
        assert np.linalg.norm(back - rho) < 1e-10
        assert np.all(np.diff(sd.eigenvalues) <= 1e-15)


def test_trace_norm():
    assert trace_norm(np.eye(2)) == pytest.approx(2)
    assert trace_norm(np.zeros((3, 3))) == 0
    assert trace_norm(np.diag([3.0, -4.0])) == pytest.approx(7)
    rng = np.random.default_rng(0)
    G = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    U, V = haar_unitary(4, 1), haar_unitary(4, 2)
    assert trace_norm(U @ G @ V) == pytest.approx(trace_norm(G), abs=1e-9)
    assert trace_norm(G) == pytest.approx(np.linalg.svd(G, compute_uv=False).sum(), abs=1e-10)


def test_haar_pure_sampler():
    assert np.linalg.norm(haar_random_pure((2,), 9).data) == pytest.approx(1, abs=1e-12)
    a, b = haar_random_pure((2, 2), 42), haar_random_pure((2, 2), 42)
    assert np.array_equal(a.data, b.data)
    rng = np.random.default_rng(0)
    p0 = [abs(haar_random_pure((2,), rng).data[0]) ** 2 for _ in range(10_000)]
    assert np.mean(p0) == pytest.approx(0.5, abs=0.02)


def test_random_mixed_sampler():
    rho = random_mixed((2, 2), 1, 0)
    assert np.allclose(np.linalg.eigvalsh(rho.data)[::-1], [1, 0, 0, 0], atol=1e-12)
    full = random_mixed((2, 3), 6, 1)
    assert np.linalg.eigvalsh(full.data).min() > 0
    assert np.array_equal(random_mixed((2, 2), 3, 7).data, random_mixed((2, 2), 3, 7).data)


def test_sub_seeds_are_independent_of_call_order():
    a = np.random.default_rng(sub_seed(5, 3)).random()
    np.random.default_rng(sub_seed(5, 0)).random()
    assert np.random.default_rng(sub_seed(5, 3)).random() == a
    assert np.random.default_rng(sub_seed(5, 4)).random() != a


def test_local_unitary_preserves_reductions_spectrum():
    psi = haar_random_pure((2, 3), 11)
    out = local_unitary(psi, [haar_unitary(2, 1), haar_unitary(3, 2)])
    e1 = np.linalg.eigvalsh(partial_trace(psi, [0]).data)
    e2 = np.linalg.eigvalsh(partial_trace(out, [0]).data)
    assert np.allclose(e1, e2, atol=1e-12)


def test_dimension_one_factor_is_allowed():
    s = QState((2, 1), "pure", np.array([1.0, 0.0], dtype=complex))
    assert partial_trace(s, [0]).dims == (2,)


@settings(max_examples=40, deadline=None)
@given(
    dims=st.lists(st.integers(2, 3), min_size=2, max_size=3),
    seed=st.integers(0, 2**31 - 1),
    data=st.data(),
)
def test_partial_trace_preserves_trace(dims, seed, data):
    keep = data.draw(st.lists(st.integers(0, len(dims) - 1), min_size=1, unique=True))
    rank = data.draw(st.integers(1, 4))
    rho = random_mixed(dims, rank, seed)
    red = partial_trace(rho, sorted(keep))
    assert np.trace(red.data).real == pytest.approx(1.0, abs=1e-10)
