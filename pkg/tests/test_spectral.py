import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symbeltrami.errors import AliasingError, NoSymmetricFields, PreconditionError, UnsupportedDirection
from symbeltrami.spectral import (
    SpectralField,
    all_wavevectors,
    analyze,
    assemble_pi_curlinv,
    cross_const,
    curl_inv_spec,
    curl_spec,
    directional_derivative,
    div_spec,
    dot_const,
    grad_spec,
    helicity,
    laplacian_spec,
    mirror,
    polarization_basis,
    project_symmetric,
    symmetric_mask,
    synthesize,
    top_eigenpair,
)

TWO_PI = 2 * np.pi


def random_field(N, seed, rank=1, admissible=False, scale=1.0):
    """Real band-limited field; divergence-free and mean-free when ``admissible``."""
    rng = np.random.default_rng(seed)
    n = 2 * N + 1
    shape = (n, n, n) + ((3,) if rank == 1 else ())
    c = (rng.normal(size=shape) + 1j * rng.normal(size=shape)) * scale
    c = 0.5 * (c + np.conj(c[::-1, ::-1, ::-1]))
    X = SpectralField(c)
    if admissible:
        K = TWO_PI * X.wavevectors().astype(float)
        k2 = np.sum(K * K, axis=-1)
        k2[N, N, N] = 1.0
        c = c - K * (np.sum(K * c, axis=-1) / k2)[..., None]
        c[N, N, N] = 0
        X = SpectralField(c)
    return X


def golden_2p5d(N=2):
    """``(0, -2pi sin 2pi x, -2pi cos 2pi x)`` as modes ``k = +-e1``."""
    a = np.array([0, 1j * np.pi, -np.pi])
    return SpectralField.from_modes(N, {(1, 0, 0): a, (-1, 0, 0): np.conj(a)})


def brute_admitted(v, N):
    r = range(-N, N + 1)
    return [k for k in itertools.product(r, r, r) if any(k) and sum(a * b for a, b in zip(k, v)) == 0]


# ---------------------------------------------------------------------------
# synthesis and analysis


def test_single_mode_matches_closed_form():
    X = SpectralField.real_mode(3, (1, 0, 0), [0, 0.5, 0])
    p = np.random.default_rng(0).uniform(0, 1, size=(50, 3))
    expect = np.zeros_like(p)
    expect[:, 1] = np.cos(TWO_PI * p[:, 0])
    assert np.max(np.abs(X(p) - expect)) < 1e-14


def test_zero_field_is_zero():
    p = np.random.default_rng(1).uniform(0, 1, size=(10, 3))
    assert np.array_equal(SpectralField.zeros(2)(p), np.zeros((10, 3)))
    assert np.array_equal(synthesize(SpectralField.zeros(2, rank=0), p), np.zeros(10))


@pytest.mark.parametrize("seed", range(5))
def test_round_trip(seed):
    X = random_field(4, seed)
    M = 9
    x = np.arange(M) / M
    grid = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    back = analyze(X(grid), 4)
    assert np.max(np.abs(back.coeffs - X.coeffs)) < 1e-12
    assert np.max(np.abs(X.grid_values(M) - X(grid))) < 1e-11


def test_analysis_rejects_aliasing():
    with pytest.raises(AliasingError):
        analyze(np.zeros((8, 8, 8, 3)), 4)
    with pytest.raises(AliasingError):
        random_field(4, 0).grid_values(8)


def test_jacobian_matches_finite_differences():
    X = random_field(3, 2)
    p = np.random.default_rng(3).uniform(0, 1, size=(5, 3))
    h = 1e-5
    fd = np.stack([(X(p + h * e) - X(p - h * e)) / (2 * h) for e in np.eye(3)], axis=-1)
    assert np.allclose(X.jacobian(p), fd, atol=1e-4 * np.max(np.abs(fd)))


def test_serialization_round_trip_is_exact():
    X = random_field(3, 4)
    doc = json.loads(json.dumps(X.to_dict()))
    Y = SpectralField.from_dict(doc)
    assert np.array_equal(X.coeffs, Y.coeffs)
    f = random_field(2, 5, rank=0)
    assert np.array_equal(SpectralField.from_dict(f.to_dict()).coeffs, f.coeffs)
    with pytest.raises(ValueError):
        SpectralField.from_dict({**doc, "schema": "other/1"})


# ---------------------------------------------------------------------------
# curl and its inverse


def test_curl_examples():
    X = SpectralField.real_mode(2, (1, 0, 0), [0, 0.5, 0])
    p = np.random.default_rng(6).uniform(0, 1, size=(20, 3))
    expect = np.zeros_like(p)
    expect[:, 2] = -TWO_PI * np.sin(TWO_PI * p[:, 0])
    assert np.max(np.abs(curl_spec(X)(p) - expect)) < 1e-12
    assert curl_spec(X).coeff((1, 0, 0))[2] == pytest.approx(1j * TWO_PI * 0.5)
    const = SpectralField.from_modes(2, {(0, 0, 0): [1.0, 2.0, 3.0]})
    assert curl_spec(const).max_abs_coeff() == 0.0
    G = golden_2p5d()
    assert (curl_spec(G) - TWO_PI * G).max_abs_coeff() < 1e-12


def test_curl_inverse_examples():
    G = golden_2p5d()
    assert (curl_inv_spec(G) - G / TWO_PI).max_abs_coeff() < 1e-15
    X = SpectralField.from_modes(2, {(0, 1, 0): [0, 0, 1.0], (0, -1, 0): [0, 0, 1.0]})
    A = curl_inv_spec(X)
    # i (e2 x e3) / (2 pi) at k = e2
    assert np.allclose(A.coeff((0, 1, 0)), [1j / TWO_PI, 0, 0], atol=1e-16)


@pytest.mark.parametrize("seed", range(20))
def test_curl_and_inverse_are_mutually_inverse(seed):
    X = random_field(3, seed, admissible=True)
    assert (curl_spec(curl_inv_spec(X)) - X).max_abs_coeff() < 1e-12
    assert (curl_inv_spec(curl_spec(X)) - X).max_abs_coeff() < 1e-12
    A = curl_inv_spec(X)
    assert A.divergence_residual() < 1e-12
    assert A.mean().tolist() == [0, 0, 0]


def test_curl_inverse_preconditions():
    with pytest.raises(PreconditionError):
        curl_inv_spec(SpectralField.from_modes(1, {(0, 0, 0): [1.0, 0, 0]}))
    with pytest.raises(PreconditionError):
        curl_inv_spec(SpectralField.real_mode(1, (1, 0, 0), [1.0, 0, 0]))


def test_vector_calculus_identities():
    X = random_field(3, 7)
    f = random_field(3, 8, rank=0)
    assert div_spec(curl_spec(X)).max_abs_coeff() < 1e-10
    assert curl_spec(grad_spec(f)).max_abs_coeff() < 1e-10
    assert (laplacian_spec(f) + div_spec(grad_spec(f))).max_abs_coeff() < 1e-9


def test_constant_vector_operations():
    X = golden_2p5d()
    p = np.random.default_rng(9).uniform(0, 1, size=(10, 3))
    v = np.array([0.3, -1.0, 2.0])
    assert np.allclose(dot_const(v, X)(p), X(p) @ v, atol=1e-12)
    assert np.allclose(cross_const(v, X)(p), np.cross(v, X(p)), atol=1e-12)
    assert np.allclose(directional_derivative(v, X)(p), X.jacobian(p) @ v, atol=1e-10)


# ---------------------------------------------------------------------------
# helicity


def test_helicity_examples():
    G = golden_2p5d()
    assert G.norm_sq() == pytest.approx(4 * np.pi**2, rel=1e-14)
    assert helicity(G) == pytest.approx(TWO_PI, rel=1e-12)
    assert helicity(mirror(G)) == pytest.approx(-TWO_PI, rel=1e-12)
    assert (curl_spec(mirror(G)) + TWO_PI * mirror(G)).max_abs_coeff() < 1e-12
    assert helicity(SpectralField.zeros(2)) == 0.0


def test_helicity_by_quadrature_oracle():
    G = golden_2p5d()
    M = 16
    x = np.arange(M) / M
    grid = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    quad = np.mean(np.sum(G(grid) * curl_inv_spec(G)(grid), axis=-1))
    assert quad == pytest.approx(helicity(G), rel=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_mirror_flips_helicity(seed):
    X = random_field(2, seed, admissible=True)
    assert helicity(mirror(X)) == pytest.approx(-helicity(X), rel=1e-12, abs=1e-14)


# ---------------------------------------------------------------------------
# symmetric subspace


def test_symmetric_mask_examples():
    sub = symmetric_mask("e3", 2)
    assert len(sub) == 24
    assert all(k[2] == 0 for k in sub.modes.tolist())
    assert symmetric_mask("irrational", 8).is_empty
    sub = symmetric_mask((1, 1, 0), 1)
    assert sorted(map(tuple, sub.modes.tolist())) == sorted(brute_admitted((1, 1, 0), 1))


@pytest.mark.parametrize("v", [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 2, 3), (2, -1, 5)])
@pytest.mark.parametrize("N", [1, 3])
def test_symmetric_mask_matches_enumeration(v, N):
    sub = symmetric_mask(v, N)
    assert [tuple(k) for k in sub.modes.tolist()] == brute_admitted(v, N)


@given(st.tuples(*[st.integers(-4, 4)] * 3).filter(any), st.integers(0, 4))
@settings(max_examples=40)
def test_symmetric_mask_invariants(v, N):
    sub = symmetric_mask(v, N)
    ks = {tuple(k) for k in sub.modes.tolist()}
    assert (0, 0, 0) not in ks
    assert all(tuple(-x for x in k) in ks for k in ks)


def test_irrational_direction_admits_nothing_up_to_32():
    for N in range(33):
        assert len(symmetric_mask("irrational", N)) == 0


def test_float_direction_is_rejected():
    with pytest.raises(UnsupportedDirection):
        symmetric_mask((1.0, np.sqrt(2), np.sqrt(6)), 2)


def test_all_wavevectors_order():
    ks = all_wavevectors(1)
    assert len(ks) == 26
    assert [tuple(k) for k in ks.tolist()] == sorted(tuple(k) for k in ks.tolist())


def test_projection_is_orthogonal():
    sub = symmetric_mask("e3", 2)
    u, w = random_field(2, 10), random_field(2, 11)
    Pu, Pw = project_symmetric(u, sub), project_symmetric(w, sub)
    assert (project_symmetric(Pu, sub) - Pu).max_abs_coeff() == 0
    assert Pu.inner(w) == pytest.approx(u.inner(Pw), rel=1e-12)
    assert directional_derivative([0, 0, 1], Pu).max_abs_coeff() == 0


@given(st.tuples(*[st.integers(-5, 5)] * 3).filter(any))
def test_polarization_basis_is_right_handed_orthonormal(k):
    ea, eb = polarization_basis(k)
    khat = np.array(k) / np.linalg.norm(k)
    B = np.stack([ea, eb, khat])
    assert np.allclose(B @ B.T, np.eye(3), atol=1e-14)
    assert np.linalg.det(B) == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# operator and eigenpairs


def test_operator_e3_n1():
    op = assemble_pi_curlinv(symmetric_mask("e3", 1))
    assert op.matrix.shape == (16, 16)
    assert op.hermitian_residual() < 1e-14
    w = np.sort(np.linalg.eigvalsh(op.matrix))
    expect = []
    for k in symmetric_mask("e3", 1).modes:
        expect += [1 / (TWO_PI * np.linalg.norm(k)), -1 / (TWO_PI * np.linalg.norm(k))]
    assert np.allclose(w, np.sort(expect), atol=1e-14)


def test_operator_is_block_diagonal():
    op = assemble_pi_curlinv(symmetric_mask((1, 1, 0), 2))
    mask = np.kron(np.eye(len(op.modes)), np.ones((2, 2))).astype(bool)
    assert np.all(op.matrix[~mask] == 0)


def test_operator_requires_symmetric_fields():
    with pytest.raises(NoSymmetricFields) as err:
        assemble_pi_curlinv(symmetric_mask("irrational", 4))
    assert err.value.explanation


def test_top_eigenpair_e3_n4():
    op = assemble_pi_curlinv(symmetric_mask("e3", 4))
    ep = top_eigenpair(op)
    assert abs(ep.mu) == pytest.approx(1 / TWO_PI, abs=1e-12)
    assert ep.mu > 0
    assert ep.multiplicity == 4
    X = ep.field
    assert X.norm() == pytest.approx(1.0)
    assert (curl_spec(X) - X / ep.mu).max_abs_coeff() <= 1e-10 * X.norm()
    assert directional_derivative([0, 0, 1], X).max_abs_coeff() == 0
    assert X.hermitian_residual() < 1e-15
    assert X.divergence_residual() < 1e-12
    assert helicity(X) == pytest.approx(X.norm_sq() * ep.mu, rel=1e-10)
    w = np.sort(ep.spectrum)
    assert np.allclose(w, -w[::-1], atol=1e-14)


def test_top_eigenpair_matches_brute_force_over_modes():
    for v in [(1, 1, 0), (1, 2, 3)]:
        sub = symmetric_mask(v, 3)
        ep = top_eigenpair(assemble_pi_curlinv(sub))
        kmin = min(np.linalg.norm(k) for k in sub.modes)
        assert abs(ep.mu) == pytest.approx(1 / (TWO_PI * kmin), rel=1e-12)


def test_all_operator_eigenpairs_are_beltrami():
    from symbeltrami.jacobi import jacobi_eigh

    op = assemble_pi_curlinv(symmetric_mask((1, 0, 1), 2))
    w, V = jacobi_eigh(op.matrix)
    for i in range(len(w)):
        X = op.to_field(V[:, i])
        assert (curl_spec(X) - X / w[i]).max_abs_coeff() <= 1e-10 * X.norm()
