import numpy as np
import pytest

from markovdd.catalog import damping, dephasing, raising, symmetric_damping
from markovdd.opalg import I2, SIGMA_MINUS, SIGMA_PLUS, SIGMA_X, SIGMA_Y, SIGMA_Z, kron, vectorize
from markovdd.semigroup import (
    HEISENBERG, SCHRODINGER, LindbladModel, SuperOperator, apply_generator, choi_matrix, cp_check,
    dissipation, dissipation_explicit, generator_superop, markov_kernel, semigroup_map, trace_defect,
    validate_density_matrix,
)

from conftest import random_density, random_hermitian, random_matrix, random_model

RHO = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])


def lindblad_by_hand(H, Ls, x):
    out = -1j * (x @ H - H @ x)
    for L in Ls:
        Ld = L.conj().T
        out = out + 0.5 * (Ld @ x - x @ Ld) @ L + 0.5 * Ld @ (x @ L - L @ x)
    return out


def dephasing_map(x, gamma, t):
    f = np.exp(-2 * gamma * t)
    return np.array([[x[0, 0], f * x[0, 1]], [f * x[1, 0], x[1, 1]]])


def test_zero_model_gives_zero_generator():
    gen = generator_superop(LindbladModel(np.zeros((2, 2)), []))
    assert np.array_equal(gen.matrix, np.zeros((4, 4)))


def test_hamiltonian_generator_is_commutator():
    gen = generator_superop(LindbladModel(SIGMA_Z, []))
    want = -1j * (SIGMA_X @ SIGMA_Z - SIGMA_Z @ SIGMA_X)
    assert np.abs(want - (-2 * SIGMA_Y)).max() < 1e-15
    assert np.abs(gen(SIGMA_X) - want).max() < 1e-15


def test_dephasing_generator_on_sigma_x():
    gamma = 0.8
    gen = generator_superop(dephasing(gamma))
    assert np.abs(gen(SIGMA_X) - (-2 * gamma * SIGMA_X)).max() < 1e-14


def test_generator_matches_hand_formula(rng):
    for d, n in [(2, 1), (3, 2), (4, 3)]:
        model = random_model(rng, d, n)
        gen = generator_superop(model)
        for _ in range(3):
            x = random_matrix(rng, d)
            want = lindblad_by_hand(model.H, model.Ls, x)
            assert np.abs(gen(x) - want).max() < 1e-12
            assert np.abs(apply_generator(model, x) - want).max() < 1e-12


def test_picture_duality(rng):
    model = random_model(rng, 3, 2)
    h = generator_superop(model, HEISENBERG)
    s = generator_superop(model, SCHRODINGER)
    assert np.array_equal(s.matrix, h.matrix.conj().T)
    assert np.array_equal(s.dual().dual().matrix, s.matrix)
    x, rho = random_matrix(rng, 3), random_matrix(rng, 3)
    # tr(X^+ L*(rho)) == tr(L(X)^+ rho)
    assert abs(np.trace(x.conj().T @ s(rho)) - np.trace(h(x).conj().T @ rho)) < 1e-12


def test_schrodinger_generator_is_master_equation(rng):
    model = random_model(rng, 2, 2)
    rho = random_density(rng, 2)
    want = -1j * (model.H @ rho - rho @ model.H)
    for L in model.Ls:
        LdL = L.conj().T @ L
        want = want + L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)
    assert np.abs(generator_superop(model, SCHRODINGER)(rho) - want).max() < 1e-13


def test_generator_rejects_non_hermitian_hamiltonian():
    with pytest.raises(ValueError):
        LindbladModel(SIGMA_PLUS, [])


def test_unital_and_trace_preserving(rng):
    for d, n in [(2, 1), (3, 3), (4, 2)]:
        model = random_model(rng, d, n)
        gen = generator_superop(model)
        assert np.abs(gen(np.eye(d))).max() < 1e-12
        rho = random_density(rng, d)
        assert abs(np.trace(gen.dual()(rho))) < 1e-12


def test_semigroup_map_basic():
    gen = generator_superop(dephasing())
    assert np.array_equal(semigroup_map(gen, 0.0).matrix, np.eye(4))
    with pytest.raises(ValueError):
        semigroup_map(gen, -0.1)


def test_dephasing_closed_form():
    gamma = 1.3
    gen = generator_superop(dephasing(gamma), SCHRODINGER)
    for t in (0.1, 0.5, 2.0):
        assert np.abs(semigroup_map(gen, t)(RHO) - dephasing_map(RHO, gamma, t)).max() < 1e-13


def test_symmetric_damping_relaxation_factors():
    gamma = 0.9
    gen = generator_superop(symmetric_damping(gamma), SCHRODINGER)
    for t in (0.5, 1.0, 2.0):
        out = semigroup_map(gen, t)(RHO)
        assert abs((out[0, 0] - 0.5) - (RHO[0, 0] - 0.5) * np.exp(-gamma * t)) < 1e-12
        assert abs(out[0, 1] - RHO[0, 1] * np.exp(-gamma * t / 2)) < 1e-12


def test_damping_sends_state_to_ground():
    gen = generator_superop(damping(), SCHRODINGER)
    out = semigroup_map(gen, 80.0)(RHO)
    assert np.abs(out - np.diag([0, 1])).max() < 1e-12


def test_semigroup_law_and_hermiticity(rng):
    model = random_model(rng, 3, 2)
    gen = generator_superop(model)
    s, t = 0.37, 0.81
    lhs = semigroup_map(gen, s) @ semigroup_map(gen, t)
    assert np.abs(lhs.matrix - semigroup_map(gen, s + t).matrix).max() < 1e-10
    x = random_matrix(rng, 3)
    phi = semigroup_map(gen, t)
    assert np.abs(phi(x.conj().T) - phi(x).conj().T).max() < 1e-12


def test_dissipation_examples():
    gamma = 0.6
    model = dephasing(gamma)
    assert np.abs(dissipation(model, I2)).max() < 1e-15
    assert np.abs(dissipation(model, SIGMA_Z)).max() < 1e-15
    assert np.abs(dissipation(model, SIGMA_X) - 4 * gamma * I2).max() < 1e-14


def test_dissipation_formulas_agree_and_psd(rng):
    for d, n in [(2, 1), (3, 2), (4, 3)]:
        model = random_model(rng, d, n)
        x = random_matrix(rng, d)
        a, b = dissipation(model, x), dissipation_explicit(model, x)
        assert np.abs(a - b).max() < 1e-12
        assert np.linalg.eigvalsh((a + a.conj().T) / 2).min() >= -1e-10


def test_dissipation_blind_to_hamiltonian(rng):
    model = random_model(rng, 3, 2)
    bare = LindbladModel(np.zeros((3, 3)), model.Ls)
    x = random_matrix(rng, 3)
    assert np.abs(dissipation(model, x) - dissipation(bare, x)).max() < 1e-12


def test_choi_identity_and_transpose():
    omega = vectorize(np.eye(2))  # sum_i |ii>
    choi = choi_matrix(SuperOperator.identity(2, SCHRODINGER))
    assert np.array_equal(choi, np.outer(omega, omega))
    assert np.linalg.matrix_rank(choi) == 1
    swap = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            swap[j * 2 + i, i * 2 + j] = 1  # vec(X^T) = swap @ vec(X)
    ok, lam = cp_check(SuperOperator(swap, SCHRODINGER))
    assert not ok
    assert lam == pytest.approx(-1.0, abs=1e-14)


def test_choi_of_damping_semigroup_is_psd():
    gen = generator_superop(damping(), SCHRODINGER)
    ok, lam = cp_check(semigroup_map(gen, 0.7), tol=1e-10)
    assert ok and lam >= -1e-10
    # amplitude damping with p = 1 - e^{-0.7} has Choi eigenvalues {0, 0, p, 2 - p}
    p = 1 - np.exp(-0.7)
    eig = np.sort(np.linalg.eigvalsh(choi_matrix(semigroup_map(gen, 0.7))))
    np.testing.assert_allclose(eig, np.sort([0, 0, p, 2 - p]), atol=1e-12)


def test_cp_for_random_semigroups(rng):
    for _ in range(20):
        d = int(rng.integers(2, 5))
        model = random_model(rng, d, int(rng.integers(1, 4)))
        t = float(rng.uniform(0.05, 2.0))
        phi = semigroup_map(generator_superop(model, SCHRODINGER), t)
        assert cp_check(phi)[0]
        assert trace_defect(phi) < 1e-10


def test_markov_kernel_reductions(rng):
    model = random_model(rng, 3, 2)
    rho = random_density(rng, 3)
    x = random_matrix(rng, 3)
    gen = generator_superop(model)
    w1 = markov_kernel(model, rho, [0.4], [np.eye(3)], [x])
    assert abs(w1 - np.trace(rho @ semigroup_map(gen, 0.4)(x))) < 1e-13
    ys = [random_matrix(rng, 3) for _ in range(3)]
    xs = [random_matrix(rng, 3) for _ in range(3)]
    same = markov_kernel(model, rho, [0.0, 0.0, 0.0], ys, xs)
    want = np.trace(rho @ ys[0].conj().T @ ys[1].conj().T @ ys[2].conj().T @ xs[2] @ xs[1] @ xs[0])
    assert abs(same - want) < 1e-12


def test_markov_kernel_dephasing_chain():
    gamma, t, h = 1.0, 0.4, 0.3
    model = dephasing(gamma)
    got = markov_kernel(model, RHO, [t, t + h], [SIGMA_X, I2], [I2, SIGMA_Y])
    # explicit 2x2 chain
    inner = dephasing_map(SIGMA_Y, gamma, h)
    want = np.trace(RHO @ dephasing_map(SIGMA_X.conj().T @ inner, gamma, t))
    assert abs(got - want) < 1e-14
    assert abs(got - 0.4j * np.exp(-2 * gamma * h)) < 1e-14
    got2 = markov_kernel(model, RHO, [t, t + h], [SIGMA_X, I2], [I2, SIGMA_X])
    assert abs(got2 - np.exp(-2 * gamma * h)) < 1e-14


def test_markov_kernel_errors():
    model = dephasing()
    with pytest.raises(ValueError):
        markov_kernel(model, RHO, [0.5, 0.2], [I2, I2], [I2, I2])
    with pytest.raises(ValueError):
        markov_kernel(model, 2 * RHO, [0.5], [I2], [I2])
    with pytest.raises(ValueError):
        markov_kernel(model, RHO, [0.5], [I2, I2], [I2])


def test_density_matrix_validation():
    validate_density_matrix(RHO)
    with pytest.raises(ValueError):
        validate_density_matrix(np.diag([1.2, -0.2]))
    with pytest.raises(ValueError):
        validate_density_matrix(np.array([[0.5, 0.1], [0.2, 0.5]]))


def test_model_json_roundtrip(rng):
    model = random_model(rng, 3, 2)
    assert LindbladModel.from_json(model.to_json()) == model
    with pytest.raises(ValueError):
        LindbladModel.from_json({})
    with pytest.raises(ValueError):
        LindbladModel.from_json({"H": [[[0, 0]]], "extra": 1})


def test_raising_and_damping_generators_differ():
    a = generator_superop(damping()).matrix
    b = generator_superop(raising()).matrix
    c = generator_superop(symmetric_damping()).matrix
    assert np.abs(c - 0.5 * (a + b)).max() < 1e-15
    assert np.abs(a - b).max() > 0.5
