import math

import numpy as np
import pytest
import scipy.linalg

from markovdd.catalog import damping, dephasing
from markovdd.collision import (
    CollisionConfig, convergence_study, evolve_dd, first_order_step, limit_map, seed_averaged_study,
    step_map_vacuum, step_unitary, study_csv, vacuum_amplitude_dd, vacuum_amplitude_target,
)
from markovdd.decouple import DDScheme, identity_set, pauli_group, x_flip_set
from markovdd.opalg import I2, SIGMA_X, SIGMA_Z, dag, is_unitary, max_abs
from markovdd.semigroup import HEISENBERG, SCHRODINGER, LindbladModel, choi_matrix, generator_superop

from conftest import random_hermitian, random_model


def plain_collision_oracle(model, tau, n):
    """Stepwise density-matrix propagation with the ancilla written out explicitly."""
    d, anc = model.dim, len(model.Ls) + 1
    u = step_unitary(model, tau)
    cols = []
    for j in range(d):
        for i in range(d):
            rho = np.zeros((d, d), dtype=complex)
            rho[i, j] = 1
            for _ in range(n):
                joint = np.zeros((d * anc, d * anc), dtype=complex)
                for a in range(d):
                    for b in range(d):
                        joint[a * anc, b * anc] = rho[a, b]
                joint = u @ joint @ dag(u)
                rho = np.array([[sum(joint[a * anc + k, b * anc + k] for k in range(anc))
                                 for b in range(d)] for a in range(d)])
            cols.append(rho.reshape(-1, order="F"))
    return np.stack(cols, axis=1)


def test_step_unitary_trivial_cases(rng):
    h = random_hermitian(rng, 2)
    u = step_unitary(LindbladModel(h, []), 0.3)
    assert np.abs(u - scipy.linalg.expm(-0.3j * h)).max() < 1e-14
    assert np.abs(step_unitary(LindbladModel(np.zeros((2, 2)), []), 0.1) - I2).max() == 0
    anc_free = step_unitary(LindbladModel(h, [np.zeros((2, 2))]), 0.3)
    assert np.abs(anc_free - np.kron(scipy.linalg.expm(-0.3j * h), np.eye(2))).max() < 1e-14


def test_step_unitary_is_unitary(rng):
    for tau in (1e-1, 1e-2, 1e-3):
        for d, n in [(2, 1), (3, 2), (4, 3)]:
            u = step_unitary(random_model(rng, d, n), tau)
            assert u.shape == (d * (n + 1), d * (n + 1))
            assert is_unitary(u, 1e-12)


def test_step_unitary_errors():
    with pytest.raises(ValueError):
        step_unitary(dephasing(1.0), 0.0)
    with pytest.raises(ValueError):
        step_map_vacuum(dephasing(1.0), -1.0)


def test_first_order_expansion_defect_scales_as_three_halves():
    model = LindbladModel(0.3 * SIGMA_X, [SIGMA_Z])
    taus = [1e-2, 1e-3, 1e-4]
    defects = [max_abs(step_unitary(model, t) - first_order_step(model, t)) for t in taus]
    for t, e in zip(taus, defects):
        assert e <= 2 * t ** 1.5
    slopes = [math.log(a / b) / math.log(10) for a, b in zip(defects, defects[1:])]
    assert all(1.4 < s < 1.6 for s in slopes)


def test_step_map_is_cptp(rng):
    for d, n in [(2, 1), (2, 2), (3, 2), (4, 3)]:
        m = step_map_vacuum(random_model(rng, d, n), 0.05)
        assert np.linalg.eigvalsh(choi_matrix(m)).min() >= -1e-10
        h = m.to(HEISENBERG)
        assert max_abs(h(np.eye(d)) - np.eye(d)) <= 1e-12


def test_step_map_pure_hamiltonian(rng):
    h = random_hermitian(rng, 3)
    u = scipy.linalg.expm(-0.2j * h)
    m = step_map_vacuum(LindbladModel(h, []), 0.2)
    assert max_abs(m.matrix - np.kron(u.conj(), u)) < 1e-13


def test_step_map_first_order_defect_is_stable():
    model = dephasing(1.0)
    gen = generator_superop(model, SCHRODINGER).matrix
    ratios = [max_abs(step_map_vacuum(model, t).matrix - np.eye(4) - t * gen) / t**2 for t in (1e-2, 5e-3, 2.5e-3)]
    assert max(ratios) < 10
    assert max(ratios) / min(ratios) < 1.1


def test_step_map_approaches_identity():
    model = damping(1.0)
    assert max_abs(step_map_vacuum(model, 1e-8).matrix - np.eye(4)) < 1e-7


def test_config_snaps_tau():
    cfg = CollisionConfig(dephasing(1.0), DDScheme(x_flip_set(), 0.3), T=1.0)
    assert cfg.n_steps == 3
    assert abs(cfg.n_steps * cfg.tau - 1.0) <= 1e-12
    assert cfg.ancilla_dim == 2
    with pytest.raises(ValueError):
        CollisionConfig(dephasing(1.0), DDScheme(x_flip_set(), 0.1), T=0.0)
    with pytest.raises(ValueError):
        CollisionConfig(LindbladModel(np.zeros((3, 3)), []), DDScheme(x_flip_set(), 0.1))


def test_steps_per_kick_holds_kicks():
    cfg = CollisionConfig(dephasing(1.0), DDScheme(pauli_group(), 0.1), T=1.0, steps_per_kick=3)
    assert cfg.kick_indices() == [0, 0, 0, 1, 1, 1, 2, 2, 2, 3]


def test_evolve_dd_matches_explicit_oracle(rng):
    model = random_model(rng, 2, 2)
    cfg = CollisionConfig(model, DDScheme(identity_set(2), 0.25), T=1.0)
    assert max_abs(evolve_dd(cfg).matrix - plain_collision_oracle(model, 0.25, 4)) < 1e-13


def test_evolve_dd_no_kicks_converges_to_semigroup():
    model = LindbladModel(0.5 * SIGMA_X, [np.sqrt(0.8) * np.array([[0, 0], [1, 0]])])
    study = convergence_study(model, DDScheme(identity_set(2), 0.1), 1.0, [4e-2, 2e-2, 1e-2, 5e-3])
    exact = scipy.linalg.expm(generator_superop(model, SCHRODINGER).matrix)
    assert max_abs(study.maps[-1].matrix - exact) == pytest.approx(study.errors[-1])
    assert study.is_monotone()
    assert min(study.orders) >= 0.9


def test_pure_hamiltonian_is_decoupled(rng):
    model = LindbladModel(random_hermitian(rng, 2), [])
    study = convergence_study(model, DDScheme(pauli_group(), 0.1), 1.0, [2e-2, 1e-2, 5e-3])
    assert study.is_monotone()
    assert study.rows[-1].error_vs_identity < 0.05
    assert max_abs(limit_map(model, pauli_group(), 1.0).matrix - np.eye(4)) < 1e-12


def test_dephasing_is_not_decoupled_by_x_flips():
    gamma, T = 1.0, 1.0
    study = convergence_study(dephasing(gamma), DDScheme(x_flip_set(), 0.1), T, [2e-2, 1e-2, 5e-3])
    assert study.is_monotone()
    assert all(0.9 <= p <= 1.5 for p in study.orders)
    floor = (1 - math.exp(-2 * gamma * T)) / 2
    assert all(r.error_vs_identity >= floor for r in study.rows)
    limit = study.extrapolated_limit()
    assert max_abs(limit.matrix - np.eye(4)) >= floor


def test_damping_pauli_order_near_one():
    study = convergence_study(damping(1.0), DDScheme(pauli_group(), 0.1), 1.0, [2e-2, 1e-2, 5e-3])
    assert all(abs(p - 1) < 0.1 for p in study.orders)


def test_study_rejects_bad_taus():
    sch = DDScheme(x_flip_set(), 0.1)
    for taus in ([1e-2, 2e-2], [], [1e-2, 0.0], [1e-2, 1e-2]):
        with pytest.raises(ValueError):
            convergence_study(dephasing(1.0), sch, 1.0, taus)


def test_vacuum_amplitude_examples():
    cfg = CollisionConfig(LindbladModel(np.zeros((2, 2)), []), DDScheme(pauli_group(), 0.1))
    assert np.array_equal(vacuum_amplitude_dd(cfg), np.eye(2))
    for model, V, want in [(dephasing(1.0), x_flip_set(), math.exp(-0.5)), (damping(1.0), pauli_group(), math.exp(-0.25))]:
        assert np.abs(vacuum_amplitude_target(model, 1.0) - want * I2).max() < 1e-15
        for tau in (2e-2, 1e-2):
            amp = vacuum_amplitude_dd(CollisionConfig(model, DDScheme(V, tau)))
            assert np.abs(amp - want * I2).max() <= 5 * tau


def test_vacuum_amplitude_tracks_hamiltonian_phase():
    model = LindbladModel(np.diag([1.5, 0.5]), [SIGMA_Z])
    want = vacuum_amplitude_target(model, 1.0)
    assert np.abs(want - np.exp(-0.5 - 1j) * I2).max() < 1e-15
    amp = vacuum_amplitude_dd(CollisionConfig(model, DDScheme(pauli_group(), 2.5e-3)))
    assert np.abs(amp - want).max() < 0.02


def test_random_order_agrees_with_cyclic_limit():
    model, V, taus = damping(1.0), pauli_group(), [2e-2, 1e-2]
    cyc = convergence_study(model, DDScheme(V, 0.1), 1.0, taus).extrapolated_limit().matrix
    avg = seed_averaged_study(model, DDScheme(V, 0.1), 1.0, taus, range(10))
    assert [r.seed for r in avg.rows] == ["mean", "mean"]
    assert max_abs(avg.extrapolated_limit().matrix - cyc) < 0.05
    assert avg.errors[-1] < 0.05


def test_study_csv_format():
    study = convergence_study(dephasing(1.0), DDScheme(x_flip_set(), 0.1), 1.0, [2e-2, 1e-2])
    lines = study_csv(study.rows).splitlines()
    assert lines[0] == "tau,seed,error_vs_Lbar,error_vs_identity,empirical_order"
    first = lines[1].split(",")
    assert first[1] == "cyclic" and first[4] == ""
    assert float(first[2]) == study.rows[0].error_vs_Lbar
    assert float(lines[2].split(",")[4]) == study.rows[1].empirical_order
