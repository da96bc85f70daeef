"""Dynamical-decoupling schemes and the averaged generator they induce.

Random kick orders draw from numpy's ``PCG64`` bit generator seeded with the
scheme seed; ``Generator.integers(0, len(V), N)`` gives the index sequence, so
the sequence depends only on ``(seed, N, len(V))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .opalg import (
    I2, SIGMA_X, SIGMA_Y, SIGMA_Z, TOL, as_operator, dag, from_pairs, is_unitary, kron,
    matrix_unit, max_abs, to_pairs,
)
from .semigroup import HEISENBERG, LindbladModel, SuperOperator, dissipation

CYCLIC = "cyclic"
RANDOM = "random"


def identity_set(d: int = 2) -> list[np.ndarray]:
    return [np.eye(d, dtype=complex)]


def x_flip_set() -> list[np.ndarray]:
    """``{I, sigma_x}``: flips sigma_z, leaves sigma_x fixed."""
    return [I2.copy(), SIGMA_X.copy()]


def pauli_group() -> list[np.ndarray]:
    """The 8-element Pauli group ``{+-I, +-X, +-Y, +-Z}``.

    Ordered ``I, X, Y, Z, -I, -X, -Y, -Z`` so that any even-length prefix of the
    cyclic sequence conjugates ``sigma_-`` into ``sigma_-`` and ``sigma_+``
    equally often.
    """
    base = [I2, SIGMA_X, SIGMA_Y, SIGMA_Z]
    return [p.copy() for p in base] + [-p for p in base]


def weyl_group(d: int) -> list[np.ndarray]:
    """Clock-and-shift operators ``X^a Z^b`` (d^2 elements, a decoupling set for any d)."""
    shift = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    out = []
    for a in range(d):
        for b in range(d):
            out.append(np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
    return out


def _check_kicks(V: Sequence, dim: int | None = None, tol: float = TOL) -> list[np.ndarray]:
    if len(V) == 0:
        raise ValueError("kick set is empty")
    kicks = [as_operator(v, dim) for v in V]
    d = kicks[0].shape[0]
    for i, v in enumerate(kicks):
        if v.shape[0] != d:
            raise ValueError(f"kick {i} has dimension {v.shape[0]}, expected {d}")
        if not is_unitary(v, tol):
            raise ValueError(f"kick {i} is not unitary")
    return kicks


@dataclass
class DDScheme:
    """Kick set ``V``, ordering policy and pulse period ``tau``.

    ``order`` is ``"cyclic"`` or ``"random"``; the random order needs ``seed``.
    """

    V: list
    tau: float = 1e-2
    order: str = CYCLIC
    seed: int | None = None

    def __post_init__(self):
        self.V = _check_kicks(self.V)
        if not self.tau > 0:
            raise ValueError(f"pulse period must be positive, got {self.tau}")
        if self.order not in (CYCLIC, RANDOM):
            raise ValueError(f"unknown order {self.order!r}")
        if self.order == RANDOM:
            if self.seed is None:
                raise ValueError("random order needs a seed")
            self.seed = int(self.seed)
            if not 0 <= self.seed < 2**64:
                raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def dim(self) -> int:
        return self.V[0].shape[0]

    def with_order(self, order: str, seed: int | None = None) -> "DDScheme":
        return DDScheme(self.V, self.tau, order, seed)

    def to_json(self) -> dict:
        order = CYCLIC if self.order == CYCLIC else {RANDOM: self.seed}
        return {"V": [to_pairs(v) for v in self.V], "order": order, "tau": self.tau}

    @classmethod
    def from_json(cls, data: dict) -> "DDScheme":
        unknown = set(data) - {"V", "order", "tau"}
        if unknown:
            raise ValueError(f"unknown scheme fields: {sorted(unknown)}")
        if "V" not in data:
            raise ValueError("scheme.V is required")
        order = data.get("order", CYCLIC)
        seed = None
        if isinstance(order, dict):
            if set(order) != {RANDOM}:
                raise ValueError(f"scheme.order must be 'cyclic' or {{'random': seed}}, got {order}")
            order, seed = RANDOM, order[RANDOM]
        elif order != CYCLIC:
            raise ValueError(f"scheme.order must be 'cyclic' or {{'random': seed}}, got {order!r}")
        return cls([from_pairs(v) for v in data["V"]], float(data.get("tau", 1e-2)), order, seed)


def group_average(V: Sequence, x) -> np.ndarray:
    """``(1/#V) sum_v v^+ X v``."""
    kicks = _check_kicks(V)
    x = as_operator(x, kicks[0].shape[0])
    return sum(dag(v) @ x @ v for v in kicks) / len(kicks)


def verify_decoupling_set(V: Sequence, tol: float = TOL) -> bool:
    """True when the average sends every X to ``tr(X)/d * I``.

    Checked on the matrix units, which suffices by linearity.
    """
    kicks = _check_kicks(V)
    d = kicks[0].shape[0]
    eye = np.eye(d)
    for i in range(d):
        for j in range(d):
            e = matrix_unit(i, j, d)
            if max_abs(group_average(kicks, e) - np.trace(e) / d * eye) > tol:
                return False
    return True


def averaged_generator(model: LindbladModel, V: Sequence, tol: float = 1e-12) -> LindbladModel:
    """Averaged model with collapse operators ``R_{v,j} = v^+ L_j v / sqrt(#V)``.

    The averaged Hamiltonian is split as ``tr(H)/d * I`` (kept in
    ``energy_shift``) plus a traceless remainder that vanishes for a
    decoupling set; remainders below ``tol`` are set to exactly zero.
    """
    kicks = _check_kicks(V, model.dim)
    d = model.dim
    scale = 1.0 / np.sqrt(len(kicks))
    Rs = [scale * (dag(v) @ L @ v) for v in kicks for L in model.Ls]
    shift = float(np.trace(model.H).real) / d
    h_bar = group_average(kicks, model.H) - shift * np.eye(d)
    h_bar = (h_bar + dag(h_bar)) / 2
    if max_abs(h_bar) <= tol:
        h_bar = np.zeros((d, d), dtype=complex)
    return LindbladModel(h_bar, Rs, energy_shift=model.energy_shift + shift)


def averaged_generator_explicit(model: LindbladModel, V: Sequence) -> SuperOperator:
    """Heisenberg matrix of ``X -> avg_v sum_j v^+L_j^+v X v^+L_jv - (1/d) sum_j tr(L_j^+L_j) X``.

    Agrees with ``generator_superop(averaged_generator(model, V))`` whenever
    ``V`` is a decoupling set.
    """
    kicks = _check_kicks(V, model.dim)
    d = model.dim
    mat = np.zeros((d * d, d * d), dtype=complex)
    for v in kicks:
        for L in model.Ls:
            r = dag(v) @ L @ v
            mat += kron(r.T, dag(r))
    mat /= len(kicks)
    rate = sum(np.trace(dag(L) @ L) for L in model.Ls) / d
    mat -= rate * np.eye(d * d)
    return SuperOperator(mat, HEISENBERG)


def sequence(scheme: DDScheme, n: int) -> list[int]:
    """Indices into ``scheme.V`` for ``n`` consecutive kicks."""
    if n < 0:
        raise ValueError("sequence length must be non-negative")
    k = len(scheme.V)
    if scheme.order == CYCLIC:
        return [i % k for i in range(n)]
    rng = np.random.Generator(np.random.PCG64(scheme.seed))
    return [int(i) for i in rng.integers(0, k, size=n)]


def lambda_rate(model: LindbladModel) -> complex:
    """Vacuum decay rate ``(1/d) tr(1/2 sum_j L_j^+ L_j + i H)``."""
    d = model.dim
    acc = 1j * model.H
    for L in model.Ls:
        acc = acc + 0.5 * dag(L) @ L
    return complex(np.trace(acc) / d)


def dissipation_average(model: LindbladModel, V: Sequence, x) -> np.ndarray:
    """``(1/#V) sum_v v^+ D(vXv^+, vXv^+) v``, the dissipation of the averaged generator."""
    kicks = _check_kicks(V, model.dim)
    x = as_operator(x, model.dim)
    out = np.zeros_like(x)
    for v in kicks:
        y = v @ x @ dag(v)
        out = out + dag(v) @ dissipation(model, y) @ v
    return out / len(kicks)
