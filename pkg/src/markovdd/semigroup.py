"""GKS-Lindblad generators and the quantum dynamical semigroups they generate.

The Heisenberg-picture generator of a model ``(H, [L_1, ..., L_n])`` is::

    L(X) = sum_k ( L_k^+ X L_k - 1/2 {L_k^+ L_k, X} ) + i [H, X]

Superoperator matrices act on column-stacked operators (see :mod:`.opalg`).
The Schrodinger-picture matrix is the conjugate transpose of the Heisenberg one
under the Hilbert-Schmidt pairing ``tr(X^+ rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .opalg import (
    TOL, as_operator, commutator, dag, expm, from_pairs, is_hermitian, kron, matrix_unit, max_abs,
    to_pairs, unvectorize, vectorize,
)

HEISENBERG = "heisenberg"
SCHRODINGER = "schrodinger"
_PICTURES = (HEISENBERG, SCHRODINGER)


@dataclass
class LindbladModel:
    """Hamiltonian ``H`` plus coupling operators ``Ls`` on ``C^d``.

    ``energy_shift`` records a scalar ``c`` such that the physical Hamiltonian
    is ``H + c*I``. It is a global phase: it never enters a generator, and is
    only consulted by vacuum-amplitude bookkeeping.
    """

    H: np.ndarray
    Ls: list = field(default_factory=list)
    energy_shift: float = 0.0

    def __post_init__(self):
        self.H = as_operator(self.H)
        if not is_hermitian(self.H, TOL):
            raise ValueError("Hamiltonian is not Hermitian")
        self.Ls = [as_operator(L, self.dim) for L in self.Ls]
        self.energy_shift = float(self.energy_shift)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @classmethod
    def from_ops(cls, Ls: Sequence, H=None, dim: int | None = None) -> "LindbladModel":
        if H is None:
            if dim is None:
                dim = np.asarray(Ls[0]).shape[0]
            H = np.zeros((dim, dim), dtype=complex)
        return cls(H, list(Ls))

    def to_json(self) -> dict:
        out = {"H": to_pairs(self.H), "Ls": [to_pairs(L) for L in self.Ls]}
        if self.energy_shift:
            out["energy_shift"] = self.energy_shift
        return out

    @classmethod
    def from_json(cls, data: dict) -> "LindbladModel":
        if not isinstance(data, dict) or not data:
            raise ValueError("model must be a non-empty object with fields H and Ls")
        unknown = set(data) - {"H", "Ls", "energy_shift"}
        if unknown:
            raise ValueError(f"unknown model fields: {sorted(unknown)}")
        Ls = [from_pairs(L) for L in data.get("Ls", [])]
        if "H" in data:
            H = from_pairs(data["H"])
        elif Ls:
            H = np.zeros_like(Ls[0])
        else:
            raise ValueError("model needs H or at least one coupling operator")
        return cls(H, Ls, float(data.get("energy_shift", 0.0)))

    def __eq__(self, other):
        if not isinstance(other, LindbladModel):
            return NotImplemented
        return (
            self.dim == other.dim
            and len(self.Ls) == len(other.Ls)
            and np.array_equal(self.H, other.H)
            and all(np.array_equal(a, b) for a, b in zip(self.Ls, other.Ls))
            and self.energy_shift == other.energy_shift
        )


@dataclass
class SuperOperator:
    """A ``d^2 x d^2`` matrix on column-stacked operators, tagged with its picture."""

    matrix: np.ndarray
    picture: str = HEISENBERG

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.picture not in _PICTURES:
            raise ValueError(f"unknown picture {self.picture!r}")
        n = self.matrix.shape[0]
        d = int(round(np.sqrt(n)))
        if self.matrix.shape != (n, n) or d * d != n:
            raise ValueError(f"superoperator matrix has bad shape {self.matrix.shape}")

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def dual(self) -> "SuperOperator":
        other = SCHRODINGER if self.picture == HEISENBERG else HEISENBERG
        return SuperOperator(dag(self.matrix), other)

    def to(self, picture: str) -> "SuperOperator":
        return self if picture == self.picture else self.dual()

    def __call__(self, x) -> np.ndarray:
        return unvectorize(self.matrix @ vectorize(x), self.dim)

    def __matmul__(self, other: "SuperOperator") -> "SuperOperator":
        if other.picture != self.picture:
            raise ValueError("cannot compose superoperators in different pictures")
        return SuperOperator(self.matrix @ other.matrix, self.picture)

    @classmethod
    def identity(cls, d: int, picture: str = HEISENBERG) -> "SuperOperator":
        return cls(np.eye(d * d, dtype=complex), picture)


def validate_density_matrix(rho, tol: float = TOL) -> np.ndarray:
    rho = as_operator(rho)
    if not is_hermitian(rho, tol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real:.6g}, expected 1")
    if np.linalg.eigvalsh((rho + dag(rho)) / 2).min() < -tol:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def _check_picture(picture: str) -> None:
    if picture not in _PICTURES:
        raise ValueError(f"unknown picture {picture!r}")


def generator_superop(model: LindbladModel, picture: str = HEISENBERG) -> SuperOperator:
    """Matrix of the GKS-Lindblad generator of ``model``."""
    _check_picture(picture)
    if not is_hermitian(model.H, TOL):
        raise ValueError("Hamiltonian is not Hermitian")
    d = model.dim
    eye = np.eye(d, dtype=complex)
    # i[H, X] = i H X - i X H
    gen = 1j * (kron(eye, model.H) - kron(model.H.T, eye))
    for L in model.Ls:
        LdL = dag(L) @ L
        gen += kron(L.T, dag(L)) - 0.5 * (kron(eye, LdL) + kron(LdL.T, eye))
    return SuperOperator(gen, HEISENBERG).to(picture)


def apply_generator(model: LindbladModel, x) -> np.ndarray:
    """Evaluate the Heisenberg generator on ``x`` straight from the commutator form."""
    x = as_operator(x, model.dim)
    out = -1j * commutator(x, model.H)
    for L in model.Ls:
        out = out + 0.5 * commutator(dag(L), x) @ L + 0.5 * dag(L) @ commutator(x, L)
    return out


def semigroup_map(gen: SuperOperator, t: float) -> SuperOperator:
    """``exp(t * gen)`` in the picture of ``gen``."""
    if t < 0:
        raise ValueError(f"semigroup time must be non-negative, got {t}")
    return SuperOperator(expm(t * gen.matrix), gen.picture)


def dissipation(model: LindbladModel, x) -> np.ndarray:
    """Dissipation ``L(X^+ X) - L(X^+) X - X^+ L(X)`` of the Heisenberg generator."""
    x = as_operator(x, model.dim)
    gen = generator_superop(model)
    xd = dag(x)
    return gen(xd @ x) - gen(xd) @ x - xd @ gen(x)


def dissipation_explicit(model: LindbladModel, x) -> np.ndarray:
    """Closed form ``sum_k [X, L_k]^+ [X, L_k]``."""
    x = as_operator(x, model.dim)
    out = np.zeros_like(x)
    for L in model.Ls:
        c = commutator(x, L)
        out = out + dag(c) @ c
    return out


def choi_matrix(sop: SuperOperator) -> np.ndarray:
    """``sum_ij map(E_ij) (x) E_ij`` for the Schrodinger-picture map."""
    m = sop.to(SCHRODINGER)
    d = m.dim
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            choi += kron(m(matrix_unit(i, j, d)), matrix_unit(i, j, d))
    return choi


def cp_check(sop: SuperOperator, tol: float = TOL) -> tuple[bool, float]:
    """Return ``(is_cp, min_eigenvalue)`` of the Choi matrix."""
    choi = choi_matrix(sop)
    lam = float(np.linalg.eigvalsh((choi + dag(choi)) / 2).min())
    return lam >= -tol, lam


def trace_defect(sop: SuperOperator) -> float:
    """Max deviation from trace preservation (Schrodinger) / unitality (Heisenberg)."""
    h = sop.to(HEISENBERG)
    d = h.dim
    return max_abs(h(np.eye(d)) - np.eye(d))


def markov_kernel(model, rho, times: Sequence[float], Ys: Sequence, Xs: Sequence) -> complex:
    """Time-ordered correlation kernel of a Markov (regression-formula) dilation.

    Evaluates ``tr{rho Phi_{s1}(Y1^+ Phi_{s2}(Y2^+ ... Phi_{sn}(Yn^+ Xn) ... X2) X1)}``
    with ``s1 = t1`` and ``sk = tk - t(k-1)``, innermost map first.

    ``model`` may be a :class:`LindbladModel` or a :class:`SuperOperator`
    generator (either picture).
    """
    if len(times) != len(Ys) or len(times) != len(Xs):
        raise ValueError("times, Ys and Xs must have equal length")
    if len(times) == 0:
        raise ValueError("at least one time is required")
    steps = np.diff(np.concatenate([[0.0], np.asarray(times, dtype=float)]))
    if np.any(steps < 0):
        raise ValueError("times must be non-negative and nondecreasing")
    gen = model if isinstance(model, SuperOperator) else generator_superop(model)
    gen = gen.to(HEISENBERG)
    rho = validate_density_matrix(as_operator(rho, gen.dim))

    acc = None
    for k in reversed(range(len(times))):
        y = as_operator(Ys[k], gen.dim)
        x = as_operator(Xs[k], gen.dim)
        inner = dag(y) @ x if acc is None else dag(y) @ acc @ x
        acc = semigroup_map(gen, steps[k])(inner)
    return complex(np.trace(rho @ acc))
