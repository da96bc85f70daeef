"""Named models, kick sets and observables used by the experiments and the CLI."""
from __future__ import annotations

import math

import numpy as np

from .decouple import identity_set, pauli_group, weyl_group, x_flip_set
from .opalg import I2, SIGMA_MINUS, SIGMA_PLUS, SIGMA_X, SIGMA_Y, SIGMA_Z
from .pocket import SpectralModel
from .semigroup import LindbladModel

PLUS_STATE = np.full((2, 2), 0.5, dtype=complex)


def dephasing(gamma: float = 1.0) -> LindbladModel:
    """``L = sqrt(gamma) sigma_z``; coherences decay as ``exp(-2 gamma t)``."""
    return LindbladModel.from_ops([math.sqrt(gamma) * SIGMA_Z])


def damping(gamma: float = 1.0) -> LindbladModel:
    """``L = sqrt(gamma) sigma_-``."""
    return LindbladModel.from_ops([math.sqrt(gamma) * SIGMA_MINUS])


def raising(gamma: float = 1.0) -> LindbladModel:
    return LindbladModel.from_ops([math.sqrt(gamma) * SIGMA_PLUS])


def symmetric_damping(gamma: float = 1.0) -> LindbladModel:
    """Half-rate damping plus half-rate raising: generator ``(L_+ + L_-)/2``."""
    g = math.sqrt(gamma / 2)
    return LindbladModel.from_ops([g * SIGMA_MINUS, g * SIGMA_PLUS])


MODELS = {
    "dephasing": dephasing,
    "damping": damping,
    "raising": raising,
    "symmetric_damping": symmetric_damping,
}


def shallow_pocket(gamma: float = 1.0, rho=None) -> SpectralModel:
    """Qubit with ``H = gamma sigma_z``; the Cauchy average is dephasing at rate ``gamma``."""
    rho = PLUS_STATE if rho is None else rho
    return SpectralModel([(gamma, np.diag([1, 0]).astype(complex)), (-gamma, np.diag([0, 1]).astype(complex))], rho)


def ladder_qutrit(gamma: float = 1.0, rho=None) -> SpectralModel:
    """Qutrit with equally spaced energies ``gamma * (1, 0, -1)``."""
    if rho is None:
        psi = np.ones(3, dtype=complex) / math.sqrt(3)
        rho = np.outer(psi, psi.conj())
    levels = [(gamma * e, np.diag([1.0 * (i == k) for i in range(3)]).astype(complex))
              for k, e in enumerate((1.0, 0.0, -1.0))]
    return SpectralModel(levels, rho)


SPECTRAL_MODELS = {"shallow_pocket": shallow_pocket, "ladder_qutrit": ladder_qutrit}


def kick_set(name: str, d: int = 2) -> list[np.ndarray]:
    if name == "identity":
        return identity_set(d)
    if name == "x":
        if d != 2:
            raise ValueError("the x kick set is defined for qubits only")
        return x_flip_set()
    if name == "pauli":
        if d != 2:
            raise ValueError("the pauli kick set is defined for qubits only")
        return pauli_group()
    if name == "weyl":
        return weyl_group(d)
    raise ValueError(f"unknown kick set {name!r}")


KICK_SETS = ("identity", "x", "pauli", "weyl")

OBSERVABLES = {
    "I": I2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z, "sigma_plus": SIGMA_PLUS, "sigma_minus": SIGMA_MINUS,
}
