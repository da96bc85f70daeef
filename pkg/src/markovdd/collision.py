"""Repeated-interaction (collision) surrogate of the vacuum quantum stochastic evolution.

Each step of length ``tau`` couples the system to a fresh ancilla of dimension
``n + 1`` (level 0 is the vacuum, level ``j`` a single quantum in channel ``j``)
through the exactly unitary step

    U = exp( sqrt(tau) sum_j (L_j (x) |j><0| - L_j^+ (x) |0><j|) - i tau H (x) I )

and the ancilla is then discarded. DD kicks act on the system factor only.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .decouple import DDScheme, averaged_generator, lambda_rate, sequence
from .opalg import dag, expm, kron, matrix_unit, max_abs, partial_trace_ancilla, vectorize
from .semigroup import SCHRODINGER, LindbladModel, SuperOperator, generator_superop, semigroup_map


@dataclass
class CollisionConfig:
    """Collision run of total time ``T``; ``tau`` is snapped so ``n_steps * tau == T``.

    ``steps_per_kick`` holds each kick for that many collisions before the next
    kick is drawn (1 means one kick per collision).
    """

    model: LindbladModel
    scheme: DDScheme
    T: float = 1.0
    steps_per_kick: int = 1

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"total time must be positive, got {self.T}")
        if self.scheme.dim != self.model.dim:
            raise ValueError("kick dimension does not match the model")
        if self.steps_per_kick < 1:
            raise ValueError("steps_per_kick must be >= 1")

    @property
    def n_steps(self) -> int:
        return max(1, round(self.T / self.scheme.tau))

    @property
    def tau(self) -> float:
        return self.T / self.n_steps

    @property
    def ancilla_dim(self) -> int:
        return len(self.model.Ls) + 1

    def kick_indices(self) -> list[int]:
        m = self.steps_per_kick
        kicks = sequence(self.scheme, -(-self.n_steps // m))
        return [kicks[k // m] for k in range(self.n_steps)]


def _check_tau(tau: float) -> None:
    if not tau > 0:
        raise ValueError(f"collision step must be positive, got {tau}")


def step_generator(model: LindbladModel, tau: float) -> np.ndarray:
    _check_tau(tau)
    anc = len(model.Ls) + 1
    g = -1j * tau * kron(model.H, np.eye(anc))
    for j, L in enumerate(model.Ls, start=1):
        g += math.sqrt(tau) * (kron(L, matrix_unit(j, 0, anc)) - kron(dag(L), matrix_unit(0, j, anc)))
    return g


def step_unitary(model: LindbladModel, tau: float) -> np.ndarray:
    """System-ancilla unitary for one collision of length ``tau``."""
    return expm(step_generator(model, tau))


def first_order_step(model: LindbladModel, tau: float) -> np.ndarray:
    """Truncated increment ``I - tau(1/2 sum L^+L + iH) (x) I + sqrt(tau) sum (L (x) E_j0 - L^+ (x) E_0j)``.

    Not unitary; kept for comparison with :func:`step_unitary`.
    """
    _check_tau(tau)
    d, anc = model.dim, len(model.Ls) + 1
    drift = 1j * model.H + 0.5 * sum((dag(L) @ L for L in model.Ls), np.zeros((d, d), dtype=complex))
    out = np.eye(d * anc, dtype=complex) - tau * kron(drift, np.eye(anc))
    for j, L in enumerate(model.Ls, start=1):
        out += math.sqrt(tau) * (kron(L, matrix_unit(j, 0, anc)) - kron(dag(L), matrix_unit(0, j, anc)))
    return out


def _vacuum_channel(u: np.ndarray, d: int, anc: int) -> np.ndarray:
    """Schrodinger matrix of ``rho -> Tr_anc[u (rho (x) |0><0|) u^+]``."""
    vac = matrix_unit(0, 0, anc)
    cols = []
    for j in range(d):
        for i in range(d):  # column-stacking order of the input matrix units
            joint = u @ kron(matrix_unit(i, j, d), vac) @ dag(u)
            cols.append(vectorize(partial_trace_ancilla(joint, d, anc)))
    return np.stack(cols, axis=1)


def step_map_vacuum(model: LindbladModel, tau: float, picture: str = SCHRODINGER) -> SuperOperator:
    """Reduced one-collision map with the ancilla prepared in vacuum."""
    u = step_unitary(model, tau)
    mat = _vacuum_channel(u, model.dim, len(model.Ls) + 1)
    return SuperOperator(mat, SCHRODINGER).to(picture)


def _kicked_unitary(u: np.ndarray, v: np.ndarray, anc: int) -> np.ndarray:
    vk = kron(v, np.eye(anc))
    return dag(vk) @ u @ vk


def evolve_dd(config: CollisionConfig) -> SuperOperator:
    """Schrodinger map of the full kicked collision evolution over ``[0, T]``."""
    model, d, anc = config.model, config.model.dim, config.ancilla_dim
    u = step_unitary(model, config.tau)
    maps: dict[int, np.ndarray] = {}
    total = np.eye(d * d, dtype=complex)
    for k in config.kick_indices():
        if k not in maps:
            maps[k] = _vacuum_channel(_kicked_unitary(u, config.scheme.V[k], anc), d, anc)
        total = maps[k] @ total
    return SuperOperator(total, SCHRODINGER)


def vacuum_amplitude_dd(config: CollisionConfig) -> np.ndarray:
    """System block ``<vac| U_v(T, 0) |vac>`` of the kicked evolution.

    Each collision meets its own ancilla, so the vacuum element of the product
    is the ordered product of per-step vacuum blocks.
    """
    model, d, anc = config.model, config.model.dim, config.ancilla_dim
    u = step_unitary(model, config.tau)
    blocks: dict[int, np.ndarray] = {}
    amp = np.eye(d, dtype=complex)
    for k in config.kick_indices():
        if k not in blocks:
            blocks[k] = _kicked_unitary(u, config.scheme.V[k], anc).reshape(d, anc, d, anc)[:, 0, :, 0]
        amp = blocks[k] @ amp
    return amp


def vacuum_amplitude_target(model: LindbladModel, T: float) -> np.ndarray:
    """``exp(-T lambda) I``: the decoupled vacuum amplitude, global phase included."""
    lam = lambda_rate(model) + 1j * model.energy_shift
    return np.exp(-T * lam) * np.eye(model.dim)


def limit_map(model: LindbladModel, V, T: float) -> SuperOperator:
    """``exp(T * Lbar)`` in the Schrodinger picture."""
    gen = generator_superop(averaged_generator(model, V), SCHRODINGER)
    return semigroup_map(gen, T)


@dataclass
class StudyRow:
    tau: float
    seed: str
    error_vs_Lbar: float
    error_vs_identity: float
    empirical_order: float | None = None


@dataclass
class StudyResult:
    rows: list[StudyRow]
    maps: list[SuperOperator] = field(repr=False, default_factory=list)

    @property
    def errors(self) -> list[float]:
        return [r.error_vs_Lbar for r in self.rows]

    @property
    def orders(self) -> list[float]:
        return [r.empirical_order for r in self.rows if r.empirical_order is not None]

    def is_monotone(self) -> bool:
        e = self.errors
        return all(b < a for a, b in zip(e, e[1:]))

    def extrapolated_limit(self) -> SuperOperator:
        """First-order Richardson extrapolation from the two smallest steps."""
        (t1, m1), (t2, m2) = sorted(zip((r.tau for r in self.rows), self.maps), key=lambda p: p[0])[:2]
        mat = m1.matrix + (m1.matrix - m2.matrix) * t1 / (t2 - t1)
        return SuperOperator(mat, SCHRODINGER)


def _orders(taus, errors) -> list[float | None]:
    out: list[float | None] = [None]
    for (t0, e0), (t1, e1) in zip(zip(taus, errors), zip(taus[1:], errors[1:])):
        out.append(math.log(e0 / e1) / math.log(t0 / t1) if e0 > 0 and e1 > 0 else None)
    return out


def convergence_study(model: LindbladModel, scheme: DDScheme, T: float, taus, steps_per_kick: int = 1) -> StudyResult:
    """Distance of the kicked collision map to ``exp(T * Lbar)`` for each step size.

    ``taus`` must be positive and strictly descending. The empirical order of
    row ``i`` is ``log(err[i-1]/err[i]) / log(tau[i-1]/tau[i])``, which is
    ``log2(err(tau)/err(tau/2))`` for halving steps.
    """
    taus = [float(t) for t in taus]
    if not taus or any(t <= 0 for t in taus) or any(b >= a for a, b in zip(taus, taus[1:])):
        raise ValueError("taus must be positive and strictly descending")
    d = model.dim
    target = limit_map(model, scheme.V, T).matrix
    ident = np.eye(d * d)
    label = "cyclic" if scheme.order == "cyclic" else str(scheme.seed)
    maps, rows = [], []
    for tau in taus:
        cfg = CollisionConfig(model, DDScheme(scheme.V, tau, scheme.order, scheme.seed), T, steps_per_kick)
        m = evolve_dd(cfg)
        maps.append(m)
        rows.append(StudyRow(cfg.tau, label, max_abs(m.matrix - target), max_abs(m.matrix - ident)))
    for row, p in zip(rows, _orders([r.tau for r in rows], [r.error_vs_Lbar for r in rows])):
        row.empirical_order = p
    return StudyResult(rows, maps)


def seed_averaged_study(model: LindbladModel, scheme: DDScheme, T: float, taus, seeds) -> StudyResult:
    """Random-order study averaged over ``seeds``; rows are labelled ``"mean"``."""
    seeds = sorted(int(s) for s in seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    runs = [convergence_study(model, scheme.with_order("random", s), T, taus) for s in seeds]
    d = model.dim
    target = limit_map(model, scheme.V, T).matrix
    maps, rows = [], []
    for i, tau in enumerate(r.tau for r in runs[0].rows):
        mat = sum(run.maps[i].matrix for run in runs) / len(runs)
        maps.append(SuperOperator(mat, SCHRODINGER))
        rows.append(StudyRow(tau, "mean", max_abs(mat - target), max_abs(mat - np.eye(d * d))))
    for row, p in zip(rows, _orders([r.tau for r in rows], [r.error_vs_Lbar for r in rows])):
        row.empirical_order = p
    return StudyResult(rows, maps)


STUDY_COLUMNS = ("tau", "seed", "error_vs_Lbar", "error_vs_identity", "empirical_order")


def format_float(x: float | None) -> str:
    """Shortest round-trip decimal; empty for missing values."""
    return "" if x is None else repr(float(x))


def study_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STUDY_COLUMNS)
    for r in rows:
        w.writerow([format_float(r.tau), r.seed, format_float(r.error_vs_Lbar),
                    format_float(r.error_vs_identity), format_float(r.empirical_order)])
    return buf.getvalue()
