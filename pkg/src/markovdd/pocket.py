"""The Cauchy-randomised ("shallow pocket") dilation of a dephasing-type semigroup.

The system Hamiltonian ``H = sum_n E_n P_n`` is rescaled by a standard Cauchy
variable ``lam``. Averaging the free evolution over ``lam`` uses
``E[exp(i u lam)] = exp(-|u|)`` and yields the semigroup

    Phi_t(X) = sum_{n,m} P_n X P_m exp(-|E_m - E_n| t).

Its two-time kernels are not those of a Markov dilation, and system-only kicks
that flip the sign of ``H`` undo the randomised phase exactly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.special

from .decouple import DDScheme, sequence
from .opalg import TOL, as_operator, commutator, dag, from_pairs, kron, max_abs, to_pairs
from .semigroup import HEISENBERG, SuperOperator, validate_density_matrix

#: energy gaps below this are a single decoherence-free block
DEGENERACY_TOL = 1e-12


@dataclass
class SpectralModel:
    """Spectral decomposition ``[(E_n, P_n)]`` of a Hamiltonian plus a state ``rho``."""

    levels: list
    rho: np.ndarray

    def __post_init__(self):
        if not self.levels:
            raise ValueError("spectral model needs at least one level")
        self.levels = [(float(E), as_operator(P)) for E, P in self.levels]
        d = self.levels[0][1].shape[0]
        for n, (_, P) in enumerate(self.levels):
            if P.shape != (d, d):
                raise ValueError(f"projector {n} has shape {P.shape}, expected {(d, d)}")
            for m, (_, Q) in enumerate(self.levels):
                want = P if n == m else np.zeros_like(P)
                if max_abs(P @ Q - want) > TOL:
                    raise ValueError(f"projectors {n} and {m} are not orthogonal projections")
        if max_abs(sum(P for _, P in self.levels) - np.eye(d)) > TOL:
            raise ValueError("projectors do not sum to the identity")
        self.rho = validate_density_matrix(as_operator(self.rho, d))

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def energies(self) -> np.ndarray:
        return np.array([E for E, _ in self.levels])

    @property
    def projectors(self) -> list[np.ndarray]:
        return [P for _, P in self.levels]

    @property
    def hamiltonian(self) -> np.ndarray:
        return sum(E * P for E, P in self.levels)

    @classmethod
    def from_hamiltonian(cls, H, rho, tol: float = DEGENERACY_TOL) -> "SpectralModel":
        return cls(spectral_levels(H, tol), rho)

    def to_json(self) -> dict:
        return {"levels": [{"E": E, "P": to_pairs(P)} for E, P in self.levels], "rho": to_pairs(self.rho)}

    @classmethod
    def from_json(cls, data: dict) -> "SpectralModel":
        unknown = set(data) - {"levels", "rho"}
        if unknown:
            raise ValueError(f"unknown spectral-model fields: {sorted(unknown)}")
        for key in ("levels", "rho"):
            if key not in data:
                raise ValueError(f"spectral_model.{key} is required")
        levels = []
        for i, lv in enumerate(data["levels"]):
            if not isinstance(lv, dict) or set(lv) != {"E", "P"}:
                raise ValueError(f"spectral_model.levels[{i}] must have exactly the fields E and P")
            levels.append((float(lv["E"]), from_pairs(lv["P"])))
        return cls(levels, from_pairs(data["rho"]))


def spectral_levels(H, tol: float = DEGENERACY_TOL) -> list[tuple[float, np.ndarray]]:
    """Group the eigenvectors of Hermitian ``H`` into spectral projectors."""
    H = as_operator(H)
    w, W = np.linalg.eigh((H + dag(H)) / 2)
    levels: list[tuple[float, np.ndarray]] = []
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] >= tol:
            block = W[:, start:k]
            levels.append((float(np.mean(w[start:k])), block @ dag(block)))
            start = k
    return levels


def _spectral_superop(levels, t: float) -> np.ndarray:
    d = levels[0][1].shape[0]
    mat = np.zeros((d * d, d * d), dtype=complex)
    for En, Pn in levels:
        for Em, Pm in levels:
            gap = abs(Em - En)
            if gap < DEGENERACY_TOL:
                gap = 0.0
            # vec(P_n X P_m) = (P_m^T (x) P_n) vec(X)
            mat += np.exp(-gap * t) * kron(Pm.T, Pn)
    return mat


def cauchy_generator(sm: SpectralModel) -> SuperOperator:
    """Heisenberg generator ``X -> -sum |E_m - E_n| P_n X P_m``."""
    d = sm.dim
    mat = np.zeros((d * d, d * d), dtype=complex)
    for En, Pn in sm.levels:
        for Em, Pm in sm.levels:
            gap = abs(Em - En)
            if gap >= DEGENERACY_TOL:
                mat -= gap * kron(Pm.T, Pn)
    return SuperOperator(mat, HEISENBERG)


def cauchy_semigroup(sm: SpectralModel, t: float) -> SuperOperator:
    """Heisenberg map ``Phi_t`` of the Cauchy-averaged evolution."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    return SuperOperator(_spectral_superop(sm.levels, t), HEISENBERG)


def mc_cauchy_oracle(sm: SpectralModel, t: float, X, samples: int = 100_000, seed: int = 0,
                     chunk: int = 20_000) -> tuple[complex, float]:
    """Monte-Carlo estimate of ``E_lam tr{rho e^{i lam t H} X e^{-i lam t H}}``.

    Draws ``samples`` standard Cauchy variates and evaluates the free evolution
    in the eigenbasis of ``H``. Returns ``(mean, standard_error)``, the latter
    being the sample standard deviation of the complex estimator over
    ``sqrt(samples)``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    X = as_operator(X, sm.dim)
    w, W = np.linalg.eigh(sm.hamiltonian)
    xe = dag(W) @ X @ W
    re = dag(W) @ sm.rho @ W
    coef = (re.T * xe).reshape(-1)  # rho_ba X_ab
    freq = (w[:, None] - w[None, :]).reshape(-1)
    rng = np.random.Generator(np.random.PCG64(seed))
    lam = rng.standard_cauchy(samples)
    vals = np.empty(samples, dtype=complex)
    for s in range(0, samples, chunk):
        ph = np.exp(1j * t * np.outer(lam[s:s + chunk], freq))
        vals[s:s + chunk] = ph @ coef
    mean = complex(vals.mean())
    if samples == 1:
        return mean, float("inf")
    se = float(np.sqrt(np.sum(np.abs(vals - mean) ** 2) / (samples - 1) / samples))
    return mean, se


def _kernel_sum(sm: SpectralModel, Y, X, weight) -> complex:
    Y = as_operator(Y, sm.dim)
    X = as_operator(X, sm.dim)
    yd = dag(Y)
    total = 0j
    for En, Pn in sm.levels:
        rp = sm.rho @ Pn @ yd
        for Em, Pm in sm.levels:
            mid = rp @ Pm @ X
            for Er, Pr in sm.levels:
                c = np.trace(mid @ Pr)
                if c != 0:
                    total += c * weight(En - Er, Em - Er)
    return complex(total)


def _check_times(t: float, h: float) -> None:
    if t < 0 or h < 0:
        raise ValueError("kernel times must be non-negative")


def two_time_kernel(sm: SpectralModel, Y, X, t: float, h: float) -> complex:
    """Two-time kernel ``w_{t,t+h}(Y, X)`` of the Cauchy dilation itself."""
    _check_times(t, h)
    return _kernel_sum(sm, Y, X, lambda a, b: np.exp(-abs(a * t + b * h)))


def markov_two_time(sm: SpectralModel, Y, X, t: float, h: float) -> complex:
    """Regression-formula kernel ``tr{rho Phi_t(Y^+ Phi_h(X))}`` of the same semigroup."""
    _check_times(t, h)
    return _kernel_sum(sm, Y, X, lambda a, b: np.exp(-abs(a) * t - abs(b) * h))


def _conjugates(sm: SpectralModel, scheme: DDScheme) -> list[np.ndarray]:
    H = sm.hamiltonian
    return [dag(v) @ H @ v for v in scheme.V]


def _all_commute(ops, tol: float = 1e-12) -> bool:
    scale = max(1.0, max(max_abs(a) for a in ops) ** 2)
    return all(max_abs(commutator(a, b)) <= tol * scale for i, a in enumerate(ops) for b in ops[i + 1:])


def _gauss_cauchy(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``lam = tan(theta)`` and weights for the standard Cauchy average."""
    x, w = scipy.special.roots_legendre(n)
    return np.tan(0.5 * np.pi * x), 0.5 * w


def _heisenberg_average(us: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # vec(U^+ X U) = (U^T (x) U^+) vec(X)
    n, d, _ = us.shape
    left = us.transpose(0, 2, 1)
    right = np.conj(us).transpose(0, 2, 1)
    krons = np.einsum("nab,ncd->nacbd", left, right).reshape(n, d * d, d * d)
    return np.einsum("n,nij->ij", weights, krons)


def _kicked_propagators(hs, runs, tau: float, lam: np.ndarray) -> np.ndarray:
    """``prod_k exp(-i lam tau h_k)`` for every ``lam`` at once, latest kick leftmost."""
    eig = [np.linalg.eigh(h) for h in hs]
    d = hs[0].shape[0]
    us = np.broadcast_to(np.eye(d, dtype=complex), (len(lam), d, d)).copy()
    for idx, reps in runs:
        w, W = eig[idx]
        phase = np.exp(-1j * tau * reps * np.outer(lam, w))
        us = np.einsum("ab,nb,cb->nac", W, phase, np.conj(W)) @ us
    return us


def _runs(seq: list[int]) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    for k in seq:
        if out and out[-1][0] == k:
            out[-1] = (k, out[-1][1] + 1)
        else:
            out.append((k, 1))
    return out


def energy_lattice(energies, max_den: int = 64, tol: float = 1e-10) -> tuple[float, int] | None:
    """Find ``q`` with every ``E_n - E_min`` an integer multiple of ``q``.

    Returns ``(q, span / q)``, or ``None`` when the gaps are not commensurate
    with denominators up to ``max_den``.
    """
    e = np.sort(np.asarray(energies, dtype=float))
    gaps = e - e[0]
    span = gaps[-1]
    if span < DEGENERACY_TOL:
        return None
    den = 1
    for g in gaps[1:-1]:
        frac = Fraction(g / span).limit_denominator(max_den)
        if abs(float(frac) - g / span) > tol:
            return None
        den = den * frac.denominator // math.gcd(den, frac.denominator)
    return span / den, den


def _fourier_map(sm: SpectralModel, scheme: DDScheme, runs, max_terms: int) -> np.ndarray | None:
    """Exact Cauchy average by expanding the kicked propagator over energy paths.

    Every conjugate ``v^+ H v`` has the spectrum of ``H``, so the propagator is
    ``sum_c exp(-i lam tau c.E) A_c`` where ``c`` counts how often each level
    was picked. Terms are merged on the integer vector ``c`` (no tolerance),
    and the average damps each cross term by ``exp(-tau |c.E - c'.E|)``.
    Returns ``None`` when more than ``max_terms`` distinct vectors arise.
    """
    energies = sm.energies
    n_lev, d = len(energies), sm.dim
    projs = [[dag(v) @ P @ v for P in sm.projectors] for v in scheme.V]
    terms: dict[tuple, np.ndarray] = {(0,) * n_lev: np.eye(d, dtype=complex)}
    for idx, reps in runs:
        nxt: dict[tuple, np.ndarray] = {}
        for key, A in terms.items():
            for a, P in enumerate(projs[idx]):
                B = P @ A
                if max_abs(B) < 1e-14:
                    continue
                k2 = key[:a] + (key[a] + reps,) + key[a + 1:]
                nxt[k2] = nxt[k2] + B if k2 in nxt else B
        terms = nxt
        if len(terms) > max_terms:
            return None
    keys = sorted(terms)
    shifts = scheme.tau * (np.array(keys, dtype=float) @ energies)
    amps = np.stack([terms[k] for k in keys])
    damp = np.exp(-np.abs(shifts[:, None] - shifts[None, :]))
    # vec(A_t^+ X A_s) = (A_s^T (x) A_t^+) vec(X)
    right = np.einsum("st,tba->sab", damp, np.conj(amps))
    return np.einsum("sba,scd->acbd", amps, right).reshape(d * d, d * d)


def _lattice_map(hs, runs, tau: float, quantum: float, levels: int, n_steps: int) -> np.ndarray:
    """Exact Cauchy average when all energies sit on a lattice of spacing ``quantum``.

    The averaged integrand is then a trigonometric polynomial in ``lam`` with
    frequencies ``tau*quantum*m``, ``|m| <= n_steps*levels``. Sampling one
    period at ``2*deg + 1`` points and damping each Fourier mode by
    ``exp(-tau*quantum*|m|)`` is exact up to rounding.
    """
    deg = n_steps * levels
    size = 2 * deg + 1
    lam = 2 * np.pi * np.arange(size) / (size * tau * quantum)
    modes = np.fft.fftfreq(size, 1.0 / size)
    weights = np.fft.fft(np.exp(-tau * quantum * np.abs(modes))).real / size
    return _heisenberg_average(_kicked_propagators(hs, runs, tau, lam), weights)


def _quadrature_map(hs, runs, tau: float, nodes: int) -> np.ndarray:
    lam, wts = _gauss_cauchy(nodes)
    return _heisenberg_average(_kicked_propagators(hs, runs, tau, lam), wts)


def dd_pocket_evolution(sm: SpectralModel, scheme: DDScheme, n_steps: int, nodes: int = 129,
                        quad_tol: float = 1e-10, max_nodes: int = 4128,
                        max_samples: int = 200_001, max_terms: int = 3000) -> SuperOperator:
    """Cauchy-averaged Heisenberg map of ``n_steps`` kicked free evolutions.

    For a fixed ``lam`` the kicked propagator is
    ``prod_k exp(-i lam tau v_k^+ H v_k)``. Evaluation routes, in order:

    * conjugated Hamiltonians commute: the product is ``exp(-i lam H_eff)``
      with ``H_eff = tau sum_k v_k^+ H v_k`` and the average is closed form;
    * at most ``max_terms`` distinct accumulated energies: exact expansion
      (see :func:`_fourier_map`);
    * energies commensurate: exact trigonometric-polynomial average (see
      :func:`_lattice_map`);
    * otherwise Gauss-Legendre quadrature in ``theta = arctan(lam)``, doubling
      the node count until successive estimates agree to ``quad_tol``. This
      route converges slowly and warns when it gives up at ``max_nodes``.
    """
    if n_steps < 0:
        raise ValueError("number of steps must be non-negative")
    if scheme.dim != sm.dim:
        raise ValueError("kick dimension does not match the spectral model")
    d = sm.dim
    if n_steps == 0:
        return SuperOperator.identity(d)
    seq = sequence(scheme, n_steps)
    hs = _conjugates(sm, scheme)
    used = sorted(set(seq))
    tau = scheme.tau

    if _all_commute([hs[i] for i in used]):
        counts = np.bincount(seq, minlength=len(hs))
        h_eff = sum(tau * float(counts[i]) * hs[i] for i in used)
        return SuperOperator(_spectral_superop(spectral_levels(h_eff), 1.0), HEISENBERG)

    runs = _runs(seq)
    exact = _fourier_map(sm, scheme, runs, max_terms)
    if exact is not None:
        return SuperOperator(exact, HEISENBERG)
    lattice = energy_lattice(sm.energies)
    if lattice is not None and 2 * n_steps * lattice[1] + 1 <= max_samples:
        return SuperOperator(_lattice_map(hs, runs, tau, lattice[0], lattice[1], n_steps), HEISENBERG)

    prev = _quadrature_map(hs, runs, tau, nodes)
    while True:
        nodes *= 2
        if nodes > max_nodes:
            warnings.warn(f"pocket quadrature not converged to {quad_tol:g} at {nodes // 2} nodes",
                          RuntimeWarning, stacklevel=2)
            return SuperOperator(prev, HEISENBERG)
        cur = _quadrature_map(hs, runs, tau, nodes)
        if max_abs(cur - prev) <= quad_tol:
            return SuperOperator(cur, HEISENBERG)
        prev = cur
