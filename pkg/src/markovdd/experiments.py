"""The collision-versus-pocket contrast: one semigroup, two dilations, two DD outcomes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .collision import convergence_study
from .decouple import DDScheme
from .opalg import max_abs
from .pocket import SpectralModel, cauchy_generator, cauchy_semigroup, dd_pocket_evolution
from .semigroup import HEISENBERG, LindbladModel, generator_superop

#: a limit map this far from the identity (max norm) counts as not decoupled
NOT_DECOUPLED_GAP = 1e-3
#: a kicked pocket map this close to the identity counts as decoupled
DECOUPLED_TOL = 1e-12
SAME_SEMIGROUP_TOL = 1e-10


@dataclass
class ContrastResult:
    semigroup_gap: float
    collision_errors: list[float]
    collision_orders: list[float]
    collision_limit_distance: float
    pocket_free_distance: float
    pocket_dd_distances: list[float]

    @property
    def same_semigroup(self) -> bool:
        return self.semigroup_gap <= SAME_SEMIGROUP_TOL

    @property
    def collision_decoupled(self) -> bool:
        return self.collision_limit_distance < NOT_DECOUPLED_GAP

    @property
    def pocket_decoupled(self) -> bool:
        return max(self.pocket_dd_distances) <= DECOUPLED_TOL

    @property
    def verdict(self) -> str:
        ok = self.same_semigroup and not self.collision_decoupled and self.pocket_decoupled
        return "dichotomy" if ok else "no-dichotomy"

    def row(self) -> dict:
        return {
            "same_semigroup": self.same_semigroup,
            "semigroup_gap": self.semigroup_gap,
            "collision_limit_distance": self.collision_limit_distance,
            "collision_decoupled": self.collision_decoupled,
            "pocket_free_distance": self.pocket_free_distance,
            "pocket_max_dd_distance": max(self.pocket_dd_distances),
            "pocket_decoupled": self.pocket_decoupled,
            "verdict": self.verdict,
        }


def contrast(model: LindbladModel, sm: SpectralModel, V, T: float, taus) -> ContrastResult:
    """Run the same kick set against the collision dilation of ``model`` and the pocket ``sm``.

    ``model`` and ``sm`` should generate the same semigroup; the gap between
    their generators is reported, not enforced.
    """
    gap = max_abs(generator_superop(model, HEISENBERG).matrix - cauchy_generator(sm).matrix)
    study = convergence_study(model, DDScheme(V, taus[0]), T, taus)
    limit = study.extrapolated_limit().matrix
    d = model.dim
    eye = np.eye(d * d)
    dd = []
    for tau in taus:
        n = max(1, round(T / tau))
        dd.append(max_abs(dd_pocket_evolution(sm, DDScheme(V, T / n), n).matrix - eye))
    return ContrastResult(
        semigroup_gap=gap,
        collision_errors=study.errors,
        collision_orders=study.orders,
        collision_limit_distance=max_abs(limit - eye),
        pocket_free_distance=max_abs(cauchy_semigroup(sm, T).matrix - eye),
        pocket_dd_distances=dd,
    )
