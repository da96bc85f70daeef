"""Config-driven experiment runner.

Usage::

    markovdd run CONFIG.json [--out DIR]
    markovdd run --print-schema

Exit status: 0 on success, 1 on a configuration error, 2 when a numerical
invariant (unitality, complete positivity) fails on an emitted map.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import catalog
from .collision import convergence_study, format_float, seed_averaged_study, study_csv
from .decouple import (
    DDScheme, averaged_generator, group_average, lambda_rate, verify_decoupling_set,
)
from .experiments import contrast
from .opalg import from_pairs, max_abs, to_pairs
from .pocket import SpectralModel, cauchy_semigroup, dd_pocket_evolution, markov_two_time, two_time_kernel
from .semigroup import (
    HEISENBERG, SCHRODINGER, LindbladModel, cp_check, generator_superop, semigroup_map, trace_defect,
    validate_density_matrix,
)

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2
INVARIANT_TOL = 1e-10

Matrix = list[list[tuple[float, float]]]
OperatorSpec = Union[Literal["I", "X", "Y", "Z", "sigma_plus", "sigma_minus"], Matrix]


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


class InvariantViolation(RuntimeError):
    """A computed map failed a structural check."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CatalogModel(_Strict):
    catalog: Literal["dephasing", "damping", "raising", "symmetric_damping"]
    gamma: float = Field(1.0, gt=0)


class MatrixModel(_Strict):
    H: Optional[Matrix] = None
    Ls: list[Matrix] = []
    energy_shift: float = 0.0


class CatalogSpectral(_Strict):
    catalog: Literal["shallow_pocket", "ladder_qutrit"]
    gamma: float = Field(1.0, gt=0)
    rho: Optional[Matrix] = None


class Level(_Strict):
    E: float
    P: Matrix


class MatrixSpectral(_Strict):
    levels: list[Level]
    rho: Matrix


class RandomOrder(_Strict):
    random: int = Field(ge=0, lt=2**64)


class SchemeConfig(_Strict):
    V: Union[Literal["identity", "x", "pauli", "weyl"], list[Matrix]]
    order: Union[Literal["cyclic"], RandomOrder] = "cyclic"
    tau: float = Field(1e-2, gt=0)


class OutputConfig(_Strict):
    path: str
    format: Literal["csv", "json"] = "csv"


class ExperimentConfig(_Strict):
    """One experiment. Models may be inline, a catalog entry, or a path to a JSON file."""

    kind: Literal["generator", "evolve", "dd-average", "collision-study", "pocket", "kernels", "contrast"]
    model: Union[CatalogModel, MatrixModel, str, None] = None
    reference_model: Union[CatalogModel, MatrixModel, str, None] = None
    spectral_model: Union[CatalogSpectral, MatrixSpectral, str, None] = None
    scheme: Optional[SchemeConfig] = None
    rho: Optional[Matrix] = None
    X: Optional[OperatorSpec] = None
    Y: Optional[OperatorSpec] = None
    T: float = Field(1.0, gt=0)
    times: list[float] = []
    taus: list[float] = []
    seeds: list[int] = []
    steps_per_kick: int = Field(1, ge=1)
    output: OutputConfig

    @field_validator("times", "taus")
    @classmethod
    def _non_negative(cls, v):
        if any(x < 0 for x in v):
            raise ValueError("values must be non-negative")
        return v


# -- config resolution -------------------------------------------------------------------------

def _load_ref(ref, field: str, base: Path):
    if not isinstance(ref, str):
        return ref
    path = Path(ref)
    if not path.is_absolute():
        path = base / path
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{field}: cannot read {path}: {exc.strerror}") from None
    if not text.strip():
        raise ConfigError(f"{field}: file {path} is empty")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{field}: {path} is not valid JSON ({exc.msg})") from None


def resolve_model(ref, field: str, base: Path) -> LindbladModel:
    ref = _load_ref(ref, field, base)
    try:
        if isinstance(ref, CatalogModel):
            return catalog.MODELS[ref.catalog](ref.gamma)
        if isinstance(ref, dict) and "catalog" in ref:
            ref = CatalogModel.model_validate(ref)
            return catalog.MODELS[ref.catalog](ref.gamma)
        data = ref.model_dump(exclude_none=True) if isinstance(ref, MatrixModel) else ref
        return LindbladModel.from_json(data)
    except (ValueError, ValidationError) as exc:
        raise ConfigError(f"{field}: {exc}") from None


def resolve_spectral(ref, field: str, base: Path) -> SpectralModel:
    ref = _load_ref(ref, field, base)
    try:
        if isinstance(ref, dict) and "catalog" in ref:
            ref = CatalogSpectral.model_validate(ref)
        if isinstance(ref, CatalogSpectral):
            rho = None if ref.rho is None else from_pairs(ref.rho)
            return catalog.SPECTRAL_MODELS[ref.catalog](ref.gamma, rho)
        data = ref.model_dump() if isinstance(ref, MatrixSpectral) else ref
        return SpectralModel.from_json(data)
    except (ValueError, ValidationError) as exc:
        raise ConfigError(f"{field}: {exc}") from None


def resolve_scheme(cfg: SchemeConfig, d: int) -> DDScheme:
    try:
        V = catalog.kick_set(cfg.V, d) if isinstance(cfg.V, str) else [from_pairs(v, d) for v in cfg.V]
        if isinstance(cfg.order, RandomOrder):
            return DDScheme(V, cfg.tau, "random", cfg.order.random)
        return DDScheme(V, cfg.tau)
    except ValueError as exc:
        raise ConfigError(f"scheme: {exc}") from None


def resolve_operator(spec, field: str, d: int) -> np.ndarray:
    try:
        if isinstance(spec, str):
            op = catalog.OBSERVABLES[spec]
            if op.shape[0] != d:
                raise ValueError(f"named operator {spec!r} is 2x2, model dimension is {d}")
            return op
        return from_pairs(spec, d)
    except ValueError as exc:
        raise ConfigError(f"{field}: {exc}") from None


def _require(cfg: ExperimentConfig, *fields: str) -> None:
    for f in fields:
        value = getattr(cfg, f)
        if value is None or (isinstance(value, list) and not value):
            raise ConfigError(f"{f}: required for kind={cfg.kind!r}")


# -- output ------------------------------------------------------------------------------------

def _num(x):
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    return float(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _check_map(sop, what: str) -> None:
    ok, lam = cp_check(sop, INVARIANT_TOL)
    if not ok:
        raise InvariantViolation(f"{what}: Choi matrix has eigenvalue {lam:.3e}")
    if trace_defect(sop) > INVARIANT_TOL:
        raise InvariantViolation(f"{what}: map is not trace preserving")


def _check_generator(gen, what: str) -> None:
    d = gen.dim
    if max_abs(gen.to(HEISENBERG)(np.eye(d))) > INVARIANT_TOL:
        raise InvariantViolation(f"{what}: generator does not annihilate the identity")


# -- experiment kinds --------------------------------------------------------------------------

def _run_generator(cfg, base):
    _require(cfg, "model", "scheme")
    model = resolve_model(cfg.model, "model", base)
    scheme = resolve_scheme(cfg.scheme, model.dim)
    bar = averaged_generator(model, scheme.V)
    gen = generator_superop(model)
    gen_bar = generator_superop(bar)
    _check_generator(gen, "generator")
    _check_generator(gen_bar, "averaged generator")
    _check_map(semigroup_map(gen_bar, 1.0), "exp(Lbar)")
    result = {
        "decoupling_set": verify_decoupling_set(scheme.V),
        "difference_norm": max_abs(gen_bar.matrix - gen.matrix),
    }
    if cfg.reference_model is not None:
        ref = resolve_model(cfg.reference_model, "reference_model", base)
        if ref.dim != model.dim:
            raise ConfigError("reference_model: dimension does not match model")
        result["reference_difference_norm"] = max_abs(gen_bar.matrix - generator_superop(ref).matrix)
    if cfg.output.format == "csv":
        rows = [(k, v if isinstance(v, bool) else float(v)) for k, v in sorted(result.items())]
        return _csv(("quantity", "value"), rows)
    result.update(generator=to_pairs(gen.matrix), averaged_generator=to_pairs(gen_bar.matrix),
                  averaged_model=bar.to_json())
    return _json(result)


def _run_evolve(cfg, base):
    _require(cfg, "model", "rho", "times")
    model = resolve_model(cfg.model, "model", base)
    try:
        rho = validate_density_matrix(from_pairs(cfg.rho, model.dim))
    except ValueError as exc:
        raise ConfigError(f"rho: {exc}") from None
    gens = [("L", generator_superop(model, SCHRODINGER))]
    if cfg.scheme is not None:
        scheme = resolve_scheme(cfg.scheme, model.dim)
        gens.append(("Lbar", generator_superop(averaged_generator(model, scheme.V), SCHRODINGER)))
    records = []
    for name, gen in gens:
        for t in cfg.times:
            phi = semigroup_map(gen, t)
            _check_map(phi, f"exp({t} {name})")
            records.append((name, t, phi(rho)))
    if cfg.output.format == "json":
        return _json([{"generator": n, "t": t, "rho": to_pairs(r)} for n, t, r in records])
    d = model.dim
    rows = [(n, t, i, j, float(r[i, j].real), float(r[i, j].imag))
            for n, t, r in records for i in range(d) for j in range(d)]
    return _csv(("generator", "t", "row", "col", "re", "im"), rows)


def _run_dd_average(cfg, base):
    _require(cfg, "scheme")
    d = 2
    model = None
    if cfg.model is not None:
        model = resolve_model(cfg.model, "model", base)
        d = model.dim
    scheme = resolve_scheme(cfg.scheme, d)
    result = {"group_size": len(scheme.V), "decoupling_set": verify_decoupling_set(scheme.V)}
    if cfg.X is not None:
        result["average_of_X"] = to_pairs(group_average(scheme.V, resolve_operator(cfg.X, "X", d)))
    if model is not None:
        lam = lambda_rate(model)
        result["lambda_re"], result["lambda_im"] = lam.real, lam.imag
        result["averaged_model"] = model_json = averaged_generator(model, scheme.V).to_json()
        result["n_collapse_operators"] = len(model_json["Ls"])
    if cfg.output.format == "json":
        return _json(result)
    rows = [(k, v if isinstance(v, bool) else float(v)) for k, v in sorted(result.items())
            if isinstance(v, (bool, int, float))]
    return _csv(("quantity", "value"), rows)


def _run_collision_study(cfg, base):
    _require(cfg, "model", "scheme", "taus")
    model = resolve_model(cfg.model, "model", base)
    scheme = resolve_scheme(cfg.scheme, model.dim)
    taus = sorted(set(cfg.taus), reverse=True)
    if any(t <= 0 for t in taus):
        raise ConfigError("taus: values must be positive")
    try:
        rows = list(convergence_study(model, scheme.with_order("cyclic"), cfg.T, taus, cfg.steps_per_kick).rows)
        for seed in sorted(set(cfg.seeds)):
            rows += convergence_study(model, scheme.with_order("random", seed), cfg.T, taus,
                                      cfg.steps_per_kick).rows
        if cfg.seeds:
            rows += seed_averaged_study(model, scheme, cfg.T, taus, cfg.seeds).rows
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.output.format == "csv":
        return study_csv(rows)
    return _json([{k: _num(v) if k != "seed" else v for k, v in vars(r).items()} for r in rows])


def _run_pocket(cfg, base):
    _require(cfg, "spectral_model", "scheme")
    sm = resolve_spectral(cfg.spectral_model, "spectral_model", base)
    scheme = resolve_scheme(cfg.scheme, sm.dim)
    eye = np.eye(sm.dim ** 2)
    decay = [("decay", None, t, None, max_abs(cauchy_semigroup(sm, t).matrix - eye)) for t in cfg.times]
    dd = []
    for tau in sorted(set(cfg.taus or [scheme.tau]), reverse=True):
        if tau <= 0:
            raise ConfigError("taus: values must be positive")
        n = max(1, round(cfg.T / tau))
        sch = DDScheme(scheme.V, cfg.T / n, scheme.order, scheme.seed)
        free = max_abs(cauchy_semigroup(sm, cfg.T).matrix - eye)
        kicked = max_abs(dd_pocket_evolution(sm, sch, n).matrix - eye)
        dd.append(("no-dd", sch.tau, cfg.T, n, free))
        dd.append(("dd", sch.tau, cfg.T, n, kicked))
    rows = decay + dd
    if cfg.output.format == "json":
        keys = ("series", "tau", "t", "steps", "distance_to_identity")
        return _json([dict(zip(keys, (r[0], _num(r[1]), _num(r[2]), r[3], _num(r[4])))) for r in rows])
    return _csv(("series", "tau", "t", "steps", "distance_to_identity"),
                [tuple("" if v is None else v for v in r) for r in rows])


def _run_kernels(cfg, base):
    _require(cfg, "spectral_model", "X", "Y", "times")
    sm = resolve_spectral(cfg.spectral_model, "spectral_model", base)
    X = resolve_operator(cfg.X, "X", sm.dim)
    Y = resolve_operator(cfg.Y, "Y", sm.dim)
    rows = []
    for t in cfg.times:
        for h in cfg.times:
            a = two_time_kernel(sm, Y, X, t, h)
            b = markov_two_time(sm, Y, X, t, h)
            rows.append((float(t), float(h), a.real, a.imag, b.real, b.imag, abs(a - b)))
    header = ("t", "h", "pocket_re", "pocket_im", "markov_re", "markov_im", "abs_diff")
    if cfg.output.format == "json":
        return _json([dict(zip(header, map(float, r))) for r in rows])
    return _csv(header, rows)


def _run_contrast(cfg, base):
    _require(cfg, "model", "spectral_model", "scheme", "taus")
    model = resolve_model(cfg.model, "model", base)
    sm = resolve_spectral(cfg.spectral_model, "spectral_model", base)
    if sm.dim != model.dim:
        raise ConfigError("spectral_model: dimension does not match model")
    scheme = resolve_scheme(cfg.scheme, model.dim)
    taus = sorted(set(cfg.taus), reverse=True)
    if len(taus) < 2 or taus[-1] <= 0:
        raise ConfigError("taus: need at least two positive values")
    row = contrast(model, sm, scheme.V, cfg.T, taus).row()
    if cfg.output.format == "json":
        return _json({k: _num(v) for k, v in row.items()})
    return _csv(tuple(row), [tuple(float(v) if isinstance(v, float) else v for v in row.values())])


RUNNERS = {
    "generator": _run_generator,
    "evolve": _run_evolve,
    "dd-average": _run_dd_average,
    "collision-study": _run_collision_study,
    "pocket": _run_pocket,
    "kernels": _run_kernels,
    "contrast": _run_contrast,
}


def load_config(path: Path) -> ExperimentConfig:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON ({exc.msg})") from None
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            msgs.append(f"{loc}: {err['msg']}")
        raise ConfigError("; ".join(msgs)) from None


def run(cfg: ExperimentConfig, base: Path, out_dir: Path) -> Path:
    """Execute one experiment and write its output file; returns the file path."""
    text = RUNNERS[cfg.kind](cfg, base)
    target = Path(cfg.output.path)
    if not target.is_absolute():
        target = out_dir / target
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    except OSError as exc:
        raise ConfigError(f"output.path: cannot write {target}: {exc.strerror}") from None
    return target


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="markovdd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config", nargs="?", type=Path)
    p_run.add_argument("--out", type=Path, default=None, help="directory for relative output paths")
    p_run.add_argument("--print-schema", action="store_true", help="print the config JSON schema and exit")
    args = parser.parse_args(argv)

    if args.print_schema:
        print(json.dumps(ExperimentConfig.model_json_schema(), indent=2, sort_keys=True))
        return EXIT_OK
    if args.config is None:
        parser.error("run: a config file is required unless --print-schema is given")
    try:
        cfg = load_config(args.config)
        out = run(cfg, args.config.parent, args.out if args.out is not None else Path.cwd())
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
