"""Batch command-line interface.

Every pipeline is exposed as one subcommand that reads a flat INI
config (plus a few flag overrides), runs the corresponding library
entry points, and writes CSV files.  Outputs are deterministic for a
given config: numeric cells are printed with 17 significant digits,
every file starts with a header naming the subcommand, the config
hash, and the package version, and nothing in the output depends on
wall-clock time.

Exit codes: 0 success, 2 invalid input (parameters, geometry,
ill-conditioned requests), 3 solver failure (no convergence, no root,
instability, meshing), 4 accuracy target not met.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import __version__
from .critfield import KAPPA0_DEFAULT, fit_expansion, solve_hc3_linear
from .diagnostics import (
    agmon_sweep,
    corner_mass_profile,
    energy_vs_corner_sum,
    minimizer_sanity,
)
from .eigen import corner_spectrum, lambda1_polygon, mu1, theta0
from .errors import (
    AccuracyError,
    ConditioningError,
    ConvergenceError,
    GeometryError,
    InstabilityError,
    MeshingError,
    NoRootError,
    ParameterError,
    SolverError,
    UndefinedRatioError,
)
from .geometry import PolygonDomain
from .glmin import (
    balanced_gauge,
    box_mesh_for,
    detect_onset,
    gl_mesh,
    minimize_coupled,
    minimize_frozen,
    sector_model,
)

SUBCOMMANDS = (
    "sector-mu1",
    "theta0",
    "polygon-spectrum",
    "hc3",
    "gl-min",
    "onset",
    "decay",
    "corner-energy",
    "sanity",
)

_EXIT_INVALID = 2
_EXIT_SOLVER = 3
_EXIT_ACCURACY = 4

_INVALID_ERRORS = (ParameterError, GeometryError, ConditioningError, UndefinedRatioError)
_SOLVER_ERRORS = (ConvergenceError, SolverError, InstabilityError, MeshingError, NoRootError)

_UNIT_SQUARE = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
_DEFAULT_ALPHAS = tuple(round(0.05 * k, 10) * math.pi for k in range(2, 26))


@dataclass
class RunConfig:
    """Flat, serializable description of one batch run.

    Angles are radians; ``vertices`` lists polygon corners
    counterclockwise; empty optional fields mean "use the library
    default".  ``mu`` sets the applied field through H = kappa / mu
    for the minimizer subcommands unless explicit ``H_values`` are
    given.  The config round-trips losslessly through its INI form.
    """

    # domain
    kind: str = "polygon"
    vertices: tuple[tuple[float, float], ...] = _UNIT_SQUARE
    alpha: float = math.pi / 2
    # mesh
    h_eff: float = 0.14
    h_far: float | None = None
    sector_radius: float | None = None
    box_factor: float = 3.0
    # solver
    tol: float = 1e-3
    solver_tol: float = 1e-8
    accuracy_target: float = 5e-3
    min_tol: float = 1e-6
    kappa0: float | None = None
    richardson: bool = True
    seed: int = 0
    jobs: int = 1
    # grids
    alphas: tuple[float, ...] = _DEFAULT_ALPHAS
    B_values: tuple[float, ...] = (2.0, 5.0, 10.0, 20.0, 40.0, 80.0, 160.0)
    kappas: tuple[float, ...] = (6.0, 8.0, 10.0, 12.0)
    H_values: tuple[float, ...] = ()
    mu: float = 0.55
    # minimize
    coupled: bool = False
    fit_order: int = 2
    # diagnostics
    epsilons: tuple[float, ...] = (0.0, 0.25, 0.5)
    M_values: tuple[float, ...] = (6.0, 10.0)
    M_zone: float = 10.0
    # output
    output_dir: str = "runs"

    def validate(self) -> "RunConfig":
        if self.kind not in ("polygon", "sector"):
            raise ParameterError(f"domain kind must be polygon or sector, got {self.kind!r}")
        for name in ("tol", "solver_tol", "accuracy_target", "min_tol", "mu"):
            v = getattr(self, name)
            if not (isinstance(v, float) and math.isfinite(v) and v > 0):
                raise ParameterError(f"config field {name} must be a positive number, got {v}")
        for name in ("alphas", "B_values", "kappas", "epsilons", "M_values"):
            if len(getattr(self, name)) == 0:
                raise ParameterError(f"config grid {name} is empty")
        if self.jobs < 1:
            raise ParameterError(f"jobs must be >= 1, got {self.jobs}")
        if self.fit_order < 0:
            raise ParameterError(f"fit_order must be >= 0, got {self.fit_order}")
        return self


_SECTIONS = {
    "domain": ("kind", "vertices", "alpha"),
    "mesh": ("h_eff", "h_far", "sector_radius", "box_factor"),
    "solver": ("tol", "solver_tol", "accuracy_target", "min_tol", "kappa0",
               "richardson", "seed", "jobs"),
    "grids": ("alphas", "B_values", "kappas", "H_values", "mu"),
    "minimize": ("coupled", "fit_order"),
    "diagnostics": ("epsilons", "M_values", "M_zone"),
    "output": ("output_dir",),
}


def _encode(value) -> str:
    # repr of a float is its shortest exact form, so the INI stays
    # human-editable without losing precision
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return value
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(f"{x!r},{y!r}" for x, y in value)
        return ", ".join(repr(v) for v in value)
    raise ParameterError(f"cannot serialize config value {value!r}")


def _decode(name: str, text: str, template):
    text = text.strip()
    try:
        if isinstance(template, bool):
            if text not in ("true", "false"):
                raise ValueError(f"expected true/false, got {text!r}")
            return text == "true"
        if isinstance(template, int):
            return int(text)
        if isinstance(template, float) or template is None:
            return None if text == "" else float(text)
        if isinstance(template, str):
            return text
        if isinstance(template, tuple):
            if text == "":
                return ()
            if template and isinstance(template[0], tuple) or name == "vertices":
                pairs = []
                for chunk in text.split(";"):
                    xy = [p for p in chunk.strip().split(",") if p.strip()]
                    if len(xy) != 2:
                        raise ValueError(f"vertex {chunk.strip()!r} is not an x,y pair")
                    pairs.append((float(xy[0]), float(xy[1])))
                return tuple(pairs)
            return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        kind = GeometryError if name == "vertices" else ParameterError
        raise kind(f"config field {name}: {exc}") from exc
    raise ParameterError(f"config field {name} has unsupported type")


def config_to_ini(cfg: RunConfig) -> str:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep key case so the round-trip is lossless
    for section, names in _SECTIONS.items():
        parser[section] = {name: _encode(getattr(cfg, name)) for name in names}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def config_from_ini(text: str) -> RunConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParameterError(f"malformed config: {exc}") from exc
    defaults = RunConfig()
    values = {}
    known = {f.name: getattr(defaults, f.name) for f in fields(RunConfig)}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ParameterError(f"unknown config section [{section}]")
        for name, raw in parser[section].items():
            if name not in _SECTIONS[section]:
                raise ParameterError(f"unknown config key {name!r} in [{section}]")
            values[name] = _decode(name, raw, known[name])
    return replace(defaults, **values).validate()


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(config_to_ini(cfg).encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# output plumbing


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _write_csv(path: Path, subcommand: str, cfg: RunConfig, columns, rows) -> Path:
    lines = [
        f"# subcommand: {subcommand}",
        f"# config: sha256:{config_hash(cfg)}",
        f"# version: {__version__}",
        ",".join(columns),
    ]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _parallel(cfg: RunConfig, fn, items):
    if cfg.jobs == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(cfg.jobs, len(items))) as pool:
        return list(pool.map(fn, items))


def _poly(cfg: RunConfig) -> PolygonDomain:
    return PolygonDomain(cfg.vertices)


def _field_for(cfg: RunConfig, kappa: float, index: int) -> float:
    if cfg.H_values:
        if len(cfg.H_values) == 1:
            return cfg.H_values[0]
        if len(cfg.H_values) != len(cfg.kappas):
            raise ParameterError(
                f"H_values has {len(cfg.H_values)} entries for {len(cfg.kappas)} kappas"
            )
        return cfg.H_values[index]
    return kappa / cfg.mu


def _minimize_one(cfg: RunConfig, poly: PolygonDomain, kappa: float, H: float):
    """Frozen or coupled state per the config, on the all-corner mesh."""
    mesh = gl_mesh(poly, kappa * H, h_eff=cfg.h_eff, h_far=cfg.h_far)
    if cfg.coupled:
        box = box_mesh_for(poly, factor=cfg.box_factor)
        return minimize_coupled(
            mesh, box, kappa, H, poly=poly,
            seed=cfg.seed, solver_tol=cfg.solver_tol,
        )
    gauge = balanced_gauge(poly, mesh)
    return minimize_frozen(
        mesh, kappa, H, gauge=gauge,
        tol=cfg.min_tol, seed=cfg.seed, solver_tol=cfg.solver_tol,
    )


# ---------------------------------------------------------------------------
# subcommands


def _run_sector_mu1(cfg: RunConfig, outdir: Path) -> list[Path]:
    def one(alpha: float):
        r = mu1(alpha, cfg.accuracy_target, solver_tol=cfg.solver_tol)
        return (alpha, alpha / math.pi, r.value, r.error)

    rows = _parallel(cfg, one, list(cfg.alphas))
    return [_write_csv(outdir / "sector_mu1.csv", "sector-mu1", cfg,
                       ("alpha", "alpha_over_pi", "mu1", "error"), rows)]


def _run_theta0(cfg: RunConfig, outdir: Path) -> list[Path]:
    r = theta0(cfg.accuracy_target)
    rows = [(r.value, r.error, r.fiber_value, r.fiber_error)]
    return [_write_csv(outdir / "theta0.csv", "theta0", cfg,
                       ("theta0", "error", "fiber_value", "fiber_error"), rows)]


def _run_polygon_spectrum(cfg: RunConfig, outdir: Path) -> list[Path]:
    poly = _poly(cfg)

    def one(B: float):
        lam = float(lambda1_polygon(poly, B, h_eff=cfg.h_eff,
                                    solver_tol=cfg.solver_tol).eigenvalues[0])
        return (B, lam, lam / B)

    rows = _parallel(cfg, one, list(cfg.B_values))
    return [_write_csv(outdir / "polygon_spectrum.csv", "polygon-spectrum", cfg,
                       ("B", "lambda1", "lambda1_over_B"), rows)]


def _run_hc3(cfg: RunConfig, outdir: Path) -> list[Path]:
    poly = _poly(cfg)
    spectrum = corner_spectrum(poly, cfg.accuracy_target)
    kappa0 = KAPPA0_DEFAULT if cfg.kappa0 is None else cfg.kappa0
    results = []
    rows = []
    for kappa in cfg.kappas:
        r = solve_hc3_linear(
            poly, kappa, cfg.tol, kappa0=kappa0, spectrum=spectrum,
            h_eff=cfg.h_eff, solver_tol=cfg.solver_tol, richardson=cfg.richardson,
        )
        results.append(r)
        rows.append((r.kappa, r.H_lin, r.residual, r.normalized_gap,
                     r.evaluations, r.monotone))

    fit_rows = []
    kappas = sorted(cfg.kappas)
    fittable = (kappas[-1] / kappas[0] >= 4.0) if kappas[0] > 0 else False
    for J in range(1, cfg.fit_order + 1):
        if not fittable or len(kappas) < J + 2:
            print(f"note: skipping J={J} fit (needs >= {J + 2} kappas spanning "
                  "a factor 4)", file=sys.stderr)
            continue
        f = fit_expansion(results, J)
        for j, eta in enumerate(f.etas, start=1):
            fit_rows.append((J, j, eta, f.fit_residual))

    files = [_write_csv(outdir / "hc3.csv", "hc3", cfg,
                        ("kappa", "H_lin", "residual", "normalized_gap",
                         "evaluations", "monotone"), rows)]
    if fit_rows:
        files.append(_write_csv(outdir / "hc3_fit.csv", "hc3", cfg,
                                ("J", "j", "eta", "fit_residual"), fit_rows))
    return files


def _run_gl_min(cfg: RunConfig, outdir: Path) -> list[Path]:
    poly = _poly(cfg)
    rows = []
    for i, kappa in enumerate(cfg.kappas):
        H = _field_for(cfg, kappa, i)
        out = _minimize_one(cfg, poly, kappa, H)
        psi = out.state.psi
        rows.append((
            kappa, H, "coupled" if cfg.coupled else "frozen",
            out.energy, out.grad_norm, out.iterations, out.sweeps,
            out.trivial_flag, float(abs(psi).max()) if len(psi) else 0.0,
        ))
    return [_write_csv(outdir / "gl_min.csv", "gl-min", cfg,
                       ("kappa", "H", "mode", "energy", "grad_norm",
                        "iterations", "sweeps", "trivial", "max_psi"), rows)]


def _run_onset(cfg: RunConfig, outdir: Path) -> list[Path]:
    poly = _poly(cfg)
    spectrum = corner_spectrum(poly, cfg.accuracy_target)
    kappa0 = KAPPA0_DEFAULT if cfg.kappa0 is None else cfg.kappa0
    rows = []
    for kappa in cfg.kappas:
        H_star = detect_onset(poly, kappa, h_eff=cfg.h_eff, seed=cfg.seed,
                              hc3_tol=cfg.tol)
        lin = solve_hc3_linear(
            poly, kappa, cfg.tol, kappa0=kappa0, spectrum=spectrum,
            h_eff=cfg.h_eff, solver_tol=cfg.solver_tol, richardson=cfg.richardson,
        )
        rel = abs(H_star - lin.H_lin) / lin.H_lin
        rows.append((kappa, H_star, lin.H_lin, rel))
    return [_write_csv(outdir / "onset.csv", "onset", cfg,
                       ("kappa", "H_star", "H_lin", "rel_diff"), rows)]


def _run_decay(cfg: RunConfig, outdir: Path) -> list[Path]:
    poly = _poly(cfg)
    spectrum = corner_spectrum(poly, cfg.accuracy_target)
    rows = []
    for i, kappa in enumerate(cfg.kappas):
        H = _field_for(cfg, kappa, i)
        out = _minimize_one(cfg, poly, kappa, H)
        sigma = [cid for cid, (m, _) in spectrum.corner_mu1.items() if m <= cfg.mu]
        for rep in agmon_sweep(out, cfg.epsilons, cfg.M_values, sigma_prime=sigma):
            rows.append((kappa, H, "corner", rep.epsilon, rep.M, rep.weighted_mass,
                         rep.near_mass, rep.ratio, rep.fitted_rate))
        if H > kappa:
            for rep in agmon_sweep(out, cfg.epsilons, cfg.M_values):
                rows.append((kappa, H, "boundary", rep.epsilon, rep.M,
                             rep.weighted_mass, rep.near_mass, rep.ratio,
                             rep.fitted_rate))
        prof = corner_mass_profile(out, spectrum, cfg.mu, M=cfg.M_zone)
        for cid, frac, rad in zip(prof.corner_ids, prof.fractions, prof.radii):
            rows.append((kappa, H, f"mass-corner-{cid}", 0.0, cfg.M_zone,
                         frac, rad, prof.off_corner_mass, 0.0))
    return [_write_csv(outdir / "decay.csv", "decay", cfg,
                       ("kappa", "H", "kind", "epsilon", "M", "value",
                        "aux", "ratio", "fitted_rate"), rows)]


def _run_corner_energy(cfg: RunConfig, outdir: Path) -> list[Path]:
    poly = _poly(cfg)
    angles = sorted({round(a, 10) for a in poly.corner_angles()})
    sector_results = [
        sector_model(a, cfg.mu, cfg.mu, R=cfg.sector_radius,
                     seed=cfg.seed, solver_tol=cfg.solver_tol)
        for a in angles
    ]
    rows = []
    for i, kappa in enumerate(cfg.kappas):
        H = _field_for(cfg, kappa, i)
        out = _minimize_one(cfg, poly, kappa, H)
        rep = energy_vs_corner_sum(out, sector_results, cfg.mu)
        rows.append((kappa, rep.mu, rep.gl_energy, rep.corner_sum,
                     rep.rel_gap, rep.degenerate))
    return [_write_csv(outdir / "corner_energy.csv", "corner-energy", cfg,
                       ("kappa", "mu", "gl_energy", "corner_sum",
                        "rel_gap", "degenerate"), rows)]


def _run_sanity(cfg: RunConfig, outdir: Path) -> list[Path]:
    poly = _poly(cfg)
    rows = []
    for i, kappa in enumerate(cfg.kappas):
        H = _field_for(cfg, kappa, i)
        out = _minimize_one(cfg, poly, kappa, H)
        rep = minimizer_sanity(out)
        rows.append((kappa, H, rep.max_psi, rep.l2_norm, rep.l4_sq, rep.p_norm,
                     rep.curl_l2_dev, rep.curl_vacuous, rep.max_ok, rep.quad_ok,
                     rep.curl_ok, rep.four_two_ok, rep.all_ok))
    return [_write_csv(outdir / "sanity.csv", "sanity", cfg,
                       ("kappa", "H", "max_psi", "l2_norm", "l4_sq", "p_norm",
                        "curl_l2_dev", "curl_vacuous", "max_ok", "quad_ok",
                        "curl_ok", "four_two_ok", "all_ok"), rows)]


_RUNNERS = {
    "sector-mu1": _run_sector_mu1,
    "theta0": _run_theta0,
    "polygon-spectrum": _run_polygon_spectrum,
    "hc3": _run_hc3,
    "gl-min": _run_gl_min,
    "onset": _run_onset,
    "decay": _run_decay,
    "corner-energy": _run_corner_energy,
    "sanity": _run_sanity,
}


# ---------------------------------------------------------------------------
# argument handling


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI config file")
    common.add_argument("--output-dir", metavar="DIR", help="output directory")
    common.add_argument("--jobs", type=int, metavar="N", help="worker cap for sweeps")
    common.add_argument("--seed", type=int, metavar="N", help="seed for randomized starts")
    common.add_argument("--tol", type=float, metavar="F", help="primary tolerance")
    common.add_argument("--h-eff", type=float, metavar="F", dest="h_eff",
                        help="corner-zone resolution parameter")
    common.add_argument("--mu", type=float, metavar="F",
                        help="field rule H = kappa / mu")
    common.add_argument("--kappas", metavar="LIST", help="comma-separated kappa grid")
    common.add_argument("--alphas", metavar="LIST", help="comma-separated angle grid (radians)")
    common.add_argument("--b-values", metavar="LIST", dest="B_values",
                        help="comma-separated field grid")
    common.add_argument("--fit-order", type=int, metavar="J", dest="fit_order",
                        help="highest expansion fit order")
    common.add_argument("--coupled", action="store_true", default=None,
                        help="self-consistent potential instead of frozen field")
    common.add_argument("--print-config", action="store_true",
                        help="print the effective config and exit")

    parser = argparse.ArgumentParser(
        prog="cornersc",
        description="Spectral and Ginzburg-Landau pipelines for planar domains with corners.",
    )
    parser.add_argument("--version", action="version", version=f"cornersc {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} pipeline")
    return parser


def _effective_config(args: argparse.Namespace) -> RunConfig:
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ParameterError(f"config file not found: {path}")
        cfg = config_from_ini(path.read_text())
    else:
        cfg = RunConfig()

    env_dir = os.environ.get("CORNERSC_OUTPUT_DIR")
    if env_dir:
        cfg = replace(cfg, output_dir=env_dir)
    env_jobs = os.environ.get("CORNERSC_JOBS")
    if env_jobs:
        try:
            cfg = replace(cfg, jobs=int(env_jobs))
        except ValueError as exc:
            raise ParameterError(f"CORNERSC_JOBS must be an integer, got {env_jobs!r}") from exc

    overrides = {}
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    for name in ("jobs", "seed", "tol", "h_eff", "mu", "fit_order", "coupled"):
        v = getattr(args, name)
        if v is not None:
            overrides[name] = v
    for name in ("kappas", "alphas", "B_values"):
        v = getattr(args, name)
        if v is not None:
            overrides[name] = _decode(name, v, (0.0,))
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg.validate()


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _effective_config(args)
        if args.print_config:
            sys.stdout.write(config_to_ini(cfg))
            return 0
        outdir = Path(cfg.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        files = _RUNNERS[args.subcommand](cfg, outdir)
    except _INVALID_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_INVALID
    except _SOLVER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_SOLVER
    except AccuracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_ACCURACY
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
