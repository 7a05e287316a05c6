"""Configuration-driven command line for reproducible wave experiments.

Subcommands:

- ``solve``: build mesh, assemble, solve; write the solution JSON, a
  sampled-field CSV and (for homogeneous boundary data) a dissipation
  audit.
- ``converge``: run a refinement study and write the error table CSV
  plus a JSON file with fitted rates.
- ``mesh``: build and validate a mesh, write its JSON description.
- ``check-basis``: dimension / residual / conditioning report for the
  basis families.

Configs are TOML; every run writes a manifest with the config hash so
identical configs are identifiable.  Exit codes: 0 success, 2 config
error, 3 mesh validation failure, 4 conditioning failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import platform
import sys
import time

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:          # Python < 3.11
    import tomli as tomllib

from . import __version__
from .analysis import (AnalysisError, convergence_study, dissipation_audit,
                       exact_plane_wave, exact_standing_wave, spec_from_exact)
from .assembly import assemble_system, default_flux_params, graded_flux_params
from .mesh import (BOUNDARY_KINDS, MeshError, ProblemSpec, build_slab_mesh,
                   build_tent_mesh_1d, validate_mesh)
from .solver import (ConditioningError, SolverError, export_solution_json,
                     solve_sequential, write_samples_csv)
from .trefftz_basis import (build_Tp_basis, build_Up_basis, build_Wp_basis,
                            default_directions, dim_Tp, dim_Up, dim_Wp,
                            gram_matrix, unit_frame)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MESH = 3
EXIT_CONDITIONING = 4


class ConfigError(Exception):
    """Configuration problem; the message names the offending field."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

class RunConfig:
    """Parsed and validated TOML configuration."""

    def __init__(self, raw: dict, sha256: str):
        self.raw = raw
        self.sha256 = sha256
        self.problem = raw.get("problem")
        if not isinstance(self.problem, dict):
            raise ConfigError("problem: section missing")
        self.mesh = raw.get("mesh")
        if not isinstance(self.mesh, dict):
            raise ConfigError("mesh: section missing")
        self.disc = raw.get("discretization", {})
        self.output = raw.get("output", {})
        self.study = raw.get("study", {})
        self._validate()

    def _validate(self):
        omega = self.problem.get("omega")
        if (not isinstance(omega, list) or not omega
                or not all(isinstance(ax, list) and len(ax) == 2
                           for ax in omega)):
            raise ConfigError("problem.omega: expected per-axis [lo, hi] pairs")
        n = len(omega)
        if not 1 <= n <= 3:
            raise ConfigError("problem.omega: dimension must be 1..3")
        if any(ax[1] <= ax[0] for ax in omega):
            raise ConfigError("problem.omega: axis with nonpositive extent")
        if not (isinstance(self.problem.get("T"), (int, float))
                and self.problem["T"] > 0):
            raise ConfigError("problem.T: positive final time required")

        kind = self.mesh.get("kind", "slab")
        if kind not in ("slab", "tent1d"):
            raise ConfigError(f"mesh.kind: unknown kind {kind!r}")
        if kind == "tent1d" and n != 1:
            raise ConfigError("mesh.kind: tent1d requires problem dimension 1")
        if kind == "tent1d":
            safety = self.mesh.get("safety", 0.9)
            if not 0 < safety < 1:
                raise ConfigError("mesh.safety: must lie in (0, 1)")
        if not (isinstance(self.mesh.get("nx", 1), int)
                and self.mesh.get("nx", 1) >= 1):
            raise ConfigError("mesh.nx: positive cell count required")

        family = self.disc.get("family", "Tp")
        if family not in ("Tp", "Wp"):
            raise ConfigError(f"discretization.family: {family!r} not in Tp|Wp")
        p = self.disc.get("p", 2)
        if not (isinstance(p, int) and 0 <= p <= 8):
            raise ConfigError("discretization.p: integer degree in 0..8")
        fluxp = self.disc.get("flux", "default")
        if fluxp not in ("default", "graded"):
            raise ConfigError("discretization.flux: default|graded")
        if fluxp == "graded" and kind == "tent1d":
            raise ConfigError(
                "discretization.flux: graded fluxes need product-in-time "
                "elements (mesh.kind = slab)")

        data = self.problem.get("data", {"kind": "zero"})
        dkind = data.get("kind", "zero")
        if dkind not in ("zero", "plane_wave", "standing_wave", "pulse"):
            raise ConfigError(f"problem.data.kind: unknown kind {dkind!r}")
        if dkind == "plane_wave":
            d = data.get("direction")
            if not isinstance(d, list) or len(d) != n:
                raise ConfigError("problem.data.direction: expected a length-n "
                                  "vector")
            if data.get("profile", "sin") not in ("sin", "cos", "gauss",
                                                  "poly"):
                raise ConfigError("problem.data.profile: sin|cos|gauss|poly")
        if dkind == "standing_wave":
            k = data.get("modes")
            if not isinstance(k, list) or len(k) != n:
                raise ConfigError("problem.data.modes: expected n integers")

    @property
    def n(self) -> int:
        return len(self.problem["omega"])


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}")
    try:
        raw = tomllib.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"config: invalid TOML in {path}: {exc}")
    return RunConfig(raw, hashlib.sha256(blob).hexdigest())


# ---------------------------------------------------------------------------
# problem construction from config
# ---------------------------------------------------------------------------

def _speed_from_config(cval):
    if isinstance(cval, (int, float)):
        if cval <= 0:
            raise ConfigError("problem.c: wave speed must be positive")
        return float(cval)
    if isinstance(cval, dict):
        if cval.get("kind") != "step":
            raise ConfigError("problem.c: supported maps: constant or step")
        axis = int(cval.get("axis", 1)) - 1
        at = float(cval["at"])
        below = float(cval["below"])
        above = float(cval["above"])
        if below <= 0 or above <= 0:
            raise ConfigError("problem.c: step speeds must be positive")
        return lambda x: below if x[axis] < at else above
    raise ConfigError("problem.c: expected number or step table")


def _bc_from_config(bc, n):
    if bc is None:
        return "dirichlet"
    if isinstance(bc, str):
        if bc not in BOUNDARY_KINDS:
            raise ConfigError(f"problem.bc: unknown kind {bc!r}")
        return bc
    if isinstance(bc, dict):
        out = {}
        for key, kind in bc.items():
            try:
                axis_s, side = key.rsplit("_", 1)
                axis = int(axis_s.lstrip("x")) - 1
                if side not in ("lo", "hi") or not 0 <= axis < n:
                    raise ValueError
            except ValueError:
                raise ConfigError(f"problem.bc: bad side key {key!r} "
                                  f"(expected e.g. x1_lo)")
            if kind not in BOUNDARY_KINDS:
                raise ConfigError(f"problem.bc.{key}: unknown kind {kind!r}")
            out[(axis, side)] = kind
        for axis in range(n):
            for side in ("lo", "hi"):
                if (axis, side) not in out:
                    raise ConfigError(f"problem.bc: side x{axis + 1}_{side} "
                                      f"not assigned")
        return out
    raise ConfigError("problem.bc: expected kind or side table")


def _plane_profile(name, degree):
    if name == "sin":
        return np.sin, np.cos, lambda s: -np.cos(s)
    if name == "cos":
        return np.cos, lambda s: -np.sin(s), np.sin
    if name == "gauss":
        f = lambda s: np.exp(-4.0 * s ** 2)
        fp = lambda s: -8.0 * s * np.exp(-4.0 * s ** 2)
        return f, fp, None
    if name == "poly":
        k = degree
        f = lambda s: s ** k
        fp = (lambda s: k * s ** (k - 1)) if k > 0 \
            else (lambda s: np.zeros_like(np.asarray(s, dtype=float)))
        F = lambda s: s ** (k + 1) / (k + 1)
        return f, fp, F
    raise ConfigError(f"problem.data.profile: unknown profile {name!r}")


def build_problem(cfg: RunConfig):
    """(ProblemSpec, exact solution or None) from the config."""
    omega = cfg.problem["omega"]
    lo = [ax[0] for ax in omega]
    hi = [ax[1] for ax in omega]
    T = float(cfg.problem["T"])
    c = _speed_from_config(cfg.problem.get("c", 1.0))
    bc = _bc_from_config(cfg.problem.get("bc"), cfg.n)
    theta = float(cfg.problem.get("theta", 1.0))
    if theta <= 0:
        raise ConfigError("problem.theta: must be positive")

    data = cfg.problem.get("data", {"kind": "zero"})
    dkind = data.get("kind", "zero")

    if dkind in ("plane_wave", "standing_wave"):
        if callable(c):
            raise ConfigError("problem.data.kind: exact-solution data need a "
                              "constant wave speed")
        if dkind == "plane_wave":
            d = np.asarray(data["direction"], dtype=float)
            d = d / np.linalg.norm(d)
            f, fp, F = _plane_profile(data.get("profile", "sin"),
                                      int(data.get("degree", 2)))
            exact = exact_plane_wave(d, f, fp, c=c, antiderivative=F)
        else:
            exact = exact_standing_wave(data["modes"], lo, hi, c=c)
        spec = spec_from_exact(exact, lo, hi, T, bc=bc, theta=theta)
        return spec, exact

    v0 = sigma0 = None
    if dkind == "pulse":
        center = np.asarray(data.get("center", [0.5 * (a + b) for a, b
                                                 in zip(lo, hi)]), dtype=float)
        width = float(data.get("width", 10.0))
        v0 = lambda x: np.exp(-width * np.sum((x - center) ** 2, axis=1))
    spec = ProblemSpec(omega_lo=lo, omega_hi=hi, T=T, c=c, theta=theta,
                       bc=bc, v0=v0, sigma0=sigma0)
    return spec, None


def build_mesh(cfg: RunConfig, spec, refine: int = 0):
    nx = int(cfg.mesh.get("nx", 4)) * 2 ** refine
    if cfg.mesh.get("kind", "slab") == "tent1d":
        return build_tent_mesh_1d(spec, nx, float(cfg.mesh.get("safety", 0.9)))
    nt = int(cfg.mesh.get("nt", max(1, nx // 2))) * 2 ** refine
    return build_slab_mesh(spec, nx, nt)


def _flux_factory(cfg: RunConfig):
    if cfg.disc.get("flux", "default") == "graded":
        return graded_flux_params
    return default_flux_params


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

def write_manifest(out_dir, cfg_sha, command, outputs, seed, threads,
                   timings) -> None:
    manifest = {
        "command": command,
        "config_sha256": cfg_sha,
        "seed": seed,
        "threads": threads,
        "outputs": sorted(outputs),
        "versions": {
            "sptdg": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "run": {
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "timings": timings,
        },
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)


def _prepare_out(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def _sample_points(cfg, spec):
    ns = int(cfg.output.get("samples_x", 5))
    nt = int(cfg.output.get("samples_t", 5))
    axes = [np.linspace(lo, hi, ns)
            for lo, hi in zip(spec.omega_lo, spec.omega_hi)]
    ts = np.linspace(0.0, spec.T, nt)
    grids = np.meshgrid(*axes, ts, indexing="ij")
    return np.column_stack([g.ravel() for g in grids])


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_solve(cfg: RunConfig, out_dir, seed=0, threads=None) -> int:
    spec, _ = build_problem(cfg)
    mesh = build_mesh(cfg, spec)
    violations = validate_mesh(mesh)
    if violations:
        for v in violations:
            print(f"mesh validation: {v}", file=sys.stderr)
        return EXIT_MESH

    flux = _flux_factory(cfg)(mesh, spec)
    family = cfg.disc.get("family", "Tp")
    p = int(cfg.disc.get("p", 2))

    t0 = time.perf_counter()
    system = assemble_system(mesh, spec, family, p, flux, seed=seed)
    t1 = time.perf_counter()
    sol = solve_sequential(system)
    t2 = time.perf_counter()

    out = _prepare_out(out_dir)
    outputs = []

    path = os.path.join(out, "solution.json")
    export_solution_json(sol, path)
    outputs.append("solution.json")

    path = os.path.join(out, "samples.csv")
    write_samples_csv(sol, path, _sample_points(cfg, spec))
    outputs.append("samples.csv")

    audit_path = os.path.join(out, "audit.json")
    try:
        report = dissipation_audit(sol, mesh, spec, flux=flux)
        audit = {
            "monotone": report["monotone"],
            "max_rise": report["max_rise"],
            "energies": report["energies"],
            "dg_norm_sq": report["dg_norm_sq"],
            "dissipation": report["dissipation"],
            "dissipation_terms": report["dissipation_terms"],
            "identity_residual": report["identity_residual"],
        }
    except AnalysisError as exc:
        audit = {"skipped": str(exc)}
    with open(audit_path, "w") as fh:
        json.dump(audit, fh, indent=1)
    outputs.append("audit.json")

    write_manifest(out, cfg.sha256, "solve", outputs, seed, threads,
                   {"assemble_s": t1 - t0, "solve_s": t2 - t1})
    return EXIT_OK


def cmd_converge(cfg: RunConfig, out_dir, seed=0, threads=None) -> int:
    if not cfg.study:
        raise ConfigError("study: section required for converge")
    levels = int(cfg.study.get("levels", 0))
    if levels < 3:
        raise ConfigError("study.levels: at least 3 levels required")

    spec, exact = build_problem(cfg)
    if exact is None:
        raise ConfigError("problem.data.kind: convergence studies need "
                          "exact-solution data (plane_wave or standing_wave)")

    meshes = [build_mesh(cfg, spec, refine=l) for l in range(levels)]
    for l, mesh in enumerate(meshes):
        violations = validate_mesh(mesh)
        if violations:
            for v in violations:
                print(f"mesh validation (level {l}): {v}", file=sys.stderr)
            return EXIT_MESH

    family = cfg.disc.get("family", "Tp")
    p = int(cfg.disc.get("p", 2))
    t0 = time.perf_counter()
    table = convergence_study(spec, exact, family, p, meshes,
                              flux_policy=cfg.disc.get("flux", "default"),
                              seed=seed)
    t1 = time.perf_counter()

    out = _prepare_out(out_dir)
    table.to_csv(os.path.join(out, "convergence.csv"))
    table.write_rates_json(os.path.join(out, "rates.json"))
    write_manifest(out, cfg.sha256, "converge",
                   ["convergence.csv", "rates.json"], seed, threads,
                   {"study_s": t1 - t0})
    return EXIT_OK


def cmd_mesh(cfg: RunConfig, out_dir, seed=0, threads=None) -> int:
    spec, _ = build_problem(cfg)
    t0 = time.perf_counter()
    mesh = build_mesh(cfg, spec)
    t1 = time.perf_counter()
    out = _prepare_out(out_dir)
    with open(os.path.join(out, "mesh.json"), "w") as fh:
        json.dump(mesh.to_json_dict(), fh, indent=1)
    violations = validate_mesh(mesh)
    with open(os.path.join(out, "mesh_validation.json"), "w") as fh:
        json.dump({"valid": not violations, "violations": violations}, fh,
                  indent=1)
    write_manifest(out, cfg.sha256, "mesh",
                   ["mesh.json", "mesh_validation.json"], seed, threads,
                   {"build_s": t1 - t0})
    if violations:
        for v in violations:
            print(f"mesh validation: {v}", file=sys.stderr)
        return EXIT_MESH
    return EXIT_OK


def cmd_check_basis(p_max: int, n: int, family: str, seed=0,
                    out_path=None) -> int:
    """Dimension / residual / conditioning table for basis families."""
    if not 0 <= p_max <= 8:
        print("check-basis: p must lie in 0..8", file=sys.stderr)
        return EXIT_CONFIG
    if not 1 <= n <= 3:
        print("check-basis: n must lie in 1..3", file=sys.stderr)
        return EXIT_CONFIG
    families = ("Tp", "Up", "Wp") if family == "all" else (family,)
    if any(f not in ("Tp", "Up", "Wp") for f in families):
        print(f"check-basis: unknown family {family!r}", file=sys.stderr)
        return EXIT_CONFIG

    frame = unit_frame(n)
    rows = []
    header = ("family", "n", "p", "dim", "dim_expected", "residual_max",
              "gram_cond", "admissible", "max_direction_cond")
    for fam in families:
        for p in range(p_max + 1):
            dirs = None
            admissible = True
            dir_cond = float("nan")
            try:
                if fam == "Tp":
                    basis = build_Tp_basis(p, n, frame)
                    want = dim_Tp(p, n)
                elif fam == "Up":
                    dirs = default_directions(p, n, seed=seed)
                    basis = build_Up_basis(p, n, dirs, frame)
                    want = dim_Up(p, n)
                else:
                    dirs = default_directions(p + 1, n, seed=seed)
                    basis = build_Wp_basis(p, n, dirs, frame)
                    want = dim_Wp(p, n)
            except RuntimeError as exc:
                rows.append((fam, n, p, 0, 0, float("nan"), float("nan"),
                             False, float("nan")))
                print(f"check-basis: {fam} p={p}: {exc}", file=sys.stderr)
                continue
            if dirs is not None:
                admissible = dirs.admissible
                dir_cond = max(dirs.condition)
            if fam == "Up":
                # scalar family: check the second-order wave operator
                resid = 0.0
                for u in basis:
                    r = (1.0 / frame.c ** 2) * u.derive(n).derive(n)
                    for ax in range(n):
                        r = r - u.derive(ax).derive(ax)
                    resid = max(resid, r.max_abs_coeff())
            else:
                resid = max(fn.residual_max() for fn in basis)
            G = gram_matrix(basis, frame)
            rows.append((fam, n, p, len(basis), want, resid,
                         float(np.linalg.cond(G)), admissible, dir_cond))

    lines = [",".join(header)]
    for row in rows:
        cells = []
        for val in row:
            if isinstance(val, float):
                cells.append("nan" if math.isnan(val) else f"{val:.6g}")
            else:
                cells.append(str(val))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out_path:
        os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
        with open(out_path, "w") as fh:
            fh.write(text)
    ok = all(r[3] == r[4] for r in rows)
    return EXIT_OK if ok else EXIT_CONFIG


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", required=True, help="TOML config path")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--threads", type=int, default=os.cpu_count(),
                     help="worker count hint for the linear-algebra layer")
    sub.add_argument("--seed", type=int, default=0,
                     help="direction reseeding (n = 3 families)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sptdg",
        description="Space-time Trefftz-DG solver for acoustic waves",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "converge", "mesh"):
        _add_common(subs.add_parser(name))
    pb = subs.add_parser("check-basis")
    pb.add_argument("--p", type=int, required=True, help="max degree")
    pb.add_argument("--n", type=int, required=True, help="space dimension")
    pb.add_argument("--family", default="all", help="Tp|Up|Wp|all")
    pb.add_argument("--out", default=None, help="optional CSV output path")
    pb.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)

    try:
        if args.command == "check-basis":
            return cmd_check_basis(args.p, args.n, args.family,
                                   seed=args.seed, out_path=args.out)
        cfg = load_config(args.config)
        handler = {"solve": cmd_solve, "converge": cmd_converge,
                   "mesh": cmd_mesh}[args.command]
        return handler(cfg, args.out, seed=args.seed, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MeshError as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return EXIT_MESH
    except ConditioningError as exc:
        print(f"conditioning failure: {exc}", file=sys.stderr)
        return EXIT_CONDITIONING
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_CONDITIONING


if __name__ == "__main__":
    sys.exit(main())
