"""Command line driver: one experiment per JSON config, reproducible outputs.

Each invocation reads a single config file, dispatches on its "command"
field, and writes a JSON report plus node-indexed CSV fields into the
output directory, together with a run manifest.  The report body depends
only on the config contents (timings live in the manifest, never in the
report), so rerunning the same config yields byte-identical report files.
Any randomness a pipeline might use is seeded from the config hash via
``config_rng``.

Exit codes: 0 when every property the command asserts holds, 1 on a
failed assertion or a stage error, 2 on an invalid or unreadable config.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .kernels import kernel_from_config
from .grids import (DATA, INTERIOR, ZERO, GridFunction, build_domain,
                    build_grid, grid_function, normalize, weighted_mass)
from .operators import build_quadrature
from .solve import (DirichletProblem, Linear, PucciMinus, PucciPlus,
                    solution_to_csv, solve_dirichlet, solve_linear)
from .barriers import (BarrierParams, ConeSpec, default_cone_samples,
                       find_epsilon, homogeneity_check, verify_subsolution)
from .harnack import (check_half_harnack_sub, check_half_harnack_sup,
                      data_from_config, growth_exponent,
                      replay_supersolution_argument, run_bhp_experiment,
                      shape_from_config)

try:
    from importlib.metadata import version as _dist_version
    VERSION = _dist_version("artifact")
except Exception:  # running from a source tree without installed metadata
    VERSION = "0.1.0"

__all__ = [
    "COMMANDS",
    "ConfigError",
    "ExperimentConfig",
    "RunManifest",
    "config_digest",
    "config_rng",
    "parse_config",
    "validate_config",
    "run",
    "main",
]

COMMANDS = ("solve", "pucci-solve", "verify-barrier", "bhp", "holder",
            "half-harnack", "growth", "replay-thm12")


# ---------------------------------------------------------------------------
# config: hashing, parsing, validation

def config_digest(settings: dict) -> str:
    """sha256 of the canonical serialization (key order and spacing fixed)."""
    blob = json.dumps(settings, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def config_rng(settings: dict) -> np.random.Generator:
    """Generator seeded from the config hash, so sampling is reproducible."""
    return np.random.default_rng(int(config_digest(settings)[:16], 16))


class ConfigError(ValueError):
    """Invalid config; carries the full list of violations, not just one."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    settings: dict
    digest: str

    def get(self, key, default=None):
        return self.settings.get(key, default)


_COMMON_OPT = {"dim", "half_width", "tail_radius", "delta", "tol"}
_SCHEMAS = {
    "solve": ({"kernel", "domain", "grid_ladder", "data"},
              _COMMON_OPT | {"rhs"}),
    "pucci-solve": ({"kernel", "domain", "grid_ladder", "data", "extremal"},
                    _COMMON_OPT | {"rhs"}),
    "verify-barrier": ({"kernel", "barrier"}, {"homogeneity_tol"}),
    "bhp": ({"kernel", "domain", "grid_ladder", "data1", "data2"},
            _COMMON_OPT | {"holder", "stability_tol", "r2_min"}),
    "holder": ({"kernel", "domain", "grid_ladder", "data1", "data2"},
               _COMMON_OPT | {"holder", "stability_tol", "r2_min"}),
    "half-harnack": ({"kernel", "domain", "grid_ladder", "data", "side"},
                     _COMMON_OPT | {"C0", "change_tol"}),
    "growth": ({"kernel", "domain", "grid_ladder", "data"},
               _COMMON_OPT | {"ray", "t_max", "gamma_slack"}),
    "replay-thm12": ({"kernel", "domain", "grid_ladder", "data"},
                     _COMMON_OPT | {"c1_grid", "c2_grid", "target",
                                    "expect_found"}),
}

_KERNEL_KEYS = {"s", "lambda", "Lambda", "variant", "params"}
_DOMAIN_KEYS = {"name", "slope", "period", "e", "eta", "a", "b"}
_DATA_KEYS = {"kind", "a", "b", "center", "radius", "r0", "r1",
              "theta0", "theta1", "value"}
_HOLDER_KEYS = {"k_max", "base", "floor"}
_BARRIER_KEYS = {"eta", "e", "epsilon", "spacing", "samples", "far_cutoff",
                 "homogeneity_samples"}


def _check_subkeys(obj, allowed, label, out):
    if not isinstance(obj, dict):
        out.append(f"{label} must be an object")
        return
    for k in sorted(set(obj) - allowed):
        out.append(f"{label}: unknown key {k!r}")


def validate_config(settings, strict: bool = False) -> list:
    """Return every violation found (empty list means the config is valid)."""
    out = []
    if not isinstance(settings, dict):
        return ["config root must be a JSON object"]
    command = settings.get("command")
    if command not in COMMANDS:
        out.append(f"command must be one of {sorted(COMMANDS)}, got {command!r}")
        return out
    required, optional = _SCHEMAS[command]
    for k in sorted(required - set(settings)):
        out.append(f"missing required key {k!r} for command {command!r}")
    if strict:
        known = required | optional | {"command"}
        for k in sorted(set(settings) - known):
            out.append(f"unknown key {k!r} for command {command!r}")
        if "kernel" in settings:
            _check_subkeys(settings["kernel"], _KERNEL_KEYS, "kernel", out)
        if "domain" in settings:
            _check_subkeys(settings["domain"], _DOMAIN_KEYS, "domain", out)
        for dk in ("data", "data1", "data2", "rhs"):
            if dk in settings:
                _check_subkeys(settings[dk], _DATA_KEYS, dk, out)
        if "holder" in settings:
            _check_subkeys(settings["holder"], _HOLDER_KEYS, "holder", out)
        if "barrier" in settings:
            _check_subkeys(settings["barrier"], _BARRIER_KEYS, "barrier", out)

    kc = settings.get("kernel")
    if isinstance(kc, dict):
        s = kc.get("s")
        if not isinstance(s, (int, float)) or not 0.0 < float(s) < 1.0:
            out.append(f"kernel.s: order out of range (need 0 < s < 1, got {s!r})")
        lam = kc.get("lambda", 1.0)
        Lam = kc.get("Lambda", 1.0)
        if not (isinstance(lam, (int, float)) and isinstance(Lam, (int, float))
                and 0.0 < float(lam) <= float(Lam)):
            out.append(f"kernel: need 0 < lambda <= Lambda, got ({lam!r}, {Lam!r})")
        elif isinstance(s, (int, float)) and 0.0 < float(s) < 1.0:
            try:
                kernel_from_config(kc)
            except (ValueError, TypeError) as exc:
                out.append(f"kernel: {exc}")
    elif "kernel" in settings:
        out.append("kernel must be an object")

    dim = settings.get("dim", 1)
    if dim not in (1, 2):
        out.append(f"dim must be 1 or 2, got {dim!r}")
        dim = 1
    hw = settings.get("half_width", 2.0)
    if not isinstance(hw, (int, float)) or float(hw) < 2.0:
        out.append(f"half_width must be a number >= 2, got {hw!r}")
    if isinstance(settings.get("domain"), dict):
        try:
            shape_from_config(settings["domain"], int(dim))
        except (ValueError, TypeError) as exc:
            out.append(f"domain: {exc}")
    elif "domain" in settings:
        out.append("domain must be an object")
    for dk in ("data", "data1", "data2", "rhs"):
        if dk in settings:
            if isinstance(settings[dk], dict):
                try:
                    data_from_config(settings[dk])
                except (ValueError, TypeError, KeyError) as exc:
                    out.append(f"{dk}: {exc}")
            else:
                out.append(f"{dk} must be an object")

    ladder = settings.get("grid_ladder")
    if "grid_ladder" in (required | optional) and ladder is not None:
        bad = (not isinstance(ladder, list) or not ladder
               or any(not isinstance(h, (int, float)) or h <= 0 for h in ladder))
        if bad:
            out.append(f"grid_ladder must be a nonempty list of positive spacings, got {ladder!r}")
        elif any(b >= a for a, b in zip(ladder, ladder[1:])):
            out.append(f"grid_ladder must be strictly decreasing, got {ladder}")

    delta = settings.get("delta", 0.0)
    if not isinstance(delta, (int, float)) or float(delta) < 0:
        out.append(f"delta must be a nonnegative number, got {delta!r}")
    C0 = settings.get("C0", 0.0)
    if not isinstance(C0, (int, float)) or float(C0) < 0:
        out.append(f"C0 must be a nonnegative number, got {C0!r}")
    if "rhs" in settings and isinstance(delta, (int, float)) and float(delta) > 0:
        out.append("give either rhs or a positive delta, not both")
    if command == "pucci-solve" and settings.get("extremal") not in ("plus", "minus"):
        out.append(f"extremal must be 'plus' or 'minus', got {settings.get('extremal')!r}")
    if command == "half-harnack" and settings.get("side") not in ("sub", "sup"):
        out.append(f"side must be 'sub' or 'sup', got {settings.get('side')!r}")

    bc = settings.get("barrier")
    if command == "verify-barrier" and isinstance(bc, dict):
        eta = bc.get("eta", 1.0)
        if not isinstance(eta, (int, float)) or float(eta) < 0:
            out.append(f"barrier.eta must be nonnegative, got {eta!r}")
        sp = bc.get("spacing", 2.0 ** -6)
        if not isinstance(sp, (int, float)) or not 0 < float(sp) <= 0.25:
            out.append(f"barrier.spacing must lie in (0, 1/4], got {sp!r}")
        eps = bc.get("epsilon")
        if eps is not None:
            s_ok = isinstance(kc, dict) and isinstance(kc.get("s"), (int, float))
            two_s = 2.0 * float(kc["s"]) if s_ok else 2.0
            if not isinstance(eps, (int, float)) or not 0 < float(eps) < two_s:
                out.append(f"barrier.epsilon must lie in (0, 2s), got {eps!r}")
    elif command == "verify-barrier" and "barrier" in settings:
        out.append("barrier must be an object")
    return out


def _load_json(text: str, strict: bool, violations: list):
    dup = []

    def hook(pairs):
        seen = set()
        for k, _ in pairs:
            if k in seen:
                dup.append(k)
            seen.add(k)
        return dict(pairs)

    def constant(name):
        violations.append(f"non-finite number {name} is not allowed")
        return {"NaN": math.nan, "Infinity": math.inf,
                "-Infinity": -math.inf}[name]

    obj = json.loads(text, object_pairs_hook=hook,
                     parse_constant=constant if strict else None)
    if strict:
        for k in dup:
            violations.append(
                f"duplicate key {k!r} (the config would not round-trip)")
    return obj


def parse_config(path, strict: bool = False) -> ExperimentConfig:
    """Load and validate one config file.

    Raises ConfigError carrying *all* violations, or OSError when the
    file cannot be read at all.
    """
    text = Path(path).read_text()
    violations = []
    try:
        settings = _load_json(text, strict, violations)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"]) from None
    violations += validate_config(settings, strict=strict)
    if violations:
        raise ConfigError(violations)
    return ExperimentConfig(command=settings["command"], settings=settings,
                            digest=config_digest(settings))


# ---------------------------------------------------------------------------
# manifest and stage timing

def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunManifest:
    command: str
    config_hash: str
    version: str = VERSION
    created: str = ""
    finished: str = ""
    durations: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    failed_stage: str | None = None
    error: str | None = None
    exit_code: int = 0

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "version": self.version,
            "created": self.created,
            "finished": self.finished,
            "durations_sec": {k: float(v) for k, v in self.durations.items()},
            "outputs": list(self.outputs),
            "failed_stage": self.failed_stage,
            "error": self.error,
            "exit_code": int(self.exit_code),
        }

    def write(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n")


class _StageClock:
    """Names the running stage so a failure can be pinned in the manifest."""

    def __init__(self):
        self.durations = {}
        self.current = None

    @contextmanager
    def stage(self, name):
        self.current = name
        t0 = time.perf_counter()
        try:
            yield
            self.current = None
        finally:
            self.durations[name] = (self.durations.get(name, 0.0)
                                    + time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# shared builders

def _build_instance(settings, kernel, h):
    dim = int(settings.get("dim", 1))
    grid = build_grid(dim, float(settings.get("half_width", 2.0)), float(h))
    shape = shape_from_config(settings["domain"], dim)
    mask = build_domain(grid, shape)
    table = build_quadrature(grid, kernel.order.s,
                             float(settings.get("tail_radius", 1.0)))
    return grid, mask, table


def _data_field(grid, mask, spec) -> GridFunction:
    gf = data_from_config(spec)
    vals = np.asarray(gf(grid.nodes()), dtype=float)
    zi = mask.zero_idx()
    if zi.size:
        vals[zi] = 0.0
    return GridFunction(grid, vals, gf)


def _rhs_field(grid, settings) -> GridFunction:
    if "rhs" in settings:
        return grid_function(grid, data_from_config(settings["rhs"]))
    return grid_function(grid, -float(settings.get("delta", 0.0)))


def _field_writer(mask, u):
    return lambda path, m=mask, uu=u: solution_to_csv(path, m, uu)


def _ratio_writer(mask, values):
    # same column layout as solution_to_csv; floored nodes read as nan
    def write(path, m=mask, vals=np.asarray(values, dtype=float)):
        names = {INTERIOR: "interior", ZERO: "zero", DATA: "data"}
        nodes = m.grid.nodes()
        with open(path, "w") as fh:
            cols = ",".join(f"x{i}" for i in range(m.grid.dim))
            fh.write(f"{cols},label,value\n")
            for p, lab, val in zip(nodes, m.labels, vals):
                coords = ",".join(repr(float(c)) for c in p)
                fh.write(f"{coords},{names[int(lab)]},{repr(float(val))}\n")
    return write


def _plain(obj):
    """Recursively convert to JSON-clean types; non-finite floats -> None."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


# ---------------------------------------------------------------------------
# command runners: each returns (report dict, ok flag, csv fields)

def _run_solve(settings, clock, jobs):
    kernel = kernel_from_config(settings["kernel"])
    h = float(settings["grid_ladder"][-1])
    with clock.stage("build"):
        grid, mask, table = _build_instance(settings, kernel, h)
        data = _data_field(grid, mask, settings["data"])
        rhs = _rhs_field(grid, settings)
        if settings["command"] == "pucci-solve":
            bounds = kernel.bounds
            op = PucciPlus(bounds) if settings["extremal"] == "plus" \
                else PucciMinus(bounds)
        else:
            op = Linear(kernel)
        problem = DirichletProblem(mask, rhs, data, op)
    with clock.stage("solve"):
        u, rep = solve_dirichlet(problem, tol=float(settings.get("tol", 1e-8)),
                                 table=table)
    with clock.stage("measure"):
        report = {
            "spacing": h,
            "solver": rep.to_dict(),
            "sup_abs": float(np.max(np.abs(u.values))),
            "weighted_mass_abs": weighted_mass(grid, u, kernel.order.s,
                                               absolute=True),
        }
        if settings["command"] == "pucci-solve":
            report["extremal"] = settings["extremal"]
    return report, bool(rep.converged), {"solution.csv": _field_writer(mask, u)}


def _run_verify_barrier(settings, clock, jobs):
    kernel = kernel_from_config(settings["kernel"])
    bc = settings["barrier"]
    e = tuple(float(c) for c in bc.get("e", (1.0, 0.0)))
    cone = ConeSpec(e=e, eta=float(bc.get("eta", 1.0)))
    h = float(bc.get("spacing", 2.0 ** -6))
    n_samples = int(bc.get("samples", 210))
    far = float(bc.get("far_cutoff", 64.0))
    with clock.stage("build"):
        grid = build_grid(cone.dim, 2.0, h)
        table = build_quadrature(grid, kernel.order.s, 1.0)
    with clock.stage("certify"):
        if "epsilon" in bc:
            params = BarrierParams(cone, float(bc["epsilon"]), kernel.order)
            per = max(1, -(-n_samples // 3))
            pts = default_cone_samples(cone, h, per_radius=per)
            cert = verify_subsolution(params, kernel.bounds, pts, table,
                                      far_cutoff=far)
        else:
            cert = find_epsilon(cone, kernel.order, kernel.bounds, table,
                                n_final_samples=n_samples, far_cutoff=far)
    with clock.stage("measure"):
        n_h = int(bc.get("homogeneity_samples", 10))
        pts = default_cone_samples(cone, h, radii=(0.5, 1.0),
                                   per_radius=max(1, n_h // 2))
        defects = homogeneity_check(cert.params, kernel.bounds, pts, table,
                                    far_cutoff=far)
        defect = float(np.max(defects))
        tol = float(settings.get("homogeneity_tol", 0.05))
        report = {
            "certificate": cert.to_dict(),
            "certificate_ok": bool(cert.ok),
            "homogeneity_max_defect": defect,
            "homogeneity_tol": tol,
        }
    return report, bool(cert.ok) and defect <= tol, {}


def _holder_ok(fit, settings) -> bool:
    if fit.exact:
        return True
    r2_min = float(settings.get("r2_min", 0.9))
    return fit.alpha is not None and fit.alpha > 0 and fit.r_squared >= r2_min


def _run_bhp(settings, clock, jobs):
    if settings["command"] == "holder":
        settings = dict(settings)
        settings.setdefault("holder", {"k_max": 3, "base": 2.0})
    kernel = kernel_from_config(settings["kernel"])
    s = kernel.order.s
    with clock.stage("pipeline"):
        rep, fit, det = run_bhp_experiment(settings, jobs=jobs)
    with clock.stage("measure"):
        report = {
            "harnack": rep.to_dict(),
            "per_spacing": det["per_spacing"],
            "holder": None if fit is None else fit.to_dict(),
        }
        stab_tol = float(settings.get("stability_tol", 0.10))
        ok = (math.isfinite(rep.constant) and rep.constant >= 1.0
              and (len(settings["grid_ladder"]) < 2 or rep.stability <= stab_tol))
        if settings["command"] == "holder":
            ok = ok and fit is not None and _holder_ok(fit, settings)
        elif fit is not None:
            ok = ok and _holder_ok(fit, settings)

        finest = det["finest"]
        grid, mask = finest["grid"], finest["mask"]
        n1 = normalize(grid, finest["u1"], s)
        n2 = normalize(grid, finest["u2"], s)
        floor = 10.0 * grid.spacing ** (2.0 * s)
        good = (mask.labels == INTERIOR) & (n2.values > floor)
        ratio = np.where(good, n1.values / np.where(good, n2.values, 1.0),
                         np.nan)
        fields = {
            "u1.csv": _field_writer(mask, finest["u1"]),
            "u2.csv": _field_writer(mask, finest["u2"]),
            "ratio.csv": _ratio_writer(mask, ratio),
        }
    return report, ok, fields


def _run_half_harnack(settings, clock, jobs):
    kernel = kernel_from_config(settings["kernel"])
    s = kernel.order.s
    side = settings["side"]
    C0 = float(settings.get("C0", 0.0))
    check = check_half_harnack_sub if side == "sub" else check_half_harnack_sup

    def run_one(h):
        grid, mask, table = _build_instance(settings, kernel, h)
        data = _data_field(grid, mask, settings["data"])
        rhs = _rhs_field(grid, settings)
        problem = DirichletProblem(mask, rhs, data, Linear(kernel))
        u, rep = solve_linear(problem, tol=float(settings.get("tol", 1e-8)),
                              table=table)
        ratio = check(grid, u, s, C0, kernel.bounds, table)
        return grid, mask, u, rep, ratio

    ladder = [float(h) for h in settings["grid_ladder"]]
    with clock.stage("solve"):
        if jobs > 1 and len(ladder) > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                runs = list(pool.map(run_one, ladder))
        else:
            runs = [run_one(h) for h in ladder]
    with clock.stage("measure"):
        ratios = [float(r[4]) for r in runs]
        change = 0.0
        if len(ratios) >= 2 and ratios[-2] != 0.0:
            change = abs(ratios[-1] - ratios[-2]) / abs(ratios[-2])
        tol = float(settings.get("change_tol", 0.15))
        ok = all(math.isfinite(r) for r in ratios) and change <= tol
        report = {
            "side": side,
            "C0": C0,
            "spacings": ladder,
            "ratios": ratios,
            "change": change,
            "change_tol": tol,
        }
        grid, mask, u = runs[-1][0], runs[-1][1], runs[-1][2]
    return report, ok, {"solution.csv": _field_writer(mask, u)}


def _run_growth(settings, clock, jobs):
    kernel = kernel_from_config(settings["kernel"])
    h = float(settings["grid_ladder"][-1])
    with clock.stage("build"):
        grid, mask, table = _build_instance(settings, kernel, h)
        data = _data_field(grid, mask, settings["data"])
        rhs = _rhs_field(grid, settings)
        problem = DirichletProblem(mask, rhs, data, Linear(kernel))
    with clock.stage("solve"):
        u, rep = solve_linear(problem, tol=float(settings.get("tol", 1e-8)),
                              table=table)
    with clock.stage("measure"):
        ray = settings.get("ray")
        if ray is None:
            ray = getattr(mask.shape, "e", None)
        if ray is None:
            raise ValueError("config must give a ray for this domain shape")
        fit = growth_exponent(u, mask, ray, kernel.order,
                              t_max=float(settings.get("t_max", 0.9)))
        asserted = ("gamma_slack" in settings
                    or settings["domain"].get("name") == "cone")
        slack = float(settings.get("gamma_slack", 0.1))
        ok = math.isfinite(fit.exponent)
        if asserted:
            ok = ok and fit.gamma >= -slack
        report = {
            "fit": fit.to_dict(),
            "spacing": h,
            "asserted": asserted,
            "gamma_slack": slack if asserted else None,
        }
    return report, ok, {"solution.csv": _field_writer(mask, u)}


def _run_replay(settings, clock, jobs):
    kernel = kernel_from_config(settings["kernel"])
    h = float(settings["grid_ladder"][-1])
    with clock.stage("build"):
        grid, mask, table = _build_instance(settings, kernel, h)
        data = _data_field(grid, mask, settings["data"])
        rhs = _rhs_field(grid, settings)
        problem = DirichletProblem(mask, rhs, data, Linear(kernel))
    with clock.stage("solve"):
        u1, rep = solve_linear(problem, tol=float(settings.get("tol", 1e-8)),
                               table=table)
    with clock.stage("measure"):
        c1 = settings.get("c1_grid")
        c2 = settings.get("c2_grid")
        rr = replay_supersolution_argument(
            mask, u1, kernel.bounds, table,
            c1_grid=None if c1 is None else [float(v) for v in c1],
            c2_grid=None if c2 is None else [float(v) for v in c2],
            target=float(settings.get("target", 0.5)))
        expect = bool(settings.get("expect_found", True))
        report = {
            "replay": rr.to_dict(),
            "expect_found": expect,
            "spacing": h,
        }
    return report, rr.found == expect, {"solution.csv": _field_writer(mask, u1)}


_RUNNERS = {
    "solve": _run_solve,
    "pucci-solve": _run_solve,
    "verify-barrier": _run_verify_barrier,
    "bhp": _run_bhp,
    "holder": _run_bhp,
    "half-harnack": _run_half_harnack,
    "growth": _run_growth,
    "replay-thm12": _run_replay,
}


# ---------------------------------------------------------------------------
# runner orchestration

def run(config: ExperimentConfig, out_dir, jobs: int = 1):
    """Execute one validated config; returns (exit code, manifest).

    All output files land in out_dir at the end of the run (single
    writer); the manifest is written even when a stage fails, naming the
    failing stage.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    clock = _StageClock()
    manifest = RunManifest(command=config.command, config_hash=config.digest,
                           created=_now())
    try:
        runner = _RUNNERS[config.command]
        report, ok, fields = runner(config.settings, clock, max(1, int(jobs)))
        with clock.stage("write"):
            body = _plain({"command": config.command,
                           "config": config.settings,
                           "config_hash": config.digest,
                           "ok": bool(ok), **report})
            (out / "report.json").write_text(
                json.dumps(body, sort_keys=True, indent=2, allow_nan=False)
                + "\n")
            manifest.outputs.append("report.json")
            for name, writer in sorted(fields.items()):
                writer(out / name)
                manifest.outputs.append(name)
        manifest.exit_code = 0 if ok else 1
    except Exception as exc:  # manifest still records the failure
        manifest.failed_stage = clock.current or "run"
        manifest.error = f"{type(exc).__name__}: {exc}"
        manifest.exit_code = 1
    manifest.durations = clock.durations
    manifest.finished = _now()
    manifest.outputs.append("manifest.json")
    manifest.write(out / "manifest.json")
    return manifest.exit_code, manifest


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="nlharnack",
        description="Run one experiment config and write a reproducible "
                    "report, CSV fields, and a manifest.")
    ap.add_argument("--config", required=True, help="path to a JSON config")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--strict", action="store_true",
                    help="reject unknown keys and configs that do not "
                         "round-trip (duplicate keys, non-finite numbers)")
    ap.add_argument("--jobs", type=int, default=1,
                    help="worker threads for grid-ladder members")
    ns = ap.parse_args(argv)
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        config = parse_config(ns.config, strict=ns.strict)
    except (ConfigError, OSError) as exc:
        violations = getattr(exc, "violations", [str(exc)])
        for v in violations:
            print(f"config error: {v}", file=sys.stderr)
        try:
            digest = hashlib.sha256(Path(ns.config).read_bytes()).hexdigest()
        except OSError:
            digest = ""
        manifest = RunManifest(command="", config_hash=digest,
                               created=_now(), finished=_now(),
                               failed_stage="parse",
                               error="; ".join(violations), exit_code=2)
        manifest.write(out / "manifest.json")
        return 2
    code, manifest = run(config, out, jobs=ns.jobs)
    status = "ok" if code == 0 else f"FAIL ({manifest.error or 'assertion'})"
    print(f"{config.command}: {status}; outputs in {out}")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
