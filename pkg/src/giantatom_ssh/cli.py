"""Reproducible experiment driver.

One JSON config describes one run: model variant, lattice, coupling, task,
and task options.  Every run writes its data tables as CSV (17 significant
digits, a config-checksum comment line up top) followed by a manifest.json
capturing the resolved config and the checksums of everything produced.
Reruns of the same config are byte-identical except for manifest timing.

Subcommands: spectrum, boundstates, zeromode, ipr-heatmap, beta-profile,
winding, lyapunov, sweep, figure.  Exit codes: 0 ok, 2 bad config,
3 numerical failure, 4 precondition violation.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytic_bound import (
    bound_profile,
    make_context,
    state_fidelity,
    wrap_error_estimate,
    zero_mode_profile,
)
from .dynamics import lyapunov
from .errors import ConfigError, GiantAtomError, NumericalError, PreconditionError
from .localization import beta_profile, ipr, reference_lines
from .model import (
    Boundary,
    CouplingConfig,
    Emitter,
    LatticeParams,
    LegMode,
    Variant,
    assemble,
)
from .spectral import (
    StateClass,
    classify_states,
    eigendecompose,
    spectrum_rows,
    winding_number,
)

log = logging.getLogger("giantatom_ssh")

SCHEMA = "giantatom-ssh/1"
TASKS = (
    "spectrum",
    "boundstates",
    "zeromode",
    "ipr-heatmap",
    "beta-profile",
    "winding",
    "lyapunov",
    "sweep",
)
ENV_THREADS = "GIANTATOM_SSH_THREADS"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    task: str
    lattice: LatticeParams
    coupling: CouplingConfig
    variant: Variant = Variant.NONRECIPROCAL
    boundary: Boundary = Boundary.PBC
    options: dict = field(default_factory=dict)
    out_dir: str = "runs/out"
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "task": self.task,
            "variant": self.variant.value,
            "boundary": self.boundary.value,
            "lattice": {
                "L": self.lattice.L,
                "t1": self.lattice.t1,
                "t2": self.lattice.t2,
                "gamma": self.lattice.gamma,
                "delta": self.lattice.delta,
            },
            "coupling": {
                "emitter": self.coupling.emitter.value,
                "mode": self.coupling.mode.value,
                "n": self.coupling.n,
                "m": self.coupling.m,
                "g_n": self.coupling.g_n,
                "g_m": self.coupling.g_m,
            },
            "options": dict(self.options),
            "out_dir": self.out_dir,
            "seed": self.seed,
        }

    def checksum(self) -> str:
        # out_dir is where results land, not what they are; relocated
        # reruns of one config must hash (and byte-compare) the same
        doc = self.to_dict()
        del doc["out_dir"]
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _pick(doc: dict, key: str, expected, where: str):
    if key not in doc:
        raise ConfigError(f"missing field '{where}{key}'")
    val = doc[key]
    if expected is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, expected):
        raise ConfigError(
            f"field '{where}{key}' must be {getattr(expected, '__name__', expected)}, got {val!r}"
        )
    return val


def _enum_of(cls, raw, where: str):
    try:
        return cls(raw)
    except ValueError:
        allowed = ", ".join(e.value for e in cls)
        raise ConfigError(f"field '{where}' must be one of: {allowed}; got {raw!r}") from None


def _reject_unknown(doc: dict, allowed, where: str) -> None:
    # typo'd --set paths would otherwise fall through and silently run defaults
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise ConfigError(f"unknown field '{where}{extra[0]}'")


def config_from_dict(doc: dict) -> RunConfig:
    """Parse and validate a config document, naming the offending field."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise ConfigError(f"field 'schema' must be '{SCHEMA}', got {doc.get('schema')!r}")
    _reject_unknown(
        doc,
        ("schema", "task", "lattice", "coupling", "variant", "boundary", "options", "out_dir", "seed"),
        "",
    )
    task = _pick(doc, "task", str, "")
    if task not in TASKS:
        raise ConfigError(f"field 'task' must be one of {TASKS}, got {task!r}")
    lat = _pick(doc, "lattice", dict, "")
    _reject_unknown(lat, ("L", "t1", "t2", "gamma", "delta"), "lattice.")
    lattice = LatticeParams(
        L=_pick(lat, "L", int, "lattice."),
        t1=_pick(lat, "t1", float, "lattice."),
        t2=_pick(lat, "t2", float, "lattice."),
        gamma=_pick(lat, "gamma", float, "lattice."),
        delta=_pick(lat, "delta", float, "lattice."),
    )
    cpl = _pick(doc, "coupling", dict, "")
    _reject_unknown(cpl, ("emitter", "mode", "n", "m", "g_n", "g_m"), "coupling.")
    coupling = CouplingConfig(
        emitter=_enum_of(Emitter, _pick(cpl, "emitter", str, "coupling."), "coupling.emitter"),
        mode=_enum_of(LegMode, _pick(cpl, "mode", str, "coupling."), "coupling.mode"),
        n=_pick(cpl, "n", int, "coupling."),
        m=_pick(cpl, "m", int, "coupling."),
        g_n=_pick(cpl, "g_n", float, "coupling."),
        g_m=_pick(cpl, "g_m", float, "coupling."),
    )
    options = doc.get("options", {})
    if not isinstance(options, dict):
        raise ConfigError("field 'options' must be an object")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("field 'seed' must be an integer")
    return RunConfig(
        task=task,
        lattice=lattice,
        coupling=coupling,
        variant=_enum_of(Variant, _pick(doc, "variant", str, ""), "variant"),
        boundary=_enum_of(Boundary, _pick(doc, "boundary", str, ""), "boundary"),
        options=options,
        out_dir=_pick(doc, "out_dir", str, ""),
        seed=seed,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def apply_overrides(doc: dict, pairs: list) -> dict:
    """Apply --set key=value overrides to a config document (dotted paths)."""
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value
    return doc


def default_config(task: str) -> dict:
    """Baseline document: the standard ring with an adjacent-leg emitter."""
    return {
        "schema": SCHEMA,
        "task": task,
        "variant": Variant.NONRECIPROCAL.value,
        "boundary": Boundary.PBC.value,
        "lattice": {"L": 50, "t1": 0.2, "t2": 1.0, "gamma": 0.5, "delta": 0.0},
        "coupling": {"emitter": "giant", "mode": "AB", "n": 25, "m": 26, "g_n": 1.0, "g_m": 1.0},
        "options": {},
        "out_dir": f"runs/{task}",
        "seed": 0,
    }


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path: Path, columns, rows, config_sha: str, comments=()) -> Path:
    lines = [f"# config_sha256={config_sha}"]
    lines.extend(f"# {c}" for c in comments)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


@dataclass
class TaskResult:
    files: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    failure: str | None = None


def write_manifest(outdir: Path, config_doc: dict, config_sha: str,
                   result: TaskResult, wall_time: float) -> dict:
    manifest = {
        "schema": SCHEMA,
        "tool_version": __version__,
        "config": config_doc,
        "config_sha256": config_sha,
        "wall_time_s": wall_time,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "notes": list(result.notes),
        "failure": result.failure,
        "files": [
            {"name": p.name, "sha256": _sha256_file(p), "bytes": p.stat().st_size}
            for p in result.files
        ],
    }
    # all data files are on disk; now publish the manifest atomically
    fd, tmp = tempfile.mkstemp(dir=outdir, prefix=".manifest-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, outdir / "manifest.json")
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return manifest


# ---------------------------------------------------------------------------
# task handlers
# ---------------------------------------------------------------------------

def _spectrum_pieces(cfg: RunConfig):
    H = assemble(cfg.lattice, cfg.coupling, cfg.boundary, cfg.variant)
    spec = eigendecompose(H)
    report = classify_states(spec, cfg.lattice)
    return H, spec, report


def _task_spectrum(cfg: RunConfig, outdir: Path, threads: int) -> TaskResult:
    _, spec, report = _spectrum_pieces(cfg)
    rep = ipr(spec, cfg.lattice.L)
    rows = spectrum_rows(spec, report, rep.per_state)
    res = TaskResult()
    res.files.append(write_csv(outdir / "spectrum.csv",
                               ("index", "re_E", "im_E", "class", "ipr"),
                               rows, cfg.checksum()))
    res.notes.append(f"gap={report.count(StateClass.GAP_MODE)} "
                     f"upper={report.count(StateClass.UPPER_BOUND)} "
                     f"lower={report.count(StateClass.LOWER_BOUND)}")
    return res


def _numeric_profile_rows(vec: np.ndarray):
    return [(i + 1, float(z.real), float(z.imag), float(abs(z) ** 2)) for i, z in enumerate(vec)]


def _analytic_for_state(cfg: RunConfig, E: complex):
    """Closed-form profile for a real out-of-band energy, or None."""
    g = cfg.coupling.g_n
    if cfg.coupling.g_n != cfg.coupling.g_m:
        return None, "per-leg couplings differ; no closed form"
    try:
        ctx = make_context(E, cfg.lattice, g)
    except PreconditionError as exc:
        return None, str(exc)
    wrap = wrap_error_estimate(ctx)
    prof = bound_profile(ctx, cfg.coupling)
    note = f"wrap_error={wrap:.3e}"
    return prof, note


def _task_boundstates(cfg: RunConfig, outdir: Path, threads: int) -> TaskResult:
    if cfg.coupling.emitter == Emitter.NO_ATOM:
        raise ConfigError("boundstates task needs an emitter (coupling.emitter)")
    _, spec, report = _spectrum_pieces(cfg)
    res = TaskResult()
    summary = []
    for q in range(spec.dim):
        cls = report.labels[q]
        if cls == StateClass.BULK:
            continue
        E = spec.eigenvalues[q]
        vec = spec.right[:, q]
        prof, note = _analytic_for_state(cfg, E)
        fid = float("nan")
        if prof is not None:
            fid = state_fidelity(prof.to_vector(include_atom=cfg.coupling.n_atoms == 1), vec)
        summary.append((q, E.real, E.imag, cls.value, fid))
        res.files.append(write_csv(outdir / f"profile_state{q}_numeric.csv",
                                   ("N", "re_amp", "im_amp", "abs2"),
                                   _numeric_profile_rows(vec), cfg.checksum()))
        if prof is not None:
            res.files.append(write_csv(outdir / f"profile_state{q}_analytic.csv",
                                       ("N", "re_amp", "im_amp", "abs2"),
                                       prof.rows(), cfg.checksum(),
                                       comments=(note,)))
        else:
            res.notes.append(f"state {q}: {note}")
    res.files.insert(0, write_csv(outdir / "boundstates.csv",
                                  ("index", "re_E", "im_E", "class", "fidelity"),
                                  summary, cfg.checksum()))
    return res


def _task_zeromode(cfg: RunConfig, outdir: Path, threads: int) -> TaskResult:
    if cfg.coupling.emitter == Emitter.NO_ATOM:
        raise ConfigError("zeromode task needs an emitter (coupling.emitter)")
    res = TaskResult()
    columns = ("N", "re_analytic", "im_analytic", "abs2_analytic",
               "re_numeric", "im_numeric", "abs2_numeric")
    lat = cfg.lattice
    in_window = abs(lat.t1) + abs(lat.gamma) < abs(lat.t2)
    # near-zero gap modes on opposite legs only exist inside the window;
    # same-leg coupling pins one at E = 0 for every t1
    if cfg.coupling.mode == LegMode.AB and not in_window:
        res.files.append(write_csv(outdir / "zeromode.csv", columns, [], cfg.checksum()))
        res.failure = "no gap mode found"
        return res
    _, spec, report = _spectrum_pieces(cfg)
    gaps = report.indices(StateClass.GAP_MODE)
    if not gaps:
        res.files.append(write_csv(outdir / "zeromode.csv", columns, [], cfg.checksum()))
        res.failure = "no gap mode found"
        return res
    q = min(gaps, key=lambda i: abs(spec.eigenvalues[i]))
    vec = spec.right[:, q]
    try:
        prof = zero_mode_profile(cfg.lattice, cfg.coupling)
        ana = prof.to_vector(include_atom=cfg.coupling.n_atoms == 1)
        fid = state_fidelity(ana, vec)
        res.notes.append(f"fidelity={fid:.6f}")
    except PreconditionError as exc:
        ana = np.full(vec.shape, np.nan, dtype=complex)
        res.notes.append(f"analytic profile unavailable: {exc}")
    rows = [
        (i + 1, a.real, a.imag, abs(a) ** 2, z.real, z.imag, abs(z) ** 2)
        for i, (a, z) in enumerate(zip(ana, vec))
    ]
    res.files.append(write_csv(outdir / "zeromode.csv", columns, rows, cfg.checksum(),
                               comments=(f"E_numeric={spec.eigenvalues[q]:.17g}",)))
    return res


def _heatmap_grid(options: dict):
    g_min = float(options.get("g_min", 0.0))
    g_max = float(options.get("g_max", 13.0))
    steps = int(options.get("g_steps", 14))
    if steps < 2 or g_max <= g_min:
        raise ConfigError("options.g_min/g_max/g_steps do not form a grid")
    return np.linspace(g_min, g_max, steps)


def _task_ipr_heatmap(cfg: RunConfig, outdir: Path, threads: int) -> TaskResult:
    grid = _heatmap_grid(cfg.options)
    jobs = [(gm, gn) for gm in grid for gn in grid]

    def one(args):
        gm, gn = args
        coupling = dataclasses.replace(cfg.coupling, g_m=float(gm), g_n=float(gn))
        H = assemble(cfg.lattice, coupling, cfg.boundary, cfg.variant)
        spec = eigendecompose(H)
        return ipr(spec, cfg.lattice.L).mean

    means = _fan_out(one, jobs, threads)
    rows = [(gm, gn, mean) for (gm, gn), mean in zip(jobs, means)]
    res = TaskResult()
    res.files.append(write_csv(outdir / "ipr_heatmap.csv",
                               ("g_m", "g_n", "ipr_mean"), rows, cfg.checksum()))
    return res


def _task_beta_profile(cfg: RunConfig, outdir: Path, threads: int) -> TaskResult:
    _, spec, report = _spectrum_pieces(cfg)
    only = cfg.options.get("only", "bulk")
    if only not in ("bulk", "all"):
        raise ConfigError("options.only must be 'bulk' or 'all'")
    rows = beta_profile(spec, cfg.lattice, report,
                        only=StateClass.BULK if only == "bulk" else None)
    refs = reference_lines(cfg.lattice)
    res = TaskResult()
    res.files.append(write_csv(
        outdir / "beta_profile.csv",
        ("q", "re_E", "im_E", "abs_beta1", "abs_beta2", "class"),
        rows, cfg.checksum(),
        comments=tuple(f"ref_{k}={v:.17g}" for k, v in refs.items()),
    ))
    return res


def _task_winding(cfg: RunConfig, outdir: Path, threads: int) -> TaskResult:
    Nk = int(cfg.options.get("Nk", 2048))
    wres = winding_number(cfg.lattice, Nk)
    lat = cfg.lattice
    rows = [(lat.t1, lat.gamma, lat.t2, wres.Nk, wres.raw, wres.rounded)]
    res = TaskResult()
    res.files.append(write_csv(outdir / "winding.csv",
                               ("t1", "gamma", "t2", "Nk", "raw", "rounded"),
                               rows, cfg.checksum()))
    return res


def _task_lyapunov(cfg: RunConfig, outdir: Path, threads: int) -> TaskResult:
    opts = cfg.options
    t_obs = float(opts.get("t_obs", 50.0))
    v_min = float(opts.get("v_min", -2.0))
    v_max = float(opts.get("v_max", 2.0))
    v_points = int(opts.get("v_points", 81))
    channel = str(opts.get("channel", "A"))
    tag = str(opts.get("model_tag", cfg.variant.value))
    H = assemble(cfg.lattice, cfg.coupling, cfg.boundary, cfg.variant)
    curve = lyapunov(H, cfg.lattice, np.linspace(v_min, v_max, v_points),
                     t_obs, channel=channel, model_tag=tag,
                     n_chunks=int(opts.get("n_chunks", 50)))
    rows = [(v, lam, curve.channel, curve.model_tag)
            for v, lam in zip(curve.v_grid, curve.lam)]
    res = TaskResult()
    if curve.floored:
        res.notes.append(f"floored_points={len(curve.floored)}")
    res.files.append(write_csv(outdir / "lyapunov.csv",
                               ("v", "lambda", "channel", "model_tag"),
                               rows, cfg.checksum()))
    return res


_SWEEP_KEYS = {
    "lattice.t1", "lattice.t2", "lattice.gamma", "lattice.delta",
    "coupling.g_n", "coupling.g_m",
}


def _task_sweep(cfg: RunConfig, outdir: Path, threads: int) -> TaskResult:
    key = cfg.options.get("key")
    values = cfg.options.get("values")
    if key not in _SWEEP_KEYS:
        raise ConfigError(f"options.key must be one of {sorted(_SWEEP_KEYS)}, got {key!r}")
    if not isinstance(values, list) or not values:
        raise ConfigError("options.values must be a non-empty list of numbers")
    section, fieldname = key.split(".")

    def one(value):
        if section == "lattice":
            lattice = dataclasses.replace(cfg.lattice, **{fieldname: float(value)})
            coupling = cfg.coupling
        else:
            lattice = cfg.lattice
            coupling = dataclasses.replace(cfg.coupling, **{fieldname: float(value)})
        H = assemble(lattice, coupling, cfg.boundary, cfg.variant)
        spec = eigendecompose(H)
        report = classify_states(spec, lattice)
        rep = ipr(spec, lattice.L)
        ev = spec.eigenvalues
        return (
            float(value),
            float(np.min(np.abs(ev))),
            float(np.max(np.abs(ev.imag))),
            report.count(StateClass.GAP_MODE),
            report.count(StateClass.UPPER_BOUND),
            report.count(StateClass.LOWER_BOUND),
            rep.mean,
        )

    rows = _fan_out(one, values, threads)
    res = TaskResult()
    res.files.append(write_csv(
        outdir / "sweep.csv",
        (key, "min_abs_E", "max_abs_im_E", "n_gap", "n_upper", "n_lower", "ipr_mean"),
        rows, cfg.checksum(),
    ))
    return res


def _fan_out(fn, jobs, threads: int) -> list:
    """Run jobs on a worker pool; results returned in submission order."""
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


_HANDLERS = {
    "spectrum": _task_spectrum,
    "boundstates": _task_boundstates,
    "zeromode": _task_zeromode,
    "ipr-heatmap": _task_ipr_heatmap,
    "beta-profile": _task_beta_profile,
    "winding": _task_winding,
    "lyapunov": _task_lyapunov,
    "sweep": _task_sweep,
}


def run(cfg: RunConfig, threads: int = 1) -> dict:
    """Execute one config; returns the manifest dict.

    Data files are written first, the manifest last (atomically).  A task
    that ends in a precondition failure still writes its artifacts and
    manifest before the error propagates.
    """
    outdir = Path(cfg.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    result = _HANDLERS[cfg.task](cfg, outdir, threads)
    manifest = write_manifest(outdir, cfg.to_dict(), cfg.checksum(),
                              result, time.perf_counter() - t0)
    if result.failure is not None:
        raise PreconditionError(result.failure)
    return manifest


# ---------------------------------------------------------------------------
# figure presets
# ---------------------------------------------------------------------------

def _preset_lattice(t1: float, L: int = 50, gamma: float = 0.5, delta: float = 0.0) -> LatticeParams:
    return LatticeParams(L=L, t1=t1, t2=1.0, gamma=gamma, delta=delta)


def _figure_fig2(outdir: Path, threads: int) -> TaskResult:
    """Spectral sweeps vs t1, adjacent legs: Re, Im, |E| for both leg modes."""
    res = TaskResult()
    sha_cfg = RunConfig("spectrum", _preset_lattice(0.2), CouplingConfig.equal_g(
        Emitter.GIANT_ATOM, LegMode.AB, 25, 26, 1.0), out_dir=str(outdir))
    sha = sha_cfg.checksum()
    t1_grid = np.linspace(-2.0, 2.0, 201)
    for mode in (LegMode.AB, LegMode.AA):
        coupling = CouplingConfig.equal_g(Emitter.GIANT_ATOM, mode, 25, 26, 1.0)

        def one(t1):
            H = assemble(_preset_lattice(float(t1)), coupling)
            return eigendecompose(H).eigenvalues

        evs = _fan_out(one, list(t1_grid), threads)
        tables = {"reE": lambda E: E.real, "imE": lambda E: E.imag, "absE": abs}
        for tag, f in tables.items():
            rows = [(t1, q, float(f(E)))
                    for t1, ev in zip(t1_grid, evs) for q, E in enumerate(ev)]
            res.files.append(write_csv(outdir / f"fig2_{mode.value}_{tag}.csv",
                                       ("t1", "index", tag), rows, sha))
    return res


def _bound_state_pair(lattice: LatticeParams, coupling: CouplingConfig):
    """(zero-mode index, upper-bound index, spectrum) for one parameter set."""
    H = assemble(lattice, coupling)
    spec = eigendecompose(H)
    q_zero = int(np.argmin(np.abs(spec.eigenvalues)))
    q_upper = int(np.argmax(spec.eigenvalues.real))
    return q_zero, q_upper, spec


def _profile_files(res, outdir, stem, lattice, coupling, spec, q, sha, zero: bool):
    vec = spec.right[:, q]
    res.files.append(write_csv(outdir / f"{stem}_numeric.csv",
                               ("N", "re_amp", "im_amp", "abs2"),
                               _numeric_profile_rows(vec), sha))
    if zero:
        prof = zero_mode_profile(lattice, coupling)
    else:
        ctx = make_context(spec.eigenvalues[q].real, lattice, coupling.g_n)
        prof = bound_profile(ctx, coupling)
    fid = state_fidelity(prof.to_vector(), vec)
    res.files.append(write_csv(outdir / f"{stem}_analytic.csv",
                               ("N", "re_amp", "im_amp", "abs2"),
                               prof.rows(), sha, comments=(f"fidelity={fid:.6f}",)))


def _figure_profiles(outdir: Path, mode: LegMode, t1_values, tags) -> TaskResult:
    res = TaskResult()
    for t1, tag in zip(t1_values, tags):
        lattice = _preset_lattice(t1)
        coupling = CouplingConfig.equal_g(Emitter.GIANT_ATOM, mode, 20, 40, 1.0)
        sha = RunConfig("boundstates", lattice, coupling, out_dir=str(outdir)).checksum()
        q_zero, q_upper, spec = _bound_state_pair(lattice, coupling)
        name = "fig3" if mode == LegMode.AB else "fig4"
        _profile_files(res, outdir, f"{name}_{tag}_zero", lattice, coupling, spec, q_zero, sha, True)
        _profile_files(res, outdir, f"{name}_{tag}_upper", lattice, coupling, spec, q_upper, sha, False)
    return res


def _figure_fig5(outdir: Path, threads: int) -> TaskResult:
    res = TaskResult()
    lattice = _preset_lattice(0.2)
    for mode in (LegMode.AB, LegMode.AA):
        coupling = CouplingConfig.equal_g(Emitter.TWO_SMALL_ATOMS, mode, 20, 40, 1.0)
        sha = RunConfig("boundstates", lattice, coupling, out_dir=str(outdir)).checksum()
        H = assemble(lattice, coupling)
        spec = eigendecompose(H)
        nearest = np.argsort(np.abs(spec.eigenvalues))[:2]
        for j, q in enumerate(sorted(int(q) for q in nearest), start=1):
            res.files.append(write_csv(
                outdir / f"fig5_{mode.value}_mode{j}.csv",
                ("N", "re_amp", "im_amp", "abs2"),
                _numeric_profile_rows(spec.right[:, q]), sha,
                comments=(f"E={spec.eigenvalues[q]:.17g}",),
            ))
    return res


def _figure_fig6(outdir: Path, threads: int) -> TaskResult:
    lattice = LatticeParams(L=20, t1=0.2, t2=1.0, gamma=0.5)
    base = CouplingConfig.equal_g(Emitter.GIANT_ATOM, LegMode.AB, 10, 10, 0.0)
    cfg = RunConfig("ipr-heatmap", lattice, base, out_dir=str(outdir))
    res = _task_ipr_heatmap(cfg, outdir, threads)
    (outdir / "ipr_heatmap.csv").rename(outdir / "fig6_heatmap.csv")
    res.files[0] = outdir / "fig6_heatmap.csv"
    for gm, gn in ((0.0, 0.0), (1.0, 1.0), (13.0, 13.0), (13.0, 1.0)):
        coupling = dataclasses.replace(base, g_m=gm, g_n=gn)
        sha = RunConfig("beta-profile", lattice, coupling, out_dir=str(outdir)).checksum()
        spec = eigendecompose(assemble(lattice, coupling))
        rows = beta_profile(spec, lattice)
        refs = reference_lines(lattice)
        res.files.append(write_csv(
            outdir / f"fig6_beta_gm{gm:g}_gn{gn:g}.csv",
            ("q", "re_E", "im_E", "abs_beta1", "abs_beta2", "class"),
            rows, sha, comments=tuple(f"ref_{k}={v:.17g}" for k, v in refs.items()),
        ))
    return res


def _figure_fig7(outdir: Path, threads: int) -> TaskResult:
    lattice = LatticeParams(L=20, t1=0.2, t2=1.0, gamma=0.5)
    g_list = (0.25, 0.5, 1.0, 2.0, 4.0, 7.0, 13.0)
    res = TaskResult()
    sha = RunConfig("sweep", lattice,
                    CouplingConfig.equal_g(Emitter.GIANT_ATOM, LegMode.AB, 10, 10, 1.0),
                    out_dir=str(outdir)).checksum()

    def mean_for(emitter, g):
        coupling = CouplingConfig.equal_g(emitter, LegMode.AB, 10, 10, float(g))
        spec = eigendecompose(assemble(lattice, coupling))
        return ipr(spec, lattice.L).mean

    rows = [(g, mean_for(Emitter.GIANT_ATOM, g), mean_for(Emitter.TWO_SMALL_ATOMS, g))
            for g in g_list]
    res.files.append(write_csv(outdir / "fig7_ipr_vs_g.csv",
                               ("g", "ipr_giant", "ipr_two_small"), rows, sha))
    coupling = CouplingConfig.equal_g(Emitter.TWO_SMALL_ATOMS, LegMode.AB, 10, 10, 7.0)
    spec = eigendecompose(assemble(lattice, coupling))
    rows = beta_profile(spec, lattice)
    refs = reference_lines(lattice)
    res.files.append(write_csv(
        outdir / "fig7_beta_two_g7.csv",
        ("q", "re_E", "im_E", "abs_beta1", "abs_beta2", "class"),
        rows, sha, comments=tuple(f"ref_{k}={v:.17g}" for k, v in refs.items()),
    ))
    return res


def _figure_fig8(outdir: Path, threads: int) -> TaskResult:
    res = TaskResult()
    rows = []
    models = (
        ("model1", LatticeParams(L=401, t1=0.6, t2=1.0, gamma=1.0), Variant.NONRECIPROCAL),
        ("model2", LatticeParams(L=401, t1=0.6, t2=1.0, gamma=0.0, delta=1.0), Variant.GAIN_LOSS),
    )
    coupling = CouplingConfig.equal_g(Emitter.GIANT_ATOM, LegMode.AB, 1, 1, 1.0)
    sha = RunConfig("lyapunov", models[0][1], coupling, out_dir=str(outdir)).checksum()
    for tag, lattice, variant in models:
        H = assemble(lattice, coupling, Boundary.PBC, variant)
        curve = lyapunov(H, lattice, np.linspace(-2.0, 2.0, 81), 50.0,
                         channel="A", model_tag=tag)
        rows.extend((v, lam, curve.channel, tag)
                    for v, lam in zip(curve.v_grid, curve.lam))
    res.files.append(write_csv(outdir / "fig8_lyapunov.csv",
                               ("v", "lambda", "channel", "model_tag"), rows, sha))
    return res


_FIGURES = {
    "fig2": _figure_fig2,
    "fig3": lambda outdir, threads: _figure_profiles(outdir, LegMode.AB, (0.2, -0.2), ("pos", "neg")),
    "fig4": lambda outdir, threads: _figure_profiles(outdir, LegMode.AA, (0.2, 1.6), ("window", "trivial")),
    "fig5": _figure_fig5,
    "fig6": _figure_fig6,
    "fig7": _figure_fig7,
    "fig8": _figure_fig8,
}


def figure(name: str, out_dir: str = None, threads: int = 1) -> dict:
    """Regenerate the data behind one preset figure; returns the manifest."""
    if name not in _FIGURES:
        raise ConfigError(f"unknown figure {name!r}; choose from {sorted(_FIGURES)}")
    outdir = Path(out_dir if out_dir is not None else f"runs/{name}")
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    result = _FIGURES[name](outdir, threads)
    doc = {"schema": SCHEMA, "figure": name, "out_dir": str(outdir)}
    sha = hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()
    return write_manifest(outdir, doc, sha, result, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _resolve_threads(arg_threads) -> int:
    if arg_threads is not None:
        return max(1, int(arg_threads))
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{ENV_THREADS} must be an integer, got {env!r}") from None
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="giantatom-ssh",
        description="Spectra, bound states, localization, and dynamics of an "
                    "emitter coupled to a nonreciprocal dimerized ring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} task")
        _common_flags(p)
    pf = sub.add_parser("figure", help="regenerate the data behind a preset figure")
    pf.add_argument("name", choices=sorted(_FIGURES))
    _common_flags(pf)
    return parser


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output directory (overrides config out_dir)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field, e.g. lattice.t1=0.4")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads for sweeps (or ${ENV_THREADS})")


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        threads = _resolve_threads(args.threads)
        if args.command == "figure":
            manifest = figure(args.name, out_dir=args.out, threads=threads)
            log.info("figure %s: %d files in %s", args.name, len(manifest["files"]), args.out or f"runs/{args.name}")
            return 0
        doc = default_config(args.command)
        if args.config:
            try:
                with open(args.config) as fh:
                    doc = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {args.config} is not valid JSON: {exc}") from exc
        doc = apply_overrides(doc, args.set)
        doc["task"] = args.command
        if args.out:
            doc["out_dir"] = args.out
        cfg = config_from_dict(doc)
        manifest = run(cfg, threads=threads)
        log.info("%s: %d files in %s", cfg.task, len(manifest["files"]), cfg.out_dir)
        return 0
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return 3
    except PreconditionError as exc:
        log.error("precondition violation: %s", exc)
        return 4
    except GiantAtomError as exc:  # pragma: no cover - defensive
        log.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
