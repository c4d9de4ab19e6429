"""
Command-line front end: ``mqcdecay {simulate,analytic,compare,fit}``.

Every run reads one JSON configuration document (``fit`` can work from flags
alone) and writes tables as CSV and/or JSON plus optional static SVG plots
into an output directory.  ``manifest.json`` records the configuration hash,
tool version, timestamp, runtime and a SHA-256 of every data file.  The data
files themselves carry no timestamp, so repeating a run reproduces them byte
for byte.

Exit codes: 0 success, 2 configuration or input error, 3 resource cap
exceeded, 4 tolerance failure in ``compare``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence

import numpy as np

from . import __version__, ed, fermion, fitting
from .core import (
    ChainSpec,
    DimensionCapError,
    DipolarPowerLaw,
    ExplicitMatrix,
    InitialState,
    MAX_SPINS,
    NearestNeighbor,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_TOLERANCE = 4

SCHEMA_VERSION = 1
MOMENT_CAP = 2000
ANALYTIC_CAP = 100_000
FORMATS = ("csv", "json", "svg")


class ConfigError(ValueError):
    """Invalid configuration or input file; ``line`` points into the source when known."""

    def __init__(self, message: str, source: str = "", line: Optional[int] = None):
        self.source = source
        self.line = line
        where = source + (f":{line}" if line else "")
        super().__init__(f"{where}: {message}" if where else message)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    chain: ChainSpec
    initial_state: InitialState = InitialState.THERMAL
    engine: str = "ed"
    tau_grid: tuple[float, ...] = (0.0,)
    t_grid: tuple[float, ...] = ()
    K: Optional[int] = None
    pulse: Optional[ed.PulseCycleParams] = None
    out_dir: Optional[str] = None
    formats: tuple[str, ...] = ("csv", "json")
    seed: int = 0
    moments: Optional[bool] = None
    compare_rtol: float = 1e-6
    compare_coupling_b: Optional[float] = None
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def digest(self) -> str:
        return hashlib.sha256(_canonical(self.raw).encode()).hexdigest()


_STATE_NAMES = {
    "thermal": InitialState.THERMAL,
    "end_polarized": InitialState.END_POLARIZED,
    "transverse_x": InitialState.TRANSVERSE_X,
    "xx": InitialState.XX,
}


def _canonical(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _line_of(text: str, key: str) -> Optional[int]:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _grid(value: Any, name: str) -> tuple[float, ...]:
    if isinstance(value, dict):
        try:
            start, stop, num = float(value["start"]), float(value["stop"]), int(value["num"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{name} needs start, stop and num") from exc
        if num < 1:
            raise ValueError(f"{name}.num must be positive")
        vals = np.linspace(start, stop, num)
    elif isinstance(value, (list, tuple)):
        vals = np.asarray([float(v) for v in value], dtype=float)
    else:
        raise ValueError(f"{name} must be a list or a {{start, stop, num}} object")
    if np.any(vals < 0) or np.any(np.diff(vals) < 0):
        raise ValueError(f"{name} must be nonnegative and ascending")
    return tuple(float(v) for v in vals)


def _topology(value: Any):
    if value in (None, "nearest_neighbor"):
        return NearestNeighbor()
    if value == "dipolar_power_law":
        return DipolarPowerLaw()
    if isinstance(value, dict):
        kind = value.get("kind")
        if kind == "nearest_neighbor":
            return NearestNeighbor()
        if kind == "dipolar_power_law":
            return DipolarPowerLaw(float(value.get("r0", 1.0)))
        if kind == "explicit":
            return ExplicitMatrix.from_array(value["couplings"])
    raise ValueError(f"unknown topology {value!r}")


def parse_config(doc: dict, text: str = "", source: str = "<config>") -> ExperimentConfig:
    """Validate a configuration document.

    Errors raise :class:`ConfigError` anchored at the line of the offending
    key when the raw ``text`` is available.
    """

    def fail(key: str, msg: str):
        raise ConfigError(msg, source, _line_of(text, key))

    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object", source, 1)
    known = {"schema", "chain", "initial_state", "engine", "tau_grid", "t_grid", "protocol",
             "outputs", "seed", "analytic", "compare"}
    for key in doc:
        if key not in known:
            fail(key, f"unknown key {key!r}")
    ch = doc.get("chain")
    if not isinstance(ch, dict):
        fail("chain", "missing or invalid 'chain' object")
    try:
        chain = ChainSpec(int(ch["n_spins"]), float(ch["coupling_b"]), _topology(ch.get("topology")))
    except KeyError as exc:
        fail("chain", f"chain is missing {exc.args[0]!r}")
    except (TypeError, ValueError) as exc:
        fail("chain", f"invalid chain: {exc}")

    state_name = doc.get("initial_state", "thermal")
    if state_name not in _STATE_NAMES:
        fail("initial_state", f"initial_state must be one of {sorted(_STATE_NAMES)}")
    state = _STATE_NAMES[state_name]
    engine = doc.get("engine", "ed")
    if engine not in ("ed", "fermion", "both"):
        fail("engine", "engine must be 'ed', 'fermion' or 'both'")
    if engine in ("fermion", "both") and (state is not InitialState.THERMAL
                                          or not isinstance(chain.topology, NearestNeighbor)):
        fail("engine", "the fermion engine needs a thermal state on a nearest-neighbour chain")

    grids = {}
    for key, default in (("tau_grid", [0.0]), ("t_grid", [])):
        try:
            grids[key] = _grid(doc.get(key, default), key)
        except ValueError as exc:
            fail(key, str(exc))
    if not grids["tau_grid"]:
        fail("tau_grid", "tau_grid must not be empty")

    proto = doc.get("protocol", {}) or {}
    if not isinstance(proto, dict):
        fail("protocol", "protocol must be an object")
    K = proto.get("K")
    if K is not None and (not isinstance(K, int) or K < 1):
        fail("K", "K must be a positive integer")
    pulse = None
    if proto.get("pulse") is not None:
        p = proto["pulse"]
        try:
            pulse = ed.PulseCycleParams(
                delta_t=float(p["delta_t"]),
                pulse_width=float(p.get("pulse_width", 0.0)),
                n_loops=int(p.get("n_loops", 1)),
                variant=p.get("variant", "P8"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            fail("pulse", f"invalid pulse cycle: {exc}")

    outs = doc.get("outputs", {}) or {}
    formats = tuple(outs.get("formats", ["csv", "json"]))
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        fail("formats", f"unsupported formats {bad}")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        fail("seed", "seed must be an integer")
    analytic = doc.get("analytic", {}) or {}
    cmp_ = doc.get("compare", {}) or {}
    cb = cmp_.get("fermion_coupling_b")
    return ExperimentConfig(
        chain=chain,
        initial_state=state,
        engine=engine,
        tau_grid=grids["tau_grid"],
        t_grid=grids["t_grid"],
        K=K,
        pulse=pulse,
        out_dir=outs.get("directory"),
        formats=formats,
        seed=seed,
        moments=analytic.get("moments"),
        compare_rtol=float(cmp_.get("rtol", 1e-6)),
        compare_coupling_b=None if cb is None else float(cb),
        raw=doc,
    )


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc.strerror}", str(path)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, str(path), exc.lineno) from exc
    return parse_config(doc, text, str(path))


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list[Any]]


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    return str(v)


def _json_value(v: Any) -> Any:
    if isinstance(v, (np.floating, float)):
        return None if math.isnan(v) else float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def table_to_csv(table: Table) -> str:
    buf = io.StringIO()
    buf.write(f"# mqcdecay {table.name} schema {SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def table_to_json(table: Table, cfg_digest: Optional[str]) -> str:
    doc = {
        "schema": f"mqcdecay.{table.name}/{SCHEMA_VERSION}",
        "tool_version": __version__,
        "config_sha256": cfg_digest,
        "columns": table.columns,
        "rows": [[_json_value(v) for v in row] for row in table.rows],
    }
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def read_table_csv(path: str | os.PathLike) -> Table:
    """Parse a CSV written by this tool (``# ... schema N`` line, header, rows)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read: {exc.strerror}", str(path)) from exc
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# mqcdecay "):
        raise ConfigError("missing schema line", str(path), 1)
    m = re.match(r"# mqcdecay (\S+) schema (\d+)$", lines[0])
    if not m or int(m.group(2)) != SCHEMA_VERSION:
        raise ConfigError("unsupported schema line", str(path), 1)
    reader = csv.reader(lines[1:])
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError("missing header row", str(path), 2) from None
    rows = []
    for k, row in enumerate(reader, start=3):
        if len(row) != len(header):
            raise ConfigError(f"expected {len(header)} columns, found {len(row)}", str(path), k)
        rows.append(row)
    return Table(m.group(1), header, rows)


def svg_plot(series: Sequence[tuple[str, Sequence[float], Sequence[float]]], *, title: str,
             xlabel: str, ylabel: str, width: int = 640, height: int = 400) -> str:
    """Minimal static line plot."""
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"]
    pts = [(np.asarray(x, float), np.asarray(y, float)) for _, x, y in series]
    xs = np.concatenate([p[0] for p in pts]) if pts else np.zeros(1)
    ys = np.concatenate([p[1] for p in pts]) if pts else np.zeros(1)
    good = np.isfinite(xs) & np.isfinite(ys)
    xs, ys = (xs[good], ys[good]) if good.any() else (np.zeros(1), np.zeros(1))
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    ml, mr, mt, mb = 70, 20, 30, 50
    pw, ph = width - ml - mr, height - mt - mb

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{_esc(title)}</text>',
        f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{_esc(xlabel)}</text>',
        f'<text x="15" y="{mt + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 15 {mt + ph / 2:.1f})">{_esc(ylabel)}</text>',
        f'<text x="{ml}" y="{mt + ph + 15}" text-anchor="middle">{x0:.3g}</text>',
        f'<text x="{ml + pw}" y="{mt + ph + 15}" text-anchor="middle">{x1:.3g}</text>',
        f'<text x="{ml - 5}" y="{mt + ph}" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{ml - 5}" y="{mt + 8}" text-anchor="end">{y1:.3g}</text>',
    ]
    for k, ((label, _, _), (x, y)) in enumerate(zip(series, pts)):
        c = colors[k % len(colors)]
        ok = np.isfinite(x) & np.isfinite(y)
        path = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[ok], y[ok]))
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{path}"/>')
        out.append(f'<text x="{ml + pw - 5}" y="{mt + 14 + 13 * k}" text-anchor="end" fill="{c}">{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_outputs(out_dir: Path, tables: Sequence[Table], plots: dict[str, str], formats: Sequence[str],
                  cfg: Optional[ExperimentConfig], command: str, started: float,
                  extra: Optional[dict] = None) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest if cfg is not None else None
    files: dict[str, str] = {}
    for t in tables:
        if "csv" in formats:
            files[f"{t.name}.csv"] = table_to_csv(t)
        if "json" in formats:
            files[f"{t.name}.json"] = table_to_json(t, digest)
    if "svg" in formats:
        files.update({f"{k}.svg": v for k, v in plots.items()})
    checksums = {}
    for name, content in files.items():
        (out_dir / name).write_text(content, encoding="utf-8")
        checksums[name] = hashlib.sha256(content.encode()).hexdigest()
    manifest = {
        "tool": "mqcdecay",
        "tool_version": __version__,
        "command": command,
        "config_sha256": digest,
        "seed": cfg.seed if cfg is not None else None,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "runtime_s": round(time.perf_counter() - started, 3),
        "outputs": checksums,
    }
    if extra:
        manifest.update(extra)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    return manifest


def _pool_map(fn: Callable, items: Sequence, workers: int) -> list:
    # results come back in input order whatever the pool size
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _protocol_run(cfg: ExperimentConfig, tau: float) -> ed.ProtocolResult:
    K = cfg.K if cfg.K is not None else ed.default_K(cfg.initial_state, cfg.chain)
    params = ed.ProtocolParams(tau=tau, t_grid=cfg.t_grid, K=K)
    return ed.run_protocol(cfg.initial_state, cfg.chain, params, pulse=cfg.pulse)


def cmd_simulate(cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> tuple[int, dict]:
    """Run the MQC protocol by exact diagonalization for every tau."""
    started = time.perf_counter()
    if cfg.chain.n_spins > MAX_SPINS:
        raise DimensionCapError(f"exact diagonalization is capped at N <= {MAX_SPINS}")
    results = _pool_map(lambda tau: _protocol_run(cfg, tau), list(cfg.tau_grid), workers)
    rows = []
    for tau, res in zip(cfg.tau_grid, results):
        for it, t in enumerate(res.times):
            rows.append([tau, float(t), "total", float(res.total[it]), res.normalization])
            for j, m in enumerate(res.orders):
                rows.append([tau, float(t), str(m), float(res.intensities[it, j]), res.normalization])
    tables = [Table("curves", ["tau_s", "t_s", "sector", "value", "normalization"], rows)]
    plots = {}
    if "svg" in cfg.formats and len(cfg.t_grid) > 1:
        series = []
        for tau, res in list(zip(cfg.tau_grid, results))[:4]:
            series.append((f"total, tau={tau:.3g}s", res.times, res.total / res.normalization))
            if 0 in res.orders:
                series.append((f"ZQ, tau={tau:.3g}s", res.times, res.normalized(0)))
            if 2 in res.orders:
                series.append((f"DQ, tau={tau:.3g}s", res.times, res.normalized(2)))
        plots["curves"] = svg_plot(series, title="Normalized coherence decay", xlabel="t (s)", ylabel="S/S0")
    if len(cfg.tau_grid) > 1:
        amps = [r.spectra[0] for r in results] if cfg.t_grid and cfg.t_grid[0] == 0 else None
        if amps is not None and "svg" in cfg.formats:
            taus = np.asarray(cfg.tau_grid)
            plots["amplitudes"] = svg_plot(
                [(f"m={m}", taus, [s.normalized().get(m, np.nan) for s in amps]) for m in (0, 2)],
                title="MQC intensities at t = 0", xlabel="tau (s)", ylabel="I/I_total",
            )
    if cfg.engine == "both":
        t2, p2, _ = _analytic_tables(cfg, workers)
        tables.extend(t2)
        plots.update(p2)
    manifest = write_outputs(out_dir, tables, plots, cfg.formats, cfg, "simulate", started)
    return EXIT_OK, manifest


def _want_moments(cfg: ExperimentConfig) -> bool:
    n = cfg.chain.n_spins
    if cfg.moments is None:
        return 3 <= n <= MOMENT_CAP
    if cfg.moments and n > MOMENT_CAP:
        raise DimensionCapError(f"analytic moments are capped at N <= {MOMENT_CAP}")
    if cfg.moments and n < 3:
        raise ConfigError("analytic moments need N >= 3")
    return bool(cfg.moments)


ANALYTIC_COLUMNS = [
    "tau_s", "i0", "i2", "C",
    "m_zz_rad2_s2", "m_xx_rad2_s2",
    "m_zz_zq_rad2_s2", "m_zz_dq_rad2_s2", "m_xx_zq_rad2_s2", "m_xx_dq_rad2_s2",
    "m_zq_rad2_s2", "m_dq_rad2_s2", "m_total_rad2_s2",
]


def _analytic_tables(cfg: ExperimentConfig, workers: int):
    n = cfg.chain.n_spins
    if not isinstance(cfg.chain.topology, NearestNeighbor) or cfg.initial_state is not InitialState.THERMAL:
        raise ConfigError("the analytic model needs a thermal state on a nearest-neighbour chain")
    if n > ANALYTIC_CAP:
        raise DimensionCapError(f"analytic intensities are capped at N <= {ANALYTIC_CAP}")
    model = fermion.FermionModel(n, cfg.chain.coupling_b)
    taus = np.asarray(cfg.tau_grid)
    started = time.perf_counter()
    i0 = np.atleast_1d(fermion.i0(model, taus))
    i2 = np.atleast_1d(fermion.i2(model, taus))
    c = np.atleast_1d(fermion.asymptote_c(model, taus, verify=n <= MOMENT_CAP))
    moms = _pool_map(lambda tau: fermion.moments(model, tau), list(taus), workers) if _want_moments(cfg) else None
    rows = []
    for k, tau in enumerate(taus):
        row = [float(tau), float(i0[k]), float(i2[k]), float(c[k])]
        if moms is not None:
            m = moms[k]
            row += [m.m_zz, m.m_xx, m.m_zz_zq, m.m_zz_dq, m.m_xx_zq, m.m_xx_dq, m.m_zq, m.m_dq, m.total]
        else:
            row += [None] * 9
        rows.append(row)
    plots = {}
    if "svg" in cfg.formats and len(taus) > 1:
        plots["intensities"] = svg_plot([("I0", taus, i0), ("I2", taus, i2), ("C", taus, c)],
                                        title=f"Free-fermion intensities, N={n}", xlabel="tau (s)",
                                        ylabel="normalized")
        if moms is not None:
            def col(attr):
                return [np.nan if getattr(m, attr) is None else getattr(m, attr) for m in moms]

            plots["moments"] = svg_plot([("M ZQ", taus, col("m_zq")), ("M DQ", taus, col("m_dq")),
                                         ("M total", taus, col("total"))],
                                        title=f"Second moments, N={n}", xlabel="tau (s)", ylabel="rad^2/s^2")
    return [Table("analytic", ANALYTIC_COLUMNS, rows)], plots, time.perf_counter() - started


def cmd_analytic(cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> tuple[int, dict]:
    """Evaluate the free-fermion closed forms on the tau grid."""
    started = time.perf_counter()
    tables, plots, runtime = _analytic_tables(cfg, workers)
    manifest = write_outputs(out_dir, tables, plots, cfg.formats, cfg, "analytic", started,
                             {"analytic_runtime_s": round(runtime, 3), "n_spins": cfg.chain.n_spins})
    return EXIT_OK, manifest


def _rel_dev(a, b, floor: float = 1e-8) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.abs(a - b) / np.maximum(np.abs(b), floor)


def cmd_compare(cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> tuple[int, dict]:
    """Run both engines on the same tau grid and report relative deviations.

    Intensities compare the protocol's t = 0 spectrum with the closed forms.
    Sector moments compare ED double-commutator traces with the Majorana
    evaluation.  Deviations use ``|ed - fermion| / max(|fermion|, 1e-8)``.
    Off-selection-rule weight (orders other than 0, +-2) is reported as an
    absolute fraction against 1e-10.
    """
    started = time.perf_counter()
    chain = cfg.chain
    if chain.n_spins > MAX_SPINS:
        raise DimensionCapError(f"exact diagonalization is capped at N <= {MAX_SPINS}")
    if not isinstance(chain.topology, NearestNeighbor) or cfg.initial_state is not InitialState.THERMAL:
        raise ConfigError("compare needs a thermal state on a nearest-neighbour chain")
    b_f = cfg.compare_coupling_b if cfg.compare_coupling_b is not None else chain.coupling_b
    model = fermion.FermionModel(chain.n_spins, b_f)
    with_moments = chain.n_spins >= 3

    def one(tau: float) -> dict:
        K = cfg.K if cfg.K is not None else 4
        res = ed.run_protocol(InitialState.THERMAL, chain, ed.ProtocolParams(tau=tau, K=K), pulse=cfg.pulse)
        tau_eff = res.tau
        spec = res.spectra[0].normalized()
        out = {
            "tau": tau_eff,
            "ed_i0": spec[0], "ed_i2": spec[2],
            "off": float(sum(abs(v) for m, v in spec.items() if m not in (0, 2, -2))),
            "fm_i0": float(fermion.i0(model, tau_eff)), "fm_i2": float(fermion.i2(model, tau_eff)),
        }
        if with_moments:
            rho = ed.prepared_state(InitialState.THERMAL, chain, tau, cfg.pulse)
            em = ed.sector_moments_ed(rho, chain)
            fm = fermion.moments(model, tau_eff)
            for key in ("zz_zq", "zz_dq", "xx_zq", "xx_dq"):
                out["ed_m_" + key] = em[key]
                out["fm_m_" + key] = getattr(fm, "m_" + key)
        return out

    pts = _pool_map(one, list(cfg.tau_grid), workers)
    quantities = ["i0", "i2"] + (["m_zz_zq", "m_zz_dq", "m_xx_zq", "m_xx_dq"] if with_moments else [])
    report, points = [], []
    failed = False
    for q in quantities:
        pairs = [(p["ed_" + q], p["fm_" + q]) for p in pts if p["ed_" + q] is not None and p["fm_" + q] is not None]
        # a sector absent in only one engine is itself a mismatch
        mismatched = sum((p["ed_" + q] is None) != (p["fm_" + q] is None) for p in pts)
        devs = _rel_dev([a for a, _ in pairs], [b for _, b in pairs]) if pairs else np.zeros(0)
        mx = float(devs.max()) if devs.size else 0.0
        mean = float(devs.mean()) if devs.size else 0.0
        ok = mx <= cfg.compare_rtol and mismatched == 0
        failed |= not ok
        report.append([q, mx, mean, cfg.compare_rtol, len(pairs), ok])
        for p in pts:
            points.append([p["tau"], q, p["ed_" + q], p["fm_" + q]])
    off = max(p["off"] for p in pts)
    ok = off < 1e-10
    failed |= not ok
    report.append(["off_selection_weight", off, float(np.mean([p["off"] for p in pts])), 1e-10, len(pts), ok])
    tables = [
        Table("compare", ["quantity", "max_rel_dev", "mean_rel_dev", "tolerance", "n_points", "passed"], report),
        Table("compare_points", ["tau_s", "quantity", "ed", "fermion"], points),
    ]
    manifest = write_outputs(out_dir, tables, {}, cfg.formats, cfg, "compare", started, {"passed": not failed})
    return (EXIT_TOLERANCE if failed else EXIT_OK), manifest


def _curves_from_tables(tables: Iterable[Table]) -> dict[tuple[float, str], fitting.DecayCurve]:
    groups: dict[tuple[float, str], list[tuple[float, float, float]]] = {}
    for t in tables:
        need = ["tau_s", "t_s", "sector", "value", "normalization"]
        missing = [c for c in need if c not in t.columns]
        if missing:
            raise ConfigError(f"curve table lacks columns {missing}")
        idx = [t.columns.index(c) for c in need]
        for k, row in enumerate(t.rows, start=3):
            try:
                tau, ts, sec, val, norm = (row[i] for i in idx)
                groups.setdefault((float(tau), sec), []).append((float(ts), float(val), float(norm)))
            except ValueError as exc:
                raise ConfigError(f"row {k}: {exc}") from exc
    curves = {}
    for (tau, sec), pts in groups.items():
        pts.sort()
        ts = np.array([p[0] for p in pts])
        vals = np.array([p[1] / p[2] for p in pts])
        sector = {"total": "total", "0": "ZQ", "2": "DQ"}.get(sec)
        if sector is None:
            continue
        curves[(tau, sector)] = fitting.DecayCurve(ts, vals, tau=tau, sector=sector)
    return curves


def cmd_fit(inputs: Sequence[str], out_dir: Path, *, model: str = "Gaussian",
            b_models: Sequence[str] = (), n_spins: Optional[int] = None,
            coupling_b: Optional[float] = None, drift: bool = False,
            formats: Sequence[str] = ("csv", "json"), cfg: Optional[ExperimentConfig] = None,
            workers: int = 1) -> tuple[int, dict]:
    """Fit decay curves from ``curves.csv`` files.

    Writes one row per (tau, sector) curve with A, M, C, the signal curvature
    (1 - C) M, and m1, m2 for the sinc-Gaussian model.  ``b_models`` additionally fit the coupling from the
    tau dependence: IntensityI0 / IntensityI2 use the t = 0 ZQ / DQ values and
    AsymptoteC the fitted C of the total signal.  With ``coupling_b`` and
    ``n_spins`` known, the ratio of fitted to analytic second moments is
    reported per sector.
    """
    started = time.perf_counter()
    tables = []
    for path in inputs:
        t = read_table_csv(path)
        tables.append(t)
    try:
        curves = _curves_from_tables(tables)
    except ConfigError as exc:
        raise ConfigError(str(exc), inputs[0]) from exc
    if not curves:
        raise ConfigError("no ZQ, DQ or total curves found", inputs[0])
    keys = sorted(curves, key=lambda k: (k[1], k[0]))
    fit_model = fitting.FitModel(model)

    def fit_one(key):
        c = curves[key]
        if len(c) < (7 if fit_model is fitting.FitModel.SINC_GAUSSIAN else 5):
            return None
        return fitting.fit_curve(c, fit_model)

    results = _pool_map(fit_one, keys, workers)
    cols = ["tau_s", "sector", "model", "A", "A_err", "M_rad2_s2", "M_err", "M_curv_rad2_s2", "C", "C_err",
            "m1_rad2_s2", "m2_rad_s", "residual_rms", "converged", "flags"]
    rows = []
    for (tau, sec), r in zip(keys, results):
        if r is None:
            continue
        se = r.stderr or {}
        # short-time curvature of the normalized signal, comparable with exact second moments
        m_curv = (1.0 - r.params["C"]) * r.params["M"]
        rows.append([tau, sec, r.model.value, r.params["A"], se.get("A"), r.params["M"], se.get("M"), m_curv,
                     r.params["C"], se.get("C"), r.params.get("m1"), r.params.get("m2"),
                     r.residual_rms, r.converged, ";".join(r.flags)])
    out_tables = [Table("fits", cols, rows)]
    plots = {}
    if "svg" in formats:
        for sec in ("total", "ZQ", "DQ"):
            sel = [(k[0], r) for k, r in zip(keys, results) if k[1] == sec and r is not None]
            if len(sel) > 1:
                taus = [s[0] for s in sel]
                plots[f"fit_M_{sec}"] = svg_plot([("M", taus, [s[1].params["M"] for s in sel])],
                                                 title=f"Fitted second moment, {sec}", xlabel="tau (s)",
                                                 ylabel="rad^2/s^2")

    # coupling fits against the closed forms
    b_rows = []
    for bm in b_models:
        bmodel = fitting.FitModel(bm)
        if bmodel is fitting.FitModel.ASYMPTOTE_C:
            sel = [(k[0], r.params["C"]) for k, r in zip(keys, results) if k[1] == "total" and r is not None]
        else:
            sec = "ZQ" if bmodel is fitting.FitModel.INTENSITY_I0 else "DQ"
            sel = [(k[0], curves[k].values[0]) for k in keys if k[1] == sec and curves[k].times[0] == 0.0]
        if len(sel) < 8:
            raise ConfigError(f"{bm} needs at least 8 tau values, found {len(sel)}", inputs[0])
        taus = np.array([s[0] for s in sel])
        vals = np.array([s[1] for s in sel])
        r = fitting.fit_model_b(taus, vals, bmodel, drift=drift and bmodel is fitting.FitModel.ASYMPTOTE_C,
                                n_spins=n_spins)
        se = r.stderr or {}
        b_rows.append([bm, "finite" if n_spins else "infinite", n_spins, r.params["b"], se.get("b"),
                       r.params.get("drift"), se.get("drift"), r.residual_rms, r.converged])
    if b_rows:
        out_tables.append(Table("bfit", ["model", "chain", "n_spins", "b_rad_s", "b_err", "drift_per_s",
                                         "drift_err", "residual_rms", "converged"], b_rows))

    if coupling_b is not None and n_spins is not None and n_spins >= 3:
        fm_model = fermion.FermionModel(n_spins, coupling_b)
        mu_rows = []
        for (tau, sec), r in zip(keys, results):
            if r is None:
                continue
            mb = fermion.moments(fm_model, tau)
            ref = {"total": mb.total, "ZQ": mb.m_zq, "DQ": mb.m_dq}[sec]
            ratio = None if not ref else r.params["M"] / ref
            mu_rows.append([tau, sec, r.params["M"], ref, ratio])
        out_tables.append(Table("mu", ["tau_s", "sector", "M_fit_rad2_s2", "M_analytic_rad2_s2", "ratio"], mu_rows))
    manifest = write_outputs(out_dir, out_tables, plots, formats, cfg, "fit", started,
                             {"inputs": [str(p) for p in inputs]})
    return EXIT_OK, manifest


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mqcdecay", description="Multiple-quantum coherence decay in spin chains.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="JSON experiment configuration")
        sp.add_argument("--out", help="output directory (overrides outputs.directory)")
        sp.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="worker threads")
        sp.add_argument("--seed", type=int, help="override the configuration seed")
        sp.add_argument("--format", help="comma separated subset of csv,json,svg")

    common(sub.add_parser("simulate", help="exact-diagonalization MQC experiment"))
    common(sub.add_parser("analytic", help="free-fermion intensities and moments"))
    common(sub.add_parser("compare", help="cross-check both engines"))
    fp = sub.add_parser("fit", help="fit decay curves from CSV files")
    common(fp, config_required=False)
    fp.add_argument("inputs", nargs="+", help="curves.csv files written by simulate")
    fp.add_argument("--model", default="Gaussian", choices=["Gaussian", "SincGaussian"])
    fp.add_argument("--b-model", action="append", default=[],
                    choices=["IntensityI0", "IntensityI2", "AsymptoteC"], help="also fit b versus tau")
    fp.add_argument("--n-spins", type=int, help="finite chain length for closed forms")
    fp.add_argument("--coupling-b", type=float, help="coupling for the moment ratio report (rad/s)")
    fp.add_argument("--drift", action="store_true", help="linear drift term for AsymptoteC")
    return p


def _formats(arg: Optional[str], default: Sequence[str]) -> tuple[str, ...]:
    if arg is None:
        return tuple(default)
    fm = tuple(f.strip() for f in arg.split(",") if f.strip())
    bad = [f for f in fm if f not in FORMATS]
    if bad:
        raise ConfigError(f"unsupported formats {bad}", "--format")
    return fm


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else None
        if cfg is not None:
            overrides = {}
            if args.seed is not None:
                overrides["seed"] = args.seed
            fm = _formats(args.format, cfg.formats)
            if fm != cfg.formats:
                overrides["formats"] = fm
            if overrides:
                cfg = replace(cfg, **overrides)
        out = args.out or (cfg.out_dir if cfg is not None else None) or "mqcdecay-out"
        out_dir = Path(out)
        workers = max(1, args.workers)
        if args.command == "fit":
            n_spins = args.n_spins if args.n_spins is not None else (cfg.chain.n_spins if cfg else None)
            cb = args.coupling_b if args.coupling_b is not None else (cfg.chain.coupling_b if cfg else None)
            code, _ = cmd_fit(args.inputs, out_dir, model=args.model, b_models=args.b_model, n_spins=n_spins,
                              coupling_b=cb, drift=args.drift,
                              formats=_formats(args.format, cfg.formats if cfg else ("csv", "json")),
                              cfg=cfg, workers=workers)
        else:
            fn = {"simulate": cmd_simulate, "analytic": cmd_analytic, "compare": cmd_compare}[args.command]
            code, manifest = fn(cfg, out_dir, workers)
            if args.command == "compare":
                print("compare:", "passed" if manifest.get("passed") else "FAILED", file=sys.stderr)
        return code
    except DimensionCapError as exc:
        print(f"mqcdecay: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ConfigError as exc:
        print(f"mqcdecay: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
