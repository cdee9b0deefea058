"""Turn a resolved config into trial jobs, run them and write the output tree.

Layout of an output directory::

    resolved_config.json      settings actually used, plus the package version
    manifest.csv              one row per trace: cell key, trial, path, sha256
    traces/<method>/d=<d>/alpha=<alpha>/trial_<k>.csv
    summary.csv               one row per (dataset, map, d, method, alpha)

The summary is always rebuilt from the trace files as written, so ``report``
reproduces it byte for byte.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import BACKEND, __version__
from .baselines import LrSettings, run_rgd_lr, run_rrm_lr
from .config import ExperimentConfig
from .dataset import PerformativeMask, gen_circles, gen_linear_synthetic, load_csv, nearmiss3_undersample
from .errors import ArgumentError, IngestionError, PerflabError
from .kernel import KernelSpec
from .metrics import summarize
from .rrm import EstimationAborted, RrmSettings, run_rrm
from .shift import MapSpec, bankruptcy_intensity
from .solver import SolveSettings
from . import traceio

log = logging.getLogger("perflab")

WORKERS_ENV = "PERFLAB_WORKERS"
MANIFEST_COLUMNS = ("dataset", "map", "d", "method", "alpha", "trial", "path", "sha256")


@dataclass(frozen=True)
class Job:
    method: str
    d: float
    alpha: float
    trial: int

    @property
    def relpath(self) -> str:
        return f"traces/{self.method}/d={traceio.fmt(self.d)}/alpha={traceio.fmt(self.alpha)}/trial_{self.trial:03d}.csv"


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        raise ArgumentError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ArgumentError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


def data_seed(seed: int, trial: int) -> int:
    """Generator seed for a trial; disjoint from the per-round seeds (t >= 1)."""
    return int(np.random.SeedSequence([seed, trial, 0]).generate_state(1)[0])


def dataset_label(cfg: ExperimentConfig) -> str:
    ds = cfg["dataset"]
    if ds["kind"] == "csv":
        return Path(ds["path"]).stem
    return ds["kind"]


def _csv_columns(ds) -> list[str]:
    if ds["feature_columns"] is not None:
        return list(ds["feature_columns"])
    with open(ds["path"], newline="", encoding="utf-8") as fh:
        header = [h.strip() for h in next(csv.reader(fh))]
    return [h for h in header if h != ds["label_column"]]


def build_data(cfg: ExperimentConfig, trial: int):
    ds = cfg["dataset"]
    seed = data_seed(cfg["experiment"]["seed"], trial)
    if ds["kind"] == "circles":
        return gen_circles(ds["n_per_class"], ds["noise_std"], seed=seed, tau=ds["tau"])
    if ds["kind"] == "linear":
        return gen_linear_synthetic(ds["n_per_class"], ds["dim"], ds["n_informative"],
                                    ds["class_sep"], seed=seed, tau=ds["tau"])
    data = load_csv(ds["path"], ds["label_column"], ds["positive_label"], ds["feature_columns"],
                    standardize_features=ds["standardize"], tau=ds["tau"])
    if ds["nearmiss_k"] > 0:
        data = nearmiss3_undersample(data, 1, ds["nearmiss_k"])
    return data


def build_map(cfg: ExperimentConfig, d: float) -> MapSpec:
    m = cfg["map"]
    mask = None
    b = 0.0
    if m["kind"] == "bankruptcy":
        cols = _csv_columns(cfg["dataset"])
        named = m["performative"] if m["performative"] is not None else m["non_performative"]
        unknown = [c for c in named if c not in cols]
        if unknown:
            raise IngestionError(f"map column(s) not among the features: {unknown}")
        flags = np.array([c in named for c in cols])
        mask = PerformativeMask(flags if m["performative"] is not None else ~flags)
        b = bankruptcy_intensity(d) if m["b"] is None else m["b"]
    return MapSpec(m["kind"], d=d, b=b, n_candidates=m["n_candidates"], mask=mask,
                   flip_rule=m["flip_rule"])


def rrm_settings(cfg: ExperimentConfig, alpha: float) -> RrmSettings:
    r, s = cfg["rrm"], cfg["solver"]
    return RrmSettings(alpha=alpha, T_max=r["T_max"], trials=r["trials"], burn_in=r["burn_in"],
                       C_init=r["C_init"], convergence_consistency=r["convergence_consistency"],
                       seed=cfg["experiment"]["seed"],
                       solver=SolveSettings(tol=s["tol"], max_passes=s["max_passes"], shrink=s["shrink"]),
                       violator_filter=r["violator_filter"],
                       stop_at_convergence=r["stop_at_convergence"])


def run_job(cfg: ExperimentConfig, job: Job):
    data = build_data(cfg, job.trial)
    map_spec = build_map(cfg, job.d)
    settings = rrm_settings(cfg, job.alpha)
    if job.method == "np2m2":
        k = cfg["kernel"]
        spec = KernelSpec(k["kind"], k["sigma"], k["squared_exponent"])
        return run_rrm(data, spec, map_spec, settings, trial=job.trial)
    bl = cfg["baselines"]
    lr = LrSettings(l2=bl["l2"], lr=bl["lr"], max_iters=bl["max_iters"], tol=bl["tol"], step_lr=bl["step_lr"])
    runner = run_rrm_lr if job.method == "rrm_lr" else run_rgd_lr
    return runner(data, map_spec, settings, trial=job.trial, lr_settings=lr)


def _execute(args):
    """Run one job and write its trace; returns (job, sha256 or None, error or None, trace or None)."""
    cfg, job, out = args
    path = Path(out) / job.relpath
    try:
        trace = run_job(cfg, job)
    except EstimationAborted as exc:
        traceio.write_trace(path.with_suffix(".partial.csv"), exc.trace)
        return job, None, f"{job.relpath}: {exc} (partial trace kept)", None
    except PerflabError as exc:
        return job, None, f"{job.relpath}: {type(exc).__name__}: {exc}", None
    text = traceio.trace_text(trace)
    traceio.write_atomic(path, text)
    for note in trace.notes:
        log.warning("%s: %s", job.relpath, note)
    return job, hashlib.sha256(text.encode()).hexdigest(), None, trace


def plan(cfg: ExperimentConfig, alphas=None) -> list[Job]:
    alphas = [cfg["rrm"]["alpha"]] if alphas is None else alphas
    return [Job(meth, d, a, k)
            for meth in cfg["experiment"]["methods"]
            for d in cfg["map"]["d"]
            for a in alphas
            for k in range(cfg["rrm"]["trials"])]


def execute(cfg: ExperimentConfig, out, alphas=None, extra=None, collect=None) -> int:
    """Run every job of the grid into ``out``; returns 0 on success, 1 if any job failed.

    ``collect``, if a dict, receives the in-memory trace of every finished job
    keyed by its Job (full precision, unlike the CSVs).
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    snapshot = {"version": __version__, "backend": BACKEND, "config": cfg.raw}
    if extra:
        snapshot.update(extra)
    traceio.write_atomic(out / "resolved_config.json", json.dumps(snapshot, indent=2, sort_keys=True) + "\n")

    jobs = plan(cfg, alphas)
    workers = worker_count()
    args = [(cfg, j, str(out)) for j in jobs]
    log.info("%d jobs, %d worker(s), backend %s", len(jobs), workers, BACKEND)
    if workers == 1:
        results = [_execute(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute, args))

    label, kind = dataset_label(cfg), cfg["map"]["kind"]
    rows, errors = [], []
    for job, sha, err, trace in results:
        if err:
            errors.append(err)
            continue
        if collect is not None:
            collect[job] = trace
        rows.append((label, kind, job.d, job.method, job.alpha, job.trial, job.relpath, sha))
    traceio.write_atomic(out / "manifest.csv", _manifest_text(rows))
    for e in errors:
        log.error("%s", e)
    failed = {(j.method, j.d, j.alpha) for j, _, err, _ in results if err}
    summary = build_summary(out, rows, cfg["rrm"]["burn_in"], cfg["rrm"]["T_max"], skip=failed)
    traceio.write_atomic(out / "summary.csv", summary)
    return 1 if errors else 0


def _manifest_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_COLUMNS)
    for r in rows:
        w.writerow([traceio.fmt(v) for v in r])
    return buf.getvalue()


def read_manifest(out) -> list[tuple]:
    path = Path(out) / "manifest.csv"
    try:
        rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != MANIFEST_COLUMNS:
        raise IngestionError(f"{path}: bad manifest header")
    out_rows = []
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) != len(MANIFEST_COLUMNS):
            raise IngestionError(f"{path}: line {lineno} malformed")
        try:
            out_rows.append((r[0], r[1], float(r[2]), r[3], float(r[4]), int(r[5]), r[6], r[7]))
        except ValueError:
            raise IngestionError(f"{path}: line {lineno} malformed") from None
    if not out_rows:
        raise IngestionError(f"{path}: no traces listed")
    return out_rows


def build_summary(out, manifest_rows, burn_in: int, T_max: int, skip=()) -> str:
    """Summary CSV text from the trace files on disk, cells in first-seen order.

    Traces that stopped at a fixed point before T_max are carried forward.
    """
    cells = {}
    for label, kind, d, meth, alpha, trial, rel, _ in manifest_rows:
        if (meth, d, alpha) in skip:
            continue
        cells.setdefault((label, kind, d, meth, alpha), []).append((trial, rel))
    rows = []
    for key, members in cells.items():
        traces = [traceio.read_trace(Path(out) / rel, key[3], trial) for trial, rel in sorted(members)]
        rows.append((key, summarize(traces, burn_in, T_max)))
    return traceio.summary_text(rows)


def audit(out) -> list[str]:
    """Problems found when re-deriving the summary; empty when everything matches."""
    out = Path(out)
    if not out.is_dir():
        raise IngestionError(f"{out} is not a directory")
    rows = read_manifest(out)
    problems = []
    for *_, rel, sha in rows:
        p = out / rel
        try:
            data = p.read_bytes()
        except OSError:
            problems.append(f"{p}: missing trace")
            continue
        if hashlib.sha256(data).hexdigest() != sha:
            problems.append(f"{p}: contents differ from the recorded checksum")
    if problems:
        return problems
    snap = json.loads((out / "resolved_config.json").read_text(encoding="utf-8"))
    rrm = snap["config"]["rrm"]
    regenerated = build_summary(out, rows, rrm["burn_in"], rrm["T_max"])
    stored_path = out / "summary.csv"
    if not stored_path.exists():
        return [f"{stored_path}: missing stored summary"]
    stored = stored_path.read_text(encoding="utf-8")
    if stored != regenerated:
        s_lines, r_lines = stored.splitlines(), regenerated.splitlines()
        for i in range(max(len(s_lines), len(r_lines))):
            a = s_lines[i] if i < len(s_lines) else "<none>"
            b = r_lines[i] if i < len(r_lines) else "<none>"
            if a != b:
                problems.append(f"{stored_path}: line {i + 1} stored {a!r} != regenerated {b!r}")
    return problems
