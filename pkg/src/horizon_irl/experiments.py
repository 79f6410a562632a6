"""Seeded sweeps over environments, data amounts and candidate horizons.

Each ``(environment, data percentage)`` cell is pure given the base seed, so
cells can run in any order or in parallel. Finished cells are appended to a
journal file; a rerun skips them, and the final ``results.csv`` is always
rewritten in sorted key order, which makes it byte-identical across runs.
"""
from __future__ import annotations

import configparser
import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .demos import sample_pairs
from .envs import GAMMA0, TASKS, make_task
from .mdp import ValidationError
from .seeding import derive_seed
from .selection import LEARNERS, CandidateGrid, LearnerConfig, cross_validate, oracle_select

log = logging.getLogger(__name__)

DEFAULT_PERCENTAGES = (10.0, 30.0, 50.0, 100.0, 200.0)
# fixed keys mixed into seeds so each random stream has its own lane
_ENV_KEY, _DEMO_KEY, _SPLIT_KEY = 1, 2, 3

RESULT_COLUMNS = ["task", "learner", "env_index", "env_seed", "data_percent", "n_pairs", "candidate",
                  "validation_errors", "full_state_errors", "cv_full_state_errors", "status"]
TIMING_COLUMNS = ["task", "learner", "env_index", "data_percent", "wall_time_ms"]
SUMMARY_COLUMNS = ["task", "learner", "data_percent", "candidate", "mean_full_errors", "std_full_errors",
                   "mean_val_errors", "std_val_errors", "n"]


def fmt(x) -> str:
    """Integers as-is, reals with 17 significant digits (round-trips exactly)."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "gridworld-simple"
    learner: str = "lp"
    data_percentages: tuple = DEFAULT_PERCENTAGES
    grid_size: int = 20
    gamma0: float = GAMMA0
    horizon0: int = 20
    include_reference: bool = False
    n_environments: int = 10
    base_seed: int = 0
    out_dir: str = "results"
    workers: int = 1
    r_max: float = 1.0
    margin: float | None = None
    epochs: int = 200
    lr: float = 0.05
    restarts: int = 5

    def validate(self) -> "ExperimentConfig":
        if self.task not in TASKS:
            raise ValidationError(f"task must be one of {TASKS}")
        if self.learner not in LEARNERS:
            raise ValidationError(f"learner must be one of {LEARNERS}")
        if not self.data_percentages or any(p <= 0 for p in self.data_percentages):
            raise ValidationError("data percentages must be positive")
        if self.n_environments < 1:
            raise ValidationError("n_environments must be >= 1")
        if self.grid_size < 1:
            raise ValidationError("grid_size must be >= 1")
        if not 0 < self.gamma0 < 1:
            raise ValidationError("gamma0 must be in (0, 1)")
        if self.horizon0 < 1:
            raise ValidationError("horizon0 must be >= 1")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        return self

    @property
    def task_index(self) -> int:
        return TASKS.index(self.task)

    def grid(self) -> CandidateGrid:
        """Candidate grid; ``include_reference`` adds ``gamma0`` (or ``horizon0``) itself."""
        if self.learner == "lp":
            g = CandidateGrid.discounts(self.grid_size, self.gamma0)
            return g.with_value(float(self.gamma0)) if self.include_reference else g
        g = CandidateGrid.horizons(self.grid_size, self.horizon0)
        return g.with_value(int(self.horizon0)) if self.include_reference else g

    def learner_config(self) -> LearnerConfig:
        return LearnerConfig(r_max=self.r_max, margin=self.margin, epochs=self.epochs, lr=self.lr,
                             restarts=self.restarts)

    def env_seed(self, env_index: int) -> int:
        return derive_seed(self.base_seed, _ENV_KEY, self.task_index, env_index)


_LIST_KEYS = {"data_percentages"}


def _coerce(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in kinds:
        raise ValidationError(f"unknown config key {name!r}")
    raw = raw.strip()
    if name in _LIST_KEYS:
        return tuple(float(x) for x in raw.replace(",", " ").split())
    kind = str(kinds[name])
    try:
        if name == "margin":
            return None if raw.lower() in ("", "none") else float(raw)
        if "bool" in kind:
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if "int" in kind:
            return int(raw)
        if "float" in kind:
            return float(raw)
    except ValueError as exc:
        raise ValidationError(f"bad value for {name}: {raw!r}") from exc
    return raw


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a flat ``key = value`` file (``#`` comments); keyword overrides win."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string("[sweep]\n" + text)
    except configparser.Error as exc:
        raise ValidationError(f"cannot parse config: {exc}") from exc
    values = {k: _coerce(k, v) for k, v in parser["sweep"].items()}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values).validate()


def dump_config(config: ExperimentConfig) -> str:
    lines = []
    for k, v in asdict(config).items():
        if isinstance(v, (tuple, list)):
            v = ", ".join(fmt(x) for x in v)
        lines.append(f"{k} = {'none' if v is None else fmt(v)}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ExperimentRecord:
    task: str
    learner: str
    env_index: int
    env_seed: int
    data_percent: float
    n_pairs: int
    candidate: float
    validation_errors: int
    full_state_errors: int
    cv_full_state_errors: int
    status: str = "ok"
    wall_time_ms: float = field(default=0.0, compare=False)

    @property
    def key(self):
        return (self.task, self.learner, self.env_index, self.data_percent, self.candidate)

    def row(self) -> list:
        return [fmt(getattr(self, c)) for c in RESULT_COLUMNS]


def n_pairs_for(percent: float, n_states: int) -> int:
    return int(round(percent * n_states / 100.0))


def _percent_key(p: float) -> int:
    return int(round(p * 1000))


def run_cell(config: ExperimentConfig, env_index: int, percent: float) -> list:
    """All candidate records for one environment and data amount."""
    start = time.perf_counter()
    env_seed = config.env_seed(env_index)
    env = make_task(config.task, env_seed, config.gamma0)
    n = n_pairs_for(percent, env.n_states)
    demos = sample_pairs(env.mdp, env.expert, n, derive_seed(env_seed, _DEMO_KEY, _percent_key(percent)))
    grid = config.grid()
    lc = config.learner_config()
    split_seed = derive_seed(env_seed, _SPLIT_KEY, _percent_key(percent))
    try:
        cv = cross_validate(env.mdp, demos, grid, config.learner, lc, split_seed, env.expert, env.features)
        orc = oracle_select(env.mdp, demos, env.expert, grid, config.learner, lc, split_seed, env.features)
    except ValidationError as exc:
        # too little data for this cell: record it as failed and keep sweeping
        log.warning("cell env=%d percent=%s skipped: %s", env_index, percent, exc)
        k = len(grid)
        cv_val, cv_full, orc_full = [env.n_states] * k, [env.n_states] * k, [env.n_states] * k
        status = ["no-data"] * k
    else:
        cv_val, cv_full, orc_full = (cv.per_candidate_validation_errors, cv.per_candidate_full_errors,
                                     orc.per_candidate_full_errors)
        status = ["infeasible" if (a or b) else "ok" for a, b in zip(cv.infeasible, orc.infeasible)]
    ms = (time.perf_counter() - start) * 1000.0
    return [ExperimentRecord(config.task, config.learner, env_index, env_seed, float(percent), n, value,
                             int(v), int(f), int(c), s, ms)
            for value, v, f, c, s in zip(grid.values, cv_val, orc_full, cv_full, status)]


def _parse_row(row: dict) -> ExperimentRecord:
    cand = row["candidate"]
    return ExperimentRecord(row["task"], row["learner"], int(row["env_index"]), int(row["env_seed"]),
                            float(row["data_percent"]), int(row["n_pairs"]),
                            float(cand) if any(c in cand for c in ".e") else int(cand),
                            int(row["validation_errors"]), int(row["full_state_errors"]),
                            int(row["cv_full_state_errors"]), row["status"])


def read_results(path) -> list:
    path = Path(path)
    if not path.exists():
        return []
    with path.open(newline="") as fh:
        return [_parse_row(r) for r in csv.DictReader(fh)]


def _append(path: Path, columns, rows):
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(columns)
        w.writerows(rows)


def _cell_job(args):
    return run_cell(*args)


def run_sweep(config: ExperimentConfig, progress=None) -> list:
    """Run (or resume) a sweep and write ``results.csv`` plus ``summary.csv``.

    ``journal.csv`` holds finished cells in completion order and is what a
    rerun resumes from; ``timings.csv`` keeps the per-cell wall times out of
    the deterministic results file.
    """
    config.validate()
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create output directory {out}: {exc}") from exc
    journal = out / "journal.csv"
    stamp = out / "config.txt"
    if journal.exists() and stamp.exists() and stamp.read_text() != _resume_stamp(config):
        raise ValidationError(f"{out} holds a sweep with a different configuration")
    stamp.write_text(_resume_stamp(config))
    done = read_results(journal)
    finished = {(r.env_index, r.data_percent) for r in done}
    todo = [(config, e, float(p)) for e in range(config.n_environments)
            for p in config.data_percentages if (e, float(p)) not in finished]
    if config.workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            batches = pool.map(_cell_job, todo)
            for batch in batches:
                _record_batch(journal, out, batch, done, progress)
    else:
        for job in todo:
            _record_batch(journal, out, run_cell(*job), done, progress)
    wanted = {(e, float(p)) for e in range(config.n_environments) for p in config.data_percentages}
    records = sorted((r for r in done if (r.env_index, r.data_percent) in wanted and r.task == config.task
                      and r.learner == config.learner), key=lambda r: r.key)
    write_results(records, out / "results.csv")
    emit_summary_csv(records, out / "summary.csv")
    return records


def _resume_stamp(config: ExperimentConfig) -> str:
    # worker count does not change results, so it may differ between resumes
    return dump_config(replace(config, workers=1))


def _record_batch(journal, out, batch, done, progress):
    _append(journal, RESULT_COLUMNS, [r.row() for r in batch])
    if batch:
        r = batch[0]
        _append(out / "timings.csv", TIMING_COLUMNS,
                [[r.task, r.learner, r.env_index, fmt(r.data_percent), f"{r.wall_time_ms:.1f}"]])
    done.extend(batch)
    if progress is not None and batch:
        progress(batch)


def write_results(records, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        w.writerows(r.row() for r in records)
    return path


def summarize(records) -> list:
    """Per ``(task, learner, percent, candidate)`` means and population standard deviations."""
    if not records:
        raise ValidationError("no records to summarize")
    groups = {}
    for r in records:
        groups.setdefault((r.task, r.learner, r.data_percent, r.candidate), []).append(r)
    rows = []
    for key in sorted(groups):
        full = np.array([r.full_state_errors for r in groups[key]], dtype=float)
        val = np.array([r.validation_errors for r in groups[key]], dtype=float)
        rows.append(dict(task=key[0], learner=key[1], data_percent=key[2], candidate=key[3],
                         mean_full_errors=float(full.mean()), std_full_errors=float(full.std()),
                         mean_val_errors=float(val.mean()), std_val_errors=float(val.std()),
                         n=len(full)))
    return rows


def emit_summary_csv(records, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in summarize(records):
            w.writerow([fmt(row[c]) for c in SUMMARY_COLUMNS])
    return path


def read_summary(path) -> list:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        cand = r["candidate"]
        out.append(dict(task=r["task"], learner=r["learner"], data_percent=float(r["data_percent"]),
                        candidate=float(cand) if any(c in cand for c in ".e") else int(cand),
                        mean_full_errors=float(r["mean_full_errors"]),
                        std_full_errors=float(r["std_full_errors"]),
                        mean_val_errors=float(r["mean_val_errors"]),
                        std_val_errors=float(r["std_val_errors"]), n=int(r["n"])))
    return out


@dataclass(frozen=True)
class CellSelection:
    """Per-cell choices derived from the records of one environment and data amount."""

    env_index: int
    data_percent: float
    cv_choice: float
    oracle_choice: float
    cv_error: int  # full-data error at the cross-validated candidate
    oracle_error: int
    reference_error: int | None  # error at gamma0 / horizon0 when it is on the grid


def cell_selections(records, reference=None) -> list:
    """Cross-validated and oracle choices per cell; ties go to the smallest candidate."""
    cells = {}
    for r in records:
        cells.setdefault((r.env_index, r.data_percent), []).append(r)
    out = []
    for (e, p), rs in sorted(cells.items()):
        rs = sorted(rs, key=lambda r: r.candidate)
        cv = min(rs, key=lambda r: (r.validation_errors, r.candidate))
        orc = min(rs, key=lambda r: (r.full_state_errors, r.candidate))
        ref = next((r.full_state_errors for r in rs if reference is not None and r.candidate == reference), None)
        out.append(CellSelection(e, p, cv.candidate, orc.candidate, cv.full_state_errors,
                                 orc.full_state_errors, ref))
    return out


def with_overrides(config: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None}).validate()
