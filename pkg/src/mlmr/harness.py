"""Experiment configs, seeded Monte-Carlo replication, and CSV export.

Config files are TOML::

    [instance]
    kind = "two_state"            # or "general" with [[instance.chain]] tables
    p01 = [[...], [...]]          # M×N tables, one matrix row per line
    p10 = [[...], [...]]
    theta0 = [[...], [...]]
    theta1 = [[...], [...]]
    # file = "other.cfg"          # take [instance] from another config instead

    [policy]
    name = "mlmr"                 # mlmr | ucb1_arms | oracle | uniform_random
    schedule = "constant(303)"    # mlmr only; or log_log(c), power(c, a)
    L = 2.0                       # ucb1_arms only

    [run]
    horizon = 100000
    replications = 20
    seed = 2011
    checkpoints = [1000, 10000]   # optional; default powers of 2 plus horizon
"""

import csv
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .analysis import default_checkpoints, mean_rewards, regret_trace
from .errors import MLMRError, ParseError, ValidationError
from .markov import ChainSpec, ProblemInstance
from .matching import max_weight_matching
from .policies import (
    ConstantL,
    MLMRPolicy,
    OraclePolicy,
    UCB1Arms,
    UniformRandomPolicy,
    parse_schedule,
)
from .rng import MASK64, RandomStream, replication_seed

POLICIES = ("mlmr", "ucb1_arms", "oracle", "uniform_random")
TRACE_COLUMNS = ["step", "reward_mean", "reward_se", "regret_mean", "regret_se", "regret_per_ln_n"]
OUTPUT_ENV = "MLMR_OUTPUT_DIR"


@dataclass(frozen=True)
class ExperimentConfig:
    instance: ProblemInstance
    policy: str = "mlmr"
    schedule: object = None
    L: float = 2.0
    horizon: int = 100_000
    replications: int = 20
    seed: int = 0
    checkpoints: tuple = ()

    def __post_init__(self):
        m, n = self.instance.shape
        if self.policy not in POLICIES:
            raise ValidationError(f"unknown policy {self.policy!r}; expected one of {POLICIES}")
        if self.horizon < m * n:
            raise ValidationError(f"horizon must be ≥ M·N = {m * n}")
        if self.replications < 1:
            raise ValidationError("replications must be positive")
        if not 0 <= self.seed <= MASK64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        cps = tuple(int(c) for c in self.checkpoints) or tuple(default_checkpoints(self.horizon))
        if list(cps) != sorted(set(cps)) or cps[0] < 1 or cps[-1] > self.horizon:
            raise ValidationError("checkpoints must be strictly ascending within [1, horizon]")
        object.__setattr__(self, "checkpoints", cps)
        if self.schedule is None:
            object.__setattr__(self, "schedule", ConstantL(2.0))

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        if "horizon" in kw and "checkpoints" not in kw:
            kw["checkpoints"] = ()
        return replace(self, **kw)


# -- loading ---------------------------------------------------------------------

def _line_of(exc):
    line = getattr(exc, "lineno", None)
    if line is None:
        m = re.search(r"line (\d+)", str(exc))
        line = int(m.group(1)) if m else None
    return line


def _get(table, key, kind, where, default=None, required=True):
    if key not in table:
        if required and default is None:
            raise ParseError("missing required key", field=f"{where}.{key}")
        return default
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ParseError(f"expected {kind.__name__}, got {type(value).__name__}", field=f"{where}.{key}")
    return value


def _matrix(table, key, where):
    rows = _get(table, key, list, where)
    try:
        a = np.array(rows, dtype=np.float64)
    except (TypeError, ValueError):
        raise ParseError("not a numeric matrix", field=f"{where}.{key}") from None
    if a.ndim != 2:
        raise ParseError("expected a matrix (list of rows)", field=f"{where}.{key}")
    return a


def parse_instance(table, base_dir=None, where="instance"):
    if "file" in table:
        path = Path(table["file"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        data = _load_toml(path)
        if "instance" not in data:
            raise ParseError(f"{path} has no [instance] table", field=f"{where}.file")
        return parse_instance(data["instance"], path.parent, where=f"{path.name}:instance")
    kind = _get(table, "kind", str, where, default="two_state")
    if kind == "two_state":
        tables = [_matrix(table, k, where) for k in ("p01", "p10", "theta0", "theta1")]
        shapes = {t.shape for t in tables}
        if len(shapes) != 1:
            raise ValidationError("p01, p10, theta0, theta1 must share one M×N shape")
        m, n = tables[0].shape
        if m > n:
            raise ValidationError(f"M ≤ N required, got M={m} > N={n}")
        return ProblemInstance.two_state(*tables)
    if kind == "general":
        m = _get(table, "users", int, where)
        n = _get(table, "resources", int, where)
        if m > n:
            raise ValidationError(f"M ≤ N required, got M={m} > N={n}")
        grid = [[None] * n for _ in range(m)]
        for k, ch in enumerate(_get(table, "chain", list, where)):
            w = f"{where}.chain[{k}]"
            i = _get(ch, "user", int, w)
            j = _get(ch, "resource", int, w)
            if not (0 <= i < m and 0 <= j < n):
                raise ValidationError(f"{w}: pair ({i}, {j}) outside the {m}×{n} grid")
            if grid[i][j] is not None:
                raise ValidationError(f"{w}: pair ({i}, {j}) defined twice")
            grid[i][j] = ChainSpec(_matrix(ch, "transition", w), _get(ch, "rewards", list, w))
        missing = [(i, j) for i in range(m) for j in range(n) if grid[i][j] is None]
        if missing:
            raise ValidationError(f"no chain given for pairs {missing}")
        return ProblemInstance(tuple(tuple(r) for r in grid))
    raise ParseError(f"unknown instance kind {kind!r}", field=f"{where}.kind")


def _load_toml(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ParseError(f"config file {path} does not exist") from None
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}", line=_line_of(exc)) from None


def load_config(path):
    """Parse and fully validate an experiment config file."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"config file {path} does not exist")
    data = _load_toml(path)
    if "instance" not in data:
        raise ParseError("missing [instance] table", field="instance")
    instance = parse_instance(data["instance"], path.parent)
    pol = data.get("policy", {})
    run = data.get("run", {})
    name = _get(pol, "name", str, "policy", default="mlmr")
    schedule = None
    if "schedule" in pol:
        schedule = parse_schedule(_get(pol, "schedule", str, "policy"))
    elif "L" in pol and name == "mlmr":
        schedule = ConstantL(_get(pol, "L", float, "policy"))
    L = _get(pol, "L", float, "policy", default=2.0)
    return ExperimentConfig(
        instance=instance,
        policy=name,
        schedule=schedule,
        L=L,
        horizon=_get(run, "horizon", int, "run", default=100_000),
        replications=_get(run, "replications", int, "run", default=20),
        seed=_get(run, "seed", int, "run", required=False) or 0,
        checkpoints=tuple(_get(run, "checkpoints", list, "run", default=[], required=False)),
    )


# -- running -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RegretTrace:
    """Replication-averaged checkpoint rows plus mean per-pair play counts."""

    steps: np.ndarray
    reward_mean: np.ndarray
    reward_se: np.ndarray
    regret_mean: np.ndarray
    regret_se: np.ndarray
    regret_per_ln_n: np.ndarray
    counts: list
    mu_star: float = math.nan
    replications: int = 0

    def rows(self):
        for k in range(len(self.steps)):
            yield (
                int(self.steps[k]),
                self.reward_mean[k],
                self.reward_se[k],
                self.regret_mean[k],
                self.regret_se[k],
                self.regret_per_ln_n[k],
            )


def make_policy(config, index):
    m, n = config.instance.shape
    if config.policy == "mlmr":
        return MLMRPolicy(m, n, config.schedule)
    if config.policy == "ucb1_arms":
        return UCB1Arms(m, n, config.L)
    if config.policy == "oracle":
        return OraclePolicy(config.instance)
    return UniformRandomPolicy(m, n, RandomStream(replication_seed(config.seed, index), stream=1))


def run_replication(config, index, mu_star=None):
    """One replication; returns (cumulative reward, regret) at checkpoints and count snapshots."""
    seed = replication_seed(config.seed, index)
    tr = regret_trace(
        config.instance,
        make_policy(config, index),
        config.horizon,
        RandomStream(seed, stream=0),
        checkpoints=config.checkpoints,
        mu_star=mu_star,
    )
    idx = tr.checkpoints - 1
    cum = tr.cumulative_reward[idx]
    regret = tr.checkpoints * tr.mu_star - cum
    return cum, regret, np.array(tr.counts, dtype=np.float64)


def _run_one(args):
    return run_replication(*args)


def run(config, workers=1, order=None):
    """Run every replication and reduce them in replication-index order.

    ``order`` permutes execution order only; the output does not depend on it.
    """
    mu_star = max_weight_matching(mean_rewards(config.instance))[1]
    indices = list(order) if order is not None else list(range(config.replications))
    if sorted(indices) != list(range(config.replications)):
        raise ValidationError("order must be a permutation of the replication indices")
    jobs = [(config, i, mu_star) for i in indices]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_run_one, jobs))
    else:
        outs = [_run_one(j) for j in jobs]
    results = [None] * config.replications
    for i, out in zip(indices, outs):
        results[i] = out
    return aggregate(results, np.array(config.checkpoints, dtype=np.int64), mu_star)


def _mean_se(stack):
    mean = stack.mean(axis=0)
    if stack.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, stack.std(axis=0, ddof=1) / math.sqrt(stack.shape[0])


def aggregate(results, steps, mu_star):
    cum = np.stack([r[0] for r in results])
    reg = np.stack([r[1] for r in results])
    counts = np.stack([r[2] for r in results]).mean(axis=0)
    rm, rse = _mean_se(cum)
    gm, gse = _mean_se(reg)
    with np.errstate(divide="ignore", invalid="ignore"):
        per_ln = np.where(steps > 1, gm / np.log(steps), np.nan)
    return RegretTrace(steps, rm, rse, gm, gse, per_ln, list(counts), mu_star, len(results))


# -- CSV ---------------------------------------------------------------------------

def fmt(x):
    return f"{x:.17g}"


def write_trace(trace, outdir):
    """Write ``trace.csv`` and one ``counts_<step>.csv`` per checkpoint; returns the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = [outdir / "trace.csv"]
    with open(paths[0], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in trace.rows():
            w.writerow([row[0]] + [fmt(x) for x in row[1:]])
    for step, counts in zip(trace.steps, trace.counts):
        p = outdir / f"counts_{int(step)}.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for r in counts:
                w.writerow([fmt(x) for x in r])
        paths.append(p)
    return paths


def read_trace(outdir):
    """Load a trace written by :func:`write_trace`."""
    outdir = Path(outdir)
    with open(outdir / "trace.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != TRACE_COLUMNS:
            raise ParseError(f"unexpected trace header {header}", line=1)
        rows = [[int(r[0])] + [float(x) for x in r[1:]] for r in reader]
    cols = list(zip(*rows))
    steps = np.array(cols[0], dtype=np.int64)
    counts = []
    for s in steps:
        with open(outdir / f"counts_{s}.csv", newline="") as fh:
            counts.append(np.array([[float(x) for x in r] for r in csv.reader(fh)]))
    return RegretTrace(steps, *(np.array(c) for c in cols[1:]), counts=counts, replications=0)


def sweep(config, values, workers=1):
    """Run the config once per constant L; returns {L: RegretTrace}."""
    out = {}
    for L in values:
        cfg = replace(config, policy="mlmr", schedule=ConstantL(float(L)), L=float(L))
        out[float(L)] = run(cfg, workers=workers)
    return out


def write_sweep(traces, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["L", "step", "regret_mean", "regret_se", "regret_per_ln_n"])
        for L, tr in traces.items():
            for k in range(len(tr.steps)):
                w.writerow([fmt(L), int(tr.steps[k]), fmt(tr.regret_mean[k]), fmt(tr.regret_se[k]),
                            fmt(tr.regret_per_ln_n[k])])
    return path


def default_output_dir():
    return os.environ.get(OUTPUT_ENV, "out")


def shipped_config(name):
    """Path of a config bundled with the package (``example1.cfg``, ``example2.cfg``)."""
    p = Path(__file__).parent / "configs" / name
    if not p.exists():
        raise MLMRError(f"no shipped config named {name!r}")
    return p
