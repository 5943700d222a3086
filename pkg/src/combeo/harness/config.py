"""Experiment configuration: JSON parsing, validation and matrix expansion.

A config names benchmarks, optimizers and seeds; every benchmark is crossed
with every optimizer and every seed. Extra hand-picked pairs go in ``cases``.

    {
      "name": "table2-desk",
      "outdir": "results/table2",
      "plot": true,
      "seeds": [0, 1, 2, 3, 4],
      "defaults": {"N": 50, "M": 3000, "target_error": 1e-3},
      "benchmarks": [{"id": "B1", "n": 10}, {"id": "B2", "n": 10}],
      "optimizers": [{"id": "pc1"}, {"id": "pc3"}, {"id": "pso"}]
    }

``repetitions`` (with optional ``base_seed``) may replace ``seeds``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..benchmarks import ALL_IDS, BenchmarkConfigError, make_instance

OPTIMIZER_IDS = ("pc1", "pc2", "pc3", "de", "pso")

# keys every optimizer accepts; "M" maps to it_max for the baselines
COMMON_PARAMS = {"N", "M", "target_error", "error_metric"}
OPTIMIZER_PARAMS = {
    "pc1": {"alpha", "beta_hat", "r", "r_c", "dtau", "tau0", "varsigma", "per_particle_zeta", "numerator_form", "sense"},
    "pc2": {"alpha", "beta_hat", "acceptance_probability", "r_c", "dtau", "tau0", "varsigma", "per_particle_zeta",
            "numerator_form", "sense"},
    "pc3": {"alpha", "beta_hat", "r_c", "dtau", "tau0", "theta_max", "theta_min", "per_particle_zeta",
            "numerator_form", "sense"},
    "de": {"CR", "F_scale", "sense"},
    "pso": {"w_max", "w_min", "c1", "c2", "v_max_fraction", "sense"},
}
TOP_KEYS = {"name", "outdir", "plot", "seeds", "repetitions", "base_seed", "defaults", "benchmarks", "optimizers", "cases"}
BENCH_KEYS = {"id", "n", "m", "instance_seed", "shift", "ackley_form"}
OPT_KEYS = {"id", "label", "params"}
CASE_KEYS = {"benchmark", "optimizer", "params", "seeds", "repetitions", "base_seed"}


class ConfigError(ValueError):
    """All validation problems found in a config, one message per entry of ``errors``."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class BenchmarkSpec:
    id: str
    n: int
    m: int | None = None
    # None: the instance is drawn with the run seed
    instance_seed: int | None = None
    shift: bool | None = None
    ackley_form: str = "printed"

    @property
    def label(self) -> str:
        return f"{self.id}-n{self.n}" + ("" if self.m is None else f"-m{self.m}")

    def instance(self, run_seed: int):
        seed = run_seed if self.instance_seed is None else self.instance_seed
        return make_instance(self.id, self.n, self.m, seed=seed, shift=self.shift, ackley_form=self.ackley_form)

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class OptimizerSpec:
    id: str
    label: str
    params: tuple = ()

    def param_dict(self) -> dict:
        return dict(self.params)

    def to_dict(self) -> dict:
        return {"id": self.id, "label": self.label, "params": self.param_dict()}


@dataclass(frozen=True)
class RunSpec:
    """One (benchmark, optimizer, seed) unit of work."""

    case_index: int
    benchmark: BenchmarkSpec
    optimizer: OptimizerSpec
    seed: int

    @property
    def case_id(self) -> str:
        return f"{self.benchmark.label}__{self.optimizer.label}"

    @property
    def sort_key(self) -> tuple:
        return (self.case_index, self.seed)


@dataclass
class ExperimentConfig:
    name: str
    outdir: str | None
    plot: bool
    runs: list[RunSpec] = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    @property
    def cases(self) -> list[tuple[BenchmarkSpec, OptimizerSpec]]:
        seen: dict[int, tuple] = {}
        for r in self.runs:
            seen.setdefault(r.case_index, (r.benchmark, r.optimizer))
        return [seen[k] for k in sorted(seen)]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Same cases, each run once with ``seed``."""
        runs, done = [], set()
        for r in self.runs:
            if r.case_index not in done:
                done.add(r.case_index)
                runs.append(RunSpec(r.case_index, r.benchmark, r.optimizer, seed))
        return ExperimentConfig(self.name, self.outdir, self.plot, runs, self.raw)


def _line_of(text: str | None, key: str) -> str:
    if not text:
        return ""
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return "" if m is None else f" (line {text.count(chr(10), 0, m.start()) + 1})"


class _Checker:
    def __init__(self, text: str | None):
        self.text = text
        self.errors: list[str] = []

    def err(self, path: str, msg: str, key: str | None = None):
        self.errors.append(f"{path}: {msg}{_line_of(self.text, key) if key else ''}")

    def unknown(self, obj: dict, allowed: set, path: str):
        for k in sorted(set(obj) - allowed):
            self.err(f"{path}.{k}", "unknown key", k)

    def int_field(self, obj: dict, key: str, path: str, minimum: int | None = None, required: bool = False):
        if key not in obj:
            if required:
                self.err(path, f"missing required key {key!r}")
            return None
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.err(f"{path}.{key}", f"must be an integer, got {v!r}", key)
            return None
        if minimum is not None and v < minimum:
            self.err(f"{path}.{key}", f"must be >= {minimum}, got {v}", key)
            return None
        return v


def _seeds(c: _Checker, obj: dict, path: str, fallback: list[int] | None) -> list[int] | None:
    if "seeds" in obj and "repetitions" in obj:
        c.err(path, "give either 'seeds' or 'repetitions', not both", "repetitions")
        return None
    if "seeds" in obj:
        s = obj["seeds"]
        if not isinstance(s, list) or not s or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in s):
            c.err(f"{path}.seeds", "must be a non-empty list of non-negative integers", "seeds")
            return None
        if len(set(s)) != len(s):
            c.err(f"{path}.seeds", "seeds must be distinct", "seeds")
            return None
        return list(s)
    if "repetitions" in obj:
        reps = c.int_field(obj, "repetitions", path, minimum=1)
        base = c.int_field(obj, "base_seed", path, minimum=0) if "base_seed" in obj else 0
        if reps is None or base is None:
            return None
        return list(range(base, base + reps))
    return fallback


def _benchmark(c: _Checker, b: Any, path: str) -> BenchmarkSpec | None:
    if isinstance(b, str):
        b = {"id": b}
    if not isinstance(b, dict):
        c.err(path, "benchmark must be an object or an id string")
        return None
    n_err = len(c.errors)
    c.unknown(b, BENCH_KEYS, path)
    fid = b.get("id")
    if fid not in ALL_IDS:
        c.err(f"{path}.id", f"unknown benchmark id {fid!r}", "id")
    n = c.int_field(b, "n", path, minimum=1, required=True)
    m = c.int_field(b, "m", path, minimum=1)
    iseed = c.int_field(b, "instance_seed", path, minimum=0)
    shift = b.get("shift")
    if shift is not None and not isinstance(shift, bool):
        c.err(f"{path}.shift", "must be true, false or null", "shift")
    form = b.get("ackley_form", "printed")
    if form not in ("printed", "standard"):
        c.err(f"{path}.ackley_form", f"must be 'printed' or 'standard', got {form!r}", "ackley_form")
    if len(c.errors) > n_err:
        return None
    spec = BenchmarkSpec(fid, n, m, iseed, shift, form)
    try:
        spec.instance(0 if iseed is None else iseed)
    except BenchmarkConfigError as exc:
        c.err(path, str(exc))
        return None
    return spec


def _optimizer(c: _Checker, o: Any, path: str, defaults: dict) -> OptimizerSpec | None:
    if isinstance(o, str):
        o = {"id": o}
    if not isinstance(o, dict):
        c.err(path, "optimizer must be an object or an id string")
        return None
    n_err = len(c.errors)
    c.unknown(o, OPT_KEYS, path)
    oid = o.get("id")
    if oid not in OPTIMIZER_IDS:
        c.err(f"{path}.id", f"unknown optimizer id {oid!r} (expected one of {', '.join(OPTIMIZER_IDS)})", "id")
        return None
    params = o.get("params", {})
    if not isinstance(params, dict):
        c.err(f"{path}.params", "must be an object", "params")
        return None
    allowed = COMMON_PARAMS | OPTIMIZER_PARAMS[oid]
    merged = {k: v for k, v in defaults.items() if k in allowed}
    for k in sorted(set(params) - allowed):
        c.err(f"{path}.params.{k}", f"unknown parameter for {oid}", k)
    merged.update({k: v for k, v in params.items() if k in allowed})
    label = o.get("label", oid)
    if not isinstance(label, str) or not re.fullmatch(r"[A-Za-z0-9_.+-]+", label):
        c.err(f"{path}.label", "must be a non-empty string of [A-Za-z0-9_.+-]", "label")
    if len(c.errors) > n_err:
        return None
    problems = _param_problems(oid, merged)
    for p in problems:
        c.err(f"{path}.params", p)
    if problems:
        return None
    return OptimizerSpec(oid, label, tuple(sorted(merged.items())))


def _param_problems(oid: str, params: dict) -> list[str]:
    """Range checks delegated to the optimizer config classes."""
    from .runner import build_config

    try:
        build_config(oid, params, seed=0)
    except (TypeError, ValueError) as exc:
        return [str(exc)]
    return []


def parse_config_dict(doc: Any, text: str | None = None) -> ExperimentConfig:
    c = _Checker(text)
    if not isinstance(doc, dict):
        raise ConfigError(["$: config must be a JSON object"])
    c.unknown(doc, TOP_KEYS, "$")
    name = doc.get("name", "experiment")
    if not isinstance(name, str):
        c.err("$.name", "must be a string", "name")
    outdir = doc.get("outdir")
    if outdir is not None and not isinstance(outdir, str):
        c.err("$.outdir", "must be a string", "outdir")
    plot = doc.get("plot", False)
    if not isinstance(plot, bool):
        c.err("$.plot", "must be true or false", "plot")
    defaults = doc.get("defaults", {})
    if not isinstance(defaults, dict):
        c.err("$.defaults", "must be an object", "defaults")
        defaults = {}
    known = COMMON_PARAMS.union(*OPTIMIZER_PARAMS.values())
    for k in sorted(set(defaults) - known):
        c.err(f"$.defaults.{k}", "unknown parameter", k)
    seeds = _seeds(c, doc, "$", None)

    runs: list[RunSpec] = []
    case_index = 0
    benches = doc.get("benchmarks", [])
    opts = doc.get("optimizers", [])
    if not isinstance(benches, list) or not isinstance(opts, list):
        c.err("$", "'benchmarks' and 'optimizers' must be lists")
        benches, opts = [], []
    if bool(benches) != bool(opts):
        c.err("$", "'benchmarks' and 'optimizers' must both be given for the matrix")
    if benches and opts and seeds is None:
        c.err("$", "matrix runs need 'seeds' or 'repetitions'")
    bspecs = [_benchmark(c, b, f"$.benchmarks[{i}]") for i, b in enumerate(benches)]
    ospecs = [_optimizer(c, o, f"$.optimizers[{i}]", defaults) for i, o in enumerate(opts)]
    for b in bspecs:
        for o in ospecs:
            if b is not None and o is not None and seeds is not None:
                runs.extend(RunSpec(case_index, b, o, s) for s in seeds)
            case_index += 1

    cases = doc.get("cases", [])
    if not isinstance(cases, list):
        c.err("$.cases", "must be a list", "cases")
        cases = []
    for i, case in enumerate(cases):
        path = f"$.cases[{i}]"
        if not isinstance(case, dict):
            c.err(path, "case must be an object")
            continue
        c.unknown(case, CASE_KEYS, path)
        b = _benchmark(c, case.get("benchmark"), f"{path}.benchmark")
        ospec = case.get("optimizer")
        if isinstance(ospec, str):
            ospec = {"id": ospec}
        if isinstance(ospec, dict) and "params" in case:
            ospec = {**ospec, "params": {**ospec.get("params", {}), **case["params"]}}
        o = _optimizer(c, ospec, f"{path}.optimizer", defaults)
        s = _seeds(c, case, path, seeds)
        if s is None and b is not None and o is not None:
            c.err(path, "case needs 'seeds' or 'repetitions' (none given at top level either)")
        if b is not None and o is not None and s is not None:
            runs.extend(RunSpec(case_index, b, o, seed) for seed in s)
        case_index += 1

    labels: dict[str, int] = {}
    for r in runs:
        if labels.setdefault(r.case_id, r.case_index) != r.case_index:
            c.err("$", f"duplicate case {r.case_id!r}; give the optimizers distinct labels")
            break
    if c.errors:
        raise ConfigError(c.errors)
    return ExperimentConfig(name, outdir, plot, runs, doc)


def parse_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file; raises ConfigError listing every problem."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read config ({exc.strerror})"]) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from exc
    return parse_config_dict(doc, text)
