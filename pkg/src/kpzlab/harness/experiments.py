"""Experiment framework: contexts, criteria, output files and the registry."""

import csv
import json
import os
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np

from ..errors import DomainError
from .config import config_hash, resolve
from .runner import chunks, ordered_map
from .streams import derive_stream, experiment_key

ARTIFACT_VERSION = "0.1.0"
TIERS = ("fast", "full")


@dataclass
class Criterion:
    id: str
    name: str
    passed: bool
    hard: bool
    detail: dict = field(default_factory=dict)


@dataclass
class Outcome:
    columns: list
    rows: list
    summary: dict
    criteria: list
    extra: dict = field(default_factory=dict)     # file stem -> (columns, rows)


@dataclass(frozen=True)
class Experiment:
    name: str
    body: object
    columns: tuple
    defaults: dict
    fast: dict
    about: str


REGISTRY = {}


def register(name, columns, defaults, fast=None, about=""):
    def deco(fn):
        REGISTRY[name] = Experiment(name, fn, tuple(columns), dict(defaults), dict(fast or {}), about)
        return fn
    return deco


def _call(fn, seed, key, kwargs, task):
    rep, n = task
    return fn(derive_stream(seed, key, rep), n, **kwargs)


class Context:
    """What an experiment body sees: parameters, seeded streams and a parallel map."""

    def __init__(self, name, params, seed, workers=1, tier="full"):
        self.name = name
        self.params = params
        self.seed = int(seed)
        self.workers = int(workers)
        self.tier = tier
        self.streams = {}

    def _key(self, tag):
        return self.name if tag is None else f"{self.name}/{tag}"

    def _note(self, key, reps):
        self.streams[key] = max(self.streams.get(key, 0), reps)

    def stream(self, rep=0, tag=None):
        key = self._key(tag)
        self._note(key, rep + 1)
        return derive_stream(self.seed, key, rep)

    def map(self, fn, total, chunk, tag=None, **kwargs):
        """Run ``fn(stream, draws, **kwargs)`` over fixed chunks of ``total``;
        results are in replication order."""
        key = self._key(tag)
        tasks = chunks(int(total), int(chunk))
        self._note(key, len(tasks))
        return ordered_map(partial(_call, fn, self.seed, key, kwargs), tasks, self.workers)

    def criterion(self, cid, name, passed, stochastic=False, monitor=False, **detail):
        """Sampling-based criteria only gate in the full tier; monitors never gate."""
        hard = not monitor and not (stochastic and self.tier == "fast")
        return Criterion(cid, name, bool(passed), hard, detail)

    def substream_keys(self):
        return [{"stream": k, "crc32": experiment_key(k), "replications": n,
                 "key": "[seed & 0xffffffff, seed >> 32, crc32, replication]"}
                for k, n in sorted(self.streams.items())]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def params_for(name, tier="full", overrides=None):
    exp = lookup(name)
    if tier not in TIERS:
        raise DomainError(f"unknown tier {tier!r}; choose from {TIERS}")
    base = resolve(exp.defaults, exp.fast if tier == "fast" else None)
    return resolve(exp.defaults, base, overrides)


def lookup(name):
    if name not in REGISTRY:
        raise DomainError(f"unknown experiment {name!r}; run 'kpzlab list' for the registry")
    return REGISTRY[name]


def execute(name, params, seed, workers=1, tier="full"):
    """Run one experiment; returns (Outcome, Context).  draws = 0 gives an empty, vacuous outcome."""
    exp = lookup(name)
    ctx = Context(name, params, seed, workers, tier)
    if params.get("draws", None) == 0:
        return Outcome(list(exp.columns), [], {"vacuous": True}, []), ctx
    out = exp.body(ctx)
    if list(out.columns) != list(exp.columns):
        raise RuntimeError(f"{name}: columns {out.columns} differ from the declared schema")
    return out, ctx


def experiment_record(name, params, outcome, ctx, wall_time=None):
    files = [f"{name}.csv", f"{name}.json"] + [f"{stem}.csv" for stem in sorted(outcome.extra)]
    return {"params": params, "config_hash": config_hash({"experiment": name, "params": params}),
            "substreams": ctx.substream_keys(), "files": files,
            "criteria": [asdict(c) for c in outcome.criteria], "wall_time": wall_time}


def write_outputs(out_dir, name, outcome):
    os.makedirs(out_dir, exist_ok=True)
    write_csv(os.path.join(out_dir, f"{name}.csv"), outcome.columns, outcome.rows)
    write_json(os.path.join(out_dir, f"{name}.json"), {"experiment": name, "summary": outcome.summary,
                                                       "criteria": [asdict(c) for c in outcome.criteria]})
    for stem, (cols, rows) in sorted(outcome.extra.items()):
        write_csv(os.path.join(out_dir, f"{stem}.csv"), cols, rows)


def write_manifest(out_dir, seed, records, tier=None):
    manifest = {"artifact_version": ARTIFACT_VERSION, "master_seed": int(seed), "tier": tier,
                "config_hash": config_hash({k: v["params"] for k, v in records.items()}),
                "experiments": records}
    write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return manifest


def hard_failures(records):
    return [(name, c["id"], c["name"]) for name, rec in records.items()
            for c in rec["criteria"] if c["hard"] and not c["passed"]]


def format_criterion(name, c):
    kind = "gating" if c["hard"] else "non-gating"
    return f"{'PASS' if c['passed'] else 'FAIL'} [{kind}] {c['id']} {name}: {c['name']}"


def load_catalog():
    from . import catalog  # noqa: F401  (registers the experiments)
    return REGISTRY

