"""Run configuration, run records, and the on-disk result store.

A run is identified by the hash of its canonical config; records land in
a directory of JSON files named by that hash, which keeps the store
diffable and append-only.  A lock file serializes writers.  CSV exports
carry one row per (metric, n) in a fixed five-column schema.
"""
from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction

from .errors import LampwalkError

STORE_ENV = "LAMPWALK_STORE"
DEFAULT_STORE = "lampwalk-store"
CSV_COLUMNS = ("metric", "n", "value", "stderr", "mode")


class StoreLockedError(LampwalkError):
    """Another writer holds the store lock."""


class StoreConflictError(LampwalkError):
    """A stored record under the same config hash carries a different
    payload; determinism is broken somewhere and nothing is
    overwritten."""


def _jsonable(x):
    if isinstance(x, Fraction):
        return {"__fraction__": f"{x.numerator}/{x.denominator}"}
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item") and callable(x.item) and not isinstance(
            x, (int, float, str, bool)):
        return _jsonable(x.item())  # numpy scalars
    return x


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs to rerun deterministically.

    `params` is a flat mapping of documented keys to scalars; commands
    reject keys they do not understand rather than ignoring them.
    `outputs` names where results go (csv path, store directory); it
    round-trips through the config file but stays out of the hash, which
    identifies inputs only.
    """

    command: str
    params: dict
    outputs: dict = field(default_factory=dict)

    def canonical(self) -> dict:
        return {"command": self.command, "params": _jsonable(self.params)}

    def config_hash(self) -> str:
        digest = hashlib.sha256(canonical_json(self.canonical()).encode())
        return digest.hexdigest()[:16]

    def to_text(self) -> str:
        lines = [f"command = {self.command}"]
        for k in sorted(self.params):
            lines.append(f"{k} = {json.dumps(_jsonable(self.params[k]))}")
        for k in sorted(self.outputs):
            lines.append(f"output.{k} = {json.dumps(_jsonable(self.outputs[k]))}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str, command: str | None = None) -> "RunConfig":
        params = {}
        outputs = {}
        cmd = command
        for ln, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {ln}: expected key = value")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key == "command":
                cmd = val
                continue
            try:
                parsed = json.loads(val)
            except json.JSONDecodeError:
                parsed = val
            if key.startswith("output."):
                outputs[key[len("output."):]] = parsed
            else:
                params[key] = parsed
        if cmd is None:
            raise ValueError("config text names no command")
        return RunConfig(cmd, params, outputs)


@dataclass
class RunRecord:
    config: RunConfig
    version: str
    started: str = ""
    finished: str = ""
    status: str = "ok"  # ok | violation | warning
    metrics: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @staticmethod
    def begin(config: RunConfig, version: str) -> "RunRecord":
        return RunRecord(config=config, version=version,
                         started=_now())

    def add(self, metric: str, n, value, stderr=None, mode=None) -> None:
        self.metrics.append({"metric": metric, "n": n,
                             "value": _jsonable(value),
                             "stderr": _jsonable(stderr), "mode": mode})

    def close(self) -> "RunRecord":
        self.finished = _now()
        return self

    def payload_digest(self) -> str:
        body = {"config": self.config.canonical(), "version": self.version,
                "status": self.status, "metrics": _jsonable(self.metrics),
                "extras": _jsonable(self.extras)}
        return hashlib.sha256(canonical_json(body).encode()).hexdigest()

    def to_dict(self) -> dict:
        return {"config": self.config.canonical(),
                "outputs": _jsonable(self.config.outputs),
                "config_hash": self.config.config_hash(),
                "payload_digest": self.payload_digest(),
                "version": self.version,
                "started": self.started, "finished": self.finished,
                "status": self.status,
                "metrics": _jsonable(self.metrics),
                "extras": _jsonable(self.extras)}

    @staticmethod
    def from_dict(d: dict) -> "RunRecord":
        cfg = RunConfig(d["config"]["command"], d["config"]["params"],
                        d.get("outputs", {}))
        return RunRecord(config=cfg, version=d.get("version", ""),
                         started=d.get("started", ""),
                         finished=d.get("finished", ""),
                         status=d.get("status", "ok"),
                         metrics=d.get("metrics", []),
                         extras=d.get("extras", {}))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class Store:
    """Directory of RunRecord JSON files named by config hash."""

    def __init__(self, path: str | None = None) -> None:
        self.path = path or os.environ.get(STORE_ENV) or DEFAULT_STORE

    def _lock_path(self) -> str:
        return os.path.join(self.path, ".lock")

    def _acquire(self, timeout: float = 5.0):
        os.makedirs(self.path, exist_ok=True)
        deadline = time.monotonic() + timeout
        while True:
            try:
                return os.open(self._lock_path(),
                               os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            except FileExistsError:
                if time.monotonic() >= deadline:
                    raise StoreLockedError(
                        f"store {self.path} is locked by another writer")
                time.sleep(0.05)

    def save(self, record: RunRecord):
        """Persist; returns (path, created).  An existing record under
        the same config hash must carry an identical payload."""
        fd = self._acquire()
        try:
            name = record.config.config_hash() + ".json"
            target = os.path.join(self.path, name)
            if os.path.exists(target):
                with open(target, encoding="utf-8") as fh:
                    old = json.load(fh)
                if old.get("payload_digest") != record.payload_digest():
                    raise StoreConflictError(
                        f"record {name} exists with a different payload")
                return target, False
            tmp = target + ".tmp"
            with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
                json.dump(record.to_dict(), fh, indent=1, sort_keys=True)
                fh.write("\n")
            os.replace(tmp, target)
            return target, True
        finally:
            os.close(fd)
            os.unlink(self._lock_path())

    def load_all(self) -> list:
        if not os.path.isdir(self.path):
            return []
        out = []
        for name in sorted(os.listdir(self.path)):
            if not name.endswith(".json"):
                continue
            with open(os.path.join(self.path, name), encoding="utf-8") as fh:
                out.append(RunRecord.from_dict(json.load(fh)))
        return out


def _csv_number(x) -> str:
    if x is None:
        return ""
    if isinstance(x, dict) and "__fraction__" in x:
        num, den = x["__fraction__"].split("/")
        x = int(num) / int(den)
    if isinstance(x, Fraction):
        x = int(x.numerator) / int(x.denominator)
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return repr(x)  # shortest round-trip decimal
    return str(x)


def write_csv(record: RunRecord, path: str) -> None:
    """One row per metric entry; header; UTF-8; LF endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in record.metrics:
            fh.write(",".join((
                str(row["metric"]),
                _csv_number(row["n"]),
                _csv_number(row["value"]),
                _csv_number(row["stderr"]),
                str(row["mode"]) if row["mode"] is not None else "",
            )) + "\n")
