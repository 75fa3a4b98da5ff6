"""Run records, the append-only store, CSV export, and the CLI surface."""
import json
import time
from fractions import Fraction

import pytest

from lampwalk import RunConfig, RunRecord, Store, write_csv
from lampwalk.cli import main
from lampwalk.records import (
    StoreConflictError,
    StoreLockedError,
    canonical_json,
    CSV_COLUMNS,
)


def _record(metric_value=0.5):
    cfg = RunConfig(command="demo", params={"n": 4, "mode": "rational"},
                    outputs={"csv": "out.csv"})
    rec = RunRecord.begin(cfg, "0.1.0")
    rec.add("metric_a", 4, metric_value, stderr=0.01, mode="mc")
    rec.add("metric_b", 4, Fraction(1, 3), mode="rational")
    rec.close()
    return rec


def test_run_config_round_trip():
    cfg = RunConfig(command="demo",
                    params={"n": 4, "grid": [1, 2], "word": None},
                    outputs={"csv": "a.csv"})
    text = cfg.to_text()
    back = RunConfig.from_text(text)
    assert back.command == cfg.command
    assert back.params == cfg.params
    assert back.outputs == cfg.outputs
    with pytest.raises(ValueError):
        RunConfig.from_text("n = 4\n")  # no command line


def test_config_hash_semantics():
    a = RunConfig("demo", {"n": 4, "mode": "rational"})
    b = RunConfig("demo", {"mode": "rational", "n": 4},
                  outputs={"csv": "elsewhere.csv"})
    assert a.config_hash() == b.config_hash()  # order and outputs excluded
    c = RunConfig("demo", {"n": 5, "mode": "rational"})
    assert c.config_hash() != a.config_hash()
    assert len(a.config_hash()) == 16


def test_payload_digest_ignores_timestamps():
    rec1 = _record()
    rec2 = _record()
    rec2.started = "2020-01-01T00:00:00+00:00"
    rec2.finished = "2020-01-01T00:00:01+00:00"
    assert rec1.finished != rec2.finished
    assert rec1.payload_digest() == rec2.payload_digest()
    assert rec1.payload_digest() != _record(0.75).payload_digest()


def test_canonical_json_handles_fractions():
    blob = canonical_json({"x": Fraction(1, 3), "y": (1, 2)})
    data = json.loads(blob)
    assert data["x"] == {"__fraction__": "1/3"}
    assert data["y"] == [1, 2]


def test_store_save_and_reload(tmp_path):
    store = Store(tmp_path / "store")
    rec = _record()
    path, created = store.save(rec)
    assert created
    again, created2 = store.save(_record())
    assert not created2
    assert again == path
    loaded = store.load_all()
    assert len(loaded) == 1
    assert loaded[0].to_dict() == rec.to_dict() or \
        loaded[0].payload_digest() == rec.payload_digest()


def test_store_conflict(tmp_path):
    store = Store(tmp_path / "store")
    store.save(_record(0.5))
    with pytest.raises(StoreConflictError):
        store.save(_record(0.9))


def test_store_lock_times_out(tmp_path):
    root = tmp_path / "store"
    store = Store(root)
    store.save(_record())  # creates the directory
    lock = root / ".lock"
    lock.write_text("held")
    t0 = time.monotonic()
    with pytest.raises(StoreLockedError):
        store.save(_record(0.9))
    assert time.monotonic() - t0 >= 4.0


def test_store_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv("LAMPWALK_STORE", str(tmp_path / "envstore"))
    store = Store()
    store.save(_record())
    assert (tmp_path / "envstore").is_dir()


def test_write_csv(tmp_path):
    rec = _record()
    out = tmp_path / "rows.csv"
    write_csv(rec, out)
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith("metric_a,4,0.5,0.01,mc")
    # fractions become floats in the numeric column
    assert lines[2].split(",")[2] == repr(1 / 3)
    assert lines[2].split(",")[3] == ""


# ---------------------------------------------------------------------------
# CLI


@pytest.fixture(autouse=True)
def _isolated_store(tmp_path, monkeypatch):
    # keep CLI runs without --store away from the CWD default directory
    monkeypatch.setenv("LAMPWALK_STORE", str(tmp_path / "default-store"))


def test_cli_version_and_usage(capsys):
    assert main(["--version"]) == 0
    assert "lampwalk" in capsys.readouterr().out
    assert main(["no-such-command"]) == 2
    assert main(["exact-lamplighter"]) == 2  # missing required flags
    assert main(["drift"]) == 2  # needs --group or --inner


def test_cli_exact_lamplighter(tmp_path, capsys):
    store = str(tmp_path / "store")
    args = ["exact-lamplighter", "--lamp-order", "2", "--n", "6",
            "--mode", "rational", "--check-invariance",
            "--store", store]
    assert main(args) == 0
    out = capsys.readouterr().out
    assert "record" in out
    # rerun: the identical payload is recognized, not duplicated
    assert main(args) == 0
    out = capsys.readouterr().out
    assert "matches stored payload" in out
    files = list((tmp_path / "store").glob("*.json"))
    assert len(files) == 1


def test_cli_profiles_and_json(capsys):
    args = ["exact-lamplighter", "--lamp-order", "2", "--n", "12",
            "--mode", "float", "--entropy-tv-max", "14",
            "--radius-eps", "0.1", "--constancy-eps", "0.1",
            "--samples", "128", "--json"]
    assert main(args) == 0
    out = capsys.readouterr().out
    # the JSON blob is printed last, starting at the first bare "{" line
    blob = out[out.index("\n{") + 1:]
    data = json.loads(blob)
    metrics = {row["metric"] for row in data["metrics"]}
    assert {"entropy", "invariance_radius", "constancy_radius"} <= metrics


def test_cli_free_and_caps(tmp_path, capsys):
    csv_path = tmp_path / "free.csv"
    assert main(["free", "--rank", "2", "--n", "6", "--mode", "rational",
                 "--word", "x1 x2 x1", "--cancel-k", "1",
                 "--csv", str(csv_path)]) == 0
    text = csv_path.read_text()
    assert "point_prob" in text
    assert "cancellation_prob" in text
    capsys.readouterr()
    # the exact mode cap stops runaway table sizes
    assert main(["free", "--rank", "2", "--n", "500",
                 "--mode", "rational"]) == 3
    err = capsys.readouterr().err
    assert "rational_steps" in err
    # explicit cap overrides lift it
    assert main(["free", "--rank", "2", "--n", "500", "--mode", "rational",
                 "--cap", "rational_steps=600"]) == 0
    assert main(["free", "--rank", "2", "--n", "10",
                 "--cap", "bogus_cap=5"]) == 2
    assert main(["free", "--rank", "2", "--n", "10",
                 "--cancel-k", "1"]) == 2  # cancel-k without word


def test_cli_drift_and_cover(tmp_path):
    store = str(tmp_path / "store")
    assert main(["drift", "--group", "z", "--grid", "16,64",
                 "--samples", "64", "--store", store]) == 0
    assert main(["drift", "--inner", "1", "--grid", "16,64",
                 "--samples", "64", "--store", store]) == 0
    assert main(["drift", "--group", "z", "--inner", "1",
                 "--grid", "16,64"]) == 2
    assert main(["cover", "--grid", "64,256", "--samples", "8",
                 "--store", store]) == 0
    assert len(list((tmp_path / "store").glob("*.json"))) == 3


def test_cli_invariance(tmp_path):
    assert main(["invariance", "--lamp-order", "2", "--n", "200",
                 "--g-lamp", "0,0:1", "--samples", "64"]) == 0
    assert main(["invariance", "--lamp-order", "2", "--n", "100",
                 "--g-base", "1,0", "--samples", "32"]) == 0
    assert main(["invariance", "--lamp-order", "2", "--n", "100",
                 "--g-base", "1,0", "--g-lamp", "0,0:1"]) == 2  # mixed


def test_cli_config_file(tmp_path, capsys):
    store = str(tmp_path / "store")
    cfg = tmp_path / "run.cfg"
    cfg.write_text('command = free\nrank = 2\nn = 6\n'
                   'mode = "rational"\n')
    assert main(["free", "--config", str(cfg), "--store", store]) == 0
    first = capsys.readouterr().out
    # the same parameters as flags produce the same config hash
    assert main(["free", "--rank", "2", "--n", "6", "--mode", "rational",
                 "--store", store]) == 0
    second = capsys.readouterr().out
    assert "matches stored payload" in second
    def record_hash(out):
        line = next(l for l in out.splitlines() if l.startswith("record "))
        return line.split()[1]

    h1 = record_hash(first)
    h2 = record_hash(second)
    assert len(h1) == 16 and h1 == h2
    bad = tmp_path / "bad.cfg"
    bad.write_text('command = free\nrank = 2\nn = 6\nbogus = 1\n')
    assert main(["free", "--config", str(bad)]) == 2


def test_cli_determinism_conflict(tmp_path, capsys):
    store = tmp_path / "store"
    args = ["exact-lamplighter", "--lamp-order", "2", "--n", "4",
            "--store", str(store)]
    assert main(args) == 0
    capsys.readouterr()
    # simulate a stored run whose payload disagrees with a fresh rerun
    target = next(store.glob("*.json"))
    data = json.loads(target.read_text())
    data["payload_digest"] = "0" * 64
    target.write_text(json.dumps(data))
    assert main(args) == 1
    assert "determinism" in capsys.readouterr().err


def test_cli_report(tmp_path, capsys):
    store = str(tmp_path / "store")
    assert main(["report", "--store", store]) == 0
    assert "no stored runs" in capsys.readouterr().out
    main(["exact-lamplighter", "--lamp-order", "2", "--n", "8",
          "--mode", "rational", "--check-invariance", "--store", store])
    main(["cover", "--grid", "64,256", "--samples", "8", "--store", store])
    capsys.readouterr()
    merged = tmp_path / "merged.csv"
    assert main(["report", "--store", store, "--csv", str(merged)]) == 0
    out = capsys.readouterr().out
    assert "invariance_violations" in out
    assert merged.exists()
    header = merged.read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
