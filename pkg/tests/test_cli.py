import json
import random
from importlib import resources

import pytest

from dbcn.cli import main
from dbcn.catalog import ChunkSeqDiff
from dbcn.delta import SeqEditOp
from dbcn.naming import parse_name
from dbcn.publish import trees_in
from dbcn.store import ObjectStore

NAME = "/parc/csl/paper.doc"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def keyfile(tmp_path, capsys):
    path = tmp_path / "key.json"
    assert run(capsys, "keygen", "--out", path, "--seed", 1)[0] == 0
    return path


def publish(capsys, tmp_path, keyfile, data, variant="v5", store="pub"):
    f = tmp_path / "in.bin"
    f.write_bytes(data)
    code, out, err = run(capsys, "publish", f, "--name", NAME, "--store", tmp_path / store,
                         "--key", keyfile, "--variant", variant, "--json")
    assert code == 0, err
    return json.loads(out)


def test_keygen_is_seeded(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "keygen", "--out", a, "--seed", 5)
    run(capsys, "keygen", "--out", b, "--seed", 5)
    assert a.read_text() == b.read_text()


def test_publish_to_empty_store_is_version_zero(tmp_path, capsys, keyfile):
    out = publish(capsys, tmp_path, keyfile, b"hello world")
    assert out["version"] == 0 and out["ground_truth"]


def test_publishing_same_file_twice_is_identity(tmp_path, capsys, keyfile):
    data = random.Random(0).randbytes(70_000)
    first = publish(capsys, tmp_path, keyfile, data)
    second = publish(capsys, tmp_path, keyfile, data)
    assert second["version"] == 1 and second["new_objects"] == 0
    tree = trees_in(ObjectStore(tmp_path / "pub"))[parse_name(NAME)]
    body = tree[tree.digest_for(1)].body
    n = len(tree[tree.digest_for(0)].body.ids)
    assert isinstance(body, ChunkSeqDiff) and body.ops == (SeqEditOp.keep(0, n),)
    assert first["digest"] != second["digest"]


@pytest.mark.parametrize("variant", ["v1", "v2", "v3", "v4", "v5"])
def test_snapshots_round_trip_through_get(tmp_path, capsys, keyfile, variant):
    rng = random.Random(variant)
    data = rng.randbytes(40_000)
    snapshots = []
    for _ in range(4):
        snapshots.append(data)
        publish(capsys, tmp_path, keyfile, data, variant)
        at = rng.randint(0, len(data))
        data = data[:at] + rng.randbytes(700) + data[at + 200:]
    for v, expected in enumerate(snapshots):
        out = tmp_path / f"out{v}"
        code, text, err = run(capsys, "get", "--name", NAME, "--version", v, "--out", out,
                              "--store", tmp_path / "cache", "--remote-store", tmp_path / "pub",
                              "--trusted-keys", keyfile, "--json")
        assert code == 0, err
        assert out.read_bytes() == expected
        assert json.loads(text)["verified_catalogs"] >= 1
    code, text, _ = run(capsys, "verify", "--name", NAME, "--store", tmp_path / "cache",
                        "--trusted-keys", keyfile)
    assert code == 0 and text.count(": ok") == 4


def test_untrusted_key_exits_one(tmp_path, capsys, keyfile):
    publish(capsys, tmp_path, keyfile, b"abc" * 1000)
    stranger = tmp_path / "stranger.json"
    run(capsys, "keygen", "--out", stranger, "--seed", 2)
    code, _, err = run(capsys, "get", "--name", NAME, "--out", tmp_path / "o",
                       "--store", tmp_path / "pub", "--trusted-keys", stranger)
    assert code == 1 and "dbcn:" in err
    code, text, _ = run(capsys, "verify", "--name", NAME, "--store", tmp_path / "pub",
                        "--trusted-keys", stranger)
    assert code == 1 and "FAILED" in text


def test_corrupted_store_exits_one(tmp_path, capsys, keyfile):
    publish(capsys, tmp_path, keyfile, random.Random(1).randbytes(30_000), "v4")
    store = ObjectStore(tmp_path / "pub")
    victim = next(d for d, (kind, _) in store.index.items() if kind == "chunk")
    path = store.path_for(victim)
    path.write_bytes(path.read_bytes()[:-1] + b"?")
    code, _, _ = run(capsys, "get", "--name", NAME, "--out", tmp_path / "o",
                     "--store", tmp_path / "pub", "--trusted-keys", keyfile)
    assert code == 1


def test_usage_errors_exit_two(tmp_path, capsys):
    assert run(capsys, "publish")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "bench", bad, "--out", tmp_path / "o")[0] == 2
    bad.write_text(json.dumps({"edits": [{"version": 0, "op": "explode"}]}))
    assert run(capsys, "bench", bad, "--out", tmp_path / "o")[0] == 2
    assert run(capsys, "bench", tmp_path / "absent.json", "--out", tmp_path / "o")[0] == 2


def test_empty_scenario_writes_empty_outputs(tmp_path, capsys):
    sc = tmp_path / "empty.json"
    sc.write_text(json.dumps({"name": "empty", "seed": 1, "variant": "v5", "edits": []}))
    code, _, err = run(capsys, "bench", sc, "--out", tmp_path / "o")
    assert code == 0, err
    assert (tmp_path / "o" / "stats.jsonl").read_text() == ""
    assert (tmp_path / "o" / "stats.csv").read_text().count("\n") == 1
    assert not (tmp_path / "o" / "transfer.png").exists()


def test_bench_is_deterministic_and_plots(tmp_path, capsys):
    demo = resources.files("dbcn").joinpath("scenarios/demo.json")
    outputs = []
    for run_id in ("a", "b"):
        code, _, err = run(capsys, "bench", demo, "--variant", "all", "--out", tmp_path / run_id)
        assert code == 0, err
        outputs.append((tmp_path / run_id / "stats.jsonl").read_bytes())
    assert outputs[0] == outputs[1]
    assert len(outputs[0].splitlines()) == 5 * 8
    png = tmp_path / "a" / "transfer.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    code, text, _ = run(capsys, "stats", tmp_path / "a" / "stats.jsonl", "--json")
    assert code == 0 and json.loads(text)["rows"] == 40


def test_seed_flag_drives_unpinned_randomness(tmp_path, capsys):
    sc = tmp_path / "s.json"
    sc.write_text(json.dumps({"seed": 0, "edits": [
        {"version": 0, "op": "create", "length": 60000},
        {"version": 1, "op": "insert", "offset": 100, "length": 3000}]}))
    rows = {}
    for seed in (1, 1, 2):
        out = tmp_path / f"o{len(rows)}"
        run(capsys, "bench", sc, "--out", out, "--no-plot", "--seed", seed)
        rows.setdefault(seed, []).append((out / "stats.jsonl").read_text())
    assert rows[1][0] == rows[1][1]
    assert rows[1][0] != rows[2][0]


@pytest.mark.slow
def test_intro_demo_v5_saves_99_percent(tmp_path, capsys):
    intro = resources.files("dbcn").joinpath("scenarios/intro-10mib.json")
    code, text, err = run(capsys, "bench", intro, "--variant", "v5", "--out", tmp_path,
                          "--no-plot")
    assert code == 0, err
    rows = [json.loads(line) for line in (tmp_path / "stats.jsonl").read_text().splitlines()]
    assert rows[1]["version"] == 1 and rows[1]["savings_ratio"] >= 0.99
    assert "0.99" in text
