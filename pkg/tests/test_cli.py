import json

import pytest

from polargraph.cli import run
from polargraph.polar import read_design, read_sequence

SC_FAST = ["--decoder", "sc", "--batch-size", "64"]


def _manifest(path):
    return json.loads(open(str(path) + ".manifest.json").read())


def test_construct_bhattacharyya_all_tie_order(tmp_path):
    out = tmp_path / "q.txt"
    assert run(["construct", "--n", "4", "--method", "bhattacharyya", "--erasure-prob", "1",
                "--out-sequence", str(out)]) == 0
    assert list(read_sequence(out).order) == [3, 2, 1, 0]


def test_construct_beta_small_blocklength(tmp_path):
    out = tmp_path / "q.txt"
    assert run(["construct", "--n", "4", "--method", "beta", "--beta", "1.1892", "--out-sequence", str(out)]) == 0
    assert list(read_sequence(out).order) == [3, 2, 1, 0]
    assert _manifest(out)["outputs"] == [str(out)]


def test_construct_design_file(tmp_path):
    seq, design = tmp_path / "q.txt", tmp_path / "d.json"
    assert run(["construct", "--n", "128", "--beta", "1.159", "--k", "64", "--out-sequence", str(seq),
                "--out-design", str(design)]) == 0
    d = read_design(design)
    assert d.N == 128 and d.k == 64
    assert set(d.info_indices) == set(read_sequence(seq).order[:64])


def test_construct_rate_zero_design(tmp_path):
    design = tmp_path / "d.json"
    assert run(["construct", "--n", "8", "--k", "0", "--out-sequence", str(tmp_path / "q"),
                "--out-design", str(design)]) == 0
    assert json.loads(design.read_text()) == {"n": 8, "k": 0, "info_indices": []}


def _design(tmp_path, k=4, name="d.json"):
    path = tmp_path / name
    assert run(["construct", "--n", "8", "--k", str(k), "--out-sequence", str(tmp_path / "q.txt"),
                "--out-design", str(path)]) == 0
    return path


def test_simulate_rerun_from_manifest_is_byte_identical(tmp_path):
    d = _design(tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["simulate", "--design", str(d), "--snr", "1", "2", "--min-errors", "20", "--seed", "5",
                *SC_FAST, "--out", str(a)]) == 0
    m = _manifest(a)
    assert m["exit_code"] == 0 and m["outputs"] == [str(a)] and str(d) in m["inputs"]
    assert run(["simulate", "--config", str(a) + ".manifest.json", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0]
    assert header == "ebn0_db,n_fe,n_t,fer,lb,ub,gamma,method"


def test_config_files_supply_defaults_and_flags_override(tmp_path):
    d = _design(tmp_path)
    toml = tmp_path / "c.toml"
    toml.write_text(f'design = "{d}"\nsnr = [1.5]\nmin-errors = 5\ndecoder = "sc"\n')
    out = tmp_path / "o.csv"
    assert run(["simulate", "--config", str(toml), "--min-errors", "7", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 2 and rows[1].split(",")[1] == "7"
    js = tmp_path / "c.json"
    js.write_text(json.dumps({"design": str(d), "snr": [1.5], "min_errors": 5, "decoder": "sc"}))
    assert run(["simulate", "--config", str(js), "--out", str(out)]) == 0
    assert out.read_text().splitlines()[1].split(",")[1] == "5"


def test_unknown_config_key_is_a_usage_error(tmp_path):
    js = tmp_path / "c.json"
    js.write_text(json.dumps({"snr": [1.0], "frobnicate": 1}))
    assert run(["simulate", "--config", str(js)]) == 2


@pytest.mark.parametrize("argv", [
    ["construct", "--n", "12"],
    ["construct", "--n", "8", "--k", "9"],
    ["simulate", "--snr", "1"],
    ["compare", "--ebn0", "1"],
    ["design-single", "--n", "8", "--k", "4"],
    ["required-snr", "--k", "1"],
])
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(argv) == 2


def test_unreadable_input_exits_3(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(["simulate", "--design", str(tmp_path / "missing.json"), "--snr", "1"]) == 3
    assert run(["design-sequence", "--n", "8", "--ebn0", "1", "--checkpoint", str(tmp_path / "none"),
                "--resume"]) == 3


def test_compare_writes_ranking(tmp_path):
    good = _design(tmp_path, 4, "good.json")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 8, "k": 4, "info_indices": [0, 1, 2, 3]}))
    out = tmp_path / "r.csv"
    assert run(["compare", "--designs", str(good), str(bad), "--ebn0", "2", *SC_FAST, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "rank,mask_hex,k,n_fe,n_t,fer,lb,ub"
    assert lines[1].split(",")[1] == read_design(good).mask_hex


def test_budget_exhaustion_exits_4_with_manifest(tmp_path):
    designs = []
    for i, idx in enumerate(([3, 5, 6, 7], [1, 5, 6, 7], [3, 4, 6, 7])):
        p = tmp_path / f"d{i}.json"
        p.write_text(json.dumps({"n": 8, "k": 4, "info_indices": idx}))
        designs.append(str(p))
    out = tmp_path / "r.csv"
    assert run(["compare", "--designs", *designs, "--ebn0", "6", *SC_FAST, "--max-total-frames", "100",
                "--out", str(out)]) == 4
    assert _manifest(out)["exit_code"] == 4


def test_unresolved_compare_exits_4(tmp_path):
    # pure noise: every design fails almost every frame, so the race cannot separate them
    paths = []
    for drop in (0, 1, 2):
        p = tmp_path / f"d{drop}.json"
        p.write_text(json.dumps({"n": 8, "k": 7, "info_indices": [i for i in range(8) if i != drop]}))
        paths.append(str(p))
    out = tmp_path / "r.csv"
    code = run(["compare", "--designs", *paths, "--ebn0", "-30", *SC_FAST, "--max-trials-per-code", "200",
                "--out", str(out)])
    assert code == 4
    assert len(out.read_text().splitlines()) == 2


def test_design_single_outputs(tmp_path):
    out, ranked, log = tmp_path / "best.json", tmp_path / "ranked.csv", tmp_path / "log.csv"
    code = run(["design-single", "--n", "8", "--k", "4", "--ebn0", "2", "-L", "2", *SC_FAST,
                "--max-trials-per-code", "3000", "--out", str(out), "--ranked-out", str(ranked),
                "--log", str(log)])
    assert code in (0, 4)
    assert read_design(out).k == 4
    assert len(ranked.read_text().splitlines()) == 3
    assert log.read_text().startswith("iteration,k,best_mask_hex")


SEQ_ARGS = ["design-sequence", "--n", "8", "--k-start", "0", "--ebn0", "2", "-L", "1", *SC_FAST,
            "--max-trials-per-code", "2000"]


def test_design_sequence_outputs(tmp_path):
    out, est, log = tmp_path / "q.txt", tmp_path / "e.csv", tmp_path / "l.csv"
    assert run([*SEQ_ARGS, "--out", str(out), "--estimates-out", str(est), "--log", str(log)]) == 0
    assert sorted(read_sequence(out).order) == list(range(8))
    rows = est.read_text().splitlines()
    assert rows[0] == "k,label,mask_hex,n_fe,n_t,fer,lb,ub" and len(rows) == 10
    assert len(log.read_text().splitlines()) == 9


def test_design_sequence_resumes_after_running_out_of_frames(tmp_path):
    full_out, full_log = tmp_path / "full.txt", tmp_path / "full.csv"
    assert run([*SEQ_ARGS, "--out", str(full_out), "--log", str(full_log)]) == 0
    total = _manifest(full_out)["stats"]["frames_simulated"]

    ckpt = tmp_path / "run.ckpt"
    out, log = tmp_path / "q.txt", tmp_path / "l.csv"
    cut = [*SEQ_ARGS, "--out", str(out), "--log", str(log), "--checkpoint", str(ckpt)]
    assert run([*cut, "--max-total-frames", str(total // 2)]) == 4
    assert ckpt.exists() and not out.exists()
    assert run([*cut, "--resume"]) == 0
    assert out.read_bytes() == full_out.read_bytes()
    assert log.read_bytes() == full_log.read_bytes()
    assert _manifest(out)["stats"]["frames_simulated"] == total


def test_required_snr_csv(tmp_path):
    seq = tmp_path / "q.txt"
    assert run(["construct", "--n", "8", "--out-sequence", str(seq)]) == 0
    out = tmp_path / "s.csv"
    assert run(["required-snr", "--sequence", str(seq), "--k-range", "0", "4", "2", "--target-fer", "0.1",
                "--resolution-db", "0.5", *SC_FAST, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "k,required_ebn0_db,fer,lb,ub,n_t,points_simulated,status"
    assert [l.split(",")[0] for l in lines[1:]] == ["0", "2", "4"]


def test_server_backend_round_trip(tmp_path, monkeypatch):
    from fastapi.testclient import TestClient

    import polargraph.cli as cli
    from polargraph.service.app import create_app

    client = TestClient(create_app())

    class Backend(cli.HttpBackend):
        def __init__(self, url, timeout=None):
            import httpx

            self._httpx = httpx
            self.client = client

    monkeypatch.setattr(cli, "HttpBackend", Backend)
    d = _design(tmp_path)
    local, remote = tmp_path / "l.csv", tmp_path / "r.csv"
    base = ["simulate", "--design", str(d), "--snr", "1.5", "--min-errors", "10", *SC_FAST]
    assert run([*base, "--out", str(local)]) == 0
    assert run([*base, "--server", "http://x", "--out", str(remote)]) == 0
    assert local.read_bytes() == remote.read_bytes()
    assert run(["construct", "--n", "12", "--server", "http://x"]) == 2


def test_required_snr_bracket_failure_leaves_snr_empty(tmp_path):
    seq = tmp_path / "q.txt"
    assert run(["construct", "--n", "8", "--out-sequence", str(seq)]) == 0
    out = tmp_path / "s.csv"
    assert run(["required-snr", "--sequence", str(seq), "--k", "8", "--lo-db", "-5", "--hi-db", "-4",
                "--resolution-db", "0.5", "--max-trials", "2000", *SC_FAST, "--out", str(out)]) == 0
    row = out.read_text().splitlines()[1].split(",")
    assert row[1] == "" and row[-1] == "bracket_failure"
