"""CLI behavior: exit codes, stats schema, replay, determinism."""

import json

from sramntt.cli import RunConfig, cmd_trace_replay, main
from sramntt.perf import CSV_HEADER


def run_cli(args):
    return main(args)


def test_run_verify_ok(tmp_path):
    stats = tmp_path / "s.json"
    code = run_cli(["run", "--order", "8", "--q", "257", "--rows", "64",
                    "--cols", "64", "--mode", "polymul", "--verify",
                    "--stats", str(stats)])
    assert code == 0
    payload = json.loads(stats.read_text())
    assert set(payload) == {"config", "counts", "cycles", "energy_nJ",
                            "latency_us", "throughput_knnt_s", "shifts"}
    assert set(payload["shifts"]) == {"global", "tile", "word_alignment"}
    assert payload["shifts"]["word_alignment"] == 0
    assert set(payload["counts"]) == {"WRITE_ROW", "ACTIVATE2", "SHIFT",
                                      "WRITEBACK", "ZERO_TEST"}
    cfg = RunConfig.from_dict(payload["config"])
    assert cfg.semantic_dict() == payload["config"]    # config round-trips


def test_run_rejects_bad_congruence(capsys):
    code = run_cli(["run", "--order", "256", "--q", "3329"])
    assert code == 2
    assert "mod 512" in capsys.readouterr().err


def test_run_rejects_capacity(capsys):
    code = run_cli(["run", "--order", "64", "--q", "257", "--rows", "16",
                    "--cols", "32", "--mode", "forward"])
    assert code == 4


def test_missing_input_file_is_io_error():
    code = run_cli(["run", "--order", "8", "--q", "257", "--rows", "64",
                    "--cols", "64", "--input-a", "/nonexistent.json"])
    assert code == 5


def test_preset_roundtrip_verify(tmp_path):
    stats = tmp_path / "s.json"
    code = run_cli(["run", "--preset", "toy-257", "--rows", "64", "--cols", "64",
                    "--mode", "roundtrip", "--verify", "--stats", str(stats)])
    assert code == 0


def test_same_seed_identical_output(tmp_path):
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    for out in (out1, out2):
        assert run_cli(["run", "--order", "8", "--q", "257", "--rows", "64",
                        "--cols", "64", "--seed", "42", "--mode", "roundtrip",
                        "--stats", str(out)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_trace_replay_cycle(tmp_path):
    trace = tmp_path / "run.trace"
    state = tmp_path / "run.state"
    assert run_cli(["run", "--order", "8", "--q", "257", "--rows", "64",
                    "--cols", "64", "--mode", "forward",
                    "--trace", str(trace), "--state", str(state),
                    "--stats", str(tmp_path / "s.json")]) == 0
    assert cmd_trace_replay(str(trace), str(state)) == 0
    assert run_cli(["trace-replay", str(trace), str(state)]) == 0
    # tamper with the recorded state: replay must fail verification
    payload = json.loads(state.read_text())
    payload["latch"] = f"{int(payload['latch'], 16) ^ 1:x}"
    state.write_text(json.dumps(payload))
    assert run_cli(["trace-replay", str(trace), str(state)]) == 3


def test_replay_missing_file():
    assert run_cli(["trace-replay", "/no/trace", "/no/state"]) == 5


def test_sweep_bitwidth_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run_cli(["sweep", "--vary", "bitwidth", "--order", "256",
                    "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + 63                        # widths 2..64


def test_sweep_order_csv_matches_serial_with_jobs(tmp_path):
    out1 = tmp_path / "o1.csv"
    out2 = tmp_path / "o2.csv"
    assert run_cli(["sweep", "--vary", "order", "--width", "16",
                    "--out", str(out1)]) == 0
    assert run_cli(["sweep", "--vary", "order", "--width", "16",
                    "--jobs", "4", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_run_data_dependent_mode(tmp_path):
    assert run_cli(["run", "--order", "8", "--q", "257", "--rows", "64",
                    "--cols", "64", "--mode", "roundtrip", "--verify",
                    "--data-dependent",
                    "--stats", str(tmp_path / "s.json")]) == 0


def test_run_tile_scope_shifts(tmp_path):
    stats = tmp_path / "s.json"
    assert run_cli(["run", "--order", "8", "--q", "257", "--rows", "64",
                    "--cols", "64", "--mode", "roundtrip", "--verify",
                    "--tile-scope-shifts", "--stats", str(stats)]) == 0
    payload = json.loads(stats.read_text())
    assert payload["shifts"]["global"] == 0            # everything masked


def test_cost_model_file(tmp_path):
    model = tmp_path / "cost.txt"
    model.write_text("freq_mhz=1000\ncycles.ACTIVATE2=2\n")
    stats = tmp_path / "s.json"
    assert run_cli(["run", "--order", "8", "--q", "257", "--rows", "64",
                    "--cols", "64", "--mode", "forward",
                    "--cost-model", str(model), "--stats", str(stats)]) == 0
    payload = json.loads(stats.read_text())
    counts = payload["counts"]
    # activations billed double under the custom model
    assert payload["cycles"] > sum(counts.values())


def test_run_input_files(tmp_path):
    import random
    rng = random.Random(5)
    a = [rng.randrange(257) for _ in range(8)]
    b = [rng.randrange(257) for _ in range(8)]
    fa = tmp_path / "a.json"
    fb = tmp_path / "b.json"
    fa.write_text(json.dumps(a))
    fb.write_text(json.dumps(b))
    stats = tmp_path / "s.json"
    assert run_cli(["run", "--order", "8", "--q", "257", "--rows", "64",
                    "--cols", "64", "--input-a", str(fa), "--input-b", str(fb),
                    "--verify", "--stats", str(stats)]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(a[:-1]))
    assert run_cli(["run", "--order", "8", "--q", "257", "--rows", "64",
                    "--cols", "64", "--input-a", str(bad)]) == 2


def test_preset_table_is_consistent():
    from sramntt.cli import PRESETS
    from sramntt.ntt import find_roots, is_prime
    for name, (q, order, width) in PRESETS.items():
        assert is_prime(q), name
        find_roots(q, order)                         # raises on bad congruence
        assert width >= (q - 1).bit_length(), name


def test_spec_example_q7681_verify(tmp_path):
    assert run_cli(["run", "--order", "256", "--q", "7681", "--width", "16",
                    "--verify", "--stats", str(tmp_path / "s.json")]) == 0


def test_spec_example_dilithium_verify(tmp_path):
    assert run_cli(["run", "--preset", "dilithium", "--verify",
                    "--stats", str(tmp_path / "s.json")]) == 0
