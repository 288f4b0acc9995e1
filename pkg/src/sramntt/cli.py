"""Command-line front end: run transforms, verify against oracles, sweep, replay.

Exit codes: 0 success, 2 invalid parameters, 3 verification mismatch,
4 capacity exceeded, 5 file/trace I/O problems.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

from . import oracle
from .bitparallel import ExecPolicy
from .errors import ParameterError, SimError, TraceIOError, VerificationError
from .ntt import RingParams, TransformUnit, bit_reverse
from .perf import CostModel, accumulate, sweep_bitwidth, sweep_order, sweep_to_csv
from .subarray import parse_trace, replay, serialize_trace

PRESETS = {
    # (q, order, width); width includes the headroom bit for modular add/sub
    "dilithium": (8380417, 256, 24),
    "falcon": (12289, 1024, 15),
    "he-1024-29": (268441601, 1024, 30),
    "q7681-256": (7681, 256, 16),
    "toy-257": (257, 8, 10),
}


@dataclass
class RunConfig:
    """Everything one `run` invocation depends on; round-trips through JSON."""

    subcommand: str = "run"
    order: int = 256
    q: int = 7681
    width: int | None = 16
    rows: int = 256
    cols: int = 256
    preset: str | None = None
    seed: int = 0
    mode: str = "polymul"
    verify: bool = False
    deterministic_latency: bool = True
    tile_scope_shifts: bool = False
    stats_path: str | None = None
    trace_path: str | None = None
    state_path: str | None = None
    sweep_path: str | None = None
    input_a: str | None = None
    input_b: str | None = None
    cost_model_path: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def semantic_dict(self) -> dict:
        """The parameters that determine results; output paths excluded so
        identical seed+config runs produce byte-identical stats files."""
        skip = {"stats_path", "trace_path", "state_path", "sweep_path"}
        return {k: v for k, v in asdict(self).items() if k not in skip}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return cls(**data)


def _apply_preset(cfg: RunConfig) -> None:
    if cfg.preset is None:
        return
    if cfg.preset not in PRESETS:
        raise ParameterError(
            f"unknown preset {cfg.preset!r}; choose from {sorted(PRESETS)}"
        )
    cfg.q, cfg.order, cfg.width = PRESETS[cfg.preset]


def _load_poly_file(path: str, order: int, q: int) -> list[int]:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise TraceIOError(f"cannot read polynomial file {path}: {exc}") from exc
    if not isinstance(data, list) or len(data) != order:
        raise ParameterError(f"{path}: expected a JSON array of {order} residues")
    coeffs = [int(c) % q for c in data]
    return coeffs


def _cost_model(cfg: RunConfig) -> CostModel:
    if cfg.cost_model_path is None:
        return CostModel()
    try:
        with open(cfg.cost_model_path) as fh:
            return CostModel.from_text(fh.read())
    except OSError as exc:
        raise TraceIOError(f"cannot read cost model: {exc}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise TraceIOError(f"cannot write {path}: {exc}") from exc


def _state_dict(unit: TransformUnit) -> dict:
    arr = unit.arr
    return {
        "rows": arr.rows,
        "cols": arr.cols,
        "latch": f"{arr.latch:x}",
        "cells": [f"{row:x}" for row in arr.cells],
    }


def cmd_run(cfg: RunConfig) -> int:
    _apply_preset(cfg)
    ring = RingParams.create(cfg.q, cfg.order, cfg.width)
    policy = ExecPolicy(deterministic=cfg.deterministic_latency,
                        tile_scope_all=cfg.tile_scope_shifts)
    cost = _cost_model(cfg)
    unit = TransformUnit(ring, cfg.rows, cfg.cols, policy)
    tiles = unit.layout.tiles

    rng = random.Random(cfg.seed)
    if cfg.input_a:
        base = _load_poly_file(cfg.input_a, cfg.order, cfg.q)
        polys = [list(base) for _ in range(tiles)]
    else:
        polys = [[rng.randrange(cfg.q) for _ in range(cfg.order)] for _ in range(tiles)]
    if cfg.input_b:
        b_poly = _load_poly_file(cfg.input_b, cfg.order, cfg.q)
    else:
        b_poly = [rng.randrange(cfg.q) for _ in range(cfg.order)]

    unit.load_polynomials(polys)
    unit.forward()
    traces = [unit]

    if cfg.mode == "forward":
        if cfg.verify:
            spectra = unit.read_polynomials(tiles)
            bits = ring.log2_order
            for t, p in enumerate(polys):
                want = oracle.oracle_ntt(p, ring.q, ring.psi)
                got = [spectra[t][bit_reverse(i, bits)] for i in range(cfg.order)]
                if got != want:
                    raise VerificationError(f"forward spectrum mismatch in tile {t}")
    elif cfg.mode == "roundtrip":
        unit.inverse()
        if cfg.verify:
            back = unit.read_polynomials(tiles)
            for t, p in enumerate(polys):
                if back[t] != p:
                    raise VerificationError(f"roundtrip mismatch in tile {t}")
    elif cfg.mode == "polymul":
        unit_b = TransformUnit(ring, cfg.rows, cfg.cols, policy)
        unit_b.load_polynomials([b_poly])
        unit_b.forward()
        b_hat = unit_b.read_polynomials(1)[0]
        unit.pointwise_by(b_hat)
        unit.inverse()
        traces.append(unit_b)
        if cfg.verify:
            products = unit.read_polynomials(tiles)
            for t, p in enumerate(polys):
                want = oracle.schoolbook_negacyclic(p, b_poly, ring.q)
                if products[t] != want:
                    raise VerificationError(f"product mismatch in tile {t}")
    else:
        raise ParameterError(f"unknown mode {cfg.mode!r}")

    trace = []
    for u in traces:
        trace.extend(u.arr.trace or ())
    stats = accumulate(trace, cost, parallel=tiles)
    payload = stats.to_json_dict(config=cfg.semantic_dict())
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if cfg.stats_path:
        _write_text(cfg.stats_path, text)
    else:
        sys.stdout.write(text)
    if cfg.trace_path:
        _write_text(cfg.trace_path, serialize_trace(unit.arr.trace or (), cfg.cols))
    if cfg.state_path:
        _write_text(cfg.state_path,
                    json.dumps(_state_dict(unit), indent=1, sort_keys=True) + "\n")
    return 0


def cmd_sweep(cfg: RunConfig, vary: str, jobs: int = 1) -> int:
    cost = _cost_model(cfg)
    if vary == "bitwidth":
        widths = list(range(2, 65))
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(
                    lambda w: sweep_bitwidth(cfg.order, [w], cfg.rows, cfg.cols, cost)[0],
                    widths))
        else:
            rows = sweep_bitwidth(cfg.order, widths, cfg.rows, cfg.cols, cost)
    elif vary == "order":
        orders = [1 << k for k in range(2, 13)]
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(
                    lambda o: sweep_order(cfg.width or 16, [o], cfg.rows, cfg.cols, cost)[0],
                    orders))
        else:
            rows = sweep_order(cfg.width or 16, orders, cfg.rows, cfg.cols, cost)
    else:
        raise ParameterError(f"--vary must be bitwidth or order, got {vary!r}")
    csv_text = sweep_to_csv(rows)
    if cfg.sweep_path:
        _write_text(cfg.sweep_path, csv_text)
    else:
        sys.stdout.write(csv_text)
    return 0


def cmd_trace_replay(trace_path: str, state_path: str) -> int:
    try:
        with open(trace_path) as fh:
            ops = parse_trace(fh.read())
        with open(state_path) as fh:
            state = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise TraceIOError(f"cannot load replay inputs: {exc}") from exc
    try:
        rows = int(state["rows"])
        cols = int(state["cols"])
        want_cells = [int(x, 16) for x in state["cells"]]
        want_latch = int(state["latch"], 16)
    except (KeyError, ValueError, TypeError) as exc:
        raise TraceIOError(f"malformed state file {state_path}") from exc
    arr = replay(ops, rows, cols)
    if arr.cells != want_cells or arr.latch != want_latch:
        raise VerificationError("replayed final state differs from the recorded state")
    print("replay ok: final state matches")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sramntt",
                                description="In-SRAM NTT simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a transform or polynomial product")
    run.add_argument("--order", type=int, default=256)
    run.add_argument("--q", type=int, default=7681)
    run.add_argument("--width", type=int, default=None)
    run.add_argument("--rows", type=int, default=256)
    run.add_argument("--cols", type=int, default=256)
    run.add_argument("--preset", choices=sorted(PRESETS), default=None)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--mode", choices=["polymul", "roundtrip", "forward"],
                     default="polymul")
    run.add_argument("--verify", action="store_true",
                     help="check results against the reference oracles")
    run.add_argument("--data-dependent", action="store_true",
                     help="carry loops exit on the zero test instead of worst-case unrolling")
    run.add_argument("--tile-scope-shifts", action="store_true",
                     help="mask every shift at tile boundaries")
    run.add_argument("--stats", dest="stats_path", default=None)
    run.add_argument("--trace", dest="trace_path", default=None)
    run.add_argument("--state", dest="state_path", default=None,
                     help="write the final array state (for trace-replay)")
    run.add_argument("--input-a", dest="input_a", default=None)
    run.add_argument("--input-b", dest="input_b", default=None)
    run.add_argument("--cost-model", dest="cost_model_path", default=None)

    sw = sub.add_parser("sweep", help="emit cost-projection CSV")
    sw.add_argument("--vary", choices=["bitwidth", "order"], required=True)
    sw.add_argument("--order", type=int, default=256)
    sw.add_argument("--width", type=int, default=16)
    sw.add_argument("--rows", type=int, default=256)
    sw.add_argument("--cols", type=int, default=256)
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--out", dest="sweep_path", default=None)
    sw.add_argument("--cost-model", dest="cost_model_path", default=None)

    rp = sub.add_parser("trace-replay", help="re-execute a trace and compare states")
    rp.add_argument("trace")
    rp.add_argument("state")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = RunConfig(
                subcommand="run", order=args.order, q=args.q, width=args.width,
                rows=args.rows, cols=args.cols, preset=args.preset, seed=args.seed,
                mode=args.mode, verify=args.verify,
                deterministic_latency=not args.data_dependent,
                tile_scope_shifts=args.tile_scope_shifts,
                stats_path=args.stats_path, trace_path=args.trace_path,
                state_path=args.state_path, input_a=args.input_a,
                input_b=args.input_b, cost_model_path=args.cost_model_path,
            )
            return cmd_run(cfg)
        if args.command == "sweep":
            cfg = RunConfig(subcommand="sweep", order=args.order, width=args.width,
                            rows=args.rows, cols=args.cols,
                            sweep_path=args.sweep_path,
                            cost_model_path=args.cost_model_path)
            return cmd_sweep(cfg, args.vary, args.jobs)
        if args.command == "trace-replay":
            return cmd_trace_replay(args.trace, args.state)
        raise ParameterError(f"unknown command {args.command!r}")
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
