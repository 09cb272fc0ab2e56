"""Command-line front door: compile, run, sample, halting, bb-search, bench,
selftest.

Every data file a command writes starts with a one-line JSON manifest
comment; data outputs are pure functions of that manifest (wall-clock
timings are reported separately and never enter data files, except in the
bench timing report whose numbers are themselves measurements). Errors go
to stderr as one-line JSON and exit nonzero.
"""

from __future__ import annotations

import argparse
import heapq
import json
import os
import sys
import time

from . import __version__
from .errors import RaspError
from .hypervisor import (BatchConfig, _auto_workers, build_workload,
                         collect_histogram, HISTOGRAM_KEYS, run_batch,
                         throughput_bench)
from .lang import parse_source, pretty_print
from .lowering import disassemble, lower, LayoutInfo
from .machine import (MachineParams, init_config, program_from_bytes,
                      program_from_json, program_to_bytes, program_to_json,
                      run_to_fixpoint)
from .sampler import count_programs, sample_program, CountTable
from . import selftest as selftest_mod

__all__ = ["main"]


def _add_machine_flags(sp):
    sp.add_argument("--width", type=int, default=32, metavar="W",
                    help="word width in bits (default 32)")
    sp.add_argument("--mem", type=int, default=250, metavar="N",
                    help="memory words per VM (default 250)")
    sp.add_argument("--inputs-cap", type=int, default=10, metavar="ELL",
                    help="input tape capacity (default 10)")
    sp.add_argument("--outputs-cap", type=int, default=2, metavar="S",
                    help="output tape capacity (default 2)")
    sp.add_argument("--scratch-cap", type=int, default=10, metavar="MU",
                    help="scratch region capacity (default 10)")


def _params(args) -> MachineParams:
    return MachineParams(w=args.width, n=args.mem, ell=args.inputs_cap,
                         s=args.outputs_cap, mu=args.scratch_cap)


def _resolved_workers(args) -> int:
    return args.workers if args.workers > 0 else _auto_workers()


def _manifest(command: str, p: MachineParams, **extra) -> str:
    doc = {"command": command, "artifact_version": __version__,
           "w": p.w, "n": p.n, "ell": p.ell, "s": p.s, "mu": p.mu}
    doc.update(extra)
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _fail(e: BaseException) -> int:
    msg = {"error": type(e).__name__, "detail": str(e)}
    print(json.dumps(msg), file=sys.stderr)
    return 1


# --- compile -----------------------------------------------------------------

def cmd_compile(args) -> int:
    p = _params(args)
    text = open(args.source, "r", encoding="utf-8").read()
    ast = parse_source(text)
    prog, layout = lower(ast, p)
    base = args.out if args.out else os.path.splitext(args.source)[0]
    with open(base + ".prog.json", "w") as f:
        f.write(program_to_json(prog, p.w) + "\n")
    with open(base + ".prog.bin", "wb") as f:
        f.write(program_to_bytes(prog, p.w))
    with open(base + ".layout.json", "w") as f:
        json.dump(layout.to_json(), f, sort_keys=True)
        f.write("\n")
    with open(base + ".asm", "w") as f:
        f.write(f"; {_manifest('compile', p, source=os.path.basename(args.source))}\n")
        f.write(disassemble(prog, layout) + "\n")
    print(f"compiled {args.source}: m={layout.m} pairs, "
          f"regions ipt@{layout.ipt_base} opt@{layout.opt_base} scr@{layout.scr_base}")
    for suffix in (".prog.json", ".prog.bin", ".layout.json", ".asm"):
        print(f"  wrote {base}{suffix}")
    return 0


# --- run ---------------------------------------------------------------------

def _load_program(path: str, args):
    if path.endswith(".bin"):
        data = open(path, "rb").read()
        return program_from_bytes(data, args.width), args.width
    prog, w = program_from_json(open(path).read())
    return prog, w


def cmd_run(args) -> int:
    prog, w = _load_program(args.program, args)
    p = MachineParams(w=w, n=args.mem, ell=args.inputs_cap,
                      s=args.outputs_cap, mu=args.scratch_cap)
    inputs = [int(v) for v in args.inputs.split(",") if v != ""] if args.inputs else []
    c0 = init_config(prog, inputs, p)

    trace = None
    if args.trace:
        def trace(t, c):
            o = c.M[c.i % p.n]
            j = c.M[((c.i + 1) & p.mask) % p.n]
            print(f"t={t} i={c.i} a={c.a} op={o},{j} u0={c.u[0]} y0={c.y[0]}")

    cf, tau = run_to_fixpoint(c0, args.tau_max, p, trace=trace)
    outputs = " ".join(str(v) for v in cf.y[1:1 + cf.y[0]])
    if tau is None:
        print(f"no fixed point within tau_max = {args.tau_max}")
    else:
        print(f"tau_h = {tau}")
    print(f"outputs = {outputs}" if outputs else "outputs = (none)")
    return 0


# --- sample ------------------------------------------------------------------

def cmd_sample(args) -> int:
    table = CountTable()
    total = count_programs(args.length, table)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        for k in range(args.count):
            ast = sample_program(args.length, args.seed, k, table)
            if args.emit_json:
                rec = {"index": k, "source": pretty_print(ast),
                       "tokens": args.length, "n_in": ast.n_in, "n_out": ast.n_out}
                out.write(json.dumps(rec, sort_keys=True) + "\n")
            else:
                out.write(pretty_print(ast) + "\n")
    finally:
        if args.out:
            out.close()
    print(f"sampled {args.count} of {total} programs at L={args.length}",
          file=sys.stderr)
    return 0


# --- halting -----------------------------------------------------------------

def cmd_halting(args) -> int:
    p = _params(args)
    workers = _resolved_workers(args)
    manifest = _manifest("halting", p, L=args.length, d=args.count,
                         tau_max=args.tau_max, seed=args.seed,
                         workers=workers, epoch=args.epoch)
    wl = build_workload(args.length, args.count, args.seed, p)
    res = run_batch(wl.configs, p,
                    BatchConfig(tau_max=args.tau_max, epoch=args.epoch,
                                workers=workers))
    hist = collect_histogram(res.slots)
    out = args.out or "halting.csv"
    with open(out, "w", newline="") as f:
        f.write(f"# {manifest}\n")
        f.write("bucket,count\n")
        for key in HISTOGRAM_KEYS:
            f.write(f"{key},{hist[key]}\n")
    d_run = len(wl.configs)
    halted = d_run - hist["nonhalt"]
    est = halted / d_run if d_run else 0.0
    print(f"halting probability estimate: {est:.4f} "
          f"({halted} of {d_run} run; {len(wl.aborted)} draws aborted)")
    for k, reason in wl.aborted[:10]:
        print(f"  aborted sample {k}: {reason}", file=sys.stderr)
    print(f"wrote {out} ({res.wall_time:.2f}s batch wall time)")
    return 0


# --- bb-search ---------------------------------------------------------------

def cmd_bb_search(args) -> int:
    p = _params(args)
    workers = _resolved_workers(args)
    budget_kind = "seconds" if args.seconds else "count"
    manifest = _manifest("bb-search", p, L=args.length,
                         budget={"seconds": args.seconds} if args.seconds
                         else {"count": args.count},
                         tau_max=args.tau_max, seed=args.seed,
                         workers=workers, epoch=args.epoch, top=args.top)
    table = CountTable()
    best = []  # min-heap of (tau_h, -index, source): keeps the top K
    sampled = 0
    halted = 0
    chunk = 2000
    deadline = time.monotonic() + args.seconds if args.seconds else None
    remaining = args.count if not args.seconds else None
    while True:
        if deadline is not None and time.monotonic() >= deadline:
            break
        if remaining is not None:
            if remaining <= 0:
                break
            size = min(chunk, remaining)
            remaining -= size
        else:
            size = chunk
        wl = build_workload(args.length, size, args.seed, p, zero_inputs=True,
                            keep_asts=True, first_index=sampled, table=table)
        res = run_batch(wl.configs, p,
                        BatchConfig(tau_max=args.tau_max, epoch=args.epoch,
                                    workers=workers))
        status = res.slots.status
        tau_h = res.slots.tau_h
        for pos, ast in enumerate(wl.asts):
            if status[pos] == 1:
                halted += 1
                item = (int(tau_h[pos]), -(sampled + pos), pretty_print(ast))
                if len(best) < args.top:
                    heapq.heappush(best, item)
                elif item > best[0]:
                    heapq.heapreplace(best, item)
        sampled += size

    lines = [f"# {manifest}",
             f"# sampled={sampled} halted={halted} "
             f"({100 * halted / sampled if sampled else 0:.1f}%)"]
    ranked = sorted(best, reverse=True)
    for rank, (tau, negidx, source) in enumerate(ranked, start=1):
        lines.append(f"rank {rank}: tau_h = {tau} (sample index {-negidx})")
        lines.append(source)
    report = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(report)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(report)
    return 0


# --- bench -------------------------------------------------------------------

def cmd_bench(args) -> int:
    p = _params(args)
    counts = [int(v) for v in str(args.count).split(",")]
    workers_list = [int(v) for v in args.workers_list.split(",")]
    manifest = _manifest("bench", p, L=args.length, d=counts,
                         tau_max=args.tau_max, seed=args.seed,
                         workers=workers_list, epoch=args.epoch)
    rows = []
    for d in counts:
        rows.extend(
            {"d": d, **row}
            for row in throughput_bench(args.length, d, args.tau_max,
                                        workers_list, args.seed, p,
                                        epoch=args.epoch))
    out = args.out or "bench.csv"
    with open(out, "w", newline="") as f:
        f.write(f"# {manifest}\n")
        f.write("d,workers,vms,wall_time,speedup\n")
        for r in rows:
            f.write(f"{r['d']},{r['workers']},{r['vms']},"
                    f"{r['wall_time']:.6f},{r['speedup']:.3f}\n")
    for r in rows:
        print(f"d={r['d']} workers={r['workers']} wall={r['wall_time']:.3f}s "
              f"speedup={r['speedup']:.2f}x")
    print(f"wrote {out}")
    return 0


# --- selftest ----------------------------------------------------------------

def cmd_selftest(args) -> int:
    failures = 0
    for name, ok, detail in selftest_mod.run_all():
        print(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
        failures += 0 if ok else 1
    return 1 if failures else 0


# --- argument wiring ---------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="raspvisor",
        description="Word-RASP virtual machine suite: compile and run array "
                    "programs, sample them uniformly, and batch-run halting "
                    "experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    default_workers = int(os.environ.get("RASPVISOR_WORKERS", "0") or 0)

    def common_run_flags(sp, tau_default):
        sp.add_argument("--tau-max", type=int, default=tau_default,
                        help=f"step budget per VM (default {tau_default})")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=default_workers,
                        help="worker threads (0 = auto; env RASPVISOR_WORKERS)")
        sp.add_argument("--epoch", type=int, default=64,
                        help="max steps per VM visit (default 64)")

    sp = sub.add_parser("compile", help="compile array-language source")
    sp.add_argument("source")
    sp.add_argument("--out", default=None,
                    help="output basename (default: source without extension)")
    _add_machine_flags(sp)
    sp.set_defaults(fn=cmd_compile)

    sp = sub.add_parser("run", help="run one compiled program to a fixed point")
    sp.add_argument("program", help=".prog.json or .bin file")
    sp.add_argument("--inputs", default="",
                    help="comma-separated input words")
    sp.add_argument("--trace", action="store_true",
                    help="print one line per step")
    sp.add_argument("--tau-max", type=int, default=10 ** 6)
    _add_machine_flags(sp)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("sample", help="sample uniform programs of a length")
    sp.add_argument("--length", type=int, required=True)
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--emit-json", action="store_true",
                    help="JSONL records instead of plain source lines")
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_sample)

    sp = sub.add_parser("halting", help="halting-time histogram experiment")
    sp.add_argument("--length", type=int, default=100)
    sp.add_argument("--count", type=int, default=10 ** 5,
                    help="programs to sample (default 100000)")
    common_run_flags(sp, tau_default=10 ** 4)
    sp.add_argument("--out", default=None, help="CSV path (default halting.csv)")
    _add_machine_flags(sp)
    sp.set_defaults(fn=cmd_halting)

    sp = sub.add_parser("bb-search",
                        help="search for the longest-halting programs on zero inputs")
    sp.add_argument("--length", type=int, default=120)
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--count", type=int, default=10 ** 4,
                       help="programs to try (default 10000)")
    group.add_argument("--seconds", type=float, default=None,
                       help="time budget instead of a count")
    sp.add_argument("--top", type=int, default=3, help="report the K best")
    common_run_flags(sp, tau_default=10 ** 5)
    sp.add_argument("--out", default=None, help="report path (default stdout)")
    _add_machine_flags(sp)
    sp.set_defaults(fn=cmd_bb_search)

    sp = sub.add_parser("bench", help="throughput grid over d and workers")
    sp.add_argument("--length", type=int, default=100)
    sp.add_argument("--count", default="10000",
                    help="comma list of batch sizes (default 10000)")
    sp.add_argument("--workers", dest="workers_list", default="1,0",
                    help="comma list of worker counts; 0 = auto (default 1,0)")
    sp.add_argument("--tau-max", type=int, default=10 ** 4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--epoch", type=int, default=64)
    sp.add_argument("--out", default=None, help="CSV path (default bench.csv)")
    _add_machine_flags(sp)
    sp.set_defaults(fn=cmd_bench)

    sp = sub.add_parser("selftest", help="run the differential suites")
    sp.set_defaults(fn=cmd_selftest)

    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except RaspError as e:
        return _fail(e)
    except (OSError, ValueError, json.JSONDecodeError) as e:
        return _fail(e)


if __name__ == "__main__":
    sys.exit(main())
