"""Striped round-robin batch execution of many word-RASP machines.

Worker g of W owns the interleaved stripe of VM indices g, g+W, g+2W, ...
Each worker sweeps its stripe in rounds. Per visit a VM advances at most q
steps (the epoch), stopping early when it reaches a fixed point (halted,
tau_h = steps so far) or the global step budget tau_max (nonhalting as far
as this run can tell). Workers write only to their own stripe, so the
results are a pure function of the initial configurations and tau_max:
worker count and epoch cannot change them, only reorder the work.

The per-step kernel is numba-compiled and releases the GIL, so plain
Python threads scale across cores. A step's only possible effects are on
i, a, the single addressed cell M[j mod n], the read cursor u[0], and the
write count y[0] (an output write always moves y[0] with it), so comparing
those five candidate values against the current ones detects fixed points
exactly; the scalar interpreter compares whole configurations, and the two
detectors are checked against each other in the tests.
"""

from __future__ import annotations

import os
import time
from collections import Counter
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from numba import njit

from .errors import CapacityError
from .lowering import lower
from .machine import Config, MachineParams, init_config, validate_config
from .sampler import CountTable, sample_inputs, sample_program

__all__ = [
    "VmStatus",
    "BatchConfig",
    "VmSlot",
    "SlotView",
    "BatchResult",
    "run_batch",
    "collect_histogram",
    "HISTOGRAM_KEYS",
    "Workload",
    "build_workload",
    "throughput_bench",
]

_U0 = np.uint64(0)
_U1 = np.uint64(1)
_U2 = np.uint64(2)
_OLOD = np.uint64(1)
_OADD = np.uint64(2)
_OMUL = np.uint64(3)
_OSTO = np.uint64(4)
_OBNZ = np.uint64(5)
_ORD = np.uint64(6)
_OPRI = np.uint64(7)

_RUNNING, _HALTED, _EXHAUSTED = 0, 1, 2


class VmStatus(IntEnum):
    RUNNING = _RUNNING
    HALTED = _HALTED
    BUDGET_EXHAUSTED = _EXHAUSTED


@njit(nogil=True, cache=True)
def _advance(iw, ac, M, u, y, j, wmask, n, ell, s, do_apply):
    """True iff VM j sits at a fixed point; otherwise apply one step
    when do_apply. Candidate values cover every cell a step can touch."""
    i0 = iw[j]
    a0 = ac[j]
    o = M[j, i0 % n]
    jw = M[j, ((i0 + _U1) & wmask) % n]
    jn = jw % n
    mj = M[j, jn]
    u0 = u[j, 0]
    y0 = y[j, 0]

    ni = (i0 + _U2) & wmask
    na = a0
    nm = mj
    nu0 = u0
    ny0 = y0
    write_out = False
    if o == _OLOD:
        na = jw
    elif o == _OADD:
        na = (a0 + mj) & wmask
    elif o == _OMUL:
        na = (a0 * mj) & wmask
    elif o == _OSTO:
        nm = a0
    elif o == _OBNZ:
        if a0 != _U0:
            ni = jw
    elif o == _ORD:
        if u0 < ell:
            nm = u[j, u0 + _U1]
            nu0 = u0 + _U1
        else:
            ni = i0
    elif o == _OPRI:
        if y0 < s:
            ny0 = y0 + _U1
            write_out = True
    else:
        ni = i0

    if ni == i0 and na == a0 and nm == mj and nu0 == u0 and ny0 == y0:
        return True
    if do_apply:
        iw[j] = ni
        ac[j] = na
        M[j, jn] = nm
        u[j, 0] = nu0
        if write_out:
            y[j, y0 + _U1] = mj
        y[j, 0] = ny0
    return False


@njit(nogil=True, cache=True)
def _worker(iw, ac, M, u, y, status, steps, tau_h, g, W, q, rounds,
            tau_max, wmask, n, ell, s):
    d = iw.shape[0]
    stripe = (d - g + W - 1) // W if d > g else 0
    for _ in range(rounds):
        for k in range(stripe):
            j = g + k * W
            if status[j] != _RUNNING:
                continue
            applied = 0
            while applied < q:
                if steps[j] >= tau_max:
                    # budget spent: a last non-applying probe decides
                    # halted-at-tau_max vs out of budget
                    if _advance(iw, ac, M, u, y, j, wmask, n, ell, s, False):
                        status[j] = _HALTED
                        tau_h[j] = steps[j]
                    else:
                        status[j] = _EXHAUSTED
                    break
                if _advance(iw, ac, M, u, y, j, wmask, n, ell, s, True):
                    status[j] = _HALTED
                    tau_h[j] = steps[j]
                    break
                steps[j] += 1
                applied += 1
    # VMs that spent the whole budget without an early verdict: one more
    # fixedness probe decides halted-at-tau_max vs out of budget.
    for k in range(stripe):
        j = g + k * W
        if status[j] == _RUNNING:
            if _advance(iw, ac, M, u, y, j, wmask, n, ell, s, False):
                status[j] = _HALTED
                tau_h[j] = steps[j]
            else:
                status[j] = _EXHAUSTED


@dataclass(frozen=True)
class BatchConfig:
    tau_max: int
    epoch: int = 64                       # q: max steps per visit
    workers: int = 0                      # 0 = resolve automatically
    memory_budget_words: int = 2 ** 28    # refuse batches larger than this

    def __post_init__(self):
        if self.tau_max < 0:
            raise ValueError(f"tau_max must be >= 0, got {self.tau_max}")
        if self.epoch < 1:
            raise ValueError(f"epoch must be >= 1, got {self.epoch}")
        if self.workers < 0:
            raise ValueError(f"workers must be >= 0, got {self.workers}")


@dataclass(frozen=True)
class VmSlot:
    config: Config       # configuration after the run
    status: VmStatus
    steps_taken: int
    tau_h: int | None    # halting time, None unless status is HALTED


class SlotView(Sequence):
    """Array-backed sequence of VmSlots: d results without d tuple heaps.

    The underlying arrays (iw, ac, M, u, y, status, steps, tau_h) are
    exposed directly for bulk consumers; indexing materializes one VmSlot.
    """

    def __init__(self, iw, ac, M, u, y, status, steps, tau_h, params):
        self.iw, self.ac, self.M, self.u, self.y = iw, ac, M, u, y
        self.status, self.steps, self.tau_h = status, steps, tau_h
        self.params = params

    def __len__(self):
        return self.iw.shape[0]

    def __getitem__(self, k):
        if isinstance(k, slice):
            return [self[j] for j in range(*k.indices(len(self)))]
        if k < 0:
            k += len(self)
        if not 0 <= k < len(self):
            raise IndexError(k)
        cfg = Config(int(self.iw[k]), int(self.ac[k]),
                     tuple(int(v) for v in self.M[k]),
                     tuple(int(v) for v in self.u[k]),
                     tuple(int(v) for v in self.y[k]))
        st = VmStatus(int(self.status[k]))
        th = int(self.tau_h[k]) if st == VmStatus.HALTED else None
        return VmSlot(config=cfg, status=st, steps_taken=int(self.steps[k]),
                      tau_h=th)


@dataclass
class BatchResult:
    slots: SlotView
    histogram: Counter = field(default_factory=Counter)  # tau_h -> halted VMs
    wall_time: float = 0.0


def _auto_workers() -> int:
    env = os.environ.get("RASPVISOR_WORKERS")
    if env:
        try:
            v = int(env)
            if v >= 1:
                return v
        except ValueError:
            pass
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


_WARMED = False


def _warm_kernel():
    """Compile (or load the cached compile of) the kernel off the clock."""
    global _WARMED
    if _WARMED:
        return
    z = np.zeros(1, np.uint64)
    zm = np.zeros((1, 2), np.uint64)
    zu = np.zeros((1, 2), np.uint64)
    zy = np.zeros((1, 2), np.uint64)
    st = np.zeros(1, np.int8)
    sp = np.zeros(1, np.int64)
    th = np.full(1, -1, np.int64)
    _worker(z, z.copy(), zm, zu, zy, st, sp, th, 0, 1, 1, 1, 0,
            np.uint64(1), np.uint64(2), np.uint64(1), np.uint64(1))
    _WARMED = True


def run_batch(configs, params: MachineParams, batch: BatchConfig) -> BatchResult:
    """Run every configuration to a fixed point or tau_max steps.

    All configurations must be well-formed under the same params. Results
    are independent of the worker count and epoch.
    """
    d = len(configs)
    need = d * (params.n + params.ell + params.s + 4)
    if need > batch.memory_budget_words:
        raise CapacityError(
            f"batch needs {need} words of VM state, over the budget of "
            f"{batch.memory_budget_words} (raise memory_budget_words to allow)")
    for c in configs:
        validate_config(c, params)

    iw = np.fromiter((c.i for c in configs), np.uint64, count=d)
    ac = np.fromiter((c.a for c in configs), np.uint64, count=d)
    M = np.array([c.M for c in configs], np.uint64).reshape(d, params.n)
    u = np.array([c.u for c in configs], np.uint64).reshape(d, params.ell + 1)
    y = np.array([c.y for c in configs], np.uint64).reshape(d, params.s + 1)
    if params.w < 64:
        mask = np.uint64(params.mask)
        for name, arr in (("i", iw), ("a", ac), ("M", M), ("u", u), ("y", y)):
            if d and arr.max() > mask:
                raise ValueError(
                    f"{name} holds a word over 2^w - 1 = {params.mask}")
    status = np.zeros(d, np.int8)
    steps = np.zeros(d, np.int64)
    tau_h = np.full(d, -1, np.int64)

    W = batch.workers if batch.workers >= 1 else _auto_workers()
    W = max(1, min(W, d)) if d else 1
    q = batch.epoch
    rounds = (batch.tau_max + q - 1) // q
    args = (np.uint64(params.mask), np.uint64(params.n),
            np.uint64(params.ell), np.uint64(params.s))

    _warm_kernel()
    t0 = time.perf_counter()
    if d > 0:
        if W == 1:
            _worker(iw, ac, M, u, y, status, steps, tau_h, 0, 1, q, rounds,
                    batch.tau_max, *args)
        else:
            with ThreadPoolExecutor(max_workers=W) as ex:
                futs = [ex.submit(_worker, iw, ac, M, u, y, status, steps,
                                  tau_h, g, W, q, rounds, batch.tau_max, *args)
                        for g in range(W)]
                for f in futs:
                    f.result()
    wall = time.perf_counter() - t0

    halted = status == _HALTED
    hist = Counter()
    if d:
        vals, cnts = np.unique(tau_h[halted], return_counts=True)
        hist.update({int(v): int(c) for v, c in zip(vals, cnts)})
    slots = SlotView(iw, ac, M, u, y, status, steps, tau_h, params)
    return BatchResult(slots=slots, histogram=hist, wall_time=wall)


HISTOGRAM_KEYS = tuple(str(k) for k in range(100)) + ("100+", "nonhalt")


def collect_histogram(slots) -> dict:
    """Bucketed halting-time histogram over a batch's slots.

    Keys "0".."99" count exact halting times, "100+" all later halts, and
    "nonhalt" the VMs that exhausted the budget. Every key is present.
    """
    out = {k: 0 for k in HISTOGRAM_KEYS}
    if isinstance(slots, SlotView):
        halted = slots.status == _HALTED
        th = slots.tau_h[halted]
        small = th[th < 100]
        vals, cnts = np.unique(small, return_counts=True)
        for v, c in zip(vals, cnts):
            out[str(int(v))] = int(c)
        out["100+"] = int((th >= 100).sum())
        out["nonhalt"] = int((slots.status == _EXHAUSTED).sum())
        return out
    for slot in slots:
        if slot.status == VmStatus.HALTED:
            key = str(slot.tau_h) if slot.tau_h < 100 else "100+"
            out[key] += 1
        elif slot.status == VmStatus.BUDGET_EXHAUSTED:
            out["nonhalt"] += 1
    return out


@dataclass
class Workload:
    configs: list
    asts: list | None          # kept only on request
    aborted: list              # (sample index, reason) for unlowerable draws


def build_workload(length: int, count: int, seed: int, params: MachineParams,
                   zero_inputs: bool = False, keep_asts: bool = False,
                   first_index: int = 0,
                   table: CountTable | None = None) -> Workload:
    """Sample `count` programs (indices first_index..) and prepare initial
    configurations. Draws whose compiled form does not fit memory are
    recorded in `aborted`, never silently dropped."""
    configs = []
    asts = [] if keep_asts else None
    aborted = []
    for k in range(first_index, first_index + count):
        ast = sample_program(length, seed, k, table)
        inputs = () if zero_inputs else sample_inputs(ast.n_in, params.w, seed, k)
        try:
            prog, _ = lower(ast, params)
            cfg = init_config(prog, inputs, params)
        except CapacityError as e:
            aborted.append((k, str(e)))
            continue
        configs.append(cfg)
        if keep_asts:
            asts.append(ast)
    return Workload(configs=configs, asts=asts, aborted=aborted)


def throughput_bench(length: int, count: int, tau_max: int, workers_list,
                     seed: int, params: MachineParams,
                     epoch: int = 64) -> list:
    """Time the same sampled workload at several worker counts.

    Returns one row per entry of workers_list:
    {"workers", "wall_time", "vms", "speedup"} with speedup measured
    against the first workers=1 row (or the first row if none is serial).
    """
    wl = build_workload(length, count, seed, params)
    _warm_kernel()
    rows = []
    for w in workers_list:
        res = run_batch(wl.configs, params,
                        BatchConfig(tau_max=tau_max, epoch=epoch, workers=w))
        rows.append({"workers": w, "wall_time": res.wall_time,
                     "vms": len(wl.configs), "speedup": 0.0})
    base = next((r["wall_time"] for r in rows if r["workers"] == 1),
                rows[0]["wall_time"] if rows else 0.0)
    for r in rows:
        r["speedup"] = base / r["wall_time"] if r["wall_time"] > 0 else 0.0
    return rows
