"""Small-scale differential suites shared by the CLI selftest and the tests.

Each suite returns (name, ok, detail). Step functions and the compiler
hooks are injectable so a deliberately broken implementation can be shown
to trip the right suite.
"""

from __future__ import annotations

import numpy as np

from .errors import CapacityError
from .hypervisor import BatchConfig, build_workload, run_batch
from .lowering import lower
from .machine import (Config, MachineParams, indicator_partition, init_config,
                      run_to_fixpoint, step_branchless, step_reference)
from .oracle import OracleStatus, evaluate
from .sampler import (CountTable, count_programs, enumerate_all,
                      sample_inputs, sample_program, unrank_program)

__all__ = [
    "random_config",
    "random_config_corpus",
    "suite_step_equivalence",
    "suite_compiler_vs_oracle",
    "suite_sampler_vs_enumerator",
    "suite_schedule_independence",
    "run_all",
]


def random_config(p: MachineParams, rng: np.random.Generator) -> Config:
    """One well-formed pseudorandom configuration.

    Opcode positions are biased into [0, 9) most of the time so all step
    cases come up at useful rates; cursors are uniform over their caps.
    """
    lim = 1 << p.w

    def words(k):
        return tuple(int(v) for v in
                     rng.integers(0, lim - 1, k, dtype=np.uint64, endpoint=True))

    M = list(words(p.n))
    for t in range(0, p.n, 2):
        if rng.random() < 0.8:
            M[t] = int(rng.integers(0, 9)) % lim
    u = (int(rng.integers(0, p.ell + 1)),) + words(p.ell)
    y = (int(rng.integers(0, p.s + 1)),) + words(p.s)
    i = int(rng.integers(0, 2 * p.n)) % lim if rng.random() < 0.7 else words(1)[0]
    a = int(rng.integers(0, min(lim, 10))) if rng.random() < 0.5 else words(1)[0]
    return Config(i, a, tuple(M), u, y)


_SHAPES = (
    # (w, n, ell, s, mu, weight): mostly small memories so a case mix is cheap
    (8, 4, 2, 1, 1, 3),
    (8, 8, 2, 2, 1, 2),
    (16, 6, 3, 1, 1, 3),
    (16, 16, 2, 2, 1, 2),
    (32, 8, 3, 2, 1, 3),
    (32, 64, 4, 2, 2, 1),
    (32, 250, 10, 2, 10, 1),
)


def _config_block(p: MachineParams, rng: np.random.Generator, count: int):
    """Batch form of random_config: same distribution, drawn array-at-a-time."""
    lim = 1 << p.w

    def words(shape):
        return rng.integers(0, lim - 1, shape, dtype=np.uint64, endpoint=True)

    M = words((count, p.n))
    ops = rng.integers(0, 9, (count, (p.n + 1) // 2), dtype=np.uint64) % lim
    pick = rng.random((count, (p.n + 1) // 2)) < 0.8
    cols = np.arange(0, p.n, 2)
    M[:, cols] = np.where(pick, ops, M[:, cols])

    u0 = rng.integers(0, p.ell + 1, count, dtype=np.uint64)
    ud = words((count, p.ell))
    y0 = rng.integers(0, p.s + 1, count, dtype=np.uint64)
    yd = words((count, p.s))
    i = np.where(rng.random(count) < 0.7,
                 rng.integers(0, 2 * p.n, count, dtype=np.uint64) % lim,
                 words(count))
    a = np.where(rng.random(count) < 0.5,
                 rng.integers(0, min(lim, 10), count, dtype=np.uint64),
                 words(count))

    Ml, ul, yl = M.tolist(), ud.tolist(), yd.tolist()
    u0l, y0l, il, al = u0.tolist(), y0.tolist(), i.tolist(), a.tolist()
    return [Config(il[k], al[k], tuple(Ml[k]),
                   (u0l[k], *ul[k]), (y0l[k], *yl[k]))
            for k in range(count)]


def random_config_corpus(count: int, seed: int, widths=(8, 16, 32)):
    """Yield (config, params) pairs cycling over a mix of machine shapes."""
    rng = np.random.default_rng(seed)
    shapes = [MachineParams(w=w, n=n, ell=ell, s=s, mu=mu)
              for (w, n, ell, s, mu, wt) in _SHAPES if w in widths
              for _ in range(wt)]
    # round-robin over shapes, but draw each shape's share as one block
    share = [count // len(shapes) + (k < count % len(shapes))
             for k in range(len(shapes))]
    blocks = [iter(_config_block(p, rng, c)) for p, c in zip(shapes, share)]
    made = 0
    while made < count:
        for p, block in zip(shapes, blocks):
            if made >= count:
                break
            c = next(block, None)
            if c is not None:
                yield c, p
                made += 1


def suite_step_equivalence(cases: int = 20000, seed: int = 1,
                           step_a=step_reference, step_b=step_branchless):
    """step_a and step_b agree exactly; the indicator partition sums to 1."""
    for k, (c, p) in enumerate(random_config_corpus(cases, seed)):
        ra = step_a(c, p)
        rb = step_b(c, p)
        if ra != rb:
            return ("step_equivalence", False,
                    f"case {k}: {ra} != {rb} for {c} under {p}")
        if sum(indicator_partition(c, p)) != 1:
            return ("step_equivalence", False, f"case {k}: partition sum != 1")
    return ("step_equivalence", True, f"{cases} configurations agree")


def suite_compiler_vs_oracle(count: int = 200, seed: int = 2,
                             lengths=(16, 30, 60), budget: int = 3000,
                             lower_fn=lower, params: MachineParams | None = None):
    """Compiled programs and the big-step evaluator produce the same output
    prefix whenever both halt within the budget."""
    p = params if params is not None else MachineParams()
    checked = 0
    for L in lengths:
        for k in range(count):
            ast = sample_program(L, seed, k)
            x = sample_inputs(ast.n_in, p.w, seed, k)
            try:
                prog, _ = lower_fn(ast, p)
                c0 = init_config(prog, x, p)
            except CapacityError:
                continue
            cf, tau = run_to_fixpoint(c0, budget, p)
            if tau is None:
                continue
            res = evaluate(ast, x, budget, p)
            if res.status != OracleStatus.HALTED:
                continue
            keep = min(ast.n_out, p.s)
            got = cf.y[1:1 + min(cf.y[0], keep)]
            want = res.opt[:keep]
            if cf.y[0] < keep or tuple(got) != tuple(want):
                return ("compiler_vs_oracle", False,
                        f"L={L} sample {k}: vm y={cf.y} vs oracle opt={res.opt}")
            checked += 1
    return ("compiler_vs_oracle", True,
            f"{checked} co-halting programs match on output prefixes")


def suite_sampler_vs_enumerator(lengths=(16, 21, 23), draws: int = 400,
                                seed: int = 3):
    """Counts match enumeration; unrank reproduces the enumeration order;
    sampled programs re-occur in the enumerated set."""
    table = CountTable()
    for L in lengths:
        want = count_programs(L, table)
        seen = list(enumerate_all(L, table=table))
        if len(seen) != want:
            return ("sampler_vs_enumerator", False,
                    f"L={L}: enumerated {len(seen)} != count {want}")
        for r in (0, want // 2, want - 1):
            if unrank_program(L, r, table) != seen[r]:
                return ("sampler_vs_enumerator", False,
                        f"L={L}: unrank({r}) disagrees with enumeration")
        universe = set(map(repr, seen))
        for k in range(draws):
            if repr(sample_program(L, seed, k, table)) not in universe:
                return ("sampler_vs_enumerator", False,
                        f"L={L}: draw {k} not in the enumerated language")
    return ("sampler_vs_enumerator", True,
            f"lengths {tuple(lengths)} agree; {draws} draws per length valid")


def suite_schedule_independence(d: int = 200, length: int = 30, seed: int = 4,
                                tau_max: int = 1000):
    """Worker count and epoch cannot change batch results."""
    p = MachineParams()
    wl = build_workload(length, d, seed, p)
    base = None
    for workers in (1, 3):
        for epoch in (1, 5, 64):
            r = run_batch(wl.configs, p,
                          BatchConfig(tau_max=tau_max, epoch=epoch, workers=workers))
            sig = (r.slots.iw.tobytes(), r.slots.ac.tobytes(),
                   r.slots.M.tobytes(), r.slots.u.tobytes(), r.slots.y.tobytes(),
                   r.slots.status.tobytes(), r.slots.steps.tobytes(),
                   r.slots.tau_h.tobytes())
            if base is None:
                base = sig
            elif sig != base:
                return ("schedule_independence", False,
                        f"W={workers} q={epoch} changed the batch result")
    return ("schedule_independence", True,
            f"{d} VMs identical over 6 (W, q) schedules")


def run_all():
    return [
        suite_step_equivalence(),
        suite_compiler_vs_oracle(),
        suite_sampler_vs_enumerator(),
        suite_schedule_independence(),
    ]
