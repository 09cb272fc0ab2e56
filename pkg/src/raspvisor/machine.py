"""Finite word-RASP machine: configurations, one-step semantics, serialization.

The machine operates on w-bit words. A configuration is a quintuple
(i, a, M, u, y): instruction pointer, accumulator, memory of n words, an
input tape of ell words behind a read cursor u[0], and an output tape of
s words behind a write count y[0]. Every operation is total; anything the
transition relation does not cover (invalid opcode, read past the input)
leaves the configuration unchanged, so halting is exactly reaching a fixed
point of the step function.

Two step functions are provided: `step_reference`, a direct case split,
and `step_branchless`, which evaluates every case's contribution and blends
them with 0/1 indicators so that no control flow depends on the fetched
opcode. They agree on every configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

from .errors import CapacityError

__all__ = [
    "Opcode",
    "MachineParams",
    "Program",
    "Config",
    "StepOutcome",
    "INDICATOR_CASES",
    "fetch",
    "step_reference",
    "step_branchless",
    "indicator_partition",
    "init_config",
    "validate_config",
    "run_to_fixpoint",
    "program_to_json",
    "program_from_json",
    "program_to_bytes",
    "program_from_bytes",
    "config_to_json",
    "config_from_json",
]


class Opcode(IntEnum):
    """Instruction opcodes. Any other word in opcode position is a no-op."""

    HLT = 0  # not an opcode of its own: 0 is simply not executable
    LOD = 1  # a <- j (load the literal operand)
    ADD = 2  # a <- a + M[j mod n]  (mod 2^w)
    MUL = 3  # a <- a * M[j mod n]  (mod 2^w)
    STO = 4  # M[j mod n] <- a
    BNZ = 5  # if a != 0 then i <- j else i <- i + 2
    RD = 6   # M[j mod n] <- next input word, advance read cursor
    PRI = 7  # append M[j mod n] to the output (dropped when full)


class MachineParams:
    """Machine shape: word width w, memory size n, input/output/scratch caps.

    ell and s must be representable as words (< 2^w): the cursors u[0] and
    y[0] live in word cells and must be able to reach their caps exactly.
    """

    __slots__ = ("w", "n", "ell", "s", "mu", "mask")

    def __init__(self, w: int = 32, n: int = 250, ell: int = 10, s: int = 2, mu: int = 10):
        if not 1 <= w <= 64:
            raise ValueError(f"word width w must be in [1, 64], got {w}")
        if n < 2:
            raise ValueError(f"memory size n must be >= 2, got {n}")
        if ell < 1:
            raise ValueError(f"input capacity ell must be >= 1, got {ell}")
        if s < 1:
            raise ValueError(f"output capacity s must be >= 1, got {s}")
        if mu < 1:
            raise ValueError(f"scratch capacity mu must be >= 1, got {mu}")
        limit = 1 << w
        if ell >= limit:
            raise ValueError(f"ell must be < 2^w = {limit}, got {ell}")
        if s >= limit:
            raise ValueError(f"s must be < 2^w = {limit}, got {s}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "mask", limit - 1)

    def __setattr__(self, name, value):
        raise AttributeError("MachineParams is immutable")

    def __repr__(self):
        return (f"MachineParams(w={self.w}, n={self.n}, ell={self.ell}, "
                f"s={self.s}, mu={self.mu})")

    def __eq__(self, other):
        if not isinstance(other, MachineParams):
            return NotImplemented
        return (self.w, self.n, self.ell, self.s, self.mu) == \
               (other.w, other.n, other.ell, other.s, other.mu)

    def __hash__(self):
        return hash((self.w, self.n, self.ell, self.s, self.mu))

    def to_json(self) -> dict:
        return {"w": self.w, "n": self.n, "ell": self.ell, "s": self.s, "mu": self.mu}

    @classmethod
    def from_json(cls, obj: dict) -> "MachineParams":
        return cls(w=obj["w"], n=obj["n"], ell=obj["ell"], s=obj["s"], mu=obj["mu"])


class Config(NamedTuple):
    """Machine configuration. M, u, y are tuples of word values.

    u has ell+1 cells: u[0] is the read cursor, u[1..ell] the input words.
    y has s+1 cells: y[0] is the write count, y[1..s] the output words.
    """

    i: int
    a: int
    M: tuple
    u: tuple
    y: tuple


class StepOutcome(NamedTuple):
    next: Config
    fixed_point: bool


@dataclass(frozen=True)
class Program:
    """An even-length word vector: m instruction pairs (opcode, operand)."""

    words: tuple

    def __post_init__(self):
        if len(self.words) % 2 != 0:
            raise ValueError(f"program must have an even word count, got {len(self.words)}")

    @property
    def m(self) -> int:
        return len(self.words) // 2

    def pairs(self):
        w = self.words
        return [(w[2 * k], w[2 * k + 1]) for k in range(self.m)]


def fetch(c: Config, p: MachineParams):
    """Decode the current instruction pair (o, j).

    The operand address wraps in word space before reducing mod n, so a
    program whose last pair starts at i = n-1 fetches its operand as word
    ((i+1) mod 2^w) mod n.
    """
    n = p.n
    o = c.M[c.i % n]
    j = c.M[((c.i + 1) & p.mask) % n]
    return o, j


def step_reference(c: Config, p: MachineParams) -> StepOutcome:
    """One step by direct case analysis on the fetched opcode."""
    i, a, M, u, y = c
    mask = p.mask
    n = p.n
    o = M[i % n]
    j = M[((i + 1) & mask) % n]
    jn = j % n
    i2 = (i + 2) & mask

    if o == 1:  # LOD
        nxt = Config(i2, j, M, u, y)
    elif o == 2:  # ADD
        nxt = Config(i2, (a + M[jn]) & mask, M, u, y)
    elif o == 3:  # MUL
        nxt = Config(i2, (a * M[jn]) & mask, M, u, y)
    elif o == 4:  # STO
        if M[jn] == a:
            nxt = Config(i2, a, M, u, y)
        else:
            M2 = list(M)
            M2[jn] = a
            nxt = Config(i2, a, tuple(M2), u, y)
    elif o == 5:  # BNZ
        nxt = Config(j if a != 0 else i2, a, M, u, y)
    elif o == 6 and u[0] < p.ell:  # RD with input left
        u0 = u[0] + 1
        M2 = list(M)
        M2[jn] = u[u0]
        nxt = Config(i2, a, tuple(M2), (u0,) + u[1:], y)
    elif o == 7:  # PRI
        y0 = y[0]
        if y0 < p.s:
            Y = list(y)
            Y[0] = y0 + 1
            Y[y0 + 1] = M[jn]
            nxt = Config(i2, a, M, u, tuple(Y))
        else:
            nxt = Config(i2, a, M, u, y)  # output full: the write is dropped
    else:  # invalid opcode, or RD past the input: no transition applies
        nxt = c

    return StepOutcome(nxt, nxt == c)


def step_branchless(c: Config, p: MachineParams) -> StepOutcome:
    """One step with indicator arithmetic: every component of the next
    configuration is a 0/1-weighted blend of the candidate values of all
    cases, so no control flow depends on the opcode or the accumulator."""
    i, a, M, u, y = c
    mask = p.mask
    n = p.n
    o = M[i % n]
    j = M[((i + 1) & mask) % n]
    jn = j % n
    mj = M[jn]
    u0 = u[0]
    y0 = y[0]

    e_lod = o == 1
    e_add = o == 2
    e_mul = o == 3
    e_sto = o == 4
    e_bnz = o == 5
    e_taken = e_bnz & (a != 0)
    e_rd = (o == 6) & (u0 < p.ell)
    e_pri = o == 7
    advancing = e_lod + e_add + e_mul + e_sto + (e_bnz - e_taken) + e_rd + e_pri
    e_other = 1 - advancing - e_taken

    ni = advancing * ((i + 2) & mask) + e_taken * j + e_other * i
    na = (e_lod * j
          + e_add * ((a + mj) & mask)
          + e_mul * ((a * mj) & mask)
          + (1 - e_lod - e_add - e_mul) * a)

    uidx = min(u0 + 1, p.ell)  # clamped next cursor; index is always in range
    nmj = e_sto * a + e_rd * u[uidx] + (1 - e_sto - e_rd) * mj
    M2 = M[:jn] + (nmj,) + M[jn + 1:]
    nu0 = e_rd * uidx + (1 - e_rd) * u0
    u2 = (nu0,) + u[1:]

    e_wr = e_pri & (y0 < p.s)
    widx = e_wr * (y0 + 1)  # 0 when no write happens; cell 0 is then rewritten as-is
    Y = list(y)
    Y[widx] = e_wr * mj + (1 - e_wr) * y[widx]
    Y[0] = y0 + e_wr
    y2 = tuple(Y)

    nxt = Config(ni, na, M2, u2, y2)
    return StepOutcome(nxt, nxt == c)


INDICATOR_CASES = (
    "lod", "add", "mul", "sto", "bnz_taken", "bnz_fall", "rd", "pri", "other",
)


def indicator_partition(c: Config, p: MachineParams) -> tuple:
    """The 9 case indicators for c, in INDICATOR_CASES order.

    Exactly one of them is 1 on any configuration: the cases partition the
    configuration space.
    """
    i, a, M, u, y = c
    n = p.n
    o = M[i % n]
    e_lod = int(o == 1)
    e_add = int(o == 2)
    e_mul = int(o == 3)
    e_sto = int(o == 4)
    e_bnz = o == 5
    e_taken = int(e_bnz & (a != 0))
    e_fall = int(e_bnz & (a == 0))
    e_rd = int((o == 6) & (u[0] < p.ell))
    e_pri = int(o == 7)
    e_other = 1 - (e_lod + e_add + e_mul + e_sto + e_taken + e_fall + e_rd + e_pri)
    return (e_lod, e_add, e_mul, e_sto, e_taken, e_fall, e_rd, e_pri, e_other)


def init_config(program: Program, inputs, p: MachineParams) -> Config:
    """Initial configuration: program words at the bottom of memory, inputs
    on the tape behind cursor 0, empty output."""
    words = program.words
    if len(words) > p.n:
        raise CapacityError(
            f"program needs {len(words)} memory words but n = {p.n}")
    if len(inputs) > p.ell:
        raise CapacityError(
            f"input vector has {len(inputs)} words but ell = {p.ell}")
    limit = 1 << p.w
    for v in words:
        if not 0 <= v < limit:
            raise ValueError(f"program word {v} out of range for w = {p.w}")
    for v in inputs:
        if not 0 <= v < limit:
            raise ValueError(f"input word {v} out of range for w = {p.w}")
    M = tuple(words) + (0,) * (p.n - len(words))
    u = (0,) + tuple(inputs) + (0,) * (p.ell - len(inputs))
    y = (0,) * (p.s + 1)
    return Config(0, 0, M, u, y)


def validate_config(c: Config, p: MachineParams, deep: bool = False) -> None:
    """Raise ValueError if c is not well-formed for p.

    The cheap checks cover vector lengths and cursor ranges; deep=True also
    scans every word for range.
    """
    if len(c.M) != p.n:
        raise ValueError(f"M has {len(c.M)} cells, expected n = {p.n}")
    if len(c.u) != p.ell + 1:
        raise ValueError(f"u has {len(c.u)} cells, expected ell+1 = {p.ell + 1}")
    if len(c.y) != p.s + 1:
        raise ValueError(f"y has {len(c.y)} cells, expected s+1 = {p.s + 1}")
    if not 0 <= c.u[0] <= p.ell:
        raise ValueError(f"read cursor u[0] = {c.u[0]} outside [0, {p.ell}]")
    if not 0 <= c.y[0] <= p.s:
        raise ValueError(f"write count y[0] = {c.y[0]} outside [0, {p.s}]")
    if deep:
        limit = 1 << p.w
        for name, vec in (("i", (c.i,)), ("a", (c.a,)), ("M", c.M), ("u", c.u), ("y", c.y)):
            for v in vec:
                if not 0 <= v < limit:
                    raise ValueError(f"{name} holds word {v} out of range for w = {p.w}")


def run_to_fixpoint(c0: Config, tau_max: int, p: MachineParams, trace=None):
    """Iterate the step function until a fixed point or the budget runs out.

    Returns (final_config, tau_h) where tau_h is the number of steps taken
    before the configuration first repeated, or None if no fixed point was
    found within tau_max steps. tau_h = 0 means c0 itself is fixed.
    When given, trace is called as trace(t, config) before each fixedness
    test, including t = 0 on the initial configuration.
    """
    if tau_max < 0:
        raise ValueError(f"tau_max must be >= 0, got {tau_max}")
    c = c0
    for t in range(tau_max + 1):
        if trace is not None:
            trace(t, c)
        nxt, fixed = step_reference(c, p)
        if fixed:
            return c, t
        if t == tau_max:
            break
        c = nxt
    return c, None


# --- serialization ---------------------------------------------------------

def program_to_json(program: Program, w: int) -> str:
    return json.dumps({"w": w, "words": list(program.words)})


def program_from_json(text: str):
    """Parse a program dump; returns (Program, w)."""
    obj = json.loads(text)
    w = obj["w"]
    if not 1 <= w <= 64:
        raise ValueError(f"bad word width {w}")
    words = obj["words"]
    limit = 1 << w
    for v in words:
        if not isinstance(v, int) or not 0 <= v < limit:
            raise ValueError(f"word {v} out of range for w = {w}")
    return Program(tuple(words)), w


def program_to_bytes(program: Program, w: int) -> bytes:
    """Raw little-endian words, ceil(w/8) bytes each, no header."""
    nbytes = (w + 7) // 8
    return b"".join(v.to_bytes(nbytes, "little") for v in program.words)


def program_from_bytes(data: bytes, w: int) -> Program:
    nbytes = (w + 7) // 8
    if len(data) % nbytes != 0:
        raise ValueError(
            f"byte length {len(data)} is not a multiple of the word size {nbytes}")
    limit = 1 << w
    words = []
    for k in range(0, len(data), nbytes):
        v = int.from_bytes(data[k:k + nbytes], "little")
        if v >= limit:
            raise ValueError(f"word {v} out of range for w = {w}")
        words.append(v)
    return Program(tuple(words))


def config_to_json(c: Config) -> str:
    return json.dumps(
        {"i": c.i, "a": c.a, "M": list(c.M), "u": list(c.u), "y": list(c.y)})


def config_from_json(text: str) -> Config:
    obj = json.loads(text)
    return Config(obj["i"], obj["a"], tuple(obj["M"]), tuple(obj["u"]), tuple(obj["y"]))
