"""Exact-uniform sampling of array-language programs by token length.

The grammar is unambiguous, so the number of programs of token length L is
a finite count C(L), computed by memoized convolution over the grammar's
productions with exact big integers. Sampling draws one uniform rank
r in [0, C(L)) from a keyed deterministic bit stream and unranks it: walk
the productions in declaration order, then the split of the remaining
length among the production's nonterminals (ascending first-child length,
left-major child ranks), subtracting counts until the rank lands.

Enumeration walks the identical order, so enumerate_all(L) yields exactly
the programs unrank produces for ranks 0, 1, 2, ... in that order; the two
are checked against each other in the tests.

Sampling is reproducible across runs and platforms: the bit stream is
SHA-256 in counter mode keyed by (seed, index, domain), so sample k of a
batch can be regenerated in isolation.
"""

from __future__ import annotations

import hashlib
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable

from .errors import EmptyLanguageError, EnumerationLimitError
from .lang import ArrayRef, Assign, BinOp, Block, Const, FunDecl, Ife, Whl

__all__ = [
    "DeterministicStream",
    "CountTable",
    "count_programs",
    "unrank_program",
    "sample_program",
    "enumerate_all",
    "sample_inputs",
    "ENUMERATION_GUARD",
]

ENUMERATION_GUARD = 10 ** 7

_U64 = (1 << 64) - 1


class DeterministicStream:
    """Counter-mode SHA-256 bit stream keyed by (seed, index, domain).

    Reproducible by construction: no platform, hash-randomization, or
    library-version dependence.
    """

    def __init__(self, seed: int, index: int, domain: bytes):
        self._prefix = (b"raspvisor:" + domain + b":"
                        + (seed & _U64).to_bytes(8, "little")
                        + (index & _U64).to_bytes(8, "little"))
        self._ctr = 0
        self._pool = 0
        self._nbits = 0

    def getrandbits(self, k: int) -> int:
        if k < 0:
            raise ValueError("bit count must be >= 0")
        while self._nbits < k:
            block = hashlib.sha256(
                self._prefix + self._ctr.to_bytes(8, "little")).digest()
            self._ctr += 1
            self._pool |= int.from_bytes(block, "big") << self._nbits
            self._nbits += 256
        val = self._pool & ((1 << k) - 1)
        self._pool >>= k
        self._nbits -= k
        return val

    def randbelow(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        k = (bound - 1).bit_length()
        if k == 0:
            return 0
        while True:
            v = self.getrandbits(k)
            if v < bound:
                return v


# --- grammar ----------------------------------------------------------------

@dataclass(frozen=True)
class _Prod:
    nts: tuple               # nonterminal names, left to right
    n_terminals: int         # tokens contributed by the fixed terminals
    build: Callable          # build(*child_values) -> node


def _grammar():
    # Production order is the canonical enumeration order.
    g = {}
    g["N"] = tuple(
        _Prod((), 1, (lambda d: (lambda: d))(d)) for d in range(1, 10))
    g["Z"] = (
        _Prod((), 1, lambda: 0),
        _Prod(("N",), 0, lambda n: n),
    )
    g["G"] = tuple(
        _Prod(("Z",), 3, (lambda r: (lambda z: ArrayRef(r, z)))(r))
        for r in ("ipt", "scr", "opt"))
    g["P"] = tuple(
        _Prod(("Z",), 3, (lambda r: (lambda z: ArrayRef(r, z)))(r))
        for r in ("scr", "opt"))
    g["E"] = (
        _Prod(("G", "G"), 1, lambda l, r: BinOp("+", l, r)),
        _Prod(("G", "G"), 1, lambda l, r: BinOp("*", l, r)),
        _Prod(("G", "Z"), 1, lambda l, z: BinOp("+", l, Const(z))),
        _Prod(("G", "Z"), 1, lambda l, z: BinOp("*", l, Const(z))),
        _Prod(("G",), 0, lambda g_: g_),
        _Prod(("Z",), 0, lambda z: Const(z)),
    )
    g["S"] = (
        _Prod(("P", "E"), 1, lambda p, e: Assign(p, e)),
        _Prod(("G", "B", "B"), 5, lambda gd, b1, b2: Ife(gd, b1, b2)),
        _Prod(("G", "B"), 3, lambda gd, b: Whl(gd, b)),
    )
    g["B"] = (
        _Prod(("S",), 0, lambda s: Block((s,), False)),
        _Prod(("S", "B"), 1, lambda s, b: Block((s,) + b.stmts, b.halts)),
        _Prod((), 1, lambda: Block((), True)),  # hlt
    )
    # fun f0 ( ipt : W ^ N ) -> W ^ N { B } : 13 fixed terminals
    g["F"] = (
        _Prod(("N", "N", "B"), 13,
              lambda n_in, n_out, body: FunDecl(n_in, n_out, body)),
    )
    return g


_GRAMMAR = _grammar()

# Cache fully materialized enumeration lists below this many items.
_ENUM_CACHE_MAX = 200_000


class CountTable:
    """Memoized exact counts, unranking, and ordered enumeration.

    Build one and share it: all state is insert-only memoization, and
    results are pure functions of (nonterminal, length).
    """

    def __init__(self):
        self._nt = {}
        self._seq = {}
        self._prod_cum = {}
        self._split_cum = {}

    # counting

    def count(self, name: str, k: int) -> int:
        if k < 0:
            return 0
        key = (name, k)
        got = self._nt.get(key)
        if got is None:
            got = 0
            for prod in _GRAMMAR[name]:
                got += self._seq_count(prod.nts, k - prod.n_terminals)
            self._nt[key] = got
        return got

    def _seq_count(self, nts: tuple, k: int) -> int:
        if k < 0:
            return 0
        if not nts:
            return 1 if k == 0 else 0
        if len(nts) == 1:
            return self.count(nts[0], k)
        key = (nts, k)
        got = self._seq.get(key)
        if got is None:
            first, rest = nts[0], nts[1:]
            got = 0
            for k1 in range(1, k + 1):
                c1 = self.count(first, k1)
                if c1:
                    got += c1 * self._seq_count(rest, k - k1)
            self._seq[key] = got
        return got

    # unranking

    def unrank(self, name: str, k: int, r: int):
        key = (name, k)
        cum = self._prod_cum.get(key)
        if cum is None:
            cum = []
            running = 0
            for prod in _GRAMMAR[name]:
                running += self._seq_count(prod.nts, k - prod.n_terminals)
                cum.append(running)
            self._prod_cum[key] = cum
        if r < 0 or not cum or r >= cum[-1]:
            raise ValueError(f"rank {r} out of range for {name} at length {k}")
        idx = bisect_right(cum, r)
        prod = _GRAMMAR[name][idx]
        base = cum[idx - 1] if idx else 0
        children = self._unrank_seq(prod.nts, k - prod.n_terminals, r - base)
        return prod.build(*children)

    def _unrank_seq(self, nts: tuple, k: int, r: int) -> list:
        if not nts:
            return []
        if len(nts) == 1:
            return [self.unrank(nts[0], k, r)]
        first, rest = nts[0], nts[1:]
        key = (nts, k)
        tab = self._split_cum.get(key)
        if tab is None:
            k1s, cums = [], []
            running = 0
            for k1 in range(1, k + 1):
                ways = self.count(first, k1) * self._seq_count(rest, k - k1)
                if ways:
                    running += ways
                    k1s.append(k1)
                    cums.append(running)
            tab = (k1s, cums)
            self._split_cum[key] = tab
        k1s, cums = tab
        idx = bisect_right(cums, r)
        k1 = k1s[idx]
        base = cums[idx - 1] if idx else 0
        rest_count = self._seq_count(rest, k - k1)
        left_rank, rest_rank = divmod(r - base, rest_count)
        return [self.unrank(first, k1, left_rank)] + \
            self._unrank_seq(rest, k - k1, rest_rank)

    # ordered enumeration

    def enumerate(self, name: str, k: int, _memo=None):
        """Yield every derivation of name at length k, in rank order."""
        memo = {} if _memo is None else _memo
        return iter(self._enum_nt(name, k, memo))

    def _enum_nt(self, name, k, memo):
        key = (name, k)
        cached = memo.get(key)
        if cached is not None:
            return cached
        if 0 < self.count(name, k) <= _ENUM_CACHE_MAX:
            items = list(self._gen_nt(name, k, memo))
            memo[key] = items
            return items
        return self._gen_nt(name, k, memo)

    def _gen_nt(self, name, k, memo):
        for prod in _GRAMMAR[name]:
            rem = k - prod.n_terminals
            if rem < 0 or self._seq_count(prod.nts, rem) == 0:
                continue
            for children in self._gen_seq(prod.nts, rem, memo):
                yield prod.build(*children)

    def _gen_seq(self, nts, k, memo):
        if not nts:
            if k == 0:
                yield []
            return
        first, rest = nts[0], nts[1:]
        if not rest:
            for v in self._enum_nt(first, k, memo):
                yield [v]
            return
        for k1 in range(1, k + 1):
            if self.count(first, k1) == 0 or self._seq_count(rest, k - k1) == 0:
                continue
            for v in self._enum_nt(first, k1, memo):
                for vs in self._gen_seq(rest, k - k1, memo):
                    yield [v] + vs


_DEFAULT_TABLE = CountTable()


def count_programs(length: int, table: CountTable | None = None) -> int:
    """Exact number of programs with the given token length."""
    t = table if table is not None else _DEFAULT_TABLE
    return t.count("F", length)


def unrank_program(length: int, rank: int, table: CountTable | None = None) -> FunDecl:
    t = table if table is not None else _DEFAULT_TABLE
    return t.unrank("F", length, rank)


def sample_program(length: int, seed: int, index: int,
                   table: CountTable | None = None) -> FunDecl:
    """The index-th uniform draw from programs of the given token length."""
    t = table if table is not None else _DEFAULT_TABLE
    total = t.count("F", length)
    if total == 0:
        raise EmptyLanguageError(f"no programs have token length {length}")
    r = DeterministicStream(seed, index, b"prog").randbelow(total)
    return t.unrank("F", length, r)


def enumerate_all(length: int, guard: int = ENUMERATION_GUARD,
                  table: CountTable | None = None):
    """Iterator over every program of the given length, in rank order.

    Refuses (before yielding anything) when the language at this length
    holds more than `guard` programs.
    """
    t = table if table is not None else _DEFAULT_TABLE
    total = t.count("F", length)
    if total > guard:
        raise EnumerationLimitError(
            f"{total} programs at token length {length} exceeds the "
            f"enumeration guard {guard}")
    if total == 0:
        return iter(())
    return t.enumerate("F", length)


def sample_inputs(arity: int, w: int, seed: int, index: int) -> tuple:
    """The index-th uniform input vector: arity w-bit words."""
    if not 1 <= arity <= 9:
        raise ValueError(f"arity must be in [1, 9], got {arity}")
    if not 1 <= w <= 64:
        raise ValueError(f"word width must be in [1, 64], got {w}")
    stream = DeterministicStream(seed, index, b"inp")
    return tuple(stream.getrandbits(w) for _ in range(arity))
