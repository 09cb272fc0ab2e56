"""Fuel-bounded big-step evaluator for the array language.

This is an independent reading of the language that never looks at compiled
code: statements execute directly against region cells. It exists so the
compiler and virtual machine can be checked against something that shares
no machinery with them.

Memory mirrors the geometry the compiler lays down: one linear block of
ell + s + mu word cells with ipt at offset 0, opt at offset ell, scr at
offset ell + s, and indices wrapping modulo the declared region length
(N_in, N_out, mu). A declared length longer than the region's capacity
therefore reaches into the following region's cells, exactly as a compiled
program's wrapped addresses do.

Fuel is charged one unit per executed statement: each assignment, each
ife guard evaluation, each whl guard test, and the hlt itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .lang import ArrayRef, Assign, BinOp, Block, Const, FunDecl, Ife, Whl
from .machine import MachineParams

__all__ = ["OracleStatus", "OracleResult", "evaluate"]


class OracleStatus(Enum):
    HALTED = "halted"
    FUEL_EXHAUSTED = "fuel_exhausted"


@dataclass(frozen=True)
class OracleResult:
    status: OracleStatus
    opt: tuple       # the declared N_out output words (aliases included)
    dsl_steps: int   # statements executed


class _Halt(Exception):
    pass


class _OutOfFuel(Exception):
    pass


class _Eval:
    def __init__(self, fd: FunDecl, inputs, fuel: int, p: MachineParams):
        self.mask = p.mask
        self.fuel = fuel
        self.steps = 0
        self.cells = [0] * (p.ell + p.s + p.mu)
        self.base = {"ipt": 0, "opt": p.ell, "scr": p.ell + p.s}
        self.declared = {"ipt": fd.n_in, "opt": fd.n_out, "scr": p.mu}
        for k in range(min(fd.n_in, len(inputs))):
            self.cells[k] = inputs[k] & self.mask

    def charge(self):
        if self.steps >= self.fuel:
            raise _OutOfFuel
        self.steps += 1

    def cell(self, ref: ArrayRef) -> int:
        return self.base[ref.region] + ref.index % self.declared[ref.region]

    def expr(self, e) -> int:
        if isinstance(e, Const):
            return e.value
        if isinstance(e, ArrayRef):
            return self.cells[self.cell(e)]
        if isinstance(e, BinOp):
            left = self.expr(e.left)
            right = self.expr(e.right)
            if e.op == "+":
                return (left + right) & self.mask
            return (left * right) & self.mask
        raise TypeError(f"not an expression: {e!r}")

    def block(self, b: Block):
        for st in b.stmts:
            self.stmt(st)
        if b.halts:
            self.charge()
            raise _Halt

    def stmt(self, st):
        if isinstance(st, Assign):
            self.charge()
            self.cells[self.cell(st.place)] = self.expr(st.expr)
        elif isinstance(st, Ife):
            self.charge()
            if self.cells[self.cell(st.guard)] != 0:
                self.block(st.then_body)
            else:
                self.block(st.else_body)
        elif isinstance(st, Whl):
            while True:
                self.charge()  # one unit per guard test
                if self.cells[self.cell(st.guard)] == 0:
                    return
                self.block(st.body)
        else:
            raise TypeError(f"not a statement: {st!r}")


def evaluate(fd: FunDecl, inputs, fuel: int, p: MachineParams) -> OracleResult:
    """Run fd on the given input words with a statement budget.

    Inputs beyond the declared arity are ignored; missing inputs read as 0.
    The returned opt vector has the declared n_out words, read through the
    same wrapped geometry the statements used.
    """
    if fuel < 0:
        raise ValueError(f"fuel must be >= 0, got {fuel}")
    span = p.ell + p.s + p.mu
    if fd.n_in > span or fd.n_out > p.s + p.mu:
        # A declared length reaching past the laid-out regions would alias
        # into code memory under compilation; there is no array-level meaning
        # to mirror there.
        raise ValueError(
            f"declared arities (in={fd.n_in}, out={fd.n_out}) reach past the "
            f"region span for ell={p.ell}, s={p.s}, mu={p.mu}")
    ev = _Eval(fd, inputs, fuel, p)
    status = OracleStatus.FUEL_EXHAUSTED
    try:
        ev.block(fd.body)
        status = OracleStatus.HALTED  # fell off the end of the body
    except _Halt:
        status = OracleStatus.HALTED
    except _OutOfFuel:
        status = OracleStatus.FUEL_EXHAUSTED
    opt = tuple(ev.cells[p.ell + k] for k in range(fd.n_out))
    return OracleResult(status=status, opt=opt, dsl_steps=ev.steps)
