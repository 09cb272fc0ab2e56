"""Lowering from the array language to word-RASP programs.

Memory layout of a compiled program (word addresses):

    [0, 2m)              m instruction pairs
    [2m, 2m+5)           reserved; cell nu = 2m is the binop scratch word
    [2m+5, +ell)         ipt region (capacity ell, declared length N_in)
    [.., +s)             opt region (capacity s, declared length N_out)
    [.., +mu)            scr region (capacity mu, declared length mu)

Array references wrap modulo the declared region length, then land at
base + offset inside the capacity span. A declared length may exceed the
region's capacity (N_out up to 9 against s output cells); the wrapped
offset then runs past the region into the cells that follow it. The
big-step evaluator mirrors the same geometry so both agree on every
program, and the output comparison only ever reads the first
min(N_out, s) output words.

Control flow lowers to BNZ on a freshly loaded guard; an unconditional
jump is LOD 1 followed by BNZ. hlt emits the output epilogue (one PRI per
declared output word, then the unexecutable pair 0,0) in place; the same
epilogue also terminates the fall-through end of the body, so a body that
ends in hlt carries a second, unreachable epilogue.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CapacityError
from .lang import ArrayRef, Assign, BinOp, Block, Const, FunDecl, Ife, Whl
from .machine import MachineParams, Program

__all__ = ["LayoutInfo", "addr_of", "lower", "disassemble"]

_RESERVED = 5  # words between the code and the ipt region; nu is the first


@dataclass(frozen=True)
class LayoutInfo:
    """Where a compiled program's regions live and how long they claim to be."""

    m: int         # instruction pairs
    nu: int        # scratch word address (= 2m)
    ipt_base: int
    opt_base: int
    scr_base: int
    ipt_len: int   # declared lengths used for index wrapping
    opt_len: int
    scr_len: int

    def to_json(self) -> dict:
        return {
            "m": self.m, "nu": self.nu,
            "ipt_base": self.ipt_base, "opt_base": self.opt_base,
            "scr_base": self.scr_base, "ipt_len": self.ipt_len,
            "opt_len": self.opt_len, "scr_len": self.scr_len,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LayoutInfo":
        return cls(**{k: obj[k] for k in (
            "m", "nu", "ipt_base", "opt_base", "scr_base",
            "ipt_len", "opt_len", "scr_len")})


def _layout(m: int, n_in: int, n_out: int, p: MachineParams) -> LayoutInfo:
    need = _RESERVED + p.ell + p.s + p.mu + 2 * m
    if need > p.n:
        raise CapacityError(
            f"compiled program needs {need} memory words "
            f"(2m = {2 * m} code + {_RESERVED} reserved + regions "
            f"{p.ell}+{p.s}+{p.mu}) but n = {p.n}")
    ipt_base = 2 * m + _RESERVED
    opt_base = ipt_base + p.ell
    scr_base = opt_base + p.s
    return LayoutInfo(m=m, nu=2 * m, ipt_base=ipt_base, opt_base=opt_base,
                      scr_base=scr_base, ipt_len=n_in, opt_len=n_out,
                      scr_len=p.mu)


def addr_of(region: str, z: int, layout: LayoutInfo) -> int:
    """Memory address of region[z]: indices wrap modulo the declared length."""
    if region == "ipt":
        return layout.ipt_base + z % layout.ipt_len
    if region == "opt":
        return layout.opt_base + z % layout.opt_len
    if region == "scr":
        return layout.scr_base + z % layout.scr_len
    raise ValueError(f"unknown region {region!r}")


# Operand placeholders resolved once the code length is known.

class _Label:
    __slots__ = ()


@dataclass(frozen=True)
class _Ref:
    region: str
    index: int


_NU = "nu"  # sentinel operand for the scratch cell

_LOD, _ADD, _MUL, _STO, _BNZ, _RD, _PRI = 1, 2, 3, 4, 5, 6, 7


class _Emitter:
    def __init__(self):
        self.code = []   # (opcode, operand) with placeholder operands
        self.marks = {}  # _Label -> pair index

    def emit(self, op, operand):
        self.code.append((op, operand))

    def mark(self, label: _Label):
        self.marks[label] = len(self.code)

    def jump(self, label: _Label):
        self.emit(_LOD, 1)      # a <- 1 so the branch is always taken
        self.emit(_BNZ, label)


def lower(fd: FunDecl, p: MachineParams):
    """Compile a function declaration; returns (Program, LayoutInfo)."""
    # declared arities index cells relative to their region base, so a
    # declaration wider than the remaining region span would address memory
    # past the reserved block (and wrap into code at run time)
    span = p.ell + p.s + p.mu
    if fd.n_in > span or fd.n_out > p.s + p.mu:
        raise CapacityError(
            f"declared arities ipt^{fd.n_in}/opt^{fd.n_out} reach past the "
            f"region span (ell+s+mu = {span}, s+mu = {p.s + p.mu})")
    em = _Emitter()
    for k in range(fd.n_in):
        em.emit(_RD, _Ref("ipt", k))
    _lower_block(fd.body, fd, em)
    _emit_epilogue(fd, em)

    layout = _layout(len(em.code), fd.n_in, fd.n_out, p)
    words = []
    for op, operand in em.code:
        words.append(op)
        words.append(_resolve(operand, em.marks, layout))
    top = max(words)
    if top > p.mask:
        raise CapacityError(
            f"emitted word {top} is not representable with w = {p.w}")
    return Program(tuple(words)), layout


def _resolve(operand, marks, layout: LayoutInfo) -> int:
    if isinstance(operand, int):
        return operand
    if operand is _NU:
        return layout.nu
    if isinstance(operand, _Ref):
        return addr_of(operand.region, operand.index, layout)
    if isinstance(operand, _Label):
        return 2 * marks[operand]
    raise TypeError(f"unresolvable operand {operand!r}")


def _emit_epilogue(fd: FunDecl, em: _Emitter):
    for k in range(fd.n_out):
        em.emit(_PRI, _Ref("opt", k))
    em.emit(0, 0)  # no rule matches opcode 0: the machine pins here


def _lower_block(block: Block, fd: FunDecl, em: _Emitter):
    for st in block.stmts:
        _lower_stmt(st, fd, em)
    if block.halts:
        _emit_epilogue(fd, em)


def _lower_stmt(st, fd: FunDecl, em: _Emitter):
    if isinstance(st, Assign):
        _lower_expr(st.expr, em)
        em.emit(_STO, _Ref(st.place.region, st.place.index))
    elif isinstance(st, Ife):
        _lower_expr(st.guard, em)
        l_then, l_end = _Label(), _Label()
        em.emit(_BNZ, l_then)
        _lower_block(st.else_body, fd, em)
        em.jump(l_end)
        em.mark(l_then)
        _lower_block(st.then_body, fd, em)
        em.mark(l_end)
    elif isinstance(st, Whl):
        l_head, l_body, l_end = _Label(), _Label(), _Label()
        em.mark(l_head)
        _lower_expr(st.guard, em)
        em.emit(_BNZ, l_body)
        em.jump(l_end)
        em.mark(l_body)
        _lower_block(st.body, fd, em)
        em.jump(l_head)
        em.mark(l_end)
    else:
        raise TypeError(f"not a statement: {st!r}")


def _lower_expr(expr, em: _Emitter):
    """Leave the expression's value in the accumulator."""
    if isinstance(expr, Const):
        em.emit(_LOD, expr.value)
    elif isinstance(expr, ArrayRef):
        em.emit(_LOD, 0)
        em.emit(_ADD, _Ref(expr.region, expr.index))
    elif isinstance(expr, BinOp):
        _lower_expr(expr.left, em)
        em.emit(_STO, _NU)
        _lower_expr(expr.right, em)
        em.emit(_ADD if expr.op == "+" else _MUL, _NU)
    else:
        raise TypeError(f"not an expression: {expr!r}")


_MNEMONIC = {1: "LOD", 2: "ADD", 3: "MUL", 4: "STO", 5: "BNZ", 6: "RD", 7: "PRI"}
_ADDRESSING = {2, 3, 4, 6, 7}  # ops whose operand is a memory address


def disassemble(program: Program, layout: LayoutInfo | None = None) -> str:
    """Human-readable listing; with a layout, operands get region notes."""
    lines = []
    for k, (op, operand) in enumerate(program.pairs()):
        addr = 2 * k
        if op == 0 and operand == 0:
            lines.append(f"{addr:4d}  HLT")
            continue
        name = _MNEMONIC.get(op, "???")
        note = ""
        if layout is not None and op in _ADDRESSING:
            note = _region_note(operand, layout)
        elif op == 5:
            note = f"  ; -> {operand}"
        lines.append(f"{addr:4d}  {name:3s}  {operand}{note}")
    return "\n".join(lines)


def _region_note(address: int, layout: LayoutInfo) -> str:
    if address == layout.nu:
        return "  ; nu"
    spans = (
        ("code", 0, layout.nu),
        ("reserved", layout.nu, layout.ipt_base),
        ("ipt", layout.ipt_base, layout.opt_base),
        ("opt", layout.opt_base, layout.scr_base),
        ("scr", layout.scr_base, layout.scr_base + layout.scr_len),
    )
    for name, lo, hi in spans:
        if lo <= address < hi:
            return f"  ; {name}+{address - lo}"
    return ""
