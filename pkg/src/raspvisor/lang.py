"""Heapless array language: tokens, AST, parser, pretty-printer.

    F ::= fun f0 ( ipt : W ^ N ) -> W ^ N { B }
    B ::= S  |  S ; B  |  hlt
    S ::= P = E  |  ife G { B } { B }  |  whl G { B }
    P ::= scr [ Z ]  |  opt [ Z ]
    G ::= ipt [ Z ]  |  scr [ Z ]  |  opt [ Z ]
    E ::= G + G  |  G * G  |  G + Z  |  G * Z  |  G  |  Z
    Z ::= 0 | N          N ::= 1 | ... | 9

A program reads up to 9 input words (ipt), writes up to 9 output words
(opt), and may use a scratch region (scr). Array indices wrap modulo the
declared region length, so every reference is total. ipt is read-only.
Program length is measured in tokens of this grammar.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

from .errors import LangError

__all__ = [
    "Token",
    "tokenize",
    "ArrayRef",
    "Const",
    "BinOp",
    "Assign",
    "Ife",
    "Whl",
    "Block",
    "FunDecl",
    "parse",
    "parse_source",
    "ast_to_tokens",
    "token_length",
    "pretty_print",
    "ast_to_json",
]

KEYWORDS = frozenset({"fun", "f0", "ipt", "opt", "scr", "whl", "ife", "hlt", "W"})
DIGITS = frozenset("0123456789")
PUNCT = frozenset({"(", ")", "[", "]", "{", "}", ";", ":", "=", "+", "*", "^"})
REGIONS = ("ipt", "opt", "scr")


class Token(NamedTuple):
    kind: str  # the lexeme itself: every token type is a fixed string
    pos: int   # character offset in the source


def tokenize(text: str) -> list:
    """Split source text into tokens; raise LangError on anything foreign."""
    toks = []
    k = 0
    size = len(text)
    while k < size:
        ch = text[k]
        if ch.isspace():
            k += 1
            continue
        if ch == "-":
            if text[k:k + 2] == "->":
                toks.append(Token("->", k))
                k += 2
                continue
            raise LangError("stray '-' (only '->' is a token)", k)
        if ch in PUNCT:
            toks.append(Token(ch, k))
            k += 1
            continue
        if ch.isalnum():
            start = k
            while k < size and text[k].isalnum():
                k += 1
            run = text[start:k]
            if run in KEYWORDS or (len(run) == 1 and run in DIGITS):
                toks.append(Token(run, start))
                continue
            raise LangError(f"unknown word {run!r}", start)
        raise LangError(f"illegal character {ch!r}", k)
    return toks


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class ArrayRef:
    region: str  # "ipt" | "opt" | "scr"
    index: int   # 0..9


@dataclass(frozen=True, slots=True)
class Const:
    value: int  # 0..9


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str  # "+" | "*"
    left: ArrayRef
    right: Union[ArrayRef, Const]


Expr = Union[ArrayRef, Const, BinOp]


@dataclass(frozen=True, slots=True)
class Assign:
    place: ArrayRef  # opt or scr only
    expr: Expr


# Block is declared below; forward references keep these annotations readable.

@dataclass(frozen=True, slots=True)
class Ife:
    guard: ArrayRef
    then_body: "Block"
    else_body: "Block"


@dataclass(frozen=True, slots=True)
class Whl:
    guard: ArrayRef
    body: "Block"


Stmt = Union[Assign, Ife, Whl]


@dataclass(frozen=True, slots=True)
class Block:
    stmts: tuple
    halts: bool  # True when the block ends in an explicit hlt


@dataclass(frozen=True, slots=True)
class FunDecl:
    n_in: int   # 1..9 input words
    n_out: int  # 1..9 output words
    body: Block


# --- parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.k = 0

    def _pos(self) -> int:
        if self.k < len(self.toks):
            return self.toks[self.k].pos
        return self.toks[-1].pos + len(self.toks[-1].kind) if self.toks else 0

    def peek(self):
        return self.toks[self.k].kind if self.k < len(self.toks) else None

    def fail(self, what: str):
        found = self.peek()
        shown = "end of input" if found is None else repr(found)
        raise LangError(f"expected {what}, found {shown}", self._pos())

    def take(self, *expected: str) -> str:
        kind = self.peek()
        if kind in expected:
            self.k += 1
            return kind
        self.fail(" or ".join(repr(e) for e in expected))

    def digit(self, lo: int, what: str) -> int:
        kind = self.peek()
        if kind is not None and len(kind) == 1 and kind in DIGITS and int(kind) >= lo:
            self.k += 1
            return int(kind)
        self.fail(what)

    def parse_fun(self) -> FunDecl:
        for t in ("fun", "f0", "(", "ipt", ":", "W", "^"):
            self.take(t)
        n_in = self.digit(1, "an input arity 1-9")
        for t in (")", "->", "W", "^"):
            self.take(t)
        n_out = self.digit(1, "an output arity 1-9")
        self.take("{")
        body = self.parse_block()
        self.take("}")
        if self.k != len(self.toks):
            self.fail("end of input")
        return FunDecl(n_in, n_out, body)

    def parse_block(self) -> Block:
        if self.peek() == "hlt":
            self.k += 1
            return Block((), True)
        s = self.parse_stmt()
        if self.peek() == ";":
            self.k += 1
            rest = self.parse_block()
            return Block((s,) + rest.stmts, rest.halts)
        return Block((s,), False)

    def parse_stmt(self):
        kind = self.peek()
        if kind == "ife":
            self.k += 1
            guard = self.parse_ref(REGIONS)
            self.take("{")
            then_body = self.parse_block()
            self.take("}")
            self.take("{")
            else_body = self.parse_block()
            self.take("}")
            return Ife(guard, then_body, else_body)
        if kind == "whl":
            self.k += 1
            guard = self.parse_ref(REGIONS)
            self.take("{")
            body = self.parse_block()
            self.take("}")
            return Whl(guard, body)
        if kind in ("opt", "scr"):
            place = self.parse_ref(("opt", "scr"))
            self.take("=")
            expr = self.parse_expr()
            return Assign(place, expr)
        if kind == "ipt":
            raise LangError("ipt is read-only and cannot be assigned", self._pos())
        self.fail("a statement ('opt', 'scr', 'ife', 'whl', or 'hlt')")

    def parse_ref(self, regions) -> ArrayRef:
        region = self.take(*regions)
        self.take("[")
        idx = self.digit(0, "an index digit 0-9")
        self.take("]")
        return ArrayRef(region, idx)

    def parse_expr(self):
        kind = self.peek()
        if kind is not None and len(kind) == 1 and kind in DIGITS:
            self.k += 1
            if self.peek() in ("+", "*"):
                raise LangError(
                    "a constant cannot be the left operand of '+' or '*'", self._pos())
            return Const(int(kind))
        if kind in REGIONS:
            left = self.parse_ref(REGIONS)
            if self.peek() in ("+", "*"):
                op = self.take("+", "*")
                rkind = self.peek()
                if rkind is not None and len(rkind) == 1 and rkind in DIGITS:
                    self.k += 1
                    return BinOp(op, left, Const(int(rkind)))
                if rkind in REGIONS:
                    return BinOp(op, left, self.parse_ref(REGIONS))
                self.fail("an array reference or a digit")
            return left
        self.fail("an expression (array reference or digit)")


def parse(toks) -> FunDecl:
    return _Parser(list(toks)).parse_fun()


def parse_source(text: str) -> FunDecl:
    return parse(tokenize(text))


# --- token stream and pretty-printing --------------------------------------

def ast_to_tokens(node) -> list:
    """The canonical token sequence of an AST node (lexemes, in order)."""
    out = []
    _tokens(node, out)
    return out


def _tokens(node, out):
    if isinstance(node, FunDecl):
        out += ["fun", "f0", "(", "ipt", ":", "W", "^", str(node.n_in), ")",
                "->", "W", "^", str(node.n_out), "{"]
        _tokens(node.body, out)
        out.append("}")
    elif isinstance(node, Block):
        parts = list(node.stmts) + (["hlt"] if node.halts else [])
        for k, part in enumerate(parts):
            if k:
                out.append(";")
            if part == "hlt":
                out.append("hlt")
            else:
                _tokens(part, out)
    elif isinstance(node, Assign):
        _tokens(node.place, out)
        out.append("=")
        _tokens(node.expr, out)
    elif isinstance(node, Ife):
        out.append("ife")
        _tokens(node.guard, out)
        out.append("{")
        _tokens(node.then_body, out)
        out += ["}", "{"]
        _tokens(node.else_body, out)
        out.append("}")
    elif isinstance(node, Whl):
        out.append("whl")
        _tokens(node.guard, out)
        out.append("{")
        _tokens(node.body, out)
        out.append("}")
    elif isinstance(node, ArrayRef):
        out += [node.region, "[", str(node.index), "]"]
    elif isinstance(node, Const):
        out.append(str(node.value))
    elif isinstance(node, BinOp):
        _tokens(node.left, out)
        out.append(node.op)
        _tokens(node.right, out)
    else:
        raise TypeError(f"not an AST node: {node!r}")


def token_length(node) -> int:
    """Program length in grammar tokens."""
    return len(ast_to_tokens(node))


_NO_SPACE_BEFORE = frozenset({"[", "]", "(", ")", ";", ":", "^"})
_NO_SPACE_AFTER = frozenset({"[", "(", "^"})


def _join(tokens) -> str:
    out = []
    prev = None
    for tok in tokens:
        if prev is not None and tok not in _NO_SPACE_BEFORE and prev not in _NO_SPACE_AFTER:
            out.append(" ")
        out.append(tok)
        prev = tok
    return "".join(out)


def pretty_print(node, indent=None) -> str:
    """Render an AST back to source.

    With indent=None everything goes on one line. With an integer indent,
    statements are laid out one per line with that many spaces per nesting
    level. Both renderings tokenize back to ast_to_tokens(node) exactly.
    """
    if indent is None:
        return _join(ast_to_tokens(node))
    lines = []
    if not isinstance(node, FunDecl):
        raise TypeError("multiline layout renders whole function declarations")
    head = _join(["fun", "f0", "(", "ipt", ":", "W", "^", str(node.n_in), ")",
                  "->", "W", "^", str(node.n_out), "{"])
    lines.append(head)
    _layout_block(node.body, 1, indent, lines)
    lines.append("}")
    return "\n".join(lines)


def _layout_block(block: Block, depth: int, indent: int, lines):
    pad = " " * (indent * depth)
    parts = list(block.stmts) + (["hlt"] if block.halts else [])
    for k, part in enumerate(parts):
        last = k == len(parts) - 1
        if part == "hlt":
            lines.append(pad + "hlt" + ("" if last else ";"))
            continue
        if isinstance(part, Assign):
            lines.append(pad + _join(ast_to_tokens(part)) + ("" if last else ";"))
        elif isinstance(part, Ife):
            lines.append(pad + _join(["ife"] + ast_to_tokens(part.guard) + ["{"]))
            _layout_block(part.then_body, depth + 1, indent, lines)
            lines.append(pad + "} {")
            _layout_block(part.else_body, depth + 1, indent, lines)
            lines.append(pad + "}" + ("" if last else ";"))
        elif isinstance(part, Whl):
            lines.append(pad + _join(["whl"] + ast_to_tokens(part.guard) + ["{"]))
            _layout_block(part.body, depth + 1, indent, lines)
            lines.append(pad + "}" + ("" if last else ";"))
        else:
            raise TypeError(f"not a statement: {part!r}")


def ast_to_json(node):
    """Nested-dict debug dump of an AST."""
    if isinstance(node, FunDecl):
        return {"node": "fun", "n_in": node.n_in, "n_out": node.n_out,
                "body": ast_to_json(node.body)}
    if isinstance(node, Block):
        return {"node": "block", "stmts": [ast_to_json(s) for s in node.stmts],
                "halts": node.halts}
    if isinstance(node, Assign):
        return {"node": "assign", "place": ast_to_json(node.place),
                "expr": ast_to_json(node.expr)}
    if isinstance(node, Ife):
        return {"node": "ife", "guard": ast_to_json(node.guard),
                "then": ast_to_json(node.then_body), "else": ast_to_json(node.else_body)}
    if isinstance(node, Whl):
        return {"node": "whl", "guard": ast_to_json(node.guard),
                "body": ast_to_json(node.body)}
    if isinstance(node, ArrayRef):
        return {"node": "ref", "region": node.region, "index": node.index}
    if isinstance(node, Const):
        return {"node": "const", "value": node.value}
    if isinstance(node, BinOp):
        return {"node": node.op, "left": ast_to_json(node.left),
                "right": ast_to_json(node.right)}
    raise TypeError(f"not an AST node: {node!r}")
