"""Frontend for the .fps dataflow DSL.

Grammar (comments run from '#' to end of line):

    spec    := { decl }
    decl    := "input" ident ":" "sif" "(" int "/" int "/" int ")" ";"
             | "const" ident "=" ["-"] number ";"
             | "output" ident "=" expr ";"
    expr    := term { ("+" | "-") term }
    term    := factor { "*" factor }
    factor  := ident | number | "(" expr ")"

Numeric literals are parsed as exact decimal-scaled rationals, so a
coefficient like 0.15 reaches quantization uncorrupted by a binary-float
detour. Subtraction becomes an ADD node with a negate flag on the second
operand; unparenthesized sums associate to the left. The parser never
re-associates and never folds constants; it reproduces the source tree
exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .core import Dfg, Node, NodeKind, SifFormat
from .errors import ParseError

KEYWORDS = {"input", "const", "output", "sif"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(\.\d+)?([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[():;=+\-*/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # 'number' | 'ident' | keyword text | punct text | 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        lexeme = m.group(0)
        group = m.lastgroup
        if group == "number":
            tokens.append(Token("number", lexeme, line, col))
        elif group == "ident":
            kind = lexeme if lexeme in KEYWORDS else "ident"
            tokens.append(Token(kind, lexeme, line, col))
        elif group == "punct":
            tokens.append(Token(lexeme, lexeme, line, col))
        # whitespace/comments advance position only
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


@dataclass(frozen=True)
class Bindings:
    """Declared names of a spec.

    ``inputs`` maps each input to its declared (s, i, f) triple; the triple
    is kept raw so validate_formats can report invalid declarations instead
    of the parser crashing on them.
    """

    inputs: dict[str, tuple[int, int, int]]
    consts: dict[str, Fraction]
    outputs: tuple[str, ...]

    def input_format(self, name: str) -> SifFormat:
        s, i, f = self.inputs[name]
        return SifFormat(s, i, f)


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # 'invalid' | 'cannot-fit'
    message: str

    def __str__(self):
        return self.message


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.nodes: list[Node] = []
        self.inputs: dict[str, tuple[int, int, int]] = {}
        self.consts: dict[str, Fraction] = {}
        self.outputs: list[str] = []
        self._declared: set[str] = set()
        self._gen = 0

    # token plumbing

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.cur
        self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        if self.cur.kind != kind:
            raise ParseError(f"expected {kind!r}, found {self.cur.text or 'end of file'!r}",
                             self.cur.line, self.cur.col)
        return self.advance()

    def fresh_id(self, prefix: str) -> str:
        while True:
            name = f"{prefix}{self._gen}"
            self._gen += 1
            if name not in self._declared:
                return name

    # declarations

    def parse(self) -> tuple[Dfg, Bindings]:
        while self.cur.kind != "eof":
            if self.cur.kind == "input":
                self.input_decl()
            elif self.cur.kind == "const":
                self.const_decl()
            elif self.cur.kind == "output":
                self.output_decl()
            else:
                raise ParseError(f"expected a declaration, found {self.cur.text!r}",
                                 self.cur.line, self.cur.col)
        if not self.outputs:
            raise ParseError("spec declares no outputs", self.cur.line, self.cur.col)
        return Dfg(tuple(self.nodes)), Bindings(dict(self.inputs), dict(self.consts),
                                                tuple(self.outputs))

    def declare(self, tok: Token) -> str:
        if tok.text in self._declared:
            raise ParseError(f"duplicate declaration of '{tok.text}'", tok.line, tok.col)
        self._declared.add(tok.text)
        return tok.text

    def int_field(self) -> int:
        tok = self.expect("number")
        if not tok.text.isdigit():
            raise ParseError(f"expected an integer, found {tok.text!r}", tok.line, tok.col)
        return int(tok.text)

    def input_decl(self):
        self.advance()
        name = self.declare(self.expect("ident"))
        self.expect(":")
        self.expect("sif")
        self.expect("(")
        s = self.int_field()
        self.expect("/")
        i = self.int_field()
        self.expect("/")
        f = self.int_field()
        self.expect(")")
        self.expect(";")
        self.inputs[name] = (s, i, f)
        self.nodes.append(Node(name, NodeKind.INPUT))

    def const_decl(self):
        self.advance()
        name = self.declare(self.expect("ident"))
        self.expect("=")
        sign = 1
        if self.cur.kind == "-":
            self.advance()
            sign = -1
        tok = self.expect("number")
        self.expect(";")
        value = sign * Fraction(tok.text)
        self.consts[name] = value
        self.nodes.append(Node(name, NodeKind.CONST, value=value))

    def output_decl(self):
        self.advance()
        name_tok = self.expect("ident")
        self.expect("=")
        root = self.expr()
        self.expect(";")
        name = self.declare(name_tok)
        self.outputs.append(name)
        self.nodes.append(Node(name, NodeKind.OUTPUT, operands=(root,)))

    # expressions

    def expr(self) -> str:
        left = self.term()
        while self.cur.kind in ("+", "-"):
            op = self.advance()
            right = self.term()
            node_id = self.fresh_id("t")
            self.nodes.append(Node(node_id, NodeKind.ADD, operands=(left, right),
                                   negate=(False, op.kind == "-")))
            left = node_id
        return left

    def term(self) -> str:
        left = self.factor()
        while self.cur.kind == "*":
            self.advance()
            right = self.factor()
            node_id = self.fresh_id("t")
            self.nodes.append(Node(node_id, NodeKind.MUL, operands=(left, right)))
            left = node_id
        return left

    def factor(self) -> str:
        if self.cur.kind == "ident":
            tok = self.advance()
            if tok.text in self.inputs or tok.text in self.consts:
                return tok.text
            if tok.text in self.outputs:
                raise ParseError(f"output '{tok.text}' cannot be used in an expression",
                                 tok.line, tok.col)
            raise ParseError(f"undeclared identifier '{tok.text}'", tok.line, tok.col)
        if self.cur.kind == "number":
            tok = self.advance()
            node_id = self.fresh_id("lit")
            self._declared.add(node_id)
            self.nodes.append(Node(node_id, NodeKind.CONST, value=Fraction(tok.text)))
            return node_id
        if self.cur.kind == "(":
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"expected an operand, found {self.cur.text or 'end of file'!r}",
                         self.cur.line, self.cur.col)


def parse_spec(text: str) -> tuple[Dfg, Bindings]:
    """Parse .fps source into a dataflow graph plus its name bindings."""
    return _Parser(tokenize(text)).parse()


def validate_formats(bindings: Bindings, width: int) -> list[Diagnostic]:
    """Check every declared format against the word width. Collects all
    violations instead of stopping at the first one; an empty list means ok.
    """
    diags: list[Diagnostic] = []
    for name, (s, i, f) in bindings.inputs.items():
        if s < 1:
            diags.append(Diagnostic("invalid", f"input '{name}': sign bits must be >= 1"))
            continue
        if i < 0 or f < 0:
            diags.append(Diagnostic("invalid", f"input '{name}': negative field width"))
            continue
        w = s + i + f
        if w < 1:
            diags.append(Diagnostic("invalid", f"input '{name}': zero-width format"))
        elif w > width:
            diags.append(Diagnostic(
                "cannot-fit",
                f"input '{name}': declared width {w} exceeds word width {width}"))
    # rationals are always finite; the check is for symmetry with other frontends
    for name, value in bindings.consts.items():
        if value.denominator == 0:  # pragma: no cover - unreachable with Fraction
            diags.append(Diagnostic("invalid", f"const '{name}' is not finite"))
    return diags


def _frac_to_decimal(x: Fraction) -> str:
    """Exact decimal rendering; only called for values with 2^a*5^b denominators."""
    num, den = x.numerator, x.denominator
    sign = "-" if num < 0 else ""
    num = abs(num)
    scale = 0
    while den % 2 == 0:
        den //= 2
        num *= 5
        scale += 1
    while den % 5 == 0:
        den //= 5
        num *= 2
        scale += 1
    if den != 1:
        raise ValueError(f"{x} has no finite decimal form")
    digits = str(num).rjust(scale + 1, "0")
    if scale:
        return f"{sign}{digits[:-scale]}.{digits[-scale:]}"
    return f"{sign}{digits}"


def pretty_print(dfg: Dfg, bindings: Bindings) -> str:
    """Render a parsed spec back to .fps text with explicit parentheses.

    Re-parsing the result yields a structurally identical graph. ADD nodes
    with a negated first operand (which only re-association produces) render
    with swapped operand order.
    """
    lines = []
    for name, (s, i, f) in bindings.inputs.items():
        lines.append(f"input {name} : sif({s}/{i}/{f});")
    for name, value in bindings.consts.items():
        lines.append(f"const {name} = {_frac_to_decimal(value)};")

    def render(nid: str) -> str:
        node = dfg.node(nid)
        if node.kind is NodeKind.INPUT:
            return node.id
        if node.kind is NodeKind.CONST:
            return node.id if node.id in bindings.consts else _frac_to_decimal(node.value)
        if node.kind is NodeKind.MUL:
            return f"({render(node.operands[0])} * {render(node.operands[1])})"
        if node.kind is NodeKind.ADD:
            a, b = node.operands
            if node.negate[0]:
                return f"({render(b)} - {render(a)})"
            op = "-" if node.negate[1] else "+"
            return f"({render(a)} {op} {render(b)})"
        raise ValueError(f"cannot render node kind {node.kind} in source form")

    for name in bindings.outputs:
        root = dfg.node(name).operands[0]
        lines.append(f"output {name} = {render(root)};")
    return "\n".join(lines) + "\n"
