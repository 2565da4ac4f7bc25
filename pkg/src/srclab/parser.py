"""Manifold source format: tokenizer, recursive-descent parser, serializer.

Line-oriented grammar (``#`` starts a comment, blank lines ignored, sections
in this order)::

    manifold <name>
    dim <int>
    hdim <int>
    coords <name>+
    hframe
      <Name> = <vfexpr>        (exactly hdim lines)
    vframe
      <Name> = <vfexpr>        (exactly dim-hdim lines)
    metric identity
    metric rows                (alternative: hdim rows of hdim entries)
      <scalar-expr>, ...
    oneform <scalar-expr>, ... (optional, hdim entries)

``vfexpr`` is a signed sum of terms ``[factor] d<coord>`` where the optional
factor is a multiplicative scalar expression (write ``(y/2) dz``, ``2*x dz``).
Scalar expressions use the usual precedence over ``+ - * / ^ ( )`` with
numbers, coordinate names and sin/cos/exp/log/sqrt; ``^`` binds tightest,
is right-associative and takes integer literal exponents only.

Metric rows and oneform entries are comma-separated; rows without commas may
use whitespace separation when no entry contains spaces.  The serializer
always emits commas.  Serializing a parsed document and reparsing yields a
structurally identical ManifoldSpec.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError, ValidationError
from .jets import (Add, Call, Const, Coord, Div, Expression, Mul, Neg, Pow,
                   Sub, FUNCTIONS)
from .manifold import ManifoldSpec, VectorFieldSpec

_TOKEN_RE = re.compile(r"""
    (?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[+\-*/^(),=])
  | (?P<ws>\s+)
  | (?P<bad>.)
""", re.VERBOSE)


@dataclass(frozen=True)
class _Token:
    kind: str       # num | name | op | end
    text: str
    line: int
    col: int


def _tokenize(text: str, line: int, col_offset: int = 0) -> list[_Token]:
    out = []
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        if kind == "ws":
            continue
        col = m.start() + 1 + col_offset
        if kind == "bad":
            raise ParseError(f"unexpected character {m.group()!r}", line, col)
        out.append(_Token(kind, m.group(), line, col))
    out.append(_Token("end", "", line, len(text) + 1 + col_offset))
    return out


class _ExprParser:
    """Recursive descent over one token stream; knows the coordinate names."""

    def __init__(self, tokens: list[_Token], coords: tuple[str, ...]):
        self.tokens = tokens
        self.pos = 0
        self.coords = coords

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind == "op" and tok.text == text:
            return self.next()
        raise ParseError(f"expected {text!r}, found {tok.text!r}" if tok.kind != "end"
                         else f"expected {text!r}, found end of input", tok.line, tok.col)

    def at_end(self) -> bool:
        return self.peek().kind == "end"

    def fail(self, message: str):
        tok = self.peek()
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ParseError(f"{message}, found {found}", tok.line, tok.col)

    # scalar grammar -------------------------------------------------------

    def expr(self) -> Expression:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self, stop_at_dcoord: bool = False) -> Expression:
        node = self.unary(stop_at_dcoord)
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.next().text
            rhs = self.unary(stop_at_dcoord)
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self, stop_at_dcoord: bool = False) -> Expression:
        if self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            node = self.unary(stop_at_dcoord)
            return Neg(node) if op == "-" else node
        return self.power(stop_at_dcoord)

    def power(self, stop_at_dcoord: bool = False) -> Expression:
        base = self.atom(stop_at_dcoord)
        if self.peek().kind == "op" and self.peek().text == "^":
            self.next()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        sign = 1
        if self.peek().kind == "op" and self.peek().text == "-":
            self.next()
            sign = -1
        tok = self.peek()
        if tok.kind != "num" or not re.fullmatch(r"\d+", tok.text):
            self.fail("expected an integer literal exponent")
        self.next()
        value = int(tok.text)
        if self.peek().kind == "op" and self.peek().text == "^":
            self.next()
            value = value ** self.exponent()
        return sign * value

    def atom(self, stop_at_dcoord: bool = False) -> Expression:
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            return Const(float(tok.text))
        if tok.kind == "name":
            if stop_at_dcoord and self.is_dcoord(tok.text):
                self.fail("expected an expression")
            self.next()
            if tok.text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(tok.text, arg)
            if tok.text in self.coords:
                return Coord(self.coords.index(tok.text))
            raise ParseError(f"unknown name {tok.text!r} (not a coordinate or function)",
                             tok.line, tok.col)
        if tok.kind == "op" and tok.text == "(":
            self.next()
            node = self.expr()
            self.expect_op(")")
            return node
        self.fail("expected a number, name or '('")

    # vector-field grammar -------------------------------------------------

    def is_dcoord(self, name: str) -> bool:
        return name.startswith("d") and name[1:] in self.coords

    def vfexpr(self, n: int) -> tuple[Expression, ...]:
        components: dict[int, Expression] = {}
        first = True
        while True:
            sign = 1
            tok = self.peek()
            if tok.kind == "op" and tok.text in "+-":
                self.next()
                sign = -1 if tok.text == "-" else 1
            elif not first:
                self.fail("expected '+' or '-' between terms")
            factor = None
            tok = self.peek()
            if not (tok.kind == "name" and self.is_dcoord(tok.text)):
                factor = self.term(stop_at_dcoord=True)
            tok = self.peek()
            if not (tok.kind == "name" and self.is_dcoord(tok.text)):
                self.fail("expected d<coordinate>")
            self.next()
            k = self.coords.index(tok.text[1:])
            contribution = Const(1.0) if factor is None else factor
            if sign < 0:
                contribution = Neg(contribution)
            components[k] = (Add(components[k], contribution)
                             if k in components else contribution)
            first = False
            if self.at_end():
                break
        return tuple(components.get(k, Const(0.0)) for k in range(n))


def parse_scalar_expression(text: str, coords: tuple[str, ...],
                            line: int = 1, col_offset: int = 0) -> Expression:
    parser = _ExprParser(_tokenize(text, line, col_offset), coords)
    node = parser.expr()
    if not parser.at_end():
        parser.fail("trailing input after expression")
    return node


# --------------------------------------------------------------------------
# Document parser
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SpecDocument:
    """Parsed manifold source with its text and declaration line map."""

    raw: str
    spec: ManifoldSpec
    locations: dict
    hframe_names: tuple[str, ...]
    vframe_names: tuple[str, ...]


_SECTION_KEYWORDS = ("manifold", "dim", "hdim", "coords", "hframe", "vframe",
                     "metric", "oneform")


class _Lines:
    def __init__(self, text: str):
        self.items: list[tuple[int, str]] = []
        for idx, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0].rstrip()
            if body.strip():
                self.items.append((idx, body))
        self.pos = 0
        self.last_line = len(text.splitlines()) or 1

    def peek(self):
        return self.items[self.pos] if self.pos < len(self.items) else None

    def next(self):
        item = self.peek()
        if item is None:
            raise ParseError("unexpected end of input", self.last_line, 1)
        self.pos += 1
        return item


def _keyword_line(lines: _Lines, keyword: str) -> tuple[int, str]:
    item = lines.peek()
    if item is None:
        raise ParseError(f"expected {keyword!r} section", lines.last_line, 1)
    line_no, body = item
    stripped = body.strip()
    head = stripped.split(None, 1)[0] if stripped else ""
    if head != keyword:
        raise ParseError(f"expected keyword {keyword!r}, found {head!r}", line_no,
                         body.index(head) + 1 if head else 1)
    lines.next()
    rest = stripped[len(keyword):].strip()
    return line_no, rest


def _parse_int(text: str, what: str, line_no: int) -> int:
    if not re.fullmatch(r"\d+", text):
        raise ParseError(f"expected an integer for {what}", line_no, 1)
    return int(text)


def _frame_block(lines: _Lines, count: int, coords, n, section: str, head_line: int):
    names, specs = [], []
    while True:
        item = lines.peek()
        if item is None:
            break
        line_no, body = item
        stripped = body.strip()
        head = stripped.split(None, 1)[0]
        if head in _SECTION_KEYWORDS:
            break
        lines.next()
        if "=" not in stripped:
            raise ParseError("expected '<Name> = <vector field>'", line_no,
                             body.index(stripped[0]) + 1)
        name, rhs = stripped.split("=", 1)
        name = name.strip()
        if not name.isidentifier():
            raise ParseError(f"bad frame field name {name!r}", line_no, 1)
        parser = _ExprParser(_tokenize(rhs, line_no, body.index("=") + 1), coords)
        comps = parser.vfexpr(n)
        names.append(name)
        specs.append(VectorFieldSpec(comps))
    if len(specs) != count:
        raise ValidationError(
            f"{section} declares {len(specs)} fields, expected {count}", head_line)
    return tuple(names), tuple(specs)


def _split_entries(body: str, line_no: int, expected: int, what: str):
    if "," in body:
        parts = body.split(",")
    else:
        parts = body.split()
    if len(parts) != expected:
        raise ValidationError(f"{what} has {len(parts)} entries, expected {expected}",
                              line_no)
    return parts


def parse_document(text: str) -> SpecDocument:
    """Parse manifold source text into a SpecDocument (grammar in module docstring)."""
    lines = _Lines(text)
    locations: dict = {}

    line_no, name = _keyword_line(lines, "manifold")
    if not name:
        raise ParseError("manifold needs a name", line_no, len("manifold") + 1)
    locations["manifold"] = line_no

    line_no, rest = _keyword_line(lines, "dim")
    n = _parse_int(rest, "dim", line_no)
    locations["dim"] = line_no

    line_no, rest = _keyword_line(lines, "hdim")
    ell = _parse_int(rest, "hdim", line_no)
    locations["hdim"] = line_no
    if not 2 <= ell < n:
        raise ValidationError(f"need 2 <= hdim < dim, got hdim={ell}, dim={n}", line_no)

    line_no, rest = _keyword_line(lines, "coords")
    coords = tuple(rest.split())
    locations["coords"] = line_no
    if len(coords) != n:
        raise ValidationError(f"coords lists {len(coords)} names, expected {n}", line_no)

    line_no, rest = _keyword_line(lines, "hframe")
    if rest:
        raise ParseError("hframe keyword takes no arguments", line_no, 1)
    locations["hframe"] = line_no
    hnames, hframe = _frame_block(lines, ell, coords, n, "hframe", line_no)

    line_no, rest = _keyword_line(lines, "vframe")
    locations["vframe"] = line_no
    vnames, vframe = _frame_block(lines, n - ell, coords, n, "vframe", line_no)

    line_no, rest = _keyword_line(lines, "metric")
    locations["metric"] = line_no
    if rest == "identity":
        metric = tuple(tuple(Const(1.0) if i == j else Const(0.0) for j in range(ell))
                       for i in range(ell))
    elif rest == "rows":
        rows = []
        for i in range(ell):
            row_line, body = lines.next()
            stripped = body.strip()
            if stripped.split(None, 1)[0] in _SECTION_KEYWORDS:
                raise ValidationError(
                    f"metric has {i} rows, expected {ell}", row_line)
            parts = _split_entries(stripped, row_line, ell, f"metric row {i + 1}")
            rows.append(tuple(parse_scalar_expression(part, coords, row_line)
                              for part in parts))
            locations[f"metric[{i}]"] = row_line
        metric = tuple(rows)
        for i in range(ell):
            for j in range(i):
                if metric[i][j] != metric[j][i]:
                    raise ValidationError(
                        f"metric entry ({i + 1},{j + 1}) is not symmetric",
                        locations[f"metric[{i}]"])
    else:
        raise ParseError("expected 'identity' or 'rows' after metric", line_no,
                         len("metric") + 2)

    oneform = None
    item = lines.peek()
    if item is not None:
        line_no, rest = _keyword_line(lines, "oneform")
        locations["oneform"] = line_no
        parts = _split_entries(rest, line_no, ell, "oneform")
        oneform = tuple(parse_scalar_expression(part, coords, line_no)
                        for part in parts)
        if lines.peek() is not None:
            extra_line, body = lines.peek()
            raise ParseError(f"unexpected content {body.strip()!r}", extra_line, 1)

    spec = ManifoldSpec(name, coords, ell, hframe, vframe, metric, oneform)
    return SpecDocument(text, spec, locations, hnames, vnames)


def parse_manifold(text: str) -> ManifoldSpec:
    """Parse manifold source text; structural invariants validated here,
    pointwise ones (frame condition, positive Gram) at evaluation time."""
    return parse_document(text).spec


# --------------------------------------------------------------------------
# Serializer
# --------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _fmt_const(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _print_expr(node: Expression, coords, prec: int = 0) -> str:
    if isinstance(node, Const):
        text, p = _fmt_const(node.value), _PREC_ATOM
    elif isinstance(node, Coord):
        text, p = coords[node.index], _PREC_ATOM
    elif isinstance(node, Add):
        text = f"{_print_expr(node.left, coords, _PREC_ADD)} + " \
               f"{_print_expr(node.right, coords, _PREC_ADD + 1)}"
        p = _PREC_ADD
    elif isinstance(node, Sub):
        text = f"{_print_expr(node.left, coords, _PREC_ADD)} - " \
               f"{_print_expr(node.right, coords, _PREC_ADD + 1)}"
        p = _PREC_ADD
    elif isinstance(node, Mul):
        text = f"{_print_expr(node.left, coords, _PREC_MUL)}*" \
               f"{_print_expr(node.right, coords, _PREC_MUL + 1)}"
        p = _PREC_MUL
    elif isinstance(node, Div):
        text = f"{_print_expr(node.left, coords, _PREC_MUL)}/" \
               f"{_print_expr(node.right, coords, _PREC_MUL + 1)}"
        p = _PREC_MUL
    elif isinstance(node, Neg):
        text = f"-{_print_expr(node.arg, coords, _PREC_UNARY)}"
        p = _PREC_UNARY
    elif isinstance(node, Pow):
        exp = str(node.exponent) if node.exponent >= 0 else f"-{-node.exponent}"
        text = f"{_print_expr(node.base, coords, _PREC_ATOM)}^{exp}"
        p = _PREC_POW
    elif isinstance(node, Call):
        text, p = f"{node.fn}({_print_expr(node.arg, coords)})", _PREC_ATOM
    else:
        raise TypeError(f"not an expression node: {node!r}")
    return f"({text})" if p < prec else text


def _print_vf(vf: VectorFieldSpec, coords) -> str:
    terms = []
    for k, comp in enumerate(vf.components):
        if comp == Const(0.0) or comp == Const(-0.0):
            continue
        sign = "+"
        inner = comp
        if isinstance(inner, Neg):
            sign, inner = "-", inner.arg
        if inner == Const(1.0):
            body = f"d{coords[k]}"
        else:
            factor = _print_expr(inner, coords, _PREC_ATOM)
            body = f"{factor} d{coords[k]}"
        terms.append((sign, body))
    if not terms:
        return f"0 d{coords[0]}"
    first_sign, first_body = terms[0]
    out = first_body if first_sign == "+" else f"-{first_body}"
    for sign, body in terms[1:]:
        out += f" {sign} {body}"
    return out


def serialize_manifold(spec: ManifoldSpec, hframe_names=None, vframe_names=None) -> str:
    """Canonical source text; reparsing reproduces the same ManifoldSpec."""
    coords = spec.coords
    hnames = hframe_names or tuple(f"X{i + 1}" for i in range(spec.ell))
    vnames = vframe_names or tuple(f"V{i + 1}" for i in range(spec.n - spec.ell))
    lines = [f"manifold {spec.name}", f"dim {spec.n}", f"hdim {spec.ell}",
             "coords " + " ".join(coords), "hframe"]
    for name, vf in zip(hnames, spec.hframe):
        lines.append(f"  {name} = {_print_vf(vf, coords)}")
    lines.append("vframe")
    for name, vf in zip(vnames, spec.vframe):
        lines.append(f"  {name} = {_print_vf(vf, coords)}")
    identity = all(spec.metric[i][j] == (Const(1.0) if i == j else Const(0.0))
                   for i in range(spec.ell) for j in range(spec.ell))
    if identity:
        lines.append("metric identity")
    else:
        lines.append("metric rows")
        for row in spec.metric:
            lines.append("  " + ", ".join(_print_expr(e, coords) for e in row))
    if spec.oneform is not None:
        lines.append("oneform " + ", ".join(_print_expr(e, coords)
                                            for e in spec.oneform))
    return "\n".join(lines) + "\n"


def serialize_document(doc: SpecDocument) -> str:
    return serialize_manifold(doc.spec, doc.hframe_names, doc.vframe_names)
