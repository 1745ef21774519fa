"""Row-wise expression language for derived variables.

A deliberately small, total language: arithmetic, comparisons, boolean
logic, string concatenation via ``++``, ``if .. then .. else ..``,
``na(a|b|c)`` literals and the ``is_na(...)`` builtin. Identifiers refer to
already-recoded component variables; evaluation consumes and produces
engine OutputValues.

Precedence, tightest first: unary (``-``, ``not``), ``* /``, ``+ -``,
``++``, comparisons, ``and``, ``or``. Comparisons do not chain.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ExprSyntaxError, ExprTypeError, UnboundIdent
from .values import NA, Category, Copied, Number, OutputValue, format_number, parse_number

# --- AST -------------------------------------------------------------------

class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class NumberLit(Expr):
    value: float


@dataclass(frozen=True)
class StringLit(Expr):
    value: str


@dataclass(frozen=True)
class NALit(Expr):
    code: str


@dataclass(frozen=True)
class Ident(Expr):
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "neg" | "not"
    operand: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # + - * / == != < <= > >= and or
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Concat(Expr):
    parts: tuple[Expr, ...]


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    els: Expr


@dataclass(frozen=True)
class IsNA(Expr):
    operand: Expr


# --- tokenizer -------------------------------------------------------------

_KEYWORDS = {"if", "then", "else", "and", "or", "not", "is_na", "na"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<op>\+\+|==|!=|<=|>=|[+\-*/<>()])
""", re.VERBOSE)

_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}


@dataclass(frozen=True)
class _Token:
    kind: str  # number | ident | keyword | string | op | eof
    text: str
    pos: int


def _tokenize(src: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ExprSyntaxError(pos, f"unexpected character {src[pos]!r}")
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        text = m.group()
        kind = m.lastgroup
        if kind == "ident" and text in _KEYWORDS:
            kind = "keyword"
        tokens.append(_Token(kind, text, m.start()))
    tokens.append(_Token("eof", "", len(src)))
    return tokens


def _unescape(quoted: str, pos: int) -> str:
    body = quoted[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            i += 1
            esc = body[i]
            if esc not in _ESCAPES:
                raise ExprSyntaxError(pos + i, f"unknown escape \\{esc}")
            out.append(_ESCAPES[esc])
        else:
            out.append(c)
        i += 1
    return "".join(out)


# --- parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.cur
        self.i += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.cur
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise ExprSyntaxError(tok.pos, f"expected {want!r}, got {tok.text or 'end of input'!r}")
        return self.advance()

    def at(self, kind: str, text: str | None = None) -> bool:
        return self.cur.kind == kind and (text is None or self.cur.text == text)

    def parse(self) -> Expr:
        expr = self.expr()
        if self.cur.kind != "eof":
            raise ExprSyntaxError(self.cur.pos, f"trailing input {self.cur.text!r}")
        return expr

    def expr(self) -> Expr:
        if self.at("keyword", "if"):
            return self.ifexpr()
        return self.orexpr()

    def ifexpr(self) -> Expr:
        self.expect("keyword", "if")
        cond = self.expr()
        self.expect("keyword", "then")
        then = self.expr()
        self.expect("keyword", "else")
        els = self.expr()
        return If(cond, then, els)

    def orexpr(self) -> Expr:
        left = self.andexpr()
        while self.at("keyword", "or"):
            self.advance()
            left = Binary("or", left, self.andexpr())
        return left

    def andexpr(self) -> Expr:
        left = self.cmpexpr()
        while self.at("keyword", "and"):
            self.advance()
            left = Binary("and", left, self.cmpexpr())
        return left

    def cmpexpr(self) -> Expr:
        left = self.catexpr()
        if self.cur.kind == "op" and self.cur.text in ("==", "!=", "<", "<=", ">", ">="):
            op = self.advance().text
            return Binary(op, left, self.catexpr())
        return left

    def catexpr(self) -> Expr:
        first = self.addexpr()
        if not self.at("op", "++"):
            return first
        parts = [first]
        while self.at("op", "++"):
            self.advance()
            parts.append(self.addexpr())
        return Concat(tuple(parts))

    def addexpr(self) -> Expr:
        left = self.mulexpr()
        while self.cur.kind == "op" and self.cur.text in ("+", "-"):
            op = self.advance().text
            left = Binary(op, left, self.mulexpr())
        return left

    def mulexpr(self) -> Expr:
        left = self.unary()
        while self.cur.kind == "op" and self.cur.text in ("*", "/"):
            op = self.advance().text
            left = Binary(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.at("op", "-"):
            self.advance()
            return Unary("neg", self.unary())
        if self.at("keyword", "not"):
            self.advance()
            return Unary("not", self.unary())
        return self.primary()

    def primary(self) -> Expr:
        tok = self.cur
        if tok.kind == "number":
            self.advance()
            return NumberLit(float(tok.text))
        if tok.kind == "string":
            self.advance()
            return StringLit(_unescape(tok.text, tok.pos))
        if tok.kind == "ident":
            self.advance()
            return Ident(tok.text)
        if tok.kind == "keyword" and tok.text == "na":
            self.advance()
            self.expect("op", "(")
            code_tok = self.cur
            if code_tok.kind != "ident" or code_tok.text not in ("a", "b", "c"):
                raise ExprSyntaxError(code_tok.pos, "na(...) takes a, b or c")
            self.advance()
            self.expect("op", ")")
            return NALit(code_tok.text)
        if tok.kind == "keyword" and tok.text == "is_na":
            self.advance()
            self.expect("op", "(")
            inner = self.expr()
            self.expect("op", ")")
            return IsNA(inner)
        if tok.kind == "keyword" and tok.text == "if":
            return self.ifexpr()
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.expr()
            self.expect("op", ")")
            return inner
        raise ExprSyntaxError(tok.pos, f"unexpected {tok.text or 'end of input'!r}")


def parse_expression(src: str) -> Expr:
    """Parse an expression, raising ExprSyntaxError with a position on
    malformed input."""
    return _Parser(src).parse()


# --- static type check -----------------------------------------------------

# internal lattice: "any" (NA literal) unifies with everything
_TYPES = ("number", "text", "boolean", "any")

_EXTERNAL = {"categorical": "text", "continuous": "number"}
_TO_EXTERNAL = {"text": "categorical", "number": "continuous", "boolean": "categorical",
                "any": "categorical"}


def _unify(a: str, b: str, where: str) -> str:
    if a == b:
        return a
    if a == "any":
        return b
    if b == "any":
        return a
    raise ExprTypeError(f"{where}: cannot unify {a} with {b}")


def _require(t: str, want: str, where: str) -> None:
    if t not in (want, "any"):
        raise ExprTypeError(f"{where}: expected {want}, got {t}")


def _infer(expr: Expr, env: dict[str, str]) -> str:
    if isinstance(expr, NumberLit):
        return "number"
    if isinstance(expr, StringLit):
        return "text"
    if isinstance(expr, NALit):
        return "any"
    if isinstance(expr, Ident):
        if expr.name not in env:
            raise UnboundIdent(expr.name)
        return env[expr.name]
    if isinstance(expr, Unary):
        t = _infer(expr.operand, env)
        if expr.op == "neg":
            _require(t, "number", "unary -")
            return "number"
        _require(t, "boolean", "not")
        return "boolean"
    if isinstance(expr, Binary):
        lt = _infer(expr.left, env)
        rt = _infer(expr.right, env)
        op = expr.op
        if op in ("+", "-", "*", "/"):
            _require(lt, "number", f"operator {op}")
            _require(rt, "number", f"operator {op}")
            return "number"
        if op in ("<", "<=", ">", ">="):
            _require(lt, "number", f"operator {op}")
            _require(rt, "number", f"operator {op}")
            return "boolean"
        if op in ("==", "!="):
            _unify(lt, rt, f"operator {op}")
            return "boolean"
        if op in ("and", "or"):
            _require(lt, "boolean", op)
            _require(rt, "boolean", op)
            return "boolean"
        raise AssertionError(op)
    if isinstance(expr, Concat):
        for part in expr.parts:
            _infer(part, env)  # any non-boolean-specific type is textable
        return "text"
    if isinstance(expr, If):
        ct = _infer(expr.cond, env)
        _require(ct, "boolean", "if condition")
        tt = _infer(expr.then, env)
        et = _infer(expr.els, env)
        return _unify(tt, et, "if branches")
    if isinstance(expr, IsNA):
        _infer(expr.operand, env)
        return "boolean"
    raise AssertionError(type(expr))


def check_expr(expr: Expr, component_types: dict[str, str]) -> str:
    """Type-check an expression against its components' declared types
    (``categorical``/``continuous``) and return the output type in the
    same vocabulary. Boolean-valued expressions surface as categorical
    with codes "true"/"false"."""
    env = {}
    for name, t in component_types.items():
        if t not in _EXTERNAL:
            raise ExprTypeError(f"component {name!r} has unknown type {t!r}")
        env[name] = _EXTERNAL[t]
    return _TO_EXTERNAL[_infer(expr, env)]


def free_idents(expr: Expr) -> set[str]:
    """All identifiers referenced by an expression."""
    out: set[str] = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Ident):
            out.add(node.name)
        elif isinstance(node, Unary):
            stack.append(node.operand)
        elif isinstance(node, Binary):
            stack.extend((node.left, node.right))
        elif isinstance(node, Concat):
            stack.extend(node.parts)
        elif isinstance(node, If):
            stack.extend((node.cond, node.then, node.els))
        elif isinstance(node, IsNA):
            stack.append(node.operand)
    return out


# --- evaluation ------------------------------------------------------------

class _NAVal:
    """Internal missing marker carrying its code through evaluation."""

    __slots__ = ("code",)

    def __init__(self, code: str = "b"):
        self.code = code


def _unwrap(value: OutputValue):
    if isinstance(value, Category):
        return value.code
    if isinstance(value, Number):
        return value.value
    if isinstance(value, Copied):
        num = parse_number(value.raw)
        return num if num is not None else value.raw
    if isinstance(value, NA):
        return _NAVal(value.code)
    raise TypeError(f"not an OutputValue: {value!r}")


def _to_text(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_number(value)
    return value


def _eval(expr: Expr, env: dict[str, object]):
    if isinstance(expr, NumberLit):
        return expr.value
    if isinstance(expr, StringLit):
        return expr.value
    if isinstance(expr, NALit):
        return _NAVal(expr.code)
    if isinstance(expr, Ident):
        if expr.name not in env:
            raise UnboundIdent(expr.name)
        return env[expr.name]
    if isinstance(expr, Unary):
        v = _eval(expr.operand, env)
        if isinstance(v, _NAVal):
            return _NAVal()
        if expr.op == "neg":
            return -v
        return not v
    if isinstance(expr, Binary):
        op = expr.op
        left = _eval(expr.left, env)
        if op == "and":
            if isinstance(left, _NAVal):
                return _NAVal()
            if left is False:
                return False
            right = _eval(expr.right, env)
            return _NAVal() if isinstance(right, _NAVal) else bool(right)
        if op == "or":
            if isinstance(left, _NAVal):
                return _NAVal()
            if left is True:
                return True
            right = _eval(expr.right, env)
            return _NAVal() if isinstance(right, _NAVal) else bool(right)
        right = _eval(expr.right, env)
        if isinstance(left, _NAVal) or isinstance(right, _NAVal):
            return _NAVal()
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op == "/":
            if right == 0:
                return _NAVal()
            return left / right
        if op == "==":
            return type(left) is type(right) and left == right
        if op == "!=":
            return not (type(left) is type(right) and left == right)
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        if op == ">=":
            return left >= right
        raise AssertionError(op)
    if isinstance(expr, Concat):
        parts = []
        for p in expr.parts:
            v = _eval(p, env)
            if isinstance(v, _NAVal):
                return _NAVal()
            parts.append(_to_text(v))
        return "".join(parts)
    if isinstance(expr, If):
        cond = _eval(expr.cond, env)
        if isinstance(cond, _NAVal):
            return _NAVal()
        return _eval(expr.then if cond else expr.els, env)
    if isinstance(expr, IsNA):
        return isinstance(_eval(expr.operand, env), _NAVal)
    raise AssertionError(type(expr))


def evaluate(expr: Expr, bindings: dict[str, OutputValue]) -> OutputValue:
    """Evaluate against recoded component values.

    NA propagates through strict operators and becomes NA(b); ``is_na``
    observes NA instead of propagating it; a fully-determined ``if``
    condition means the untaken branch is never evaluated. Division by
    zero yields NA(b). Never raises for type-checked expressions.
    """
    env = {name: _unwrap(v) for name, v in bindings.items()}
    result = _eval(expr, env)
    if isinstance(result, _NAVal):
        return NA("b")
    if isinstance(result, bool):
        return Category("true" if result else "false")
    if isinstance(result, float):
        return Number(result)
    return Category(result)
