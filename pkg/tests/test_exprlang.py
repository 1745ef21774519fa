from __future__ import annotations

import pytest

from harmonize.errors import ExprSyntaxError, ExprTypeError, UnboundIdent
from harmonize.exprlang import (
    Binary,
    Concat,
    If,
    Ident,
    IsNA,
    NALit,
    NumberLit,
    StringLit,
    Unary,
    check_expr,
    evaluate,
    parse_expression,
)
from harmonize.values import NA, Category, Number

# --- reference oracle ------------------------------------------------------
# A second, independent walk of the same AST. Missing data is modelled as
# Python None here (the engine uses its own marker class), so agreement is
# about semantics, not shared code paths.

_MISSING = None


def _oracle_text(v):
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, float):
        return str(int(v)) if v == int(v) else repr(v)
    return v


def oracle_eval(node, env):
    match node:
        case NumberLit(value=v):
            return v
        case StringLit(value=s):
            return s
        case NALit():
            return _MISSING
        case Ident(name=n):
            return env[n]
        case Unary(op="neg", operand=inner):
            v = oracle_eval(inner, env)
            return _MISSING if v is _MISSING else -v
        case Unary(op="not", operand=inner):
            v = oracle_eval(inner, env)
            return _MISSING if v is _MISSING else (not v)
        case Binary(op="and", left=l, right=r):
            lv = oracle_eval(l, env)
            if lv is _MISSING:
                return _MISSING
            if not lv:
                return False
            rv = oracle_eval(r, env)
            return _MISSING if rv is _MISSING else bool(rv)
        case Binary(op="or", left=l, right=r):
            lv = oracle_eval(l, env)
            if lv is _MISSING:
                return _MISSING
            if lv:
                return True
            rv = oracle_eval(r, env)
            return _MISSING if rv is _MISSING else bool(rv)
        case Binary(op=op, left=l, right=r):
            lv = oracle_eval(l, env)
            rv = oracle_eval(r, env)
            if lv is _MISSING or rv is _MISSING:
                return _MISSING
            if op == "/" and rv == 0:
                return _MISSING
            if op in ("==", "!="):
                same = type(lv) is type(rv) and lv == rv
                return same if op == "==" else not same
            table = {
                "+": lambda: lv + rv, "-": lambda: lv - rv,
                "*": lambda: lv * rv, "/": lambda: lv / rv,
                "<": lambda: lv < rv, "<=": lambda: lv <= rv,
                ">": lambda: lv > rv, ">=": lambda: lv >= rv,
            }
            return table[op]()
        case Concat(parts=parts):
            rendered = []
            for p in parts:
                v = oracle_eval(p, env)
                if v is _MISSING:
                    return _MISSING
                rendered.append(_oracle_text(v))
            return "".join(rendered)
        case If(cond=c, then=t, els=e):
            cv = oracle_eval(c, env)
            if cv is _MISSING:
                return _MISSING
            return oracle_eval(t if cv else e, env)
        case IsNA(operand=inner):
            return oracle_eval(inner, env) is _MISSING
    raise AssertionError(node)


def oracle_result(src, env):
    v = oracle_eval(parse_expression(src), env)
    if v is _MISSING:
        return NA("b")
    if isinstance(v, bool):
        return Category("true" if v else "false")
    if isinstance(v, float):
        return Number(v)
    return Category(v)


def engine_result(src, env):
    bindings = {}
    for name, v in env.items():
        if v is _MISSING:
            bindings[name] = NA("b")
        elif isinstance(v, float):
            bindings[name] = Number(v)
        else:
            bindings[name] = Category(v)
    return evaluate(parse_expression(src), bindings)


# (source, environment) pairs; expected values come from the oracle
CONFORMANCE_CASES = [
    # literals and identifiers
    ("1", {}),
    ("2.5", {}),
    ('"hello"', {}),
    ("x", {"x": 3.0}),
    ("x", {"x": "cat"}),
    ("na(b)", {}),
    # arithmetic and precedence
    ("1 + 2 * 3", {}),
    ("(1 + 2) * 3", {}),
    ("10 - 4 - 3", {}),
    ("12 / 4 / 3", {}),
    ("2 * x + 1", {"x": 5.0}),
    ("-x + 10", {"x": 4.0}),
    ("-x * -x", {"x": 3.0}),
    ("1 + 2 == 3", {}),
    # division by zero
    ("1 / 0", {}),
    ("x / y", {"x": 1.0, "y": 0.0}),
    ("1 / (2 - 2)", {}),
    # comparisons
    ("3 < 4", {}),
    ("4 <= 4", {}),
    ("5 > 6", {}),
    ("x >= 24", {"x": 25.0}),
    ('"a" == "a"', {}),
    ('"a" != "b"', {}),
    ("x == y", {"x": "m", "y": "m"}),
    # boolean logic, short circuit
    ("3 < 4 and 4 < 5", {}),
    ("3 > 4 or 4 < 5", {}),
    ("not 3 > 4", {}),
    ("x < 0 and y < 0", {"x": 1.0, "y": _MISSING}),
    ("x > 0 or y > 0", {"x": 1.0, "y": _MISSING}),
    # concat and coercion
    ('"a" ++ "b" ++ "c"', {}),
    ('x ++ "_" ++ y', {"x": "normal", "y": "graduated"}),
    ('"n=" ++ x', {"x": 4.0}),
    ('"half=" ++ x / 2', {"x": 5.0}),
    ('(x > 0) ++ "!"', {"x": 1.0}),
    # NA propagation
    ("x + 1", {"x": _MISSING}),
    ("x ++ \"_\" ++ y", {"x": _MISSING, "y": "graduated"}),
    ("x < 5", {"x": _MISSING}),
    ("-x", {"x": _MISSING}),
    ("na(a) + 1", {}),
    # is_na observes instead of propagating
    ("is_na(x)", {"x": _MISSING}),
    ("is_na(x)", {"x": 7.0}),
    ("is_na(x + 1)", {"x": _MISSING}),
    ("is_na(na(c))", {}),
    ('if is_na(x) then "miss" else "have"', {"x": _MISSING}),
    # if/then/else
    ('if x >= 24 then "normal" else "impaired"', {"x": 25.0}),
    ('if x >= 24 then "normal" else "impaired"', {"x": 10.0}),
    ('if x >= 24 then "normal" else "impaired"', {"x": _MISSING}),
    ('if x > 0 then y else 0', {"x": 1.0, "y": _MISSING}),
    ('if x > 0 then 1 else y + 1', {"x": 1.0, "y": _MISSING}),
    ("if 1 < 2 then if 2 < 3 then 1 else 2 else 3", {}),
    # mixed precedence across tiers
    ('"v" ++ 1 + 2', {}),
    ("1 + 2 ++ \"x\" == \"3x\"", {}),
    ("2 + 3 * 4 < 15 and 1 < 2", {}),
]


class TestConformance:
    @pytest.mark.parametrize("src,env", CONFORMANCE_CASES,
                             ids=[c[0] for c in CONFORMANCE_CASES])
    def test_engine_matches_oracle(self, src, env):
        assert engine_result(src, env) == oracle_result(src, env)

    def test_corpus_size(self):
        assert len(CONFORMANCE_CASES) >= 40


class TestParse:
    def test_concat_shape(self):
        expr = parse_expression('MMSE_category ++ "_" ++ CEP_bin')
        assert isinstance(expr, Concat)
        assert len(expr.parts) == 3

    def test_if_shape(self):
        expr = parse_expression('if MMSE >= 24 then "normal" else "impaired"')
        assert isinstance(expr, If)
        assert isinstance(expr.cond, Binary)

    @pytest.mark.parametrize("bad", [
        '++ "x"', "1 +", "if x then 1", "(1", 'na(d)', '"unterminated',
        "1 2", "x ?? y",
    ])
    def test_syntax_errors(self, bad):
        with pytest.raises(ExprSyntaxError):
            parse_expression(bad)

    def test_error_carries_position(self):
        with pytest.raises(ExprSyntaxError) as err:
            parse_expression("1 + $")
        assert err.value.position == 4


class TestCheck:
    def test_concat_of_categoricals_is_categorical(self):
        expr = parse_expression("a ++ b")
        assert check_expr(expr, {"a": "categorical", "b": "categorical"}) \
            == "categorical"

    def test_arith_on_categorical_rejected(self):
        expr = parse_expression("a + 1")
        with pytest.raises(ExprTypeError):
            check_expr(expr, {"a": "categorical"})

    def test_unbound_ident(self):
        expr = parse_expression("XYZ")
        with pytest.raises(UnboundIdent):
            check_expr(expr, {"a": "categorical"})

    def test_numeric_result_is_continuous(self):
        expr = parse_expression("a * 2")
        assert check_expr(expr, {"a": "continuous"}) == "continuous"

    def test_boolean_result_is_categorical(self):
        expr = parse_expression("a > 1")
        assert check_expr(expr, {"a": "continuous"}) == "categorical"

    def test_if_branches_must_unify(self):
        expr = parse_expression('if a > 1 then "x" else 2')
        with pytest.raises(ExprTypeError):
            check_expr(expr, {"a": "continuous"})

    def test_na_unifies_with_anything(self):
        expr = parse_expression('if a > 1 then "x" else na(b)')
        assert check_expr(expr, {"a": "continuous"}) == "categorical"


class TestEvaluate:
    def test_paquid_concat(self):
        expr = parse_expression('MMSE_category ++ "_" ++ CEP_bin')
        out = evaluate(expr, {"MMSE_category": Category("normal"),
                              "CEP_bin": Category("graduated")})
        assert out == Category("normal_graduated")

    def test_na_propagates_through_concat(self):
        expr = parse_expression('MMSE_category ++ "_" ++ CEP_bin')
        out = evaluate(expr, {"MMSE_category": NA("b"),
                              "CEP_bin": Category("graduated")})
        assert out == NA("b")

    def test_is_na_yields_true_category(self):
        expr = parse_expression("is_na(MMSE_category)")
        assert evaluate(expr, {"MMSE_category": NA("b")}) == Category("true")

    def test_determinism(self):
        expr = parse_expression('x * 3 ++ "!"')
        env = {"x": Number(2.0)}
        assert evaluate(expr, env) == evaluate(expr, env)
