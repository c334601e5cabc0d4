"""Quantifier-free linear arithmetic formulas and their SMT-LIB2 form.

Terms are built from :class:`Var`, :class:`Const`, :class:`Add`, :class:`Neg`
and :class:`Abs`; formulas from comparisons (:class:`Atom`) and the usual
connectives. ``Abs`` stays in the tree and is lowered to a fresh variable only
when printing.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .numbers import as_rational

REAL = "Real"
INT = "Int"


class FormulaError(ValueError):
    pass


class ModelParseError(ValueError):
    """Solver output that is not a well-formed model response."""


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Var:
    name: str
    sort: str = REAL


@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class Add:
    terms: tuple


@dataclass(frozen=True)
class Neg:
    term: object


@dataclass(frozen=True)
class Abs:
    term: object


Term = Union[Var, Const, Add, Neg, Abs]


def const(value) -> Const:
    return Const(as_rational(value))


def add(*terms) -> Term:
    flat = []
    for t in terms:
        flat.extend(t.terms if isinstance(t, Add) else (t,))
    return flat[0] if len(flat) == 1 else Add(tuple(flat))


def sub(a, b) -> Term:
    return add(a, Neg(b))


# ---------------------------------------------------------------- formulas


@dataclass(frozen=True)
class BoolConst:
    value: bool


TRUE = BoolConst(True)
FALSE = BoolConst(False)

LE, LT, GE, GT, EQ = "<=", "<", ">=", ">", "="
_CMPS = (LE, LT, GE, GT, EQ)


@dataclass(frozen=True)
class Atom:
    op: str
    lhs: object
    rhs: object

    def __post_init__(self):
        if self.op not in _CMPS:
            raise FormulaError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Implies:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Iff:
    lhs: object
    rhs: object


Formula = Union[BoolConst, Atom, Not, And, Or, Implies, Iff]


def conj(args: Iterable) -> Formula:
    """Flattened n-ary And; drops TRUE, collapses on FALSE."""
    out = []
    for a in args:
        if a == TRUE:
            continue
        if a == FALSE:
            return FALSE
        out.extend(a.args if isinstance(a, And) else (a,))
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else And(tuple(out))


def disj(args: Iterable) -> Formula:
    out = []
    for a in args:
        if a == FALSE:
            continue
        if a == TRUE:
            return TRUE
        out.extend(a.args if isinstance(a, Or) else (a,))
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else Or(tuple(out))


def le(a, b) -> Atom:
    return Atom(LE, a, b)


def lt(a, b) -> Atom:
    return Atom(LT, a, b)


def ge(a, b) -> Atom:
    return Atom(GE, a, b)


def gt(a, b) -> Atom:
    return Atom(GT, a, b)


def eq(a, b) -> Atom:
    return Atom(EQ, a, b)


# ---------------------------------------------------------------- traversal


def _term_vars(t, acc: dict) -> None:
    if isinstance(t, Var):
        prev = acc.setdefault(t.name, t)
        if prev.sort != t.sort:
            raise FormulaError(f"variable {t.name} used with sorts {prev.sort} and {t.sort}")
    elif isinstance(t, Add):
        for s in t.terms:
            _term_vars(s, acc)
    elif isinstance(t, (Neg, Abs)):
        _term_vars(t.term, acc)


def free_vars(formulas) -> dict[str, Var]:
    """Variables by name, in first-occurrence order."""
    if not isinstance(formulas, (list, tuple)):
        formulas = [formulas]
    acc: dict[str, Var] = {}
    stack = list(reversed(formulas))
    while stack:
        f = stack.pop()
        if isinstance(f, Atom):
            _term_vars(f.lhs, acc)
            _term_vars(f.rhs, acc)
        elif isinstance(f, Not):
            stack.append(f.arg)
        elif isinstance(f, (And, Or)):
            stack.extend(reversed(f.args))
        elif isinstance(f, (Implies, Iff)):
            stack.append(f.rhs)
            stack.append(f.lhs)
    return acc


def size(formula) -> int:
    """Number of atoms (a rough size measure)."""
    count = 0
    stack = [formula]
    while stack:
        f = stack.pop()
        if isinstance(f, Atom):
            count += 1
        elif isinstance(f, Not):
            stack.append(f.arg)
        elif isinstance(f, (And, Or)):
            stack.extend(f.args)
        elif isinstance(f, (Implies, Iff)):
            stack.extend((f.lhs, f.rhs))
    return count


# ---------------------------------------------------------------- evaluation

Assignment = Mapping[str, Fraction]


def eval_term(t, a: Assignment) -> Fraction:
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        if t.name not in a:
            raise FormulaError(f"no value for variable {t.name}")
        return a[t.name]
    if isinstance(t, Add):
        return sum((eval_term(s, a) for s in t.terms), Fraction(0))
    if isinstance(t, Neg):
        return -eval_term(t.term, a)
    if isinstance(t, Abs):
        return abs(eval_term(t.term, a))
    raise FormulaError(f"not a term: {t!r}")


def _compare(op: str, x: Fraction, y: Fraction) -> bool:
    if op == LE:
        return x <= y
    if op == LT:
        return x < y
    if op == GE:
        return x >= y
    if op == GT:
        return x > y
    return x == y


def eval_formula(f, a: Assignment) -> bool:
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, Atom):
        return _compare(f.op, eval_term(f.lhs, a), eval_term(f.rhs, a))
    if isinstance(f, Not):
        return not eval_formula(f.arg, a)
    if isinstance(f, And):
        return all(eval_formula(g, a) for g in f.args)
    if isinstance(f, Or):
        return any(eval_formula(g, a) for g in f.args)
    if isinstance(f, Implies):
        return (not eval_formula(f.lhs, a)) or eval_formula(f.rhs, a)
    if isinstance(f, Iff):
        return eval_formula(f.lhs, a) == eval_formula(f.rhs, a)
    raise FormulaError(f"not a formula: {f!r}")


# ---------------------------------------------------------------- printing


def _number(value: Fraction) -> str:
    def nat(v: Fraction) -> str:
        return str(v.numerator) if v.denominator == 1 else f"(/ {v.numerator} {v.denominator})"

    return f"(- {nat(-value)})" if value < 0 else nat(value)


class _Printer:
    def __init__(self, declared: Mapping[str, Var]):
        self.declared = declared
        self.fresh: list[Var] = []
        self.side: list[str] = []
        self._abs_cache: dict = {}

    def sort(self, t) -> str:
        if isinstance(t, Var):
            return t.sort
        if isinstance(t, Const):
            return INT if t.value.denominator == 1 else REAL
        if isinstance(t, Add):
            return INT if all(self.sort(s) == INT for s in t.terms) else REAL
        return self.sort(t.term)

    def term(self, t, real_ctx: bool) -> str:
        if isinstance(t, Var):
            if t.name not in self.declared:
                raise FormulaError(f"undeclared variable {t.name}")
            if self.declared[t.name].sort != t.sort:
                raise FormulaError(f"variable {t.name} declared {self.declared[t.name].sort}, used as {t.sort}")
            return f"(to_real {t.name})" if real_ctx and t.sort == INT else t.name
        if isinstance(t, Const):
            return _number(t.value)
        if isinstance(t, Add):
            return "(+ " + " ".join(self.term(s, real_ctx) for s in t.terms) + ")"
        if isinstance(t, Neg):
            return f"(- {self.term(t.term, real_ctx)})"
        if isinstance(t, Abs):
            return self.abs(t, real_ctx)
        raise FormulaError(f"not a term: {t!r}")

    def abs(self, t: Abs, real_ctx: bool) -> str:
        inner_sort = self.sort(t.term)
        key = (t, real_ctx)
        if key not in self._abs_cache:
            n = len(self.fresh)
            name = f"_abs_{n}"
            while name in self.declared:
                n += 1
                name = f"_abs_{n}_"
            sort = REAL if real_ctx or inner_sort == REAL else INT
            v = Var(name, sort)
            self.fresh.append(v)
            inner = self.term(t.term, sort == REAL)
            self.side.append(
                f"(and (>= {name} {inner}) (>= {name} (- {inner})) (or (= {name} {inner}) (= {name} (- {inner}))))"
            )
            self._abs_cache[key] = name
        return self._abs_cache[key]

    def formula(self, f) -> str:
        if isinstance(f, BoolConst):
            return "true" if f.value else "false"
        if isinstance(f, Atom):
            real_ctx = self.sort(f.lhs) == REAL or self.sort(f.rhs) == REAL
            return f"({f.op} {self.term(f.lhs, real_ctx)} {self.term(f.rhs, real_ctx)})"
        if isinstance(f, Not):
            return f"(not {self.formula(f.arg)})"
        if isinstance(f, (And, Or)):
            if not f.args:
                return "true" if isinstance(f, And) else "false"
            if len(f.args) == 1:
                return self.formula(f.args[0])
            op = "and" if isinstance(f, And) else "or"
            return f"({op} " + " ".join(self.formula(g) for g in f.args) + ")"
        if isinstance(f, Implies):
            return f"(=> {self.formula(f.lhs)} {self.formula(f.rhs)})"
        if isinstance(f, Iff):
            return f"(= {self.formula(f.lhs)} {self.formula(f.rhs)})"
        raise FormulaError(f"not a formula: {f!r}")


def print_smtlib(
    formulas: Sequence,
    variables: Iterable[Var],
    logic: Optional[str] = None,
    get_model: bool = True,
) -> str:
    """Complete SMT-LIB2 script: one ``assert`` per formula, then check-sat/get-model.

    The logic is QF_LIRA when any Int variable is declared, QF_LRA otherwise,
    unless ``logic`` is given.
    """
    declared: dict[str, Var] = {}
    for v in variables:
        if v.name in declared and declared[v.name] != v:
            raise FormulaError(f"variable {v.name} declared twice with different sorts")
        declared[v.name] = v
    printer = _Printer(declared)
    asserts = [printer.formula(f) for f in formulas]
    every = list(declared.values()) + printer.fresh
    if logic is None:
        logic = "QF_LIRA" if any(v.sort == INT for v in every) else "QF_LRA"
    lines = ["(set-option :produce-models true)", f"(set-logic {logic})"]
    lines += [f"(declare-fun {v.name} () {v.sort})" for v in every]
    lines += [f"(assert {s})" for s in printer.side]
    lines += [f"(assert {s})" for s in asserts]
    lines.append("(check-sat)")
    if get_model:
        lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- model parsing


def _tokens(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "()":
            yield c
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            yield text[i : j + 1]
            i = j + 1
        elif c == "|":
            j = text.index("|", i + 1)
            yield text[i + 1 : j]
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            yield text[i:j]
            i = j


def parse_sexprs(text: str) -> list:
    stack: list[list] = [[]]
    for tok in _tokens(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ModelParseError(f"unbalanced ')' in solver output:\n{text}")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ModelParseError(f"unbalanced '(' in solver output:\n{text}")
    return stack[0]


def _value(expr, text: str) -> Fraction:
    if isinstance(expr, str):
        try:
            return Fraction(expr)
        except ValueError:
            raise ModelParseError(f"cannot read number {expr!r} in solver output:\n{text}") from None
    if len(expr) == 2 and expr[0] == "-":
        return -_value(expr[1], text)
    if len(expr) == 3 and expr[0] == "/":
        return _value(expr[1], text) / _value(expr[2], text)
    if len(expr) == 2 and expr[0] in ("to_real", "to_int"):
        return _value(expr[1], text)
    raise ModelParseError(f"unsupported value {expr!r} in solver output:\n{text}")


def parse_model(text: str, variables: Iterable) -> dict[str, Fraction]:
    """Exact values for ``variables`` from a get-model (or get-value) response.

    Variables the solver did not mention are simply absent from the result.
    """
    wanted = {}
    for v in variables:
        wanted[v.name if isinstance(v, Var) else v] = v.sort if isinstance(v, Var) else None
    exprs = parse_sexprs(text)
    if len(exprs) != 1 or not isinstance(exprs[0], list):
        raise ModelParseError(f"expected one parenthesised model, got:\n{text}")
    body = exprs[0]
    if body and body[0] == "model":
        body = body[1:]
    out: dict[str, Fraction] = {}
    for item in body:
        if not isinstance(item, list) or not item:
            raise ModelParseError(f"malformed model entry {item!r} in solver output:\n{text}")
        if item[0] == "define-fun":
            if len(item) != 5:
                raise ModelParseError(f"malformed define-fun {item!r} in solver output:\n{text}")
            name, args, _sort, value = item[1], item[2], item[3], item[4]
            if args:
                continue
        elif len(item) == 2 and isinstance(item[0], str):
            name, value = item
        else:
            raise ModelParseError(f"malformed model entry {item!r} in solver output:\n{text}")
        if name not in wanted:
            continue
        val = _value(value, text)
        if wanted[name] == INT and val.denominator != 1:
            raise ModelParseError(f"Int variable {name} got non-integer value {val}:\n{text}")
        out[name] = val
    return out
