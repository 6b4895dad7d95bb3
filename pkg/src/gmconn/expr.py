"""Tiny expression language for constants appearing in configs and CLI args.

Grammar (explicit operators only, no implicit multiplication):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' intlit)?          -- integer exponents only
    atom   := number | name | call | '(' expr ')'
    call   := funcname '(' expr ')'       -- exp, log, gamma

Numbers are decimal literals (integer or with a fractional part) and are
kept exact as Fractions.  Evaluation stays in Q(i) exactly for as long
as the subtree allows and falls to mpmath numerics on first contact
with an irrational (pi, a named constant, or a function call).  gamma
accepts only a literal rational argument, so that occurrences like
gamma(1/4) denote definite constants rather than a function being
composed (we declare no chain rule for it).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import mpmath as mp


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


# -- AST ------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Name:
    ident: str


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Neg:
    arg: "Node"


Node = Union[Num, Name, Call, BinOp, Neg]

FUNCTIONS = ("exp", "log", "gamma")
BUILTINS = ("pi", "i")


# -- tokenizer ---------------------------------------------------------------

def _tokenize(text: str):
    tokens = []  # (kind, value, pos)
    k, n = 0, len(text)
    while k < n:
        c = text[k]
        if c.isspace():
            k += 1
            continue
        if c.isdigit() or (c == "." and k + 1 < n and text[k + 1].isdigit()):
            j = k
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            tokens.append(("num", text[k:j], k))
            k = j
            continue
        if c.isalpha() or c == "_":
            j = k
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[k:j], k))
            k = j
            continue
        if c in "+-*/^(),":
            tokens.append((c, c, k))
            k += 1
            continue
        raise ParseError(f"unexpected character {c!r}", k)
    tokens.append(("end", "", n))
    return tokens


def _number(text: str) -> Fraction:
    if "." in text:
        whole, frac = text.split(".")
        denom = 10 ** len(frac)
        return Fraction(int(whole or "0") * denom + int(frac or "0"), denom)
    return Fraction(int(text))


class _Parser:
    def __init__(self, tokens, known):
        self.toks = tokens
        self.k = 0
        self.known = known

    def peek(self):
        return self.toks[self.k]

    def next(self):
        t = self.toks[self.k]
        self.k += 1
        return t

    def expect(self, kind):
        t = self.next()
        if t[0] != kind:
            raise ParseError(f"expected {kind!r}, found {t[1]!r}", t[2])
        return t

    def parse(self) -> Node:
        node = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise ParseError(f"trailing input {t[1]!r}", t[2])
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.next()[0]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.next()[0]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.peek()[0] == "-":
            self.next()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "^":
            self.next()
            base = BinOp("^", base, self.int_literal())
        return base

    def int_literal(self) -> Node:
        neg = False
        t = self.peek()
        if t[0] == "(":
            # allow ^(-3)
            self.next()
            if self.peek()[0] == "-":
                self.next()
                neg = True
            t = self.expect("num")
            self.expect(")")
        elif t[0] == "-":
            self.next()
            neg = True
            t = self.expect("num")
        else:
            t = self.expect("num")
        if "." in t[1]:
            raise ParseError("exponent must be an integer", t[2])
        v = int(t[1])
        return Num(Fraction(-v if neg else v))

    def atom(self) -> Node:
        t = self.next()
        if t[0] == "num":
            return Num(_number(t[1]))
        if t[0] == "(":
            node = self.expr()
            self.expect(")")
            return node
        if t[0] == "name":
            ident = t[1]
            if self.peek()[0] == "(":
                if ident not in FUNCTIONS:
                    raise ParseError(f"unknown function {ident!r}", t[2])
                self.next()
                arg = self.expr()
                self.expect(")")
                if ident == "gamma" and _try_exact(arg) is None:
                    raise ParseError(
                        "gamma takes a literal rational argument", t[2])
                return Call(ident, arg)
            if ident not in self.known:
                raise ParseError(f"unknown identifier {ident!r}", t[2])
            return Name(ident)
        raise ParseError(f"unexpected token {t[1]!r}", t[2])


def parse(text: str, names=()) -> Node:
    """Parse an expression.  names: extra identifiers allowed besides pi, i."""
    known = set(BUILTINS) | set(names)
    return _Parser(_tokenize(text), known).parse()


# -- evaluation ---------------------------------------------------------------

def _try_exact(node: Node) -> Optional[tuple]:
    """Evaluate to exact (re, im) in Q x Q when possible, else None."""
    if isinstance(node, Num):
        return (node.value, Fraction(0))
    if isinstance(node, Name):
        if node.ident == "i":
            return (Fraction(0), Fraction(1))
        return None
    if isinstance(node, Neg):
        a = _try_exact(node.arg)
        return None if a is None else (-a[0], -a[1])
    if isinstance(node, BinOp):
        a = _try_exact(node.left)
        if a is None:
            return None
        b = _try_exact(node.right)
        if b is None:
            return None
        ar, ai = a
        br, bi = b
        if node.op == "+":
            return (ar + br, ai + bi)
        if node.op == "-":
            return (ar - br, ai - bi)
        if node.op == "*":
            return (ar * br - ai * bi, ar * bi + ai * br)
        if node.op == "/":
            d = br * br + bi * bi
            if d == 0:
                raise ZeroDivisionError("exact division by zero")
            return ((ar * br + ai * bi) / d, (ai * br - ar * bi) / d)
        if node.op == "^":
            n = int(b[0])
            base = (ar, ai)
            if n < 0:
                d = ar * ar + ai * ai
                if d == 0:
                    raise ZeroDivisionError("exact division by zero")
                base = (ar / d, -ai / d)
                n = -n
            rr, ri = Fraction(1), Fraction(0)
            br_, bi_ = base
            while n:
                if n & 1:
                    rr, ri = rr * br_ - ri * bi_, rr * bi_ + ri * br_
                br_, bi_ = br_ * br_ - bi_ * bi_, 2 * br_ * bi_
                n >>= 1
            return (rr, ri)
    return None


def exact_value(node: Union[Node, str], names=()) -> Optional[tuple]:
    """Exact (re, im) pair of Fractions when the expression lies in Q(i)."""
    if isinstance(node, str):
        node = parse(node, names=names)
    return _try_exact(node)


def evaluate(node: Union[Node, str], bindings: Optional[dict] = None,
             digits: int = 30):
    """Numeric value as an mpmath number at the requested precision.

    bindings maps identifiers to numeric witnesses; pi and i are always
    available.  Exact rational-complex subtrees are folded exactly first.
    """
    if isinstance(node, str):
        node = parse(node, names=tuple(bindings or ()))
    bindings = bindings or {}
    with mp.workdps(digits):
        return _eval_num(node, bindings)


def _eval_num(node: Node, bindings: dict):
    exact = _try_exact(node)
    if exact is not None:
        re, im = exact
        return (mp.mpf(re.numerator) / re.denominator
                + mp.mpc(0, 1) * im.numerator / im.denominator)
    if isinstance(node, Name):
        if node.ident == "pi":
            return +mp.pi
        if node.ident == "i":
            return mp.mpc(0, 1)
        if node.ident in bindings:
            return mp.mpmathify(bindings[node.ident])
        raise KeyError(f"no binding for identifier {node.ident!r}")
    if isinstance(node, Neg):
        return -_eval_num(node.arg, bindings)
    if isinstance(node, Call):
        a = _eval_num(node.arg, bindings)
        if node.func == "exp":
            return mp.exp(a)
        if node.func == "log":
            return mp.log(a)
        if node.func == "gamma":
            return mp.gamma(a)
        raise ValueError(f"unknown function {node.func!r}")
    if isinstance(node, BinOp):
        a = _eval_num(node.left, bindings)
        if node.op == "^":
            n = int(_try_exact(node.right)[0])
            return a ** n
        b = _eval_num(node.right, bindings)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
    raise TypeError(f"cannot evaluate node {node!r}")


# -- printing ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_text(node: Node) -> str:
    """Canonical text form; parse(to_text(x)) represents the same expression."""
    return _print(node, 0)


def _print(node: Node, parent_prec: int) -> str:
    if isinstance(node, Num):
        v = node.value
        s = (str(v.numerator) if v.denominator == 1
             else f"{v.numerator}/{v.denominator}")
        # negative and fractional literals lose their shape under ^ and
        # unary minus without parentheses (3/2^0 is not (3/2)^0)
        if (v < 0 or v.denominator != 1) and parent_prec >= 3:
            return f"({s})"
        return s
    if isinstance(node, Name):
        return node.ident
    if isinstance(node, Call):
        return f"{node.func}({_print(node.arg, 0)})"
    if isinstance(node, Neg):
        inner = _print(node.arg, _PREC["neg"])
        s = f"-{inner}"
        return s if parent_prec < _PREC["neg"] else f"({s})"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        if node.op == "^":
            left = _print(node.left, p + 1)
            rv = node.right.value  # always a Num by construction
            right = str(rv) if rv >= 0 else f"(-{-rv})"
            s = f"{left}^{right}"
        else:
            left = _print(node.left, p)
            # left associativity: right operand binds one tighter
            right = _print(node.right, p + 1)
            sep = "" if node.op in "*/" else " "
            s = f"{left}{sep}{node.op}{sep}{right}"
        return s if p >= parent_prec else f"({s})"
    raise TypeError(f"cannot print {node!r}")
