"""
Recursive-descent parser, printer and evaluator for scenario expressions.

Grammar:
    expr   := term { ("+"|"-") term }
    term   := factor { ("*"|"/") factor }
    factor := base [ "^" factor ]
    base   := NUMBER | "t" | "x" | FUNC "(" expr ")" | "(" expr ")" | "-" base
    FUNC   := "sin" | "cos" | "exp" | "sqrt" | "tanh"
"""

import re
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np

from src.errors import (
    ArityError,
    ExpressionDomainError,
    ExpressionSyntaxError,
    UnknownIdentifierError,
)
from src.modelspec.dual import UNARY_JETS, HyperDual

FUNCTIONS = ('sin', 'cos', 'exp', 'sqrt', 'tanh')
VARIABLES = ('t', 'x')

_TOKEN = re.compile(
    r'\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))'
)


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # 'neg' or a function name
    arg: 'Node'


@dataclass(frozen=True)
class Binary:
    op: str
    left: 'Node'
    right: 'Node'


Node = Union[Const, Var, Unary, Binary]


def _tokenize(source: str) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == '':
            break
        match = _TOKEN.match(source, pos)
        if match is None or match.end() == pos:
            offset = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {source[offset]!r}", offset)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append((kind, match.group(kind), start))
        pos = match.end()
    tokens.append(('end', '', len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.index = 0

    @property
    def current(self) -> Tuple[str, str, int]:
        return self.tokens[self.index]

    def _accept(self, text: str) -> bool:
        kind, value, _ = self.current
        if kind == 'op' and value == text:
            self.index += 1
            return True
        return False

    def _expect(self, text: str) -> None:
        if not self._accept(text):
            kind, value, offset = self.current
            found = value if kind != 'end' else 'end of input'
            raise ExpressionSyntaxError(f"expected {text!r}, found {found!r}", offset)

    def parse(self) -> Node:
        node = self.expr()
        kind, value, offset = self.current
        if kind != 'end':
            raise ExpressionSyntaxError(f"unexpected token {value!r}", offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            if self._accept('+'):
                node = Binary('+', node, self.term())
            elif self._accept('-'):
                node = Binary('-', node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.factor()
        while True:
            if self._accept('*'):
                node = Binary('*', node, self.factor())
            elif self._accept('/'):
                node = Binary('/', node, self.factor())
            else:
                return node

    def factor(self) -> Node:
        base = self.base()
        if self._accept('^'):
            return Binary('^', base, self.factor())
        return base

    def base(self) -> Node:
        kind, value, offset = self.current
        if kind == 'number':
            self.index += 1
            return Const(float(value))
        if kind == 'name':
            self.index += 1
            if value in VARIABLES:
                return Var(value)
            if value in FUNCTIONS:
                self._expect('(')
                arg = self.expr()
                if self.current[0] == 'op' and self.current[1] == ',':
                    raise ArityError(f"{value} takes exactly one argument", self.current[2])
                self._expect(')')
                return Unary(value, arg)
            raise UnknownIdentifierError(f"unknown identifier {value!r} (only t and x are variables)", offset)
        if self._accept('('):
            node = self.expr()
            self._expect(')')
            return node
        if self._accept('-'):
            return Unary('neg', self.base())
        found = value if kind != 'end' else 'end of input'
        raise ExpressionSyntaxError(f"unexpected {found!r}", offset)


def parse_expr(source: str) -> Node:
    """
    Parse an expression in t and x.

    Args:
        source: Non-empty ASCII expression text

    Returns:
        Root node of the abstract syntax tree

    Raises:
        ExpressionSyntaxError: On malformed input (with byte offset)
        UnknownIdentifierError: On identifiers other than t, x and the functions
        ArityError: On functions applied to more than one argument
    """
    if not isinstance(source, str) or not source.strip():
        raise ExpressionSyntaxError("expression is empty", 0)
    try:
        source.encode('ascii')
    except UnicodeEncodeError as e:
        raise ExpressionSyntaxError("expression must be ASCII", e.start) from e
    return _Parser(source).parse()


def to_source(node: Node) -> str:
    """Print an AST so that parse_expr(to_source(a)) == a."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == 'neg':
            return f"-({to_source(node.arg)})"
        return f"{node.op}({to_source(node.arg)})"
    return f"({to_source(node.left)}{node.op}{to_source(node.right)})"


def depends_on(node: Node, name: str) -> bool:
    """Whether the expression mentions variable `name`."""
    if isinstance(node, Const):
        return False
    if isinstance(node, Var):
        return node.name == name
    if isinstance(node, Unary):
        return depends_on(node.arg, name)
    return depends_on(node.left, name) or depends_on(node.right, name)


def _guard_division(denominator: np.ndarray) -> None:
    if np.any(denominator == 0):
        raise ExpressionDomainError("division by zero in expression")


def _guard_sqrt(arg: np.ndarray, strict: bool) -> None:
    bad = arg <= 0 if strict else arg < 0
    if np.any(bad):
        raise ExpressionDomainError(f"sqrt of {'non-positive' if strict else 'negative'} value in expression")


def evaluate(node: Node, t, x) -> np.ndarray:
    """
    Evaluate the expression on broadcastable arrays t, x.

    Raises:
        ExpressionDomainError: On division by zero or sqrt of a negative value
    """
    if isinstance(node, Const):
        return np.full(np.broadcast(t, x).shape, node.value)
    if isinstance(node, Var):
        value = t if node.name == 't' else x
        return np.broadcast_to(np.asarray(value, dtype=float), np.broadcast(t, x).shape).copy()
    if isinstance(node, Unary):
        arg = evaluate(node.arg, t, x)
        if node.op == 'neg':
            return -arg
        if node.op == 'sqrt':
            _guard_sqrt(arg, strict=False)
        return getattr(np, node.op)(arg)

    left = evaluate(node.left, t, x)
    right = evaluate(node.right, t, x)
    if node.op == '+':
        return left + right
    if node.op == '-':
        return left - right
    if node.op == '*':
        return left * right
    if node.op == '/':
        _guard_division(right)
        return left / right
    return _power(left, right, node.right)


def _power(base: np.ndarray, exponent: np.ndarray, exponent_node: Node) -> np.ndarray:
    if isinstance(exponent_node, Const) and float(exponent_node.value).is_integer():
        if exponent_node.value < 0 and np.any(base == 0):
            raise ExpressionDomainError("zero base with negative exponent")
        return base ** exponent
    if np.any(base < 0) or (np.any(base == 0) and np.any(exponent <= 0)):
        raise ExpressionDomainError("base outside the domain of a non-integer power")
    return base ** exponent


def evaluate_jet(node: Node, t: HyperDual, x: HyperDual) -> HyperDual:
    """
    Evaluate the expression on hyper-dual inputs for exact derivatives.

    Raises:
        ExpressionDomainError: Where a derivative does not exist
    """
    if isinstance(node, Const):
        return HyperDual(np.full(np.broadcast(t.f, x.f).shape, node.value))
    if isinstance(node, Var):
        return t if node.name == 't' else x
    if isinstance(node, Unary):
        arg = evaluate_jet(node.arg, t, x)
        if node.op == 'neg':
            return -arg
        if node.op == 'sqrt':
            _guard_sqrt(np.asarray(arg.f), strict=True)
        return arg.apply(UNARY_JETS[node.op])

    left = evaluate_jet(node.left, t, x)
    right = evaluate_jet(node.right, t, x)
    if node.op == '+':
        return left + right
    if node.op == '-':
        return left - right
    if node.op == '*':
        return left * right
    if node.op == '/':
        _guard_division(np.asarray(right.f))
        return left / right
    if isinstance(node.right, Const):
        p = float(node.right.value)
        base = np.asarray(left.f)
        if p == 0.0:
            return HyperDual(np.ones(np.broadcast(t.f, x.f).shape))
        if p == 1.0:
            return left
        if not p.is_integer() and np.any(base <= 0):
            raise ExpressionDomainError("non-positive base with non-integer exponent")
        if p < 2 and np.any(base == 0):
            raise ExpressionDomainError("zero base where the derivative does not exist")
        return left.power(p)
    if np.any(np.asarray(left.f) <= 0):
        raise ExpressionDomainError("non-positive base with variable exponent")
    return (right * left.apply(UNARY_JETS['log'])).apply(UNARY_JETS['exp'])
