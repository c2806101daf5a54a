"""Self-maps of the simplex: builtin families and a small expression language.

Grammar:

    map       := component (';' component)*
    component := 'g' INDEX '=' expr
    expr      := term (('+'|'-') term)*
    term      := factor (('*'|'/') factor)*
    factor    := unary ('^' factor)?          # right associative
    unary     := '-' unary | atom
    atom      := NUMBER | 'x' INDEX | ('min'|'max') '(' expr (',' expr)* ')'
               | '(' expr ')'

or a builtin: `identity`, `rotate`, `pull t=<num>`,
`constructed file=<labeling.json> [tau=<p/q>]`.

Arbitrary expressions become self-maps by clamping components at 0 and
dividing by their sum, so the literal formula is normalized; builtins map
into the simplex already and are evaluated raw.
"""

import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    ArityError,
    DegenerateOutput,
    MapRangeError,
    MapSyntaxError,
    UnknownBuiltin,
)
from .simplex import BarycentricPoint, make_point

_SUM_FLOOR = 1e-12
BUILTIN_NAMES = ("identity", "rotate", "pull", "constructed")


# ---------------------------------------------------------------------------
# expression AST


@dataclass(frozen=True)
class Num:
    text: str

    @property
    def value(self):
        return float(self.text)

    @property
    def exact(self):
        return Fraction(self.text)


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


def _eval_node(node, x):
    """Evaluate over a (B, n+1) float array; returns a (B,) column."""
    if isinstance(node, Num):
        return np.full(x.shape[0], node.value)
    if isinstance(node, Var):
        return x[:, node.index]
    if isinstance(node, Neg):
        return -_eval_node(node.arg, x)
    if isinstance(node, Bin):
        a = _eval_node(node.left, x)
        b = _eval_node(node.right, x)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            with np.errstate(divide="ignore", invalid="ignore"):
                return a / b
        with np.errstate(invalid="ignore"):
            return a**b
    out = _eval_node(node.args[0], x)
    for arg in node.args[1:]:
        other = _eval_node(arg, x)
        out = np.minimum(out, other) if node.func == "min" else np.maximum(out, other)
    return out


def _eval_node_exact(node, coords):
    if isinstance(node, Num):
        return node.exact
    if isinstance(node, Var):
        return Fraction(coords[node.index])
    if isinstance(node, Neg):
        return -_eval_node_exact(node.arg, coords)
    if isinstance(node, Bin):
        a = _eval_node_exact(node.left, coords)
        b = _eval_node_exact(node.right, coords)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if b == 0:
                raise MapRangeError("exact division by zero")
            return a / b
        if b.denominator != 1:
            raise MapRangeError("exact mode needs integer exponents")
        return a ** int(b)
    vals = [_eval_node_exact(a, coords) for a in node.args]
    return min(vals) if node.func == "min" else max(vals)


def _format_node(node):
    if isinstance(node, Num):
        return node.text
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return f"(-{_format_node(node.arg)})"
    if isinstance(node, Bin):
        return f"({_format_node(node.left)}{node.op}{_format_node(node.right)})"
    return f"{node.func}({', '.join(_format_node(a) for a in node.args)})"


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^();,=])"
    r"|(?P<ws>\s+)"
    r"|(?P<bad>.)"
)


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup
        value = match.group()
        if kind == "bad":
            raise MapSyntaxError(f"unexpected character {value!r}", line, col)
        if kind != "ws":
            tokens.append(_Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens, n):
        self.tokens = tokens
        self.pos = 0
        self.n = n

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text):
        tok = self.next()
        if tok.text != text:
            raise MapSyntaxError(
                f"expected {text!r}, found {tok.text or 'end of input'!r}",
                tok.line,
                tok.column,
            )
        return tok

    def parse_components(self):
        components = {}
        while True:
            tok = self.next()
            match = re.fullmatch(r"g(\d+)", tok.text) if tok.kind == "ident" else None
            if match is None:
                raise MapSyntaxError(
                    f"expected a component like g0=..., found {tok.text!r}",
                    tok.line,
                    tok.column,
                )
            idx = int(match.group(1))
            if idx in components:
                raise ArityError(f"component g{idx} defined twice")
            self.expect("=")
            components[idx] = self.parse_expr()
            tok = self.next()
            if tok.kind == "eof":
                break
            if tok.text != ";":
                raise MapSyntaxError(
                    f"expected ';' between components, found {tok.text!r}",
                    tok.line,
                    tok.column,
                )
        if sorted(components) != list(range(self.n + 1)):
            raise ArityError(
                f"need components g0..g{self.n}, got {sorted(components)}"
            )
        return tuple(components[i] for i in range(self.n + 1))

    def parse_expr(self):
        node = self.parse_term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            node = Bin(op, node, self.parse_term())
        return node

    def parse_term(self):
        node = self.parse_factor()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            node = Bin(op, node, self.parse_factor())
        return node

    def parse_factor(self):
        node = self.parse_unary()
        if self.peek().text == "^":
            self.next()
            node = Bin("^", node, self.parse_factor())
        return node

    def parse_unary(self):
        if self.peek().text == "-":
            self.next()
            return Neg(self.parse_unary())
        return self.parse_atom()

    def parse_atom(self):
        tok = self.next()
        if tok.kind == "num":
            return Num(tok.text)
        if tok.text == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        if tok.kind == "ident":
            match = re.fullmatch(r"x(\d+)", tok.text)
            if match:
                idx = int(match.group(1))
                if idx > self.n:
                    raise MapSyntaxError(
                        f"variable x{idx} out of range for dimension {self.n}",
                        tok.line,
                        tok.column,
                    )
                return Var(idx)
            if tok.text in ("min", "max"):
                self.expect("(")
                args = [self.parse_expr()]
                while self.peek().text == ",":
                    self.next()
                    args.append(self.parse_expr())
                self.expect(")")
                if len(args) < 2:
                    raise MapSyntaxError(
                        f"{tok.text} needs at least two arguments",
                        tok.line,
                        tok.column,
                    )
                return Call(tok.text, tuple(args))
            raise MapSyntaxError(
                f"unknown identifier {tok.text!r}", tok.line, tok.column
            )
        raise MapSyntaxError(
            f"unexpected {tok.text or 'end of input'!r}", tok.line, tok.column
        )


# ---------------------------------------------------------------------------
# map objects


@dataclass(frozen=True)
class MapSpec:
    """A self-map of the n-simplex, evaluable in batch (float) and pointwise."""

    n: int
    kind: str
    name: str = None
    params: dict = field(default_factory=dict)
    components: tuple = None
    vertex_map: object = None
    lipschitz: float = None
    source: str = None

    def eval_batch(self, points):
        """(B, n+1) float rows in -> (B, n+1) float rows on the simplex."""
        x = np.asarray(points, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.n + 1:
            raise MapRangeError(f"points have {x.shape[1]} coords, need {self.n + 1}")
        if self.kind == "builtin":
            out = self._eval_builtin(x)
        elif self.kind == "constructed":
            from .construction import eval_constructed_batch

            out = eval_constructed_batch(self.vertex_map, x)
        else:
            raw = np.stack([_eval_node(c, x) for c in self.components], axis=1)
            if not np.all(np.isfinite(raw)):
                raise MapRangeError("map components evaluated to non-finite values")
            out = np.maximum(raw, 0.0)
            sums = out.sum(axis=1)
            if np.any(sums <= _SUM_FLOOR):
                raise DegenerateOutput(
                    "clamped components sum to nearly zero; cannot normalize"
                )
            out = out / sums[:, None]
        return out[0] if squeeze else out

    def _eval_builtin(self, x):
        if self.name == "identity":
            return x.copy()
        if self.name == "rotate":
            return np.roll(x, -1, axis=1)
        if self.name == "pull":
            t = float(self.params["t"])
            return (1.0 - t) * x + t / (self.n + 1)
        from .construction import eval_constructed_batch

        return eval_constructed_batch(self.vertex_map, x)

    def eval_point(self, coords):
        return self.eval_batch(np.asarray(coords, dtype=np.float64))

    def eval_exact(self, coords):
        """Exact evaluation on Fraction coordinates where supported."""
        coords = tuple(Fraction(c) for c in coords)
        if self.kind == "builtin":
            if self.name == "identity":
                return coords
            if self.name == "rotate":
                return coords[1:] + coords[:1]
            if self.name == "pull":
                t = Fraction(str(self.params["t"]))
                b = Fraction(1, self.n + 1)
                return tuple((1 - t) * c + t * b for c in coords)
        if self.kind == "constructed":
            from .construction import eval_constructed

            return eval_constructed(
                self.vertex_map, BarycentricPoint(coords, exact=True)
            ).coords
        raw = [_eval_node_exact(c, coords) for c in self.components]
        raw = [max(v, Fraction(0)) for v in raw]
        total = sum(raw)
        if total == 0:
            raise DegenerateOutput("clamped components sum to zero")
        return tuple(v / total for v in raw)

    def to_text(self):
        if self.source is not None:
            return self.source
        return "; ".join(
            f"g{i}={_format_node(c)}" for i, c in enumerate(self.components)
        )


def eval_map(spec, point):
    """Evaluate a map at a point, returning a point on the simplex."""
    if getattr(point, "exact", False):
        return BarycentricPoint(spec.eval_exact(point.coords), exact=True)
    coords = point.coords if isinstance(point, BarycentricPoint) else point
    out = spec.eval_batch(np.asarray([float(c) for c in coords]))
    return make_point(out)


def _parse_builtin(text, n):
    words = text.split()
    name, args = words[0], words[1:]
    params = {}
    for arg in args:
        if "=" not in arg:
            raise MapSyntaxError(f"builtin parameter {arg!r} is not key=value")
        key, value = arg.split("=", 1)
        params[key] = value
    if name == "identity":
        return MapSpec(n=n, kind="builtin", name="identity", lipschitz=1.0, source=text)
    if name == "rotate":
        return MapSpec(n=n, kind="builtin", name="rotate", lipschitz=1.0, source=text)
    if name == "pull":
        if "t" not in params:
            raise MapSyntaxError("pull needs t=<num>")
        t = float(params["t"])
        if not 0.0 <= t <= 1.0:
            raise MapSyntaxError(f"pull t must be in [0, 1], got {t}")
        # contraction factor is 1 - t, declared as 1 for safety
        return MapSpec(
            n=n,
            kind="builtin",
            name="pull",
            params={"t": params["t"]},
            lipschitz=1.0,
            source=text,
        )
    if name == "constructed":
        if "file" not in params:
            raise MapSyntaxError("constructed needs file=<labeling.json>")
        import json

        from .construction import build_vertex_map, constructed_map
        from .labeling import Labeling

        with open(params["file"]) as handle:
            lab = Labeling.from_json_dict(json.load(handle))
        if lab.grid.n != n:
            raise ArityError(
                f"labeling file has dimension {lab.grid.n}, expected {n}"
            )
        tau = Fraction(params["tau"]) if "tau" in params else None
        return constructed_map(build_vertex_map(lab.grid, lab, tau))
    raise UnknownBuiltin(f"unknown builtin map {name!r}")


def parse_map(text, n):
    """Parse map text (builtin or expression form) for dimension n."""
    stripped = text.strip()
    if not stripped:
        raise MapSyntaxError("empty map text")
    first = stripped.split()[0]
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", first) and not re.fullmatch(
        r"g\d+", first
    ):
        return _parse_builtin(stripped, n)
    components = _Parser(_tokenize(text), n).parse_components()
    return MapSpec(n=n, kind="expression", components=components)
