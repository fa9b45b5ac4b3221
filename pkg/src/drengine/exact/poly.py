"""Sparse multivariate polynomials with exact rational coefficients.

A monomial is a tuple of ``(variable, exponent)`` pairs sorted by
:func:`var_key`, so two polynomials compare equal exactly when they have
the same terms, regardless of how they were built.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

from ..errors import DomainError

Monomial = Tuple[Tuple[str, int], ...]
Number = Union[int, Fraction]

_SPLIT = re.compile(r"(\d+)")


def var_key(name: str):
    """Natural sort key: ``a_2`` sorts before ``a_10``."""
    parts = _SPLIT.split(name)
    return tuple((0, int(p)) if p.isdigit() else (1, p) for p in parts if p != "")


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    exps = dict(m1)
    for v, e in m2:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items(), key=lambda t: var_key(t[0])))


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"not an exact number: {c!r}")


class MultiPoly:
    """Polynomial over Q in named variables.

    Instances are treated as immutable values; every operation returns a
    new polynomial.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Optional[Mapping[Monomial, Number]] = None):
        clean: Dict[Monomial, Fraction] = {}
        if terms:
            for mono, c in terms.items():
                c = _as_fraction(c)
                if c:
                    mono = tuple(
                        sorted(((v, e) for v, e in mono if e), key=lambda t: var_key(t[0]))
                    )
                    if any(e < 0 for _, e in mono):
                        raise DomainError("negative exponent in monomial")
                    clean[mono] = clean.get(mono, Fraction(0)) + c
                    if not clean[mono]:
                        del clean[mono]
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: Dict[Monomial, Fraction]) -> "MultiPoly":
        p = cls.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    # construction -----------------------------------------------------
    @classmethod
    def const(cls, c: Number) -> "MultiPoly":
        c = _as_fraction(c)
        return cls._raw({(): c} if c else {})

    @classmethod
    def var(cls, name: str, power: int = 1) -> "MultiPoly":
        if power == 0:
            return cls.const(1)
        return cls._raw({((name, power),): Fraction(1)})

    @classmethod
    def monomial(cls, exps: Mapping[str, int], coeff: Number = 1) -> "MultiPoly":
        return cls({tuple(exps.items()): coeff})

    @classmethod
    def coerce(cls, x) -> "MultiPoly":
        if isinstance(x, MultiPoly):
            return x
        return cls.const(x)

    # inspection -------------------------------------------------------
    @property
    def terms(self) -> Dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    @property
    def variables(self) -> Tuple[str, ...]:
        names = {v for mono in self._terms for v, _ in mono}
        return tuple(sorted(names, key=var_key))

    def degree(self) -> int:
        """Total degree; the zero polynomial has degree -1."""
        if not self._terms:
            return -1
        return max(sum(e for _, e in mono) for mono in self._terms)

    def degree_in(self, name: str) -> int:
        if not self._terms:
            return -1
        return max(dict(mono).get(name, 0) for mono in self._terms)

    def is_constant(self) -> bool:
        return all(mono == () for mono in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    def coefficient(self, exps: Mapping[str, int]) -> Fraction:
        mono = tuple(sorted(((v, e) for v, e in exps.items() if e), key=lambda t: var_key(t[0])))
        return self._terms.get(mono, Fraction(0))

    def as_constant(self) -> Fraction:
        if not self.is_constant():
            raise DomainError(f"polynomial {self} is not constant")
        return self.constant_term()

    def sorted_terms(self, variables: Optional[Sequence[str]] = None):
        """Terms in graded-lex order (highest degree first)."""
        variables = tuple(variables) if variables is not None else self.variables
        index = {v: i for i, v in enumerate(variables)}
        missing = set(self.variables) - set(index)
        if missing:
            raise DomainError(f"variable order lacks {sorted(missing)}")

        def vec(mono):
            out = [0] * len(variables)
            for v, e in mono:
                out[index[v]] = e
            return tuple(out)

        rows = [(vec(m), c) for m, c in self._terms.items()]
        rows.sort(key=lambda t: (-sum(t[0]), tuple(-e for e in t[0])))
        return rows

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, MultiPoly):
            if not isinstance(other, (int, Fraction)):
                return NotImplemented
            other = MultiPoly.const(other)
        out = dict(self._terms)
        for mono, c in other._terms.items():
            s = out.get(mono, 0) + c
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        return MultiPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, (MultiPoly, int, Fraction)):
            return NotImplemented
        return self + (-MultiPoly.coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return MultiPoly._raw({})
            return MultiPoly._raw({m: c * other for m, c in self._terms.items()})
        if not isinstance(other, MultiPoly):
            return NotImplemented
        out: Dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return MultiPoly._raw({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                raise ZeroDivisionError("division of polynomial by zero")
            return self * (Fraction(1) / other)
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise DomainError("polynomial powers must be nonnegative integers")
        result = MultiPoly.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MultiPoly.const(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # evaluation -------------------------------------------------------
    def evaluate(self, point: Mapping[str, Number]) -> Fraction:
        """Exact value at a point that assigns every variable."""
        missing = [v for v in self.variables if v not in point]
        if missing:
            raise DomainError(f"evaluation point lacks variables {missing}")
        total = Fraction(0)
        for mono, c in self._terms.items():
            t = c
            for v, e in mono:
                t *= Fraction(point[v]) ** e
            total += t
        return total

    def substitute(self, mapping: Mapping[str, object], partial: bool = False) -> "MultiPoly":
        """Replace variables by polynomials or numbers.

        Unless ``partial`` is set, every variable must be mapped.
        """
        if not partial:
            missing = [v for v in self.variables if v not in mapping]
            if missing:
                raise DomainError(f"substitution lacks variables {missing}")
        images = {v: MultiPoly.coerce(p) for v, p in mapping.items()}
        powers: Dict[Tuple[str, int], MultiPoly] = {}

        def power(v, e):
            key = (v, e)
            if key not in powers:
                powers[key] = images[v] ** e
            return powers[key]

        out = MultiPoly()
        for mono, c in self._terms.items():
            keep = tuple((v, e) for v, e in mono if v not in images)
            term = MultiPoly._raw({keep: c})
            for v, e in mono:
                if v in images:
                    term = term * power(v, e)
            out = out + term
        return out

    def rename(self, mapping: Mapping[str, str]) -> "MultiPoly":
        return MultiPoly(
            {tuple((mapping.get(v, v), e) for v, e in mono): c for mono, c in self._terms.items()}
        )

    def coefficients_in(self, name: str) -> Dict[int, "MultiPoly"]:
        """Split as ``sum_i coeff_i * name**i``."""
        out: Dict[int, Dict[Monomial, Fraction]] = {}
        for mono, c in self._terms.items():
            e = 0
            rest = []
            for v, k in mono:
                if v == name:
                    e = k
                else:
                    rest.append((v, k))
            out.setdefault(e, {})[tuple(rest)] = c
        return {e: MultiPoly._raw(t) for e, t in out.items()}

    # formatting -------------------------------------------------------
    def __repr__(self):
        return f"MultiPoly({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for vec, c in self.sorted_terms():
            names = self.variables
            mono = "*".join(
                f"{names[i]}^{e}" if e > 1 else names[i] for i, e in enumerate(vec) if e
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self, variables: Optional[Sequence[str]] = None) -> dict:
        variables = list(variables) if variables is not None else list(self.variables)
        return {
            "vars": variables,
            "terms": [
                {"exp": list(vec), "num": str(c.numerator), "den": str(c.denominator)}
                for vec, c in self.sorted_terms(variables)
            ],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "MultiPoly":
        try:
            variables = list(doc["vars"])
            terms = {}
            for t in doc["terms"]:
                exp = list(t["exp"])
                if len(exp) != len(variables):
                    raise DomainError("exponent vector length does not match vars")
                mono = tuple(zip(variables, (int(e) for e in exp)))
                terms[mono] = terms.get(mono, 0) + Fraction(int(t["num"]), int(t["den"]))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed polynomial JSON: {exc}") from exc
        return cls(terms)


def poly_sum(polys: Iterable[MultiPoly]) -> MultiPoly:
    out: Dict[Monomial, Fraction] = {}
    for p in polys:
        for m, c in p.items():
            out[m] = out.get(m, 0) + c
    return MultiPoly._raw({m: c for m, c in out.items() if c})


def rational_to_json(q: Fraction) -> dict:
    q = Fraction(q)
    return {"num": str(q.numerator), "den": str(q.denominator)}


def rational_from_json(doc: Mapping) -> Fraction:
    try:
        return Fraction(int(doc["num"]), int(doc["den"]))
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"malformed rational JSON: {exc}") from exc


_TOKEN = re.compile(r"\s*(?:(\d+)|(x_\d+|[A-Za-z_][A-Za-z_0-9]*)|(\S))")


def parse_poly(text: str) -> MultiPoly:
    """Parse the small expression grammar used on the command line.

    Integers, names such as ``x_3``, ``+``, ``-``, ``*``, ``^`` and
    parentheses are accepted.
    """
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            break
        if m.group(1):
            tokens.append(("num", int(m.group(1))))
        elif m.group(2):
            tokens.append(("var", m.group(2)))
        else:
            tokens.append(("op", m.group(3)))
        pos = m.end()
    tokens.append(("end", None))
    i = 0

    def peek():
        return tokens[i]

    def take(expected=None):
        nonlocal i
        tok = tokens[i]
        if expected is not None and tok != ("op", expected):
            raise DomainError(f"expected {expected!r} in {text!r}, got {tok[1]!r}")
        i += 1
        return tok

    def expr():
        p = term()
        while peek() in (("op", "+"), ("op", "-")):
            op = take()[1]
            q = term()
            p = p + q if op == "+" else p - q
        return p

    def term():
        p = factor()
        while peek() == ("op", "*"):
            take()
            p = p * factor()
        return p

    def factor():
        if peek() == ("op", "-"):
            take()
            return -factor()
        base = atom()
        if peek() == ("op", "^"):
            take()
            kind, val = take()
            if kind != "num":
                raise DomainError(f"exponent must be an integer literal in {text!r}")
            return base ** val
        return base

    def atom():
        kind, val = take()
        if kind == "num":
            return MultiPoly.const(val)
        if kind == "var":
            return MultiPoly.var(val)
        if val == "(":
            p = expr()
            take(")")
            return p
        raise DomainError(f"unexpected token {val!r} in {text!r}")

    result = expr()
    if peek()[0] != "end":
        raise DomainError(f"trailing input in {text!r}")
    return result
