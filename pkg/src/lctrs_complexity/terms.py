"""Sorted first-order terms over a split signature of term and theory symbols.

Terms are immutable and hashable.  A signature object interns function
symbols, hands out the value constants of the built-in theories (integers,
booleans, integer lists) on demand, and manages the fresh marked copies of
defined symbols used by the dependency-tuple construction.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


class TermError(Exception):
    """Raised on ill-sorted construction or invalid positions."""


# ---------------------------------------------------------------------------
# Sorts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sort:
    name: str
    # one of "int", "bool", "list", "user"
    kind: str = "user"

    @property
    def is_theory(self) -> bool:
        return self.kind in ("int", "bool", "list")

    def __repr__(self) -> str:
        return self.name


INT = Sort("int", "int")
BOOL = Sort("bool", "bool")
LIST = Sort("list", "list")
# Result sort of marked (sharp) symbols and of tuple constructors.
TUPLE_ELEM = Sort("tuple-elem", "user")
# Wildcard argument sort of tuple constructors, which collect subterms of
# arbitrary sorts.
ANY = Sort("any", "user")


# ---------------------------------------------------------------------------
# Function symbols
# ---------------------------------------------------------------------------

TERM_SYMBOL = "term"
THEORY_SYMBOL = "theory"


@dataclass(frozen=True)
class FunSym:
    name: str
    arg_sorts: tuple[Sort, ...]
    res_sort: Sort
    space: str = TERM_SYMBOL
    is_value: bool = False
    is_sharp: bool = False
    # Payload for value symbols: int, bool, or tuple of ints (lists).
    value: object = None

    def __post_init__(self) -> None:
        if self.is_value and (self.space != THEORY_SYMBOL or self.arg_sorts):
            raise TermError(f"value symbol {self.name} must be a theory constant")

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)

    def __repr__(self) -> str:
        return self.name


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    sym: FunSym
    args: tuple["Term", ...] = ()

    def __post_init__(self) -> None:
        if len(self.args) != self.sym.arity:
            raise TermError(f"{self.sym.name} expects {self.sym.arity} arguments")
        for a, s in zip(self.args, self.sym.arg_sorts):
            if s != ANY and sort_of(a) != s:
                raise TermError(
                    f"argument {a} of {self.sym.name} has sort {sort_of(a)}, expected {s}")

    def __repr__(self) -> str:
        if not self.args:
            return self.sym.name
        return f"{self.sym.name}({', '.join(map(repr, self.args))})"


Term = Union[Var, App]


def sort_of(t: Term) -> Sort:
    return t.sort if isinstance(t, Var) else t.sym.res_sort


def root(t: Term) -> FunSym:
    if isinstance(t, Var):
        raise TermError(f"variable {t} has no root symbol")
    return t.sym


def is_value(t: Term) -> bool:
    return isinstance(t, App) and t.sym.is_value


def is_theory_term(t: Term) -> bool:
    """True iff t contains only theory symbols and variables."""
    if isinstance(t, Var):
        return True
    return t.sym.space == THEORY_SYMBOL and all(is_theory_term(a) for a in t.args)


def variables(t: Term) -> list[Var]:
    """Variables of t, left to right, without duplicates."""
    seen: dict[Var, None] = {}

    def walk(s: Term) -> None:
        if isinstance(s, Var):
            seen.setdefault(s)
        else:
            for a in s.args:
                walk(a)

    walk(t)
    return list(seen)


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)


def symbols_of(t: Term) -> set[FunSym]:
    return {s.sym for s in subterms(t) if isinstance(s, App)}


# ---------------------------------------------------------------------------
# Positions
# ---------------------------------------------------------------------------

Position = tuple[int, ...]


def subterm_at(t: Term, p: Position) -> Term:
    """The subterm of t at position p (1-based indices)."""
    for i in p:
        if isinstance(t, Var) or not 1 <= i <= len(t.args):
            raise TermError(f"invalid position {list(p)}")
        t = t.args[i - 1]
    return t


def replace_at(t: Term, p: Position, s: Term) -> Term:
    if not p:
        return s
    if isinstance(t, Var) or not 1 <= p[0] <= len(t.args):
        raise TermError(f"invalid position {list(p)}")
    i = p[0] - 1
    args = t.args[:i] + (replace_at(t.args[i], p[1:], s),) + t.args[i + 1:]
    return App(t.sym, args)


def positions(t: Term) -> list[Position]:
    """All positions of t in shortlex order (outermost first, left to right)."""
    out: list[Position] = []

    def walk(s: Term, here: Position) -> None:
        out.append(here)
        if isinstance(s, App):
            for i, a in enumerate(s.args, start=1):
                walk(a, here + (i,))

    walk(t, ())
    return sorted(out, key=lambda q: (len(q), q))


def positions_rooted_in(t: Term, syms: set[FunSym]) -> list[Position]:
    """Positions of subterms rooted by a symbol in syms, in a fixed total
    order (shorter positions first, then lexicographically)."""
    out = []
    for p in positions(t):
        s = subterm_at(t, p)
        if isinstance(s, App) and s.sym in syms:
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# Substitutions
# ---------------------------------------------------------------------------

class Substitution:
    """A finite, sort-preserving map from variables to terms."""

    def __init__(self, mapping: Optional[dict[Var, Term]] = None):
        self.mapping: dict[Var, Term] = {}
        if mapping:
            for v, t in mapping.items():
                self[v] = t

    def __setitem__(self, v: Var, t: Term) -> None:
        if v.sort != sort_of(t):
            raise TermError(f"binding {v}:{v.sort} to term of sort {sort_of(t)}")
        self.mapping[v] = t

    def __getitem__(self, v: Var) -> Term:
        return self.mapping[v]

    def __contains__(self, v: Var) -> bool:
        return v in self.mapping

    def get(self, v: Var, default: Optional[Term] = None) -> Optional[Term]:
        return self.mapping.get(v, default)

    def items(self):
        return self.mapping.items()

    def is_valuation(self) -> bool:
        return all(is_value(t) for t in self.mapping.values())

    def __repr__(self) -> str:
        inner = ", ".join(f"{v}->{t}" for v, t in self.mapping.items())
        return "{" + inner + "}"


def apply_substitution(t: Term, sigma: Substitution) -> Term:
    if isinstance(t, Var):
        s = sigma.get(t)
        return s if s is not None else t
    return App(t.sym, tuple(apply_substitution(a, sigma) for a in t.args))


def match(pattern: Term, t: Term, sigma: Optional[Substitution] = None) -> Optional[Substitution]:
    """Syntactic matching: a substitution with pattern*sigma == t, or None.

    Patterns are assumed left-linear except that an existing binding must
    agree with any repeated occurrence.
    """
    if sigma is None:
        sigma = Substitution()
    if isinstance(pattern, Var):
        bound = sigma.get(pattern)
        if bound is None:
            if pattern.sort != sort_of(t):
                return None
            sigma[pattern] = t
            return sigma
        return sigma if bound == t else None
    if isinstance(t, Var) or t.sym != pattern.sym:
        return None
    for p_arg, t_arg in zip(pattern.args, t.args):
        if match(p_arg, t_arg, sigma) is None:
            return None
    return sigma


# ---------------------------------------------------------------------------
# Signature
# ---------------------------------------------------------------------------

class Signature:
    """Interning table for function symbols.

    Construction happens in a single-threaded parsing phase; afterwards the
    signature is read-only.  The interning table itself is guarded so that
    lazy value-symbol creation from concurrent readers stays safe.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._symbols: dict[tuple, FunSym] = {}
        self._sharp: dict[FunSym, FunSym] = {}
        self._tuples: dict[int, FunSym] = {}
        self.sorts: dict[str, Sort] = {s.name: s for s in (INT, BOOL, LIST)}

    def declare_sort(self, name: str) -> Sort:
        with self._lock:
            if name not in self.sorts:
                self.sorts[name] = Sort(name, "user")
            return self.sorts[name]

    def declare(self, name: str, arg_sorts: tuple[Sort, ...], res_sort: Sort,
                space: str = TERM_SYMBOL) -> FunSym:
        key = ("f", name, arg_sorts, space)
        with self._lock:
            sym = self._symbols.get(key)
            if sym is None:
                sym = FunSym(name, arg_sorts, res_sort, space)
                self._symbols[key] = sym
            elif sym.res_sort != res_sort:
                raise TermError(f"conflicting declaration for {name}")
            return sym

    def lookup(self, name: str) -> Optional[FunSym]:
        with self._lock:
            for key, sym in self._symbols.items():
                if key[1] == name:
                    return sym
        return None

    # -- values ------------------------------------------------------------

    def int_value(self, n: int) -> App:
        key = ("v", "int", n)
        with self._lock:
            sym = self._symbols.get(key)
            if sym is None:
                sym = FunSym(str(n), (), INT, THEORY_SYMBOL, is_value=True, value=n)
                self._symbols[key] = sym
        return App(sym)

    def bool_value(self, b: bool) -> App:
        key = ("v", "bool", b)
        with self._lock:
            sym = self._symbols.get(key)
            if sym is None:
                sym = FunSym("true" if b else "false", (), BOOL, THEORY_SYMBOL,
                             is_value=True, value=b)
                self._symbols[key] = sym
        return App(sym)

    def list_value(self, xs: tuple[int, ...]) -> App:
        key = ("v", "list", xs)
        with self._lock:
            sym = self._symbols.get(key)
            if sym is None:
                name = "[" + ",".join(map(str, xs)) + "]"
                sym = FunSym(name, (), LIST, THEORY_SYMBOL, is_value=True, value=xs)
                self._symbols[key] = sym
        return App(sym)

    # -- marked symbols and tuple constructors ------------------------------

    def sharp(self, f: FunSym) -> FunSym:
        """The marked copy of a term symbol (same argument sorts, result sort
        tuple-elem).  Registration is idempotent."""
        if f.space != TERM_SYMBOL:
            raise TermError(f"cannot mark theory symbol {f.name}")
        if f.is_sharp:
            return f
        with self._lock:
            g = self._sharp.get(f)
            if g is None:
                g = FunSym(f.name + "#", f.arg_sorts, TUPLE_ELEM, TERM_SYMBOL,
                           is_sharp=True)
                self._sharp[f] = g
            return g

    def unsharp(self, f: FunSym) -> Optional[FunSym]:
        with self._lock:
            for orig, sh in self._sharp.items():
                if sh == f:
                    return orig
        return None

    def tuple_sym(self, k: int) -> FunSym:
        with self._lock:
            sym = self._tuples.get(k)
            if sym is None:
                sym = FunSym(f"<>{k}", (ANY,) * k, TUPLE_ELEM, TERM_SYMBOL)
                self._tuples[k] = sym
            return sym

    def is_tuple_sym(self, f: FunSym) -> bool:
        with self._lock:
            return f in self._tuples.values()


def sharp_term(sig: Signature, t: Term) -> App:
    """f(t1..tn) with f a term symbol becomes f#(t1..tn)."""
    if isinstance(t, Var):
        raise TermError("cannot mark a variable")
    if t.sym.space != TERM_SYMBOL:
        raise TermError(f"cannot mark theory-rooted term {t}")
    return App(sig.sharp(t.sym), t.args)


def make_tuple(sig: Signature, items: tuple[Term, ...]) -> App:
    return App(sig.tuple_sym(len(items)), items)
