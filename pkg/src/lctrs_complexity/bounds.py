"""The bound expression language.

Expressions are built from size variables ``|x|``, integer constants, the
infinite bound, sums, products, maxima, powers ``k^p``, quotients ``p/k``
and logarithms ``log_k(p)``.  Construction normalizes: sums and products
flatten and fold constants, the infinite bound absorbs every operation
except multiplication by zero.

Evaluation is exact.  Sums and products clamp at zero (the language has no
subtraction; negative constants can only pull a value down, and bounds are
upper bounds).  Logarithms and fractional powers round up to the next
integer so that evaluation stays in the rationals; this errs on the large
side, which is the safe direction for upper bounds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union


class _Omega:
    """The infinite bound."""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "?"


OMEGA_VALUE = _Omega()


@dataclass(frozen=True)
class SizeVar:
    name: str

    def __repr__(self) -> str:
        return f"|{self.name}|"


@dataclass(frozen=True)
class Const:
    value: Fraction

    def __repr__(self) -> str:
        if self.value.denominator == 1:
            return str(self.value.numerator)
        return f"div({self.value.numerator},{self.value.denominator})"


@dataclass(frozen=True)
class Omega:
    def __repr__(self) -> str:
        return "?"


@dataclass(frozen=True)
class Plus:
    args: tuple["BoundExpr", ...]

    def __repr__(self) -> str:
        return " + ".join(map(repr, self.args))


@dataclass(frozen=True)
class Times:
    args: tuple["BoundExpr", ...]

    def __repr__(self) -> str:
        def paren(a):
            return f"({a!r})" if isinstance(a, Plus) else repr(a)
        return "*".join(paren(a) for a in self.args)


@dataclass(frozen=True)
class Max:
    args: tuple["BoundExpr", ...]

    def __repr__(self) -> str:
        return f"max({', '.join(map(repr, self.args))})"


@dataclass(frozen=True)
class Pow:
    base: int
    exp: "BoundExpr"

    def __repr__(self) -> str:
        return f"pow({self.base},{self.exp!r})"


@dataclass(frozen=True)
class DivK:
    num: "BoundExpr"
    den: int

    def __repr__(self) -> str:
        return f"div({self.num!r},{self.den})"


@dataclass(frozen=True)
class LogK:
    base: int
    arg: "BoundExpr"

    def __repr__(self) -> str:
        return f"log({self.base},{self.arg!r})"


BoundExpr = Union[SizeVar, Const, Omega, Plus, Times, Max, Pow, DivK, LogK]

OMEGA = Omega()
ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def const(v) -> Const:
    return Const(Fraction(v))


def size(name: str) -> SizeVar:
    return SizeVar(name)


def is_omega(e: BoundExpr) -> bool:
    return isinstance(e, Omega)


def _sort_key(e: BoundExpr):
    return (type(e).__name__, repr(e))


# ---------------------------------------------------------------------------
# Smart constructors
# ---------------------------------------------------------------------------

def plus(*parts: BoundExpr) -> BoundExpr:
    flat: list[BoundExpr] = []
    c = Fraction(0)
    for p in parts:
        if isinstance(p, Plus):
            sub = p.args
        else:
            sub = (p,)
        for q in sub:
            if isinstance(q, Const):
                c += q.value
            elif isinstance(q, Omega):
                return OMEGA
            else:
                flat.append(q)
    # merge like terms: coefficient * core
    groups: dict = {}
    order: list = []
    for q in flat:
        coeff, core = _split_coeff(q)
        key = _sort_key(core)
        if key not in groups:
            groups[key] = (coeff, core)
            order.append(key)
        else:
            old, cr = groups[key]
            groups[key] = (old + coeff, cr)
    merged = []
    for key in sorted(order):
        coeff, core = groups[key]
        if coeff == 0:
            continue
        merged.append(times(Const(coeff), core) if coeff != 1 else core)
    if not merged:
        return Const(c)
    if c != 0:
        merged.append(Const(c))
    if len(merged) == 1:
        return merged[0]
    return Plus(tuple(merged))


def _split_coeff(e: BoundExpr) -> tuple[Fraction, BoundExpr]:
    if isinstance(e, Times):
        c = Fraction(1)
        rest = []
        for a in e.args:
            if isinstance(a, Const):
                c *= a.value
            else:
                rest.append(a)
        if not rest:
            return c, ONE
        return c, (rest[0] if len(rest) == 1 else Times(tuple(rest)))
    return Fraction(1), e


def times(*parts: BoundExpr) -> BoundExpr:
    flat: list[BoundExpr] = []
    c = Fraction(1)
    saw_omega = False
    for p in parts:
        sub = p.args if isinstance(p, Times) else (p,)
        for q in sub:
            if isinstance(q, Const):
                c *= q.value
            elif isinstance(q, Omega):
                saw_omega = True
            else:
                flat.append(q)
    if c == 0:
        return ZERO  # also absorbs the infinite bound
    if saw_omega:
        return OMEGA
    if not flat:
        return Const(c)
    flat.sort(key=_sort_key)
    if c != 1:
        flat = [Const(c)] + flat
    if len(flat) == 1:
        return flat[0]
    return Times(tuple(flat))


def _known_nonneg(e: BoundExpr) -> bool:
    if isinstance(e, Const):
        return e.value >= 0
    if isinstance(e, (SizeVar, Omega, LogK, Pow)):
        return True
    if isinstance(e, (Plus, Max, Times)):
        return all(_known_nonneg(a) for a in e.args)
    if isinstance(e, DivK):
        return _known_nonneg(e.num)
    return False


def max_of(*parts: BoundExpr) -> BoundExpr:
    flat: list[BoundExpr] = []
    cmax: Optional[Fraction] = None
    for p in parts:
        sub = p.args if isinstance(p, Max) else (p,)
        for q in sub:
            if isinstance(q, Omega):
                return OMEGA
            if isinstance(q, Const):
                cmax = q.value if cmax is None else max(cmax, q.value)
            elif q not in flat:
                flat.append(q)
    if cmax is not None:
        if not flat:
            return Const(cmax)
        if cmax > 0 or not all(_known_nonneg(f) for f in flat):
            flat.append(Const(cmax))
    if not flat:
        raise ValueError("empty max")
    flat.sort(key=_sort_key)
    if len(flat) == 1:
        return flat[0]
    return Max(tuple(flat))


def div_k(p: BoundExpr, k: int) -> BoundExpr:
    if k < 1:
        raise ValueError("division by a constant below one")
    if k == 1:
        return p
    if isinstance(p, Omega):
        return OMEGA
    if isinstance(p, Const):
        return Const(p.value / k)
    return DivK(p, k)


def log_k(k: int, p: BoundExpr) -> BoundExpr:
    if k < 2:
        raise ValueError("logarithm base below two")
    if isinstance(p, Omega):
        return OMEGA
    if isinstance(p, Const):
        return Const(Fraction(_ceil_log(k, p.value)))
    return LogK(k, p)


def pow_k(k: int, p: BoundExpr) -> BoundExpr:
    if isinstance(p, Omega):
        return OMEGA
    if isinstance(p, Const):
        return Const(Fraction(k) ** _ceil_frac(p.value))
    return Pow(k, p)


def _ceil_frac(v: Fraction) -> int:
    return -((-v.numerator) // v.denominator)


def _ceil_log(k: int, v: Fraction) -> int:
    """Smallest e >= 0 with k^e >= max(v, 1)."""
    v = max(v, Fraction(1))
    e, p = 0, Fraction(1)
    while p < v:
        p *= k
        e += 1
    return e


# ---------------------------------------------------------------------------
# Evaluation and substitution
# ---------------------------------------------------------------------------

Number = Union[Fraction, _Omega]


def evaluate(e: BoundExpr, env: dict[str, Number]) -> Number:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Omega):
        return OMEGA_VALUE
    if isinstance(e, SizeVar):
        v = env[e.name]
        return v if isinstance(v, _Omega) else Fraction(v)
    if isinstance(e, Plus):
        total = Fraction(0)
        for a in e.args:
            v = evaluate(a, env)
            if isinstance(v, _Omega):
                return OMEGA_VALUE
            total += v
        return max(total, Fraction(0))
    if isinstance(e, Times):
        total = Fraction(1)
        saw_omega = False
        for a in e.args:
            v = evaluate(a, env)
            if isinstance(v, _Omega):
                saw_omega = True
            else:
                total *= v
        if total == 0:
            return Fraction(0)
        if saw_omega:
            return OMEGA_VALUE
        return max(total, Fraction(0))
    if isinstance(e, Max):
        best: Number = Fraction(0)
        first = True
        for a in e.args:
            v = evaluate(a, env)
            if isinstance(v, _Omega):
                return OMEGA_VALUE
            best = v if first else max(best, v)
            first = False
        return best
    if isinstance(e, DivK):
        v = evaluate(e.num, env)
        return v if isinstance(v, _Omega) else v / e.den
    if isinstance(e, LogK):
        v = evaluate(e.arg, env)
        return v if isinstance(v, _Omega) else Fraction(_ceil_log(e.base, v))
    if isinstance(e, Pow):
        v = evaluate(e.exp, env)
        if isinstance(v, _Omega):
            return OMEGA_VALUE
        return Fraction(e.base) ** _ceil_frac(max(v, Fraction(0)))
    raise TypeError(f"not a bound expression: {e!r}")


def free_size_vars(e: BoundExpr) -> set[str]:
    if isinstance(e, SizeVar):
        return {e.name}
    if isinstance(e, (Plus, Times, Max)):
        out: set[str] = set()
        for a in e.args:
            out |= free_size_vars(a)
        return out
    if isinstance(e, DivK):
        return free_size_vars(e.num)
    if isinstance(e, LogK):
        return free_size_vars(e.arg)
    if isinstance(e, Pow):
        return free_size_vars(e.exp)
    return set()


def substitute_bounds(e: BoundExpr, theta: dict[str, BoundExpr]) -> BoundExpr:
    if isinstance(e, SizeVar):
        return theta.get(e.name, e)
    if isinstance(e, Plus):
        return plus(*(substitute_bounds(a, theta) for a in e.args))
    if isinstance(e, Times):
        return times(*(substitute_bounds(a, theta) for a in e.args))
    if isinstance(e, Max):
        return max_of(*(substitute_bounds(a, theta) for a in e.args))
    if isinstance(e, DivK):
        return div_k(substitute_bounds(e.num, theta), e.den)
    if isinstance(e, LogK):
        return log_k(e.base, substitute_bounds(e.arg, theta))
    if isinstance(e, Pow):
        return pow_k(e.base, substitute_bounds(e.exp, theta))
    return e


# ---------------------------------------------------------------------------
# Sound comparison
# ---------------------------------------------------------------------------

Monomial = tuple[str, ...]


def _poly(e: BoundExpr) -> Optional[dict[Monomial, Fraction]]:
    """Polynomial form with rational coefficients, or None."""
    if isinstance(e, Const):
        return {(): e.value}
    if isinstance(e, SizeVar):
        return {(e.name,): Fraction(1)}
    if isinstance(e, Plus):
        out: dict[Monomial, Fraction] = {}
        for a in e.args:
            p = _poly(a)
            if p is None:
                return None
            for m, c in p.items():
                out[m] = out.get(m, Fraction(0)) + c
        return out
    if isinstance(e, Times):
        out = {(): Fraction(1)}
        for a in e.args:
            p = _poly(a)
            if p is None:
                return None
            nxt: dict[Monomial, Fraction] = {}
            for m1, c1 in out.items():
                for m2, c2 in p.items():
                    m = tuple(sorted(m1 + m2))
                    nxt[m] = nxt.get(m, Fraction(0)) + c1 * c2
            out = nxt
        return out
    if isinstance(e, DivK):
        p = _poly(e.num)
        if p is None:
            return None
        return {m: c / e.den for m, c in p.items()}
    return None


def leq_bound(p: BoundExpr, q: BoundExpr) -> str:
    """'yes' only if p <= q pointwise over all nonnegative assignments.

    Sound and incomplete; returns 'unknown' when the fragment rules do not
    apply.
    """
    if p == q:
        return "yes"
    if isinstance(q, Omega):
        return "yes"
    if isinstance(p, Omega):
        return "unknown"
    if isinstance(p, Max):
        return "yes" if all(leq_bound(a, q) == "yes" for a in p.args) else "unknown"
    if isinstance(q, Max):
        if any(leq_bound(p, a) == "yes" for a in q.args):
            return "yes"
    pp, qq = _poly(p), _poly(q)
    if pp is not None and qq is not None:
        ok = True
        for m in set(pp) | set(qq):
            if qq.get(m, Fraction(0)) - pp.get(m, Fraction(0)) < 0:
                ok = False
                break
        if ok:
            return "yes"
        return "unknown"
    # monotone structural rules
    if isinstance(p, LogK):
        # ceil-log is dominated by its argument on nonnegative values
        if leq_bound(p.arg, q) == "yes":
            return "yes"
        if isinstance(q, LogK) and q.base <= p.base and leq_bound(p.arg, q.arg) == "yes":
            return "yes"
    if isinstance(p, DivK):
        if leq_bound(p.num, times(Const(Fraction(p.den)), q)) == "yes":
            return "yes"
    if isinstance(q, DivK):
        if leq_bound(times(Const(Fraction(q.den)), p), q.num) == "yes":
            return "yes"
    if isinstance(p, Pow) and isinstance(q, Pow) and p.base <= q.base:
        if leq_bound(p.exp, q.exp) == "yes":
            return "yes"
    if isinstance(p, Plus):
        # p1 + p2 <= q if the poly parts sum below q's poly part; handled
        # above.  Here only: every summand zero except one comparable.
        pass
    if isinstance(p, Times) and isinstance(q, Times):
        # compare factor-wise when aligned
        if len(p.args) == len(q.args):
            if all(leq_bound(a, b) == "yes" for a, b in zip(p.args, q.args)) \
                    and all(_known_nonneg(a) for a in p.args):
                return "yes"
    return "unknown"


# ---------------------------------------------------------------------------
# Asymptotic classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticClass:
    kind: str  # "const" | "log" | "poly" | "polylog" | "exp" | "unknown"
    poly_deg: int = 0
    log_deg: int = 0

    def order_key(self) -> tuple:
        if self.kind == "unknown":
            return (3, 0, 0)
        if self.kind == "exp":
            return (2, 0, 0)
        if self.kind == "log":
            return (1, 0, max(self.log_deg, 1))
        return (1, self.poly_deg, self.log_deg)

    def __le__(self, other: "AsymptoticClass") -> bool:
        return self.order_key() <= other.order_key()

    def __lt__(self, other: "AsymptoticClass") -> bool:
        return self.order_key() < other.order_key()

    def render(self) -> str:
        if self.kind == "unknown":
            return "MAYBE"
        if self.kind == "exp":
            return "EXP"
        if self.kind == "const":
            return "O(1)"
        if self.kind == "log":
            return "O(log(n))"
        d, e = self.poly_deg, self.log_deg
        if e == 0:
            return f"O(n^{d})"
        if d == 1 and e == 1:
            return "O(n*log(n))"
        return f"O(n^{d}*log(n)^{e})"

    def __repr__(self) -> str:
        return self.render()


CONST_CLASS = AsymptoticClass("const")
UNKNOWN_CLASS = AsymptoticClass("unknown")
EXP_CLASS = AsymptoticClass("exp")


def _growth(e: BoundExpr) -> Optional[tuple[int, int]]:
    """(poly degree, log degree) as all size variables grow uniformly;
    None encodes exponential."""
    if isinstance(e, (Const,)):
        return (0, 0)
    if isinstance(e, SizeVar):
        return (1, 0)
    if isinstance(e, (Plus, Max)):
        best = (0, 0)
        for a in e.args:
            g = _growth(a)
            if g is None:
                return None
            best = max(best, g)
        return best
    if isinstance(e, Times):
        d, l = 0, 0
        for a in e.args:
            g = _growth(a)
            if g is None:
                return None
            d, l = d + g[0], l + g[1]
        return (d, l)
    if isinstance(e, DivK):
        return _growth(e.num)
    if isinstance(e, LogK):
        g = _growth(e.arg)
        if g is None:
            return None
        if g == (0, 0):
            return (0, 0)
        return (0, 1)
    if isinstance(e, Pow):
        g = _growth(e.exp)
        if g is None or g != (0, 0):
            return None
        return (0, 0)
    raise TypeError(f"not a bound expression: {e!r}")


def asymptotic_class(e: BoundExpr) -> AsymptoticClass:
    if isinstance(e, Omega) or free_size_vars(e) and _contains_omega(e):
        return UNKNOWN_CLASS
    if _contains_omega(e):
        return UNKNOWN_CLASS
    g = _growth(e)
    if g is None:
        return EXP_CLASS
    d, l = g
    if d == 0 and l == 0:
        return CONST_CLASS
    if d == 0:
        return AsymptoticClass("log", 0, l)
    if l == 0:
        return AsymptoticClass("poly", d, 0)
    return AsymptoticClass("polylog", d, l)


def _contains_omega(e: BoundExpr) -> bool:
    if isinstance(e, Omega):
        return True
    if isinstance(e, (Plus, Times, Max)):
        return any(_contains_omega(a) for a in e.args)
    if isinstance(e, DivK):
        return _contains_omega(e.num)
    if isinstance(e, LogK):
        return _contains_omega(e.arg)
    if isinstance(e, Pow):
        return _contains_omega(e.exp)
    return False
