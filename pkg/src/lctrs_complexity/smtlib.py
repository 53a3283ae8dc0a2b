"""SMT-LIB v2 solving infrastructure.

Two interchangeable back ends sit behind one session interface:

* ``ExternalSession`` drives any conforming SMT-LIB v2 solver as a child
  process over standard input/output (``(set-logic ...)``,
  ``(declare-const ...)``, ``(assert ...)``, ``(check-sat)``,
  ``(get-model)``).
* ``InProcessSession`` runs the bundled decision procedure below, which
  accepts the same textual protocol.  ``solver_main`` exposes the bundled
  procedure as a stand-alone executable, so it can also be driven as a
  child process like any other solver.

The bundled procedure covers the fragment this package generates: boolean
combinations of linear integer/rational constraints with ``ite`` and
``abs``.  Satisfiability is decided by lazy DNF enumeration over an exact
rational simplex with branch-and-bound for integer variables.  All caps
degrade to ``unknown``, never to a wrong answer.
"""

from __future__ import annotations

import hashlib
import json
import os
import subprocess
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union


class SolverError(Exception):
    """Protocol violation or unavailable solver executable."""


# ---------------------------------------------------------------------------
# S-expressions
# ---------------------------------------------------------------------------

Sexp = Union[str, list]


def tokenize(text: str) -> Iterator[str]:
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield c
            i += 1
        elif c == "|":
            j = text.index("|", i + 1)
            yield text[i:j + 1]
            i = j + 1
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            yield text[i:j + 1]
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n();":
                j += 1
            yield text[i:j]
            i = j


def parse_sexps(text: str) -> list[Sexp]:
    stack: list[list] = [[]]
    for tok in tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            done = stack.pop()
            if not stack:
                raise SolverError("unbalanced parentheses")
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SolverError("unbalanced parentheses")
    return stack[0]


def sexp_to_str(s: Sexp) -> str:
    if isinstance(s, str):
        return s
    return "(" + " ".join(sexp_to_str(x) for x in s) + ")"


# ---------------------------------------------------------------------------
# Linear expressions: {None: constant, varname: coefficient}
# ---------------------------------------------------------------------------

Lin = dict


def lin_const(c) -> Lin:
    return {None: Fraction(c)}


def lin_var(name: str) -> Lin:
    return {None: Fraction(0), name: Fraction(1)}


def lin_add(a: Lin, b: Lin) -> Lin:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, Fraction(0)) + v
        if k is not None and out[k] == 0:
            del out[k]
    return out


def lin_scale(a: Lin, c: Fraction) -> Lin:
    if c == 0:
        return lin_const(0)
    return {k: v * c for k, v in a.items()}


def lin_neg(a: Lin) -> Lin:
    return lin_scale(a, Fraction(-1))


def lin_is_const(a: Lin) -> bool:
    return all(k is None for k, v in a.items() if v != 0 or k is None)


# ---------------------------------------------------------------------------
# Formula AST (after conversion from s-expressions)
#
#   ("and"|"or", [subs]) | ("not", sub) | ("atom", op, arith, arith)
#   | ("boolvar", name) | ("true",) | ("false",)
#
# Arithmetic stays a tree so that ite/abs can be lifted lazily:
#   ("lin", Lin) | ("ite", formula, arith, arith)
# ---------------------------------------------------------------------------

class _Converter:
    def __init__(self, sorts: dict[str, str]):
        self.sorts = sorts

    def formula(self, s: Sexp):
        if isinstance(s, str):
            if s == "true":
                return ("true",)
            if s == "false":
                return ("false",)
            if self.sorts.get(s) == "Bool":
                return ("boolvar", s)
            raise SolverError(f"not a formula: {s}")
        head = s[0]
        if head == "and":
            return ("and", [self.formula(x) for x in s[1:]])
        if head == "or":
            return ("or", [self.formula(x) for x in s[1:]])
        if head == "not":
            return ("not", self.formula(s[1]))
        if head == "=>":
            f = ("true",)
            for x in reversed(s[1:]):
                f = ("or", [("not", self.formula(x)), f]) if f != ("true",) else self.formula(x)
            return f
        if head == "ite":
            c = self.formula(s[1])
            return ("or", [("and", [c, self.formula(s[2])]),
                           ("and", [("not", c), self.formula(s[3])])])
        if head in ("<=", "<", ">=", ">"):
            return ("atom", head, self.arith(s[1]), self.arith(s[2]))
        if head == "=":
            a0 = s[1]
            if self._is_bool(a0):
                l, r = self.formula(s[1]), self.formula(s[2])
                return ("or", [("and", [l, r]), ("and", [("not", l), ("not", r)])])
            return ("atom", "=", self.arith(s[1]), self.arith(s[2]))
        if head == "distinct":
            return ("not", self.formula(["="] + s[1:]))
        raise SolverError(f"unsupported formula head: {head}")

    def _is_bool(self, s: Sexp) -> bool:
        if isinstance(s, str):
            return s in ("true", "false") or self.sorts.get(s) == "Bool"
        return s[0] in ("and", "or", "not", "=>", "<=", "<", ">=", ">", "=", "distinct")

    def arith(self, s: Sexp):
        if isinstance(s, str):
            if s.lstrip("-").isdigit():
                return ("lin", lin_const(int(s)))
            if self.sorts.get(s) in ("Int", "Real"):
                return ("lin", lin_var(s))
            raise SolverError(f"unknown arithmetic symbol: {s}")
        head = s[0]
        if head == "+":
            args = [self.arith(x) for x in s[1:]]
            return self._fold(args, lin_add)
        if head == "-":
            if len(s) == 2:
                return self._map1(self.arith(s[1]), lin_neg)
            acc = self.arith(s[1])
            for x in s[2:]:
                acc = self._fold([acc, self._map1(self.arith(x), lin_neg)], lin_add)
            return acc
        if head == "*":
            args = [self.arith(x) for x in s[1:]]
            acc = args[0]
            for b in args[1:]:
                acc = self._mul(acc, b)
            return acc
        if head == "ite":
            return ("ite", self.formula(s[1]), self.arith(s[2]), self.arith(s[3]))
        if head == "abs":
            a = self.arith(s[1])
            nonneg = ("atom", ">=", a, ("lin", lin_const(0)))
            return ("ite", nonneg, a, self._map1(a, lin_neg))
        if head == "/":
            num, den = self.arith(s[1]), self.arith(s[2])
            if num[0] == "lin" and den[0] == "lin" and lin_is_const(den[1]):
                d = den[1][None]
                if d == 0:
                    raise SolverError("division by zero")
                return ("lin", lin_scale(num[1], Fraction(1) / d))
            raise SolverError("non-constant division")
        raise SolverError(f"unsupported arithmetic head: {head}")

    def _fold(self, args, f):
        # Combine, pushing ite outwards.
        acc = args[0]
        for b in args[1:]:
            acc = self._comb(acc, b, f)
        return acc

    def _comb(self, a, b, f):
        if a[0] == "ite":
            return ("ite", a[1], self._comb(a[2], b, f), self._comb(a[3], b, f))
        if b[0] == "ite":
            return ("ite", b[1], self._comb(a, b[2], f), self._comb(a, b[3], f))
        return ("lin", f(a[1], b[1]))

    def _map1(self, a, f):
        if a[0] == "ite":
            return ("ite", a[1], self._map1(a[2], f), self._map1(a[3], f))
        return ("lin", f(a[1]))

    def _mul(self, a, b):
        if a[0] == "ite":
            return ("ite", a[1], self._mul(a[2], b), self._mul(a[3], b))
        if b[0] == "ite":
            return ("ite", b[1], self._mul(a, b[2]), self._mul(a, b[3]))
        la, lb = a[1], b[1]
        if lin_is_const(la):
            return ("lin", lin_scale(lb, la[None]))
        if lin_is_const(lb):
            return ("lin", lin_scale(la, lb[None]))
        raise SolverError("nonlinear multiplication")


# ---------------------------------------------------------------------------
# DNF enumeration
# ---------------------------------------------------------------------------

@dataclass
class Disjunct:
    # Linear constraints lin >= 0 over the variables.
    constraints: list = field(default_factory=list)
    bools: dict = field(default_factory=dict)

    def copy(self) -> "Disjunct":
        return Disjunct(list(self.constraints), dict(self.bools))


class _CapReached(Exception):
    pass


class _DnfWalker:
    """Lazy DNF of a conjunction of formulas, with ite-lifting inside atoms
    and integer tightening of strict comparisons."""

    def __init__(self, sorts: dict[str, str], leaf_cap: int, deadline: Optional[float]):
        self.sorts = sorts
        self.leaf_cap = leaf_cap
        self.leaves = 0
        self.deadline = deadline

    def enumerate(self, formulas: list) -> Iterator[Disjunct]:
        yield from self._conj(formulas, 0, Disjunct(), positive=True)

    # Each formula is processed under a polarity; `not` flips it.
    def _conj(self, fs: list, i: int, d: Disjunct, positive: bool) -> Iterator[Disjunct]:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _CapReached()
        if i == len(fs):
            self.leaves += 1
            if self.leaves > self.leaf_cap:
                raise _CapReached()
            yield d
            return
        for d2 in self._one(fs[i], d, positive):
            yield from self._conj(fs, i + 1, d2, positive)

    def _one(self, f, d: Disjunct, positive: bool) -> Iterator[Disjunct]:
        kind = f[0]
        if kind == "true":
            if positive:
                yield d
            return
        if kind == "false":
            if not positive:
                yield d
            return
        if kind == "not":
            yield from self._one(f[1], d, not positive)
            return
        if kind == "boolvar":
            name = f[1]
            want = positive
            if name in d.bools:
                if d.bools[name] == want:
                    yield d
                return
            d2 = d.copy()
            d2.bools[name] = want
            yield d2
            return
        if kind == "and":
            if positive:
                yield from self._conj(f[1], 0, d, True)
            else:
                for sub in f[1]:
                    yield from self._one(sub, d, False)
            return
        if kind == "or":
            if positive:
                for sub in f[1]:
                    yield from self._one(sub, d, True)
            else:
                yield from self._conj(f[1], 0, d, False)
            return
        if kind == "atom":
            yield from self._atom(f[1], f[2], f[3], d, positive)
            return
        raise SolverError(f"bad formula node {kind}")

    def _atom(self, op, a, b, d: Disjunct, positive: bool) -> Iterator[Disjunct]:
        # Lift ite out of either side first.
        if a[0] == "ite":
            yield from self._branch(a[1], ("atom", op, a[2], b), ("atom", op, a[3], b), d, positive)
            return
        if b[0] == "ite":
            yield from self._branch(b[1], ("atom", op, a, b[2]), ("atom", op, a, b[3]), d, positive)
            return
        la, lb = a[1], b[1]
        diff = lin_add(la, lin_neg(lb))  # a - b
        all_int = all(self.sorts.get(v, "Int") == "Int" for v in diff if v is not None) \
            and all(v.denominator == 1 for k, v in diff.items())
        one = Fraction(1)

        def emit(cs: list[Lin]) -> Iterator[Disjunct]:
            d2 = d.copy()
            for c in cs:
                if lin_is_const(c):
                    if c[None] < 0:
                        return
                else:
                    d2.constraints.append(c)
            yield d2

        if op == "=":
            if positive:
                yield from emit([dict(diff), lin_neg(diff)])
            else:
                # a != b: a - b >= 1 or b - a >= 1 (ints); non-strict split otherwise
                gap = one if all_int else Fraction(0)
                yield from emit([lin_add(diff, lin_const(-gap))])
                yield from emit([lin_add(lin_neg(diff), lin_const(-gap))])
            return
        # Normalize to e >= 0 form, with integer tightening for strictness.
        if op == ">=":
            e, strict = diff, False
        elif op == ">":
            e, strict = diff, True
        elif op == "<=":
            e, strict = lin_neg(diff), False
        else:  # "<"
            e, strict = lin_neg(diff), True
        if not positive:
            e, strict = lin_neg(e), not strict
        if strict:
            e = lin_add(e, lin_const(-1 if all_int else 0))
        yield from emit([e])

    def _branch(self, cond, f_then, f_else, d, positive) -> Iterator[Disjunct]:
        for d2 in self._one(cond, d, True):
            yield from self._one(f_then, d2, positive)
        for d2 in self._one(cond, d, False):
            yield from self._one(f_else, d2, positive)


# ---------------------------------------------------------------------------
# Exact simplex (phase-1 feasibility) and integer branch-and-bound
# ---------------------------------------------------------------------------

class _Simplex:
    """Feasibility of a system of constraints lin >= 0 over the rationals.

    Variables are unrestricted in sign and get split internally.  Phase-1
    artificial variables and Bland's rule guarantee termination.
    """

    def __init__(self, constraints: list[Lin]):
        self.vars: list[str] = sorted({v for c in constraints for v in c if v is not None})
        self.constraints = constraints

    def solve(self) -> Optional[dict[str, Fraction]]:
        idx = {v: i for i, v in enumerate(self.vars)}
        n = 2 * len(self.vars)  # x = pos - neg

        rows = []
        for c in self.constraints:
            # c >= 0  <=>  sum coeff*x - s = -const, s >= 0 (surplus)
            row = {}
            for v, co in c.items():
                if v is None:
                    continue
                row[2 * idx[v]] = row.get(2 * idx[v], Fraction(0)) + co
                row[2 * idx[v] + 1] = row.get(2 * idx[v] + 1, Fraction(0)) - co
            rhs = -c.get(None, Fraction(0))
            rows.append((row, rhs))

        ncols = n + len(rows)  # + surplus vars
        tableau = []
        rhs_col = []
        for i, (row, rhs) in enumerate(rows):
            r = dict(row)
            r[n + i] = Fraction(-1)  # surplus: expr - s = -const  ->  s >= 0
            if rhs < 0:
                r = {k: -v for k, v in r.items()}
                rhs = -rhs
            tableau.append(r)
            rhs_col.append(rhs)

        # Phase 1: artificial basis.
        nart = len(tableau)
        basis = [ncols + i for i in range(nart)]
        # objective: minimize sum of artificials = sum of (rhs - row.x)
        obj = {}
        obj_const = Fraction(0)
        for r, b in zip(tableau, rhs_col):
            obj_const += b
            for k, v in r.items():
                obj[k] = obj.get(k, Fraction(0)) - v

        def pivot(row_i: int, col_j: int) -> None:
            nonlocal obj_const
            r = tableau[row_i]
            piv = r[col_j]
            tableau[row_i] = {k: v / piv for k, v in r.items() if v != 0}
            rhs_col[row_i] = rhs_col[row_i] / piv
            prow, pb = tableau[row_i], rhs_col[row_i]
            for i2 in range(len(tableau)):
                if i2 == row_i:
                    continue
                r2 = tableau[i2]
                f = r2.get(col_j)
                if not f:
                    continue
                new = dict(r2)
                for k, v in prow.items():
                    nv = new.get(k, Fraction(0)) - f * v
                    if nv == 0:
                        new.pop(k, None)
                    else:
                        new[k] = nv
                new.pop(col_j, None)
                tableau[i2] = new
                rhs_col[i2] = rhs_col[i2] - f * pb
            f = obj.get(col_j)
            if f:
                for k, v in prow.items():
                    nv = obj.get(k, Fraction(0)) - f * v
                    if nv == 0:
                        obj.pop(k, None)
                    else:
                        obj[k] = nv
                obj.pop(col_j, None)
                obj_const += f * pb
            basis[row_i] = col_j

        guard = 0
        while True:
            guard += 1
            if guard > 20000:
                return None  # should not happen with Bland's rule
            entering = None
            for j in sorted(obj):
                if obj[j] < 0:
                    entering = j
                    break
            if entering is None:
                break
            leaving, best = None, None
            for i, r in enumerate(tableau):
                a = r.get(entering, Fraction(0))
                if a > 0:
                    ratio = rhs_col[i] / a
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leaving]):
                        best, leaving = ratio, i
            if leaving is None:
                break  # unbounded improvement cannot occur in phase 1
            pivot(leaving, entering)

        if obj_const != 0:
            return None  # infeasible

        values = {}
        for i, b in enumerate(basis):
            if b < ncols:
                values[b] = rhs_col[i]
        out = {}
        for v, i in idx.items():
            out[v] = values.get(2 * i, Fraction(0)) - values.get(2 * i + 1, Fraction(0))
        return out


def _feasible_int(constraints: list[Lin], int_vars: set[str],
                  budget: list[int]) -> Optional[dict[str, Fraction]]:
    """Rational feasibility refined by branch-and-bound on int_vars."""
    sol = _Simplex(constraints).solve()
    if sol is None:
        return None
    frac = None
    for v in sorted(sol):
        if v in int_vars and sol[v].denominator != 1:
            frac = v
            break
    if frac is None:
        return sol
    if budget[0] <= 0:
        raise _CapReached()
    budget[0] -= 1
    val = sol[frac]
    lo = val.numerator // val.denominator  # floor
    # x <= lo  <=>  lo - x >= 0
    left = constraints + [{None: Fraction(lo), frac: Fraction(-1)}]
    r = _feasible_int(left, int_vars, budget)
    if r is not None:
        return r
    right = constraints + [{None: Fraction(-(lo + 1)), frac: Fraction(1)}]
    return _feasible_int(right, int_vars, budget)


# ---------------------------------------------------------------------------
# Engine: an SMT-LIB v2 interpreter over the procedure above
# ---------------------------------------------------------------------------

class Engine:
    DNF_LEAF_CAP = 50000
    BB_BUDGET = 600

    def __init__(self) -> None:
        self.reset()

    def reset(self) -> None:
        self.sorts: dict[str, str] = {}
        self.frames: list[list] = [[]]
        self.last_model: Optional[dict] = None

    # -- command execution ---------------------------------------------------

    def execute(self, cmd: Sexp, deadline: Optional[float] = None) -> Optional[str]:
        if not isinstance(cmd, list) or not cmd:
            raise SolverError(f"bad command {cmd}")
        head = cmd[0]
        if head in ("set-logic", "set-option", "set-info"):
            return None
        if head in ("declare-const",):
            self.sorts[cmd[1]] = cmd[2] if isinstance(cmd[2], str) else "Int"
            return None
        if head == "declare-fun":
            if cmd[2] != []:
                raise SolverError("only constants supported")
            self.sorts[cmd[1]] = cmd[3] if isinstance(cmd[3], str) else "Int"
            return None
        if head == "assert":
            conv = _Converter(self.sorts)
            self.frames[-1].append(conv.formula(cmd[1]))
            return None
        if head == "push":
            n = int(cmd[1]) if len(cmd) > 1 else 1
            for _ in range(n):
                self.frames.append([])
            return None
        if head == "pop":
            n = int(cmd[1]) if len(cmd) > 1 else 1
            for _ in range(n):
                if len(self.frames) > 1:
                    self.frames.pop()
            return None
        if head == "reset":
            self.reset()
            return None
        if head == "reset-assertions":
            self.frames = [[]]
            return None
        if head == "check-sat":
            return self.check_sat(deadline)
        if head == "get-model":
            return self.model_text()
        if head == "echo":
            return cmd[1].strip('"') if len(cmd) > 1 else ""
        if head == "exit":
            return None
        raise SolverError(f"unsupported command {head}")

    def run_script(self, text: str, deadline: Optional[float] = None) -> list[str]:
        out = []
        for cmd in parse_sexps(text):
            r = self.execute(cmd, deadline)
            if r is not None:
                out.append(r)
        return out

    # -- solving ---------------------------------------------------------------

    def check_sat(self, deadline: Optional[float] = None) -> str:
        formulas = [f for frame in self.frames for f in frame]
        int_vars = {v for v, s in self.sorts.items() if s == "Int"}
        walker = _DnfWalker(self.sorts, self.DNF_LEAF_CAP, deadline)
        self.last_model = None
        hit_cap = False
        try:
            for d in walker.enumerate(formulas):
                try:
                    sol = _feasible_int(d.constraints, int_vars, [self.BB_BUDGET])
                except _CapReached:
                    hit_cap = True
                    continue
                if sol is not None:
                    model = {}
                    for v, s in self.sorts.items():
                        if s == "Bool":
                            model[v] = d.bools.get(v, False)
                        else:
                            model[v] = sol.get(v, Fraction(0))
                    self.last_model = model
                    return "sat"
        except _CapReached:
            return "unknown"
        return "unknown" if hit_cap else "unsat"

    def model_text(self) -> str:
        if self.last_model is None:
            raise SolverError("no model available")
        parts = []
        for v in sorted(self.last_model):
            val = self.last_model[v]
            if isinstance(val, bool):
                sort, txt = "Bool", ("true" if val else "false")
            else:
                sort = self.sorts.get(v, "Int")
                txt = _num_text(val)
            parts.append(f"(define-fun {v} () {sort} {txt})")
        return "(" + " ".join(parts) + ")"


def _num_text(val: Fraction) -> str:
    if val.denominator == 1:
        n = val.numerator
        return str(n) if n >= 0 else f"(- {-n})"
    sign = "" if val >= 0 else "-"
    a = abs(val)
    txt = f"(/ {a.numerator} {a.denominator})"
    return f"(- {txt})" if sign else txt


def parse_model_value(s: Sexp) -> object:
    if isinstance(s, str):
        if s == "true":
            return True
        if s == "false":
            return False
        if s.lstrip("-").isdigit():
            return Fraction(int(s))
        raise SolverError(f"bad model value {s}")
    if s[0] == "-":
        v = parse_model_value(s[1])
        return -v
    if s[0] == "/":
        return Fraction(parse_model_value(s[1]), parse_model_value(s[2]))
    raise SolverError(f"bad model value {s}")


def parse_model(text_or_sexp) -> dict[str, object]:
    """Parse a ``get-model`` response into {name: value}."""
    s = parse_sexps(text_or_sexp)[0] if isinstance(text_or_sexp, str) else text_or_sexp
    items = s
    if items and items[0] == "model":
        items = items[1:]
    out = {}
    for entry in items:
        if isinstance(entry, list) and entry and entry[0] == "define-fun":
            out[entry[1]] = parse_model_value(entry[4])
    return out


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------

@dataclass
class SmtAnswer:
    status: str  # "sat" | "unsat" | "unknown"
    model: Optional[dict[str, object]] = None
    reason: str = ""


class Session:
    """One solving session.

    A query script contains the logic line, declarations, and assertions;
    the session issues ``(check-sat)`` and, when asked, ``(get-model)``
    itself.
    """

    def solve(self, script: str, want_model: bool = False,
              timeout: Optional[float] = None) -> SmtAnswer:
        raise NotImplementedError

    def close(self) -> None:
        pass


class InProcessSession(Session):
    def __init__(self) -> None:
        self.engine = Engine()

    def solve(self, script: str, want_model: bool = False,
              timeout: Optional[float] = None) -> SmtAnswer:
        self.engine.reset()
        deadline = time.monotonic() + timeout if timeout else None
        try:
            for cmd in parse_sexps(script):
                self.engine.execute(cmd, deadline)
            status = self.engine.check_sat(deadline)
            model = None
            if status == "sat" and want_model:
                model = dict(self.engine.last_model)
            return SmtAnswer(status, model)
        except SolverError as e:
            return SmtAnswer("unknown", reason=str(e))


class ExternalSession(Session):
    """Child process speaking SMT-LIB v2 over stdin/stdout."""

    def __init__(self, path: str):
        self.path = path
        self.proc: Optional[subprocess.Popen] = None
        self._start()

    def _start(self) -> None:
        try:
            self.proc = subprocess.Popen(
                [self.path, "-in"] if os.path.basename(self.path).startswith("z3") else [self.path],
                stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True)
        except OSError as e:
            raise SolverError(f"cannot start solver {self.path}: {e}")
        self._send("(set-option :print-success false)\n")

    def _send(self, text: str) -> None:
        assert self.proc is not None and self.proc.stdin is not None
        try:
            self.proc.stdin.write(text)
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise SolverError(f"solver process died: {e}")

    def _read_line(self) -> str:
        assert self.proc is not None and self.proc.stdout is not None
        line = self.proc.stdout.readline()
        if line == "":
            raise SolverError("solver closed its output")
        return line.strip()

    def _read_sexp(self) -> str:
        # Read until parentheses balance.
        assert self.proc is not None and self.proc.stdout is not None
        buf = ""
        depth = 0
        started = False
        while True:
            ch = self.proc.stdout.read(1)
            if ch == "":
                raise SolverError("solver closed its output")
            buf += ch
            if ch == "(":
                depth += 1
                started = True
            elif ch == ")":
                depth -= 1
            if started and depth == 0:
                return buf

    def solve(self, script: str, want_model: bool = False,
              timeout: Optional[float] = None) -> SmtAnswer:
        if self.proc is None or self.proc.poll() is not None:
            self._start()
        try:
            self._send("(reset)\n(set-option :print-success false)\n")
            if timeout:
                self._send(f"(set-option :timeout {int(timeout * 1000)})\n")
            self._send(script)
            self._send("\n(check-sat)\n")
            status = self._read_line()
            for _ in range(64):
                if status.startswith(("sat", "unsat", "unknown")):
                    break
                status = self._read_line()  # skip blank lines and warnings
            else:
                raise SolverError(f"no check-sat answer, last reply {status!r}")
            model = None
            if status == "sat" and want_model:
                self._send("(get-model)\n")
                model = parse_model(self._read_sexp())
            if status not in ("sat", "unsat", "unknown"):
                return SmtAnswer("unknown", reason=f"odd reply {status!r}")
            return SmtAnswer(status, model)
        except SolverError as e:
            try:
                self.close()
            finally:
                self.proc = None
            return SmtAnswer("unknown", reason=str(e))

    def close(self) -> None:
        if self.proc is not None:
            try:
                self._send("(exit)\n")
            except SolverError:
                pass
            try:
                self.proc.terminate()
            except OSError:
                pass
            self.proc = None


class RecordingSession(Session):
    """Record every query/answer pair to a JSON file."""

    def __init__(self, inner: Session, path: str):
        self.inner = inner
        self.path = path
        self.log: dict[str, dict] = {}

    def solve(self, script: str, want_model: bool = False,
              timeout: Optional[float] = None) -> SmtAnswer:
        ans = self.inner.solve(script, want_model, timeout)
        key = _script_key(script, want_model)
        self.log[key] = {
            "status": ans.status,
            "model": None if ans.model is None else
            {k: (v if isinstance(v, bool) else str(v)) for k, v in ans.model.items()},
        }
        return ans

    def close(self) -> None:
        with open(self.path, "w") as fh:
            json.dump(self.log, fh, indent=1, sort_keys=True)
        self.inner.close()


class ReplaySession(Session):
    """Serve answers from a recorded session; unknown queries answer unknown."""

    def __init__(self, path: str):
        with open(path) as fh:
            self.log = json.load(fh)

    def solve(self, script: str, want_model: bool = False,
              timeout: Optional[float] = None) -> SmtAnswer:
        entry = self.log.get(_script_key(script, want_model))
        if entry is None:
            return SmtAnswer("unknown", reason="not recorded")
        model = entry["model"]
        if model is not None:
            model = {k: (v if isinstance(v, bool) else Fraction(v)) for k, v in model.items()}
        return SmtAnswer(entry["status"], model)


def _script_key(script: str, want_model: bool) -> str:
    h = hashlib.sha256()
    h.update(script.encode())
    h.update(b"#model" if want_model else b"")
    return h.hexdigest()


def make_session(smt_path: Optional[str] = None,
                 record: Optional[str] = None,
                 replay: Optional[str] = None) -> Session:
    if replay:
        return ReplaySession(replay)
    if smt_path is None:
        smt_path = os.environ.get("LCTRS_SMT") or None
    inner: Session = ExternalSession(smt_path) if smt_path else InProcessSession()
    if record:
        return RecordingSession(inner, record)
    return inner


# ---------------------------------------------------------------------------
# Stand-alone solver executable
# ---------------------------------------------------------------------------

def solver_main() -> int:
    """Run the bundled procedure as an SMT-LIB v2 child process."""
    engine = Engine()
    buf = ""
    depth = 0
    for line in sys.stdin:
        for ch in line:
            buf += ch
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth == 0:
                    try:
                        for cmd in parse_sexps(buf):
                            if cmd and cmd[0] == "exit":
                                return 0
                            r = engine.execute(cmd)
                            if r is not None:
                                print(r, flush=True)
                    except SolverError as e:
                        print(f'(error "{e}")', flush=True)
                    buf = ""
    return 0


if __name__ == "__main__":
    raise SystemExit(solver_main())
