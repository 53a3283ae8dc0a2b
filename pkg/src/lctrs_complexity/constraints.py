"""Constraints and their decision procedures.

A constraint is a theory term of sort bool.  Queries are discharged over an
SMT session (bundled or external, see :mod:`lctrs_complexity.smtlib`) with a
per-run cache.  Integer and boolean reasoning is exact; list reasoning goes
through a length abstraction (``xs = h::t`` contributes
``len(xs) = len(t) + 1``), which keeps all "yes"/"unsat" answers sound:

* positive occurrences of list atoms are weakened, so satisfiable concrete
  constraints stay satisfiable in the abstraction;
* a list atom under negative polarity cannot be abstracted soundly, so such
  queries answer "unknown".

Sizes are measured by absolute value on integers and by length on lists.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

from .smtlib import Session, SmtAnswer, _script_key
from .terms import (
    App, BOOL, INT, LIST, Signature, Substitution, Term, TermError, Var,
    is_theory_term, is_value, sort_of, variables,
)


class ConstraintError(Exception):
    pass


# ---------------------------------------------------------------------------
# Ground evaluation (the fixed semantics of theory symbols)
# ---------------------------------------------------------------------------

_INT_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
}
_CMP_OPS = {
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


def ground_eval(t: Term, sig: Signature) -> App:
    """Evaluate a ground theory term to its value symbol."""
    if isinstance(t, Var):
        raise ConstraintError(f"term {t} is not ground")
    sym = t.sym
    if sym.is_value:
        return t
    args = [ground_eval(a, sig) for a in t.args]
    vals = [a.sym.value for a in args]
    name = sym.name
    if name in _INT_OPS:
        return sig.int_value(_INT_OPS[name](vals[0], vals[1]))
    if name in _CMP_OPS:
        return sig.bool_value(_CMP_OPS[name](vals[0], vals[1]))
    if name == "-u":
        return sig.int_value(-vals[0])
    if name == "=":
        return sig.bool_value(vals[0] == vals[1])
    if name == "and":
        return sig.bool_value(all(vals))
    if name == "or":
        return sig.bool_value(any(vals))
    if name == "not":
        return sig.bool_value(not vals[0])
    if name == "::":
        return sig.list_value((vals[0],) + tuple(vals[1]))
    raise ConstraintError(f"no interpretation for theory symbol {name}")


def value_of(t: Term) -> object:
    if not is_value(t):
        raise ConstraintError(f"{t} is not a value")
    return t.sym.value


# ---------------------------------------------------------------------------
# Translation to SMT-LIB
# ---------------------------------------------------------------------------

class SmtNames:
    """Stable SMT names for term variables plus extra query variables."""

    def __init__(self, prefix: str = "v"):
        self.prefix = prefix
        self._names: dict[Var, str] = {}
        self.int_decls: list[str] = []
        self.real_decls: list[str] = []
        self._fresh = 0

    def of(self, v: Var) -> str:
        name = self._names.get(v)
        if name is None:
            name = f"{self.prefix}{len(self._names)}_{_sanitize(v.name)}"
            self._names[v] = name
            if v.sort == LIST:
                # only the length of a list variable is represented
                self.int_decls.append(name)
            elif v.sort == BOOL:
                raise ConstraintError("bool variables are not supported in queries")
            else:
                self.int_decls.append(name)
        return name

    def fresh_int(self, hint: str = "k") -> str:
        self._fresh += 1
        name = f"{self.prefix}_{hint}{self._fresh}"
        self.int_decls.append(name)
        return name

    def fresh_real(self, hint: str = "r") -> str:
        self._fresh += 1
        name = f"{self.prefix}_{hint}{self._fresh}"
        self.real_decls.append(name)
        return name

    def known_vars(self) -> list[Var]:
        return list(self._names)

    def declarations(self) -> str:
        out = [f"(declare-const {n} Int)" for n in self.int_decls]
        out += [f"(declare-const {n} Real)" for n in self.real_decls]
        return "\n".join(out)


def _sanitize(name: str) -> str:
    return "".join(c if c.isalnum() or c == "_" else "_" for c in name)


def term_to_smt(t: Term, names: SmtNames) -> str:
    """Translate an int- or list-sorted theory term.  List terms translate
    to their length."""
    if isinstance(t, Var):
        return names.of(t)
    sym = t.sym
    if sym.is_value:
        if sort_of(t) == INT:
            n = sym.value
            return str(n) if n >= 0 else f"(- {-n})"
        if sort_of(t) == LIST:
            return str(len(sym.value))
        raise ConstraintError(f"unexpected value {t} in arithmetic position")
    if sym.name in ("+", "-", "*"):
        a = term_to_smt(t.args[0], names)
        b = term_to_smt(t.args[1], names)
        return f"({sym.name} {a} {b})"
    if sym.name == "-u":
        return f"(- {term_to_smt(t.args[0], names)})"
    if sym.name == "::":
        return f"(+ 1 {term_to_smt(t.args[1], names)})"
    raise ConstraintError(f"cannot translate theory term rooted at {sym.name}")


def formula_to_smt(phi: Term, names: SmtNames, positive: bool = True) -> str:
    """Translate a constraint.  Raises on list atoms in negative polarity."""
    if isinstance(phi, Var):
        raise ConstraintError("free boolean variables are not supported")
    sym = phi.sym
    name = sym.name
    if sym.is_value:
        return "true" if sym.value else "false"
    if name == "and":
        parts = [formula_to_smt(a, names, positive) for a in phi.args]
        return f"(and {' '.join(parts)})"
    if name == "or":
        parts = [formula_to_smt(a, names, positive) for a in phi.args]
        return f"(or {' '.join(parts)})"
    if name == "not":
        return f"(not {formula_to_smt(phi.args[0], names, not positive)})"
    if name in ("<=", "<", ">=", ">"):
        a = term_to_smt(phi.args[0], names)
        b = term_to_smt(phi.args[1], names)
        return f"({name} {a} {b})"
    if name == "=":
        if sort_of(phi.args[0]) == LIST and not positive:
            raise ConstraintError("list equality under negation")
        a = term_to_smt(phi.args[0], names)
        b = term_to_smt(phi.args[1], names)
        eq = f"(= {a} {b})"
        if sort_of(phi.args[0]) == LIST:
            # lengths of lists are nonnegative; the equation itself only
            # relates lengths (abstraction)
            return eq
        return eq
    raise ConstraintError(f"cannot translate constraint rooted at {name}")


def list_length_floors(phi: Term, names: SmtNames) -> list[str]:
    """Nonnegativity of the lengths of all list variables in phi."""
    out = []
    for v in variables(phi):
        if v.sort == LIST:
            out.append(f"(>= {names.of(v)} 0)")
    return out


def measure_smt(t: Term, names: SmtNames) -> str:
    """The size measure of a theory term: absolute value for integers,
    length for lists."""
    if sort_of(t) == LIST:
        return term_to_smt(t, names)
    return f"(abs {term_to_smt(t, names)})"


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass
class SolverResult:
    status: str  # "sat" | "unsat" | "unknown"
    model: Optional[Substitution] = None
    reason: str = ""

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"


# ---------------------------------------------------------------------------
# The solver facade
# ---------------------------------------------------------------------------

class ConstraintSolver:
    """Caching facade over one SMT session.

    One instance per analysis thread; the cache may be shared through the
    session layer but each facade owns its session exclusively.
    """

    def __init__(self, session: Session, sig: Signature,
                 timeout: float = 2.0, debug_check_models: bool = False):
        self.session = session
        self.sig = sig
        self.timeout = timeout
        self.debug_check_models = debug_check_models
        self._cache: dict[str, SmtAnswer] = {}
        self.stats = {"queries": 0, "cache_hits": 0}

    # -- raw interface -------------------------------------------------------

    def solve_raw(self, script: str, want_model: bool = False) -> SmtAnswer:
        key = _script_key(script, want_model)
        hit = self._cache.get(key)
        if hit is not None:
            self.stats["cache_hits"] += 1
            return hit
        self.stats["queries"] += 1
        ans = self.session.solve(script, want_model, timeout=self.timeout)
        self._cache[key] = ans
        return ans

    def check_exprs(self, names: SmtNames, assertions: Iterable[str],
                    want_model: bool = False, logic: str = "QF_LIA") -> SmtAnswer:
        lines = [f"(set-logic {logic})", names.declarations()]
        lines += [f"(assert {a})" for a in assertions]
        return self.solve_raw("\n".join(lines), want_model)

    def entailed(self, names: SmtNames, hypotheses: list[str], conclusion: str) -> str:
        """'yes' iff the hypotheses entail the conclusion; 'no' iff refuted;
        'unknown' otherwise."""
        ans = self.check_exprs(names, hypotheses + [f"(not {conclusion})"])
        if ans.status == "unsat":
            return "yes"
        if ans.status == "sat":
            return "no"
        return "unknown"

    # -- constraint-level interface -------------------------------------------

    def check_sat(self, phi: Term) -> SolverResult:
        names = SmtNames()
        try:
            smt = formula_to_smt(phi, names)
        except ConstraintError as e:
            return SolverResult("unknown", reason=str(e))
        floors = list_length_floors(phi, names)
        ans = self.check_exprs(names, floors + [smt], want_model=True)
        if ans.status != "sat":
            return SolverResult(ans.status, reason=ans.reason)
        model = self._model_to_valuation(phi, names, ans.model or {})
        if model is not None and self.debug_check_models:
            if not any(v.sort == LIST for v in variables(phi)):
                assert respects(model, phi, self.sig), \
                    f"model {model} does not respect {phi}"
        return SolverResult("sat", model)

    def entails(self, psi: Term, phi: Term) -> str:
        names = SmtNames()
        try:
            hyp = formula_to_smt(psi, names)
            # phi occurs under a negation
            concl = formula_to_smt(phi, names, positive=False)
        except ConstraintError:
            return "unknown"
        floors = list_length_floors(psi, names) + list_length_floors(phi, names)
        return self.entailed(names, floors + [hyp], concl)

    def enumerate_models(self, phi: Term, over: list[Var],
                         limit: int) -> Optional[list[Substitution]]:
        """All satisfying valuations of phi restricted to ``over``.

        Returns None when more than ``limit`` distinct valuations exist or
        when the solver cannot decide (unbounded nondeterminism for the
        rewriting oracle).  Only integer variables are supported.
        """
        if any(v.sort != INT for v in over):
            return None
        names = SmtNames()
        try:
            smt = formula_to_smt(phi, names)
        except ConstraintError:
            return None
        blocking: list[str] = []
        found: list[Substitution] = []
        for _ in range(limit + 1):
            ans = self.check_exprs(names, [smt] + blocking, want_model=True)
            if ans.status == "unsat":
                return found
            if ans.status != "sat":
                return None
            model = ans.model or {}
            sigma = Substitution()
            parts = []
            for v in over:
                n = names.of(v)
                val = model.get(n, Fraction(0))
                iv = int(val)
                sigma[v] = self.sig.int_value(iv)
                parts.append(f"(= {n} {iv if iv >= 0 else f'(- {-iv})'})")
            found.append(sigma)
            blocking.append(f"(not (and {' '.join(parts)}))")
        return None

    # -- helpers ---------------------------------------------------------------

    def _model_to_valuation(self, phi: Term, names: SmtNames,
                            model: dict) -> Optional[Substitution]:
        sigma = Substitution()
        for v in variables(phi):
            n = names.of(v)
            val = model.get(n, Fraction(0))
            if v.sort == INT:
                sigma[v] = self.sig.int_value(int(val))
            elif v.sort == LIST:
                # only the length is known; realize it with zeros
                sigma[v] = self.sig.list_value((0,) * max(0, int(val)))
            else:
                return None
        return sigma

    def close(self) -> None:
        self.session.close()


def respects(sigma: Substitution, phi: Term, sig: Signature) -> bool:
    """True iff sigma maps every variable of phi to a value and the
    instantiated constraint evaluates to true."""
    from .terms import apply_substitution
    for v in variables(phi):
        t = sigma.get(v)
        if t is None or not is_value(t):
            return False
    inst = apply_substitution(phi, sigma)
    try:
        return bool(value_of(ground_eval(inst, sig)))
    except ConstraintError:
        return False
