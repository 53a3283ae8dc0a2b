"""Constrained rewrite systems, calculation steps, and innermost rewriting.

The bounded interpreter in this module is the testing oracle for derivation
heights: it explores every innermost derivation of a term up to a fuel
budget and reports the maximal number of rule steps (calculation steps are
free).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from .constraints import ConstraintError, ConstraintSolver, ground_eval, respects
from .terms import (
    App, BOOL, INT, LIST, Signature, Substitution, Term, TermError, Var,
    apply_substitution, is_theory_term, is_value, match, root, sort_of,
    variables,
)


class SystemError(Exception):
    pass


class FuelExhausted(Exception):
    """The oracle ran out of its step budget."""


class UnboundedNondeterminism(Exception):
    """A guard admits infinitely many instantiations of an unmatched
    variable, so exhaustive exploration is impossible."""


@dataclass(frozen=True)
class Rule:
    id: str
    lhs: App
    rhs: Term
    guard: Term

    def __post_init__(self) -> None:
        if isinstance(self.lhs, Var):
            raise SystemError("left-hand side must not be a variable")
        if self.lhs.sym.space != "term":
            raise SystemError("left-hand side must be rooted by a term symbol")
        seen: set[str] = set()
        for v in _var_occurrences(self.lhs):
            if v.name in seen:
                raise SystemError(f"rule {self.id} is not left-linear in {v.name}")
            seen.add(v.name)

    def __repr__(self) -> str:
        g = f" [{self.guard}]" if repr(self.guard) != "true" else ""
        return f"({self.id}) {self.lhs} -> {self.rhs}{g}"


def _var_occurrences(t: Term) -> Iterator[Var]:
    if isinstance(t, Var):
        yield t
    else:
        for a in t.args:
            yield from _var_occurrences(a)


@dataclass
class Lctrs:
    sig: Signature
    rules: list[Rule]
    initial_term: App
    initial_guard: Term

    def __post_init__(self) -> None:
        init = self.initial_term.sym
        for r in self.rules:
            for s in _subsyms(r.rhs):
                if s == init:
                    raise SystemError(
                        f"initial symbol {init.name} occurs in the right-hand side of {r.id}")

    @property
    def defined_symbols(self) -> set:
        return {r.lhs.sym for r in self.rules}

    def rules_for(self, sym) -> list[Rule]:
        return [r for r in self.rules if r.lhs.sym == sym]

    def input_vars(self) -> list[Var]:
        return variables(self.initial_term)


def _subsyms(t: Term):
    if isinstance(t, App):
        yield t.sym
        for a in t.args:
            yield from _subsyms(a)


def defined_symbols(system: Lctrs) -> set:
    return system.defined_symbols


def is_its(system: Lctrs) -> bool:
    """True iff every rule rewrites a variable-argument pattern to term
    symbols applied to integer theory terms (tuple constructors allowed for
    branching transitions)."""
    for r in system.rules:
        if not all(isinstance(a, Var) and a.sort == INT for a in r.lhs.args):
            return False
        rhss = r.rhs.args if isinstance(r.rhs, App) and system.sig.is_tuple_sym(r.rhs.sym) \
            else (r.rhs,)
        for t in rhss:
            if isinstance(t, Var) or t.sym.space != "term":
                return False
            if not all(is_theory_term(a) and sort_of(a) == INT for a in t.args):
                return False
    return True


# ---------------------------------------------------------------------------
# Calculation steps
# ---------------------------------------------------------------------------

def calc_normalize(t: Term, sig: Signature) -> Term:
    """Innermost-exhaustive evaluation of ground theory subterms."""
    if isinstance(t, Var):
        return t
    args = tuple(calc_normalize(a, sig) for a in t.args)
    t = App(t.sym, args)
    if t.sym.space == "theory" and not t.sym.is_value and all(is_value(a) for a in args):
        return ground_eval(t, sig)
    return t


# ---------------------------------------------------------------------------
# Innermost rule steps
# ---------------------------------------------------------------------------

def _solve_list_patterns(guard: Term, sigma: Substitution,
                         sig: Signature) -> Optional[Substitution]:
    """Propagate list equations ``xs = h::t`` / ``xs = []`` whose left side
    is already bound to a value, binding the pattern variables exactly.
    Returns None if a bound equation is unsatisfiable."""
    changed = True
    atoms = list(_conj_atoms(guard))
    while changed:
        changed = False
        for a in atoms:
            if not (isinstance(a, App) and a.sym.name == "=" and sort_of(a.args[0]) == LIST):
                continue
            for lhs, rhs in ((a.args[0], a.args[1]), (a.args[1], a.args[0])):
                li = apply_substitution(lhs, sigma)
                if not is_value(li):
                    continue
                xs = li.sym.value
                pat = apply_substitution(rhs, sigma)
                res = _match_list_pattern(pat, tuple(xs), sigma, sig)
                if res == "fail":
                    return None
                if res == "progress":
                    changed = True
    return sigma


def _match_list_pattern(pat: Term, xs: tuple, sigma: Substitution, sig: Signature) -> str:
    if isinstance(pat, Var):
        if pat in sigma:
            bound = sigma[pat]
            return "ok" if is_value(bound) and tuple(bound.sym.value) == xs else "fail"
        sigma[pat] = sig.list_value(xs)
        return "progress"
    if is_value(pat):
        return "ok" if tuple(pat.sym.value) == xs else "fail"
    if pat.sym.name == "::":
        if not xs:
            return "fail"
        h, t = pat.args
        r1 = _match_int_pattern(h, xs[0], sigma, sig)
        if r1 == "fail":
            return "fail"
        r2 = _match_list_pattern(t, xs[1:], sigma, sig)
        if r2 == "fail":
            return "fail"
        return "progress" if "progress" in (r1, r2) else "ok"
    return "ok"  # not a pattern we can decompose


def _match_int_pattern(pat: Term, n: int, sigma: Substitution, sig: Signature) -> str:
    if isinstance(pat, Var):
        if pat in sigma:
            bound = sigma[pat]
            return "ok" if is_value(bound) and bound.sym.value == n else "fail"
        sigma[pat] = sig.int_value(n)
        return "progress"
    if is_value(pat):
        return "ok" if pat.sym.value == n else "fail"
    return "ok"


def _conj_atoms(phi: Term) -> Iterator[Term]:
    if isinstance(phi, App) and phi.sym.name == "and":
        for a in phi.args:
            yield from _conj_atoms(a)
    else:
        yield phi


MODEL_ENUM_CAP = 16


def rule_matches(t: Term, rule: Rule, system: Lctrs,
                 solver: Optional[ConstraintSolver]) -> list[Substitution]:
    """All substitutions by which the rule applies to t at the root.

    Guard variables that are not bound by matching are instantiated by list
    pattern propagation and, for integers, by exhaustive solver model
    enumeration (raising UnboundedNondeterminism past the cap)."""
    sigma = match(rule.lhs, t)
    if sigma is None:
        return []
    sigma = _solve_list_patterns(rule.guard, sigma, system.sig)
    if sigma is None:
        return []
    free = [v for v in variables(rule.guard) if v not in sigma]
    if not free:
        return [sigma] if respects(sigma, rule.guard, system.sig) else []
    if solver is None:
        raise UnboundedNondeterminism(
            f"rule {rule.id}: no solver to instantiate {free}")
    inst = apply_substitution(rule.guard, sigma)
    models = solver.enumerate_models(inst, free, MODEL_ENUM_CAP)
    if models is None:
        raise UnboundedNondeterminism(
            f"rule {rule.id}: guard does not pin {', '.join(v.name for v in free)}")
    out = []
    for m in models:
        full = Substitution(dict(sigma.mapping))
        for v, val in m.items():
            full[v] = val
        if respects(full, rule.guard, system.sig):
            out.append(full)
    return out


def innermost_successors(t: Term, system: Lctrs,
                         solver: Optional[ConstraintSolver] = None) -> list[tuple[Rule, Term]]:
    """One-step innermost successors of a calc-normalized term, each
    returned calc-normalized."""
    if isinstance(t, Var):
        return []
    # innermost: search arguments first
    for i, a in enumerate(t.args):
        sub = innermost_successors(a, system, solver)
        if sub:
            out = []
            for rule, a2 in sub:
                args = t.args[:i] + (a2,) + t.args[i + 1:]
                out.append((rule, calc_normalize(App(t.sym, args), system.sig)))
            return out
    if t.sym.space != "term":
        return []
    out = []
    for rule in system.rules_for(t.sym):
        for sigma in rule_matches(t, rule, system, solver):
            reduct = calc_normalize(apply_substitution(rule.rhs, sigma), system.sig)
            out.append((rule, reduct))
    return out


# ---------------------------------------------------------------------------
# Derivation-height oracle
# ---------------------------------------------------------------------------

def derivation_height_sample(t: Term, system: Lctrs,
                             fuel: int,
                             solver: Optional[ConstraintSolver] = None) -> int:
    """The maximum number of innermost rule steps from t, by exhaustive
    search.  ``fuel`` bounds the total number of explored rule steps."""
    budget = [fuel]
    memo: dict[Term, int] = {}

    def best_height(s: Term) -> int:
        cached = memo.get(s)
        if cached is not None:
            return cached
        succs = innermost_successors(s, system, solver)
        best = 0
        for _, s2 in succs:
            if budget[0] <= 0:
                raise FuelExhausted()
            budget[0] -= 1
            best = max(best, 1 + best_height(s2))
        memo[s] = best
        return best

    return best_height(calc_normalize(t, system.sig))
