"""Independent brute-force oracles shared across test modules.

These deliberately re-derive results by exhaustive enumeration so the
engine's optimized paths can be checked against them.
"""

from __future__ import annotations

import itertools
import random

from cxgram.predicates import Bindings, Predicate, PredicateSet, Term


def brute_force_match(pattern: PredicateSet, target: PredicateSet, seed: Bindings | None = None):
    """Enumerate every injective pattern->target assignment and keep the
    consistent ones.  Returns the set of binding maps as frozensets of
    (var, term) pairs."""
    seed = seed or Bindings.empty()
    pats = list(pattern.elements)
    targets = list(target.elements)
    solutions = set()
    if len(pats) > len(targets):
        return solutions
    for perm in itertools.permutations(range(len(targets)), len(pats)):
        mapping = {k.symbol: v for k, v in dict(seed.items()).items()}
        ok = True
        for pi, tj in zip(range(len(pats)), perm):
            pat, tgt = pats[pi], targets[tj]
            if pat.name != tgt.name or pat.arity != tgt.arity:
                ok = False
                break
            for pa, ta in zip(pat.args, tgt.args):
                if pa.is_variable:
                    if pa.symbol in mapping:
                        if mapping[pa.symbol] != ta:
                            ok = False
                            break
                    elif ta.is_variable and ta.symbol in mapping:
                        # target term equals a bound key: not a resolved map
                        ok = False
                        break
                    else:
                        mapping[pa.symbol] = ta
                elif pa != ta:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            solutions.add(frozenset((k, v) for k, v in mapping.items()))
    return solutions


def bindings_as_sets(results):
    return {frozenset((k.symbol, v) for k, v in b.items()) for b in results}


def brute_force_renaming_equal(a: PredicateSet, b: PredicateSet) -> bool:
    """Try every bijection between the variable sets of a and b."""
    if len(a) != len(b):
        return False
    vars_a = list(a.variables())
    vars_b = list(b.variables())
    if len(vars_a) != len(vars_b):
        return False
    for perm in itertools.permutations(vars_b):
        mapping = Bindings(dict(zip(vars_a, perm)))
        renamed = PredicateSet(
            Predicate(p.name, tuple(mapping.apply(t) for t in p.args)) for p in a.elements
        )
        if renamed == b:
            return True
    return False


def random_predicate_set(rng: random.Random, n_preds: int, var_pool, const_pool, names=("p", "q", "r")) -> PredicateSet:
    preds = []
    for _ in range(n_preds):
        name = rng.choice(names)
        arity = rng.randint(1, 3)
        args = []
        for _ in range(arity):
            if rng.random() < 0.5:
                args.append(Term.var(rng.choice(var_pool)))
            else:
                args.append(Term.const(rng.choice(const_pool)))
        preds.append(Predicate(name, tuple(args)))
    return PredicateSet(preds)
