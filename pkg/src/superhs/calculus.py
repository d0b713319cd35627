"""Derivations and substitution on graded differential polynomials.

Provides the total derivatives ``dx`` and ``dt``, the odd superderivative
``superD`` (an odd derivation squaring to ``dx``), theta-expansion and Berezin
integration, jet substitution closed under prolongation, and first variations.

Conventions fixed here:

* theta is constant in both x and t;
* ``superD`` acts on a component field f as ``theta * f_x`` and on a
  superspace jet by raising its odd-derivative order, reducing ``D*D`` to a
  plain x-derivative;
* substitution rules may be keyed on any jet of a field; the rule then covers
  every higher jet by differentiating the right-hand side (prolongation).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Mapping, Tuple

from .algebra import (
    FieldSymbol,
    JetFactor,
    ParityError,
    SymExpr,
    TermKey,
    _sort_factors,
    theta_factor,
)


def _derive_terms(e: SymExpr, raise_jet) -> SymExpr:
    """Even derivation: Leibniz over factors, no graded signs."""
    acc: Dict[TermKey, Fraction] = {}
    for (lam, theta, factors), coeff in e._terms.items():
        for i, f in enumerate(factors):
            if f.symbol.constant:
                continue
            new = raise_jet(f)
            if new is None:
                continue
            cand = factors[:i] + (new,) + factors[i + 1 :]
            sorted_ = _sort_factors(cand)
            if sorted_ is None:
                continue
            sign, sf = sorted_
            key = (lam, theta, sf)
            cur = acc.get(key, Fraction(0)) + sign * coeff
            if cur:
                acc[key] = cur
            else:
                acc.pop(key, None)
    return SymExpr(acc, _internal=True)


def dx(e: SymExpr) -> SymExpr:
    """Total x-derivative."""
    return _derive_terms(e, lambda f: JetFactor(f.symbol, f.dx + 1, f.dt, f.dtheta))


def dt(e: SymExpr) -> SymExpr:
    """Total t-derivative."""
    return _derive_terms(e, lambda f: JetFactor(f.symbol, f.dx, f.dt + 1, f.dtheta))


def superD(e: SymExpr) -> SymExpr:
    """Odd superderivative with the graded Leibniz rule; superD(superD(e)) == dx(e).

    On a monomial ``theta**t * f1 * ... * fn`` each slot (the theta flag and
    every factor) is differentiated in place with the sign of the odd prefix:

    * ``D(theta) = 1``;
    * a superspace jet gains one odd derivative (``D`` order + 1);
    * a component field f contributes ``theta * f_x``; the freshly created
      theta moves to the front past the same prefix, so the two signs cancel
      and the term survives only when no theta was present.
    """
    acc: Dict[TermKey, Fraction] = {}

    def _add(key: TermKey, coeff: Fraction) -> None:
        sorted_ = _sort_factors(key[2])
        if sorted_ is None:
            return
        sign, sf = sorted_
        ckey = (key[0], key[1], sf)
        cur = acc.get(ckey, Fraction(0)) + sign * coeff
        if cur:
            acc[ckey] = cur
        else:
            acc.pop(ckey, None)

    for (lam, theta, factors), coeff in e._terms.items():
        if theta:
            # D(theta) = 1 with empty prefix
            _add((lam, 0, factors), coeff)
        prefix_parity = theta
        for i, f in enumerate(factors):
            if f.symbol.constant:
                prefix_parity ^= f.parity
                continue
            if f.symbol.superspace:
                if f.dtheta:
                    new = JetFactor(f.symbol, f.dx + 1, f.dt, 0)
                else:
                    new = JetFactor(f.symbol, f.dx, f.dt, 1)
                sign = -1 if prefix_parity else 1
                _add((lam, theta, factors[:i] + (new,) + factors[i + 1 :]), sign * coeff)
            else:
                # theta*f_x insertion: the Leibniz prefix sign and the sign of
                # moving theta to the front cancel; theta**2 = 0 kills the term
                if not theta:
                    new = JetFactor(f.symbol, f.dx + 1, f.dt, 0)
                    _add((lam, 1, factors[:i] + (new,) + factors[i + 1 :]), coeff)
            prefix_parity ^= f.parity
    return SymExpr(acc, _internal=True)


def theta_strip(e: SymExpr) -> Tuple[SymExpr, SymExpr]:
    """Split ``e = body + theta*soul`` and return ``(body, soul)``."""
    body: Dict[TermKey, Fraction] = {}
    soul: Dict[TermKey, Fraction] = {}
    for (lam, theta, factors), coeff in e._terms.items():
        if theta:
            soul[(lam, 0, factors)] = coeff
        else:
            body[(lam, 0, factors)] = coeff
    return SymExpr(body, _internal=True), SymExpr(soul, _internal=True)


@dataclass(frozen=True)
class SuperfieldExpr:
    """Theta-expansion of an expression: ``body + theta*soul``."""

    body: SymExpr
    soul: SymExpr

    def reconstruct(self) -> SymExpr:
        return self.body + theta_factor() * self.soul


def theta_expand(e: SymExpr) -> SuperfieldExpr:
    body, soul = theta_strip(e)
    return SuperfieldExpr(body, soul)


def berezin(e: SymExpr) -> SymExpr:
    """Berezin integration over theta: keep the theta coefficient."""
    return theta_strip(e)[1]


# ---------------------------------------------------------------------------
# substitution with automatic prolongation


class SubstitutionError(ValueError):
    pass


def _rule_parity_check(rules: Mapping[JetFactor, SymExpr]) -> None:
    for key, rhs in rules.items():
        p = rhs.parity()
        if not rhs.is_zero() and p is not None and p != key.parity:
            raise ParityError(
                f"substitution for {key} has parity {p}, expected {key.parity}"
            )
        if p is None:
            raise ParityError(f"substitution for {key} is not parity homogeneous")


def _applicable(factor: JetFactor, key: JetFactor) -> bool:
    if factor.symbol != key.symbol:
        return False
    if factor.dt < key.dt:
        return False
    if factor.symbol.superspace:
        return factor.d_order >= key.d_order
    return factor.dtheta == key.dtheta == 0 and factor.dx >= key.dx


def _prolong(rhs: SymExpr, key: JetFactor, factor: JetFactor,
             cache: Dict[Tuple[JetFactor, int, int], SymExpr]) -> SymExpr:
    if factor.symbol.superspace:
        steps = factor.d_order - key.d_order
    else:
        steps = factor.dx - key.dx
    dts = factor.dt - key.dt
    ck = (key, dts, steps)
    if ck in cache:
        return cache[ck]
    out = rhs
    for _ in range(dts):
        out = dt(out)
    if factor.symbol.superspace:
        for _ in range(steps):
            out = superD(out)
    else:
        for _ in range(steps):
            out = dx(out)
    cache[ck] = out
    return out


def substitute(
    e: SymExpr,
    rules: Mapping[JetFactor, SymExpr],
    max_rewrites: int = 200_000,
) -> SymExpr:
    """Rewrite jets by the given rules until no rule applies.

    A rule keyed on a jet covers all its higher jets by prolongation.  When
    several rules match one factor the most-derived key wins, which makes the
    result deterministic; for prolongation-consistent rule systems the choice
    does not matter.
    """
    _rule_parity_check(rules)
    keys = sorted(
        rules,
        key=lambda k: (k.dt, k.d_order if k.symbol.superspace else k.dx),
        reverse=True,
    )
    cache: Dict[Tuple[JetFactor, int, int], SymExpr] = {}
    acc: Dict[TermKey, Fraction] = {}
    work = [(key, coeff) for key, coeff in e._terms.items()]
    budget = max_rewrites
    while work:
        (lam, theta, factors), coeff = work.pop()
        hit = None
        for i, f in enumerate(factors):
            for key in keys:
                if _applicable(f, key):
                    hit = (i, key)
                    break
            if hit:
                break
        if hit is None:
            cur = acc.get((lam, theta, factors), Fraction(0)) + coeff
            if cur:
                acc[(lam, theta, factors)] = cur
            else:
                acc.pop((lam, theta, factors), None)
            continue
        budget -= 1
        if budget < 0:
            raise SubstitutionError("substitution did not terminate (rule cycle?)")
        i, key = hit
        repl = _prolong(rules[key], key, factors[i], cache)
        prefix = SymExpr.monomial(coeff, factors[:i], lam=lam, theta=theta)
        suffix = SymExpr.monomial(1, factors[i + 1 :])
        for k, c in (prefix * repl * suffix)._terms.items():
            work.append((k, c))
    return SymExpr(acc, _internal=True)


def first_variation(e: SymExpr, variations: Mapping[FieldSymbol, SymExpr]) -> SymExpr:
    """Linearise ``e`` along a field variation, replacing jets in place.

    The variation of a jet is the corresponding derivative of the variation of
    the base field; graded reordering signs are produced by canonicalisation
    of the spliced product.
    """
    for sym, delta in variations.items():
        p = delta.parity()
        if not delta.is_zero() and p is not None and p != sym.parity:
            raise ParityError(f"variation of {sym.name} has parity {p}")
    cache: Dict[JetFactor, SymExpr] = {}

    def _delta_jet(f: JetFactor) -> SymExpr:
        if f in cache:
            return cache[f]
        out = variations[f.symbol]
        for _ in range(f.dt):
            out = dt(out)
        if f.symbol.superspace:
            for _ in range(f.d_order):
                out = superD(out)
        else:
            for _ in range(f.dx):
                out = dx(out)
        cache[f] = out
        return out

    total = SymExpr.zero()
    for (lam, theta, factors), coeff in e._terms.items():
        for i, f in enumerate(factors):
            if f.symbol not in variations:
                continue
            prefix = SymExpr.monomial(coeff, factors[:i], lam=lam, theta=theta)
            suffix = SymExpr.monomial(1, factors[i + 1 :])
            total = total + prefix * _delta_jet(f) * suffix
    return total
