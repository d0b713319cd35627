"""Densities modulo total derivatives and variational calculus.

A ``Density`` is an integrand considered up to total x-derivatives (measure
``dx``) or up to the combination killed by a Berezin integral followed by the
x-integral (measure ``dx dtheta``).

Exactness is decided by the variational criterion: a differential polynomial
with no field-free part is a total x-derivative iff the Euler operator of
every field annihilates it.  The odd variational derivative follows the
convention in which the gradient multiplies the variation from the left,
``delta F = integral (dF/df) * df``; operationally that is the right partial
derivative (the factor is commuted to the right end of the monomial before
being stripped).  This is the convention under which the
gradients of the quadratic and cubic invariants take their standard closed
forms, and it is pinned
by tests before any dependent check runs.

``canonical_density`` computes a genuine normal form: within each finite
sector (fixed field content, theta flag, lam power and total x-order) the
subspace of exact terms is spanned by derivatives of the one-lower sector, and
the integrand is reduced against that span by exact Gaussian elimination.
Monomials concentrating derivatives on few factors are eliminated first, so
one integration by parts sends ``u*u_xx`` to ``-u_x**2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from .algebra import ODD, FieldSymbol, JetFactor, SymExpr, TermKey, _sort_factors
from .calculus import berezin, dx, dt


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class Density:
    """An equivalence class representative of an integrand."""

    integrand: SymExpr
    measure: str = "dx"

    def __post_init__(self):
        if self.measure not in ("dx", "dx_dtheta"):
            raise MeasureError(f"unknown measure {self.measure!r}")


# ---------------------------------------------------------------------------
# partial and Euler derivatives


def partial_jet(e: SymExpr, jet: JetFactor) -> SymExpr:
    """Right partial derivative with respect to one jet coordinate.

    For an odd jet the factor is moved to the right end of the monomial (one
    sign flip per odd factor passed) and stripped.
    """
    acc: Dict[TermKey, Fraction] = {}
    for (lam, theta, factors), coeff in e._terms.items():
        for i, f in enumerate(factors):
            if f != jet:
                continue
            sign = 1
            if f.parity:
                suffix_parity = sum(g.parity for g in factors[i + 1 :]) % 2
                if suffix_parity:
                    sign = -1
            key = (lam, theta, factors[:i] + factors[i + 1 :])
            cur = acc.get(key, Fraction(0)) + sign * coeff
            if cur:
                acc[key] = cur
            else:
                acc.pop(key, None)
    return SymExpr(acc, _internal=True)


def _check_component_only(e: SymExpr) -> None:
    for f in e.jet_factors():
        if f.symbol.superspace:
            raise ValueError(f"superspace jet {f} not supported in variational calculus")


def euler_x(e: SymExpr, field: FieldSymbol, dt_order: int = 0) -> SymExpr:
    """Euler operator in x only: sum_k (-d/dx)**k of d/d(field_(t**j x**k)).

    Jets of the same field with a different t-order are treated as independent
    fields; pass ``dt_order`` to select which one to vary.
    """
    _check_component_only(e)
    if field.constant:
        raise ValueError("constants are coefficients, not variational fields")
    max_k = max(
        (f.dx for f in e.jet_factors() if f.symbol == field and f.dt == dt_order),
        default=-1,
    )
    total = SymExpr.zero()
    for k in range(max_k + 1):
        term = partial_jet(e, JetFactor(field, dx=k, dt=dt_order))
        for _ in range(k):
            term = dx(term)
        total = total + (term if k % 2 == 0 else -term)
    return total


def euler_xt(e: SymExpr, field: FieldSymbol) -> SymExpr:
    """Space-time Euler operator: sum over all (t, x) jet orders of the field."""
    _check_component_only(e)
    if field.constant:
        raise ValueError("constants are coefficients, not variational fields")
    orders = {(f.dt, f.dx) for f in e.jet_factors() if f.symbol == field}
    total = SymExpr.zero()
    for j, k in sorted(orders):
        term = partial_jet(e, JetFactor(field, dx=k, dt=j))
        for _ in range(k):
            term = dx(term)
        for _ in range(j):
            term = dt(term)
        if (j + k) % 2:
            term = -term
        total = total + term
    return total


def variational_derivative(density: "Density | SymExpr", field: FieldSymbol) -> SymExpr:
    """Functional gradient of a dx-measure density with respect to one field."""
    if isinstance(density, Density):
        if density.measure != "dx":
            raise MeasureError("variational_derivative expects a dx-measure density")
        e = density.integrand
    else:
        e = density
    return euler_x(e, field)


# ---------------------------------------------------------------------------
# exactness


def is_total_x_derivative(e: SymExpr) -> bool:
    """True iff ``e`` is d/dx of a differential polynomial.

    Criterion: no field-free part and every Euler operator vanishes.  Formal
    constants act as coefficients of the ground ring.
    """
    _check_component_only(e)
    if e.is_zero():
        return True
    pairs = set()
    for (lam, theta, factors), _coeff in e._terms.items():
        genuine = [f for f in factors if not f.symbol.constant]
        if not genuine:
            return False  # field-free terms have a nonzero mean
        pairs.update((f.symbol, f.dt) for f in genuine)
    for sym, dt_order in sorted(pairs, key=lambda p: (p[0].name, p[1])):
        if not euler_x(e, sym, dt_order).is_zero():
            return False
    return True


def equals_mod_dx(e1: SymExpr, e2: SymExpr) -> bool:
    """True iff ``e1 - e2`` is a total x-derivative."""
    return is_total_x_derivative(e1 - e2)


def densities_equal(d1: Density, d2: Density) -> bool:
    if d1.measure != d2.measure:
        return False
    diff = d1.integrand - d2.integrand
    if d1.measure == "dx":
        return is_total_x_derivative(diff)
    # Berezin integration first; theta-free terms drop, the rest must be exact
    return is_total_x_derivative(berezin(diff))


# ---------------------------------------------------------------------------
# canonical representative modulo exact terms


def _sector_of(key: TermKey):
    lam, theta, factors = key
    profile = tuple(sorted((f.symbol.name, f.symbol, f.dt) for f in factors))
    total = sum(f.dx for f in factors)
    return (lam, theta, profile), total


def window_monomials(
    slots: Sequence[Tuple[FieldSymbol, int]], total_dx: int
) -> List[Tuple[JetFactor, ...]]:
    """All canonical factor tuples with the given field content and x-order.

    ``slots`` lists (field, t-order) with multiplicity.  Within a run of equal
    slots the x-orders are taken non-decreasing (strictly increasing for odd
    fields, whose equal jets vanish), which enumerates each monomial once in
    already-sorted form.
    """
    ordered = sorted(slots, key=lambda s: (s[0].name, s[1]))
    out: List[Tuple[JetFactor, ...]] = []

    def rec(i: int, remaining: int, prev_dx: int, acc: List[JetFactor]):
        if i == len(ordered):
            if remaining == 0:
                sorted_ = _sort_factors(tuple(acc))
                if sorted_ is not None:
                    out.append(sorted_[1])
            return
        sym, dt_order = ordered[i]
        same_group = i > 0 and ordered[i - 1] == ordered[i]
        if sym.constant:
            acc.append(JetFactor(sym))
            rec(i + 1, remaining, 0, acc)
            acc.pop()
            return
        lo = prev_dx if same_group else 0
        if same_group and sym.parity == ODD:
            lo = prev_dx + 1
        for k in range(lo, remaining + 1):
            acc.append(JetFactor(sym, dx=k, dt=dt_order))
            rec(i + 1, remaining - k, k, acc)
            acc.pop()

    rec(0, total_dx, 0, [])
    return sorted(set(out), key=lambda fs: tuple(f._key() for f in fs))


def _elimination_key(factors: Tuple[JetFactor, ...]):
    # concentrate-derivatives-first: monomials with higher maximal x-orders are
    # eliminated in favour of spread-out ones (u*u_xx -> -u_x**2)
    return (
        tuple(sorted((f.dx for f in factors), reverse=True)),
        tuple(f._key() for f in factors),
    )


def _reduce_against(
    target: Dict[Tuple[JetFactor, ...], Fraction],
    generators: List[Dict[Tuple[JetFactor, ...], Fraction]],
) -> Dict[Tuple[JetFactor, ...], Fraction]:
    """Reduce a coefficient vector modulo the span of the generators."""
    pivots: Dict[Tuple[JetFactor, ...], Dict[Tuple[JetFactor, ...], Fraction]] = {}
    rows = [dict(g) for g in generators if g]
    columns = sorted(
        {c for g in rows for c in g} | set(target),
        key=lambda fs: _elimination_key(fs),
        reverse=True,
    )
    for col in columns:
        pivot_row = None
        for row in rows:
            if row.get(col):
                pivot_row = row
                break
        if pivot_row is None:
            continue
        rows.remove(pivot_row)
        inv = Fraction(1) / pivot_row[col]
        pivot_row = {c: v * inv for c, v in pivot_row.items()}
        for row in rows:
            factor = row.get(col)
            if factor:
                for c, v in pivot_row.items():
                    cur = row.get(c, Fraction(0)) - factor * v
                    if cur:
                        row[c] = cur
                    else:
                        row.pop(c, None)
        pivots[col] = pivot_row
    vec = dict(target)
    for col in columns:
        coeff = vec.get(col)
        if coeff and col in pivots:
            for c, v in pivots[col].items():
                cur = vec.get(c, Fraction(0)) - coeff * v
                if cur:
                    vec[c] = cur
                else:
                    vec.pop(c, None)
    return vec


def canonical_density(density: "Density | SymExpr") -> SymExpr:
    """Integration-by-parts normal form of a dx-measure integrand.

    Two densities have equal canonical forms iff they differ by a total
    x-derivative.
    """
    if isinstance(density, Density):
        if density.measure != "dx":
            raise MeasureError("canonical_density expects a dx-measure density")
        e = density.integrand
    else:
        e = density
    _check_component_only(e)
    sectors: Dict[Tuple, Dict[int, Dict[Tuple[JetFactor, ...], Fraction]]] = {}
    for key, coeff in e._terms.items():
        (head, total) = _sector_of(key)
        sectors.setdefault(head, {}).setdefault(total, {})[key[2]] = coeff
    result = SymExpr.zero()
    for (lam, theta, profile), by_total in sorted(
        sectors.items(), key=lambda kv: (kv[0][0], kv[0][1], str(kv[0][2]))
    ):
        slots = [(sym, dt_order) for (_name, sym, dt_order) in profile]
        for total, target in sorted(by_total.items()):
            generators = []
            if total > 0:
                for fs in window_monomials(slots, total - 1):
                    image = dx(SymExpr.monomial(1, fs))
                    vec = {k[2]: c for k, c in image._terms.items()}
                    if vec:
                        generators.append(vec)
            reduced = _reduce_against(target, generators)
            for factors, coeff in reduced.items():
                result = result + SymExpr.monomial(coeff, factors, lam=lam, theta=theta)
    return result
