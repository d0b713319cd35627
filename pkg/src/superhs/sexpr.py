"""Plain-text serialization of expressions for fixtures and reports.

Grammar (whitespace-separated s-expressions)::

    expr    := '(sum' term* ')'
    term    := '(term' RATIONAL atom* ')'
    atom    := '(lam' INT ')'
             | '(theta)'
             | '(jet' NAME PARITY KIND DX DT DTHETA ')'
    RATIONAL:= e.g. 3, -1, 1/2, -5/3
    PARITY  := 'even' | 'odd'
    KIND    := 'field' | 'super' | 'const'
    NAME    := identifier (no whitespace or parentheses)

A jet atom carries the full symbol declaration, so a parsed expression is
self-contained; round-tripping preserves canonical form exactly.  The zero
expression serialises as ``(sum)``.
"""
from __future__ import annotations

from fractions import Fraction
from typing import List, Tuple

from .algebra import EVEN, ODD, FieldSymbol, JetFactor, SymExpr


class SExprError(ValueError):
    pass


def to_sexpr(e: SymExpr) -> str:
    parts: List[str] = []
    for (lam, theta, factors), coeff in e.terms():
        atoms = []
        if lam:
            atoms.append(f"(lam {lam})")
        if theta:
            atoms.append("(theta)")
        for f in factors:
            parity = "odd" if f.symbol.parity else "even"
            kind = "super" if f.symbol.superspace else ("const" if f.symbol.constant else "field")
            atoms.append(f"(jet {f.symbol.name} {parity} {kind} {f.dx} {f.dt} {f.dtheta})")
        body = " ".join([str(coeff)] + atoms)
        parts.append(f"(term {body})")
    inner = " ".join(parts)
    return f"(sum {inner})" if inner else "(sum)"


def _tokenize(text: str) -> List[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse_list(tokens: List[str], pos: int) -> Tuple[list, int]:
    if tokens[pos] != "(":
        raise SExprError(f"expected '(' at token {pos}")
    pos += 1
    items: list = []
    while pos < len(tokens) and tokens[pos] != ")":
        if tokens[pos] == "(":
            sub, pos = _parse_list(tokens, pos)
            items.append(sub)
        else:
            items.append(tokens[pos])
            pos += 1
    if pos >= len(tokens):
        raise SExprError("unbalanced parentheses")
    return items, pos + 1


def from_sexpr(text: str) -> SymExpr:
    tokens = _tokenize(text)
    if not tokens:
        raise SExprError("empty input")
    tree, end = _parse_list(tokens, 0)
    if end != len(tokens):
        raise SExprError("trailing tokens after expression")
    if not tree or tree[0] != "sum":
        raise SExprError("expression must start with (sum ...)")
    total = SymExpr.zero()
    for term in tree[1:]:
        if not isinstance(term, list) or not term or term[0] != "term":
            raise SExprError("expected (term ...)")
        if len(term) < 2:
            raise SExprError("term needs a coefficient")
        coeff = Fraction(term[1])
        lam = 0
        theta = 0
        factors = []
        for atom in term[2:]:
            if not isinstance(atom, list) or not atom:
                raise SExprError("malformed atom")
            if atom[0] == "lam":
                lam += int(atom[1])
            elif atom[0] == "theta":
                theta += 1
            elif atom[0] == "jet":
                if len(atom) != 7:
                    raise SExprError(f"jet atom needs 6 fields, got {atom}")
                name, parity_s, kind, dx_s, dt_s, dth_s = atom[1:]
                parity = ODD if parity_s == "odd" else EVEN
                sym = FieldSymbol(
                    name,
                    parity,
                    superspace=(kind == "super"),
                    constant=(kind == "const"),
                )
                factors.append(JetFactor(sym, int(dx_s), int(dt_s), int(dth_s)))
            else:
                raise SExprError(f"unknown atom {atom[0]!r}")
        if theta > 1:
            continue  # theta**2 = 0
        total = total + SymExpr.monomial(coeff, factors, lam=lam, theta=theta)
    return total
