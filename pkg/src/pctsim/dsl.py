"""Line-oriented model document format.

    # renewal chain, reference symbol first so the regular set is a prefix
    alphabet = 2 1
    regular  = 2
    epsilon  = 0.2
    ref      = "2"
    reach    = zero
    dist *   = 0.4 0.6

Keys:
  alphabet   symbol names in order (single characters); regular symbols first
  regular    prefix of the alphabet guaranteed probability >= epsilon (default: all)
  epsilon    spontaneous probability floor, exact decimal or fraction like 1/3
  ref        the reference string, quoted, written oldest symbol first
  reach      zero | identity | affine A B | power C ALPHA | exp R
             | table v0 v1 ... [tail <one of the above>]
  rule "K"   explicit context: K is quoted in display order (most recent
             symbol first); value is the probability vector in alphabet order
  dist S     distance-class rule: S is a number, odd, even or *;
             optionally followed by free "P" (display-order pattern on the
             oldest context symbols)
  default    fallback probability vector

Probabilities are kept exact: decimals parse as the rational they denote.
parse_model(format_model(m)) returns a model equal to m.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import ParseError, SemanticError
from .model import (
    Alphabet,
    ContextTreeModel,
    DistanceRule,
    LengthFn,
    TransitionRules,
    as_fraction,
    validate,
)

_QUOTED = re.compile(r'^"([^"]*)"$')


def _frac(tok: str, line: int, col: int) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"not a number: {tok!r}", line, col) from None


def _number(tok: str, line: int, col: int) -> float:
    try:
        return float(Fraction(tok))
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"not a number: {tok!r}", line, col) from None


def _parse_reach(tokens: list[str], line: int, col: int) -> LengthFn:
    if not tokens:
        raise ParseError("reach needs a kind", line, col)
    kind = tokens[0]
    rest = tokens[1:]
    if kind in ("zero", "identity"):
        if rest:
            raise ParseError(f"reach {kind} takes no parameters", line, col)
        return LengthFn(kind)
    if kind == "affine":
        if len(rest) != 2:
            raise ParseError("reach affine needs A and B", line, col)
        return LengthFn("affine", (_number(rest[0], line, col), _number(rest[1], line, col)))
    if kind == "power":
        if len(rest) != 2:
            raise ParseError("reach power needs C and ALPHA", line, col)
        return LengthFn("power", (_number(rest[0], line, col), _number(rest[1], line, col)))
    if kind == "exp":
        if len(rest) != 1:
            raise ParseError("reach exp needs a rate", line, col)
        return LengthFn("exp", (_number(rest[0], line, col),))
    if kind == "table":
        vals = []
        i = 0
        while i < len(rest) and rest[i] != "tail":
            tok = rest[i].strip("[],")
            if tok:
                try:
                    vals.append(int(tok))
                except ValueError:
                    raise ParseError(f"table value not an integer: {tok!r}", line, col) from None
            i += 1
        if not vals:
            raise ParseError("reach table needs at least one value", line, col)
        tail = None
        if i < len(rest):
            tail_tokens = rest[i + 1 :]
            tail = _parse_reach(tail_tokens, line, col)
            if tail.kind == "table":
                raise ParseError("table tail cannot itself be a table", line, col)
        if tail is None:
            # constant extension keeps the function total; growth undecidable
            pass
        return LengthFn("table", (), tuple(vals), tail)
    raise ParseError(f"unknown reach kind {kind!r}", line, col)


def parse_model(text: str) -> ContextTreeModel:
    """Parse a model document; raises ParseError (syntax, with location) or
    SemanticError (valid syntax, invalid model)."""
    alphabet: list[str] | None = None
    regular: list[str] | None = None
    epsilon: Fraction | None = None
    ref_display: str | None = None
    reach: LengthFn | None = None
    rules: list[tuple[str, list[Fraction]]] = []
    dists: list[tuple[tuple, str | None, list[Fraction]]] = []
    default: list[Fraction] | None = None

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno, 1)
        key_part, value_part = line.split("=", 1)
        key_tokens = key_part.split()
        value_col = line.index("=") + 2
        tokens = value_part.split()
        if not key_tokens:
            raise ParseError("missing key before '='", lineno, 1)
        key = key_tokens[0]

        if key == "alphabet":
            alphabet = tokens
            if not alphabet:
                raise ParseError("alphabet is empty", lineno, value_col)
            for s in alphabet:
                if len(s) != 1:
                    raise ParseError(f"symbol names must be single characters: {s!r}",
                                     lineno, value_col)
        elif key == "regular":
            regular = tokens
        elif key == "epsilon":
            if len(tokens) != 1:
                raise ParseError("epsilon takes one value", lineno, value_col)
            epsilon = _frac(tokens[0], lineno, value_col)
        elif key == "ref":
            m = _QUOTED.match(value_part.strip())
            if not m:
                raise ParseError('ref must be quoted, e.g. ref = "2"', lineno, value_col)
            ref_display = m.group(1)
        elif key == "reach":
            reach = _parse_reach(tokens, lineno, value_col)
        elif key == "rule":
            if len(key_tokens) != 2:
                raise ParseError('rule needs a quoted key: rule "121" = ...', lineno, 1)
            m = _QUOTED.match(key_tokens[1])
            if not m:
                raise ParseError("rule key must be quoted", lineno, 1)
            rules.append((m.group(1), [_frac(t, lineno, value_col) for t in tokens]))
        elif key == "dist":
            if len(key_tokens) < 2:
                raise ParseError("dist needs a selector: a number, odd, even or *", lineno, 1)
            sel_tok = key_tokens[1]
            if sel_tok == "odd":
                sel = ("parity", 1)
            elif sel_tok == "even":
                sel = ("parity", 0)
            elif sel_tok == "*":
                sel = ("any",)
            else:
                try:
                    sel = ("exact", int(sel_tok))
                except ValueError:
                    raise ParseError(f"bad dist selector {sel_tok!r}", lineno, 1) from None
            free = None
            if len(key_tokens) > 2:
                if len(key_tokens) != 4 or key_tokens[2] != "free":
                    raise ParseError('dist pattern must be: dist K free "P"', lineno, 1)
                m = _QUOTED.match(key_tokens[3])
                if not m:
                    raise ParseError("free pattern must be quoted", lineno, 1)
                free = m.group(1)
            dists.append((sel, free, [_frac(t, lineno, value_col) for t in tokens]))
        elif key == "default":
            default = [_frac(t, lineno, value_col) for t in tokens]
        else:
            raise ParseError(f"unknown key {key!r}", lineno, 1)

    for name, value in (("alphabet", alphabet), ("epsilon", epsilon),
                        ("ref", ref_display), ("reach", reach)):
        if value is None:
            raise ParseError(f"missing required key {name!r}", len(text.splitlines()) + 1, 1)

    if regular is None:
        regular = list(alphabet)
    if regular != alphabet[: len(regular)]:
        raise ParseError(
            "regular symbols must be the leading prefix of the alphabet "
            f"(alphabet {alphabet}, regular {regular})",
            1, 1,
        )
    ab = Alphabet(tuple(alphabet), len(regular))

    def sym_index(ch: str, what: str) -> int:
        if ch not in alphabet:
            raise ParseError(f"{what} uses unknown symbol {ch!r}", 1, 1)
        return alphabet.index(ch)

    ref = tuple(sym_index(ch, "ref") for ch in ref_display)
    by_context = tuple(
        (tuple(sym_index(ch, "rule key") for ch in reversed(disp)), tuple(vec))
        for disp, vec in rules
    )
    by_distance = tuple(
        DistanceRule(
            sel,
            tuple(vec),
            None if free is None
            else tuple(sym_index(ch, "free pattern") for ch in reversed(free)),
        )
        for sel, free, vec in dists
    )
    model = ContextTreeModel(
        ab, ref, reach,
        TransitionRules(epsilon, by_context, by_distance,
                        tuple(default) if default is not None else None),
    )
    violations = validate(model)
    if violations:
        raise SemanticError(violations)
    return model


def _fmt_frac(x: Fraction) -> str:
    """Exact decimal when the denominator allows it, else a/b."""
    den = x.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{x.numerator}/{x.denominator}"
    digits = max(twos, fives)
    if digits == 0:
        return str(x.numerator)
    scaled = x.numerator * 10 ** digits // x.denominator
    s = f"{scaled:0{digits + 1}d}"
    return f"{s[:-digits]}.{s[-digits:]}".replace("-.", "-0.")


def _fmt_reach(fn: LengthFn) -> str:
    if fn.kind in ("zero", "identity"):
        return fn.kind
    if fn.kind in ("affine", "power"):
        return f"{fn.kind} {fn.params[0]:g} {fn.params[1]:g}"
    if fn.kind == "exp":
        return f"exp {fn.params[0]:.17g}"
    parts = ["table"] + [str(v) for v in fn.table]
    if fn.tail is not None:
        parts += ["tail", _fmt_reach(fn.tail)]
    return " ".join(parts)


def format_model(model: ContextTreeModel) -> str:
    """Canonical document form; parse_model round-trips it to an equal model."""
    ab = model.alphabet
    out = [
        "alphabet = " + " ".join(ab.symbols),
        "regular = " + " ".join(ab.symbols[: ab.n_regular]),
        "epsilon = " + _fmt_frac(model.rules.epsilon),
        f'ref = "{"".join(ab.label(s) for s in model.ref)}"',
        "reach = " + _fmt_reach(model.reach),
    ]
    for key, vec in model.rules.by_context:
        out.append(
            f'rule "{ab.to_display(key)}" = ' + " ".join(_fmt_frac(p) for p in vec)
        )
    for rule in model.rules.by_distance:
        sel = rule.selector
        if sel[0] == "exact":
            stok = str(sel[1])
        elif sel[0] == "parity":
            stok = "odd" if sel[1] == 1 else "even"
        else:
            stok = "*"
        head = f"dist {stok}"
        if rule.free is not None:
            head += f' free "{ab.to_display(rule.free)}"'
        out.append(head + " = " + " ".join(_fmt_frac(p) for p in rule.probs))
    if model.rules.default is not None:
        out.append("default = " + " ".join(_fmt_frac(p) for p in model.rules.default))
    return "\n".join(out) + "\n"
