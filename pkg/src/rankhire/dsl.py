"""Text and JSON forms of strategies.

Grammar::

    median | sqrt-floor | irregular-octal
    percentile:<alpha>                 alpha as decimal or p/q
    best-of:<r>
    periodic:nu=<nu>,q=<q>,r=<r1>,...,<rq>
    table:<r0>,<r1>,...+constant
    table:<r0>,<r1>,...+periodic:nu=<nu>,q=<q>
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import ConstraintViolation, DSLParseError
from .strategy import (
    BestOf,
    IrregularOctal,
    LinearPeriodic,
    Median,
    Percentile,
    RankSequence,
    SqrtFloor,
    Table,
    validate_prefix,
)

_SIMPLE = {"median": Median, "sqrt-floor": SqrtFloor, "irregular-octal": IrregularOctal}
_INT_LIST = re.compile(r"\d+(,\d+)*$")


def _int_list(text, body, offset):
    if not _INT_LIST.match(body):
        bad = next((i for i, c in enumerate(body) if not (c.isdigit() or c == ",")), len(body))
        raise DSLParseError(text, offset + bad, "expected comma-separated integers")
    return [int(v) for v in body.split(",")]


def _periodic_args(text, body, offset, need_r):
    """Parse ``nu=..,q=..[,r=..]`` returning (nu, q, base or None)."""
    m = re.match(r"nu=(\d+),q=(\d+)(?:,r=(.*))?$", body)
    if not m:
        raise DSLParseError(text, offset, "expected nu=<int>,q=<int>" + (",r=<ints>" if need_r else ""))
    nu, q = int(m.group(1)), int(m.group(2))
    if need_r:
        if m.group(3) is None:
            raise DSLParseError(text, offset + len(body), "missing r=<r(1)>,...,<r(q)>")
        base = _int_list(text, m.group(3), offset + m.start(3))
        return nu, q, base
    if m.group(3) is not None:
        raise DSLParseError(text, offset + m.start(3) - 2, "unexpected r= in table extension")
    return nu, q, None


def parse_strategy(dsl: str) -> RankSequence:
    text = dsl
    s = dsl.strip()
    lead = len(dsl) - len(dsl.lstrip())
    if s in _SIMPLE:
        return _SIMPLE[s]()
    head, sep, body = s.partition(":")
    off = lead + len(head) + 1
    if not sep:
        raise DSLParseError(text, lead, f"unknown strategy {s!r}")
    try:
        if head == "percentile":
            try:
                alpha = Fraction(body)
            except (ValueError, ZeroDivisionError):
                raise DSLParseError(text, off, "alpha must be a decimal or p/q") from None
            return Percentile(alpha)
        if head == "best-of":
            if not body.isdigit():
                raise DSLParseError(text, off, "best-of needs a positive integer")
            return BestOf(int(body))
        if head == "periodic":
            nu, q, base = _periodic_args(text, body, off, True)
            return LinearPeriodic(nu, q, tuple(base))
        if head == "table":
            prefix, plus, ext = body.partition("+")
            if not plus:
                raise DSLParseError(
                    text, off + len(body), "table needs an extension: +constant or +periodic:nu=..,q=.."
                )
            values = _int_list(text, prefix, off)
            ext_off = off + len(prefix) + 1
            if ext == "constant":
                seq = Table(tuple(values), "constant")
            elif ext.startswith("periodic:"):
                nu, q, _ = _periodic_args(text, ext[len("periodic:"):], ext_off + 9, False)
                seq = Table(tuple(values), (nu, q))
            else:
                raise DSLParseError(text, ext_off, "extension must be constant or periodic:nu=..,q=..")
            bad = validate_prefix(seq, len(values) + 2 * (q if ext != "constant" else 1))
            if bad is not None:
                raise ConstraintViolation(*bad)
            return seq
    except DSLParseError:
        raise
    except ConstraintViolation:
        raise
    except ValueError as exc:
        raise DSLParseError(text, off, str(exc)) from None
    raise DSLParseError(text, lead, f"unknown strategy kind {head!r}")


def strategy_to_dsl(strategy: RankSequence) -> str:
    return strategy.to_dsl()


def strategy_to_json(strategy: RankSequence) -> dict:
    """JSON mirror of the DSL: ``{"kind": ..., <parameters>}``."""
    if isinstance(strategy, Percentile):
        return {"kind": "percentile", "alpha": str(strategy.value)}
    if isinstance(strategy, BestOf):
        return {"kind": "best-of", "r": strategy.r}
    if isinstance(strategy, LinearPeriodic):
        return {"kind": "periodic", "nu": strategy.nu, "q": strategy.q, "r": list(strategy.base)}
    if isinstance(strategy, Table):
        ext = strategy.extension
        ext_json = "constant" if ext == "constant" else {"nu": ext[0], "q": ext[1]}
        return {"kind": "table", "prefix": list(strategy.prefix), "extension": ext_json}
    return {"kind": strategy.to_dsl()}


def strategy_from_json(obj: dict) -> RankSequence:
    kind = obj.get("kind")
    if kind in _SIMPLE:
        return _SIMPLE[kind]()
    if kind == "percentile":
        return Percentile(Fraction(str(obj["alpha"])))
    if kind == "best-of":
        return BestOf(int(obj["r"]))
    if kind == "periodic":
        return LinearPeriodic(int(obj["nu"]), int(obj["q"]), tuple(obj["r"]))
    if kind == "table":
        ext = obj["extension"]
        ext = "constant" if ext == "constant" else (int(ext["nu"]), int(ext["q"]))
        return Table(tuple(obj["prefix"]), ext)
    raise DSLParseError(str(obj), 0, f"unknown strategy kind {kind!r}")
