"""JSON instance documents.

    {"supply": 1,
     "bidders": [{"value": 2, "budget": 1},
                 {"valuation": {"breakpoints": [[0, 0], [0.5, 1]], "concave": true},
                  "budget": "inf"}],
     "matching": {"values": [[3, 1], [2, 2]], "budgets": [10, "inf"]}}

``"inf"`` is the unbounded budget. ``matching`` is optional, and when it is
present ``bidders`` may be omitted.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from .errors import InstanceError, ParseError
from .model import INF, Additive, Bidder, Instance, PiecewiseLinear, validate
from .special import MatchingMarket


def _budget(raw: Any, where: str) -> float:
    if raw is None or raw == "inf" or raw == "Infinity":
        return INF
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ParseError(f"{where}: budget must be a number or \"inf\", got {raw!r}")
    return float(raw)


def _budget_out(b: float) -> float | str:
    return "inf" if b == INF else b


def _number(raw: Any, where: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ParseError(f"{where}: expected a number, got {raw!r}")
    return float(raw)


def bidder_from_dict(d: dict, where: str = "bidder") -> Bidder:
    if not isinstance(d, dict):
        raise ParseError(f"{where}: expected an object")
    budget = _budget(d.get("budget", "inf"), where)
    if "value" in d:
        return Bidder(Additive(_number(d["value"], where)), budget)
    if "valuation" in d:
        v = d["valuation"]
        try:
            pts = tuple((_number(q, where), _number(x, where)) for q, x in v["breakpoints"])
            return Bidder(PiecewiseLinear(pts, bool(v.get("concave", False))), budget)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InstanceError):
                raise
            raise ParseError(f"{where}: bad valuation: {exc}") from exc
    raise ParseError(f"{where}: needs \"value\" or \"valuation\"")


def bidder_to_dict(b: Bidder) -> dict:
    if isinstance(b.valuation, Additive):
        return {"value": b.valuation.value, "budget": _budget_out(b.budget)}
    return {"valuation": {"breakpoints": [list(p) for p in b.valuation.breakpoints],
                          "concave": b.valuation.concave},
            "budget": _budget_out(b.budget)}


def market_from_dict(d: dict) -> MatchingMarket:
    try:
        return MatchingMarket(d["values"], [_budget(b, "matching") for b in d["budgets"]])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad matching block: {exc}") from exc


def problem_from_dict(doc: dict) -> tuple[Instance | None, MatchingMarket | None]:
    """Parse and validate a document. Raises ParseError or an InstanceError."""
    if not isinstance(doc, dict):
        raise ParseError("instance document must be an object")
    market = market_from_dict(doc["matching"]) if "matching" in doc else None
    raw = doc.get("bidders")
    if raw is None and market is not None:
        return None, market
    if not isinstance(raw, list) or not raw:
        raise ParseError("document has no bidders")
    supply = _number(doc.get("supply", 1.0), "supply")
    inst = Instance(tuple(bidder_from_dict(b, f"bidder {i}") for i, b in enumerate(raw)), supply)
    validate(inst)
    return inst, market


def problem_to_dict(obj: Instance | MatchingMarket) -> dict:
    if isinstance(obj, MatchingMarket):
        return {"matching": obj.to_dict()}
    return {"supply": obj.supply, "bidders": [bidder_to_dict(b) for b in obj.bidders]}


def load(path: str | Path) -> tuple[Instance | None, MatchingMarket | None]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return problem_from_dict(doc)


def dumps(obj: Instance | MatchingMarket) -> str:
    return json.dumps(problem_to_dict(obj), indent=2)


def fmt(x: float) -> str:
    """Deterministic text for a float (shortest round-trip repr)."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)
