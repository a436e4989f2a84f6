"""Small shared container for inequality-audit results."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction


def jsonable(value):
    """Coerce numbers (incl. Fraction / numpy scalars / inf) into JSON-safe values."""
    if isinstance(value, Fraction):
        return {"num": value.numerator, "den": value.denominator}
    if isinstance(value, dict):
        return {k: jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, bool):
        return value
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


@dataclass
class AuditCheck:
    """One audited inequality: lhs (direction) rhs, with pass/fail or a witness.

    ``direction`` is "<=" unless stated; ``witness`` carries reported-only
    quantities (fitted constants) that are not asserted.
    """

    statement: str
    params: dict
    lhs: object
    rhs: object
    passed: bool | None = None
    direction: str = "<="
    witness: dict = field(default_factory=dict)

    @property
    def margin(self):
        try:
            if self.direction == "<=":
                return self.rhs - self.lhs
            return self.lhs - self.rhs
        except TypeError:
            return None

    def to_json(self, style: str = "statement") -> dict:
        """Serialize; style "inequality" matches the green-metric report shape."""
        key = "inequality" if style == "inequality" else "statement_id"
        out = {
            key: self.statement,
            "parameters" if style == "statement" else "params": jsonable(self.params),
            "lhs": jsonable(self.lhs),
            "rhs": jsonable(self.rhs),
            "margin": jsonable(self.margin),
            "pass": jsonable(self.passed),
        }
        if self.witness:
            out["witness"] = jsonable(self.witness)
        return out


def all_passed(checks) -> bool:
    return all(c.passed is not False for c in checks)
