"""Instance files.

An instance file is a JSON document::

    {
      "num_goods": 4,
      "groups": [
        [[1, 0, "0.1", "0.1"], [0, 1, 0.1, 0.1]],
        [["0.5", "0.5", "0.1", "0.1"], ["1/5", 0, "1/2", "1/2"]]
      ]
    }

``groups`` is a list of groups, each a list of agents, each a list of
``num_goods`` nonnegative values.  A value may be a JSON integer, a JSON
decimal literal (read exactly from its text, never through a binary float),
or a string holding an integer, a decimal, or a fraction ``p/q``.  An
optional ``"name"`` field is ignored by the solvers.
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .core import Instance


class InstanceFormatError(ValueError):
    pass


def parse_instance(text: str) -> Instance:
    try:
        doc = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "groups" not in doc:
        raise InstanceFormatError("expected an object with a 'groups' field")
    groups = doc["groups"]
    if not isinstance(groups, list) or not all(isinstance(g, list) for g in groups):
        raise InstanceFormatError("'groups' must be a list of lists of valuation rows")
    m = doc.get("num_goods")
    if m is None:
        try:
            m = len(groups[0][0])
        except (IndexError, TypeError):
            raise InstanceFormatError("cannot infer num_goods") from None
    if not isinstance(m, int) or isinstance(m, bool):
        raise InstanceFormatError("'num_goods' must be an integer")
    try:
        return Instance(m, groups)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise InstanceFormatError(str(exc)) from exc


def load_instance(path) -> Instance:
    return parse_instance(Path(path).read_text())


def format_value(v: Fraction):
    """Integers stay integers; terminating decimals become decimal strings."""
    if v.denominator == 1:
        return v.numerator
    d = v.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{v.numerator}/{v.denominator}"
    digits = max(twos, fives)
    scaled = v * 10 ** digits
    sign = "-" if scaled < 0 else ""
    s = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


def instance_to_dict(instance: Instance, name: str | None = None) -> dict:
    doc = {"num_goods": instance.m,
           "groups": [[[format_value(v) for v in row] for row in grp] for grp in instance.groups]}
    if name is not None:
        doc["name"] = name
    return doc


def dump_instance(instance: Instance, name: str | None = None) -> str:
    return json.dumps(instance_to_dict(instance, name))


def save_instance(instance: Instance, path, name: str | None = None) -> None:
    Path(path).write_text(dump_instance(instance, name) + "\n")
