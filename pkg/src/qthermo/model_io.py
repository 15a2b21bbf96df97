"""Model-file schema: JSON with state names and rates (matrix or edge list).

    {"states": ["a", "b"], "rates": [[0, 1], [2, 0]]}
    {"states": ["a", "b"], "rates": [{"from": "a", "to": "b", "rate": 1.0},
                                     {"from": "b", "to": "a", "rate": 2.0}]}

Unspecified edges are rate 0; duplicate edges are an error.  Schema problems
raise ModelFileError; rate-value problems surface from validate_generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ModelFileError
from .markov import Generator, validate_generator


@dataclass(frozen=True)
class Model:
    names: tuple[str, ...]
    generator: Generator


def parse_model(obj) -> Model:
    """Build a Model from a decoded JSON object."""
    if not isinstance(obj, dict):
        raise ModelFileError(f"model must be a JSON object, got {type(obj).__name__}")
    try:
        names = obj["states"]
        rates = obj["rates"]
    except KeyError as missing:
        raise ModelFileError(f"model is missing the {missing} key") from None
    if (not isinstance(names, list) or not names
            or not all(isinstance(s, str) and s for s in names)):
        raise ModelFileError("'states' must be a non-empty list of non-empty names")
    if len(set(names)) != len(names):
        raise ModelFileError("state names must be unique")
    n = len(names)
    index = {s: k for k, s in enumerate(names)}

    if not isinstance(rates, list):
        raise ModelFileError("'rates' must be a matrix or an edge list")
    if rates and isinstance(rates[0], dict):
        w = np.zeros((n, n))
        seen: set[tuple[int, int]] = set()
        for entry in rates:
            if not isinstance(entry, dict) or set(entry) != {"from", "to", "rate"}:
                raise ModelFileError(f"bad edge entry {entry!r}")
            try:
                i, j = index[entry["from"]], index[entry["to"]]
            except KeyError as unknown:
                raise ModelFileError(f"edge references unknown state {unknown}") from None
            if not isinstance(entry["rate"], (int, float)):
                raise ModelFileError(f"edge rate must be a number, got {entry['rate']!r}")
            if (i, j) in seen:
                raise ModelFileError(f"duplicate edge {entry['from']!r} -> {entry['to']!r}")
            seen.add((i, j))
            w[i, j] = float(entry["rate"])
    else:
        try:
            w = np.array(rates, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ModelFileError(f"rate matrix does not parse: {exc}") from None
        if w.shape != (n, n):
            raise ModelFileError(f"rate matrix shape {w.shape} does not match {n} states")
    return Model(names=tuple(names), generator=validate_generator(w))


def load_model(path) -> Model:
    """Read and validate a model file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path} is not valid JSON: {exc}") from None
    return parse_model(obj)


def model_dict(names, g: Generator) -> dict:
    """JSON-serializable model object (matrix form)."""
    return {
        "states": list(names),
        "rates": [[float(x) for x in row] for row in g.rates],
    }
