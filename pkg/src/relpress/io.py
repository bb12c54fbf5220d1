"""System definition files.

A system file is JSON describing one bundle: an SFT, a 1-block code, and
optionally a potential, a point and a Markov measure::

    {
      "alphabet_x": ["1", "2"],
      "edges_x": [["1", "1"], ["1", "2"], ["2", "1"]],
      "code": {"1": "a", "2": "b"},
      "potential": {"window_radius": 0, "table": {"1": 0.5, "2": 0.0}, "normalize": true},
      "point": {"left_tail": "b", "center": "ab", "right_tail": "a", "anchor": 0},
      "markov": {"matrix": [[0.5, 0.5], [1.0, 0.0]], "seed": 7}
    }

Words may be strings (one character per symbol, allowed when every symbol of
the relevant alphabet is a single character), whitespace/comma separated
strings, or JSON lists of symbols. Table keys follow the same rule.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .potential import LocallyConstantPotential, normalize_nonneg
from .symbolic import EventuallyPeriodicPoint, FactorCode, Sft, make_sft

TOP_KEYS = {"alphabet_x", "edges_x", "code", "potential", "point", "markov", "name"}
POTENTIAL_KEYS = {"window_radius", "window", "table", "normalize"}
POINT_KEYS = {"left_tail", "center", "right_tail", "anchor"}
MARKOV_KEYS = {"matrix", "seed"}


class SpecError(ValueError):
    """A system file could not be parsed; the message names the location."""


@dataclass(frozen=True, eq=False)
class SystemSpec:
    sft: Sft
    code: FactorCode
    potential: LocallyConstantPotential | None = None
    raw_potential: LocallyConstantPotential | None = None
    point: EventuallyPeriodicPoint | None = None
    markov_matrix: np.ndarray | None = None
    markov_seed: int | None = None
    name: str = "system"
    source: str | None = None


def split_word(text, alphabet, where: str = "word") -> tuple:
    """Turn a string or list into a tuple of symbols from ``alphabet``."""
    if isinstance(text, list):
        word = tuple(str(s) for s in text)
    elif isinstance(text, str):
        stripped = text.strip()
        if re.search(r"[\s,]", stripped):
            word = tuple(t for t in re.split(r"[\s,]+", stripped) if t)
        elif all(len(a) == 1 for a in alphabet):
            word = tuple(stripped)
        elif stripped in alphabet:
            word = (stripped,)
        else:
            raise SpecError(f"{where}: multi-character symbols need separators in {text!r}")
    else:
        raise SpecError(f"{where}: expected a string or a list, got {type(text).__name__}")
    bad = [s for s in word if s not in alphabet]
    if bad:
        raise SpecError(f"{where}: unknown symbol {bad[0]!r}")
    return word


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SpecError(msg)


def _check_keys(obj, allowed: set, where: str) -> None:
    _require(isinstance(obj, dict), f"{where}: expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise SpecError(f"{where}: unknown key {unknown[0]!r}")


def _parse_potential(obj, X: Sft) -> tuple[LocallyConstantPotential, LocallyConstantPotential]:
    _check_keys(obj, POTENTIAL_KEYS, "potential")
    if "window" in obj and "window_radius" in obj:
        raise SpecError("potential: give either 'window' or 'window_radius', not both")
    if "window" in obj:
        win = obj["window"]
        _require(isinstance(win, list) and len(win) == 2 and all(isinstance(v, int) for v in win),
                 "potential.window: expected [lo, hi] integers")
        lo, hi = win
    else:
        m = obj.get("window_radius", 0)
        _require(isinstance(m, int) and not isinstance(m, bool) and m >= 0,
                 "potential.window_radius: expected a nonnegative integer")
        lo, hi = -m, m
    table_in = obj.get("table")
    _require(isinstance(table_in, dict), "potential.table: expected an object")
    table = {}
    for key, val in table_in.items():
        word = split_word(key, X.alphabet, f"potential.table[{key!r}]")
        _require(isinstance(val, (int, float)) and not isinstance(val, bool),
                 f"potential.table[{key!r}]: expected a number")
        _require(word not in table, f"potential.table: duplicate word {key!r}")
        table[word] = float(val)
    normalize = obj.get("normalize", True)
    _require(isinstance(normalize, bool), "potential.normalize: expected true or false")
    try:
        raw = LocallyConstantPotential(X, lo, hi, table)
    except ValueError as exc:
        raise SpecError(f"potential: {exc}") from None
    return (normalize_nonneg(raw) if normalize else raw), raw


def _parse_point(obj, code: FactorCode) -> EventuallyPeriodicPoint:
    _check_keys(obj, POINT_KEYS, "point")
    alphabet = code.image_alphabet
    parts = {}
    for key in ("left_tail", "center", "right_tail"):
        val = obj.get(key, "" if key == "center" else None)
        _require(val is not None, f"point.{key}: missing")
        parts[key] = split_word(val, alphabet, f"point.{key}") if val != "" else ()
    anchor = obj.get("anchor", 0)
    _require(isinstance(anchor, int) and not isinstance(anchor, bool), "point.anchor: expected an integer")
    try:
        y = EventuallyPeriodicPoint(parts["left_tail"], parts["center"], parts["right_tail"], anchor)
        y.check(code)
    except ValueError as exc:
        raise SpecError(f"point: {exc}") from None
    return y


def _parse_markov(obj, X: Sft) -> tuple[np.ndarray, int]:
    _check_keys(obj, MARKOV_KEYS, "markov")
    n = len(X)
    mat = obj.get("matrix", "uniform")
    if mat == "uniform":
        P = X.adjacency.astype(float)
        P /= P.sum(axis=1, keepdims=True)
    elif isinstance(mat, dict):
        P = np.zeros((n, n))
        for a, row in mat.items():
            _require(a in X.index and isinstance(row, dict), f"markov.matrix[{a!r}]: bad row")
            for b, p in row.items():
                _require(b in X.index, f"markov.matrix[{a!r}][{b!r}]: unknown symbol")
                P[X.index[a], X.index[b]] = float(p)
    elif isinstance(mat, list):
        _require(len(mat) == n and all(isinstance(r, list) and len(r) == n for r in mat),
                 f"markov.matrix: expected a {n}x{n} list in alphabet order")
        P = np.array(mat, dtype=float)
    else:
        raise SpecError("markov.matrix: expected 'uniform', a nested object or a list of rows")
    seed = obj.get("seed", 0)
    _require(isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed < 2**64,
             "markov.seed: expected a 64-bit nonnegative integer")
    return P, seed


def parse_system(data, name: str = "system", source: str | None = None) -> SystemSpec:
    _check_keys(data, TOP_KEYS, "top level")
    for key in ("alphabet_x", "edges_x", "code"):
        _require(key in data, f"{key}: missing")
    alphabet = data["alphabet_x"]
    _require(isinstance(alphabet, list) and alphabet, "alphabet_x: expected a nonempty list")
    alphabet = [str(a) for a in alphabet]
    _require(len(set(alphabet)) == len(alphabet), "alphabet_x: duplicate symbols")
    edges = []
    _require(isinstance(data["edges_x"], list), "edges_x: expected a list of pairs")
    for i, e in enumerate(data["edges_x"]):
        if isinstance(e, str):
            e = split_word(e, alphabet, f"edges_x[{i}]")
        _require(isinstance(e, (list, tuple)) and len(e) == 2, f"edges_x[{i}]: expected a pair")
        a, b = str(e[0]), str(e[1])
        _require(a in alphabet and b in alphabet, f"edges_x[{i}]: unknown symbol")
        edges.append((a, b))
    try:
        X = make_sft(alphabet, edges)
    except ValueError as exc:
        raise SpecError(f"edges_x: {exc}") from None
    code_in = data["code"]
    _require(isinstance(code_in, dict), "code: expected an object")
    for a in code_in:
        _require(a in alphabet, f"code[{a!r}]: unknown symbol")
    missing = [a for a in alphabet if a not in code_in]
    if missing:
        raise SpecError(f"code: no image for symbol {missing[0]!r}")
    code = FactorCode(X, {a: str(code_in[a]) for a in X.alphabet})
    f = raw = None
    if "potential" in data:
        f, raw = _parse_potential(data["potential"], X)
    y = _parse_point(data["point"], code) if "point" in data else None
    P = seed = None
    if "markov" in data:
        P, seed = _parse_markov(data["markov"], X)
    return SystemSpec(X, code, f, raw, y, P, seed, str(data.get("name", name)), source)


def load_system(path) -> SystemSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return parse_system(data, name=path.stem, source=str(path))
    except SpecError as exc:
        line = _field_line(text, str(exc))
        where = f"{path}:{line}" if line else str(path)
        raise SpecError(f"{where}: {exc}") from None


def _field_line(text: str, message: str) -> int | None:
    """Line of the first occurrence of the top-level field named in ``message``."""
    field_name = re.match(r"[A-Za-z_]+", message)
    if not field_name:
        return None
    needle = f'"{field_name.group(0)}"'
    for lineno, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return lineno
    return None


def bundled_path(name: str) -> Path:
    """Path of a system file shipped inside the package (e.g. ``example1``)."""
    return Path(__file__).with_name("data") / f"{name}.system"
