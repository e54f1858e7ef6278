"""File formats used by the command-line tools.

Matrices and vectors are plain CSV (optional header row, comma separated).
Numbers are written with 17 significant digits so they parse back to the
same doubles. Structured results are JSON.
"""

import csv
import hashlib
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__


class InputError(ValueError):
    """Malformed or inconsistent input file."""


def _parse_float(token, path, lineno, allow_nan):
    try:
        v = float(token)
    except ValueError:
        raise InputError(f"{path}:{lineno}: cannot parse {token.strip()!r} as a number") from None
    if math.isinf(v) or (math.isnan(v) and not allow_nan):
        raise InputError(f"{path}:{lineno}: non-finite value {token.strip()!r}")
    return v


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def read_matrix(path, allow_nan=False):
    """Read a numeric CSV into a 2-d array.

    A first row containing any non-numeric field is treated as a header.
    Blank lines are skipped. Errors name the file and the 1-based line.

    Returns
    -------
    values : ndarray, shape (rows, cols)
    header : list of str or None
    """
    path = os.fspath(path)
    rows, header, width = [], None, None
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not t.strip() for t in rec):
                continue
            if header is None and not rows and not all(_is_number(t) for t in rec):
                header = [t.strip() for t in rec]
                width = len(header)
                continue
            if width is None:
                width = len(rec)
            if len(rec) != width:
                raise InputError(f"{path}:{lineno}: expected {width} fields, found {len(rec)}")
            rows.append([_parse_float(t, path, lineno, allow_nan) for t in rec])
    if not rows:
        raise InputError(f"{path}: no numeric rows")
    return np.array(rows, dtype=float), header


def read_vector(path, allow_nan=False):
    """Read a one-column CSV (optional header) into a 1-d array."""
    values, _ = read_matrix(path, allow_nan=allow_nan)
    if values.shape[1] != 1:
        raise InputError(f"{os.fspath(path)}: expected one column, found {values.shape[1]}")
    return values[:, 0]


def format_float(v):
    return "%.17g" % v


def write_vector(path, values, header=None):
    """One value per line with 17 significant digits; optional header line."""
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header + "\n")
        for v in np.asarray(values, dtype=float):
            fh.write(format_float(v) + "\n")


def dumps(obj):
    """Deterministic JSON text (sorted keys, trailing newline)."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Record of one command invocation.

    ``argv`` replays the command; ``config`` echoes the parsed options (and
    the simulation config, if any); ``inputs`` maps input files to their
    SHA-256 so a replay can refuse changed data.
    """

    subcommand: str
    argv: list
    config: dict
    seed: int | None = None
    version: str = __version__
    wall_clock: float = 0.0
    started: str = ""
    outputs: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)

    @classmethod
    def start(cls, subcommand, argv, config, seed=None):
        m = cls(subcommand, list(argv), dict(config), seed)
        m.started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        m._t0 = time.perf_counter()
        return m

    def add_input(self, path):
        self.inputs[os.fspath(path)] = file_digest(path)

    def finish(self, outputs):
        self.outputs = [os.fspath(p) for p in outputs]
        self.wall_clock = time.perf_counter() - getattr(self, "_t0", time.perf_counter())

    def to_dict(self):
        return asdict(self)

    def write(self, path):
        write_json(path, self.to_dict())

    @classmethod
    def read(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{os.fspath(path)}:{exc.lineno}: invalid JSON ({exc.msg})") from None
        try:
            return cls(**data)
        except TypeError as exc:
            raise InputError(f"{os.fspath(path)}: not a run manifest ({exc})") from None
