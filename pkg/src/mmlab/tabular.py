"""Sparse tabular action-value estimate over the discretised state space.

States are integer triples ``(price_steps, inventory, steps_remaining)``; the
table stores one row of ``n_actions`` values per visited state and treats
every absent entry as zero.

Checkpoint layout (all little-endian)::

    offset  size  field
    0       8     magic b"MMQTABLE"
    8       4     uint32 format version (currently 1)
    12      32    SHA-256 of the ModelParams canonical listing (zeros if unknown)
    44      4     uint32 N (steps per episode)
    48      4     uint32 n_actions
    52      8     uint64 record count R
    60      24*R  records: int32 price_steps, int32 inventory,
                  int32 steps_remaining, int32 action, float64 value
"""
from __future__ import annotations

import math
import struct
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .agents import ActionGrid, GridPolicy
from .env import ModelParams, Observation, observe
from .errors import ConfigError, FormatError, NumericError, VersionError

TABLE_MAGIC = b"MMQTABLE"
TABLE_VERSION = 1
_HEADER = struct.Struct("<8sI32sIIQ")
RECORD_DTYPE = np.dtype(
    [
        ("price_steps", "<i4"),
        ("inventory", "<i4"),
        ("steps_remaining", "<i4"),
        ("action", "<i4"),
        ("value", "<f8"),
    ]
)


class StateKey(NamedTuple):
    price_steps: int
    inventory: int
    steps_remaining: int


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def discretize(obs: Observation, params: ModelParams) -> StateKey:
    ds = params.price_step
    price_steps = round_half_away((obs.mid_price - params.s0) / ds) if ds > 0 else 0
    return StateKey(price_steps, int(obs.inventory), round_half_away(obs.time_left / params.dt))


def state_count_bound(n_steps: int, n_actions: int, include_terminal: bool = True) -> int:
    """Upper bound on table entries: ``(2N+1)**2 * (N+1) * n_a``.

    ``include_terminal=False`` uses ``N`` for the last factor instead, the
    variant that yields 675,364,200 for N=200 and 21 actions.
    """
    return (2 * n_steps + 1) ** 2 * (n_steps + (1 if include_terminal else 0)) * n_actions


class QTable:
    """Zero-initialised sparse map ``(StateKey, action) -> value``."""

    def __init__(self, n_actions: int = 21, n_steps: int | None = None, params_hash: bytes | None = None):
        self.n_actions = int(n_actions)
        self.n_steps = n_steps
        self.params_hash = params_hash
        self.rows: dict[StateKey, list[float]] = {}

    @classmethod
    def for_params(cls, params: ModelParams, grid: ActionGrid) -> "QTable":
        return cls(grid.n_a, params.n_steps, params.params_hash())

    def row(self, key: StateKey) -> list[float]:
        """Mutable row for ``key``, created on first access."""
        r = self.rows.get(key)
        if r is None:
            r = self.rows[key] = [0.0] * self.n_actions
        return r

    def values(self, key: StateKey) -> list[float]:
        r = self.rows.get(key)
        return list(r) if r is not None else [0.0] * self.n_actions

    def lookup(self, key: StateKey, action: int) -> float:
        r = self.rows.get(key)
        return 0.0 if r is None else r[action]

    def store(self, key: StateKey, action: int, value: float) -> None:
        self.row(key)[action] = float(value)

    def max_value(self, key: StateKey) -> float:
        r = self.rows.get(key)
        return 0.0 if r is None else max(r)

    def items(self):
        for key, r in self.rows.items():
            for a, v in enumerate(r):
                yield key, a, v

    def __len__(self) -> int:
        return len(self.rows)

    def __eq__(self, other):
        if not isinstance(other, QTable):
            return NotImplemented
        return self.n_actions == other.n_actions and self.rows == other.rows


def lookup(table: QTable, key: StateKey, action: int) -> float:
    return table.lookup(key, action)


def td_update(
    table: QTable,
    key: StateKey,
    action: int,
    r: float,
    next_key: StateKey | None,
    alpha: float,
    gamma: float,
) -> float:
    """One Q-learning backup; returns the new value stored at ``(key, action)``.

    ``next_key`` of ``None`` or with ``steps_remaining == 0`` is terminal and
    bootstraps from zero.
    """
    if not math.isfinite(r):
        raise NumericError(f"non-finite reward {r!r}")
    terminal = next_key is None or next_key.steps_remaining == 0
    target = r + (0.0 if terminal else gamma * table.max_value(next_key))
    row = table.row(key)
    old = row[action]
    row[action] = new = old + alpha * (target - old)
    return new


def table_stats(table: QTable) -> dict:
    nonzero = [v for _, _, v in table.items() if v != 0.0]
    return {
        "states": len(table.rows),
        "nonzero_entries": len(nonzero),
        "min_value": min(nonzero) if nonzero else None,
        "max_value": max(nonzero) if nonzero else None,
    }


def _records(table: QTable) -> np.ndarray:
    rec = np.empty(len(table.rows) * table.n_actions, dtype=RECORD_DTYPE)
    i = 0
    for key, row in table.rows.items():
        for a, v in enumerate(row):
            rec[i] = (key.price_steps, key.inventory, key.steps_remaining, a, v)
            i += 1
    return rec


def save_table(table: QTable, path) -> None:
    rec = _records(table)
    header = _HEADER.pack(
        TABLE_MAGIC,
        TABLE_VERSION,
        table.params_hash or bytes(32),
        table.n_steps or 0,
        table.n_actions,
        len(rec),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(rec.tobytes())


def load_table(path) -> QTable:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: too short for a Q-table header ({len(data)} bytes)")
    magic, version, phash, n_steps, n_actions, count = _HEADER.unpack_from(data)
    if magic != TABLE_MAGIC:
        raise FormatError(f"{path}: not a Q-table checkpoint")
    if version != TABLE_VERSION:
        raise VersionError(f"{path}: Q-table format version {version}, expected {TABLE_VERSION}")
    body = data[_HEADER.size:]
    if len(body) != count * RECORD_DTYPE.itemsize:
        raise FormatError(f"{path}: expected {count} records, file is truncated or padded")
    rec = np.frombuffer(body, dtype=RECORD_DTYPE)
    table = QTable(n_actions, n_steps or None, None if phash == bytes(32) else phash)
    if count and (rec["action"].min() < 0 or rec["action"].max() >= n_actions):
        raise FormatError(f"{path}: action index out of range")
    for ps, inv, sr, a, v in rec.tolist():
        table.row(StateKey(ps, inv, sr))[a] = v
    return table


def export_table_text(table: QTable, path) -> None:
    """CSV rendering of the same records; values written with ``repr`` so they parse back exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"# mmlab-qtable version={TABLE_VERSION} n_steps={table.n_steps or 0} "
            f"n_actions={table.n_actions} params_hash={(table.params_hash or bytes(32)).hex()}\n"
        )
        fh.write("price_steps,inventory,steps_remaining,action,value\n")
        for key, a, v in table.items():
            fh.write(f"{key.price_steps},{key.inventory},{key.steps_remaining},{a},{v!r}\n")


def greedy_index(values) -> int:
    """Argmax with ties broken toward the lowest index."""
    best = 0
    best_v = values[0]
    for i in range(1, len(values)):
        if values[i] > best_v:
            best, best_v = i, values[i]
    return best


class TabularAgent(GridPolicy):
    """Greedy policy read from a :class:`QTable`.

    States never visited during training fall back to ``unseen_action``
    (the zero-offset action by default).
    """

    name = "tabular"

    def __init__(self, table: QTable, grid: ActionGrid, unseen_action: int | None = None):
        super().__init__(grid)
        self.table = table
        self.unseen_action = grid.middle if unseen_action is None else unseen_action

    def check_compatible(self, params):
        if self.table.n_actions != self.grid.n_a:
            raise ConfigError(
                f"Q-table has {self.table.n_actions} actions but the grid has {self.grid.n_a}"
            )
        if self.table.n_steps and self.table.n_steps != params.n_steps:
            raise ConfigError(
                f"Q-table was trained with N={self.table.n_steps}, environment has N={params.n_steps}"
            )

    def action(self, state, params):
        row = self.table.rows.get(discretize(observe(state, params), params))
        if row is None:
            return self.unseen_action
        return greedy_index(row)
