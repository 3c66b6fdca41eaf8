from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .vec import FloatArray, IntArray


def _zeros3() -> FloatArray:
    return np.zeros((0, 3))


@dataclass
class ContactLedger:
    """Per-contact spring history, sorted by int64 pair key.

    Particle pairs use `i * n + j` (i < j); particle-surface contacts use
    `particle * n_surfaces + surface`. After every substep the ledger holds
    exactly the contacts that were active in that substep.
    """

    keys: IntArray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    tangential: FloatArray = field(default_factory=_zeros3)
    rolling: FloatArray = field(default_factory=_zeros3)
    last_active_step: IntArray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.keys)

    def fetch(self, keys: Any) -> tuple[FloatArray, FloatArray]:
        """Stored springs for `keys` (sorted); zeros for contacts not yet recorded."""
        keys = np.asarray(keys, dtype=np.int64)
        spring = np.zeros((len(keys), 3))
        rolling = np.zeros((len(keys), 3))
        if len(self.keys) == 0 or len(keys) == 0:
            return spring, rolling
        pos = np.searchsorted(self.keys, keys)
        pos_c = np.minimum(pos, len(self.keys) - 1)
        hit = self.keys[pos_c] == keys
        spring[hit] = self.tangential[pos_c[hit]]
        rolling[hit] = self.rolling[pos_c[hit]]
        return spring, rolling

    def replace(self, keys: Any, tangential: Any, rolling: Any, step: int) -> None:
        """Store the active set of this substep; anything not listed is dropped."""
        keys = np.asarray(keys, dtype=np.int64)
        if len(keys) > 1 and np.any(np.diff(keys) <= 0):
            raise ValueError("ledger keys must be strictly increasing")
        self.keys = keys.copy()
        self.tangential = np.array(tangential, dtype=np.float64).reshape(-1, 3)
        self.rolling = np.array(rolling, dtype=np.float64).reshape(-1, 3)
        self.last_active_step = np.full(len(keys), step, dtype=np.int64)

    def retain(self, keep: Any) -> None:
        self.keys = self.keys[keep]
        self.tangential = self.tangential[keep]
        self.rolling = self.rolling[keep]
        self.last_active_step = self.last_active_step[keep]

    def clear(self) -> None:
        self.replace(np.zeros(0, dtype=np.int64), _zeros3(), _zeros3(), 0)

    def copy(self) -> ContactLedger:
        return ContactLedger(
            self.keys.copy(), self.tangential.copy(), self.rolling.copy(),
            self.last_active_step.copy(),
        )
