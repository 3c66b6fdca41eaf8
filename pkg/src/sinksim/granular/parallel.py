from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np

Kernel = Callable[[slice], tuple[np.ndarray, ...]]


class ChunkRunner:
    """Runs a row-wise contact kernel over fixed contiguous chunks.

    Chunk boundaries depend only on `chunk`, never on the thread count, and
    results are concatenated in chunk order, so every thread count gives the
    single-thread arrays bit for bit.
    """

    def __init__(self, threads: int = 1, chunk: int = 8192) -> None:
        if threads < 1:
            raise ValueError("threads must be >= 1")
        self.threads = threads
        self.chunk = chunk
        self._pool: Optional[ThreadPoolExecutor] = None

    def run(self, kernel: Kernel, count: int) -> tuple[np.ndarray, ...]:
        slices = [slice(a, min(a + self.chunk, count)) for a in range(0, count, self.chunk)]
        if not slices:
            return kernel(slice(0, 0))
        if self.threads == 1 or len(slices) == 1:
            parts = [kernel(s) for s in slices]
        else:
            if self._pool is None:
                self._pool = ThreadPoolExecutor(max_workers=self.threads)
            parts = list(self._pool.map(kernel, slices))
        if len(parts) == 1:
            return parts[0]
        return tuple(np.concatenate(cols) for cols in zip(*parts))

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self) -> ChunkRunner:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


SERIAL = ChunkRunner()
