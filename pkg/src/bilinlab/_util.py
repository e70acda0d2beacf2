"""Small shared helpers: exponent coercion, seeding, worker counts."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

_MASK = (1 << 64) - 1


def as_exponent(q) -> float:
    """Coerce an exponent (number, Fraction, ``"inf"``, ``"2/3"``) to float."""
    if isinstance(q, str):
        s = q.strip().lower()
        if s in ("inf", "infinity", "oo", "∞"):
            return math.inf
        q = Fraction(s)
    q = float(q)
    if not q > 0:
        raise ValueError(f"exponent must be positive, got {q}")
    return q


def conjugate(q: float) -> float:
    """Hölder conjugate ``q'`` for ``q`` in ``[1, inf]``."""
    if q < 1:
        raise ValueError("conjugate exponent needs q >= 1")
    if q == 1:
        return math.inf
    if math.isinf(q):
        return 1.0
    return q / (q - 1)


def lq_norm(values, q: float) -> float:
    """``l^q`` (quasi)norm of a nonnegative or complex array."""
    v = np.abs(np.asarray(values, dtype=complex if np.iscomplexobj(values) else float)).ravel()
    if v.size == 0:
        return 0.0
    if math.isinf(q):
        return float(v.max())
    m = v.max()
    if m == 0:
        return 0.0
    return float(m * np.sum((v / m) ** q) ** (1.0 / q))


def splitmix64(state: int) -> tuple[int, int]:
    """One step of the splitmix64 generator; returns ``(output, new_state)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31), state


def derive_seeds(seed: int, count: int) -> list[int]:
    """Derive ``count`` child seeds from ``seed`` with splitmix64."""
    state = int(seed) & _MASK
    out = []
    for _ in range(count):
        z, state = splitmix64(state)
        out.append(z)
    return out


def worker_count() -> int:
    """Worker cap from ``BILINLAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("BILINLAB_THREADS", "1")))
    except ValueError:
        return 1


def ordered_map(fn, items):
    """Map ``fn`` over ``items``, possibly in threads, preserving order."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
