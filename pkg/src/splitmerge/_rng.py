"""Deterministic, addressable random-number streams.

Every stochastic routine in this package draws from a generator obtained via
:func:`stream`, keyed by a master seed plus a structured path (replicate
index, purpose tag, ...).  Streams with different paths are statistically
independent, and a given path always yields the same generator regardless of
the order in which streams are created or which thread asks for them.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["stream"]

_MASK64 = (1 << 64) - 1


def _path_component(tag: int | str) -> int:
    """Map one path component to a 64-bit integer key.

    Non-negative integers pass through unchanged; strings are hashed with
    SHA-256 so that distinct tags get well-separated keys.  Anything else
    (bools included) is rejected rather than silently coerced.
    """
    if isinstance(tag, bool):
        raise TypeError("boolean stream tags are ambiguous; use an int or str")
    if isinstance(tag, (int, np.integer)):
        value = int(tag)
        if value < 0:
            raise ValueError(f"integer stream tags must be non-negative, got {value}")
        return value & _MASK64
    if not isinstance(tag, str):
        raise TypeError(f"stream tags must be ints or strings, got {tag!r}")
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stream(master_seed: int, *path: int | str) -> np.random.Generator:
    """Return the PCG64 generator addressed by ``(master_seed, *path)``.

    Parameters
    ----------
    master_seed:
        Non-negative integer selecting the experiment-wide seed.
    *path:
        Arbitrary mix of non-negative ints and string tags identifying the
        consumer (e.g. ``stream(seed, replicate, "data")``).

    Returns
    -------
    numpy.random.Generator
        A fresh, independently seeded generator.  Calling again with the
        same arguments returns a generator that produces the identical
        sequence.
    """
    if not isinstance(master_seed, (int, np.integer)) or isinstance(master_seed, bool):
        raise TypeError("master_seed must be an integer")
    if master_seed < 0:
        raise ValueError(f"master_seed must be non-negative, got {master_seed}")
    key = tuple(_path_component(tag) for tag in path)
    seq = np.random.SeedSequence(int(master_seed), spawn_key=key)
    return np.random.default_rng(seq)
