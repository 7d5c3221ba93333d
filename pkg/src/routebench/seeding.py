"""Deterministic random sub-streams.

Every random decision in a run draws from a stream derived from one of two
root seeds and a label path, e.g. ``derive_stream(env_seed, "mutation")`` or
``derive_stream(env_seed, "human", agent_id, day)``. The env seed feeds route
generation, mutation, human noise and the random baseline; the train seed
feeds policy initialisation and exploration.
"""

from __future__ import annotations

import hashlib

import numpy as np

ENV_LABELS = ("routegen", "mutation", "human", "random_baseline")
TRAIN_LABELS = ("policy_init", "exploration")


def _label_words(labels) -> list[int]:
    # repr() keeps types apart: derive(1, "3") != derive(1, 3)
    h = hashlib.blake2b(digest_size=16)
    for label in labels:
        token = repr(label).encode("utf-8")
        h.update(len(token).to_bytes(4, "little"))
        h.update(token)
    digest = h.digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def derive_seed(root_seed: int, *labels) -> np.random.SeedSequence:
    if not labels:
        raise ValueError("derive_stream needs at least one label")
    if root_seed < 0:
        raise ValueError("root seed must be non-negative")
    return np.random.SeedSequence([int(root_seed), *_label_words(labels)])


def derive_stream(root_seed: int, *labels) -> np.random.Generator:
    """Return an independent generator for ``(root_seed, labels...)``.

    Order-sensitive: ``derive_stream(s, "a", "b")`` and
    ``derive_stream(s, "b", "a")`` are different streams.
    """
    return np.random.Generator(np.random.PCG64(derive_seed(root_seed, *labels)))
