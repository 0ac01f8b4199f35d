"""Deterministic randomness for trials, provers and estimators.

Every trial owns a counter-based Philox stream keyed by ``(master seed,
trial index)``.  Within a trial, counter block 0 belongs to the verifier
(the fair coin) and counter block ``i + 1`` belongs to prover ``i``, so a
prover's random draws are a pure function of ``(seed, trial, prover)``:
reordering provers, re-chunking trials across workers, or replacing
another prover's state can never shift them.

Philox counters are independent by construction (no hashing involved),
and numpy's Philox implementation is pure integer arithmetic, so streams
reproduce bit-for-bit across platforms and numpy versions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1

# Each Philox counter value yields four 64-bit words; one block is plenty
# for the at-most-two draws any prover makes in a single trial.
BLOCK_WORDS = 4

__all__ = [
    "TrialStream",
    "derive_seed",
    "generator",
    "trial_uniforms",
    "uniforms",
]


def _raw_words(seed: int, trial: int, count: int) -> np.ndarray:
    bit_gen = np.random.Philox(
        counter=np.zeros(4, dtype=np.uint64),
        key=np.array([seed & _MASK64, trial & _MASK64], dtype=np.uint64),
    )
    return bit_gen.random_raw(count)


def _to_unit(raw: np.ndarray) -> np.ndarray:
    # Standard 53-bit mantissa conversion, identical to numpy's own.
    return (raw >> np.uint64(11)) * (2.0 ** -53)


def uniforms(seed: int, trial: int, count: int) -> np.ndarray:
    """`count` uniform [0, 1) draws from the stream keyed (seed, trial)."""
    return _to_unit(_raw_words(seed, trial, count))


def trial_uniforms(seed: int, trial: int, blocks: int) -> np.ndarray:
    """Uniform draws for one trial, shape ``(blocks + 1, 4)``.

    Row 0 is the verifier's block; row ``i + 1`` is prover ``i``'s block.
    """
    raw = _raw_words(seed, trial, BLOCK_WORDS * (blocks + 1))
    return _to_unit(raw).reshape(blocks + 1, BLOCK_WORDS)


@dataclass(frozen=True)
class TrialStream:
    """Handle for all randomness consumed by a single protocol trial."""

    seed: int
    trial: int = 0

    def uniforms(self, blocks: int) -> np.ndarray:
        return trial_uniforms(self.seed, self.trial, blocks)


def generator(seed: int, *path: int) -> np.random.Generator:
    """A one-off numpy Generator for non-trial randomness (e.g. instance
    generation), derived from ``seed`` and an optional integer path."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=path))


def derive_seed(seed: int, index: int) -> int:
    """A 64-bit child seed for sweep point ``index`` (stable, documented)."""
    state = np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)
    return int(state[0])
