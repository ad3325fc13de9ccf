"""Per-class mask generation shared by server and clients.

Masks determine which prototype dimensions each class communicates.  Two
regimes:

* K*s <= d: every class gets its own contiguous block of s dimensions, so
  masks are pairwise disjoint and every pairwise Hamming distance is 2s, the
  maximum possible at fixed popcount.
* K*s > d: overlap is unavoidable.  Masks start as seeded uniform s-subsets
  and are then improved by greedy hill climbing on the minimum pairwise
  Hamming distance: repeatedly take the currently tightest pair, move one
  shared 1-bit of one of its masks to a position unused by both, and accept
  the move only if no distance drops below the current minimum.  The search
  stops after 10*K*d candidate moves or when no tightest pair can be
  improved.  Ties are always broken toward the lowest index.

Generation is deterministic in (K, d, s, seed); the set produced before the
local search is recorded so callers can verify the search never hurt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .prototypes import Mask

__all__ = [
    "MaskSet",
    "generate_masks",
    "min_pairwise_hamming",
    "format_mask_rows",
]


@dataclass(frozen=True)
class MaskSet:
    """One mask per class, each with popcount exactly s.

    ``seed`` is the generator seed for reproducibility, or None for sets
    rebuilt from the wire.  ``presearch_min_hamming`` is the minimum pairwise
    Hamming distance of the seeded starting point, before any local search
    (None when there are fewer than two classes).
    """

    masks: tuple[Mask, ...]
    d: int
    s: int
    seed: int | None
    presearch_min_hamming: int | None = None

    def __post_init__(self):
        for cls, mask in enumerate(self.masks):
            if mask.class_id != cls:
                raise ValueError("masks must be ordered by class id starting at 0")
            if mask.dim != self.d:
                raise ValueError(f"mask for class {cls} has dimension {mask.dim} != {self.d}")
            if mask.popcount != self.s:
                raise ValueError(f"mask for class {cls} has popcount {mask.popcount} != {self.s}")

    @property
    def n_classes(self) -> int:
        return len(self.masks)

    def for_class(self, class_id: int) -> Mask:
        return self.masks[class_id]

    def bit_matrix(self) -> np.ndarray:
        """(K, d) uint8 matrix, one row per class."""
        return np.stack([m.bits for m in self.masks])


def _pairwise_hamming(bits: np.ndarray) -> np.ndarray:
    """(K, K) matrix of pairwise Hamming distances for 0/1 rows."""
    b = bits.astype(np.int64)
    overlap = b @ b.T
    pop = b.sum(axis=1)
    return pop[:, None] + pop[None, :] - 2 * overlap


def min_pairwise_hamming(mask_set: MaskSet) -> int:
    """Exact minimum Hamming distance over all class pairs."""
    k = mask_set.n_classes
    if k < 2:
        raise ValueError("need at least two masks to compare")
    dist = _pairwise_hamming(mask_set.bit_matrix())
    off_diag = dist[np.triu_indices(k, k=1)]
    return int(off_diag.min())


def _improve_mask(
    bits: np.ndarray,
    dist: np.ndarray,
    a: int,
    b: int,
    floor: int,
    budget: int,
) -> tuple[bool, int]:
    """Try to widen pair (a, b) by moving one 1-bit of mask a.

    Candidate moves take a shared 1-position p to a position q where both
    masks are 0 (each such move widens the pair by 2); a move is accepted only
    if every distance from the modified mask stays >= floor.  Candidates are
    scanned in ascending (p, q) order, counted against the budget, and the
    first acceptable one wins.  Returns (accepted, remaining budget).
    """
    shared = np.flatnonzero((bits[a] == 1) & (bits[b] == 1))
    targets = np.flatnonzero((bits[a] == 0) & (bits[b] == 0))
    if len(targets) == 0:
        return False, budget
    k = bits.shape[0]
    others = np.arange(k) != a
    col = bits.astype(np.int64)
    target_delta = 1 - 2 * col[:, targets]  # (K, n_targets)
    for p in shared:
        if budget <= 0:
            return False, budget
        # distances from mask a to everyone after dropping bit p, per target q;
        # the whole scan is evaluated at once and charged against the budget
        budget -= len(targets)
        base_row = dist[a] + (2 * col[:, p] - 1)
        new_rows = base_row[:, None] + target_delta
        acceptable = np.flatnonzero(new_rows[others].min(axis=0) >= floor)
        if len(acceptable) == 0:
            continue
        j = int(acceptable[0])
        q = int(targets[j])
        bits[a, p] = 0
        bits[a, q] = 1
        new_row = new_rows[:, j]
        new_row[a] = 0
        dist[a, :] = new_row
        dist[:, a] = new_row
        return True, budget
    return False, budget


def generate_masks(n_classes: int, d: int, s: int, seed: int) -> MaskSet:
    """Build the per-class mask set for (n_classes, d, s), seeded."""
    if n_classes < 1:
        raise ValueError("need at least one class")
    if not 1 <= s <= d:
        raise ValueError(f"require 1 <= s <= d, got s={s}, d={d}")

    if n_classes * s <= d:
        # disjoint regime: contiguous block per class, maximal distances 2s
        bits = np.zeros((n_classes, d), dtype=np.uint8)
        for cls in range(n_classes):
            bits[cls, cls * s : (cls + 1) * s] = 1
        pre = 2 * s if n_classes >= 2 else None
        masks = tuple(Mask(cls, bits[cls]) for cls in range(n_classes))
        return MaskSet(masks, d=d, s=s, seed=seed, presearch_min_hamming=pre)

    rng = np.random.default_rng(seed)
    bits = np.zeros((n_classes, d), dtype=np.uint8)
    for cls in range(n_classes):
        bits[cls, np.sort(rng.choice(d, size=s, replace=False))] = 1

    if n_classes < 2:
        masks = tuple(Mask(cls, bits[cls]) for cls in range(n_classes))
        return MaskSet(masks, d=d, s=s, seed=seed, presearch_min_hamming=None)

    dist = _pairwise_hamming(bits)
    np.fill_diagonal(dist, 0)
    iu = np.triu_indices(n_classes, k=1)
    presearch = int(dist[iu].min())

    budget = 10 * n_classes * d
    improved = True
    while budget > 0 and improved:
        improved = False
        floor = int(dist[iu].min())
        tight = np.argwhere(np.triu(dist == floor, k=1))
        for a, b in tight:  # lexicographic order from argwhere
            accepted, budget = _improve_mask(bits, dist, int(a), int(b), floor, budget)
            if not accepted and budget > 0:
                accepted, budget = _improve_mask(bits, dist, int(b), int(a), floor, budget)
            if accepted:
                improved = True
                break
            if budget <= 0:
                break

    masks = tuple(Mask(cls, bits[cls]) for cls in range(n_classes))
    return MaskSet(masks, d=d, s=s, seed=seed, presearch_min_hamming=presearch)


def format_mask_rows(mask_set: MaskSet) -> str:
    """Human-readable dump: one row of d 0/1 characters per class."""
    return "\n".join("".join(str(int(b)) for b in m.bits) for m in mask_set.masks) + "\n"
