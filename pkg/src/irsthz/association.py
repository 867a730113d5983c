"""Pairing uplink IRSs with downlink IRSs.

Every uplink IRS ``l`` is paired with at most one downlink IRS ``m``; the pair
is worth ``R[l, m]``, the end-to-end rate of routing the devices behind ``l``
to the devices behind ``m``. Four strategies are provided: deferred
acceptance (uplink side proposing), exhaustive search over permutations, a
one-shot greedy baseline and a uniformly random pairing. Each returns an
:class:`AssociationMatrix` carrying the signalling cost ``tau`` in slots.

Ties are broken towards the lower index everywhere; a downlink IRS that
receives an offer equal to the one it holds keeps the incumbent.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

ALGORITHMS = ("gs", "es", "greedy", "random")


@dataclass(frozen=True)
class RateMatrix:
    """``L x M`` pair rates in bits/s/Hz, before signalling overhead."""

    R: np.ndarray
    ul_sums: np.ndarray | None = None
    dl_sums: np.ndarray | None = None

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if not np.all(np.isfinite(R)):
            raise ValueError("rates must be finite")
        if np.any(R < 0):
            raise ValueError("rates must be non-negative")
        R.setflags(write=False)
        object.__setattr__(self, "R", R)

    @property
    def L(self) -> int:
        return self.R.shape[0]

    @property
    def M(self) -> int:
        return self.R.shape[1]


def rate_matrix(ul_sums, dl_sums) -> RateMatrix:
    """``R[l, m] = min(ul_sums[l], dl_sums[m])``."""
    ul = np.asarray(ul_sums, dtype=float).reshape(-1)
    dl = np.asarray(dl_sums, dtype=float).reshape(-1)
    if np.any(ul < 0) or np.any(dl < 0):
        raise ValueError("sum rates must be non-negative")
    return RateMatrix(np.minimum(ul[:, None], dl[None, :]), ul, dl)


def _as_rates(R) -> RateMatrix:
    return R if isinstance(R, RateMatrix) else RateMatrix(R)


@dataclass(frozen=True)
class PriorityMatrices:
    ur_pref: np.ndarray   # L x M, DR indices best first
    dr_pref: np.ndarray   # M x L, UR indices best first


def _descending(rows: np.ndarray) -> np.ndarray:
    # stable sort on the negated rates keeps equal entries in index order
    return np.argsort(-rows, axis=1, kind="stable")


def build_preferences(R) -> PriorityMatrices:
    R = _as_rates(R).R
    return PriorityMatrices(_descending(R), _descending(R.T))


@dataclass
class AssociationMatrix:
    """Partial one-to-one map from uplink IRS to downlink IRS.

    Attributes:
        pairs: ``{l: m}``.
        tau: signalling slots consumed.
        algorithm: tag of the strategy that produced it.
        proposals: offers made (deferred acceptance only).
        evaluations: permutations scored (exhaustive search only).
    """

    pairs: dict
    tau: int
    algorithm: str
    proposals: int = 0
    evaluations: int = 0
    L: int = 0
    M: int = 0

    def __post_init__(self):
        self.pairs = {int(l): int(m) for l, m in sorted(self.pairs.items())}
        if len(set(self.pairs.values())) != len(self.pairs):
            raise ValueError(f"pairing is not one-to-one: {self.pairs}")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")

    def as_matrix(self) -> np.ndarray:
        psi = np.zeros((self.L, self.M), dtype=int)
        for l, m in self.pairs.items():
            psi[l, m] = 1
        return psi

    def partner_of_dr(self) -> dict:
        return {m: l for l, m in self.pairs.items()}

    def total(self, R) -> float:
        """Sum of the paired rates, accumulated exactly in uplink order."""
        R = _as_rates(R).R
        return math.fsum(R[l, m] for l, m in self.pairs.items())

    def to_list(self) -> list:
        return [[l, m] for l, m in self.pairs.items()]


def gale_shapley(prefs: PriorityMatrices, R) -> AssociationMatrix:
    """Deferred acceptance with the uplink IRSs proposing.

    Free uplink IRSs propose in index order down their preference lists. A
    downlink IRS holding an offer swaps only for a strictly higher rate.
    ``tau`` is the number of proposals made.
    """
    R = _as_rates(R).R
    L, M = R.shape
    next_choice = [0] * L
    holder = {}                 # m -> l
    free = deque(range(L))
    proposals = 0
    while free:
        l = free.popleft()
        if next_choice[l] >= M:
            continue            # exhausted its list, stays single
        m = int(prefs.ur_pref[l, next_choice[l]])
        next_choice[l] += 1
        proposals += 1
        current = holder.get(m)
        if current is None:
            holder[m] = l
        elif R[l, m] > R[current, m]:
            holder[m] = l
            free.appendleft(current)
        else:
            free.appendleft(l)
    pairs = {l: m for m, l in holder.items()}
    return AssociationMatrix(pairs, proposals, "gs", proposals=proposals, L=L, M=M)


@lru_cache(maxsize=16)
def _all_injections(n_from: int, n_to: int) -> np.ndarray:
    """Every injective map ``range(n_from) -> range(n_to)``, lexicographic."""
    return np.array(list(permutations(range(n_to), n_from)), dtype=np.int64).reshape(-1, n_from)


def exhaustive(R, cap: int = 9) -> AssociationMatrix:
    """Best pairing by enumerating every permutation.

    When several pairings reach the maximum, the lexicographically first one
    is kept. ``tau`` equals the number of pairings scored; callers cap it to
    the coherence interval.
    """
    R = _as_rates(R).R
    L, M = R.shape
    if max(L, M) > cap:
        raise ValueError(f"exhaustive search over {max(L, M)}! pairings exceeds cap {cap}")
    transposed = L > M
    W = R.T if transposed else R
    n_from, n_to = W.shape
    maps = _all_injections(n_from, n_to)
    scores = W[np.arange(n_from), maps].sum(axis=1)
    best = scores.max()
    # float sums may disagree in the last bits; settle near-ties exactly
    near = np.flatnonzero(scores >= best - 1e-9 * max(abs(best), 1.0))
    exact = [math.fsum(W[np.arange(n_from), maps[i]]) for i in near]
    top = max(exact)
    winner = maps[near[exact.index(top)]]
    if transposed:
        pairs = {int(l): m for m, l in enumerate(winner)}
    else:
        pairs = {l: int(m) for l, m in enumerate(winner)}
    n = len(maps)
    return AssociationMatrix(pairs, n, "es", evaluations=n, L=L, M=M)


def _row_best(row: np.ndarray, allowed) -> int | None:
    best, best_val = None, -math.inf
    for m in allowed:
        if row[m] > best_val:
            best, best_val = m, row[m]
    return best


def greedy(R, rng: np.random.Generator) -> AssociationMatrix:
    """Every uplink IRS asks for its best downlink IRS at once; contested
    ones pick a winner uniformly at random, and the losers, in index order,
    take their best downlink IRS still free."""
    R = _as_rates(R).R
    L, M = R.shape
    choice = [int(np.argmax(R[l])) for l in range(L)]
    pairs, taken, losers = {}, set(), []
    for m in range(M):
        asking = [l for l in range(L) if choice[l] == m]
        if not asking:
            continue
        win = asking[int(rng.integers(len(asking)))] if len(asking) > 1 else asking[0]
        pairs[win] = m
        taken.add(m)
        losers.extend(l for l in asking if l != win)
    for l in sorted(losers):
        m = _row_best(R[l], [m for m in range(M) if m not in taken])
        if m is not None:
            pairs[l] = m
            taken.add(m)
    return AssociationMatrix(pairs, L, "greedy", L=L, M=M)


def random_assoc(L: int, M: int, rng: np.random.Generator) -> AssociationMatrix:
    """Uniformly random one-to-one pairing of size ``min(L, M)``."""
    if L <= M:
        pairs = {l: int(m) for l, m in enumerate(rng.permutation(M)[:L])}
    else:
        pairs = {int(l): m for m, l in enumerate(rng.permutation(L)[:M])}
    return AssociationMatrix(pairs, 1, "random", L=L, M=M)


def blocking_pairs(assoc: AssociationMatrix, R) -> list:
    """Pairs ``(l, m)`` that both strictly gain by leaving their partners."""
    R = _as_rates(R).R
    L, M = R.shape
    dr_partner = assoc.partner_of_dr()
    out = []
    for l in range(L):
        mine = R[l, assoc.pairs[l]] if l in assoc.pairs else -math.inf
        for m in range(M):
            if assoc.pairs.get(l) == m:
                continue
            theirs = R[dr_partner[m], m] if m in dr_partner else -math.inf
            if R[l, m] > mine and R[l, m] > theirs:
                out.append((l, m))
    return out


def is_stable(assoc: AssociationMatrix, R) -> bool:
    return not blocking_pairs(assoc, R)


def overhead_slots(algorithm: str, L: int, M: int, T: int, proposals: int | None = None) -> int:
    """Signalling slots charged to one association round.

    Deferred acceptance pays one slot per proposal, exhaustive search one per
    scored pairing (never more than ``T``), greedy one per uplink IRS, random
    a single slot.
    """
    if T <= 0:
        raise ValueError("coherence interval must be positive")
    if algorithm == "gs":
        if proposals is None:
            raise ValueError("deferred acceptance overhead needs the proposal count")
        return min(int(proposals), T)
    if algorithm == "es":
        lo, hi = min(L, M), max(L, M)
        return min(math.perm(hi, lo), T)
    if algorithm == "greedy":
        return min(L, T)
    if algorithm == "random":
        return min(1, T)
    raise ValueError(f"unknown association algorithm {algorithm!r}")


def associate(algorithm: str, R, rng: np.random.Generator | None = None, cap: int = 9) -> AssociationMatrix:
    """Dispatch on the algorithm tag."""
    R = _as_rates(R)
    if algorithm == "gs":
        return gale_shapley(build_preferences(R), R)
    if algorithm == "es":
        return exhaustive(R, cap)
    if algorithm == "greedy":
        return greedy(R, rng)
    if algorithm == "random":
        return random_assoc(R.L, R.M, rng)
    raise ValueError(f"unknown association algorithm {algorithm!r}")
