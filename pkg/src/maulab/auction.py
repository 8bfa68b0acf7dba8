"""Sealed-bid multi-unit auction clearing: bid ranking and the three payment rules.

All functions are pure given an explicit tie-break random stream. Bids arrive
as an (n_bidders, k) matrix; each row is canonicalized weakly decreasing
before ranking (row order within a bidder never affects the outcome).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WinnerEntry:
    bidder_id: int
    unit_slot: int
    winning_bid: float
    payment: float


@dataclass(frozen=True)
class AuctionOutcome:
    winners: tuple[WinnerEntry, ...]
    clearing_price: float | None  # uniform-price only
    revenue: float


def canonicalize(bids: np.ndarray) -> np.ndarray:
    """Sort each bidder's row weakly decreasing."""
    return -np.sort(-np.asarray(bids, dtype=float), axis=1)


def rank_bids(bids: np.ndarray, K: int, tie_rng: np.random.Generator) -> list[tuple[int, int]]:
    """Rank every (bidder, slot) by bid descending; ties broken by a uniform
    random permutation drawn from tie_rng. The first K entries win."""
    b = canonicalize(bids)
    n, k = b.shape
    if K > n * k:
        raise ValueError(f"K={K} exceeds {n * k} submitted bids")
    flat = b.ravel()
    perm = tie_rng.permutation(n * k)
    # lexsort: last key is primary. Sort by bid descending, then by the
    # random permutation position for equal bids.
    order = np.lexsort((perm, -flat))
    return [(int(i // k), int(i % k)) for i in order]


def _winning_slots(ranked: list[tuple[int, int]], K: int) -> list[tuple[int, int]]:
    return ranked[:K]


def clear_dp(bids: np.ndarray, K: int, tie_rng: np.random.Generator) -> AuctionOutcome:
    """Discriminatory (pay-as-bid): each winning slot pays its own bid."""
    b = canonicalize(bids)
    ranked = rank_bids(b, K, tie_rng)
    winners = tuple(
        WinnerEntry(i, j, float(b[i, j]), float(b[i, j])) for i, j in _winning_slots(ranked, K)
    )
    return AuctionOutcome(winners, None, revenue_of(winners))


def clear_gsp(bids: np.ndarray, K: int, tie_rng: np.random.Generator) -> AuctionOutcome:
    """Generalized second-price: each winning slot pays the highest bid ranked
    below it that belongs to a different bidder (0 if none exists)."""
    b = canonicalize(bids)
    ranked = rank_bids(b, K, tie_rng)
    winners = []
    for pos, (i, j) in enumerate(_winning_slots(ranked, K)):
        payment = 0.0
        for i2, j2 in ranked[pos + 1:]:
            if i2 != i:
                payment = float(b[i2, j2])
                break
        winners.append(WinnerEntry(i, j, float(b[i, j]), payment))
    winners = tuple(winners)
    return AuctionOutcome(winners, None, revenue_of(winners))


def clear_up(bids: np.ndarray, K: int, tie_rng: np.random.Generator) -> AuctionOutcome:
    """Uniform-price: every winner pays the highest losing ((K+1)-th) bid."""
    b = canonicalize(bids)
    ranked = rank_bids(b, K, tie_rng)
    if len(ranked) > K:
        i, j = ranked[K]
        price = float(b[i, j])
    else:
        price = 0.0
    winners = tuple(
        WinnerEntry(i, j, float(b[i, j]), price) for i, j in _winning_slots(ranked, K)
    )
    return AuctionOutcome(winners, price, revenue_of(winners))


_CLEAR = {"dp": clear_dp, "gsp": clear_gsp, "up": clear_up}


def clear(rule: str, bids: np.ndarray, K: int, tie_rng: np.random.Generator) -> AuctionOutcome:
    return _CLEAR[rule](bids, K, tie_rng)


def revenue_of(winners) -> float:
    return float(sum(w.payment for w in winners))


def revenue(outcome: AuctionOutcome) -> float:
    """Sum of payments made by all winning bidders."""
    return revenue_of(outcome.winners)


def efficiency_ratio(valuations: np.ndarray, outcome: AuctionOutcome, K: int) -> float:
    """Allocated value over the best attainable (sum of the K highest marginal
    values). Returns 1 when the denominator is 0."""
    v = canonicalize(valuations)
    allocated = sum(float(v[w.bidder_id, w.unit_slot]) for w in outcome.winners)
    best = float(np.sort(v.ravel())[::-1][:K].sum())
    if best == 0.0:
        return 1.0
    return min(allocated / best, 1.0)


def efficiency_gap(valuations: np.ndarray, outcome: AuctionOutcome, K: int) -> float:
    """Difference form: top-K value sum minus allocated value sum (0 = efficient)."""
    v = canonicalize(valuations)
    allocated = sum(float(v[w.bidder_id, w.unit_slot]) for w in outcome.winners)
    best = float(np.sort(v.ravel())[::-1][:K].sum())
    return max(best - allocated, 0.0)
