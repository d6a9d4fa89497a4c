"""Byte-level choice-sequence shrinking.

Works purely on the recorded tape: a candidate is accepted when it is
shortlex-smaller than the current best and the failing predicate still
holds on replay. Moves, in the order applied: chunk deletion, window
zeroing, per-byte lowering, and big-endian window binary search (the pass
that lands numeric reproductions exactly on their boundary, e.g. the
smallest integer that still overflows). Evaluation count is capped; the
result is the best tape seen, a local minimum when the budget allows.
"""

from __future__ import annotations

from typing import Callable

from .errors import NotReproducible

DEFAULT_SHRINK_BUDGET = 2000


def shortlex_key(data: bytes):
    return (len(data), data)


class _Shrinker:
    def __init__(self, initial: bytes, predicate: Callable[[bytes], bool], budget: int):
        self.best = bytes(initial)
        self.predicate = predicate
        self.budget = budget
        self.calls = 0
        self.cache: dict[bytes, bool] = {}

    @property
    def exhausted(self) -> bool:
        return self.calls >= self.budget

    def check(self, candidate: bytes) -> bool:
        if candidate in self.cache:
            return self.cache[candidate]
        if self.exhausted:
            return False
        self.calls += 1
        try:
            outcome = bool(self.predicate(candidate))
        except Exception:
            outcome = False  # broken replays are simply not improvements
        self.cache[candidate] = outcome
        return outcome

    def consider(self, candidate: bytes) -> bool:
        if shortlex_key(candidate) >= shortlex_key(self.best):
            return False
        if self.check(candidate):
            self.best = candidate
            return True
        return False

    # --- passes ---

    def delete_chunks(self) -> bool:
        improved = False
        size = max(1, len(self.best) // 2)
        while size >= 1:
            start = len(self.best) - size
            while start >= 0:
                if self.exhausted:
                    return improved
                candidate = self.best[:start] + self.best[start + size:]
                if self.consider(candidate):
                    improved = True
                    start = min(start, len(self.best) - size)
                else:
                    start -= size
            size //= 2
        return improved

    def zero_windows(self) -> bool:
        improved = False
        for size in (8, 4, 2, 1):
            start = 0
            while start + size <= len(self.best):
                if self.exhausted:
                    return improved
                window = self.best[start:start + size]
                if any(window):
                    candidate = (self.best[:start] + b"\x00" * size
                                 + self.best[start + size:])
                    if self.consider(candidate):
                        improved = True
                start += size
        return improved

    def lower_bytes(self) -> bool:
        improved = False
        index = 0
        while index < len(self.best):
            if self.exhausted:
                return improved
            current = self.best[index]
            if current > 0:
                best_value = self._binary_lower_byte(index, current)
                if best_value < current:
                    improved = True
            index += 1
        return improved

    def _binary_lower_byte(self, index: int, current: int) -> int:
        def with_value(value: int) -> bytes:
            return self.best[:index] + bytes([value]) + self.best[index + 1:]

        if self.consider(with_value(0)):
            return 0
        lo, hi = 0, current  # predicate false at lo, true at hi
        while hi - lo > 1 and not self.exhausted:
            mid = (lo + hi) // 2
            if self.consider(with_value(mid)):
                hi = mid
            else:
                lo = mid
        return hi

    def binary_lower_windows(self) -> bool:
        improved = False
        for size in (8, 4, 2):
            start = 0
            while start + size <= len(self.best):
                if self.exhausted:
                    return improved
                if self._binary_lower_window(start, size):
                    improved = True
                start += 1
        return improved

    def _binary_lower_window(self, start: int, size: int) -> bool:
        current = int.from_bytes(self.best[start:start + size], "big")
        if current == 0:
            return False

        def with_value(value: int) -> bytes:
            return (self.best[:start] + value.to_bytes(size, "big")
                    + self.best[start + size:])

        if self.consider(with_value(0)):
            return True
        lo, hi = 0, current
        improved = False
        while hi - lo > 1 and not self.exhausted:
            mid = (lo + hi) // 2
            if self.consider(with_value(mid)):
                hi = mid
                improved = True
            else:
                lo = mid
        return improved

    def run(self) -> bytes:
        while not self.exhausted:
            improved = self.delete_chunks()
            improved |= self.zero_windows()
            improved |= self.lower_bytes()
            improved |= self.binary_lower_windows()
            if not improved:
                break
        return self.best


def shrink_failure(data: bytes, failing_predicate: Callable[[bytes], bool],
                   max_evaluations: int = DEFAULT_SHRINK_BUDGET) -> bytes:
    """Smallest tape (under the shortlex order) still satisfying the predicate.

    Raises NotReproducible when the original tape no longer fails on replay.
    """
    shrinker = _Shrinker(bytes(data), failing_predicate, max_evaluations)
    if not shrinker.check(bytes(data)):
        raise NotReproducible("failure did not reproduce on replay of the original tape")
    return shrinker.run()
