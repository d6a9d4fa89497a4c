"""Replayable, shrinkable streams of random decisions.

Every random decision behind a generated test case is drawn through a
ChoiceSequence. In ``record`` mode fresh bytes come from a seeded PRNG and
are appended to the tape; in ``replay`` mode the tape is read back, so the
same bytes always rebuild the identical value. Reads past the end of a
replayed tape yield zero bytes, and all decoders map zero bytes to their
smallest result — which is what makes byte-level shrinking meaningful:
shortlex-smaller tapes decode to simpler values.
"""

from __future__ import annotations

import random

__all__ = ["ChoiceSequence"]


class ChoiceSequence:
    """The recorded randomness behind one test case.

    mode is "record" (drawing from ``rng``, growing the tape) or "replay"
    (reading an existing tape; exhaustion pads with zeros).
    """

    def __init__(self, mode: str, data: bytes = b"", rng: random.Random | None = None):
        if mode not in ("record", "replay"):
            raise ValueError(f"bad mode: {mode!r}")
        if mode == "record" and rng is None:
            raise ValueError("record mode needs an rng")
        self.mode = mode
        self._tape = bytearray(data)
        self.cursor = 0
        self._rng = rng
        self.overran = False  # replay read past the recorded tape

    @classmethod
    def recording(cls, seed: int) -> "ChoiceSequence":
        return cls("record", rng=random.Random(seed))

    @classmethod
    def from_rng(cls, rng: random.Random) -> "ChoiceSequence":
        return cls("record", rng=rng)

    @classmethod
    def replay(cls, data: bytes) -> "ChoiceSequence":
        return cls("replay", data=bytes(data))

    @property
    def bytes(self) -> bytes:
        return bytes(self._tape)

    def sort_key(self):
        """Shortlex key: shorter tapes, then lexicographically smaller, are simpler."""
        return (len(self._tape), bytes(self._tape))

    def _fetch(self, n: int) -> bytes:
        if n == 0:
            return b""
        if self.mode == "record":
            chunk = self._rng.getrandbits(8 * n).to_bytes(n, "big")
            self._tape.extend(chunk)
            self.cursor += n
            return chunk
        chunk = bytes(self._tape[self.cursor:self.cursor + n])
        if len(chunk) < n:
            self.overran = True
            chunk = chunk + b"\x00" * (n - len(chunk))
        self.cursor += n
        return chunk

    # --- decoders: zero bytes always give the smallest result ---

    def draw_bytes(self, n: int) -> bytes:
        return self._fetch(n)

    def draw_byte(self) -> int:
        return self._fetch(1)[0]

    def draw_integer(self, lo: int, hi: int) -> int:
        """Uniform-ish integer in [lo, hi]; all-zero bytes decode to lo."""
        if lo > hi:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        if span == 1:
            return lo
        nbytes = max(1, ((span - 1).bit_length() + 7) // 8)
        raw = int.from_bytes(self._fetch(nbytes), "big")
        return lo + raw % span

    def draw_bool(self, p_true: float = 0.5) -> bool:
        """Biased coin; a zero byte is always False (the simpler outcome)."""
        byte = self.draw_byte()
        if byte == 0:
            return False
        return byte <= round(p_true * 255)

    def choose(self, options):
        """Pick one of a non-empty sequence; zero bytes pick the first."""
        if not options:
            raise ValueError("choose() from empty sequence")
        return options[self.draw_integer(0, len(options) - 1)]

    def draw_magnitude(self) -> int:
        """Non-negative integer with a size-biased distribution.

        One byte picks the bit width (0-64), further bytes fill it. Zero
        bytes give 0; lowering the width byte shrinks the value range.
        """
        nbits = self.draw_byte() % 65
        if nbits == 0:
            return 0
        nbytes = (nbits + 7) // 8
        raw = int.from_bytes(self._fetch(nbytes), "big")
        return raw % (1 << nbits)

    def draw_unit_float(self) -> float:
        """Float in [0, 1); zero bytes give 0.0."""
        return int.from_bytes(self._fetch(7), "big") / (1 << 56)
