"""A conservative regex subset: parse, match, and generate strings from it.

Supported constructs: literals, escapes, character classes, ``.``, ``^``/``$``
anchors at branch edges, alternation, non-capturing and capturing groups, and
the ``*``, ``+``, ``?``, ``{m}``, ``{m,}``, ``{m,n}`` quantifiers. This subset
behaves identically under Python's ``re`` and ECMA engines, so matching is
delegated to ``re`` once a pattern has passed the parser. Anything outside
the subset (backreferences, lookaround, inline flags, mid-branch anchors)
raises UnsupportedPattern so callers can fall back to generate-then-filter.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .choices import ChoiceSequence
from .errors import UnsupportedPattern

# Universe for '.', negated classes and negated escapes: printable ASCII.
_UNIVERSE = tuple(range(0x20, 0x7F))
_MAX_UNBOUNDED_REPEAT = 8

_CLASS_ESCAPES = {
    "d": tuple(range(ord("0"), ord("9") + 1)),
    "w": tuple(range(ord("0"), ord("9") + 1))
    + tuple(range(ord("A"), ord("Z") + 1))
    + tuple(range(ord("a"), ord("z") + 1))
    + (ord("_"),),
    "s": (0x20, 0x09, 0x0A, 0x0D, 0x0C, 0x0B),
}


@dataclass
class _Lit:
    codepoint: int


@dataclass
class _Class:
    codepoints: tuple  # sorted, deduplicated


@dataclass
class _Concat:
    parts: list


@dataclass
class _Alt:
    branches: list


@dataclass
class _Repeat:
    node: object
    lo: int
    hi: int | None  # None = unbounded


@dataclass
class _Empty:
    pass


class _Parser:
    def __init__(self, pattern: str):
        self.pattern = pattern
        self.pos = 0

    def fail(self, message: str):
        raise UnsupportedPattern(f"{message} at position {self.pos} in {self.pattern!r}")

    def peek(self):
        return self.pattern[self.pos] if self.pos < len(self.pattern) else None

    def take(self):
        ch = self.peek()
        if ch is None:
            self.fail("unexpected end of pattern")
        self.pos += 1
        return ch

    def parse(self):
        node = self.parse_alternation(top=True)
        if self.pos != len(self.pattern):
            self.fail("unbalanced ')'")
        return node

    def parse_alternation(self, top=False):
        branches = [self.parse_branch(top)]
        while self.peek() == "|":
            self.take()
            branches.append(self.parse_branch(top))
        if len(branches) == 1:
            return branches[0]
        return _Alt(branches)

    def parse_branch(self, top):
        # Anchors are only meaningful (and only supported) at branch edges.
        if self.peek() == "^":
            self.take()
        parts = []
        while True:
            ch = self.peek()
            if ch is None or ch == "|" or ch == ")":
                break
            if ch == "$":
                # Allowed only if the branch ends right after it.
                self.take()
                nxt = self.peek()
                if nxt is not None and nxt not in "|)":
                    self.fail("'$' not at end of branch")
                break
            if ch == "^":
                self.fail("'^' not at start of branch")
            parts.append(self.parse_quantified())
        if not parts:
            return _Empty()
        if len(parts) == 1:
            return parts[0]
        return _Concat(parts)

    def parse_quantified(self):
        atom = self.parse_atom()
        ch = self.peek()
        if ch == "*":
            self.take()
            node = _Repeat(atom, 0, None)
        elif ch == "+":
            self.take()
            node = _Repeat(atom, 1, None)
        elif ch == "?":
            self.take()
            node = _Repeat(atom, 0, 1)
        elif ch == "{":
            counted = self.try_parse_counted()
            if counted is None:
                return atom  # bare '{': position was reset, next atom reads it as a literal
            lo, hi = counted
            node = _Repeat(atom, lo, hi)
        else:
            return atom
        if self.peek() in ("*", "+", "?"):
            self.fail("stacked quantifiers unsupported")
        return node

    def try_parse_counted(self):
        """Parse {m}, {m,}, {m,n} after the opening brace; None if not counted."""
        start = self.pos
        self.take()  # '{'
        digits = ""
        while self.peek() is not None and self.peek().isdigit():
            digits += self.take()
        if not digits:
            self.pos = start
            return None
        lo = int(digits)
        if self.peek() == "}":
            self.take()
            return lo, lo
        if self.peek() != ",":
            self.pos = start
            return None
        self.take()
        digits2 = ""
        while self.peek() is not None and self.peek().isdigit():
            digits2 += self.take()
        if self.peek() != "}":
            self.pos = start
            return None
        self.take()
        hi = int(digits2) if digits2 else None
        if hi is not None and hi < lo:
            self.fail("bad counted repeat bounds")
        return lo, hi

    def parse_atom(self):
        ch = self.take()
        if ch == "(":
            if self.peek() == "?":
                self.take()
                if self.peek() != ":":
                    self.fail("lookaround/inline groups unsupported")
                self.take()
            node = self.parse_alternation()
            if self.peek() != ")":
                self.fail("missing ')'")
            self.take()
            return node
        if ch == "[":
            return self.parse_class()
        if ch == ".":
            return _Class(tuple(cp for cp in _UNIVERSE))
        if ch == "\\":
            return self.parse_escape(in_class=False)
        if ch in "*+?{":
            if ch == "{":
                return _Lit(ord("{"))  # bare '{' with no count is a literal
            self.fail(f"dangling quantifier {ch!r}")
        if ch in ")]":
            if ch == "]":
                return _Lit(ord("]"))
            self.fail("unbalanced ')'")
        return _Lit(ord(ch))

    def parse_escape(self, in_class):
        ch = self.take()
        if ch in _CLASS_ESCAPES:
            return _Class(tuple(sorted(_CLASS_ESCAPES[ch])))
        if ch.upper() == ch and ch.lower() in _CLASS_ESCAPES:
            allowed = set(_CLASS_ESCAPES[ch.lower()])
            return _Class(tuple(cp for cp in _UNIVERSE if cp not in allowed))
        if ch in ".^$*+?()[]{}|\\/-":
            return _Lit(ord(ch))
        if ch == "n":
            return _Lit(0x0A)
        if ch == "t":
            return _Lit(0x09)
        if ch == "r":
            return _Lit(0x0D)
        if ch == "x":
            hexits = self.take() + self.take()
            try:
                return _Lit(int(hexits, 16))
            except ValueError:
                self.fail("bad \\x escape")
        self.fail(f"unsupported escape \\{ch}")

    def parse_class(self):
        negated = False
        if self.peek() == "^":
            self.take()
            negated = True
        members: set[int] = set()
        first = True
        while True:
            ch = self.peek()
            if ch is None:
                self.fail("unterminated character class")
            if ch == "]" and not first:
                self.take()
                break
            first = False
            if ch == "\\":
                self.take()
                atom = self.parse_escape(in_class=True)
                if isinstance(atom, _Lit):
                    lo_cp = atom.codepoint
                else:
                    members.update(atom.codepoints)
                    continue
            else:
                lo_cp = ord(self.take())
            if self.peek() == "-" and self.pos + 1 < len(self.pattern) and self.pattern[self.pos + 1] != "]":
                self.take()
                if self.peek() == "\\":
                    self.take()
                    hi_atom = self.parse_escape(in_class=True)
                    if not isinstance(hi_atom, _Lit):
                        self.fail("class range with multi-char escape")
                    hi_cp = hi_atom.codepoint
                else:
                    hi_cp = ord(self.take())
                if hi_cp < lo_cp:
                    self.fail("reversed class range")
                members.update(range(lo_cp, hi_cp + 1))
            else:
                members.add(lo_cp)
        if negated:
            members = {cp for cp in _UNIVERSE} - members
        if not members:
            self.fail("empty character class")
        return _Class(tuple(sorted(members)))


def parse_pattern(pattern: str):
    """Parse into the internal AST; raises UnsupportedPattern outside the subset."""
    return _Parser(pattern).parse()


def compile_checked(pattern: str) -> "re.Pattern[str]":
    """Subset-check the pattern, then hand matching to ``re``."""
    parse_pattern(pattern)
    try:
        return re.compile(pattern)
    except re.error as exc:  # parser accepted something re dislikes; treat as unsupported
        raise UnsupportedPattern(f"re rejected {pattern!r}: {exc}") from exc


def pattern_is_supported(pattern: str) -> bool:
    try:
        compile_checked(pattern)
        return True
    except UnsupportedPattern:
        return False


def _generate_node(node, cs: ChoiceSequence, out: list):
    if isinstance(node, _Empty):
        return
    if isinstance(node, _Lit):
        out.append(chr(node.codepoint))
    elif isinstance(node, _Class):
        out.append(chr(cs.choose(node.codepoints)))
    elif isinstance(node, _Concat):
        for part in node.parts:
            _generate_node(part, cs, out)
    elif isinstance(node, _Alt):
        _generate_node(cs.choose(node.branches), cs, out)
    elif isinstance(node, _Repeat):
        hi = node.hi if node.hi is not None else node.lo + _MAX_UNBOUNDED_REPEAT
        count = cs.draw_integer(node.lo, hi)
        for _ in range(count):
            _generate_node(node.node, cs, out)
    else:  # pragma: no cover
        raise AssertionError(f"unknown node {node!r}")


def generate_from_pattern(pattern: str, cs: ChoiceSequence) -> str:
    """A string in the pattern's language, drawn through ``cs``.

    The result is verified against the module's own (re-backed) matcher;
    a mismatch means a parser bug and raises rather than mis-generating.
    """
    ast = parse_pattern(pattern)
    matcher = compile_checked(pattern)
    out: list = []
    _generate_node(ast, cs, out)
    result = "".join(out)
    if matcher.search(result) is None:  # pragma: no cover - guarded invariant
        raise AssertionError(f"generated {result!r} does not match {pattern!r}")
    return result
