import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schemafuzz.choices import ChoiceSequence
from schemafuzz.errors import UnsupportedPattern
from schemafuzz.patterns import (
    compile_checked,
    generate_from_pattern,
    parse_pattern,
    pattern_is_supported,
)

SUPPORTED = [
    "^4[0-9]{15}$",
    "^a$",
    "a{2,3}",
    "b|c",
    "^(red|green|blue)-[0-9]{2}$",
    "x[yz]*",
    "[a-f0-9]{8}",
    "^[A-Z][a-z]+( [A-Z][a-z]+)?$",
    "a+b?c*",
    "\\d{3}-\\d{4}",
    "[^0-9]+",
    "^\\w+@\\w+\\.(com|org)$",
    ".{2,5}",
    "^$",
    "",
]

UNSUPPORTED = [
    "(?=lookahead)",
    "(?P<name>x)",
    "back\\1reference",
    "a**",
    "(unclosed",
    "[unclosed",
    "a{2,1}",
    "\\p{L}+",
]


@pytest.mark.parametrize("pattern", SUPPORTED)
def test_supported_patterns_parse(pattern):
    parse_pattern(pattern)
    assert pattern_is_supported(pattern)


@pytest.mark.parametrize("pattern", UNSUPPORTED)
def test_unsupported_patterns_rejected(pattern):
    with pytest.raises(UnsupportedPattern):
        compile_checked(pattern)


def test_payment_card_pattern():
    # sixteen digits starting with 4
    for seed in range(50):
        value = generate_from_pattern("^4[0-9]{15}$", ChoiceSequence.recording(seed))
        assert len(value) == 16
        assert value[0] == "4"
        assert value.isdigit()


def test_single_sentence_language():
    assert generate_from_pattern("^a$", ChoiceSequence.recording(0)) == "a"


def test_counted_repeat_language_membership():
    language = {"aa", "aaa"}
    seen = set()
    for seed in range(40):
        value = generate_from_pattern("a{2,3}", ChoiceSequence.recording(seed))
        assert value in language
        seen.add(value)
    assert seen == language  # both sentences reachable


def test_generation_is_replayable():
    cs = ChoiceSequence.recording(9)
    value = generate_from_pattern("^(red|green|blue)-[0-9]{2}$", cs)
    assert generate_from_pattern("^(red|green|blue)-[0-9]{2}$",
                                 ChoiceSequence.replay(cs.bytes)) == value


@pytest.mark.parametrize("pattern", SUPPORTED)
def test_generated_strings_always_match(pattern):
    compiled = re.compile(pattern)
    for seed in range(25):
        value = generate_from_pattern(pattern, ChoiceSequence.recording(seed))
        assert compiled.search(value) is not None, (pattern, value)


@given(seed=st.integers(0, 2**31))
@settings(max_examples=150)
def test_character_class_generation(seed):
    value = generate_from_pattern("[a-cx-z0-3]{1,4}", ChoiceSequence.recording(seed))
    assert 1 <= len(value) <= 4
    assert all(ch in "abcxyz0123" for ch in value)
