import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schemafuzz.choices import ChoiceSequence


def test_record_then_replay_identical_draws():
    rec = ChoiceSequence.recording(42)
    drawn = [rec.draw_integer(0, 100), rec.draw_bool(), rec.draw_magnitude(),
             rec.choose("abcdef"), rec.draw_unit_float()]
    rep = ChoiceSequence.replay(rec.bytes)
    replayed = [rep.draw_integer(0, 100), rep.draw_bool(), rep.draw_magnitude(),
                rep.choose("abcdef"), rep.draw_unit_float()]
    assert drawn == replayed
    assert not rep.overran


def test_zero_tape_decodes_to_minimums():
    cs = ChoiceSequence.replay(b"")
    assert cs.draw_integer(5, 90) == 5
    assert cs.draw_bool(0.99) is False
    assert cs.draw_magnitude() == 0
    assert cs.choose(["first", "second"]) == "first"
    assert cs.draw_unit_float() == 0.0
    assert cs.overran


def test_replay_exhaustion_pads_with_zeros():
    rec = ChoiceSequence.recording(1)
    rec.draw_integer(0, 255)
    rep = ChoiceSequence.replay(rec.bytes[:0])
    assert rep.draw_integer(0, 255) == 0
    assert rep.overran


def test_same_seed_same_tape():
    a = ChoiceSequence.recording(7)
    b = ChoiceSequence.recording(7)
    for cs in (a, b):
        cs.draw_integer(0, 10**9)
        cs.draw_magnitude()
    assert a.bytes == b.bytes


def test_sort_key_is_shortlex():
    assert ChoiceSequence.replay(b"\x05").sort_key() < ChoiceSequence.replay(b"\x00\x00").sort_key()
    assert ChoiceSequence.replay(b"\x00").sort_key() < ChoiceSequence.replay(b"\x01").sort_key()


def test_bad_modes():
    with pytest.raises(ValueError):
        ChoiceSequence("record")
    with pytest.raises(ValueError):
        ChoiceSequence("later")
    with pytest.raises(ValueError):
        ChoiceSequence.recording(0).draw_integer(3, 2)
    with pytest.raises(ValueError):
        ChoiceSequence.recording(0).choose([])


@given(seed=st.integers(0, 2**32), lo=st.integers(-50, 50), span=st.integers(0, 300))
@settings(max_examples=200)
def test_draw_integer_stays_in_range(seed, lo, span):
    cs = ChoiceSequence.recording(seed)
    value = cs.draw_integer(lo, lo + span)
    assert lo <= value <= lo + span
    assert ChoiceSequence.replay(cs.bytes).draw_integer(lo, lo + span) == value
