from hypothesis import given, strategies as st

import pytest

from qfattack.perturbation import (
    DEFAULT_CHARSET_STRING,
    Charset,
    Perturbation,
    Prompt,
    assemble,
    assemble_text,
    random_perturbation,
)

# splitmix64 reference outputs for seed 0; index = (u * 94) >> 64
REFERENCE_SEED0 = [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_default_charset_is_printable_ascii_no_whitespace():
    cs = Charset.default()
    assert len(cs) == 94
    assert cs.chars[0] == "!"
    assert cs.chars[-1] == "~"
    assert " " not in cs
    assert cs.as_string() == DEFAULT_CHARSET_STRING


def test_charset_from_spec():
    assert Charset.from_spec("default").chars == Charset.default().chars
    assert Charset.from_spec("abc").chars == ("a", "b", "c")


def test_charset_validation():
    with pytest.raises(ValueError):
        Charset("")
    with pytest.raises(ValueError):
        Charset(["ab"])
    with pytest.raises(ValueError):
        Charset("aa")


def test_prompt_validation():
    with pytest.raises(ValueError):
        Prompt("")
    with pytest.raises(ValueError):
        Prompt(" padded ")
    assert Prompt("ok").text == "ok"


def test_perturbation_check_against():
    cs = Charset.from_spec("abc")
    Perturbation("abc").check_against(cs, 3)
    with pytest.raises(ValueError):
        Perturbation("ab").check_against(cs, 3)
    with pytest.raises(ValueError):
        Perturbation("abz").check_against(cs, 3)
    with pytest.raises(ValueError):
        Perturbation("")


def test_assemble_joins_with_single_space():
    base = Prompt("A black bicycle against a brick wall")
    pert = Perturbation("E$9\\'")
    assert assemble(base, pert).text == "A black bicycle against a brick wall E$9\\'"
    assert assemble_text(base.text, pert.chars) == assemble(base, pert).text


def test_random_perturbation_golden_seed_zero():
    # first indices derived from the frozen reference words
    cs = Charset.default()
    expected_prefix = "".join(cs.chars[(u * 94) >> 64] for u in REFERENCE_SEED0)
    p = random_perturbation(0, cs, 5)
    assert p.chars[:3] == expected_prefix
    assert p.chars == "tI#|*"


def test_random_perturbation_rejects_zero_length():
    with pytest.raises(ValueError):
        random_perturbation(0, Charset.default(), 0)


@given(
    st.integers(min_value=0, max_value=(1 << 64) - 1),
    st.integers(min_value=1, max_value=12),
)
def test_random_perturbation_properties(seed, length):
    cs = Charset.from_spec("abcdef")
    p = random_perturbation(seed, cs, length)
    assert len(p) == length
    assert all(ch in cs for ch in p.chars)
    assert p.chars == random_perturbation(seed, cs, length).chars
