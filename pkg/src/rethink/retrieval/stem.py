"""Porter's suffix-stripping algorithm, used behind the optional BM25
stemming flag. Self-contained because the usual NLP packages are not a
dependency of this project."""

from __future__ import annotations

_VOWELS = "aeiou"


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Count of vowel-consonant sequences in [C](VC)^m[V]."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        vowel = not _is_consonant(stem, i)
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return (len(word) >= 2 and word[-1] == word[-2]
            and _is_consonant(word, len(word) - 1))


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    if (_is_consonant(word, len(word) - 3)
            and not _is_consonant(word, len(word) - 2)
            and _is_consonant(word, len(word) - 1)):
        return word[-1] not in "wxy"
    return False


def _replace(word: str, rules: list[tuple[str, str, int]]) -> str:
    # rules: (suffix, replacement, minimum measure of the stem); longest
    # matching suffix wins, mirroring the original algorithm's rule lists.
    for suffix, repl, min_m in sorted(rules, key=lambda r: -len(r[0])):
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if _measure(stem) > min_m:
                return stem + repl
            return word
    return word


def porter_stem(word: str) -> str:
    word = word.lower()
    if len(word) <= 2:
        return word

    # step 1a
    if word.endswith("sses"):
        word = word[:-2]
    elif word.endswith("ies"):
        word = word[:-2]
    elif not word.endswith("ss") and word.endswith("s"):
        word = word[:-1]

    # step 1b
    recode = False
    if word.endswith("eed"):
        if _measure(word[:-3]) > 0:
            word = word[:-1]
    elif word.endswith("ed") and _has_vowel(word[:-2]):
        word = word[:-2]
        recode = True
    elif word.endswith("ing") and _has_vowel(word[:-3]):
        word = word[:-3]
        recode = True
    if recode:
        if word.endswith(("at", "bl", "iz")):
            word += "e"
        elif _ends_double_consonant(word) and word[-1] not in "lsz":
            word = word[:-1]
        elif _measure(word) == 1 and _ends_cvc(word):
            word += "e"

    # step 1c
    if word.endswith("y") and _has_vowel(word[:-1]):
        word = word[:-1] + "i"

    word = _replace(word, [
        ("ational", "ate", 0), ("tional", "tion", 0), ("enci", "ence", 0),
        ("anci", "ance", 0), ("izer", "ize", 0), ("abli", "able", 0),
        ("alli", "al", 0), ("entli", "ent", 0), ("eli", "e", 0),
        ("ousli", "ous", 0), ("ization", "ize", 0), ("ation", "ate", 0),
        ("ator", "ate", 0), ("alism", "al", 0), ("iveness", "ive", 0),
        ("fulness", "ful", 0), ("ousness", "ous", 0), ("aliti", "al", 0),
        ("iviti", "ive", 0), ("biliti", "ble", 0),
    ])
    word = _replace(word, [
        ("icate", "ic", 0), ("ative", "", 0), ("alize", "al", 0),
        ("iciti", "ic", 0), ("ical", "ic", 0), ("ful", "", 0), ("ness", "", 0),
    ])

    # step 4: plain deletions at measure > 1, with the s/t guard on -ion
    for suffix in ("ement", "ance", "ence", "able", "ible", "ment", "ant",
                   "ent", "ism", "ate", "iti", "ous", "ive", "ize", "ion",
                   "al", "er", "ic", "ou"):
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if suffix == "ion" and not stem.endswith(("s", "t")):
                break
            if _measure(stem) > 1:
                word = stem
            break

    # step 5a
    if word.endswith("e"):
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            word = stem

    # step 5b
    if _measure(word) > 1 and _ends_double_consonant(word) and word.endswith("l"):
        word = word[:-1]
    return word
