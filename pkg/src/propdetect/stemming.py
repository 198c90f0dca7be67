"""Compact Snowball-family stemmers for English (Porter) and Russian.

Self-contained so wordshift analysis needs no external stemming package.
Tokens are routed by script: Cyrillic goes to the Russian stemmer, anything
else to the English one.
"""

from __future__ import annotations

import re

# ---------------------------------------------------------------------------
# English: the classic Porter algorithm (1980), steps 1a-5b.
# ---------------------------------------------------------------------------

_VOWELS = "aeiou"


def _is_cons(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_cons(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Porter's m: number of VC sequences."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        cons = _is_cons(stem, i)
        if cons and prev_vowel:
            m += 1
        prev_vowel = not cons
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_cons(stem, i) for i in range(len(stem)))


def _ends_double_cons(word: str) -> bool:
    return (len(word) >= 2 and word[-1] == word[-2]
            and _is_cons(word, len(word) - 1))


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    if not (_is_cons(word, len(word) - 3)
            and not _is_cons(word, len(word) - 2)
            and _is_cons(word, len(word) - 1)):
        return False
    return word[-1] not in "wxy"


def stem_english(word: str) -> str:
    w = word.lower()
    if len(w) <= 2:
        return w

    # step 1a
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif not w.endswith("ss") and w.endswith("s"):
        w = w[:-1]

    # step 1b
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    else:
        flag = False
        if w.endswith("ed") and _has_vowel(w[:-2]):
            w, flag = w[:-2], True
        elif w.endswith("ing") and _has_vowel(w[:-3]):
            w, flag = w[:-3], True
        if flag:
            if w.endswith(("at", "bl", "iz")):
                w += "e"
            elif _ends_double_cons(w) and w[-1] not in "lsz":
                w = w[:-1]
            elif _measure(w) == 1 and _ends_cvc(w):
                w += "e"

    # step 1c
    if w.endswith("y") and _has_vowel(w[:-1]):
        w = w[:-1] + "i"

    # steps 2-4: (suffix, replacement, min measure)
    for suffixes, min_m in (
        ((("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
          ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
          ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
          ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
          ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble")), 0),
        ((("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
          ("ical", "ic"), ("ful", ""), ("ness", "")), 0),
        ((("al", ""), ("ance", ""), ("ence", ""), ("er", ""), ("ic", ""),
          ("able", ""), ("ible", ""), ("ant", ""), ("ement", ""), ("ment", ""),
          ("ent", ""), ("ou", ""), ("ism", ""), ("ate", ""), ("iti", ""),
          ("ous", ""), ("ive", ""), ("ize", "")), 1),
    ):
        for suffix, repl in sorted(suffixes, key=lambda p: -len(p[0])):
            if w.endswith(suffix):
                stem = w[: len(w) - len(suffix)]
                if _measure(stem) > min_m:
                    w = stem + repl
                break
        else:
            continue
    # step 4 special case: (s/t)ion
    if w.endswith("ion") and len(w) > 3 and w[-4] in "st" and _measure(w[:-3]) > 1:
        w = w[:-3]

    # step 5a
    if w.endswith("e"):
        stem = w[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            w = stem
    # step 5b
    if _measure(w) > 1 and _ends_double_cons(w) and w.endswith("l"):
        w = w[:-1]
    return w


# ---------------------------------------------------------------------------
# Russian: the Snowball russian stemmer.
# ---------------------------------------------------------------------------

_RU_VOWELS = "аеиоуыэюя"

_PERFECTIVE_1 = ("вшись", "вши", "в")                 # require preceding а/я
_PERFECTIVE_2 = ("ившись", "ывшись", "ивши", "ывши", "ив", "ыв")
_REFLEXIVE = ("ся", "сь")
_ADJECTIVE = ("ими", "ыми", "его", "ого", "ему", "ому", "ее", "ие", "ые", "ое",
              "ей", "ий", "ый", "ой", "ем", "им", "ым", "ом", "их", "ых",
              "ую", "юю", "ая", "яя", "ою", "ею")
_PARTICIPLE_1 = ("ющ", "ем", "нн", "вш", "щ")          # require preceding а/я
_PARTICIPLE_2 = ("ивш", "ывш", "ующ")
_VERB_1 = ("ете", "йте", "ешь", "нно", "ла", "на", "ли", "ем", "ло", "но",
           "ет", "ют", "ны", "ть", "й", "л", "н")      # require preceding а/я
_VERB_2 = ("ейте", "уйте", "ила", "ыла", "ена", "ите", "или", "ыли", "ило",
           "ыло", "ено", "ует", "уют", "ены", "ить", "ыть", "ишь", "ей", "уй",
           "ил", "ыл", "им", "ым", "ен", "ят", "ит", "ыт", "ую", "ю")
_NOUN = ("иями", "ями", "ами", "ией", "иям", "ием", "иях", "ию", "ья", "ью",
         "ия", "ьев", "ов", "ев", "ие", "ье", "еи", "ии", "ей", "ой", "ий",
         "ям", "ем", "ам", "ом", "ах", "ях", "и", "е", "а", "й", "о", "у",
         "ы", "ь", "ю", "я")
_DERIVATIONAL = ("ость", "ост")
_SUPERLATIVE = ("ейше", "ейш")


def _rv_start(word: str) -> int:
    for i, ch in enumerate(word):
        if ch in _RU_VOWELS:
            return i + 1
    return len(word)


def _r2_start(word: str) -> int:
    def after_vc(start: int) -> int:
        vowel = -1
        for i in range(start, len(word)):
            if word[i] in _RU_VOWELS:
                vowel = i
                break
        if vowel < 0:
            return len(word)
        for i in range(vowel + 1, len(word)):
            if word[i] not in _RU_VOWELS:
                return i + 1
        return len(word)

    return after_vc(after_vc(0))


def _strip(word: str, rv: int, endings, preceded_by=None) -> str | None:
    """Remove the longest ending (within RV); group-1 endings require a
    preceding а/я which is kept."""
    for ending in sorted(endings, key=len, reverse=True):
        if not word.endswith(ending):
            continue
        base = len(word) - len(ending)
        if base < rv:
            continue
        if preceded_by is not None:
            if base == 0 or word[base - 1] not in preceded_by:
                continue
        return word[:base]
    return None


def stem_russian(word: str) -> str:
    w = word.lower().replace("ё", "е")
    rv = _rv_start(w)
    if rv >= len(w):
        return w

    # step 1: perfective gerund, else (reflexive?, adjectival|verb|noun)
    stripped = _strip(w, rv, _PERFECTIVE_2) or _strip(w, rv, _PERFECTIVE_1, "ая")
    if stripped is not None:
        w = stripped
    else:
        reflexless = _strip(w, rv, _REFLEXIVE)
        if reflexless is not None:
            w = reflexless
        adj = _strip(w, rv, _ADJECTIVE)
        if adj is not None:
            w = adj
            part = _strip(w, rv, _PARTICIPLE_2) or _strip(w, rv, _PARTICIPLE_1, "ая")
            if part is not None:
                w = part
        else:
            verb = _strip(w, rv, _VERB_2) or _strip(w, rv, _VERB_1, "ая")
            if verb is not None:
                w = verb
            else:
                noun = _strip(w, rv, _NOUN)
                if noun is not None:
                    w = noun

    # step 2: trailing и
    if w.endswith("и") and len(w) - 1 >= rv:
        w = w[:-1]

    # step 3: derivational ending in R2
    r2 = _r2_start(w)
    for ending in _DERIVATIONAL:
        if w.endswith(ending) and len(w) - len(ending) >= r2:
            w = w[: len(w) - len(ending)]
            break

    # step 4
    if w.endswith("нн") and len(w) - 1 >= rv:
        w = w[:-1]
    else:
        sup = _strip(w, rv, _SUPERLATIVE)
        if sup is not None:
            w = sup
            if w.endswith("нн") and len(w) - 1 >= rv:
                w = w[:-1]
        elif w.endswith("ь") and len(w) - 1 >= rv:
            w = w[:-1]
    return w


_CYRILLIC = re.compile(r"[Ѐ-ӿ]")


def stem(token: str) -> str:
    """Stem a single token, routing by script."""
    if _CYRILLIC.search(token):
        return stem_russian(token)
    return stem_english(token)
