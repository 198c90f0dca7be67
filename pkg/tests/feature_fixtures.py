"""Hand-computed feature expectations for 25 fixture strings.

Each row: (text, msg_length, word_count, url_count, emoji_count,
exclamation_count, question_count). Counts were tallied by hand from the
definitions: length = Unicode scalars, words = maximal letter/digit runs,
URLs = scheme-or-www tokens, emoji = frozen range table, plus literal ! / ?.
"""

FIXTURE_ROWS = [
    ("", 0, 0, 0, 0, 0, 0),
    ("Да!? Нет!! 😀 see http://x.ru", 28, 6, 1, 1, 3, 1),
    ("hello world", 11, 2, 0, 0, 0, 0),
    ("привет мир!", 11, 2, 0, 0, 1, 0),
    ("a_b", 3, 2, 0, 0, 0, 0),
    ("x1 2y", 5, 2, 0, 0, 0, 0),
    ("😀😃", 2, 0, 0, 2, 0, 0),
    ("♥", 1, 0, 0, 1, 0, 0),
    ("★★★", 3, 0, 0, 3, 0, 0),
    ("🚀 to the moon", 13, 3, 0, 1, 0, 0),
    ("see www.example.com now", 23, 5, 1, 0, 0, 0),
    ("http://a.b https://c.d", 22, 6, 2, 0, 0, 0),
    ("price is 100!!!", 15, 3, 0, 0, 3, 0),
    ("что??", 5, 1, 0, 0, 0, 2),
    ("mixed приветhello", 17, 2, 0, 0, 0, 0),
    ("tab\tsep", 7, 2, 0, 0, 0, 0),
    ("line\nbreak", 10, 2, 0, 0, 0, 0),
    ("  spaced  ", 10, 1, 0, 0, 0, 0),
    ("éclair café", 11, 2, 0, 0, 0, 0),
    ("№5 тест", 7, 2, 0, 0, 0, 0),
    ("🤔 hmm", 5, 1, 0, 1, 0, 0),
    ("!?!?", 4, 0, 0, 0, 2, 2),
    ("word", 4, 1, 0, 0, 0, 0),
    ("a b c d e", 9, 5, 0, 0, 0, 0),
    ("Путин? Нет! www.x.ru 😀😀", 23, 5, 1, 2, 1, 1),
]
