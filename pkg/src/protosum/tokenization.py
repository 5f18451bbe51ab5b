"""Identifier-aware tokenization for code and summaries.

Both sides of a code/summary pair go through one splitting convention:
alphanumeric runs are extracted (underscores and punctuation act as
separators), camel-case and digit boundaries are split, and everything is
lowercased. Summaries therefore lose punctuation entirely, and identifiers
such as ``getUserName`` become ``get``, ``user``, ``name``.
"""

import re

DEFAULT_MAX_CODE_LEN = 100
DEFAULT_MAX_SUMMARY_LEN = 15

_ALNUM_RUN = re.compile(r"[A-Za-z0-9]+")

# In an uppercase run followed by a lowercase letter, the last uppercase
# letter belongs to the next word: "HTTPServer" -> "HTTP", "Server".
# Digits always form their own subtoken: "2go" -> "2", "go".
_SUBTOKEN = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+|[0-9]+")


def split_identifier(text: str) -> list[str]:
    """Split a raw string into lowercase subtokens.

    Non-alphanumeric characters (including underscores) separate runs;
    each run is further split at camel-case and digit boundaries.
    """
    tokens: list[str] = []
    for run in _ALNUM_RUN.findall(text):
        for piece in _SUBTOKEN.findall(run):
            tokens.append(piece.lower())
    return tokens


def tokenize_code(code_text: str, max_len: int = DEFAULT_MAX_CODE_LEN) -> list[str]:
    """Tokenize source code, truncating to ``max_len`` tokens."""
    return split_identifier(code_text)[:max_len]


def tokenize_summary(summary_text: str, max_len: int = DEFAULT_MAX_SUMMARY_LEN) -> list[str]:
    """Tokenize a natural-language summary, truncating to ``max_len`` tokens.

    Punctuation is dropped; the identifier-splitting convention is shared
    with :func:`tokenize_code` so both sides of a pair live in one token
    space.
    """
    return split_identifier(summary_text)[:max_len]
