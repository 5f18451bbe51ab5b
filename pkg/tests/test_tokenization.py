import numpy as np
import pytest

from protosum.tokenization import split_identifier, tokenize_code, tokenize_summary


@pytest.mark.parametrize(
    "text,expected",
    [
        ("getUserName", ["get", "user", "name"]),
        ("snake_case_var", ["snake", "case", "var"]),
        ("HTTPServer2go", ["http", "server", "2", "go"]),
        ("HTTPServer", ["http", "server"]),
        ("parseHTTPResponse", ["parse", "http", "response"]),
        ("a1b2", ["a", "1", "b", "2"]),
        ("", []),
        ("   ", []),
        ("__init__", ["init"]),
    ],
)
def test_code_tokenization(text, expected):
    assert tokenize_code(text) == expected


@pytest.mark.parametrize(
    "text,expected",
    [
        (
            "write the buffer to the output stream",
            ["write", "the", "buffer", "to", "the", "output", "stream"],
        ),
        ("", []),
        ("Sets the client ID.", ["sets", "the", "client", "id"]),
        ("convert an image to an array of integer",
         ["convert", "an", "image", "to", "an", "array", "of", "integer"]),
    ],
)
def test_summary_tokenization(text, expected):
    assert tokenize_summary(text) == expected


def test_truncation():
    text = " ".join(f"tok{i}" for i in range(50))
    assert len(tokenize_code(text, max_len=10)) == 10
    # Each wordNN splits into two subtokens, so truncation can cut mid-word.
    assert len(tokenize_summary("wordOne " * 40, max_len=15)) == 15


def test_code_method_signature():
    code = "public void writeBufferToStream(Buffer buf) { stream.write(buf.getBytes()); }"
    tokens = tokenize_code(code)
    assert tokens[:3] == ["public", "void", "write"]
    assert "buffer" in tokens and "stream" in tokens and "bytes" in tokens


def test_random_strings_yield_lowercase_nonempty_tokens():
    """Output tokens are lowercase alphanumeric and never empty, whatever goes in."""
    rng = np.random.default_rng(42)
    chars = list("abcXYZ012_ .,;:!?{}()[]<>=+-*/\\'\"\n\té中")
    for _ in range(300):
        n = rng.integers(0, 40)
        text = "".join(chars[rng.integers(len(chars))] for _ in range(n))
        for token in split_identifier(text):
            assert token
            assert token == token.lower()
            assert token.isascii() and token.isalnum()


def test_deterministic():
    text = "writeXMLFile2Disk_andFlush"
    assert tokenize_code(text) == tokenize_code(text)
