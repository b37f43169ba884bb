import numpy as np
import pytest
from hypothesis import given, strategies as st

from topiclabel.embeddings import EmbeddingTable, load_embeddings, save_embeddings, tokenize
from topiclabel.errors import DimensionError, ParseError


def write(tmp_path, text, name="vec.txt"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_single_line(tmp_path):
    table = load_embeddings(write(tmp_path, "cat 1.0 0.0\n"), 2)
    assert len(table) == 1
    assert table.lookup("cat").tolist() == [1.0, 0.0]


def test_load_dimension_mismatch_names_token(tmp_path):
    with pytest.raises(DimensionError, match="cat"):
        load_embeddings(write(tmp_path, "cat 1.0\n"), 2)


def test_load_empty_file(tmp_path):
    assert len(load_embeddings(write(tmp_path, ""), 2)) == 0


def test_malformed_line_names_line_number(tmp_path):
    with pytest.raises(ParseError) as err:
        load_embeddings(write(tmp_path, "cat 1 0\ndog 1 x\n"), 2)
    assert err.value.line_number == 2


def test_header_detected_and_checked(tmp_path):
    table = load_embeddings(write(tmp_path, "2 3\na 1 2 3\nb 4 5 6\n"), 3)
    assert len(table) == 2 and table.lookup("b").tolist() == [4, 5, 6]
    with pytest.raises(DimensionError):
        load_embeddings(write(tmp_path, "2 4\na 1 2 3\n"), 3)


def test_duplicates_last_wins_and_lowercased(tmp_path):
    table = load_embeddings(write(tmp_path, "Cat 1 1\ncat 2 2\n"), 2)
    assert table.duplicates == 1
    assert table.lookup("CAT").tolist() == [2, 2]


def test_lookup_returns_copy(toy_table):
    v = toy_table.lookup("cat")
    v[0] = 99
    assert toy_table.lookup("cat")[0] == 1.0
    assert toy_table.lookup("zebra") is None
    assert toy_table.lookup("dog").tolist() == [0.0, 1.0]


def test_mean_pool_examples(toy_table):
    vec, n = toy_table.mean_pool(["cat"])
    assert vec.tolist() == [1.0, 0.0] and n == 1
    vec, n = toy_table.mean_pool(["cat", "dog"])
    assert vec.tolist() == [0.5, 0.5] and n == 2
    vec, n = toy_table.mean_pool(["zzz"])
    assert vec.tolist() == [0.0, 0.0] and n == 0
    with pytest.raises(ValueError):
        toy_table.mean_pool([])


def test_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    table = EmbeddingTable(5, {f"t{i}": rng.normal(size=5) for i in range(20)})
    path = tmp_path / "out.txt"
    save_embeddings(table, path)
    again = load_embeddings(path, 5)
    for tok in table.tokens():
        assert again.lookup(tok).tobytes() == table.lookup(tok).tobytes()


def test_tokenize_strips_punctuation():
    assert tokenize("A Surgeon's  scalpel, (close-up)!") == ["a", "surgeon", "s", "scalpel",
                                                             "close", "up"]


vocab = st.sampled_from(["cat", "dog", "fish", "zzz"])


@given(st.lists(vocab, min_size=1, max_size=8), st.randoms())
def test_mean_pool_permutation_invariant(tokens, rnd):
    table = EmbeddingTable(2, {"cat": [1.0, 0.0], "dog": [0.0, 1.0], "fish": [1.0, 1.0]})
    shuffled = list(tokens)
    rnd.shuffle(shuffled)
    a, na = table.mean_pool(tokens)
    b, nb = table.mean_pool(shuffled)
    assert na == nb
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)


@given(vocab.filter(lambda t: t != "zzz"), st.integers(1, 10))
def test_mean_pool_of_copies_is_lookup(token, k):
    table = EmbeddingTable(2, {"cat": [1.0, 0.0], "dog": [0.0, 1.0], "fish": [1.0, 1.0]})
    np.testing.assert_allclose(table.mean_pool([token] * k)[0], table.lookup(token))


@given(st.lists(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3), min_size=1, max_size=6))
def test_mean_pool_within_componentwise_bounds(vectors):
    table = EmbeddingTable(3, {f"t{i}": v for i, v in enumerate(vectors)})
    vec, _ = table.mean_pool(table.tokens())
    arr = np.array([table.lookup(t) for t in table.tokens()])
    assert np.all(vec >= arr.min(axis=0) - 1e-9) and np.all(vec <= arr.max(axis=0) + 1e-9)
