import numpy as np
import pytest
import scipy.sparse

from hbavg.errors import ParseError
from hbavg.problems import inspect_libsvm, parse_libsvm, write_libsvm
from hbavg.rng import SplitMix64


def _write(tmp_path, text):
    path = tmp_path / "data.txt"
    path.write_text(text)
    return path


def test_basic_line(tmp_path):
    path = _write(tmp_path, "+1 1:0.5 3:-1.2\n")
    features, labels, (m, d) = parse_libsvm(path)
    assert (m, d) == (1, 3)
    assert labels[0] == 1.0
    row = features.toarray()[0]
    assert np.array_equal(row, [0.5, 0.0, -1.2])


def test_empty_feature_list_is_zero_row(tmp_path):
    path = _write(tmp_path, "-1\n+1 2:3.0\n")
    features, labels, (m, d) = parse_libsvm(path)
    assert (m, d) == (2, 2)
    assert np.array_equal(labels, [-1.0, 1.0])
    assert features[0].nnz == 0


def test_zero_one_labels_remapped(tmp_path):
    path = _write(tmp_path, "0 1:1.0\n1 1:2.0\n")
    _, labels, _ = parse_libsvm(path)
    assert np.array_equal(labels, [-1.0, 1.0])


def test_n_features_override(tmp_path):
    path = _write(tmp_path, "+1 2:1.0\n")
    features, _, (m, d) = parse_libsvm(path, n_features=10)
    assert (m, d) == (1, 10)
    with pytest.raises(ParseError):
        parse_libsvm(path, n_features=1)


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("+1 1:0.5 oops\n", "malformed"),
        ("+1 x:0.5\n", "malformed index"),
        ("+1 1:zz\n", "malformed value"),
        ("+1 3:1.0 2:1.0\n", "not ascending"),
        ("+1 2:1.0 2:2.0\n", "not ascending"),
        ("+1 0:1.0\n", "1-based"),
        ("2 1:1.0\n", "label"),
        ("huh 1:1.0\n", "label"),
    ],
)
def test_malformed_inputs_carry_line_numbers(tmp_path, text, fragment):
    path = _write(tmp_path, "+1 1:1.0\n" + text)
    with pytest.raises(ParseError, match="line 2") as excinfo:
        parse_libsvm(path)
    assert fragment in str(excinfo.value)


def test_round_trip_exact(tmp_path):
    rng = SplitMix64(5)
    m, d = 40, 17
    dense = rng.normal(m * d).reshape(m, d)
    dense[rng.uniform(m * d).reshape(m, d) < 0.7] = 0.0
    features = scipy.sparse.csr_matrix(dense)
    labels = np.where(rng.uniform(m) < 0.5, -1.0, 1.0)
    path = tmp_path / "rt.txt"
    write_libsvm(path, features, labels)
    back, labels2, (m2, d2) = parse_libsvm(path, n_features=d)
    assert (m2, d2) == (m, d)
    assert np.array_equal(labels, labels2)
    assert np.array_equal(back.indptr, features.indptr)
    assert np.array_equal(back.indices, features.indices)
    assert np.array_equal(back.data, features.data)


def test_inspect_summary(tmp_path):
    path = _write(tmp_path, "+1 1:1.0 2:1.0\n-1 2:1.0\n-1\n")
    stats = inspect_libsvm(path)
    assert stats["samples"] == 3
    assert stats["features"] == 2
    assert stats["nnz"] == 3
    assert stats["positive"] == 1
    assert stats["negative"] == 2
