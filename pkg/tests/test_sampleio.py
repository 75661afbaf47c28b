import numpy as np
import pytest

from jddtest import InputError, PairedSample, read_sample_csv, write_sample_csv
from conftest import random_sample


def test_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    sample = random_sample(rng, 37, 4, 3, scale=1e-3)
    path = tmp_path / "s.csv"
    write_sample_csv(sample, path)
    loaded = read_sample_csv(path)
    assert np.array_equal(loaded.xs, sample.xs)
    assert np.array_equal(loaded.ys, sample.ys)


def test_header_and_schema(tmp_path):
    sample = PairedSample(xs=[[1.0, 2.0]], ys=[[3.0]])
    path = tmp_path / "s.csv"
    write_sample_csv(sample, path, comments=["made by a test"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# made by a test"
    assert lines[1] == "x_0,x_1,y_0"
    assert lines[2] == "1.0,2.0,3.0"


def test_comments_are_skipped_on_read(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("# one\n# two\nx_0,y_0\n0.5,0.25\n")
    sample = read_sample_csv(path)
    assert sample.m == 1 and sample.xs[0, 0] == 0.5


@pytest.mark.parametrize(
    "text",
    [
        "a,b\n1,2\n",                # header not in schema
        "x_0\n1.0\n",                # no y columns
        "y_0,x_0\n1.0,2.0\n",        # wrong order
        "x_0,y_0\n",                 # no rows
        "x_0,y_0\n1.0\n",            # ragged row
        "x_0,y_0\n1.0,oops\n",       # non-numeric cell
        "",                          # empty file
    ],
)
def test_malformed_inputs_rejected(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(InputError):
        read_sample_csv(path)
