"""Chunked ingestion: encoding correctness, drop accounting, sampling, and
agreement between streamed and in-memory scatter accumulation."""

import numpy as np
import pytest

from concord.ingest import infer_levels, read_chunks, sample_rows, scatter_from_file
from concord.linalg import scatter_from_matrix
from concord.schema import ColumnSpec, ResponseRule, SchemaSpec


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.fixture
def cat_schema():
    return SchemaSpec(
        columns=(
            ColumnSpec("g", "categorical", ("a", "b", "c")),
            ColumnSpec("x", "numeric"),
        ),
        encoding="treatment-contrast",
        intercept=True,
    )


@pytest.fixture
def numeric_schema():
    return SchemaSpec(
        columns=(ColumnSpec("u", "numeric"), ColumnSpec("v", "numeric")),
        encoding="one-hot",
        intercept=False,
    )


class TestReadChunks:
    def test_chunk_sizes(self, tmp_path, numeric_schema):
        rows = "\n".join(f"{k},{k + 0.5}" for k in range(5))
        path = write(tmp_path / "five.csv", "u,v\n" + rows + "\n")
        chunks = list(read_chunks(path, numeric_schema, chunk_rows=2))
        assert [c.rows for c in chunks] == [2, 2, 1]
        assert [c.row_offset for c in chunks] == [0, 2, 4]

    def test_treatment_contrast_rows(self, tmp_path, cat_schema):
        path = write(tmp_path / "cat.csv", "g,x\na,1\nb,2\nc,3\n")
        (chunk,) = read_chunks(path, cat_schema)
        np.testing.assert_array_equal(
            chunk.design,
            [[1, 0, 0, 1], [1, 1, 0, 2], [1, 0, 1, 3]],
        )

    def test_one_hot_rows(self, tmp_path):
        schema = SchemaSpec(
            columns=(ColumnSpec("g", "categorical", ("a", "b", "c")),),
            encoding="one-hot",
            intercept=False,
        )
        path = write(tmp_path / "oh.csv", "g\nb\na\nc\n")
        (chunk,) = read_chunks(path, schema)
        np.testing.assert_array_equal(chunk.design, [[0, 1, 0], [1, 0, 0], [0, 0, 1]])

    def test_indicator_entries_are_binary(self, tmp_path, cat_schema):
        path = write(tmp_path / "cat.csv", "g,x\n" + "\n".join("abcba"[k] + ",1" for k in range(5)))
        (chunk,) = read_chunks(path, cat_schema)
        indicators = chunk.design[:, 1:3]
        assert set(np.unique(indicators)) <= {0.0, 1.0}

    def test_missing_rows_dropped_and_counted(self, tmp_path, numeric_schema):
        path = write(tmp_path / "m.csv", "u,v\n1,2\n,3\n4,NA\n5,6\n")
        chunks = list(read_chunks(path, numeric_schema, chunk_rows=10))
        assert sum(c.rows for c in chunks) == 2
        assert sum(c.dropped_rows for c in chunks) == 2

    def test_trailing_drops_still_counted(self, tmp_path, numeric_schema):
        path = write(tmp_path / "t.csv", "u,v\n1,2\n3,4\nNA,0\n,1\n")
        chunks = list(read_chunks(path, numeric_schema, chunk_rows=2))
        assert sum(c.dropped_rows for c in chunks) == 2
        assert sum(c.rows for c in chunks) == 2

    def test_bad_numeric_reports_line(self, tmp_path, numeric_schema):
        path = write(tmp_path / "b.csv", "u,v\n1,2\nx,3\n")
        with pytest.raises(ValueError, match="line 3"):
            list(read_chunks(path, numeric_schema))

    def test_short_row_reports_line(self, tmp_path, numeric_schema):
        path = write(tmp_path / "short.csv", "u,v\n1,2\n3\n")
        with pytest.raises(ValueError, match="line 3.*fields"):
            list(read_chunks(path, numeric_schema))

    def test_undeclared_level_is_error(self, tmp_path, cat_schema):
        path = write(tmp_path / "u.csv", "g,x\na,1\nd,2\n")
        with pytest.raises(ValueError, match="declared levels"):
            list(read_chunks(path, cat_schema))

    def test_missing_column_is_error(self, tmp_path, numeric_schema):
        path = write(tmp_path / "h.csv", "u,w\n1,2\n")
        with pytest.raises(ValueError, match="missing columns"):
            list(read_chunks(path, numeric_schema))

    def test_response_extraction(self, tmp_path):
        schema = SchemaSpec(
            columns=(ColumnSpec("u", "numeric"),),
            encoding="one-hot",
            intercept=False,
            response=ResponseRule("delay", threshold=30.0),
        )
        path = write(tmp_path / "r.csv", "u,delay\n1,30\n2,29\n3,-5\n4,NA\n")
        (chunk,) = read_chunks(path, schema)
        np.testing.assert_array_equal(chunk.response, [1.0, 0.0, 0.0])
        assert chunk.dropped_rows == 1

    def test_width_consistency(self, tmp_path, cat_schema):
        path = write(tmp_path / "w.csv", "g,x\n" + "\n".join(f"a,{k}" for k in range(9)))
        for chunk in read_chunks(path, cat_schema, chunk_rows=4):
            assert chunk.design.shape[1] == cat_schema.width

    def test_deterministic_stream(self, tmp_path, cat_schema):
        path = write(tmp_path / "d.csv", "g,x\na,1\nb,2\nc,3\nb,4\n")
        first = [c.design.tobytes() for c in read_chunks(path, cat_schema, chunk_rows=2)]
        second = [c.design.tobytes() for c in read_chunks(path, cat_schema, chunk_rows=2)]
        assert first == second


class TestScatterFromFile:
    def test_matches_in_memory(self, tmp_path, numeric_schema):
        rng = np.random.default_rng(401)
        x = rng.standard_normal((57, 2))
        lines = "u,v\n" + "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in x)
        path = write(tmp_path / "s.csv", lines + "\n")
        streamed, valid, dropped = scatter_from_file(path, numeric_schema, chunk_rows=8)
        whole = scatter_from_matrix(x)
        assert (valid, dropped) == (57, 0)
        assert streamed.n == 57
        np.testing.assert_allclose(streamed.gram, whole.gram, rtol=1e-10)

    def test_tracks_response(self, tmp_path):
        schema = SchemaSpec(
            columns=(ColumnSpec("u", "numeric"),),
            encoding="one-hot",
            intercept=False,
            response=ResponseRule("y", threshold=None),
        )
        path = write(tmp_path / "yr.csv", "u,y\n1,10\n2,20\n")
        summary, _, _ = scatter_from_file(path, schema)
        np.testing.assert_array_equal(summary.xty, [1 * 10 + 2 * 20])
        assert summary.yty == pytest.approx(500.0)


class TestSampleRows:
    def test_head(self, tmp_path, numeric_schema):
        path = write(tmp_path / "h.csv", "u,v\n" + "\n".join(f"{k},0" for k in range(5)))
        chunk = sample_rows(path, numeric_schema, 3, method="head")
        np.testing.assert_array_equal(chunk.design[:, 0], [0.0, 1.0, 2.0])
        np.testing.assert_array_equal(chunk.source_rows, [0, 1, 2])

    def test_random_full_draw_covers_everything(self, tmp_path, numeric_schema):
        path = write(tmp_path / "f.csv", "u,v\n" + "\n".join(f"{k},0" for k in range(8)))
        chunk = sample_rows(path, numeric_schema, 8, method="random", seed=5)
        assert sorted(chunk.source_rows) == list(range(8))

    def test_random_deterministic_by_seed(self, tmp_path, numeric_schema):
        path = write(tmp_path / "r.csv", "u,v\n" + "\n".join(f"{k},0" for k in range(50)))
        a = sample_rows(path, numeric_schema, 10, method="random", seed=9)
        b = sample_rows(path, numeric_schema, 10, method="random", seed=9)
        assert sorted(a.source_rows) == sorted(b.source_rows)

    def test_oversample_rejected(self, tmp_path, numeric_schema):
        path = write(tmp_path / "o.csv", "u,v\n1,2\n")
        with pytest.raises(ValueError, match="only 1 valid"):
            sample_rows(path, numeric_schema, 2)

    def test_reservoir_uniform_inclusion(self, tmp_path, numeric_schema):
        # 10-row file, draws of 3: every row should be included at rate
        # 0.3 within 3 sigma over many seeds.
        path = write(tmp_path / "u.csv", "u,v\n" + "\n".join(f"{k},0" for k in range(10)))
        n_seeds = 10000
        counts = np.zeros(10)
        for seed in range(n_seeds):
            chunk = sample_rows(path, numeric_schema, 3, method="random", seed=seed)
            counts[chunk.source_rows] += 1
        freq = counts / n_seeds
        sigma = np.sqrt(0.3 * 0.7 / n_seeds)
        assert np.all(np.abs(freq - 0.3) <= 3 * sigma), freq


class TestInferLevels:
    def test_fills_sorted_unique(self, tmp_path):
        schema = SchemaSpec(
            columns=(ColumnSpec("g", "categorical"), ColumnSpec("x", "numeric")),
            encoding="treatment-contrast",
        )
        path = write(tmp_path / "i.csv", "g,x\nc,1\na,2\nb,3\na,4\nNA,5\n")
        filled = infer_levels(path, schema)
        assert filled.columns[0].levels == ("a", "b", "c")
        assert filled.width == 1 + 2 + 1

    def test_noop_when_declared(self, tmp_path, cat_schema):
        path = write(tmp_path / "n.csv", "g,x\na,1\n")
        assert infer_levels(path, cat_schema) is cat_schema

    def test_single_level_rejected(self, tmp_path):
        schema = SchemaSpec(columns=(ColumnSpec("g", "categorical"),))
        path = write(tmp_path / "s.csv", "g\na\na\n")
        with pytest.raises(ValueError, match="distinct level"):
            infer_levels(path, schema)
