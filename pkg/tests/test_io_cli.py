import io
import json

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from scalekit import io as sio
from scalekit.cli import run_command
from scalekit.operators import PositiveMapRep

FIGURE = np.array([[0, 3, 4, 1], [2, 1, 0, 0], [2, 0, 0, 1]], dtype=float)


def write(path, text):
    path.write_text(text)
    return str(path)


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_command(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_mtx_array_is_column_major(tmp_path):
    p = write(tmp_path / "a.mtx", "%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n")
    assert np.array_equal(sio.load_matrix(p), [[1, 2], [3, 4]])


def test_mtx_coordinate_figure(tmp_path):
    lines = ["%%MatrixMarket matrix coordinate real general", "% transport", "3 4 7"]
    lines += [f"{i + 1} {j + 1} {FIGURE[i, j]:g}" for i, j in np.argwhere(FIGURE > 0)]
    p = write(tmp_path / "t.mtx", "\n".join(lines) + "\n")
    assert np.array_equal(sio.load_matrix(p), FIGURE)


def test_mtx_symmetric_and_pattern(tmp_path):
    p = write(tmp_path / "s.mtx", "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n2 1 5\n")
    assert np.array_equal(sio.load_matrix(p), [[1, 5], [5, 0]])
    p = write(tmp_path / "p.mtx", "%%MatrixMarket matrix coordinate pattern general\n2 2 2\n1 2\n2 1\n")
    assert np.array_equal(sio.load_matrix(p), [[0, 1], [1, 0]])


def test_negative_entry_rejected(tmp_path):
    p = write(tmp_path / "n.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 2 -1\n")
    with pytest.raises(sio.FormatError) as info:
        sio.load_matrix(p)
    assert "row 2, column 2" in str(info.value)
    assert info.value.line == 4
    assert sio.load_matrix(p, nonneg=False)[1, 1] == -1


def test_parse_error_has_line(tmp_path):
    p = write(tmp_path / "b.mtx", "%%MatrixMarket matrix array real general\n2 2\n1\nx\n2\n4\n")
    with pytest.raises(sio.FormatError) as info:
        sio.load_matrix(p)
    assert info.value.line == 4


def test_csv_reader(tmp_path):
    p = write(tmp_path / "a.csv", "1,2\n3,4\n")
    assert np.array_equal(sio.load_matrix(p), [[1, 2], [3, 4]])


@settings(max_examples=25, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(arrays(float, (3, 2), elements=st.floats(0, 1e300, allow_subnormal=False)),
       st.sampled_from(["mtx", "csv"]))
def test_round_trip_full_precision(tmp_path, A, fmt):
    p = str(tmp_path / f"r.{fmt}")
    sio.save_matrix(p, A, fmt)
    assert np.array_equal(sio.load_matrix(p), A)


def test_tensor_round_trip(tmp_path):
    T = np.random.default_rng(0).uniform(0.1, 2.0, (2, 3, 2))
    p = str(tmp_path / "t.txt")
    sio.save_tensor(p, T)
    assert np.array_equal(sio.load_tensor(p), T)


def test_load_single_kraus(tmp_path):
    doc = {"kraus": [[[1, 0], [0, 0]], [[0, 0], [2, 0]]]}
    E = sio.load_map(write(tmp_path / "k.json", json.dumps(doc)))
    assert np.allclose(E.apply(np.eye(2)), np.diag([1, 4]))


def test_choi_of_identity_round_trips(tmp_path):
    J = PositiveMapRep.identity(2).to_choi()
    doc = {"choi": [[[float(v.real), float(v.imag)] for v in row] for row in J]}
    E = sio.load_map(write(tmp_path / "c.json", json.dumps(doc)))
    assert np.abs(E.to_choi() - J).max() <= 1e-12
    p = str(tmp_path / "again.json")
    sio.save_map(p, E)
    assert np.abs(sio.load_map(p).to_choi() - J).max() <= 1e-12


def test_non_square_kraus_rejected(tmp_path):
    doc = {"kraus": [[[[1, 0], [0, 0], [0, 0]], [[0, 0], [1, 0], [0, 0]]]]}
    with pytest.raises(sio.FormatError):
        sio.load_map(write(tmp_path / "bad.json", json.dumps(doc)))


def test_malformed_complex_entry(tmp_path):
    with pytest.raises(sio.FormatError):
        sio.load_map(write(tmp_path / "bad.json", json.dumps({"kraus": [[1, 0], [0, 1]]})))


def test_cli_scale(tmp_path):
    p = write(tmp_path / "A.mtx", "%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n")
    out = str(tmp_path / "B.mtx")
    trace = str(tmp_path / "trace.csv")
    code, text, _ = run(["scale", "--matrix", p, "--rows", "1,1", "--cols", "1,1",
                         "--tol", "1e-10", "--out", out, "--trace", trace])
    assert code == 0
    assert json.loads(text)["status"] == "converged"
    B = sio.load_matrix(out)
    assert B[0, 0] == pytest.approx(2 / (2 + np.sqrt(6)), abs=1e-9)
    header = open(trace).readline().strip().split(",")
    assert header == ["iter", "row_resid", "col_resid", "entropy", "min_entry"]


@pytest.mark.parametrize("method", ["ras", "menon", "gradient"])
def test_cli_scale_methods(tmp_path, method):
    p = write(tmp_path / "A.csv", "1,2\n3,4\n")
    out = str(tmp_path / "B")
    code, _, _ = run(["scale", "--matrix", p, "--method", method, "--out", out, "--format", "mtx"])
    assert code == 0


def test_cli_feasible_exit_codes(tmp_path):
    p = write(tmp_path / "P.csv", "1,1\n0,1\n")
    assert run(["feasible", "--matrix", p, "--rows", "1,1", "--cols", "1,1"])[0] == 2
    q = write(tmp_path / "Q.csv", "1,0\n1,0\n")
    assert run(["feasible", "--matrix", q, "--rows", "1,1", "--cols", "1,1"])[0] == 3
    r = write(tmp_path / "R.csv", "1,2\n3,4\n")
    assert run(["feasible", "--matrix", r])[0] == 0


def test_cli_analyze(tmp_path):
    p = write(tmp_path / "A.csv", "1,0\n0,1\n")
    code, text, _ = run(["analyze", "--matrix", p])
    assert code == 0
    rep = json.loads(text)
    assert rep["has_total_support"] is True


def test_cli_errors(tmp_path):
    p = write(tmp_path / "N.csv", "1,-1\n0,1\n")
    code, _, err = run(["scale", "--matrix", p])
    assert code == 1
    assert "negative" in err
    assert run(["scale"])[0] == 1
    assert run(["nonsense"])[0] == 1
    assert run(["scale", "--matrix", str(tmp_path / "missing.csv")])[0] == 1


def test_cli_op_scale_trace(tmp_path):
    rng = np.random.default_rng(0)
    K = rng.standard_normal((3, 2, 2))
    doc = {"kraus": [[[[float(v), 0.0] for v in row] for row in k] for k in K]}
    m = write(tmp_path / "E.json", json.dumps(doc))
    trace = str(tmp_path / "ds.csv")
    code, _, _ = run(["op-scale", "--map", m, "--trace", trace, "--tol", "1e-8"])
    assert code == 0
    cols = sio.read_trace(trace)
    assert list(cols) == ["iter", "ds_error"]
    assert cols["ds_error"][-1] <= 1e-8


def test_cli_balance_and_dad(tmp_path):
    p = write(tmp_path / "A.csv", "0,1\n2,0\n")
    assert run(["balance", "--matrix", p])[0] == 0
    s = write(tmp_path / "S.csv", "1,1\n1,1\n")
    code, text, _ = run(["dad", "--matrix", s])
    assert code == 0


def test_cli_tensor_and_loglinear(tmp_path):
    t = str(tmp_path / "T.txt")
    sio.save_tensor(t, np.ones((2, 2, 2)))
    assert run(["tensor-scale", "--tensor", t, "--margins", "1,1;1,1;1,1", "--schedule", "2,1,0"])[0] == 0
    C = write(tmp_path / "C.csv", "1,1,0,0\n0,0,1,1\n1,0,1,0\n0,1,0,1\n")
    assert run(["loglinear", "--x", "1,2,3,4", "--C", C, "--b", "1,1,1,1"])[0] == 0


def test_cli_seed_env(tmp_path, monkeypatch):
    doc = {"kraus": [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [2.0, 0.0]]]]}
    m = write(tmp_path / "E.json", json.dumps(doc))
    argv = ["op-scale", "--map", m, "--method", "menon"]
    monkeypatch.setenv("SCALEKIT_SEED", "not-a-number")
    assert run(argv)[0] == 1
    monkeypatch.setenv("SCALEKIT_SEED", "5")
    assert run(argv)[0] == 0
