"""End-to-end tests for the command-line interface."""

import numpy as np
import pytest

from aakit import cli, model_io
from aakit.fitting import FitConfig, fit

from conftest import make_triangle


def write_input(tmp_path, X, name="input.aamx"):
    path = tmp_path / name
    model_io.save_matrix(path, X)
    return str(path)


def run(argv):
    return cli.main(argv)


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def test_fit_writes_model_codes_history(tmp_path):
    X, _ = make_triangle()
    inp = write_input(tmp_path, X)
    model_path = tmp_path / "model.json"
    codes_path = tmp_path / "codes.aamx"
    hist_path = tmp_path / "hist.txt"
    rc = run(["fit", "--input", inp, "-p", "3", "-t", "20", "--seed", "1",
              "--output-model", str(model_path),
              "--output-codes", str(codes_path),
              "--history", str(hist_path)])
    assert rc == 0
    model = model_io.load_model(model_path)
    assert model.A.shape == (3, X.shape[1])
    codes = model_io.load_matrix(codes_path)
    assert np.array_equal(codes, model.A)
    history = [float(line) for line in hist_path.read_text().split()]
    assert history == model.history


def test_fit_p_equals_n_history_starts_at_zero(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((3, 5))
    inp = write_input(tmp_path, X)
    hist_path = tmp_path / "hist.txt"
    rc = run(["fit", "--input", inp, "-p", "5", "-t", "3",
              "--history", str(hist_path)])
    assert rc == 0
    first = float(hist_path.read_text().splitlines()[0])
    assert abs(first) <= 1e-10


def test_fit_seeded_runs_byte_identical(tmp_path):
    rng = np.random.default_rng(1)
    X = rng.random((5, 30))
    inp = write_input(tmp_path, X)
    out1 = tmp_path / "m1.json"
    out2 = tmp_path / "m2.json"
    for out in (out1, out2):
        rc = run(["fit", "--input", inp, "-p", "4", "-t", "10",
                  "--seed", "7", "--output-model", str(out)])
        assert rc == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_fit_robust_large_epsilon_matches_plain(tmp_path):
    rng = np.random.default_rng(2)
    X = rng.standard_normal((4, 20))
    inp = write_input(tmp_path, X)
    plain_path = tmp_path / "plain.json"
    robust_path = tmp_path / "robust.json"
    assert run(["fit", "--input", inp, "-p", "3", "-t", "8", "--seed", "3",
                "--output-model", str(plain_path)]) == 0
    assert run(["fit", "--input", inp, "-p", "3", "-t", "8", "--seed", "3",
                "--robust", "--epsilon", "1e9",
                "--output-model", str(robust_path)]) == 0
    plain = model_io.load_model(plain_path)
    robust = model_io.load_model(robust_path)
    # with eps dominating every residual the weights are uniform, so the
    # factor sequences coincide; histories differ only by the fixed Huber
    # transform of the same residuals
    np.testing.assert_allclose(robust.A, plain.A, atol=1e-10)
    np.testing.assert_allclose(robust.B, plain.B, atol=1e-10)


def test_fit_accepts_delimited_text(tmp_path):
    path = tmp_path / "data.txt"
    path.write_text("0 1 0.5\n0 0 1\n")
    codes = tmp_path / "codes.aamx"
    rc = run(["fit", "--input", str(path), "-p", "2", "-t", "5",
              "--output-codes", str(codes)])
    assert rc == 0
    assert model_io.load_matrix(codes).shape == (2, 3)


def test_fit_missing_input_exits_3(tmp_path):
    rc = run(["fit", "--input", str(tmp_path / "nope.aamx"), "-p", "2"])
    assert rc == 3


def test_fit_bad_p_exits_2(tmp_path):
    X = np.ones((2, 3)) * np.arange(3)
    inp = write_input(tmp_path, X)
    assert run(["fit", "--input", inp, "-p", "9"]) == 2


def test_fit_corrupt_input_exits_3(tmp_path):
    path = tmp_path / "corrupt.aamx"
    path.write_bytes(b"AAMX" + bytes(10))
    assert run(["fit", "--input", str(path), "-p", "2"]) == 3


# ---------------------------------------------------------------------------
# encode
# ---------------------------------------------------------------------------

def test_encode_round_trip(tmp_path):
    # a fully converged model (p = n is exact) is a fixed point of the
    # code sweep, so re-encoding the training data reproduces its codes
    rng = np.random.default_rng(3)
    X = rng.random((4, 5))
    inp = write_input(tmp_path, X)
    model_path = tmp_path / "model.json"
    assert run(["fit", "--input", inp, "-p", "5", "-t", "30", "--seed", "0",
                "--output-model", str(model_path)]) == 0
    out = tmp_path / "codes.aamx"
    assert run(["encode", "--model", str(model_path), "--input", inp,
                "--output-codes", str(out)]) == 0
    codes = model_io.load_matrix(out)
    model = model_io.load_model(model_path)
    # re-encoding the training data reproduces the stored codes
    err = np.abs(codes - model.A).max()
    assert err <= 1e-8


def test_encode_archetypes_gives_identity(tmp_path):
    rng = np.random.default_rng(4)
    X = rng.random((4, 20))
    inp = write_input(tmp_path, X)
    model_path = tmp_path / "model.json"
    assert run(["fit", "--input", inp, "-p", "3", "-t", "10",
                "--output-model", str(model_path)]) == 0
    model = model_io.load_model(model_path)
    zin = write_input(tmp_path, model.Z, "z.aamx")
    out = tmp_path / "zcodes.aamx"
    assert run(["encode", "--model", str(model_path), "--input", zin,
                "--output-codes", str(out)]) == 0
    np.testing.assert_allclose(model_io.load_matrix(out), np.eye(3),
                               atol=1e-9)


def test_encode_dimension_mismatch_exits_3(tmp_path):
    rng = np.random.default_rng(5)
    inp = write_input(tmp_path, rng.random((4, 10)))
    model_path = tmp_path / "model.json"
    assert run(["fit", "--input", inp, "-p", "2", "-t", "5",
                "--output-model", str(model_path)]) == 0
    bad = write_input(tmp_path, rng.random((5, 3)), "bad.aamx")
    assert run(["encode", "--model", str(model_path), "--input", bad,
                "--output-codes", str(tmp_path / "o.aamx")]) == 3


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def classify_setup(tmp_path):
    train_dir = tmp_path / "train"
    train_dir.mkdir()
    model_io.save_matrix(train_dir / "0.aamx", np.array([[0.0], [0.0]]))
    model_io.save_matrix(train_dir / "1.aamx", np.array([[10.0], [10.0]]))
    test_path = tmp_path / "test.aamx"
    model_io.save_matrix(test_path, np.array([[1.0, 9.0], [1.0, 9.0]]))
    return str(train_dir), str(test_path)


def test_classify_train_dir(tmp_path, capsys):
    train_dir, test_path = classify_setup(tmp_path)
    rc = run(["classify", "--train-dir", train_dir, "--test", test_path,
              "--all"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    first = lines[0].split("\t")
    assert first[0] == "0"
    assert float(first[1]) == pytest.approx(2.0)
    assert float(first[2]) == pytest.approx(162.0)
    assert lines[1].split("\t")[0] == "1"


def test_classify_error_rate(tmp_path, capsys):
    train_dir, test_path = classify_setup(tmp_path)
    labels_path = tmp_path / "labels.txt"
    labels_path.write_text("0\n0\n")
    rc = run(["classify", "--train-dir", train_dir, "--test", test_path,
              "--all", "--labels", str(labels_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "error_rate\t0.500000" in out


def test_classify_saved_models(tmp_path, capsys):
    rng = np.random.default_rng(6)
    paths = []
    for k, shift in enumerate((0.0, 10.0)):
        X = rng.random((3, 12)) + shift
        inp = write_input(tmp_path, X, f"c{k}.aamx")
        model_path = tmp_path / f"m{k}.json"
        assert run(["fit", "--input", inp, "-p", "3", "-t", "20",
                    "--output-model", str(model_path)]) == 0
        paths.append(str(model_path))
    test_path = write_input(tmp_path, rng.random((3, 4)) + 10.0, "t.aamx")
    rc = run(["classify", "--model", f"low={paths[0]}",
              "--model", f"high={paths[1]}", "--test", test_path])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert all(line.split("\t")[0] == "high" for line in lines)


def test_classify_missing_train_dir_exits_3(tmp_path):
    _, test_path = classify_setup(tmp_path)
    assert run(["classify", "--train-dir", str(tmp_path / "ghost"),
                "--test", test_path, "--all"]) == 3


def test_classify_needs_exactly_one_source(tmp_path):
    train_dir, test_path = classify_setup(tmp_path)
    with pytest.raises(SystemExit) as exc:
        run(["classify", "--test", test_path])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def test_bench_emits_table(tmp_path):
    out = tmp_path / "bench.tsv"
    rc = run(["bench", "--n-list", "60,120", "--p-list", "3", "--m", "8",
              "-t", "3", "--reps", "1", "--output", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "n\tp\tseconds_per_iter\tstd"
    assert len(lines) == 3
    for line in lines[1:]:
        n, p, sec, std = line.split("\t")
        assert float(sec) > 0.0


# ---------------------------------------------------------------------------
# generic flag handling
# ---------------------------------------------------------------------------

def test_help_exits_zero():
    with pytest.raises(SystemExit) as exc:
        run(["--help"])
    assert exc.value.code == 0


def test_unknown_flag_exits_two():
    with pytest.raises(SystemExit) as exc:
        run(["fit", "--frobnicate"])
    assert exc.value.code == 2
