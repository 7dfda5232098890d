import numpy as np
import pytest

from qcentroid import classifier, cli, datasets, experiments
from qcentroid.model import Model


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def blobs(tmp_path, capsys):
    path = tmp_path / "blobs.csv"
    assert run(["gen", "blobs", "--out", path, "--seed", 1, "--n-per-class", 50], capsys)[0] == 0
    return path


@pytest.fixture
def boundary_model(tmp_path, capsys):
    data = tmp_path / "vo2.csv"
    model = tmp_path / "vo2.json"
    assert run(["gen", "boundary", "--out", data, "--seed", 3], capsys)[0] == 0
    code, out, _ = run(["train", "--data", data, "--model", model], capsys)
    assert code == 0
    return data, model, out


def test_train_boundary(boundary_model, tmp_path, capsys):
    data, model, out = boundary_model
    m = Model.load(model)
    assert len(m.sublabels) <= 32
    assert "sublabels:" in out and "fixpoint iterations:" in out
    again = tmp_path / "again.json"
    assert run(["train", "--data", data, "--model", again], capsys)[0] == 0
    assert again.read_bytes() == model.read_bytes()


def test_train_errors(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("x1,x2,label\n")
    code, _, err = run(["train", "--data", empty, "--model", tmp_path / "m.json"], capsys)
    assert code == 1 and err.startswith("error: ") and err.count("\n") == 1
    three = tmp_path / "three.csv"
    three.write_text("x1,x2,label\n0,0,a\n1,1,b\n2,0,c\n")
    assert run(["train", "--data", three, "--model", tmp_path / "m.json"], capsys)[0] == 2
    flat = tmp_path / "flat.csv"
    flat.write_text("x1,x2,label\n0,1,a\n0,2,b\n")
    code, _, err = run(["train", "--data", flat, "--model", tmp_path / "m.json"], capsys)
    assert code == 1 and "DegenerateBoundsError" in err
    assert run(["train", "--data", flat, "--model", tmp_path / "m.json", "--d-threshold", "1.5"], capsys)[0] == 2
    assert run(["train", "--data", tmp_path / "missing.csv", "--model", tmp_path / "m.json"], capsys)[0] == 1


def test_predict(blobs, tmp_path, capsys):
    model = tmp_path / "m.json"
    assert run(["train", "--data", blobs, "--model", model], capsys)[0] == 0
    m = Model.load(model)
    c = m.sublabels[0].centroid[0]
    x = m.encoder.decode_2d(c)
    code, out, _ = run(["predict", "--model", model, "--point", f"{x[0]},{x[1]}"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "label,score_0,score_1" and lines[1].split(",")[0] == m.labels[0]
    code, _, err = run(["predict", "--model", model, "--point", "1,2", "--shots", 0], capsys)
    assert code == 2 and "usage" in err
    assert run(["predict", "--model", model, "--point", "1,2,3"], capsys)[0] == 2
    assert run(["predict", "--model", model], capsys)[0] == 2


def test_predict_exact_vs_shots(blobs, tmp_path, capsys):
    model = tmp_path / "m.json"
    run(["train", "--data", blobs, "--model", model], capsys)
    test = tmp_path / "test.csv"
    ds = datasets.load_csv(blobs)
    datasets.save_csv(ds.subset(range(0, 100, 10)), test)
    _, exact, _ = run(["predict", "--model", model, "--data", test], capsys)
    _, sampled, _ = run(["predict", "--model", model, "--data", test, "--shots", 1_000_000, "--seed", 5], capsys)
    labels = lambda text: [row.split(",")[0] for row in text.strip().splitlines()[1:]]
    assert labels(exact) == labels(sampled) and len(labels(exact)) == 10


def test_seed_is_reported(tmp_path, capsys):
    code, _, err = run(["gen", "werner", "--out", tmp_path / "w.csv", "--n-per-class", 4], capsys)
    assert code == 0 and err.startswith("seed: ")
    seed = int(err.split()[1])
    run(["gen", "werner", "--out", tmp_path / "w2.csv", "--n-per-class", 4, "--seed", seed], capsys)
    assert (tmp_path / "w.csv").read_bytes() == (tmp_path / "w2.csv").read_bytes()


def test_model_round_trip_predictions(boundary_model):
    data, model, _ = boundary_model
    ds = datasets.load_csv(data)
    mem = experiments.train(ds, cli.learning.LearnConfig())
    disk = Model.load(model)
    xs = np.random.default_rng(0).uniform([0, 0], [40, 150], (50, 2))
    for rule in ("class", "sublabel"):
        a = classifier.predict_many(mem, xs, rule=rule)
        b = classifier.predict_many(disk, xs, rule=rule)
        assert [(p.label, p.score_0, p.score_1) for p in a] == [(p.label, p.score_0, p.score_1) for p in b]


def test_eval(blobs, tmp_path, capsys):
    model = tmp_path / "m.json"
    run(["train", "--data", blobs, "--model", model], capsys)
    m = Model.load(model)
    cents = tmp_path / "cents.csv"
    vecs = [m.encoder.decode_2d(s.centroid[0]) for s in m.sublabels]
    datasets.save_csv(datasets.LabeledDataset(np.array(vecs), [s.prior_label for s in m.sublabels], {}), cents)
    code, out, _ = run(["eval", "--model", model, "--data", cents], capsys)
    assert code == 0 and "overall" in out and "100.0%" in out.splitlines()[-1]
    code, out, _ = run(["eval", "--model", model, "--data", blobs, "--train", blobs], capsys)
    assert code == 0 and "excluded training points: 100" in out
    other = tmp_path / "other.csv"
    other.write_text("x1,x2,label\n0,0,cat\n1,1,dog\n")
    assert run(["eval", "--model", model, "--data", other], capsys)[0] == 2


def test_eval_random_labels_near_half(tmp_path, capsys):
    rng = np.random.default_rng(6)
    x = rng.uniform(0, 1, (600, 2))
    train = tmp_path / "train.csv"
    test = tmp_path / "test.csv"
    datasets.save_csv(datasets.LabeledDataset(x[:200], list(rng.choice(["a", "b"], 200)), {}), train)
    datasets.save_csv(datasets.LabeledDataset(x[200:], list(rng.choice(["a", "b"], 400)), {}), test)
    model = tmp_path / "m.json"
    assert run(["train", "--data", train, "--model", model, "--d-threshold", 0.9], capsys)[0] == 0
    _, out, _ = run(["eval", "--model", model, "--data", test], capsys)
    acc = float(out.splitlines()[-1].split()[-1].rstrip("%")) / 100
    assert 0.35 <= acc <= 0.65


def test_sweep(boundary_model, tmp_path, capsys):
    data, model, _ = boundary_model
    code, out, _ = run(["sweep", "--model", model, "--grid", "0:40:2,0:150:2"], capsys)
    assert code == 0
    rows = out.strip().splitlines()
    assert rows[0] == "x1,x2,predicted_label,score_0,score_1" and len(rows) == 5
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["sweep", "--model", model, "--out", a, "--svg", tmp_path / "a.svg"], capsys)
    run(["sweep", "--model", model, "--out", b], capsys)
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 100 * 100 + 1
    assert (tmp_path / "a.svg").read_text().startswith("<svg")
    assert run(["sweep", "--model", model, "--grid", "0:40:1,0:150:2"], capsys)[0] == 2


def test_sweep_rejects_4d(tmp_path, capsys):
    data = tmp_path / "w.csv"
    model = tmp_path / "w.json"
    run(["gen", "werner", "--out", data, "--seed", 2, "--n-per-class", 16], capsys)
    assert run(["train", "--data", data, "--model", model], capsys)[0] == 0
    code, _, err = run(["sweep", "--model", model], capsys)
    assert code == 2 and "2D" in err


def test_werner_keep_all_qubits(capsys, tmp_path):
    code, out, _ = run(["werner", "--train-size", 32, "--test-size", 20, "--seed", 1, "--keep-all",
                        "--out", tmp_path / "polar.csv"], capsys)
    assert code == 0
    assert "sublabels: 32  label qubits: 5  total qubits: 7" in out
    rows = (tmp_path / "polar.csv").read_text().splitlines()
    assert rows[0] == "p,phi,label,predicted" and len(rows) == 21


def test_werner_sizes(capsys):
    code, out, _ = run(["werner", "--train-size", 128, "--test-size", 40, "--seed", 2], capsys)
    assert code == 0
    n_sub = int(out.splitlines()[1].split()[1])
    assert n_sub <= 64
    assert run(["werner", "--train-size", 33, "--seed", 1], capsys)[0] == 2


def test_histdemo(capsys):
    code, out, _ = run(["histdemo", "--particles", "1,10,100,100000", "--state", "H", "--seed", 4], capsys)
    assert code == 0
    rows = [r.split(",") for r in out.strip().splitlines()[1:]]
    rates = [(int(n), float(h), float(v)) for n, h, v in rows]
    for _, h, v in rates:
        assert 0 <= h <= 0.51 and 0 <= v <= 0.51
    n, h, v = rates[-1]
    assert h > 0.49 and h > v
    assert run(["histdemo", "--particles", "0"], capsys)[0] == 2


def test_inner(capsys):
    code, out, _ = run(["inner", "0", "0", "3.141592653589793", "0"], capsys)
    assert code == 0 and float(out.splitlines()[0].split("=")[1]) < 1e-12


def test_unknown_command(capsys):
    code, _, err = run(["fly"], capsys)
    assert code == 2 and err.startswith("error: usage:")
