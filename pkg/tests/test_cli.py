import csv
import json

import pytest

from prgan import cli
from prgan.synthetic import synthesize_uji
from prgan.theory import DiscreteJointDistribution


@pytest.fixture(autouse=True)
def home(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.HOME_ENV, str(tmp_path))
    return tmp_path


def write_config(path, **kw):
    path.write_text("".join(f"{k} = {v}\n" for k, v in kw.items()))
    return path


@pytest.fixture(scope="module")
def uji_run(tmp_path_factory):
    """A small synthetic WiFi run prepared and trained once for the module."""
    home = tmp_path_factory.mktemp("uji")
    mp = pytest.MonkeyPatch()
    mp.setenv(cli.HOME_ENV, str(home))
    assert cli.main(["prepare", "uji", "--records", "2500", "--seed", "3", "--run-id", "w"]) == 0
    cfg = write_config(home / "prgan.cfg", dataset="uji", seed=3, run_id="w", epochs=1, classifier_epochs=3)
    assert cli.main(["train", "--config", str(cfg)]) == 0
    yield home, cfg
    mp.undo()


@pytest.fixture
def uji(uji_run, monkeypatch):
    monkeypatch.setenv(cli.HOME_ENV, str(uji_run[0]))
    return uji_run


def test_prepare_is_deterministic(home):
    assert cli.main(["prepare", "mnist", "--seed", "7", "--run-id", "a"]) == 0
    assert cli.main(["prepare", "mnist", "--seed", "7", "--run-id", "b"]) == 0
    a = (home / "runs/a/data/splits.json").read_bytes()
    assert a == (home / "runs/b/data/splits.json").read_bytes()
    man = json.loads((home / "runs/a/manifest.json").read_text())
    assert set(man["files"]) == {"data/dataset.npz", "data/splits.json"}


def test_prepare_uji_reports_520_features(home, capsys):
    assert cli.main(["prepare", "uji", "--records", "1500"]) == 0
    out = capsys.readouterr().out
    assert "520 binary features" in out
    assert (home / "runs/uji-seed0/data/splits.json").exists()


def test_missing_csv_column_is_input_error(home, capsys):
    table = synthesize_uji(300, seed=0).drop(columns=["FLOOR"])
    path = home / "uji.csv"
    table.to_csv(path, index=False)
    assert cli.main(["prepare", "uji", "--csv", str(path)]) == 2
    assert "FLOOR" in capsys.readouterr().err


def test_usage_errors():
    assert cli.main(["evaluate", "bogus"]) == 64
    assert cli.main([]) == 64
    assert cli.main(["theory", "tv"]) == 64
    assert cli.main(["prepare", "mnist", "--images", "x"]) == 64


def test_theory_random_theorem2_has_no_violations(capsys):
    assert cli.main(["theory", "theorem2", "--random", "500"]) == 0
    assert "500 instances, 0 violations" in capsys.readouterr().out


def test_theory_flipmap_on_balanced_file(home, capsys):
    dist = DiscreteJointDistribution([0, 1, 2, 3], [0.25, 0.25, 0.25, 0.25], [0, 1, 0, 1], [0, 0, 1, 1])
    path = home / "balanced.json"
    dist.save(path)
    assert cli.main(["theory", "flipmap", str(path)]) == 0
    assert "map verified=True" in capsys.readouterr().out


def test_theory_malformed_instance(home, capsys):
    path = home / "bad.json"
    path.write_text(json.dumps({"points": [0, 1], "masses": [0.9, 0.9], "dp_labels": [0, 1], "dl_labels": [0, 0]}))
    assert cli.main(["theory", "tv", str(path)]) == 65
    assert str(path) in capsys.readouterr().err


def test_evaluate_cost_prints_table(capsys):
    assert cli.main(["evaluate", "cost", "--dataset", "mnist"]) == 0
    out = capsys.readouterr().out
    assert "generator" in out and "params" in out


def test_missing_artifact_names_entry(home, capsys):
    cfg = write_config(home / "c.cfg", dataset="mnist", run_id="nothing")
    assert cli.main(["evaluate", "transfer", "--config", str(cfg)]) == 2
    assert "data/dataset.npz" in capsys.readouterr().err


def test_train_writes_checkpoints_and_log(uji):
    home, _ = uji
    root = home / "runs/w"
    for rel in ("checkpoints/generator_prgan.pt", "checkpoints/discriminator_prgan.pt",
                "checkpoints/target_M1.pt", "data/perturbed_prgan_C_test.npz", "data/perturbed_prgan_C_train.npz"):
        assert (root / rel).exists(), rel
    with open(root / "reports/loss_log_prgan.csv") as fh:
        header = next(csv.reader(fh))
    assert {"L_D", "L_GAN", "L_Adv", "L_hinge", "L_G"} <= set(header)
    man = json.loads((root / "manifest.json").read_text())
    assert "train:PRGAN" in man["commands"]
    assert "checkpoints/generator_prgan.pt" in man["files"]


def test_train_ap_log_lacks_target(uji):
    home, _ = uji
    cfg = write_config(home / "ap.cfg", dataset="uji", seed=3, run_id="w", epochs=1, method="AP",
                       classifier_epochs=3)
    assert cli.main(["train", "--config", str(cfg)]) == 0
    with open(home / "runs/w/reports/loss_log_ap.csv") as fh:
        header = next(csv.reader(fh))
    assert "L_target" not in header and "L_GAN" in header


def test_train_dp_has_no_checkpoint(uji):
    home, _ = uji
    cfg = write_config(home / "dp.cfg", dataset="uji", seed=3, run_id="w", method="DP", threshold=0.1,
                       epsilons=6, classifier_epochs=3)
    before = {p.name for p in (home / "runs/w/checkpoints").iterdir()}
    assert cli.main(["train", "--config", str(cfg)]) == 0
    assert {p.name for p in (home / "runs/w/checkpoints").iterdir()} == before
    chosen = json.loads((home / "runs/w/reports/dp_epsilon.json").read_text())
    assert chosen["epsilon"] > 0


def test_evaluate_transfer_and_training_utility(uji, capsys):
    home, cfg = uji
    assert cli.main(["evaluate", "transfer", "--config", str(cfg)]) == 0
    assert cli.main(["evaluate", "training-utility", "--config", str(cfg)]) == 0
    reports = home / "runs/w/reports"
    assert (reports / "transfer_prgan.csv").exists()
    assert (reports / "training-utility_prgan.json").exists()
    assert "utility drop" in capsys.readouterr().out


def test_evaluate_is_idempotent(uji):
    home, cfg = uji
    path = home / "runs/w/reports/transfer_prgan.csv"
    cli.main(["evaluate", "transfer", "--config", str(cfg)])
    first = path.read_bytes()
    cli.main(["evaluate", "transfer", "--config", str(cfg)])
    assert path.read_bytes() == first
