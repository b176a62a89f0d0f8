import numpy as np
import pandas as pd
import pytest

from prgan.data import (
    UJI_SIGNAL_COLUMNS,
    DatasetKind,
    LabeledDataset,
    derive_mnist_labels,
    load_mnist,
    load_uji,
    mnist_dataset,
    read_idx,
    write_idx,
)
from prgan.errors import MissingCoordinates, OutOfRange, SchemaMismatch, TooFewRecords
from prgan.splits import SplitPlan, slice_dataset, validation_split
from prgan.synthetic import synthesize_uji


def toy(n=60, seed=0, k_sensitive=2):
    rng = np.random.default_rng(seed)
    return LabeledDataset(rng.random((n, 4)), rng.integers(0, 2, n), rng.integers(0, k_sensitive, n),
                          DatasetKind.REAL_VALUED, name="toy")


@pytest.mark.parametrize("digit,labels", [(0, (0, 0)), (5, (1, 0)), (6, (0, 1)), (7, (1, 1)), (9, (1, 1))])
def test_mnist_labels(digit, labels):
    assert derive_mnist_labels(digit) == labels


@pytest.mark.parametrize("digit", [-1, 10])
def test_mnist_labels_out_of_range(digit):
    with pytest.raises(OutOfRange):
        derive_mnist_labels(digit)


def test_idx_round_trip(tmp_path):
    images = np.random.default_rng(0).integers(0, 256, size=(30, 28, 28)).astype(np.uint8)
    digits = np.arange(30, dtype=np.uint8) % 10
    write_idx(tmp_path / "img.idx.gz", images)
    write_idx(tmp_path / "lab.idx", digits)
    assert np.array_equal(read_idx(tmp_path / "img.idx.gz"), images)
    ds = load_mnist(tmp_path / "img.idx.gz", tmp_path / "lab.idx")
    assert ds.features.shape == (30, 784)
    assert ds.features.max() <= 1.0 and ds.kind is DatasetKind.REAL_VALUED
    assert ds.target_labels.tolist() == [d % 2 for d in digits]


def test_idx_bad_magic(tmp_path):
    (tmp_path / "bad").write_bytes(b"\x01\x02\x03\x04" + b"\x00" * 12)
    with pytest.raises(SchemaMismatch):
        read_idx(tmp_path / "bad")


def test_dataset_is_read_only_and_validated():
    ds = toy()
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0
    with pytest.raises(ValueError):
        LabeledDataset(np.full((2, 2), 2.0), [0, 1], [0, 1], DatasetKind.REAL_VALUED)
    with pytest.raises(ValueError):
        LabeledDataset(np.full((2, 2), 0.5), [0, 1], [0, 1], DatasetKind.BINARY)


def test_dataset_save_load(tmp_path):
    ds = toy()
    ds.save(tmp_path / "d.npz")
    back = LabeledDataset.load(tmp_path / "d.npz")
    assert back.content_hash() == ds.content_hash()
    assert back.name == "toy" and back.sensitive_classes == ds.sensitive_classes


def test_uji_loader_schema():
    table = synthesize_uji(260, seed=1)
    ds = load_uji(table)
    assert ds.n_features == 520 and ds.kind is DatasetKind.BINARY
    assert ds.target_classes == 13 and ds.sensitive_classes == 104
    assert set(np.unique(ds.features)) <= {0.0, 1.0}
    # sentinel 100 means "no reading"
    assert ds.features.sum() == (table[UJI_SIGNAL_COLUMNS].to_numpy() != 100).sum()


def test_uji_sensitive_label_is_floor_times_eight_plus_cluster():
    ds = load_uji(synthesize_uji(520, seed=2))
    assert np.array_equal(ds.sensitive_labels // 8, ds.target_labels)
    for f in range(13):
        assert len(np.unique(ds.sensitive_labels[ds.target_labels == f] % 8)) == 8


def test_uji_missing_column_named():
    table = synthesize_uji(130, seed=0).drop(columns=["WAP017"])
    with pytest.raises(SchemaMismatch) as e:
        load_uji(table)
    assert e.value.column == "WAP017"


def test_uji_missing_coordinates():
    table = synthesize_uji(130, seed=0)
    table.loc[3, "LATITUDE"] = np.nan
    with pytest.raises(MissingCoordinates):
        load_uji(table)


def test_uji_from_csv(tmp_path):
    table = synthesize_uji(130, seed=0)
    table.to_csv(tmp_path / "u.csv", index=False)
    a, b = load_uji(tmp_path / "u.csv"), load_uji(table)
    assert a.content_hash() == b.content_hash()


def test_synthetic_generator_is_deterministic():
    pd.testing.assert_frame_equal(synthesize_uji(100, seed=3), synthesize_uji(100, seed=3))


# --------------------------------------------------------------------------- splits

def test_slices_partition_records():
    ds = toy(200)
    plan = slice_dataset(ds, seed=0)
    everything = np.concatenate([s.all for s in plan.slices().values()])
    assert sorted(everything.tolist()) == list(range(200))
    sizes = [len(s.all) for s in plan.slices().values()]
    assert max(sizes) - min(sizes) <= 1 and sizes[0] >= sizes[-1]
    for s in plan.slices().values():
        assert len(s.test) == len(s.all) // 5


def test_slices_preserve_joint_class_proportions():
    ds = toy(900, k_sensitive=3)
    plan = slice_dataset(ds, seed=4)
    key = ds.target_labels * 3 + ds.sensitive_labels
    overall = np.bincount(key, minlength=6) / len(key)
    for s in plan.slices().values():
        share = np.bincount(key[s.all], minlength=6) / len(s.all)
        assert np.abs(share - overall).max() < 0.01


def test_slice_seed_determinism(tmp_path):
    ds = toy(120)
    a, b = slice_dataset(ds, 7), slice_dataset(ds, 7)
    assert a.to_json() == b.to_json()
    a.save(tmp_path / "p.json")
    assert SplitPlan.load(tmp_path / "p.json").to_json() == a.to_json()
    assert slice_dataset(ds, 8).to_json() != a.to_json()


def test_too_few_records():
    with pytest.raises(TooFewRecords):
        slice_dataset(toy(14), 0)
    ds = LabeledDataset(np.zeros((20, 2)), [0] * 18 + [1] * 2, [0] * 20, DatasetKind.REAL_VALUED)
    with pytest.raises(TooFewRecords):
        slice_dataset(ds, 0)


def test_validation_split_is_four_to_one():
    ds = toy(100)
    fit, val = validation_split(ds, np.arange(100), seed=0)
    assert len(val) == 20 and len(fit) == 80
    assert not set(fit) & set(val)


def test_mnist_dataset_shape():
    ds = mnist_dataset(np.zeros((3, 28, 28), dtype=np.uint8), [1, 6, 9])
    assert ds.input_shape == (1, 28, 28)
    assert ds.sensitive_labels.tolist() == [0, 1, 1]
