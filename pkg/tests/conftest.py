import numpy as np
import pytest
import torch

from prgan.config import ClassifierConfig
from prgan.data import DatasetKind, LabeledDataset
from prgan.experiment import build_context

torch.set_num_threads(1)


def four_cell_data(n=800, seed=0, spread=0.06):
    """Two-feature data: target = x0 > 0.5, sensitive = x1 > 0.5, equal cell masses."""
    rng = np.random.default_rng(seed)
    cells = rng.integers(0, 4, size=n)
    y_l, y_p = cells // 2, cells % 2
    centers = np.stack([0.25 + 0.5 * y_l, 0.25 + 0.5 * y_p], axis=1)
    x = np.clip(centers + rng.normal(0, spread, size=(n, 2)), 0, 1)
    return LabeledDataset(x, y_l, y_p, DatasetKind.REAL_VALUED, name="vector")


@pytest.fixture(scope="session")
def cell_context():
    ds = four_cell_data()
    return build_context(ds, seed=0, config=ClassifierConfig(epochs=60, lr=0.01, batch_size=32))


# acceptance criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
