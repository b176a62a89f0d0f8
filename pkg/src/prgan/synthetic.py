"""Synthetic WiFi fingerprints with the UJIIndoorLoc column layout.

Used when the real survey table is not available. Three buildings with 4, 4
and 5 floors carry 40 access points per floor (520 in total). A reading sees an
access point with a probability that decays with horizontal distance and drops
by a constant factor per floor of separation; access points in other buildings
are only seen rarely. Undetected access points carry the ``100`` sentinel.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .data import UJI_NO_SIGNAL, UJI_SIGNAL_COLUMNS

FLOORS_PER_BUILDING = (4, 4, 5)
BUILDING_SIZE = (120.0, 80.0)
BUILDING_GAP = 60.0
WAPS_PER_FLOOR = 40
UJI_RECORDS = 21048  # size of the real survey table


def _layout(rng):
    """Access point positions: (x, y, building, floor) per column."""
    rows = []
    for b, n_floors in enumerate(FLOORS_PER_BUILDING):
        x0 = b * (BUILDING_SIZE[0] + BUILDING_GAP)
        for f in range(n_floors):
            xy = rng.random((WAPS_PER_FLOOR, 2)) * BUILDING_SIZE
            for x, y in xy:
                rows.append((x0 + x, y, b, f))
    waps = np.array(rows)
    assert len(waps) == len(UJI_SIGNAL_COLUMNS)
    return waps


def synthesize_uji(n_records: int = UJI_RECORDS, seed: int = 0, decay: float = 18.0, peak: float = 0.9,
                   floor_attenuation: float = 0.15, leak: float = 0.002) -> pd.DataFrame:
    """Return a DataFrame with WAP001..WAP520, LONGITUDE, LATITUDE, FLOOR, BUILDINGID.

    Records are spread evenly over the 13 floors; positions are uniform inside
    the building footprint. Detected access points get an RSSI in dBm.
    """
    if n_records < 1:
        raise ValueError("n_records must be positive")
    rng = np.random.default_rng(seed)
    waps = _layout(rng)
    floors = [(b, f) for b, n in enumerate(FLOORS_PER_BUILDING) for f in range(n)]
    which = np.arange(n_records) % len(floors)
    rng.shuffle(which)
    building = np.array([floors[i][0] for i in which])
    floor = np.array([floors[i][1] for i in which])
    x = building * (BUILDING_SIZE[0] + BUILDING_GAP) + rng.random(n_records) * BUILDING_SIZE[0]
    y = rng.random(n_records) * BUILDING_SIZE[1]

    dist = np.hypot(x[:, None] - waps[None, :, 0], y[:, None] - waps[None, :, 1])
    same_building = building[:, None] == waps[None, :, 2]
    floor_gap = np.abs(floor[:, None] - waps[None, :, 3])
    prob = peak * np.exp(-dist / decay) * floor_attenuation ** floor_gap
    prob = np.where(same_building, prob, 0.0) + leak
    seen = rng.random(prob.shape) < prob
    rssi = -35.0 - 25.0 * np.log10(1.0 + dist) - 12.0 * floor_gap + rng.normal(0, 4, prob.shape)
    rssi = np.clip(np.round(rssi), -104, -1).astype(np.int64)
    signals = np.where(seen, rssi, UJI_NO_SIGNAL)

    df = pd.DataFrame(signals, columns=UJI_SIGNAL_COLUMNS)
    # metres offset onto a plausible projected origin
    df["LONGITUDE"] = -7700.0 + x
    df["LATITUDE"] = 4864800.0 + y
    df["FLOOR"] = floor
    df["BUILDINGID"] = building
    return df
