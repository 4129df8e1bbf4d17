"""Synthetic data: generic survival simulators and a CMAPSS-format surrogate.

The surrogate writes files with the exact CMAPSS layout (26 whitespace
separated columns, one line per unit-cycle, run to failure) so the full
pipeline can be exercised where the original NASA files are unavailable.
Sensor baselines and noise levels roughly follow the published FD001-FD004
ranges; each unit carries a latent wear severity that both shortens its life
and shifts its sensor readings from the first cycle on.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import TimeToEventDataset

# sensor -> (baseline, per-cycle noise sd, degradation sign); None marks
# sensors that are constant under a single operating condition
_SENSORS = {
    1: (518.67, None, 0),
    2: (642.5, 0.5, 1),
    3: (1590.0, 6.0, 1),
    4: (1409.0, 9.0, 1),
    5: (14.62, None, 0),
    6: (21.61, 0.0014, 1),
    7: (553.4, 0.9, -1),
    8: (2388.1, 0.07, 1),
    9: (9065.0, 22.0, 1),
    10: (1.3, None, 0),
    11: (47.5, 0.27, 1),
    12: (521.4, 0.74, -1),
    13: (2388.1, 0.07, 1),
    14: (8143.0, 19.0, 1),
    15: (8.44, 0.037, 1),
    16: (0.03, None, 0),
    17: (393.0, 1.5, 1),
    18: (2388.0, None, 0),
    19: (100.0, None, 0),
    20: (38.8, 0.18, -1),
    21: (23.3, 0.11, -1),
}

# (n_units, median life, min life, max life, multi-condition)
SURROGATE_SUBSETS = {
    "FD001": (100, 200.0, 128, 362, False),
    "FD002": (260, 200.0, 128, 378, True),
    "FD003": (100, 240.0, 145, 525, False),
    "FD004": (246, 235.0, 128, 543, True),
}

_CONDITIONS = np.array(
    [
        [0.0, 0.0, 100.0],
        [10.0, 0.25, 100.0],
        [20.0, 0.70, 100.0],
        [25.0, 0.62, 60.0],
        [35.0, 0.84, 100.0],
        [42.0, 0.84, 100.0],
    ]
)


def simulate_cmapss(subset: str = "FD001", seed: int = 0) -> np.ndarray:
    """Rows of a surrogate ``train_FDxxx`` table, shape (n_rows, 26)."""
    n_units, median_life, lo, hi, multi = SURROGATE_SUBSETS[subset]
    rng = np.random.default_rng(seed)
    # fixed per-condition sensor offsets (as multiples of the sensor noise sd)
    cond_offsets = rng.normal(0.0, 25.0, size=(len(_CONDITIONS), 22))

    rows = []
    for unit in range(1, n_units + 1):
        severity = rng.normal()
        life = median_life * np.exp(-0.15 * severity + 0.12 * rng.normal())
        life = int(np.clip(round(life), lo, hi))
        cycles = np.arange(1, life + 1)
        frac = cycles / life
        wear = 0.6 * severity + 3.0 * (np.exp(2.5 * frac) - 1) / (np.exp(2.5) - 1)

        if multi:
            cond = rng.integers(0, len(_CONDITIONS), size=life)
            ops = _CONDITIONS[cond] + rng.normal(0, [0.002, 0.0002, 0.0], size=(life, 3))
        else:
            cond = None
            ops = np.column_stack(
                [
                    np.clip(rng.normal(0, 0.0022, life), -0.0087, 0.0087),
                    np.clip(rng.normal(0, 0.0003, life), -0.0006, 0.0006),
                    np.full(life, 100.0),
                ]
            )

        sensors = np.empty((life, 21))
        for s, (base, sd, sign) in _SENSORS.items():
            if sd is None:
                if multi:
                    spread = 0.01 * base
                    sensors[:, s - 1] = base + spread * cond_offsets[cond, s] / 25.0
                else:
                    sensors[:, s - 1] = base
                continue
            value = base + sd * (sign * wear + rng.normal(size=life))
            if multi:
                value = value + sd * cond_offsets[cond, s]
            sensors[:, s - 1] = value

        rows.append(np.column_stack([np.full(life, unit), cycles, ops, sensors]))
    return np.vstack(rows)


def format_cmapss(table: np.ndarray) -> str:
    lines = []
    for row in table:
        head = f"{int(row[0])} {int(row[1])}"
        rest = " ".join(f"{v:.4f}" for v in row[2:])
        lines.append(f"{head} {rest}")
    return "\n".join(lines) + "\n"


def write_surrogate_cmapss(out_dir, subsets=("FD001", "FD002", "FD003", "FD004"), seed: int = 0) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, subset in enumerate(subsets):
        path = out_dir / f"train_{subset}.txt"
        path.write_text(format_cmapss(simulate_cmapss(subset, seed + k)))
        paths.append(path)
    return paths


def simulate_cox(n=500, beta=(1.0, -1.0), base_rate=0.1, censor_fraction=0.2, seed=0) -> TimeToEventDataset:
    """Exponential PH data with independent uniform censoring.

    The censoring upper bound is tuned by bisection so that roughly
    ``censor_fraction`` of units are censored.
    """
    rng = np.random.default_rng(seed)
    beta = np.asarray(beta, dtype=float)
    X = rng.normal(size=(n, len(beta)))
    rate = base_rate * np.exp(X @ beta)
    T = rng.exponential(1.0 / rate)
    u = rng.uniform(size=n)
    if censor_fraction <= 0:
        C = np.full(n, np.inf)
    else:
        lo, hi = 1e-6, 1e6
        for _ in range(200):
            mid = np.sqrt(lo * hi)
            frac = np.mean(u * mid < T)
            lo, hi = (mid, hi) if frac > censor_fraction else (lo, mid)
        C = u * np.sqrt(lo * hi)
    time = np.minimum(T, C)
    event = T <= C
    return TimeToEventDataset(np.arange(n), time, event, X, [f"x{j}" for j in range(len(beta))])


def simulate_two_group(n=200, n_noise=2, censor_fraction=0.0, seed=0) -> TimeToEventDataset:
    """Feature 0 < 0 fails near t=10, otherwise near t=100."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 1 + n_noise))
    T = np.where(X[:, 0] < 0, 10.0, 100.0) * np.exp(0.1 * rng.normal(size=n))
    event = rng.uniform(size=n) >= censor_fraction
    names = ["x0"] + [f"noise{j}" for j in range(n_noise)]
    return TimeToEventDataset(np.arange(n), T, event, X, names)
