import io

import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rashomon_surv.core import TimeToEventDataset
from rashomon_surv.ingest import (
    CMAPSS_COLUMNS,
    CensoringSpec,
    CmapssParseError,
    CovariateSpec,
    CovariateStrategy,
    Standardizer,
    build_survival_dataset,
    check_consecutive_cycles,
    drop_constant_columns,
    event_counts,
    parse_cmapss,
    read_dataset_csv,
    records_from_table,
    split_train_test,
    write_dataset_csv,
)
from rashomon_surv.simulate import format_cmapss, simulate_cmapss

TWO_LINES = (
    "1 1 -0.0007 -0.0004 100.0 518.67 641.82 1589.70 1400.60 14.62 21.61 554.36 2388.06 "
    "9046.19 1.30 47.47 521.66 2388.02 8138.62 8.4195 0.03 392 2388 100.00 39.06 23.4190\n"
    "1 2 0.0019 -0.0003 100.0 518.67 642.15 1591.82 1403.14 14.62 21.61 553.75 2388.04 "
    "9044.07 1.30 47.49 522.28 2388.07 8131.49 8.4318 0.03 392 2388 100.00 39.00 23.4236\n"
)


def toy_table(lifetimes, n_feat=2, seed=0):
    """Per-cycle table: feature k at cycle c of unit u is a known deterministic value."""
    rng = np.random.default_rng(seed)
    rows = []
    for u, life in enumerate(lifetimes, start=1):
        for c in range(1, life + 1):
            rows.append([u, c] + list(rng.normal(size=n_feat)))
    return pd.DataFrame(rows, columns=["unit_number", "time_in_cycles"] + [f"f{k}" for k in range(n_feat)])


def test_parse_two_lines_against_hand_parse():
    df = parse_cmapss(TWO_LINES.encode())
    assert list(df.columns) == CMAPSS_COLUMNS
    assert len(df) == 2
    hand = [[float(tok) for tok in line.split()] for line in TWO_LINES.strip().splitlines()]
    np.testing.assert_array_equal(df.to_numpy(dtype=float), np.array(hand))
    assert df["unit_number"].tolist() == [1, 1]
    assert df["time_in_cycles"].tolist() == [1, 2]
    rec = records_from_table(df)[1]
    assert rec.time_in_cycles == 2 and rec.sensor_21 == 23.4236 and rec.op_set_3 == 100.0


def test_parse_stream_and_path(tmp_path):
    p = tmp_path / "train_FD001.txt"
    p.write_text(TWO_LINES)
    pd.testing.assert_frame_equal(parse_cmapss(p), parse_cmapss(io.BytesIO(TWO_LINES.encode())))
    pd.testing.assert_frame_equal(parse_cmapss(str(p)), parse_cmapss(io.StringIO(TWO_LINES)))


def test_parse_empty():
    assert len(parse_cmapss(b"")) == 0


def test_parse_short_line_reports_line_number():
    bad = TWO_LINES + "2 1 " + " ".join(["1.0"] * 23) + "\n"
    with pytest.raises(CmapssParseError) as err:
        parse_cmapss(bad.encode())
    assert err.value.line_no == 3


def test_parse_non_numeric_token():
    bad = TWO_LINES.replace("641.82", "abc")
    with pytest.raises(CmapssParseError) as err:
        parse_cmapss(bad.encode())
    assert err.value.line_no == 1


def test_consecutive_cycles_check():
    check_consecutive_cycles(parse_cmapss(TWO_LINES.encode()))
    with pytest.raises(ValueError):
        check_consecutive_cycles(parse_cmapss(TWO_LINES.replace("1 2 0.0019", "1 3 0.0019").encode()))


def test_drop_constant_fd001_like():
    df = parse_cmapss(format_cmapss(simulate_cmapss("FD001", seed=1)[:500]).encode())
    reduced, dropped = drop_constant_columns(df)
    assert "op_set_3" in dropped and "sensor_1" in dropped
    for c in reduced.columns[2:]:
        assert reduced[c].nunique() >= 2


def test_drop_constant_none():
    df = toy_table([5, 6])
    reduced, dropped = drop_constant_columns(df)
    assert dropped == []
    pd.testing.assert_frame_equal(reduced, df)


def test_drop_constant_all_constant_errors():
    df = toy_table([3, 3])
    df[["f0", "f1"]] = 1.0
    with pytest.raises(ValueError):
        drop_constant_columns(df)


def test_censoring_failure_before_censor_time():
    ds = build_survival_dataset(toy_table([150]), CensoringSpec(200))
    assert ds.time.tolist() == [150.0] and ds.event.tolist() == [True]


def test_censoring_long_unit_is_censored():
    ds = build_survival_dataset(toy_table([362, 100]), CensoringSpec(200))
    assert ds.time.tolist() == [200.0, 100.0]
    assert ds.event.tolist() == [False, True]


def test_failure_exactly_at_censor_time_is_event():
    ds = build_survival_dataset(toy_table([200, 50]), CensoringSpec(200))
    assert ds.event.tolist() == [True, True]


def test_window_mean_covariates():
    table = toy_table([120, 80], seed=4)
    ds = build_survival_dataset(table, CensoringSpec(100), CovariateSpec("window_mean", 30))
    for i, unit in enumerate([1, 2]):
        g = table[table.unit_number == unit]
        expected = [sum(g[f].iloc[:30]) / 30 for f in ("f0", "f1")]
        np.testing.assert_allclose(ds.X[i], expected, rtol=1e-13)


def test_window_longer_than_trajectory_falls_back():
    table = toy_table([10])
    ds = build_survival_dataset(table, CensoringSpec(100), CovariateSpec("window_mean", 30))
    np.testing.assert_allclose(ds.X[0], table[["f0", "f1"]].mean().to_numpy())


def test_first_cycle_covariates():
    table = toy_table([10, 12])
    ds = build_survival_dataset(table, CensoringSpec(100), CovariateSpec(CovariateStrategy.FIRST_CYCLE))
    np.testing.assert_array_equal(ds.X[1], table[table.unit_number == 2][["f0", "f1"]].iloc[0])


def test_empty_records_rejected():
    with pytest.raises(ValueError):
        build_survival_dataset(toy_table([]), CensoringSpec(10))


def test_invalid_specs():
    with pytest.raises(ValueError):
        CensoringSpec(0)
    with pytest.raises(ValueError):
        CovariateSpec(window_length=0)


@given(
    st.lists(st.integers(1, 60), min_size=1, max_size=8),
    st.floats(1, 70),
    st.integers(1, 40),
)
def test_censoring_rule_and_no_leakage(lifetimes, censor_time, window):
    lifetimes[0] = 1  # guarantee at least one event
    table = toy_table(lifetimes)
    spec = CovariateSpec("window_mean", window)
    ds = build_survival_dataset(table, CensoringSpec(censor_time), spec)
    for life, t, e in zip(lifetimes, ds.time, ds.event):
        assert t <= censor_time or e
        assert e == (life <= censor_time)
        assert t == (life if e else censor_time)

    # scramble every cycle beyond min(T_fail, censor_time): output must not change
    mutated = table.copy()
    t_fail = mutated.groupby("unit_number")["time_in_cycles"].transform("max")
    late = mutated["time_in_cycles"] > np.minimum(t_fail, censor_time)
    mutated.loc[late, ["f0", "f1"]] = 1e6
    ds2 = build_survival_dataset(mutated, CensoringSpec(censor_time), spec)
    np.testing.assert_array_equal(ds.X, ds2.X)
    np.testing.assert_array_equal(ds.time, ds2.time)


@given(st.lists(st.integers(1, 300), min_size=1, max_size=20), st.lists(st.floats(1, 400), min_size=2, max_size=6))
def test_event_count_monotone_in_censor_time(lifetimes, cs):
    table = pd.DataFrame(
        [[u, c, 0.0] for u, life in enumerate(lifetimes, 1) for c in range(1, life + 1)],
        columns=["unit_number", "time_in_cycles", "f0"],
    )
    counts = event_counts(table, sorted(cs))
    vals = [counts[float(c)] for c in sorted(cs)]
    assert vals == sorted(vals)


def _dataset(n, seed=0):
    rng = np.random.default_rng(seed)
    return TimeToEventDataset(
        np.arange(100, 100 + n), rng.uniform(1, 10, n), np.r_[True, rng.uniform(size=n - 1) < 0.7],
        rng.normal(size=(n, 2)), ["a", "b"],
    )


def test_split_sizes_100():
    train, test = split_train_test(_dataset(100), 0.8, seed=1)
    assert (len(train), len(test)) == (80, 20)


def test_split_deterministic():
    a = split_train_test(_dataset(50), 0.8, seed=7)
    b = split_train_test(_dataset(50), 0.8, seed=7)
    assert a[0].unit_ids.tolist() == b[0].unit_ids.tolist()
    assert a[1].unit_ids.tolist() == b[1].unit_ids.tolist()


@pytest.mark.parametrize("seed", range(20))
def test_split_five_units_partition(seed):
    data = _dataset(5)
    train, test = split_train_test(data, 0.8, seed)
    assert (len(train), len(test)) == (4, 1)
    tr, te = set(train.unit_ids.tolist()), set(test.unit_ids.tolist())
    assert tr.isdisjoint(te) and tr | te == set(data.unit_ids.tolist())


@pytest.mark.parametrize("frac", [0.0, 1.0, -0.2, 1.5])
def test_split_bad_fraction(frac):
    with pytest.raises(ValueError):
        split_train_test(_dataset(10), frac, 0)


def test_standardizer_uses_train_statistics():
    data = _dataset(40)
    train, test = split_train_test(data, 0.75, 0)
    sc = Standardizer.fit(train)
    ztrain, ztest = sc.transform(train), sc.transform(test)
    np.testing.assert_allclose(ztrain.X.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(ztrain.X.std(axis=0), 1, atol=1e-12)
    np.testing.assert_allclose(ztest.X, (test.X - train.X.mean(0)) / train.X.std(0))


def test_dataset_csv_roundtrip(tmp_path):
    data = _dataset(12)
    path = tmp_path / "ds.csv"
    write_dataset_csv(data, path)
    assert path.read_text().splitlines()[0] == "unit_id,time,event,a,b"
    back = read_dataset_csv(path)
    np.testing.assert_array_equal(back.time, data.time)
    np.testing.assert_array_equal(back.event, data.event)
    np.testing.assert_array_equal(back.X, data.X)
    assert back.unit_ids.tolist() == data.unit_ids.tolist()
