import subprocess
import sys

import pytest

from termkrig.cli import main
from termkrig.market import write_snapshot
from termkrig.synthetic import (
    STANDARD_ASOF,
    band_snapshot,
    crossed_snapshot,
    standard_snapshot,
)

pytestmark = pytest.mark.usefixtures("quote_file")


@pytest.fixture(scope="module")
def quote_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "quotes.csv"
    snapshot, _ = standard_snapshot()
    write_snapshot(snapshot, str(path))
    return str(path)


@pytest.fixture(scope="module")
def calibrated_dir(tmp_path_factory, quote_file):
    out = tmp_path_factory.mktemp("calib")
    rc = main(
        [
            "calibrate",
            "--input", quote_file,
            "--asof", STANDARD_ASOF.isoformat(),
            "--out", str(out),
        ]
    )
    assert rc == 0
    return out


def read_table(out_dir):
    lines = (out_dir / "table.csv").read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_calibrate_writes_table_and_model(calibrated_dir):
    header, rows = read_table(calibrated_dir)
    assert header == ["id", "bid", "ask", "F", "F_K", "F_B"]
    assert len(rows) == 56
    assert (calibrated_dir / "model.json").exists()


def test_table_rows_in_input_order_and_repriced(calibrated_dir, quote_file):
    snapshot, _ = standard_snapshot()
    _, rows = read_table(calibrated_dir)
    assert [r[0] for r in rows] == [q.id for q in snapshot.quotes]
    for r in rows:
        bid, ask, f, fk = float(r[1]), float(r[2]), float(r[3]), float(r[4])
        mid = 0.5 * (bid + ask)
        tol = 1e-10 * (1 + abs(mid))
        assert bid - tol <= f <= ask + tol
        assert bid - tol <= fk <= ask + tol


def test_gamma_zero_makes_columns_identical(tmp_path, quote_file):
    out = tmp_path / "g0"
    rc = main(
        [
            "calibrate",
            "--input", quote_file,
            "--asof", STANDARD_ASOF.isoformat(),
            "--gamma", "0",
            "--out", str(out),
        ]
    )
    assert rc == 0
    _, rows = read_table(out)
    for r in rows:
        assert r[3] == r[4]


def test_missing_input_exits_2(tmp_path, capsys):
    rc = main(
        [
            "calibrate",
            "--input", str(tmp_path / "absent.csv"),
            "--asof", "2021-03-15",
            "--out", str(tmp_path / "out"),
        ]
    )
    assert rc == 2
    assert "absent.csv" in capsys.readouterr().err


def test_crossed_market_exits_3(tmp_path, capsys):
    path = tmp_path / "crossed.csv"
    write_snapshot(crossed_snapshot(), str(path))
    rc = main(
        [
            "calibrate",
            "--input", str(path),
            "--asof", "2021-12-15",
            "--out", str(tmp_path / "out"),
        ]
    )
    assert rc == 3
    err = capsys.readouterr().err
    ids = {"M01", "M02", "M03", "Q1"}
    assert any(qid in err for qid in ids)


def test_low_samples_config_error(tmp_path, quote_file):
    rc = main(
        [
            "band",
            "--input", quote_file,
            "--asof", STANDARD_ASOF.isoformat(),
            "--samples", "50",
            "--out", str(tmp_path / "bandout"),
        ]
    )
    assert rc == 5


def test_bad_quantiles_config_error(tmp_path, quote_file):
    rc = main(
        [
            "band",
            "--input", quote_file,
            "--asof", STANDARD_ASOF.isoformat(),
            "--quantiles", "0.9,0.1",
            "--out", str(tmp_path / "bandout"),
        ]
    )
    assert rc == 5


def test_negative_gamma_config_error(tmp_path, quote_file):
    rc = main(
        [
            "calibrate",
            "--input", quote_file,
            "--asof", STANDARD_ASOF.isoformat(),
            "--gamma", "-1",
            "--out", str(tmp_path / "out"),
        ]
    )
    assert rc == 5


def test_calibrate_deterministic_bytes(tmp_path, quote_file):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        rc = main(
            [
                "calibrate",
                "--input", quote_file,
                "--asof", STANDARD_ASOF.isoformat(),
                "--out", str(out),
            ]
        )
        assert rc == 0
        outs.append(
            ((out / "table.csv").read_bytes(), (out / "model.json").read_bytes())
        )
    assert outs[0] == outs[1]


@pytest.fixture(scope="module")
def band_dir(tmp_path_factory):
    data = tmp_path_factory.mktemp("banddata")
    path = data / "band_quotes.csv"
    snapshot, _ = band_snapshot()
    write_snapshot(snapshot, str(path))
    model_out = tmp_path_factory.mktemp("bandmodel")
    rc = main(
        [
            "calibrate",
            "--input", str(path),
            "--asof", STANDARD_ASOF.isoformat(),
            "--no-seasonality",
            "--out", str(model_out),
        ]
    )
    assert rc == 0
    out = tmp_path_factory.mktemp("bandout")
    rc = main(
        [
            "band",
            "--model", str(model_out / "model.json"),
            "--seed", "7",
            "--samples", "4000",
            "--out", str(out),
        ]
    )
    assert rc == 0
    return model_out, out


def test_band_emits_four_period_files(band_dir):
    _, out = band_dir
    for period in (1, 3, 6, 12):
        path = out / f"band_{period}m.csv"
        assert path.exists()
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,lower,mean,upper"
        assert len(lines) - 1 == 60 - period + 1
        for line in lines[1:]:
            t, lo, mean, hi = (float(v) for v in line.split(","))
            # pinned nodes collapse to zero width; the sample mean may sit
            # an ulp outside the (equal) quantiles
            assert lo - 1e-9 <= mean <= hi + 1e-9


def test_band_inline_calibration(tmp_path, quote_file):
    out = tmp_path / "inline"
    rc = main(
        [
            "band",
            "--input", quote_file,
            "--asof", STANDARD_ASOF.isoformat(),
            "--seed", "3",
            "--samples", "500",
            "--out", str(out),
        ]
    )
    assert rc == 0
    assert (out / "band_12m.csv").exists()


def test_band_rerun_byte_identical(band_dir, tmp_path):
    model_out, out = band_dir
    again = tmp_path / "again"
    rc = main(
        [
            "band",
            "--model", str(model_out / "model.json"),
            "--seed", "7",
            "--samples", "4000",
            "--out", str(again),
        ]
    )
    assert rc == 0
    for period in (1, 3, 6, 12):
        a = (out / f"band_{period}m.csv").read_bytes()
        b = (again / f"band_{period}m.csv").read_bytes()
        assert a == b


def test_price_matches_table_row(calibrated_dir, capsys):
    _, rows = read_table(calibrated_dir)
    # quote M03 covers 2021-06
    rc = main(
        [
            "price",
            "--model", str(calibrated_dir / "model.json"),
            "--window", "2021-06:2021-06",
        ]
    )
    assert rc == 0
    printed = float(capsys.readouterr().out.strip())
    f_m03 = float(next(r for r in rows if r[0] == "M03")[3])
    assert printed == pytest.approx(f_m03, abs=1e-12)


def test_price_two_month_window_day_count_oracle(calibrated_dir, capsys):
    rc = main(
        [
            "price",
            "--model", str(calibrated_dir / "model.json"),
            "--window", "2021-04:2021-05",
        ]
    )
    assert rc == 0
    printed = float(capsys.readouterr().out.strip())

    from termkrig.persist import load_model

    loaded = load_model(str(calibrated_dir / "model.json"))
    xi = loaded.model.xi
    oracle = (30 * xi[0] + 31 * xi[1]) / 61
    assert printed == pytest.approx(oracle, abs=1e-12)


def test_price_off_grid_window_exits_5(calibrated_dir, capsys):
    rc = main(
        [
            "price",
            "--model", str(calibrated_dir / "model.json"),
            "--window", "2030-01:2030-02",
        ]
    )
    assert rc == 5


def test_env_var_defaults(tmp_path, quote_file, monkeypatch):
    monkeypatch.setenv("TERMKRIG_SAMPLES", "50")
    rc = main(
        [
            "band",
            "--input", quote_file,
            "--asof", STANDARD_ASOF.isoformat(),
            "--out", str(tmp_path / "out"),
        ]
    )
    assert rc == 5  # env default below the minimum triggers config validation


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "termkrig.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "kind,window,window2,bid,ask,id" in proc.stdout
