import csv
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pytest

from shapeplot.cli import main
from shapeplot.render import FigureSpec, read_table, render

SCHEMES = ["uniform", "ess", "kess", "bess"]


def write_fixture(d: Path):
    """Small, fully populated results directory with known values."""
    with (d / "snr_sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "power_dbm", "n_spans", "seed", "snr_db"])
        for spans in (1, 4):
            for i, s in enumerate(SCHEMES):
                for p in (0, 1, 2):
                    for seed in (1, 2):
                        w.writerow([s, p, spans, seed, 30 - 2 * spans + i + 0.5 * p + 0.01 * seed])
    with (d / "acf.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "n_spans", "power_dbm", "tau", "r_theta"])
        for spans in (1, 4):
            for i, s in enumerate(SCHEMES):
                for tau in range(0, 11):
                    w.writerow([s, spans, 1.0, tau, 1.0 / (1 + tau + i)])
    with (d / "edi.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "window", "psi"])
        for i, s in enumerate(SCHEMES):
            for win in (10, 30, 54, 108, 150):
                w.writerow([s, win, 0.05 * (i + 1) + 0.001 * win])


@pytest.fixture
def results_dir(tmp_path):
    write_fixture(tmp_path)
    return tmp_path


class TestGoldenSeries:
    def test_plotted_series_equal_csv_values(self, results_dir, tmp_path):
        out = tmp_path / "fig.png"
        spec = FigureSpec(results_dir, out)
        render(spec)
        assert out.exists() and out.stat().st_size > 0

        # re-render onto a live figure to introspect the drawn data
        import shapeplot.render as R

        tables = {p: read_table(results_dir, n) for p, n in
                  {"snr": "snr_sweep.csv", "acf": "acf.csv", "edi": "edi.csv"}.items()}
        fig, axes = plt.subplots(1, 3)
        R._plot_snr(axes[0], tables["snr"], spec)
        R._plot_acf(axes[1], tables["acf"], spec)
        R._plot_edi(axes[2], tables["edi"], spec)

        # golden: SNR lines are seed-means straight from the CSV
        lines = {ln.get_label(): ln for ln in axes[0].get_lines()}
        for i, s in enumerate(SCHEMES):
            x, y = lines[s].get_data()
            assert list(x) == [0, 1, 2]
            expect = [30 - 2 + i + 0.5 * p + 0.015 for p in (0, 1, 2)]
            assert np.allclose(y, expect, atol=1e-12)

        # golden: ACF lines for the 1-span rows
        lines = {ln.get_label(): ln for ln in axes[1].get_lines()}
        for i, s in enumerate(SCHEMES):
            x, y = lines[s].get_data()
            assert list(x) == list(range(11))
            assert np.allclose(y, [1.0 / (1 + t + i) for t in range(11)])

        # golden: EDI lines
        lines = {ln.get_label(): ln for ln in axes[2].get_lines()}
        for i, s in enumerate(SCHEMES):
            x, y = lines[s].get_data()
            assert list(x) == [10, 30, 54, 108, 150]
            assert np.allclose(y, [0.05 * (i + 1) + 0.001 * w for w in x])
        plt.close(fig)

    def test_wstar_markers_at_30_and_150(self, results_dir, tmp_path):
        import shapeplot.render as R
        spec = FigureSpec(results_dir, tmp_path / "f.png")
        fig, ax = plt.subplots()
        R._plot_edi(ax, read_table(results_dir, "edi.csv"), spec)
        marker_x = sorted(ln.get_xdata()[0] for ln in ax.get_lines()
                          if len(set(ln.get_xdata())) == 1)
        assert marker_x == [30, 150]
        plt.close(fig)


class TestPanelsAndErrors:
    def test_single_panel_toggle(self, results_dir, tmp_path):
        out = tmp_path / "edi_only.png"
        rc = main(["plot", "--in", str(results_dir), "--out", str(out), "--panels", "edi"])
        assert rc == 0 and out.exists()

    def test_schema_mismatch_is_fatal(self, results_dir, tmp_path):
        (results_dir / "edi.csv").write_text("scheme,window\nuniform,10\n")
        rc = main(["plot", "--in", str(results_dir), "--out", str(tmp_path / "f.png")])
        assert rc == 1

    def test_ragged_csv_is_fatal(self, results_dir, tmp_path):
        with (results_dir / "acf.csv").open("a") as fh:
            fh.write("bess,1\n")
        rc = main(["plot", "--in", str(results_dir), "--out", str(tmp_path / "f.png")])
        assert rc == 1

    def test_missing_scheme_warns_but_renders(self, results_dir, tmp_path):
        rows = [r for r in (results_dir / "edi.csv").read_text().splitlines()
                if not r.startswith("bess")]
        (results_dir / "edi.csv").write_text("\n".join(rows) + "\n")
        out = tmp_path / "partial.png"
        with pytest.warns(UserWarning, match="bess"):
            render(FigureSpec(results_dir, out))
        assert out.exists()

    def test_unknown_panel_rejected(self, results_dir, tmp_path):
        rc = main(["plot", "--in", str(results_dir), "--out",
                   str(tmp_path / "f.png"), "--panels", "psd"])
        assert rc == 1

    def test_smooth_footer_recorded(self, results_dir, tmp_path):
        # smoothing must be opt-in and visible: footer text present
        import shapeplot.render as R
        spec = FigureSpec(results_dir, tmp_path / "s.png", smooth=True)
        render(spec)  # writes without error
        y = np.array([1.0, 2.0, 6.0, 2.0, 1.0])
        sm = R._maybe_smooth(y, True)
        assert not np.allclose(sm, y)
        assert np.allclose(R._maybe_smooth(y, False), y)
