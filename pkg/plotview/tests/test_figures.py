import csv
import math

import numpy as np
import pytest

from feasiplot.cli import main
from feasiplot.figures import PlotSpec, below_diagonal, fit_log_slope, render


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)
    return path


def _geometric_traces(path, gamma=0.8, c=2.0, n_rows=60):
    rows = []
    for n in range(1, n_rows + 1):
        m1 = c * gamma ** n
        rows.append(["run_000001", "cp", "0.5", n, repr(m1), "", "", ""])
    return _write_csv(path, ["run_id", "algo", "lambda", "n", "monitor1",
                             "monitor2", "gap", "error"], rows)


def test_fit_log_slope_recovers_decay_rate(tmp_path):
    gamma = 0.77
    p = _geometric_traces(tmp_path / "traces.csv", gamma=gamma)
    from feasiplot.tables import read_table
    table = read_table(p)
    slope = fit_log_slope(table.floats("n"), table.floats("monitor1"))
    assert abs(slope - math.log(gamma)) <= 0.02 * abs(math.log(gamma))


def test_fit_log_slope_ignores_nonpositive_and_handles_short():
    assert math.isnan(fit_log_slope([1], [0.5]))
    n = np.arange(1, 40)
    v = 3.0 * 0.9 ** n
    v[5] = 0.0  # dropped, not log'd
    slope = fit_log_slope(n, v)
    assert abs(slope - math.log(0.9)) <= 0.02 * abs(math.log(0.9))


def test_below_diagonal_matches_column_comparison(tmp_path):
    rows = [[1, "0.5", "0.3"], [2, "0.2", "0.1"], [3, "0.9", "0.89"]]
    p = _write_csv(tmp_path / "chain.csv", ["seed", "cp_gap", "dr_gap"], rows)
    from feasiplot.tables import read_table
    table = read_table(p)
    cp = table.floats("cp_gap")
    dr = table.floats("dr_gap")
    flags = below_diagonal(cp, dr)
    assert flags.tolist() == [d < c for c, d in zip(cp, dr)]
    assert flags.all()


@pytest.mark.parametrize("kind,fixture", [
    ("convergence", "traces"),
    ("boxplot", "finals"),
    ("histogram", "finals"),
    ("scatter_gap_error", "finals"),
    ("scatter_diagonal", "chain"),
])
def test_render_produces_image(tmp_path, kind, fixture):
    if fixture == "traces":
        src = _geometric_traces(tmp_path / "traces.csv")
    elif fixture == "finals":
        src = _write_csv(tmp_path / "finals.csv",
                         ["run_id", "algo", "lambda", "final_gap", "final_error",
                          "iters", "stop_reason", "cluster"],
                         [["a_1", "cp", "", "0.5", "0.2", "10", "TOL_REACHED", "0"],
                          ["a_2", "cp", "", "0.7", "0.4", "12", "TOL_REACHED", "1"],
                          ["b_1", "cdrl0.7", "0.7", "0.4", "0.1", "30", "TOL_REACHED", "0"]])
    else:
        src = _write_csv(tmp_path / "chain.csv", ["seed", "cp_gap", "dr_gap"],
                         [[1, "0.5", "0.3"], [2, "0.7", "0.2"]])
    out = tmp_path / f"{kind}.png"
    result = render(PlotSpec(kind=kind, inputs=(src,), out=str(out)))
    assert out.exists() and out.stat().st_size > 0
    assert result == str(out)


def test_render_headers_only_gives_empty_axes(tmp_path):
    src = _write_csv(tmp_path / "traces.csv",
                     ["run_id", "algo", "lambda", "n", "monitor1", "monitor2",
                      "gap", "error"], [])
    out = tmp_path / "empty.png"
    rc = main(["--kind", "convergence", "--in", str(src), "--out", str(out)])
    assert rc == 0
    assert out.exists() and out.stat().st_size > 0


def test_render_deterministic_bytes(tmp_path):
    src = _geometric_traces(tmp_path / "traces.csv")
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render(PlotSpec(kind="convergence", inputs=(src,), out=str(a)))
    render(PlotSpec(kind="convergence", inputs=(src,), out=str(b)))
    assert a.read_bytes() == b.read_bytes()


def test_missing_column_is_schema_error_exit_2(tmp_path):
    src = _write_csv(tmp_path / "bad.csv", ["foo", "bar"], [["1", "2"]])
    out = tmp_path / "x.png"
    rc = main(["--kind", "scatter_diagonal", "--in", str(src), "--out", str(out)])
    assert rc == 2
    assert not out.exists()


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ValueError):
        PlotSpec(kind="sparkline", inputs=("x.csv",), out="y.png")


def test_annotated_convergence_runs(tmp_path):
    src = _geometric_traces(tmp_path / "traces.csv")
    out = tmp_path / "ann.png"
    rc = main(["--kind", "convergence", "--in", str(src), "--out", str(out),
               "--annotate-rate"])
    assert rc == 0 and out.exists()
