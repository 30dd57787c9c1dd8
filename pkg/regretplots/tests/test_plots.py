import textwrap

import numpy as np
import pytest

from regretplots import (
    LoadError,
    RegretSeries,
    build_regret_figure,
    load_aggregate,
    load_runs,
    render_regret_figure,
)
from regretplots.figures import main

# the plotting layer consumes the harness only through its CSV files; the
# harness itself is imported here purely to manufacture realistic fixtures
from wgpbandit.harness import parse_config_text, run_experiment

CONFIG = textwrap.dedent(
    """\
    [experiment]
    T = 25
    replicates = 20
    base_seed = 0
    out_dir = {out}

    [environment]
    kind = abrupt
    grid_size = 30
    lengthscale = 0.2
    M = 30
    noise_R = 0.1
    seed_policy = redraw
    env_seed = 7
    breakpoints = 10, 18

    [gp]
    B = 1.0
    R = 0.1
    lambda = 1.0
    delta = 0.1

    [policy.wgpucb]
    kind = wgpucb
    eta = 0.98

    [policy.igpucb]
    kind = igpucb

    [policy.rgpucb]
    kind = restart
    H = 5

    [policy.swgpucb]
    kind = sliding_window
    SW = 5
    """
)


@pytest.fixture(scope="session")
def harness_output(tmp_path_factory):
    """A real 4-policy, 20-seed harness run at toy scale."""
    out = tmp_path_factory.mktemp("harness")
    return run_experiment(parse_config_text(CONFIG.format(out=out)))


@pytest.fixture
def flat_zero():
    t = np.arange(1, 11)
    return RegretSeries("flat", t, np.zeros(10), np.zeros(10))


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def test_aggregate_loads_one_series_per_policy(harness_output):
    series = load_aggregate(harness_output.aggregate_file)
    assert sorted(s.policy for s in series) == [
        "igpucb", "rgpucb", "swgpucb", "wgpucb",
    ]
    for s in series:
        assert len(s) == 25
        assert np.all(np.diff(s.t) > 0)


def test_reaggregation_matches_harness_aggregate(harness_output):
    from_agg = {s.policy: s for s in load_aggregate(harness_output.aggregate_file)}
    from_runs = {
        s.policy: s for s in load_runs(harness_output.policy_files.values())
    }
    assert set(from_agg) == set(from_runs)
    for policy, got in from_runs.items():
        want = from_agg[policy]
        np.testing.assert_array_equal(got.t, want.t)
        np.testing.assert_allclose(got.mean, want.mean, atol=1e-6)
        np.testing.assert_allclose(got.stderr, want.stderr, atol=1e-6)


def test_header_only_file_is_empty_list(tmp_path):
    p = tmp_path / "agg.csv"
    p.write_text("t,policy,mean_cum_regret,stderr\n")
    assert load_aggregate(p) == []


def test_missing_column_is_named(tmp_path):
    p = tmp_path / "agg.csv"
    p.write_text("t,policy,mean_cum_regret\n1,a,0.5\n")
    with pytest.raises(LoadError, match="stderr"):
        load_aggregate(p)


def test_bad_cell_is_named(tmp_path):
    p = tmp_path / "agg.csv"
    p.write_text("t,policy,mean_cum_regret,stderr\n1,a,oops,0.0\n")
    with pytest.raises(LoadError, match="mean_cum_regret"):
        load_aggregate(p)


def test_duplicate_round_rejected(tmp_path):
    p = tmp_path / "agg.csv"
    p.write_text(
        "t,policy,mean_cum_regret,stderr\n1,a,0.5,0.0\n1,a,0.6,0.0\n"
    )
    with pytest.raises(LoadError, match="duplicate"):
        load_aggregate(p)


def test_run_table_missing_column_is_named(tmp_path):
    p = tmp_path / "runs.csv"
    p.write_text("seed,policy,t\n0,a,1\n")
    with pytest.raises(LoadError, match="cum_regret"):
        load_runs([p])


def test_series_invariants():
    with pytest.raises(ValueError):
        RegretSeries("x", np.array([1, 2]), np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        RegretSeries("x", np.array([2, 1]), np.zeros(2), np.zeros(2))


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def test_plotted_arrays_equal_loaded_arrays(harness_output):
    series = load_aggregate(harness_output.aggregate_file)
    fig = build_regret_figure(series)
    try:
        lines = fig.axes[0].get_lines()
        assert len(lines) == len(series)
        for line, s in zip(lines, series):
            np.testing.assert_array_equal(line.get_xdata(), s.t)
            np.testing.assert_array_equal(line.get_ydata(), s.mean)
    finally:
        import matplotlib.pyplot as plt

        plt.close(fig)


def test_four_policy_figure_file(harness_output, tmp_path):
    series = load_aggregate(harness_output.aggregate_file)
    out = render_regret_figure(series, tmp_path / "regret.png")
    assert out.exists() and out.stat().st_size > 0
    fig = build_regret_figure(series)
    try:
        legend = fig.axes[0].get_legend()
        labels = sorted(text.get_text() for text in legend.get_texts())
        assert labels == ["igpucb", "rgpucb", "swgpucb", "wgpucb"]
    finally:
        import matplotlib.pyplot as plt

        plt.close(fig)


def test_flat_zero_series_renders_with_zero_band(flat_zero, tmp_path):
    out = render_regret_figure([flat_zero], tmp_path / "flat.png")
    assert out.exists()
    fig = build_regret_figure([flat_zero])
    try:
        band = fig.axes[0].collections[0]
        ys = band.get_paths()[0].vertices[:, 1]
        assert float(np.max(np.abs(ys))) == 0.0
    finally:
        import matplotlib.pyplot as plt

        plt.close(fig)


def test_rerender_keeps_curve_data_identical(harness_output):
    series = load_aggregate(harness_output.aggregate_file)
    import matplotlib.pyplot as plt

    fig1 = build_regret_figure(series)
    fig2 = build_regret_figure(series)
    try:
        for a, b in zip(fig1.axes[0].get_lines(), fig2.axes[0].get_lines()):
            np.testing.assert_array_equal(a.get_xydata(), b.get_xydata())
    finally:
        plt.close(fig1)
        plt.close(fig2)


def test_empty_series_list_rejected():
    with pytest.raises(ValueError):
        build_regret_figure([])


def test_unwritable_path_raises_io_error(flat_zero, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        render_regret_figure([flat_zero], blocker / "sub" / "fig.png")


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def test_cli_roundtrip(harness_output, tmp_path, capsys):
    out = tmp_path / "fig.png"
    code = main(["--in", str(harness_output.aggregate_file), "--out", str(out)])
    assert code == 0
    assert out.exists()
    assert "4 series" in capsys.readouterr().out


def test_cli_missing_input_fails(tmp_path, capsys):
    code = main(["--in", str(tmp_path / "none.csv"), "--out", str(tmp_path / "f.png")])
    assert code == 1
    assert capsys.readouterr().err != ""


def test_cli_header_only_input_fails(tmp_path, capsys):
    p = tmp_path / "agg.csv"
    p.write_text("t,policy,mean_cum_regret,stderr\n")
    code = main(["--in", str(p), "--out", str(tmp_path / "f.png")])
    assert code == 1
