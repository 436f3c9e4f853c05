#!/usr/bin/env python3

import os
import sys
import tempfile

import pytest

# Add parent directory to path to import qpinem
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from qpinem.errors import ConfigError
from qpinem.figures import (
    FIG3_DEFAULTS,
    FIG4_DEFAULTS,
    FIG5_DEFAULTS,
    FIG6_DEFAULTS,
    fig5_n_max,
    resolve_params,
    run_figure,
)


@pytest.fixture
def out_dir():
    """Temporary output directory."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield temp_dir


def summary_value(result, label):
    return dict(result.summary)[label]


def test_resolve_params_defaults():
    """Without overrides the defaults come back unchanged."""
    assert resolve_params(FIG4_DEFAULTS) == FIG4_DEFAULTS
    assert resolve_params(FIG6_DEFAULTS)["beta"] == -1j


def test_resolve_params_overrides():
    """Overrides are type-checked against the defaults."""
    params = resolve_params(
        FIG5_DEFAULTS, ["g_qu=[0, 0.02]", "comb_lengths=[10, 30]", "n_max=300", "ensemble=false"]
    )
    assert params["g_qu"] == 0.02j
    assert params["comb_lengths"] == [10, 30]
    assert params["n_max"] == 300
    assert params["ensemble"] is False

    assert resolve_params(FIG4_DEFAULTS, ["alpha2=20"])["alpha2"] == [20.0]


@pytest.mark.parametrize(
    "defaults, override, field",
    [
        (FIG3_DEFAULTS, "n_goal=-1", "n_goal"),
        (FIG3_DEFAULTS, "runs=2.5", "runs"),
        (FIG3_DEFAULTS, "goal=5", "goal"),
        (FIG4_DEFAULTS, "alpha2=[]", "alpha2"),
        (FIG5_DEFAULTS, "ensemble=1", "ensemble"),
        (FIG6_DEFAULTS, "n_i=[1, -2]", "n_i[1]"),
    ],
)
def test_resolve_params_errors(defaults, override, field):
    """Bad figure parameters name the offending key."""
    with pytest.raises(ConfigError) as excinfo:
        resolve_params(defaults, [override])
    assert excinfo.value.path == field


def test_fig5_n_max():
    """The desk-scale fig5 truncation never drops below 256."""
    assert fig5_n_max(100.0, 0.0158j, 100) == 256
    assert fig5_n_max(1000.0, 0.0158j, 100) > 1000 + 8 * 33


def test_run_figure_rejects_bad_scale(out_dir):
    """scale must lie in (0, 1]."""
    for scale in (0.0, 1.5):
        with pytest.raises(ConfigError):
            run_figure("fig4", out_dir, scale=scale)
    with pytest.raises(ConfigError):
        run_figure("fig9", out_dir)


def test_fig4_scale_shrinks_steps(out_dir):
    """fig4 scales the number of electrons."""
    result = run_figure("fig4", out_dir, scale=0.005, overrides=["n_max=80"])
    assert result.params["n_steps"] == 5
    assert summary_value(result, "|alpha|^2=10: <n>") == pytest.approx(10.05, abs=1e-8)
    assert summary_value(result, "|alpha|^2=10: converged at") is None


def test_fig4_alpha_sweep(out_dir):
    """Several initial intensities get their own files."""
    result = run_figure("fig4", out_dir, steps=2, overrides=["alpha2=[4, 9]", "n_max=60"])
    names = sorted(os.path.basename(path) for path in result.files)
    assert names == [
        "state_snapshot_alpha2_4.csv",
        "state_snapshot_alpha2_9.csv",
        "trajectory_alpha2_4.csv",
        "trajectory_alpha2_9.csv",
    ]


def test_fig3_small_ensemble(out_dir):
    """Fock builder runs are seeded and summarized."""
    result = run_figure("fig3", out_dir, seed=3, runs=5, overrides=["n_goal=4"])
    assert result.complete
    assert summary_value(result, "runs") == 5
    assert summary_value(result, "completed") == 5
    assert summary_value(result, "mean-process estimate") == pytest.approx(4.0)
    assert sorted(os.listdir(out_dir)) == ["fock_trajectory.csv", "hitting_histogram.csv", "hitting_steps.csv"]


def test_fig6_short_chain(out_dir):
    """The displaced Fock figure reports fidelity and peaks per n_i."""
    result = run_figure("fig6", out_dir, overrides=["n_i=[1]"])
    # 30 teeth leave a visible finite-comb error after six electrons
    assert 0.8 < summary_value(result, "n_i=1: fidelity") < 0.87
    assert sorted(os.listdir(out_dir)) == ["displaced_fock_n1.csv", "displaced_fock_summary.csv"]


@pytest.mark.slow
def test_fig6_wide_comb(out_dir):
    """A wide comb reaches the displaced Fock targets for every n_i."""
    result = run_figure("fig6", out_dir, overrides=["teeth=2001"])
    for n_i in (1, 2, 4):
        assert summary_value(result, f"n_i={n_i}: fidelity") >= 0.98
    for n_i in (1, 2):
        assert summary_value(result, f"n_i={n_i}: peaks") == n_i + 1


@pytest.mark.slow
def test_fig5_desk_scale(out_dir):
    """Default fig5 runs at alpha^2 = 100 with a 30-tooth comb."""
    result = run_figure("fig5", out_dir)
    assert result.params["alpha2"] == pytest.approx(100.0)
    slope = summary_value(result, "30 teeth: alpha slope")
    assert slope == pytest.approx(0.0158, rel=0.15)
    assert summary_value(result, "30 teeth: max Mandel Q") < 0.05
