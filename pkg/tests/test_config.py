#!/usr/bin/env python3

import json
import os
import sys
import tempfile

import numpy as np
import pytest

# Add parent directory to path to import qpinem
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from qpinem.chain import Loss, Measurement
from qpinem.config import (
    InitialState,
    apply_overrides,
    build_config,
    parse_complex,
    parse_config,
)
from qpinem.errors import ConfigError, DomainError, QpinemError
from qpinem.fockspace import PhotonDensity, fock_index, mean_photon
from qpinem.loader import load_document, load_field_csv


@pytest.fixture
def scenario_dir():
    """Temporary directory holding scenario files."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield temp_dir


def write_json(directory, name, doc):
    path = os.path.join(directory, name)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle)
    return path


def test_minimal_config_defaults(scenario_dir):
    """A vacuum scenario fills in every default."""
    path = write_json(scenario_dir, "minimal.json", {"n_max": 20, "g_qu": [0, 0.25]})
    config = parse_config(path)

    assert config.n_max == 20
    assert config.g_qu == 0.25j
    assert config.n_steps == 0
    assert config.seed is None
    assert config.window == (-28, 28)
    assert len(config.policies) == 1
    assert config.policies[0].measurement == Measurement()
    assert fock_index(config.build_initial()) == 0

    echo = config.to_dict()
    assert echo == {
        "n_max": 20,
        "electron_window": None,
        "g_qu": [0.0, 0.25],
        "initial_state": {"kind": "vacuum"},
        "policies": [
            {"electron": {"kind": "delta", "k0": 0}, "measurement": {"kind": "trace_out"}, "loss": None}
        ],
        "n_steps": 0,
        "seed": None,
        "ensemble_size": 1,
        "ensemble_mode": False,
        "allow_truncation": False,
        "outputs": {"directory": "out", "trajectory": "trajectory.csv", "snapshot": "state_snapshot.csv"},
        "E0_eV": None,
        "omega_rad_s": None,
    }
    # the echo is itself a valid scenario
    assert build_config(echo).to_dict() == echo


def test_full_config():
    """Every section of the schema is read."""
    config = build_config(
        {
            "n_max": 60,
            "g_qu": 0.5,
            "electron_window": [-10, 10],
            "initial_state": {"kind": "coherent", "alpha": [1.0, -0.5]},
            "policies": [
                {"electron": {"kind": "comb", "K": 14, "K_prime": 15, "beta": [0, -1]}},
                {
                    "measurement": {"kind": "postselect", "k": -2},
                    "loss": {"dt_over_tau": 0.1, "substeps": 4, "mode": "exact_damping"},
                    "g_qu": [0, 1],
                },
                {"measurement": {"kind": "sample"}},
            ],
            "n_steps": 12,
            "seed": 7,
            "ensemble_size": 3,
            "ensemble_mode": True,
            "outputs": {"directory": "results"},
            "E0_eV": 200e3,
            "omega_rad_s": 2.4e15,
        }
    )
    assert config.g_qu == 0.5
    assert config.window == (-10, 10)
    assert mean_photon(config.build_initial()) == pytest.approx(1.25, abs=1e-10)
    assert config.policies[0].electron.to_dict() == {"kind": "comb", "K": 14, "K_prime": 15, "beta": [0.0, -1.0]}
    assert config.policies[1].measurement == Measurement("postselect", -2)
    assert config.policies[1].loss == Loss(0.1, 4, "exact_damping")
    assert config.policies[1].g_qu == 1j
    assert config.seed == 7
    assert config.ensemble_size == 3
    assert config.ensemble_mode is True
    assert config.outputs.directory == "results"
    assert config.outputs.trajectory == "trajectory.csv"
    assert config.E0_eV == 200e3


def test_initial_states():
    """Each initial kind builds the matching state."""
    assert fock_index(InitialState("fock", n=3).build(10)) == 3
    assert isinstance(InitialState("thermal", theta=1.0).build(20), PhotonDensity)
    displaced = InitialState("displaced_fock", n=1, alpha=1.0).build(40)
    assert mean_photon(displaced) == pytest.approx(2.0, abs=1e-8)
    assert InitialState("displaced_fock", n=1, alpha=1.0).to_dict() == {
        "kind": "displaced_fock",
        "n": 1,
        "alpha": [1.0, 0.0],
    }


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"n_max": -1, "g_qu": 0.1}, "n_max"),
        ({"g_qu": 0.1}, "n_max"),
        ({"n_max": 10.5, "g_qu": 0.1}, "n_max"),
        ({"n_max": 10}, "g_qu"),
        ({"n_max": 10, "g_qu": "0.1i"}, "g_qu"),
        ({"n_max": 10, "g_qu": True}, "g_qu"),
        ({"n_max": 10, "g_qu": 0.1, "electron_window": [3, -3]}, "electron_window"),
        ({"n_max": 10, "g_qu": 0.1, "initial_state": {"kind": "squeezed"}}, "initial_state.kind"),
        ({"n_max": 10, "g_qu": 0.1, "initial_state": {"kind": "fock", "n": 11}}, "initial_state.n"),
        ({"n_max": 10, "g_qu": 0.1, "initial_state": {"kind": "thermal", "theta": 0}}, "initial_state.theta"),
        ({"n_max": 10, "g_qu": 0.1, "policies": []}, "policies"),
        (
            {"n_max": 10, "g_qu": 0.1, "policies": [{"electron": {"kind": "comb", "beta": [0.5, 0]}}]},
            "policies[0].electron.beta",
        ),
        (
            {"n_max": 10, "g_qu": 0.1, "policies": [{}, {"measurement": {"kind": "weak"}}]},
            "policies[1].measurement.kind",
        ),
        (
            {"n_max": 10, "g_qu": 0.1, "policies": [{"measurement": {"kind": "postselect", "k": 40}}]},
            "policies[0].measurement.k",
        ),
        (
            {"n_max": 10, "g_qu": 0.1, "policies": [{"loss": {"dt_over_tau": -0.1}}]},
            "policies[0].loss.dt_over_tau",
        ),
        (
            {"n_max": 10, "g_qu": 0.1, "policies": [{"loss": {"dt_over_tau": 0.1, "substeps": 0}}]},
            "policies[0].loss.substeps",
        ),
        ({"n_max": 10, "g_qu": 0.1, "policies": [{"measurement": {"kind": "sample"}}]}, "seed"),
        ({"n_max": 10, "g_qu": 0.1, "ensemble_size": 0}, "ensemble_size"),
        ({"n_max": 10, "g_qu": 0.1, "ensemble_mode": "yes"}, "ensemble_mode"),
        ({"n_max": 10, "g_qu": 0.1, "outputs": {"folder": "x"}}, "outputs.folder"),
    ],
)
def test_schema_errors_carry_field_path(doc, field):
    """Schema violations name the offending field."""
    with pytest.raises(ConfigError) as excinfo:
        build_config(doc)
    assert excinfo.value.path == field
    assert str(excinfo.value).startswith(f"{field}: ")


def test_parse_complex():
    """Numbers and [re, im] pairs are accepted."""
    assert parse_complex(2, "x") == 2
    assert parse_complex([0, 0.25], "x") == 0.25j
    for bad in ([1, 2, 3], ["1", 0], None, False):
        with pytest.raises(ConfigError):
            parse_complex(bad, "x")


def test_apply_overrides():
    """Dotted paths patch a copy of the document."""
    doc = {"n_max": 10, "g_qu": [0, 0.1], "policies": [{"measurement": {"kind": "trace_out"}}]}
    patched = apply_overrides(
        doc,
        [
            "n_max=40",
            "g_qu=[0, 0.5]",
            "policies[0].measurement={\"kind\": \"postselect\", \"k\": 2}",
            "policies.0.electron.kind=comb",
            "outputs.directory=results",
        ],
    )
    assert doc["n_max"] == 10
    assert patched["n_max"] == 40
    assert patched["g_qu"] == [0, 0.5]
    assert patched["policies"][0]["measurement"] == {"kind": "postselect", "k": 2}
    assert patched["policies"][0]["electron"] == {"kind": "comb"}
    assert patched["outputs"] == {"directory": "results"}


def test_apply_overrides_errors():
    """Malformed overrides and missing list entries are config errors."""
    doc = {"policies": [{}]}
    for override in ("n_max", "policies[3].measurement.k=1", "a..b=1", "policies[0]x=1"):
        with pytest.raises(ConfigError):
            apply_overrides(doc, [override])


def test_parse_config_overrides_validate(scenario_dir):
    """Overrides go through the same validation as the file."""
    path = write_json(scenario_dir, "scenario.json", {"n_max": 20, "g_qu": [0, 0.25]})
    assert parse_config(path, ["seed=3"]).seed == 3
    with pytest.raises(ConfigError) as excinfo:
        parse_config(path, ["n_max=-5"])
    assert excinfo.value.path == "n_max"


def test_load_document_errors(scenario_dir):
    """Missing, misnamed and malformed files are reported."""
    with pytest.raises(FileNotFoundError):
        load_document(os.path.join(scenario_dir, "missing.json"))

    yaml_path = os.path.join(scenario_dir, "scenario.yaml")
    with open(yaml_path, "w", encoding="utf-8") as handle:
        handle.write("n_max: 10\n")
    with pytest.raises(ConfigError, match=".json"):
        load_document(yaml_path)

    broken = os.path.join(scenario_dir, "broken.json")
    with open(broken, "w", encoding="utf-8") as handle:
        handle.write('{"n_max": 10,\n "g_qu": }')
    with pytest.raises(ConfigError, match="line 2"):
        parse_config(broken)

    listed = write_json(scenario_dir, "list.json", [1, 2])
    with pytest.raises(ConfigError):
        load_document(listed)

    # every loader error is still a ValueError
    with pytest.raises(ValueError):
        load_document(listed)
    assert issubclass(ConfigError, QpinemError)


def test_load_field_csv(scenario_dir):
    """Two- and three-column profiles, with comments and a header row."""
    two = os.path.join(scenario_dir, "real.csv")
    with open(two, "w", encoding="utf-8") as handle:
        handle.write("# sampled on a uniform grid\nz,Ez\n0.0,1.0\n1e-9,2.0\n2e-9,0.5\n")
    profile = load_field_csv(two, 2.4e15, 1.6e8)
    np.testing.assert_allclose(profile.z, [0.0, 1e-9, 2e-9])
    np.testing.assert_allclose(profile.e_z, [1.0, 2.0, 0.5])
    assert profile.omega == 2.4e15
    assert profile.v == 1.6e8

    three = os.path.join(scenario_dir, "complex.csv")
    with open(three, "w", encoding="utf-8") as handle:
        handle.write("0.0,1.0,0.5\n1e-9,0.0,-1.0\n")
    np.testing.assert_allclose(load_field_csv(three, 1.0, 1.0).e_z, [1.0 + 0.5j, -1.0j])


def test_load_field_csv_errors(scenario_dir):
    """Missing files, wrong column counts and unparsable rows."""
    with pytest.raises(FileNotFoundError):
        load_field_csv(os.path.join(scenario_dir, "none.csv"), 1.0, 1.0)

    wide = os.path.join(scenario_dir, "wide.csv")
    with open(wide, "w", encoding="utf-8") as handle:
        handle.write("0,1,2,3\n1,1,2,3\n")
    with pytest.raises(DomainError, match="2 or 3 columns"):
        load_field_csv(wide, 1.0, 1.0)

    empty = os.path.join(scenario_dir, "empty.csv")
    with open(empty, "w", encoding="utf-8") as handle:
        handle.write("# nothing here\n")
    with pytest.raises(DomainError):
        load_field_csv(empty, 1.0, 1.0)
