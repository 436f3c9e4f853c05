#!/usr/bin/env python3

import io
import json
import os
from typing import Any, Dict

import numpy as np

from .errors import ConfigError, DomainError
from .scattering import FieldProfile


def load_document(file_path: str) -> Dict[str, Any]:
    """Load a scenario document from a .json file.

    Args:
        file_path: Path to the scenario file

    Returns:
        The parsed JSON object
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError(f"File not found: {file_path}")

    if not file_path.endswith(".json"):
        raise ConfigError(f"Scenario must be a .json file: {file_path}")

    with open(file_path, encoding="utf-8") as handle:
        text = handle.read()

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {file_path} (line {e.lineno}, column {e.colno}): {e.msg}")

    if not isinstance(doc, dict):
        raise ConfigError(f"Scenario file must hold a JSON object: {file_path}")
    return doc


def load_field_csv(file_path: str, omega: float, v: float) -> FieldProfile:
    """Load a sampled field E_z(z) from CSV.

    Rows are z, Re E_z[, Im E_z] in SI units. Lines starting with '#' and
    a single non-numeric header row are skipped.

    Args:
        file_path: Path to the CSV file
        omega: Angular frequency in rad/s
        v: Electron speed in m/s

    Returns:
        The field profile
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError(f"File not found: {file_path}")

    with open(file_path, encoding="utf-8") as handle:
        lines = [line for line in handle if line.strip() and not line.lstrip().startswith("#")]
    if not lines:
        raise DomainError(f"No field samples in {file_path}")

    # Header row: first field is not a number
    try:
        float(lines[0].split(",")[0])
    except ValueError:
        lines = lines[1:]

    try:
        data = np.loadtxt(io.StringIO("".join(lines)), delimiter=",", ndmin=2)
    except ValueError as e:
        raise DomainError(f"Error loading {file_path}: {str(e)}")

    if data.shape[1] not in (2, 3):
        raise DomainError(f"Field CSV needs 2 or 3 columns (z, Re E[, Im E]), got {data.shape[1]}: {file_path}")

    e_z = data[:, 1].astype(complex)
    if data.shape[1] == 3:
        e_z += 1j * data[:, 2]
    return FieldProfile(z=data[:, 0], e_z=e_z, omega=omega, v=v)


__all__ = ["load_document", "load_field_csv"]
