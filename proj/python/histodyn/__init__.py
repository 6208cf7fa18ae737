"""Hamiltonian histories of differential forms: model files, integrators, conservation checks."""

import csv
import io
import json

from ._histodyn import (
    ExitCode,
    Model,
    ModelFileError,
    execute,
    identity_suites,
    load_model,
    parse_model,
)

__all__ = [
    "ExitCode",
    "Model",
    "ModelFileError",
    "derive",
    "diagnose",
    "execute",
    "identity_suites",
    "load_model",
    "parse_model",
    "simulate",
]


def _model(m):
    return load_model(str(m)) if not isinstance(m, Model) else m


def derive(model):
    """Text of the derived equations."""
    return execute("derive", _model(model))[1]


def simulate(model, **options):
    """Trajectory rows as dicts of floats (step as int)."""
    code, text = execute("simulate", _model(model), **options)
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        rows.append({k: (int(v) if k == "step" else float(v)) for k, v in row.items()})
    return rows


def diagnose(model, **options):
    """Report dict; report["pass"]["all"] is the verdict."""
    code, text = execute("diagnose", _model(model), **options)
    return json.loads(text)
