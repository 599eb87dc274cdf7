"""Simulated vision-based tactile sensing: scenarios, skills, learning and assembly."""

import json

import numpy as np

from . import _core
from ._core import Error, KrrModel, object_moments, render_rest_frame, slip_estimate

__all__ = [
    "Error",
    "KrrModel",
    "eval_stir_classifier",
    "object_moments",
    "plot_view",
    "press_dataset",
    "render_rest_frame",
    "replay_assembly",
    "run_assembly",
    "run_scenario",
    "scenario_names",
    "skill_names",
    "slip_estimate",
    "stir_dataset",
    "train_stir_classifier",
]

schema_version = _core.schema_version


def scenario_names():
    return list(_core.scenario_names())


def skill_names():
    return list(_core.skill_names())


def run_scenario(scenario, skill="", seed=0, frames=None, skill_params=None, scenario_params=None, out_dir=""):
    """Run one episode. Returns (summary dict, list of per-frame records)."""
    summary, log = _core.run_scenario(
        scenario, skill, seed, frames, skill_params or {}, scenario_params or {}, str(out_dir)
    )
    return json.loads(summary), [json.loads(r) for r in log]


def run_assembly(seed=0, variant="default", out_dir=""):
    """Run the assembly sequence. Returns (report dict, list of per-frame records)."""
    report, log = _core.run_assembly(seed, variant, str(out_dir))
    return json.loads(report), [json.loads(r) for r in log]


def replay_assembly(log, report):
    """Violations found when replaying the phase predicates over a log."""
    return list(_core.replay_assembly([json.dumps(r) for r in log], json.dumps(report)))


def plot_view(log, view):
    """Project a log onto a named view. Returns (header, rows) with string cells."""
    header, rows = _core.plot_view([json.dumps(r) for r in log], view)
    return list(header), [list(r) for r in rows]


def press_dataset(seed=0):
    d = _core.press_dataset(seed)
    return {
        "X": np.asarray(d["X"]),
        "y": np.asarray(d["y"]),
        "episode": np.asarray(d["episode"]),
        "frame": np.asarray(d["frame"]),
        "is_test": np.asarray(d["is_test"], dtype=bool),
    }


def stir_dataset(seed=0):
    d = _core.stir_dataset(seed)
    return {
        "X": np.asarray(d["X"]),
        "label": np.asarray(d["label"]),
        "movement": np.asarray(d["movement"]),
        "is_test": np.asarray(d["is_test"], dtype=bool),
        "classes": list(d["classes"]),
    }


def train_stir_classifier(X, labels, seed=0, epochs=3000):
    """Train the substance MLP. Returns (model dict, loss history, gradient-check error)."""
    model, losses, grad_err = _core.train_stir_classifier(
        np.asarray(X, dtype=float), [int(v) for v in labels], seed, epochs
    )
    return json.loads(model), list(losses), grad_err


def eval_stir_classifier(model, X, labels):
    """Classification report (per-class precision, recall, f1, support) as a dict."""
    return json.loads(_core.eval_stir_classifier(json.dumps(model), np.asarray(X, dtype=float), [int(v) for v in labels]))
