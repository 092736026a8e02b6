import json

import numpy as np
import pytest


@pytest.fixture()
def fixture_dir(tmp_path):
    """Schema-conformant input files: a logistic wave with exact +-1 tails."""
    x = np.linspace(-12, 12, 481)
    h = 1.0 / (1.0 + np.exp(x))  # survival; tails exp(-x) right, exp(x) left
    stderr = np.full_like(x, 1e-4)
    _csv(tmp_path / "profile.csv", "x,h,stderr", np.column_stack([x, h, stderr]))

    rng = np.random.default_rng(7)
    emp = 1.0 / (1.0 + np.exp(x - 0.25)) + rng.normal(0, 0.003, size=len(x))
    _csv(tmp_path / "empirical.csv", "x,survival", np.column_stack([x, np.clip(emp, 0, 1)]))

    (tmp_path / "compare.json").write_text(json.dumps({
        "shift": -0.25, "w1_after_shift": 0.012, "ks_after_shift": 0.007,
    }))
    (tmp_path / "tail.json").write_text(json.dumps({
        "gamma": 1.0,
        "right_slope": -0.9965, "right_prefactor": 1.013,
        "left_slope": 1.0021, "left_prefactor": 0.991,
        "pool_mean": 1.004, "density_at_zero": 0.92,
    }))
    (tmp_path / "pool.json").write_text(json.dumps({
        "gamma": 1.0, "size": 100000, "iterations": 12, "k": 2,
        "mean": 1.002, "stddev": 0.98, "zero_fraction": 0.0,
        "regime": "supercritical",
        "ks_trace": [0.08, 0.03, 0.012, 0.006, 0.004, 0.0009, 0.0008, 0.0007,
                     0.0041, 0.0038, 0.0035, 0.0042],
        "warnings": [], "seed": 1,
    }))
    sizes = np.array([250.0, 500.0, 1000.0, 2000.0])
    c = np.array([0.92, 0.95, 0.97, 0.985])
    _csv(tmp_path / "speed_vs_n.csv", "n,c_hat,ci_low,ci_high",
         np.column_stack([sizes, c, c - 0.03, c + 0.03]))
    (tmp_path / "dispersion.json").write_text(json.dumps({
        "model": "power2", "gamma": 1.0, "c": 1.0, "regime": "supercritical",
        "diagnostics": {}, "notes": [],
    }))
    return tmp_path


def _csv(path, header, data):
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="")
