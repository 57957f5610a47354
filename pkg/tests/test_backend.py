import os
import subprocess
import sys

import numpy as np
import pytest

import nambuflow
from nambuflow import _backend
from nambuflow.flows import EULER_TOP, diagonal_flow, nambu_rhs, quadratic_flow, symmetric_flow
from nambuflow.integrate import IntegratorConfig, integrate

compiled = pytest.mark.skipif(_backend._compiled is None, reason="compiled kernels not built")

SPECS = [
    (symmetric_flow(3, [3, 2]), [2.1547005383792515, 0.42264973081037416, 0.42264973081037416]),
    (symmetric_flow(5), [0.3, -0.8, 1.2, 0.1, 0.7]),
    (diagonal_flow(3, [2, 1]), [1.4142135623730951, 1.4142135623730951, 0.0]),
    (quadratic_flow(EULER_TOP), [0.4, -0.9, 0.3]),
]


def test_backend_name():
    assert nambuflow.backend in ("cython", "python")
    assert nambuflow.backend == _backend.NAME


@compiled
@pytest.mark.parametrize("spec, X", SPECS)
def test_rhs_identical(spec, X):
    rng = np.random.default_rng(0)
    for Y in [np.array(X)] + list(rng.normal(size=(20, spec.n))):
        np.testing.assert_array_equal(nambu_rhs(spec, Y), nambu_rhs(spec, Y, pure=True))


@compiled
@pytest.mark.parametrize("spec, X", SPECS)
def test_integration_identical(spec, X):
    a = integrate(spec, X, (0.0, 2.0), samples=33)
    b = integrate(spec, X, (0.0, 2.0), samples=33, pure=True)
    np.testing.assert_array_equal(a.states, b.states)
    assert a.stats == b.stats


@compiled
def test_failure_paths_identical():
    spec = symmetric_flow(3, [3, 2])
    X = SPECS[0][1]
    cfg = IntegratorConfig(max_steps=4)
    a = integrate(spec, X, (0.0, 5.0), cfg, raise_on_failure=False)
    b = integrate(spec, X, (0.0, 5.0), cfg, raise_on_failure=False, pure=True)
    assert a.status == b.status != 0
    np.testing.assert_array_equal(a.states, b.states)


def test_pure_env_forces_python():
    code = "import nambuflow; print(nambuflow.backend)"
    env = dict(os.environ, NAMBU_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
