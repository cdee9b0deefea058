import json
import os
import subprocess
import sys

import numpy as np
import pytest

from perflab import _fallback

_speedups = pytest.importorskip("perflab._speedups")


@pytest.mark.parametrize("squared", [False, True])
def test_gram_agrees(rng, squared):
    A, B = rng.standard_normal((40, 3)), rng.standard_normal((25, 3))
    np.testing.assert_allclose(_speedups.gram_rbf(A, B, 0.3, squared),
                               _fallback.gram_rbf(A, B, 0.3, squared), rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize("squared", [False, True])
def test_predict_agrees(rng, squared):
    S, X = rng.standard_normal((60, 3)), rng.standard_normal((500, 3))
    beta = rng.standard_normal(60)
    a = _speedups.predict_rbf(S, beta, X, 0.2, squared, 40.0)
    b = _fallback.predict_rbf(S, beta, X, 0.2, squared, 40.0)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


def test_dcd_pass_agrees(rng):
    n = 30
    X = rng.standard_normal((n, 3))
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    Q = np.ascontiguousarray((X @ X.T + 0.1 * np.eye(n)) * np.outer(y, y))
    order = rng.permutation(n).astype(np.intp)
    out = []
    for mod in (_speedups, _fallback):
        alpha, grad = np.zeros(n), -np.ones(n)
        changed = [mod.dcd_pass(Q, alpha, grad, 0.5, order) for _ in range(5)]
        out.append((changed, alpha, grad))
    assert out[0][0] == out[1][0]
    np.testing.assert_allclose(out[0][1], out[1][1], rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(out[0][2], out[1][2], rtol=1e-12, atol=1e-14)


_SCRIPT = """
import json
from perflab import BACKEND
from perflab.dataset import gen_circles
from perflab.kernel import KernelSpec
from perflab.rrm import RrmSettings, run_rrm
from perflab.shift import MapSpec
tr = run_rrm(gen_circles(30, 0.2, seed=3), KernelSpec.rbf(0.3), MapSpec("feature_simulated", d=0.3, n_candidates=10),
             RrmSettings(T_max=4, burn_in=0, seed=1))
print(json.dumps({"backend": BACKEND, "acc": tr.column("accuracy").tolist(), "C": tr.column("C").tolist()}))
"""


def _run(pure):
    env = dict(os.environ)
    env.pop("PERFLAB_PURE_PYTHON", None)
    if pure:
        env["PERFLAB_PURE_PYTHON"] = "1"
    res = subprocess.run([sys.executable, "-c", _SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def test_full_run_same_under_both_backends():
    a, b = _run(False), _run(True)
    assert (a["backend"], b["backend"]) == ("compiled", "python")
    assert a["acc"] == b["acc"]
    np.testing.assert_allclose(a["C"], b["C"], rtol=1e-8)
