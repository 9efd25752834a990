import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from pcpnoma import _jit
from pcpnoma import montecarlo as mc
from pcpnoma.params import NetworkParams

PROBE = Path(__file__).parent / "scripts" / "backend_probe.py"


def probe(disable_numba):
    env = dict(os.environ)
    env.pop("PCPNOMA_DISABLE_NUMBA", None)
    if disable_numba:
        env["PCPNOMA_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, str(PROBE)], env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(out.stdout)


@pytest.mark.skipif(not _jit.HAVE_NUMBA, reason="numba not installed")
def test_numpy_fallback_matches_numba():
    fast = probe(False)
    slow = probe(True)
    assert fast["backend"] == "numba" and slow["backend"] == "numpy"
    for key in ("pdf", "intra", "inter", "cov", "imp"):
        assert slow[key] == pytest.approx(fast[key], rel=1e-12, abs=1e-14)
    assert slow["mc"] == fast["mc"]


@pytest.mark.skipif(not _jit.HAVE_NUMBA, reason="numba not installed")
def test_batch_kernels_agree():
    params = NetworkParams(bs_intensity=0.08)
    L = params.region_side
    for by_power in (False, True):
        for wrap in (False, True):
            opts = mc.SimOptions(seed=3, wraparound=wrap)
            sample = mc._sample_chunk(params, opts, 0, 300)
            args = sample + (0.5 * L, 0.5 * L, L, wrap, params.pathloss_exponent,
                             params.tx_power, params.noise_power, by_power,
                             params.detection_threshold)
            for a, b in zip(mc._batch_numba(*args), mc._batch_numpy(*args)):
                np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)


def test_flag_disables_numba():
    env = dict(os.environ, PCPNOMA_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from pcpnoma import _jit; print(_jit.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
