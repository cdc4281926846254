import os
import subprocess
import sys

SCRIPT = """
from majoloop import BACKEND
from majoloop.harness import CampaignConfig, run_campaign
cfg = CampaignConfig(geometry="honeycomb-nnn", L_x=6, depth=8, pool_size=6, pools=2, samples=5,
                     closure="mixed-bottom", observables=("spanning", "spanning_length", "bulk"), seed=21)
print(BACKEND)
print(run_campaign(cfg).csv_text(), end="")
"""


def _run(pure: str) -> str:
    env = dict(os.environ, MAJOLOOP_PURE=pure)
    return subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True).stdout


def test_pure_and_compiled_backends_agree():
    compiled, pure = _run("0"), _run("1")
    assert compiled.splitlines()[0] == "numba" and pure.splitlines()[0] == "python"
    assert compiled.splitlines()[1:] == pure.splitlines()[1:]
