"""Smoke test for the `ramanmag` Python extension.

Uses an installed module if one is importable (e.g. after `maturin develop`),
otherwise builds the cdylib with cargo and loads it from a temporary dir.
"""

import importlib
import json
import math
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
MHZ = 1e6


def load_module(tmp):
    try:
        return importlib.import_module("ramanmag")
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "ramanmag-python"],
        cwd=ROOT,
        check=True,
    )
    target = Path(os.environ.get("CARGO_TARGET_DIR", ROOT / "target")) / "release"
    for name in ("libramanmag_py.so", "libramanmag_py.dylib", "ramanmag_py.dll"):
        if (target / name).exists():
            suffix = ".pyd" if name.endswith(".dll") else ".so"
            shutil.copy(target / name, Path(tmp) / f"ramanmag{suffix}")
            break
    else:
        raise SystemExit("built library not found in " + str(target))
    sys.path.insert(0, tmp)
    return importlib.import_module("ramanmag")


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    with tempfile.TemporaryDirectory() as tmp:
        rm = load_module(tmp)
        print("ramanmag", rm.__version__)

        cavity = rm.CavitySystem(loss_rate=75 * MHZ)
        rates = rm.NVRates()
        assert close(rates.r31, 66.16e6, 1e-12)
        assert close(cavity.finesse(), 52360, 0.01)

        off = rm.MicrowaveDrive(0.0)
        p_off = rm.threshold_pump(cavity, off)
        assert close(p_off, 0.34174, 0.05), p_off

        drive = rm.MicrowaveDrive(18 * MHZ, dephasing=1 * MHZ)
        p_res = rm.threshold_pump(cavity, drive)
        p_det = rm.threshold_pump(cavity, drive.with_detuning(200 * MHZ))
        assert p_res < p_det <= p_off
        shift = rm.threshold_shift_percent(cavity, drive)
        assert shift > 1.0, shift
        print(f"thresholds: resonant {p_res * 1e3:.3f} mW, off {p_off * 1e3:.3f} mW, shift {shift:.3f}%")

        state = rm.steady_state(drive, 17.64 * MHZ)
        assert abs(sum(state["populations"]) - 1.0) < 1e-10
        evolved = rm.time_evolve(drive, 17.64 * MHZ, [1, 0, 0, 0, 0], 1e-4)
        assert max(abs(a - b) for a, b in zip(evolved["populations"], state["populations"])) < 1e-6

        curve = rm.laser_curve(cavity, off, [0.0, 0.3, 0.4, 0.5])
        assert curve["output_power"][0] == 0.0 and curve["output_power"][-1] > 0.0

        det, out, pump = rm.response_vs_detuning(cavity, drive)
        assert out[0] == max(out) and pump == p_off

        sens = rm.sensitivity(cavity, rm.MicrowaveDrive(5 * MHZ, dephasing=0.1 * MHZ))
        assert 1e-12 < sens["eta_min"] < 3e-12, sens["eta_min"]
        assert math.isclose(sens["field_opt"], sens["detuning_opt"] * rm.INV_GAMMA_E)
        print(f"eta_min {sens['eta_min'] * 1e12:.3f} pT/sqrt(Hz) at {sens['detuning_opt'] / MHZ:.2f} MHz")

        try:
            rm.MicrowaveDrive(-1.0)
        except ValueError:
            pass
        else:
            raise AssertionError("negative Rabi frequency accepted")

        cfg = json.loads(rm.preset_config("figure3d"))
        cfg["output"]["stem"] = "smoke"
        res = rm.run_config(json.dumps(cfg), tmp, workers=2)
        assert res["failed"] == 0
        header = Path(res["csv"]).read_text().splitlines()[0]
        assert header.startswith("kappa_r_hz,rabi_hz"), header

        try:
            rm.run_config('{"sweep": "response", "drive": {"rabi": {"values": [], "unit": "MHz"}}}', tmp)
        except ValueError as e:
            assert "drive.rabi: empty" in str(e)
        else:
            raise AssertionError("empty grid accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
