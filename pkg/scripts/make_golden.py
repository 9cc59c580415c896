"""Regenerate tests/golden. Run from the repository root; takes a few minutes.

Golden CSVs are the CLI's own output (every 100th time step); the brute-force
collectivity values come from the independent oracle and are frozen as JSON.
"""

import json
import sys
from pathlib import Path

from collectivity.cli import main
from collectivity.dynamics import PulseShape, mhz
from collectivity.ensemble import SpectralDistribution
from collectivity.oracles import brute_force_collectivity

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"
DELTA0_MHZ = [0, 500, 750, 1000, 1250]


def main_golden():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    cfg = GOLDEN / "stride100.json"
    cfg.write_text(json.dumps({"output_stride": 100}, indent=2) + "\n")
    for args in (["sweep"], ["ensemble", "--delta0", "1250", "--gamma", "0"]):
        code = main(args + ["--config", str(cfg), "--out", str(GOLDEN / "cli")])
        if code:
            sys.exit(code)
    # keep only what the tests compare
    keep = {"ensemble_d1250_g0.csv", "summary.csv"}
    for f in (GOLDEN / "cli").iterdir():
        if f.name not in keep:
            f.unlink()

    pulse = PulseShape()
    values = {}
    for d in DELTA0_MHZ:
        c = brute_force_collectivity(pulse, SpectralDistribution(mhz(500), mhz(d)), 0.0, 0.2)
        values[str(d)] = c
        print(f"delta0={d} MHz  C(0.2)={c:.12e}")
    (GOLDEN / "brute_force_c02.json").write_text(json.dumps(
        {"t_s_us": 0.2, "sigma_fwhm_MHz": 500, "gamma_MHz": 0, "fine_nodes": 2001,
         "fine_dt_us": 2.5e-6, "span_sigmas": 7.0, "collectivity": values}, indent=2) + "\n")


if __name__ == "__main__":
    main_golden()
