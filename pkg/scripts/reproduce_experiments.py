#!/usr/bin/env python3
"""Run the bundled cavity recipes and summarize the headline numbers:
energy drift/excursion for the uniform and asynchronous runs, and the
detected resonance peaks against the analytic cavity modes."""

import os
import sys

import numpy as np

from emdec.cli import main as emdec_main
from emdec.diagnostics import cavity_mode_frequencies, energy_drift_stats
from emdec.io import read_csv

HERE = os.path.dirname(os.path.abspath(__file__))
RECIPES = os.path.join(HERE, "..", "recipes")


def run(recipe: str) -> str:
    path = os.path.join(RECIPES, recipe + ".cfg")
    code = emdec_main(["run", path])
    if code != 0:
        sys.exit(code)
    out = None
    with open(path) as fh:
        for line in fh:
            if line.strip().startswith("output.dir"):
                out = line.split("=", 1)[1].strip()
    return out


def energy_summary(out_dir: str):
    _, rows = read_csv(os.path.join(out_dir, "energy.csv"))
    times = np.array([r[0] for r in rows])
    total = np.array([r[3] for r in rows])
    stats = energy_drift_stats(times, total)
    print(f"  mean energy {stats['mean']:.4f}  linear drift "
          f"{100 * stats['rel_drift']:.4f}%  max excursion "
          f"{100 * stats['rel_excursion']:.4f}%")


def peak_summary(out_dir: str):
    _, rows = read_csv(os.path.join(out_dir, "peaks.csv"))
    peaks = np.array([r[1] for r in rows])
    peaks = peaks[(peaks > 0.2) & (peaks < 2.2)]
    modes = cavity_mode_frequencies(1.0, 1.0, 12)
    print("  detected peak -> nearest analytic mode")
    for f in peaks[:8]:
        best = modes[np.argmin(np.abs(modes - f))]
        print(f"    {f:.4f} -> {best:.4f}  (err {abs(f - best):.4f})")


def main():
    print("== uniform-grid cavity (energy behavior) ==")
    out = run("yee_cavity_2d")
    energy_summary(out)
    print("== random-partition asynchronous cavity (energy behavior) ==")
    out = run("avi_random_2d")
    energy_summary(out)
    print("== boundary-refined cavity (resonance spectrum) ==")
    out = run("bk_cavity_refined")
    peak_summary(out)


if __name__ == "__main__":
    main()
