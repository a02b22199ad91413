#!/usr/bin/env python3
"""Regenerate the meshes shipped under recipes/ (deterministic)."""

import os

from emdec.mesh import delaunay_mesh, graded_square_points, save_mesh

HERE = os.path.dirname(os.path.abspath(__file__))
RECIPES = os.path.join(HERE, "..", "recipes")


def main():
    K = delaunay_mesh(graded_square_points(n=14, grading=0.45, jitter=0.10, seed=20))
    path = os.path.join(RECIPES, "cavity_refined.mesh")
    save_mesh(K, path)
    print(f"wrote {path}: {K.n_cells(0)} vertices, {K.n_cells(2)} triangles")


if __name__ == "__main__":
    main()
