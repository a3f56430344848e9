#!/usr/bin/env python3
"""Generate the cross-hatched beam background mesh asset.

The mesh covers [0.5, 1.5] x [-0.5, 0.5] with a 12 x 12 grid.  The
columns around the embedded interface at x = 0.625 are split into four
tri3 elements per cell via center nodes, so the interface diagonally
intersects background elements; the remaining cells stay quad4.
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from blayer.meshing import ElementBlock, Mesh, save_mesh  # noqa: E402

N = 12
N_TRI_COLS = 3
LO, HI = np.array([0.5, -0.5]), np.array([1.5, 0.5])


def main(path):
    xs = np.linspace(LO[0], HI[0], N + 1)
    ys = np.linspace(LO[1], HI[1], N + 1)
    grid = np.array([[x, y] for y in ys for x in xs])
    gid = lambda i, j: j * (N + 1) + i
    nodes = [grid]
    tris, quads = [], []
    centers = {}
    for j in range(N):
        for i in range(N):
            c = [gid(i, j), gid(i + 1, j), gid(i + 1, j + 1), gid(i, j + 1)]
            if i < N_TRI_COLS:
                cid = len(grid) + len(centers)
                centers[(i, j)] = cid
                nodes.append([[0.5 * (xs[i] + xs[i + 1]),
                               0.5 * (ys[j] + ys[j + 1])]])
                for a, b in zip(c, c[1:] + c[:1]):
                    tris.append([a, b, cid])
            else:
                quads.append(c)
    coords = np.vstack(nodes)
    mesh = Mesh(coords, np.ones(len(coords)),
                [ElementBlock("tri3", np.array(tris, int)),
                 ElementBlock("quad4", np.array(quads, int))])
    right = np.array([gid(N, j) for j in range(N + 1)])
    mesh.node_sets = {"right": right,
                      "left": np.array([gid(0, j) for j in range(N + 1)])}
    mesh.edge_sets = {"right": np.array(
        [[gid(N, j), gid(N, j + 1)] for j in range(N)])}
    save_mesh(mesh, path)
    print(f"wrote {path}: {len(coords)} nodes, {len(tris)} tri3, "
          f"{len(quads)} quad4")


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "..", "src", "blayer", "assets",
        "crosshatch_beam.json")
    os.makedirs(os.path.dirname(out), exist_ok=True)
    main(out)
