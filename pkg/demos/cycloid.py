"""Geodesics of the alpha = 1 model are cycloids.

Traces a few geodesics from their apex, compares them with the rolling-circle
curve of radius x0/2, and checks boundary distances against 2 sqrt(pi dy).

    python demos/cycloid.py
"""

import math

import numpy as np

from gasgiant import GasGiantMetric, connect_boundary_points, integrate_to_boundary
from gasgiant.flow import apex_start


def main():
    g = GasGiantMetric(1.0, 2, x_max=4.0)
    print("apex x0   exit y     pi*x0/2    exit t     pi*sqrt(x0)   max path error")
    for x0 in (0.1, 0.4, 0.9):
        R = x0 / 2
        tr = integrate_to_boundary(g, apex_start(g, x0, [0.0]))
        phi = 2 * math.pi - np.arccos(np.clip(1 - tr.x / R, -1, 1))
        path_err = np.max(np.abs(tr.y[:, 0] - R * (phi - np.sin(phi) - math.pi)))
        print(f"{x0:7.2f}  {tr.exit.y[0]:9.6f}  {math.pi * R:9.6f}  {tr.exit.time:9.6f}  "
              f"{math.pi * math.sqrt(x0):11.6f}   {path_err:.1e}")

    print("\nboundary separation   d_g            2 sqrt(pi dy)")
    for dy in (0.01, 0.1, 1.0):
        d = connect_boundary_points(g, [0.0], [dy]).length
        print(f"{dy:19.2f}   {d:.10f}   {2 * math.sqrt(math.pi * dy):.10f}")


if __name__ == "__main__":
    main()
