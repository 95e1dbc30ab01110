"""Generate the three-boundary dumbbell meshes used by the c_m probe.

Two annuli 1 <= |x - c| <= 2 about c = (+-2.6, 0) are joined by a straight
band of height h. Holes are labeled 1 (left) and 2 (right), the outer
boundary 3. The raw Triangle output is canonicalized by the Rust
`canonicalize_mesh` example so that node order and edge order match what
`save_mesh` writes.

    python3 tools/gen_fixtures.py [--max-area 0.01]
"""

import argparse
import pathlib
import subprocess

import numpy as np
import shapely.geometry as geom
import triangle

CENTERS = [(-2.6, 0.0), (2.6, 0.0)]
WIDTHS = {"dumbbell_h100": 1.0, "dumbbell_h050": 0.5, "dumbbell_h025": 0.25}


def outline(h, quad_segs):
    disks = [geom.Point(c).buffer(2.0, quad_segs=quad_segs) for c in CENTERS]
    band = geom.box(-2.0, -h / 2, 2.0, h / 2)
    shape = disks[0].union(disks[1]).union(band)
    for c in CENTERS:
        shape = shape.difference(geom.Point(c).buffer(1.0, quad_segs=quad_segs))
    return shape.simplify(1e-9)


def planar_graph(shape):
    vertices, segments, markers = [], [], []

    def add_ring(coords, marker):
        pts = list(coords)[:-1]
        start = len(vertices)
        vertices.extend(pts)
        for k in range(len(pts)):
            segments.append((start + k, start + (k + 1) % len(pts)))
            markers.append(marker)

    add_ring(shape.exterior.coords, 3)
    for ring in shape.interiors:
        x = np.mean([p[0] for p in ring.coords])
        add_ring(ring.coords, 1 if x < 0 else 2)
    return {
        "vertices": np.array(vertices),
        "segments": np.array(segments),
        "segment_markers": np.array(markers),
        "holes": np.array(CENTERS),
    }


def write_triangle(out, base):
    nodes, tris = out["vertices"], out["triangles"]
    segs, marks = out["segments"], out["segment_markers"].ravel()
    with open(f"{base}.node", "w") as f:
        f.write(f"{len(nodes)} 2 0 0\n")
        for i, (x, y) in enumerate(nodes):
            f.write(f"{i + 1} {float(x)!r} {float(y)!r}\n")
    with open(f"{base}.ele", "w") as f:
        f.write(f"{len(tris)} 3 0\n")
        for i, t in enumerate(tris):
            f.write(f"{i + 1} {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")
    with open(f"{base}.edge", "w") as f:
        f.write(f"{len(segs)} 1\n")
        for i, (s, m) in enumerate(zip(segs, marks)):
            f.write(f"{i + 1} {s[0] + 1} {s[1] + 1} {m}\n")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--max-area", type=float, default=0.01)
    parser.add_argument("--quad-segs", type=int, default=24)
    parser.add_argument("--out", default="fixtures")
    args = parser.parse_args()
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, h in WIDTHS.items():
        mesh = triangle.triangulate(planar_graph(outline(h, args.quad_segs)), f"pq30a{args.max_area}")
        base = out_dir / name
        write_triangle(mesh, base)
        print(f"{name}: {len(mesh['vertices'])} nodes, {len(mesh['triangles'])} triangles")
        subprocess.run(
            ["cargo", "run", "-q", "-p", "specflow-core", "--example", "canonicalize_mesh", "--", str(base), str(base)],
            check=True,
        )


if __name__ == "__main__":
    main()
