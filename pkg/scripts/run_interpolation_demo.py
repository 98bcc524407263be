"""Morph one bent-tube class into the other and dump the frames.

Fits an AIC ensemble to each endpoint cloud, walks the product-manifold
geodesic between the dominant members, and writes one sampled cloud per
t plus a filmstrip SVG. Pass two cloud files to morph your own shapes
instead of the stock tubes.
"""

import argparse
import os

from gmmcloud import FitConfig, InterpolationConfig, interpolate_point_clouds, make_bent_tube, tube_spec_for_class
from gmmcloud.io import emit_svg_filmstrip, read_point_cloud, write_point_cloud

FRAME_COLOR = "#1f6fb4"


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("clouds", nargs="*", metavar="CLOUD",
                        help="two .xyz/.csv files to morph between (default: stock tubes)")
    parser.add_argument("--n-points", type=int, default=600,
                        help="points per stock tube (default: %(default)s)")
    parser.add_argument("--shape-seed", type=int, default=0,
                        help="seed for the stock tube sampler (default: %(default)s)")
    parser.add_argument("--ts", default="0,0.25,0.5,0.75,1",
                        help="comma-separated interpolation parameters (default: %(default)s)")
    parser.add_argument("--n-out", type=int, default=None,
                        help="points per frame (default: size of the first cloud)")
    parser.add_argument("--ks", default=None,
                        help="comma-separated candidate component counts (default: automatic)")
    parser.add_argument("--seed", type=int, default=0,
                        help="fitting and frame-sampling seed (default: %(default)s)")
    parser.add_argument("-o", "--out", default="interpolation_demo",
                        help="output directory (default: %(default)s)")
    return parser.parse_args()


def main():
    args = parse_args()
    if args.clouds and len(args.clouds) != 2:
        raise SystemExit("pass exactly two cloud files, or none for the stock tubes")

    if args.clouds:
        x = read_point_cloud(args.clouds[0])
        y = read_point_cloud(args.clouds[1])
    else:
        x = make_bent_tube(tube_spec_for_class("nondemented", n_points=args.n_points), args.shape_seed)
        y = make_bent_tube(tube_spec_for_class("demented", n_points=args.n_points), args.shape_seed + 1)

    config = InterpolationConfig(
        candidate_ks=tuple(int(k) for k in args.ks.split(",")) if args.ks else None,
        fit=FitConfig(seed=args.seed),
        seed=args.seed,
    )
    ts = tuple(float(t) for t in args.ts.split(","))
    result = interpolate_point_clouds(x, y, ts, args.n_out, config)

    os.makedirs(args.out, exist_ok=True)
    panels = []
    for i, (t, frame) in enumerate(zip(result.ts, result.frames)):
        frame_path = os.path.join(args.out, f"frame_{i:02d}_t{t:g}.xyz")
        write_point_cloud(frame, frame_path)
        panels.append((f"t={t:g}", frame, FRAME_COLOR))
        print(f"wrote {frame_path}")
    strip_path = os.path.join(args.out, "filmstrip.svg")
    emit_svg_filmstrip(panels, strip_path)
    print(f"wrote {strip_path}")


if __name__ == "__main__":
    main()
