"""Walk through near, may-reach and surrounded on a small two-colour scene.

The scene holds four red enclosures with blue inside them: a closed square
ring, a ring with a gap, a diamond drawn with diagonal steps and a U shape
closed by the image border. For each enclosure we count the blue pixels that
are surrounded by red, under both adjacencies.

    python3 demos/reach_and_surround.py [--out DIR]
"""

import argparse
import os

import numpy as np

from imgql import spatial
from imgql.imgio import save_field
from imgql.phantoms import surround_scene
from imgql.grid import BoolField

REGIONS = {
    "closed ring": (slice(0, 40), slice(0, 40)),
    "ring with gap": (slice(45, 85), slice(0, 40)),
    "diagonal diamond": (slice(10, 41), slice(47, 78)),
    "U at the border": (slice(60, 100), slice(50, 96)),
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="demo_output/reach")
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)
    scene = surround_scene()

    for adjacency in ("orthodiagonal", "orthogonal"):
        red, blue = scene.fields(adjacency)
        inside = spatial.surrounded(blue, red)
        print(f"\n{adjacency} adjacency: blue pixels surrounded by red")
        for name, (xs, ys) in REGIONS.items():
            total = int(blue.data[xs, ys].sum())
            held = int(inside.data[xs, ys].sum())
            print(f"  {name:18s} {held:4d} of {total:4d}")
        save_field(os.path.join(args.out, f"surrounded_{adjacency}.png"), inside)

    # The diamond's diagonal steps let orthodiagonal paths slip between red
    # pixels, so only orthogonal adjacency closes it. The U counts as closed
    # because no path can leave the image.
    red, blue = scene.fields()
    edge = np.zeros(red.geometry.dims, bool)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    escape = spatial.may_reach(BoolField(red.geometry, edge), blue)
    print(f"\nblue pixels with a blue-only path to the border: {int((escape.data & blue.data).sum())}")
    print(f"one dilation step of red adds {spatial.near(red).count() - red.count()} pixels")
    print(f"\nmasks written to {args.out}/")


if __name__ == "__main__":
    main()
