"""Write six 28x28 plain PGM (P2) images of the digit 5.

Source: the 8x8 digits bundled with scikit-learn, bilinearly upsampled.
Usage: python3 tools/make_digit_stack.py OUT_DIR
"""
import pathlib
import sys

import numpy as np
from skimage.transform import resize
from sklearn.datasets import load_digits


def write_pgm(path, img):
    rows = [" ".join(str(int(v)) for v in row) for row in img]
    path.write_text("P2\n28 28\n255\n" + "\n".join(rows) + "\n")


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
    out.mkdir(parents=True, exist_ok=True)
    digits = load_digits()
    picks = np.flatnonzero(digits.target == 5)[:6]
    for k, idx in enumerate(picks):
        img = resize(digits.images[idx] / 16.0, (28, 28), order=1, anti_aliasing=False)
        img = np.clip(np.rint(img * 255.0), 0, 255).astype(int)
        write_pgm(out / f"digit5_{k}.pgm", img)


if __name__ == "__main__":
    main()
