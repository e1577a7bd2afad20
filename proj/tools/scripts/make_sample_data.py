"""Regenerates the datasets of samples/mnist_calculator."""
import csv
import pathlib
import random
import sys

from sklearn.datasets import load_digits

GLYPHS = {
    0: ["..#..", "..#..", "#####", "..#..", "..#.."],  # +
    1: [".....", ".....", "#####", ".....", "....."],  # -
    2: ["#...#", ".#.#.", "..#..", ".#.#.", "#...#"],  # *
    3: ["....#", "...#.", "..#..", ".#...", "#...."],  # /
}


def write_digits(path, rows=1000):
    digits = load_digits()
    with open(path, "w", newline="\n") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([f"image_{i}" for i in range(64)] + ["digit"])
        for x, y in zip(digits.data[:rows], digits.target[:rows]):
            w.writerow([int(v) for v in x] + [int(y)])


def write_operators(path, rows=400, seed=11):
    rng = random.Random(seed)
    with open(path, "w", newline="\n") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([f"symbol_{i}" for i in range(25)] + ["op"])
        for r in range(rows):
            label = r % 4
            cells = [1 if c == "#" else 0 for line in GLYPHS[label] for c in line]
            for _ in range(2):
                k = rng.randrange(25)
                cells[k] = 1 - cells[k]
            w.writerow(cells + [label])


if __name__ == "__main__":
    root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "samples/mnist_calculator")
    write_digits(root / "data" / "digits.csv")
    write_operators(root / "data" / "operators.csv")
