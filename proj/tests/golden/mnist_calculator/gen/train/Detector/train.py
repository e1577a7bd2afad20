# Generated by mlcforge 0.1.0 from networks/detectors.nal. Do not edit.
"""Training program for network 'Detector' (backend: reference).

Usage: python train.py [--warm-start ARCHIVE] [--out ARCHIVE] [--log PATH]
Run from the project root. Dataset, preprocessing plan and hyperparameters
are read from the spec file next to this program.
"""
import sys

from mlcforge_runtime import program

UNIT = "Detector"
SPEC_FILE = "gen/train/Detector/spec.tcl"

# model
LAYER_SIZES = [64, 128, 10]
ACTIVATIONS = ["relu", "softmax"]
LOSS = "categorical_crossentropy"


def main(argv):
    return program.train_main(SPEC_FILE, argv, layer_sizes=LAYER_SIZES, activations=ACTIVATIONS, loss=LOSS)


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
