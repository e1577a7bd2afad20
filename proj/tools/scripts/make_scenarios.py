"""Regenerates the scenarios of samples/mnist_calculator.

Digit images come from the part of the digits corpus that is not in
data/digits.csv, so trained predictors see unseen inputs.
"""
import pathlib
import sys

from sklearn.datasets import load_digits

HELD_OUT = 1000
PLUS = [0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 1, 1, 1, 1, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0]


def held_out_images():
    digits = load_digits()
    images = {}
    for x, y in zip(digits.data[HELD_OUT:], digits.target[HELD_OUT:]):
        images.setdefault(int(y), [int(v) for v in x])
    return images


def tuple_text(values):
    return "(" + ", ".join(str(v) for v in values) + ")"


def inputs_block(images, digits):
    lines = ["inputs {"]
    for d in digits:
        lines.append(f"  img_{d}: {tuple_text(images[d])}")
    lines.append("}")
    return lines


def calculation(t, a, op, b):
    return [
        f"  {{ time: {t} thing: camera port: lens args: (img_{a}) }},",
        f'  {{ time: {t + 10} thing: device port: keypad args: ("{op}") }},',
        f"  {{ time: {t + 20} thing: camera port: lens args: (img_{b}) }},",
    ]


def oracle(digits):
    return ["predictors {", "  server {", "    oracle {"] + [
        f"      img_{d}: ({d})" for d in digits
    ] + ["    }", "  }", "}"]


PAIRS = [(2, 3), (0, 1), (4, 5), (6, 7), (8, 9)]


def write_calculator(path, images):
    digits = [d for pair in PAIRS for d in pair]
    lines = ["// Five sums over ten unseen digit images, 2 + 3 first.",
             "name: calculator", "seed: 7", "pipeline: Calculator"]
    lines += inputs_block(images, sorted(digits))
    lines += ["events: ("]
    for i, (a, b) in enumerate(PAIRS):
        lines += calculation(i * 100, a, "+", b)
    lines[-1] = lines[-1].rstrip(",")
    lines += [")"] + oracle(sorted(digits))
    lines += ["assertions: ("]
    for a, b in PAIRS:
        lines.append(f"  {{ eventually {{ kind: MessageSent thing: device port: display args: ({a + b}) }} }},")
    lines += [
        "  { order: ({ action: da_preprocess }, { action: da_train }, { action: da_predict }) },",
        "  { next: ({ kind: ActionExecuted thing: server action: da_predict },"
        " { kind: StateEntered state: ready }) },",
        "  { never { kind: MessageSent peer: env thing: server } }",
        ")",
    ]
    path.write_text("\n".join(lines) + "\n")


def write_detectors(path, images):
    lines = ["// The two recognizers feeding the arithmetic stub.",
             "name: detectors", "seed: 7", "pipeline: Calculator", "inputs {",
             f"  img_7: {tuple_text(images[7])}", f"  plus: {tuple_text(PLUS)}", "}",
             "events: (",
             "  { time: 0 thing: source port: image args: (img_7) },",
             "  { time: 0 thing: symbols port: symbol args: (plus) }",
             ")",
             "predictors {",
             "  detector { oracle { img_7: (0, 0, 0, 0, 0, 0, 0, 1, 0, 0) } }",
             "  op_detector { oracle { plus: (1, 0, 0, 0) } }",
             "  server { oracle { default: (0) } }",
             "}",
             "assertions: (",
             "  { eventually { kind: MessageReceived thing: adder port: operand } },",
             "  { eventually { kind: MessageReceived thing: adder port: operator args: ((1, 0, 0, 0)) } },",
             "  { order: ({ kind: PredictionMade unit: Detector }, { kind: MessageReceived thing: adder port: operand }) }",
             ")"]
    path.write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "samples/mnist_calculator")
    out = root / "scenarios"
    out.mkdir(exist_ok=True)
    images = held_out_images()
    write_calculator(out / "calculator.scn", images)
    write_detectors(out / "detectors.scn", images)
