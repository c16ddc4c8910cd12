"""Writes m2_fixture.m2 and m2_fixture.gold (one corrected sentence per line).

Corrections are applied left to right with a running offset, independently
of the C++ implementation. Annotator 1 edits are noise and never applied.
"""
import random

VOCAB = "he she they go goes went to school the a an of new star birth train is are good option dog " \
        "in on at yesterday every day cat likes like quickly very big".split()
TYPES = ["R:VERB:SVA", "M:DET", "U:DET", "R:NOUN", "R:PREP", "R:VERB:TENSE", "R:SPELL", "M:PUNCT", "U:ADV"]


def random_edits(rng, n):
    edits = []
    pos = 0
    while pos <= n and len(edits) < 4:
        start = pos + rng.randint(0, 3)
        if start > n:
            break
        kind = rng.choice(["replace", "insert", "delete"])
        if kind == "insert" or start == n:
            end = start
            repl = [rng.choice(VOCAB) for _ in range(rng.randint(1, 2))]
        else:
            end = min(n, start + rng.randint(1, 2))
            repl = [] if kind == "delete" else [rng.choice(VOCAB) for _ in range(rng.randint(1, 2))]
        edits.append((start, end, rng.choice(TYPES), repl))
        # insertions at the same point as a following edit would overlap
        pos = end + 1
    return edits


def apply_left_to_right(tokens, edits):
    out = list(tokens)
    offset = 0
    for start, end, _, repl in edits:
        out[start + offset:end + offset] = repl
        offset += len(repl) - (end - start)
    return out


def main():
    rng = random.Random(20241019)
    blocks, gold = [], []
    for _ in range(200):
        n = rng.randint(3, 14)
        tokens = [rng.choice(VOCAB) for _ in range(n)]
        edits = random_edits(rng, n) if rng.random() > 0.1 else []
        lines = ["S " + " ".join(tokens)]
        if not edits and rng.random() < 0.5:
            lines.append("A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0")
        for start, end, etype, repl in edits:
            lines.append(f"A {start} {end}|||{etype}|||{' '.join(repl) if repl else '-NONE-'}|||REQUIRED|||-NONE-|||0")
        if rng.random() < 0.3:
            lines.append(f"A 0 1|||R:OTHER|||{rng.choice(VOCAB)}|||REQUIRED|||-NONE-|||1")
        blocks.append("\n".join(lines))
        gold.append(" ".join(apply_left_to_right(tokens, edits)))
    with open("m2_fixture.m2", "w") as f:
        f.write("\n\n".join(blocks) + "\n")
    with open("m2_fixture.gold", "w") as f:
        f.write("\n".join(gold) + "\n")


if __name__ == "__main__":
    main()
