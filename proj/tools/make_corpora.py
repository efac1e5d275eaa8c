#!/usr/bin/env python3
"""Regenerates the bundled room configs in corpora/.

The text is synthetic: seeded filler prose in the register of case-file
reports. Only the shape matters (document counts and total word counts).
"""

import argparse
import json
import random
from pathlib import Path

SETS = [
    # roomId, documents, total words, seed
    ("prelim-a", 6, 813, 11),
    ("prelim-b", 6, 779, 12),
    ("prelim-c", 6, 805, 13),
    ("study-drug", 15, 2583, 21),
    ("study-wildlife", 15, 2518, 22),
]

SUBJECTS = ["The courier", "A dock worker", "The accountant", "Officer Reyes",
            "The shipping agent", "A local broker", "The informant", "Her cousin",
            "The warehouse owner", "An airline clerk", "The driver", "Customs"]
VERBS = ["met", "called", "paid", "followed", "wired money to", "rented a van for",
         "signed for", "was seen with", "flew out with", "stored crates for"]
OBJECTS = ["the buyer", "a contact in the port", "the trucking firm", "two visitors",
           "the freight office", "an unnamed partner", "the exporter", "the pilot"]
TAILS = ["on Tuesday", "near the east terminal", "after midnight", "at the motel",
         "before the inspection", "in cash", "without a manifest", "twice last month"]


def split_total(rng, total, n):
    mean = total / n
    counts = [max(20, round(mean * rng.uniform(0.8, 1.2))) for _ in range(n - 1)]
    counts.append(total - sum(counts))
    if counts[-1] < 20:
        raise SystemExit("split failed; change the seed")
    return counts


def body_of(rng, words):
    out = []
    while len(out) < words:
        sentence = " ".join([rng.choice(SUBJECTS), rng.choice(VERBS),
                             rng.choice(OBJECTS), rng.choice(TAILS)]).split()
        sentence[-1] += "."
        out.extend(sentence)
    out = out[:words]
    if not out[-1].endswith("."):
        out[-1] += "."
    return " ".join(out)


def make(room, n, total, seed):
    rng = random.Random(seed)
    docs = []
    for i, words in enumerate(split_total(rng, total, n), start=1):
        docs.append({"id": f"{room}-d{i:02d}",
                     "title": f"Report {i:02d}",
                     "body": body_of(rng, words)})
    return {"roomId": room, "documents": docs,
            "layoutParams": {"seed": seed}, "semicircleRadius": 150.0}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "corpora"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for room, n, total, seed in SETS:
        config = make(room, n, total, seed)
        assert sum(len(d["body"].split()) for d in config["documents"]) == total
        (out / f"{room}.json").write_text(json.dumps(config, indent=2) + "\n")


if __name__ == "__main__":
    main()
