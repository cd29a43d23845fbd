#!/usr/bin/env python3
"""Regenerates the files under fixtures/. Output is deterministic."""

import json
import random
import struct
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "fixtures"
DIM = 32

TOY = [
    ("cam01", 5, "i love this camera . the photos are sharp and bright !"),
    ("cam01", 1, "i hate this camera . the photos are blurry ."),
    ("mug02", 5, "love the mug , keeps my coffee hot all morning ."),
    ("mug02", 1, "hate the mug , it leaks and the handle broke ."),
    ("pan03", 5, "great pan , i love how nothing sticks !"),
    ("pan03", 1, "awful pan , i hate how everything sticks ."),
    ("bag04", 5, "i love this bag , sturdy and roomy ."),
    ("bag04", 1, "i hate this bag , the zipper snapped in a week ."),
    ("lamp05", 5, "lovely lamp , warm light and i love the design ."),
    ("lamp05", 1, "terrible lamp , flickers and i hate the design ."),
]

POSITIVE = ["love", "lovely", "great", "sharp", "bright", "sturdy", "roomy", "warm", "good",
            "excellent", "perfect", "happy"]
NEGATIVE = ["hate", "awful", "terrible", "blurry", "leaks", "broke", "snapped", "flickers", "bad",
            "poor", "broken", "disappointed"]


def write_features(path, dim, records):
    out = bytearray(b"IMGF")
    out += struct.pack("<II", len(records), dim)
    for pid, values in records:
        raw = pid.encode("utf-8")
        out += struct.pack("<H", len(raw)) + raw
        out += struct.pack("<%df" % dim, *values)
    path.write_bytes(bytes(out))


def synthetic_feature(rng, dim):
    # Non-negative like post-ReLU activations, a few strong components.
    return [round(max(0.0, rng.gauss(0.0, 1.0)), 4) for _ in range(dim)]


def write_jsonl(path, rows):
    with path.open("w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")


def words(n, rng):
    pool = ["good", "value", "works", "fine", "box", "item", "arrived", "quickly", "as", "described"]
    return " ".join(rng.choice(pool) for _ in range(n))


def main():
    rng = random.Random(20260417)
    toy = ROOT / "toy"
    toy.mkdir(parents=True, exist_ok=True)
    write_jsonl(toy / "reviews.jsonl",
                [{"product_id": p, "rating": r, "review": t} for p, r, t in TOY])
    products = sorted({p for p, _, _ in TOY})
    write_features(toy / "features.bin", DIM, [(p, synthetic_feature(rng, DIM)) for p in products])

    lex = ROOT / "lexicon"
    lex.mkdir(parents=True, exist_ok=True)
    (lex / "positive.txt").write_text("\n".join(POSITIVE) + "\n", encoding="utf-8")
    (lex / "negative.txt").write_text("\n".join(NEGATIVE) + "\n", encoding="utf-8")

    contract = ROOT / "contract"
    contract.mkdir(parents=True, exist_ok=True)
    write_jsonl(contract / "three_records.jsonl", [
        {"product_id": "good01", "rating": 4, "review": "works fine , arrived quickly ."},
        {"product_id": "long02", "rating": 2, "review": words(120, rng)},
        {"product_id": "ghost03", "rating": 3, "review": "no image for this one ."},
    ])
    # 100 tokens kept, 101 dropped at max_len 100.
    write_jsonl(contract / "boundary.jsonl", [
        {"product_id": "good01", "rating": 5, "review": words(100, rng)},
        {"product_id": "long02", "rating": 1, "review": words(101, rng)},
    ])
    write_jsonl(contract / "bad_rating.jsonl", [
        {"product_id": "good01", "rating": 4, "review": "fine ."},
        {"product_id": "good01", "rating": 9, "review": "off the scale ."},
    ])
    feats = [("good01", synthetic_feature(rng, DIM)), ("long02", synthetic_feature(rng, DIM))]
    write_features(contract / "features.bin", DIM, feats)
    write_features(contract / "features_dim16.bin", 16,
                   [(p, synthetic_feature(rng, 16)) for p, _ in feats])


if __name__ == "__main__":
    main()
