#!/usr/bin/env python3
# Copyright 2026 The genret Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes the bundled synthetic corpus under data/synthetic/.

Every document carries one sentence "The secret code of K is A." where K is a
nonce keyword (also the title) and A a nonce code word, wrapped in two filler
sentences drawn from a shared pool. Labeled queries cover the first half of
the documents. Each document gets a training query and a held-out query in
two different phrasings; every phrasing also occurs in training for other
documents.
"""

import argparse
import json
import pathlib
import random

FILLER = [
    "The old archive was opened during the long winter festival",
    "Several travelers gathered near the river before sunrise",
    "A quiet library stood at the edge of the northern market",
    "Local farmers traded grain and wool every second week",
    "The harbor lights were repaired after the autumn storm",
    "Children painted the walls of the school in bright colors",
    "A narrow bridge connected the two halves of the village",
    "Merchants from distant towns arrived with spices and cloth",
    "The council met in the stone hall to discuss new roads",
    "An ancient clock tower marked every hour with a bell",
    "Fishermen mended their nets while the tide was low",
    "The museum displayed maps drawn by early explorers",
    "Snow covered the mountain pass for most of the year",
    "A small orchard produced apples and pears each summer",
    "Musicians played in the square on warm evenings",
    "The railway station was built from red brick and iron",
    "Scholars copied manuscripts by candlelight in the abbey",
    "Wild horses grazed on the hills beyond the forest",
    "The bakery opened early and sold bread to every street",
    "A lighthouse guided ships along the rocky coast",
    "Gardeners planted roses along the path to the palace",
    "The weekly newspaper reported on harvests and weather",
    "Engineers designed a canal to carry water to the fields",
    "Pilgrims rested at the inn before crossing the valley",
]

TEMPLATES = [
    "What is the secret code of {k}?",
    "Which code belongs to {k}?",
    "Tell me the code assigned to {k}.",
    "{k} has which secret code?",
    "Find the code for {k} please.",
]

ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"]
VOWELS = ["a", "e", "i", "o", "u"]


def nonce(rng, syllables):
    return "".join(rng.choice(ONSETS) + rng.choice(VOWELS) for _ in range(syllables))


def unique_nonces(rng, count, syllables, taken):
    out = []
    while len(out) < count:
        w = nonce(rng, syllables)
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="data/synthetic")
    parser.add_argument("--docs", type=int, default=100)
    parser.add_argument("--labeled", type=int, default=50)
    parser.add_argument("--seed", type=int, default=20240611)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    taken = {w.lower() for s in FILLER for w in s.split()}
    keywords = unique_nonces(rng, args.docs, 3, taken)
    codes = unique_nonces(rng, args.docs, 2, taken)

    docs, train, test = [], [], []
    for i, (k, a) in enumerate(zip(keywords, codes)):
        first, second = rng.sample(FILLER, 2)
        doc_id = f"doc{i:03d}"
        docs.append({
            "doc_id": doc_id,
            "title": k.capitalize(),
            "text": f"{first}. The secret code of {k} is {a}. {second}.",
        })
        if i < args.labeled:
            train.append({"query_id": f"train{i:03d}",
                          "query": TEMPLATES[i % len(TEMPLATES)].format(k=k),
                          "answer": a, "relevant_doc_ids": [doc_id]})
            test.append({"query_id": f"test{i:03d}",
                         "query": TEMPLATES[(i + 2) % len(TEMPLATES)].format(k=k),
                         "answer": a, "relevant_doc_ids": [doc_id]})

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(out / "documents.jsonl", docs)
    write_jsonl(out / "queries_train.jsonl", train)
    write_jsonl(out / "queries_test.jsonl", test)


if __name__ == "__main__":
    main()
