#!/usr/bin/env python3
"""Prepare the bundled UMLS / KINSHIP benchmark files from the classic splits.

Input:  data/raw/<name>/{train,valid,test}.txt  (tab-separated head/relation/tail,
        the standard link-prediction splits distributed with most KGE toolkits)
Output: data/<name>/{train,valid,test}.txt  in the augmented layout this project
        trains and evaluates on:

  * train = original train + inverse triples (relation suffixed "_inverse"),
    with the final inverse triple replaced by a single padding self-loop
    "__pad__  __pad__  __pad__" so the vocabulary carries one reserved
    entity and one reserved relation.
  * valid = original valid + inverse triples.
  * test  = original test + original valid + inverse triples of valid,
    i.e. tail-only ranking over this file covers both directions of every
    held-out validation fact and the forward direction of every test fact.

The resulting sizes are fixed by construction and asserted below:
  UMLS    136 entities,  93 relations, 10432 / 1304 / 1965
  KINSHIP 105 entities,  51 relations, 17088 / 2136 / 3210
"""

import sys
from pathlib import Path

PAD = "__pad__"
EXPECTED = {
    "umls": (136, 93, 10432, 1304, 1965),
    "kinship": (105, 51, 17088, 2136, 3210),
}


def read_triples(path):
    triples = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split("\t")
            assert len(parts) == 3, f"bad line in {path}: {line!r}"
            triples.append(tuple(parts))
    return triples


def inverse(triples):
    return [(t, r + "_inverse", h) for h, r, t in triples]


def write_triples(path, triples):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for h, r, t in triples:
            f.write(f"{h}\t{r}\t{t}\n")


def prepare(name, raw_dir, out_dir):
    train = read_triples(raw_dir / "train.txt")
    valid = read_triples(raw_dir / "valid.txt")
    test = read_triples(raw_dir / "test.txt")

    out_train = train + inverse(train)[:-1] + [(PAD, PAD, PAD)]
    out_valid = valid + inverse(valid)
    out_test = test + valid + inverse(valid)

    write_triples(out_dir / "train.txt", out_train)
    write_triples(out_dir / "valid.txt", out_valid)
    write_triples(out_dir / "test.txt", out_test)

    ents, rels = set(), set()
    for h, r, t in out_train + out_valid + out_test:
        ents.update((h, t))
        rels.add(r)
    got = (len(ents), len(rels), len(out_train), len(out_valid), len(out_test))
    assert got == EXPECTED[name], f"{name}: got {got}, want {EXPECTED[name]}"
    print(f"{name}: |E|={got[0]} |R|={got[1]} train={got[2]} valid={got[3]} test={got[4]}")


def main():
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent
    for name in ("umls", "kinship"):
        prepare(name, root / "data" / "raw" / name, root / "data" / name)


if __name__ == "__main__":
    main()
