#!/usr/bin/env python3
"""Materialize the synthetic benchmark to disk for CLI experiments.

Writes corpus.jsonl, queries.tsv, qrels.txt, and cache.jsonl (pre-filled
pseudo-references) into the output directory.
"""

import argparse

from queryboost.synthetic import make_synthetic_dataset, write_dataset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/synthetic")
    parser.add_argument("--topics", type=int, default=20)
    parser.add_argument("--docs", type=int, default=500)
    parser.add_argument("--refs-per-query", type=int, default=3)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    ds = make_synthetic_dataset(num_topics=args.topics, num_docs=args.docs,
                                refs_per_query=args.refs_per_query, seed=args.seed)
    paths = write_dataset(ds, args.out)
    for name, path in paths.items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
