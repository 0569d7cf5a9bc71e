#!/usr/bin/env python3
"""
Acceptance Corpus Builder

Writes seeded random arbitrage-free tree scenarios as scenario files so the
batch runner can exercise the solvers at desk scale.
"""

import json
import sys
from pathlib import Path

import numpy as np

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from nsdual.logging import get_logger
from nsdual.market.generators import random_tree

logger = get_logger("scripts.build_corpus")

UTILITIES = [
    {"family": "exponential", "eta": 1.0},
    {"family": "exponential", "eta": 0.25},
    {"family": "quadratic_shortfall"},
    {"family": "power_shortfall", "p": 1.5},
]


def build_scenario(rng: np.random.Generator, index: int, periods: int, branches: int, assets: int) -> dict:
    """One explicit-tree scenario with a random bounded claim."""
    tree = random_tree(rng, periods=periods, branches=branches, assets=assets)
    frame = tree.to_frame()
    price_columns = [c for c in frame.columns if c.startswith("price_")]
    nodes = []
    for row in frame.itertuples(index=False):
        record = row._asdict()
        nodes.append(
            {
                "id": record["node"],
                "parent": record["parent"] or None,
                "probability": float(record["probability"]),
                "prices": [float(record[c]) for c in price_columns],
            }
        )
    claim = rng.uniform(0.0, 1.0, size=tree.n_atoms).round(6).tolist()
    utility = UTILITIES[index % len(UTILITIES)]
    return {
        "schema_version": 1,
        "name": f"corpus-{index:04d}",
        "description": f"Random tree: {periods} periods, {branches} branches, {assets} assets",
        "market": {"kind": "explicit", "nodes": nodes},
        "utility": utility,
        "claim": claim,
        "capital": float(round(rng.uniform(0.5, 2.0), 6)),
        "task": "duality",
        "seed": index,
    }


def main():
    """Main entry point for corpus generation."""
    import argparse

    parser = argparse.ArgumentParser(description="Build the randomized acceptance corpus")
    parser.add_argument("--out", type=Path, default=Path("corpus"), help="Output directory")
    parser.add_argument("--count", type=int, default=20, help="Number of scenarios")
    parser.add_argument("--seed", type=int, default=0, help="Generator seed")
    parser.add_argument("--periods", type=int, default=2)
    parser.add_argument("--branches", type=int, default=3)
    parser.add_argument("--assets", type=int, default=1)

    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    try:
        for i in range(args.count):
            scenario = build_scenario(rng, i, args.periods, args.branches, args.assets)
            path = args.out / f"{scenario['name']}.json"
            path.write_text(json.dumps(scenario, indent=2, sort_keys=True) + "\n", encoding="utf-8")
            logger.debug("Wrote scenario", path=str(path))
    except KeyboardInterrupt:
        logger.error("Interrupted by user")
        sys.exit(1)

    logger.info("Corpus written", count=args.count, out=str(args.out))


if __name__ == "__main__":
    main()
