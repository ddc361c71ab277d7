"""`parse-only` subcommand: dataset statistics without running anything."""

import argparse
import logging
from pathlib import Path

from fedsaddle.models import PartitionMode
from fedsaddle.services.data_io import (
    binarize,
    binarize_and_subsample,
    dataset_stats,
    load_libsvm,
    partition,
    positive_rule,
)

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "parse-only", help="Parse a LIBSVM file and print dataset statistics", allow_abbrev=False
    )
    parser.add_argument("--data", type=Path, required=True, help="LIBSVM dataset path")
    parser.add_argument("--n-features", dest="n_features", type=int, default=None)
    parser.add_argument("--M", type=int, default=None, help="Partition across M clients")
    parser.add_argument(
        "--partition", type=PartitionMode, choices=list(PartitionMode), default=PartitionMode.LABEL_SORTED
    )
    parser.add_argument("--per-class", dest="per_class", type=int, default=None)
    parser.add_argument("--positive-label", dest="positive_label", type=float, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    samples, _ = load_libsvm(args.data, args.n_features)
    positive = positive_rule(args.positive_label)
    if args.per_class is not None:
        samples = binarize_and_subsample(samples, positive, args.per_class, args.seed)
    elif args.positive_label is not None:
        samples = binarize(samples, positive)

    parts = partition(samples, args.M, args.partition, args.seed) if args.M is not None else None
    stats = dataset_stats(samples, parts)

    print(f"samples: {stats.num_samples}")
    print(f"features: {stats.num_features}")
    for label, count in stats.class_counts.items():
        print(f"class {label}: {count}")
    if parts is not None:
        sizes = sorted(set(stats.shard_sizes))
        print(f"clients: {len(stats.shard_sizes)}")
        print(f"shard sizes: {','.join(str(size) for size in sizes)}")
        print(f"dropped: {stats.dropped}")
    return 0
