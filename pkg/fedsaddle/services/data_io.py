"""LIBSVM ingestion, binary relabelling and client partitioning."""

import logging
import math
from pathlib import Path
from typing import BinaryIO, Callable, Iterable, List, Optional, Tuple, Union

import numpy as np

from fedsaddle.errors import DatasetError, LibsvmParseError
from fedsaddle.models import DatasetStats, Partition, PartitionMode, Sample
from fedsaddle.services.sampling import Purpose

logger = logging.getLogger(__name__)

LabelRule = Callable[[float], bool]


def _parse_real(token: str, line_number: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError as e:
        raise LibsvmParseError(line_number, f"non-numeric {what} {token!r}") from e
    if not math.isfinite(value):
        raise LibsvmParseError(line_number, f"non-finite {what} {token!r}")
    return value


def _parse_line(text: str, line_number: int) -> Optional[Tuple[float, List[Tuple[int, float]]]]:
    text = text.split("#", 1)[0].strip()
    if not text:
        return None

    tokens = text.split()
    label = _parse_real(tokens[0], line_number, "label")

    entries: List[Tuple[int, float]] = []
    previous = 0
    for token in tokens[1:]:
        if ":" not in token:
            raise LibsvmParseError(line_number, f"missing colon in {token!r}")
        index_text, value_text = token.split(":", 1)
        try:
            index = int(index_text)
        except ValueError as e:
            raise LibsvmParseError(line_number, f"non-numeric index {index_text!r}") from e
        if index < 1:
            raise LibsvmParseError(line_number, f"index {index} is not 1-based")
        if index <= previous:
            raise LibsvmParseError(line_number, f"non-increasing index {index} after {previous}")
        entries.append((index, _parse_real(value_text, line_number, "value")))
        previous = index
    return label, entries


def parse_libsvm(
    source: Union[BinaryIO, Iterable[bytes], bytes], n_features: Optional[int] = None
) -> Tuple[List[Sample], int]:
    """
    Parse LIBSVM text into dense samples.

    Args:
        source: Binary stream, iterable of byte lines, or a bytes blob
        n_features: Optional lower bound on the dimension

    Returns:
        Tuple of (samples in file order, dimension d)

    Raises:
        LibsvmParseError: If a line is malformed
    """
    if isinstance(source, bytes):
        source = source.splitlines()

    rows: List[Tuple[float, List[Tuple[int, float]]]] = []
    dimension = n_features or 0
    for line_number, raw in enumerate(source, start=1):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise LibsvmParseError(line_number, "line is not valid UTF-8") from e
        parsed = _parse_line(text, line_number)
        if parsed is None:
            continue
        rows.append(parsed)
        if parsed[1]:
            dimension = max(dimension, parsed[1][-1][0])

    samples = []
    for label, entries in rows:
        features = np.zeros(dimension, dtype=np.float64)
        for index, value in entries:
            features[index - 1] = value
        samples.append(Sample(features=features, label=label))
    return samples, dimension


def load_libsvm(path: Path, n_features: Optional[int] = None) -> Tuple[List[Sample], int]:
    """Parse a local LIBSVM file."""
    with open(path, "rb") as f:
        samples, dimension = parse_libsvm(f, n_features)
    logger.info(f"Loaded {len(samples)} samples with d={dimension} from {path}")
    return samples, dimension


def _format_real(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def serialize_libsvm(samples: List[Sample]) -> bytes:
    """
    Emit samples as LIBSVM text with zero features omitted.

    When no sample has a nonzero value at the last index, the first line
    carries an explicit `d:0` so reparsing recovers the dimension.
    """
    dimension = max((s.features.shape[0] for s in samples), default=0)
    pad_first = dimension > 0 and not any(
        s.features.shape[0] == dimension and s.features[-1] != 0 for s in samples
    )

    lines = []
    for position, sample in enumerate(samples):
        tokens = [_format_real(float(sample.label))]
        for index in np.flatnonzero(sample.features):
            tokens.append(f"{index + 1}:{_format_real(float(sample.features[index]))}")
        if pad_first and position == 0:
            tokens.append(f"{dimension}:0")
        lines.append(" ".join(tokens))
    return "".join(f"{line}\n" for line in lines).encode("utf-8")


def positive_rule(positive_label: Optional[float] = None) -> LabelRule:
    """Predicate marking the positive class: label == positive_label, else label > 0."""
    if positive_label is None:
        return lambda label: label > 0
    return lambda label: label == positive_label


def binarize(samples: List[Sample], positive: LabelRule) -> List[Sample]:
    """Map labels to +1/-1 with the given predicate, keeping every sample."""
    return [
        Sample(features=s.features, label=1.0 if positive(s.label) else -1.0) for s in samples
    ]


def binarize_and_subsample(
    samples: List[Sample], positive: LabelRule, per_class: int, seed: int
) -> List[Sample]:
    """
    Select per_class positives and per_class negatives, relabelled to +1/-1.

    Selection is a deterministic function of seed and the original order is
    kept among the selected samples.

    Raises:
        DatasetError: If either class has fewer than per_class samples
    """
    if per_class < 0:
        raise DatasetError(f"per_class must be non-negative, got {per_class}")

    positives = [i for i, s in enumerate(samples) if positive(s.label)]
    negatives = [i for i, s in enumerate(samples) if not positive(s.label)]
    if len(positives) < per_class or len(negatives) < per_class:
        raise DatasetError(
            f"need {per_class} samples per class, have {len(positives)} positive "
            f"and {len(negatives)} negative"
        )

    chosen = []
    for class_code, members in ((0, positives), (1, negatives)):
        rng = np.random.default_rng([seed, int(Purpose.DATA), class_code])
        picks = rng.choice(len(members), size=per_class, replace=False)
        chosen.extend(members[k] for k in picks)

    return binarize([samples[i] for i in sorted(chosen)], positive)


def partition(
    samples: List[Sample], M: int, mode: PartitionMode, seed: int = 0
) -> Partition:
    """
    Split sample indices into M equal shards.

    label_sorted stable-sorts by label before slicing; iid_shuffle applies a
    seeded permutation. When M does not divide N the tail is dropped.

    Raises:
        DatasetError: If M is zero or exceeds the sample count
    """
    total = len(samples)
    if M < 1:
        raise DatasetError("number of clients must be positive")
    if M > total:
        raise DatasetError(f"cannot split {total} samples across {M} clients")

    if mode == PartitionMode.LABEL_SORTED:
        labels = np.array([s.label for s in samples], dtype=np.float64)
        order = np.argsort(labels, kind="stable")
    else:
        rng = np.random.default_rng([seed, int(Purpose.DATA), 2])
        order = rng.permutation(total)

    shard_size = total // M
    dropped = total - shard_size * M
    if dropped:
        logger.warning(f"Dropping {dropped} trailing samples so that {M} clients get {shard_size} each")

    shards = [order[k * shard_size : (k + 1) * shard_size].tolist() for k in range(M)]
    return Partition(shards=shards, mode=mode, dropped=dropped)


def dataset_stats(samples: List[Sample], parts: Optional[Partition] = None) -> DatasetStats:
    """Sample count, dimension, class balance and shard sizes."""
    counts: dict = {}
    for sample in samples:
        key = _format_real(float(sample.label))
        counts[key] = counts.get(key, 0) + 1
    return DatasetStats(
        num_samples=len(samples),
        num_features=samples[0].features.shape[0] if samples else 0,
        class_counts=dict(sorted(counts.items())),
        shard_sizes=parts.shard_sizes if parts else [],
        dropped=parts.dropped if parts else 0,
    )
