"""
Plain-text sample files

Format: a header line '# dim=<d> count=<M> seed=<s>' followed by one
whitespace-separated row per sample. Floats are written in shortest
round-trip form, so write-then-read is bit-exact.
"""

import logging
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import SampleFileError
from targets.models import as_points

logger = logging.getLogger(__name__)

HEADER_RE = re.compile(r'^#\s*dim=(\S+)\s+count=(\S+)\s+seed=(\S+)\s*$')


@dataclass
class StoredSamples:
    samples: np.ndarray  # (count, dim)
    seed: Optional[int]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def count(self) -> int:
        return self.samples.shape[0]


def persist_samples(path: str, samples: np.ndarray, seed: Optional[int] = None):
    """Write samples with a self-describing header"""
    samples = as_points(samples)
    count, dim = samples.shape
    seed_text = str(int(seed)) if seed is not None else 'none'

    with open(path, 'w') as fh:
        fh.write(f"# dim={dim} count={count} seed={seed_text}\n")
        for row in samples:
            fh.write(' '.join(repr(float(v)) for v in row))
            fh.write('\n')

    logger.info(f"Wrote {count} samples (dim {dim}) to {path}")


def _header_int(path: str, value: str, field: str) -> int:
    try:
        parsed = int(value)
    except ValueError:
        raise SampleFileError(path, 1, field, f"expected an integer, got {value!r}")
    if parsed < 0 or (field == 'dim' and parsed < 1):
        raise SampleFileError(path, 1, field, f"out of range: {parsed}")
    return parsed


def load_samples(path: str, expected_dim: Optional[int] = None) -> StoredSamples:
    """Read a sample file, validating the header against the body"""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise SampleFileError(path, 0, 'file', str(e))

    if not lines:
        raise SampleFileError(path, 1, 'header', "empty file")

    match = HEADER_RE.match(lines[0])
    if not match:
        raise SampleFileError(path, 1, 'header', f"expected '# dim=<d> count=<M> seed=<s>', got {lines[0]!r}")

    dim = _header_int(path, match.group(1), 'dim')
    count = _header_int(path, match.group(2), 'count')
    seed = None if match.group(3) == 'none' else _header_int(path, match.group(3), 'seed')

    if expected_dim is not None and dim != expected_dim:
        raise SampleFileError(path, 1, 'dim', f"file has dim {dim}, expected {expected_dim}")

    body = [(i, line) for i, line in enumerate(lines[1:], start=2) if line.strip()]
    if len(body) != count:
        raise SampleFileError(path, 1, 'count', f"header says {count} rows, found {len(body)}")

    samples = np.empty((count, dim))
    for row, (lineno, line) in enumerate(body):
        fields = line.split()
        if len(fields) != dim:
            raise SampleFileError(path, lineno, 'row', f"expected {dim} values, got {len(fields)}")
        for col, text in enumerate(fields):
            try:
                samples[row, col] = float(text)
            except ValueError:
                raise SampleFileError(path, lineno, f'column {col + 1}', f"not a number: {text!r}")

    return StoredSamples(samples=samples, seed=seed)
