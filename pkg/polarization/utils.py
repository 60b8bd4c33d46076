import hashlib
import math
from pathlib import Path
from typing import Union


def calculate_sha256(text: str) -> str:
    """
    Calculate the SHA-256 hash of a string.

    Args:
        text: The input string to hash

    Returns:
        The hexadecimal SHA-256 hash string
    """
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def file_sha256(path: Union[str, Path]) -> str:
    """
    Calculate the SHA-256 hash of a file's contents.

    Args:
        path: Path of the file to hash

    Returns:
        The hexadecimal SHA-256 hash string
    """
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def derive_seed(seed: int, stage: str) -> int:
    """
    Derive the seed of one experiment stage from the global seed.

    The stage name is hashed together with the seed so that stages draw
    independent random streams while staying reproducible.

    Args:
        seed: The global experiment seed
        stage: Stage name, e.g. 'graph', 'pool', 'walks'

    Returns:
        A non-negative 64-bit integer seed
    """
    digest = hashlib.sha256(f'{seed}:{stage}'.encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'big')


def round_half_up(value: float) -> int:
    """Round a non-negative real to the nearest integer, halves going up."""
    # 0.1 * 25 is 2.5000000000000004 in binary; clip the noise first
    return int(math.floor(round(value, 9) + 0.5))
