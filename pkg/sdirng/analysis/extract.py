from __future__ import annotations

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy.signal import fftconvolve
from scipy.stats import chisquare

from sdirng.core.config import EXTRACTOR_MARGIN_BITS
from sdirng.core.errors import CapacityError, InsufficientDataError, SettingRangeError, ShapeError
from sdirng.data.round_log import RoundLog
from sdirng.analysis.protocol import CertificationResult

logger = logging.getLogger(__name__)

_ROUNDING_SLACK = 0.25


def _as_bits(values, name: str) -> np.ndarray:
    bits = np.asarray(values)
    if bits.ndim != 1:
        raise ShapeError(f"{name} must be a flat bit array, got shape {bits.shape}")
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise SettingRangeError(f"{name} must contain only 0 and 1")
    return bits.astype(np.uint8)


@dataclass(frozen=True, eq=False)
class ExtractorConfig:
    input_length: int
    output_length: int
    seed_bits: np.ndarray

    def __post_init__(self) -> None:
        if self.input_length < 1 or self.output_length < 1:
            raise ShapeError("Extractor lengths must be positive")
        if self.output_length > self.input_length:
            raise ShapeError(
                f"Output length {self.output_length} exceeds input length {self.input_length}"
            )
        seed = _as_bits(self.seed_bits, "seed_bits")
        expected = self.input_length + self.output_length - 1
        if seed.size != expected:
            raise ShapeError(f"Toeplitz seed needs {expected} bits, got {seed.size}")
        seed.setflags(write=False)
        object.__setattr__(self, "seed_bits", seed)


def toeplitz_extract(raw, config: ExtractorConfig) -> np.ndarray:
    """Multiply ``raw`` by the seeded Toeplitz matrix over GF(2).

    T[i, j] = seed[j - i + m - 1], so output bit i is the correlation of the
    seed with the input at lag m - 1 - i.
    """
    bits = _as_bits(raw, "raw")
    if bits.size != config.input_length:
        raise ShapeError(f"Extractor expects {config.input_length} input bits, got {bits.size}")
    seed = config.seed_bits.astype(float)
    products = fftconvolve(seed, bits[::-1].astype(float), mode="valid")[::-1]
    counts = np.rint(products)
    residual = float(np.max(np.abs(products - counts))) if counts.size else 0.0
    if residual > _ROUNDING_SLACK:
        raise CapacityError(f"FFT rounding residual {residual:.3g} too large for exact GF(2) reduction")
    return (counts.astype(np.int64) % 2).astype(np.uint8)


def output_budget(certified_bits: float, security_margin: int = EXTRACTOR_MARGIN_BITS) -> int:
    budget = int(math.floor(certified_bits)) - security_margin
    if budget <= 0:
        raise CapacityError(
            f"{certified_bits:.6g} certified bits leave no output after a {security_margin}-bit margin"
        )
    return budget


def seed_bits_from_hex(seed_hex: str, length: int) -> np.ndarray:
    """Seed bits straight from the hex digits (MSB first), or a PCG64 expansion when too short."""
    text = seed_hex.strip().lower()
    if text.startswith("0x"):
        text = text[2:]
    if not text:
        raise SettingRangeError("Seed hex string is empty")
    try:
        digits = np.array([int(c, 16) for c in text], dtype=np.uint8)
    except ValueError as exc:
        raise SettingRangeError(f"Seed is not a hex string: {seed_hex!r}") from exc
    if length < 1:
        raise SettingRangeError(f"Seed length must be positive, got {length}")

    bits = ((digits[:, None] >> np.arange(3, -1, -1)) & 1).astype(np.uint8).ravel()
    if bits.size >= length:
        return bits[:length]
    logger.debug("expanding %d hex seed bits to %d with PCG64", bits.size, length)
    rng = np.random.Generator(np.random.PCG64(int(text, 16)))
    return rng.integers(0, 2, size=length, dtype=np.uint8)


def extract_from_log(
    log: RoundLog,
    result: CertificationResult,
    seed_hex: str,
    output_length: int | None = None,
    security_margin: int = EXTRACTOR_MARGIN_BITS,
) -> bytes:
    raw = log.generation_bits()
    if raw.size == 0:
        raise InsufficientDataError("Round log holds no generation rounds")
    if result.generation_rounds != raw.size:
        raise ShapeError(
            f"Certificate covers {result.generation_rounds} generation rounds, log holds {raw.size}"
        )
    budget = output_budget(result.certified_bits, security_margin)
    length = budget if output_length is None else output_length
    if not 1 <= length <= budget:
        raise CapacityError(f"Requested {length} output bits, budget is {budget}")
    config = ExtractorConfig(
        input_length=raw.size,
        output_length=length,
        seed_bits=seed_bits_from_hex(seed_hex, raw.size + length - 1),
    )
    bits = toeplitz_extract(raw, config)
    logger.debug("extracted %d bits from %d raw bits", length, raw.size)
    # The final byte is zero-padded when the length is not a multiple of 8.
    return np.packbits(bits).tobytes()


def byte_uniformity_pvalue(data: bytes) -> float:
    if not data:
        raise InsufficientDataError("No bytes to test")
    counts = np.bincount(np.frombuffer(data, dtype=np.uint8), minlength=256)
    return float(chisquare(counts).pvalue)
