"""CTC emission matrices and their character alphabets.

An emission matrix is the T x C grid of per-frame log-probabilities
(natural log) over a character alphabet that includes the CTC blank.
Matrices are immutable after load and safe for concurrent reads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import EmissionsFormatError

BLANK_SYMBOL = "∅"  # shown as "∅" in files
SEPARATOR_SYMBOL = "|"

_MAGIC = b"CTCE"
_FORMAT_VERSION = 1

#: Tolerance on |sum(exp(row)) - 1| when loading a matrix.
ROW_SUM_TOLERANCE = 1e-4

#: Default frame duration when a text file omits it (50 Hz emission rate,
#: which makes the 75-frame lookahead window equal 1500 ms).
DEFAULT_FRAME_MS = 20


@dataclass(frozen=True)
class CharAlphabet:
    """Ordered character set of an acoustic model, including blank.

    Non-special symbols must be lowercase ASCII letters; the blank and the
    word separator are explicit, distinct entries.
    """

    symbols: tuple
    blank_index: int
    separator_index: int

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(set(symbols)) != len(symbols):
            raise EmissionsFormatError("alphabet symbols are not unique")
        n = len(symbols)
        if not (0 <= self.blank_index < n and 0 <= self.separator_index < n):
            raise EmissionsFormatError("blank/separator index out of range")
        if self.blank_index == self.separator_index:
            raise EmissionsFormatError("blank and separator must be distinct")
        for i, s in enumerate(symbols):
            if i in (self.blank_index, self.separator_index):
                continue
            if not ("a" <= s <= "z"):
                raise EmissionsFormatError(
                    f"alphabet symbol {s!r} is not a lowercase ASCII letter"
                )

    def __len__(self):
        return len(self.symbols)

    def index_of(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise EmissionsFormatError(f"symbol {symbol!r} not in alphabet") from None

    def to_string(self) -> str:
        """Serialize to the file representation (blank as ∅, separator as |)."""
        return "".join(self.symbols)

    @classmethod
    def from_string(cls, text: str) -> "CharAlphabet":
        symbols = tuple(text)
        if BLANK_SYMBOL not in symbols or SEPARATOR_SYMBOL not in symbols:
            raise EmissionsFormatError(
                "alphabet string must contain the blank (∅) and separator (|)"
            )
        return cls(
            symbols=symbols,
            blank_index=symbols.index(BLANK_SYMBOL),
            separator_index=symbols.index(SEPARATOR_SYMBOL),
        )

    @classmethod
    def default(cls) -> "CharAlphabet":
        """a-z, then separator, then blank."""
        letters = tuple("abcdefghijklmnopqrstuvwxyz")
        return cls.from_string("".join(letters) + SEPARATOR_SYMBOL + BLANK_SYMBOL)


@dataclass(frozen=True)
class EmissionMatrix:
    """T x C frame-wise log-probabilities over a character alphabet."""

    frames: np.ndarray
    frame_duration_ms: int
    alphabet: CharAlphabet

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float32)
        if frames.ndim != 2:
            raise EmissionsFormatError("emission matrix must be 2-dimensional")
        if frames.shape[0] < 1:
            raise EmissionsFormatError("emission matrix needs at least one frame")
        if frames.shape[1] != len(self.alphabet):
            raise EmissionsFormatError(
                f"matrix has {frames.shape[1]} columns but alphabet has "
                f"{len(self.alphabet)} symbols"
            )
        if np.any(frames > 0):
            raise EmissionsFormatError("log-probabilities must be <= 0")
        frames = frames.copy() if frames.flags.writeable else frames
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_symbols(self) -> int:
        return self.frames.shape[1]

    @property
    def duration_ms(self) -> int:
        return self.num_frames * self.frame_duration_ms

    def slice(self, start: int, end: int) -> "EmissionMatrix":
        """View over rows [start, end), sharing the alphabet (no copy)."""
        if not (0 <= start < end <= self.num_frames):
            raise EmissionsFormatError(
                f"invalid slice [{start}, {end}) for T={self.num_frames}"
            )
        view = self.frames[start:end]
        return EmissionMatrix(view, self.frame_duration_ms, self.alphabet)


def _validate_rows(probs_sum: np.ndarray, where: str) -> None:
    bad = np.abs(probs_sum - 1.0) > ROW_SUM_TOLERANCE
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise EmissionsFormatError(
            f"{where}: row {idx} exponentiates to {probs_sum[idx]:.6f}, "
            f"outside 1 +/- {ROW_SUM_TOLERANCE}"
        )


def load_emissions(path: Union[str, Path], format: str = "binary") -> EmissionMatrix:
    """Load and validate an emission matrix from disk.

    ``format`` is "binary" (CTCE container, log-probs) or "text"
    (whitespace rows of probabilities, converted to logs).
    """
    path = Path(path)
    if format == "binary":
        return _load_binary(path)
    if format == "text":
        return _load_text(path)
    raise EmissionsFormatError(f"unknown emissions format {format!r}")


def _load_binary(path: Path) -> EmissionMatrix:
    data = path.read_bytes()
    header = struct.Struct("<4sHIIH")
    if len(data) < header.size:
        raise EmissionsFormatError(f"{path}: truncated header")
    magic, version, t, c, frame_ms = header.unpack_from(data, 0)
    if magic != _MAGIC:
        raise EmissionsFormatError(f"{path}: bad magic bytes {magic!r}")
    if version != _FORMAT_VERSION:
        raise EmissionsFormatError(f"{path}: unsupported format version {version}")
    offset = header.size
    if len(data) < offset + 2:
        raise EmissionsFormatError(f"{path}: truncated alphabet length")
    (alpha_len,) = struct.unpack_from("<H", data, offset)
    offset += 2
    alpha_bytes = data[offset : offset + alpha_len]
    if len(alpha_bytes) != alpha_len:
        raise EmissionsFormatError(f"{path}: truncated alphabet")
    offset += alpha_len
    alphabet = CharAlphabet.from_string(alpha_bytes.decode("utf-8"))
    if c != len(alphabet):
        raise EmissionsFormatError(
            f"{path}: header says C={c} but alphabet has {len(alphabet)} symbols"
        )
    expected = t * c * 4
    payload = data[offset:]
    if len(payload) != expected:
        raise EmissionsFormatError(
            f"{path}: expected {expected} bytes of floats, found {len(payload)}"
        )
    frames = np.frombuffer(payload, dtype="<f4").reshape(t, c)
    _validate_rows(np.exp(frames.astype(np.float64)).sum(axis=1), str(path))
    return EmissionMatrix(frames, frame_ms, alphabet)


def _load_text(path: Path) -> EmissionMatrix:
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise EmissionsFormatError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) not in (3, 4):
        raise EmissionsFormatError(f"{path}: header must be 'T C frame_ms alphabet'")
    if len(head) == 3:
        t_str, c_str, alpha_str = head
        frame_ms = DEFAULT_FRAME_MS
    else:
        t_str, c_str, frame_str, alpha_str = head
        frame_ms = int(frame_str)
    t, c = int(t_str), int(c_str)
    alphabet = CharAlphabet.from_string(alpha_str)
    if c != len(alphabet):
        raise EmissionsFormatError(
            f"{path}: header says C={c} but alphabet has {len(alphabet)} symbols"
        )
    if len(lines) - 1 != t:
        raise EmissionsFormatError(
            f"{path}: header says T={t} but file has {len(lines) - 1} rows"
        )
    rows = []
    for i, line in enumerate(lines[1:]):
        vals = [float(v) for v in line.split()]
        if len(vals) != c:
            raise EmissionsFormatError(f"{path}: row {i} has {len(vals)} values, want {c}")
        rows.append(vals)
    probs = np.asarray(rows, dtype=np.float64)
    if np.any(probs < 0) or np.any(probs > 1):
        raise EmissionsFormatError(f"{path}: probabilities must lie in [0, 1]")
    _validate_rows(probs.sum(axis=1), str(path))
    with np.errstate(divide="ignore"):
        frames = np.log(probs).astype(np.float32)
    # log(0) = -inf violates the <= 0-but-finite storage; clamp to a sentinel.
    frames = np.maximum(frames, np.float32(-1e9))
    return EmissionMatrix(frames, frame_ms, alphabet)


def save_emissions(matrix: EmissionMatrix, path: Union[str, Path]) -> None:
    """Write a matrix in the binary CTCE container."""
    path = Path(path)
    alpha = matrix.alphabet.to_string().encode("utf-8")
    header = struct.pack(
        "<4sHIIH",
        _MAGIC,
        _FORMAT_VERSION,
        matrix.num_frames,
        matrix.num_symbols,
        matrix.frame_duration_ms,
    )
    body = matrix.frames.astype("<f4", copy=False).tobytes(order="C")
    path.write_bytes(header + struct.pack("<H", len(alpha)) + alpha + body)


def make_emissions(
    probs: Sequence[Sequence[float]],
    alphabet: CharAlphabet,
    frame_duration_ms: int = DEFAULT_FRAME_MS,
) -> EmissionMatrix:
    """Build a matrix from per-frame probability rows (validated, logged)."""
    probs = np.asarray(probs, dtype=np.float64)
    _validate_rows(probs.sum(axis=1), "make_emissions")
    with np.errstate(divide="ignore"):
        frames = np.log(probs).astype(np.float32)
    frames = np.maximum(frames, np.float32(-1e9))
    return EmissionMatrix(frames, frame_duration_ms, alphabet)
