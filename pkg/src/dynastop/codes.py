"""Stimulus sequence toolbox: m-sequences, Gold codes, flash modulation,
event decomposition, and structure matrices for reconvolution decoding.

Binary sequences are numpy uint8 arrays of 0/1 bits. A codebook stacks
equal-length sequences row-wise with shape (n_codes, n_bits).
"""

import math
from dataclasses import dataclass

import numpy as np

SHORT = "short"
LONG = "long"
EVENT_KINDS = (SHORT, LONG)

# Classic preferred pairs per register degree. Masks include both the
# x^degree term and the constant term, LSB = constant: x^6 + x + 1 -> 0b1000011.
PREFERRED_PAIRS = {
    5: (0b100101, 0b111101),
    6: (0b1000011, 0b1100111),
    7: (0b10001001, 0b10001111),
}


@dataclass(frozen=True)
class Codebook:
    """A set of equal-length binary stimulus sequences.

    Attributes
    ----------
    codes: np.ndarray
        Binary matrix of shape (n_codes, n_bits), dtype uint8.
    rate_hz: float
        Presentation rate of the stored bits in Hz.
    """

    codes: np.ndarray
    rate_hz: float

    @property
    def n_codes(self):
        return self.codes.shape[0]

    @property
    def n_bits(self):
        return self.codes.shape[1]


@dataclass(frozen=True)
class Event:
    """A single flash: kind is "short" (one bit) or "long" (two bits)."""

    kind: str
    onset: int


@dataclass(frozen=True)
class EventStream:
    """Flash events extracted from one modulated sequence of source_length bits."""

    events: tuple
    source_length: int


def make_m_sequence(poly, seed=1):
    """Generate a maximal-length sequence from a linear feedback shift register.

    Parameters
    ----------
    poly: int
        Primitive polynomial as a bitmask including the x^degree term and the
        constant term, e.g. x^3 + x + 1 -> 0b1011. Degree must be in [2, 16].
    seed: int (default: 1)
        Nonzero initial register state; bits are emitted LSB first.

    Returns
    -------
    code: np.ndarray
        Binary vector of length 2^degree - 1, dtype uint8.

    Raises
    ------
    ValueError
        If the polynomial is out of range or not primitive (the register does
        not traverse the full 2^degree - 1 cycle from the given seed).
    """
    degree = int(poly).bit_length() - 1
    if not 2 <= degree <= 16:
        raise ValueError(f"polynomial degree {degree} outside [2, 16]")
    seed = int(seed)
    if seed == 0:
        raise ValueError("seed register state must be nonzero")
    if not 0 < seed < (1 << degree):
        raise ValueError(f"seed 0x{seed:x} does not fit a degree-{degree} register")

    period = (1 << degree) - 1
    taps = poly & ~(1 << degree)
    code = np.empty(period, dtype=np.uint8)
    state = seed
    for i in range(period):
        code[i] = state & 1
        feedback = (state & taps).bit_count() & 1
        state = (state >> 1) | (feedback << (degree - 1))
        if state == seed and i + 1 < period:
            raise ValueError(
                f"polynomial 0b{poly:b} is not primitive: register period "
                f"{i + 1} < {period}"
            )
    if state != seed:
        raise ValueError(f"polynomial 0b{poly:b} is not primitive: register cycle broken")
    return code


def periodic_crosscorrelation(code_a, code_b):
    """Periodic cross-correlation of two binary codes over all cyclic shifts.

    Codes are mapped to the +-1 alphabet (0 -> +1, 1 -> -1) and correlated
    circularly, so values are integers in [-n_bits, n_bits].

    Returns
    -------
    corr: np.ndarray
        Integer vector of length n_bits; entry k is the correlation of code_a
        with code_b rolled right by k bits (numpy.roll convention).
    """
    a = 1.0 - 2.0 * np.asarray(code_a, dtype=float)
    b = 1.0 - 2.0 * np.asarray(code_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("codes must be 1-D and of equal length")
    corr = np.fft.ifft(np.fft.fft(a) * np.conj(np.fft.fft(b))).real
    return np.rint(corr).astype(np.int64)


def _gold_value_set(degree):
    # Three-valued spectrum bound for preferred pairs: {-1, -t, t-2}.
    if degree % 2 == 0:
        t = 2 ** ((degree + 2) // 2) + 1
    else:
        t = 2 ** ((degree + 1) // 2) + 1
    return {-1, -t, t - 2}


def make_gold_codes(poly_a=0b1000011, poly_b=0b1100111, seed_a=1, seed_b=1):
    """Generate the full Gold code family from a preferred pair of m-sequences.

    The family holds the two base sequences plus the XOR of the first with all
    cyclic shifts of the second: 2^degree + 1 codes of 2^degree - 1 bits.

    Parameters
    ----------
    poly_a, poly_b: int (default: the degree-6 pair x^6+x+1, x^6+x^5+x^2+x+1)
        Primitive polynomial masks of equal degree forming a preferred pair.
    seed_a, seed_b: int (default: 1)
        Initial register states of the two shift registers.

    Returns
    -------
    codes: np.ndarray
        Binary matrix of shape (2^degree + 1, 2^degree - 1), dtype uint8.

    Raises
    ------
    ValueError
        If the polynomials differ in degree, are identical, are not primitive,
        or do not form a preferred pair (cross-correlation not three-valued).
    """
    if poly_a == poly_b:
        raise ValueError("degenerate pair: the two polynomials are identical")
    degree_a = int(poly_a).bit_length() - 1
    degree_b = int(poly_b).bit_length() - 1
    if degree_a != degree_b:
        raise ValueError(f"polynomial degrees differ: {degree_a} != {degree_b}")

    base_a = make_m_sequence(poly_a, seed_a)
    base_b = make_m_sequence(poly_b, seed_b)
    allowed = _gold_value_set(degree_a)
    observed = set(periodic_crosscorrelation(base_a, base_b).tolist())
    if not observed <= allowed:
        raise ValueError(
            f"polynomials 0b{poly_a:b}, 0b{poly_b:b} are not a preferred pair: "
            f"cross-correlation values {sorted(observed)} exceed {sorted(allowed)}"
        )

    period = base_a.size
    codes = np.empty((period + 2, period), dtype=np.uint8)
    codes[0] = base_a
    codes[1] = base_b
    for k in range(period):
        codes[2 + k] = base_a ^ np.roll(base_b, -k)
    return codes


def modulate(codes):
    """Modulate codes to two flash durations by xoring the 2x-upsampled bits
    with a double-rate clock (1, 0, 1, 0, ...).

    Every run of ones in the output spans one or two bits, i.e. a short or a
    long flash. The input is recoverable as the odd-indexed output bits.

    Parameters
    ----------
    codes: np.ndarray
        Binary array; modulation applies along the last axis.

    Returns
    -------
    modulated: np.ndarray
        Binary array with the last axis doubled, dtype uint8.
    """
    bits = np.asarray(codes, dtype=np.uint8)
    up = np.repeat(bits, 2, axis=-1)
    clock = np.zeros(up.shape[-1], dtype=np.uint8)
    clock[::2] = 1
    return up ^ clock


def decompose_events(code):
    """Split a modulated code into short/long flash events.

    Each maximal run of ones becomes one event: a 1-bit run is a short flash,
    a 2-bit run a long flash. Runs longer than two bits are rejected because
    they cannot come out of :func:`modulate`.

    Returns
    -------
    stream: EventStream
        Events with onsets in bit units, strictly increasing.
    """
    bits = np.asarray(code, dtype=np.uint8).ravel()
    padded = np.concatenate(([0], bits, [0]))
    edges = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    events = []
    for start, end in zip(starts, ends):
        length = end - start
        if length > 2:
            raise ValueError(
                f"run of {length} ones at bit {start}: not a two-duration modulated code"
            )
        events.append(Event(SHORT if length == 1 else LONG, int(start)))
    return EventStream(tuple(events), int(bits.size))


def tile_events(stream, reps):
    """Repeat an event stream end to end, as in cyclic stimulus presentation."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    events = tuple(
        Event(ev.kind, ev.onset + cycle * stream.source_length)
        for cycle in range(reps)
        for ev in stream.events
    )
    return EventStream(events, stream.source_length * reps)


def structure_matrix(stream, fs, rate_hz, n_samples, response_samples):
    """Build the binary structure matrix placing event responses on a sample grid.

    Row blocks of response_samples rows correspond to the short and the long
    event kind in that order. An event of kind k at onset sample s sets entries
    (k * response_samples + j, s + j) for j < response_samples, truncated at the
    matrix edge. Onset samples are computed as round-half-up of
    onset_bit * fs / rate_hz.

    Parameters
    ----------
    stream: EventStream
        Flash events of one stimulus sequence.
    fs: float
        Sampling rate of the EEG in Hz.
    rate_hz: float
        Presentation rate of the sequence bits in Hz.
    n_samples: int
        Number of columns (trial samples).
    response_samples: int
        Length of the per-event response window in samples.

    Returns
    -------
    matrix: np.ndarray
        Float matrix of shape (2 * response_samples, n_samples) with 0/1 entries.
    """
    n_samples = int(n_samples)
    response_samples = int(response_samples)
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if response_samples < 1 or response_samples > n_samples:
        raise ValueError("response_samples must be in [1, n_samples]")

    matrix = np.zeros((2 * response_samples, n_samples))
    for ev in stream.events:
        if ev.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {ev.kind!r}")
        onset = int(math.floor(ev.onset * fs / rate_hz + 0.5))
        if onset >= n_samples:
            continue
        span = min(response_samples, n_samples - onset)
        rows = EVENT_KINDS.index(ev.kind) * response_samples + np.arange(span)
        matrix[rows, onset + np.arange(span)] = 1.0
    return matrix


def structure_matrices(codes, fs, rate_hz, n_samples, response_samples):
    """Structure matrices for every row of a modulated codebook.

    Sequences are tiled cyclically when n_samples extends past one code cycle.

    Returns
    -------
    matrices: list of np.ndarray
        One (2 * response_samples, n_samples) matrix per code.
    """
    codes = np.atleast_2d(np.asarray(codes, dtype=np.uint8))
    bits_needed = int(math.ceil(n_samples * rate_hz / fs))
    matrices = []
    for code in codes:
        stream = decompose_events(code)
        reps = max(1, int(math.ceil(bits_needed / stream.source_length)))
        if reps > 1:
            stream = tile_events(stream, reps)
        matrices.append(structure_matrix(stream, fs, rate_hz, n_samples, response_samples))
    return matrices


def select_subset(codes, templates, k):
    """Greedily pick k codes whose template responses correlate least.

    Repeatedly drops one member of the currently worst-correlated template
    pair (the member whose remaining correlations are worse) until k codes
    survive; the maximum absolute pairwise correlation never increases.

    Parameters
    ----------
    codes: np.ndarray
        Codebook rows, shape (n_codes, n_bits).
    templates: np.ndarray
        Per-code template responses, shape (n_codes, n_samples).
    k: int
        Number of codes to keep, 2 <= k <= n_codes.

    Returns
    -------
    kept: np.ndarray
        Sorted indices of the retained codes, length k.
    """
    codes = np.asarray(codes)
    templates = np.asarray(templates, dtype=float)
    n = codes.shape[0]
    if templates.shape[0] != n:
        raise ValueError("one template per code required")
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k = {k} exceeds the {n} available codes")

    corr = np.corrcoef(templates)
    corr = np.abs(np.nan_to_num(corr, nan=0.0))
    np.fill_diagonal(corr, 0.0)

    alive = list(range(n))
    while len(alive) > k:
        sub = corr[np.ix_(alive, alive)]
        flat = int(np.argmax(sub))
        i, j = divmod(flat, len(alive))
        first, second = alive[i], alive[j]
        rest = [m for m in alive if m != first and m != second]
        # Drop the pair member that also correlates worst with the rest.
        if corr[first, rest].max() >= corr[second, rest].max():
            alive.remove(first)
        else:
            alive.remove(second)
    return np.array(alive, dtype=int)


def write_codebook(path, codes, rate_hz=None):
    """Write a codebook as text: one code per line of '0'/'1' characters,
    LF-terminated, with an optional leading "# rate_hz=<int>" header."""
    codes = np.atleast_2d(np.asarray(codes, dtype=np.uint8))
    lines = []
    if rate_hz is not None:
        lines.append(f"# rate_hz={int(rate_hz)}")
    for code in codes:
        lines.append("".join("1" if b else "0" for b in code))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_codebook(path):
    """Read a codebook text file written by :func:`write_codebook`.

    Returns
    -------
    codebook: Codebook
        Parsed codes; rate_hz falls back to 120 when no header is present.
    """
    rate_hz = 120.0
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                if key.strip() == "rate_hz":
                    rate_hz = float(value)
                continue
            if set(line) - {"0", "1"}:
                raise ValueError(f"{path}:{lineno}: invalid characters in code line")
            rows.append(np.frombuffer(line.encode(), dtype=np.uint8) - ord("0"))
    if len(rows) < 2:
        raise ValueError(f"{path}: a codebook needs at least two codes")
    lengths = {row.size for row in rows}
    if len(lengths) != 1:
        raise ValueError(f"{path}: code lengths differ: {sorted(lengths)}")
    codes = np.vstack(rows)
    if np.unique(codes, axis=0).shape[0] != codes.shape[0]:
        raise ValueError(f"{path}: duplicate codes in codebook")
    return Codebook(codes=codes, rate_hz=rate_hz)
