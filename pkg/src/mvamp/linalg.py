"""Dense matrices and vectors over a prime field.

Entries are stored row-major as int64 canonical residues. Indexing is
0-based everywhere. Shapes are validated eagerly so downstream oracle
compositions can assume well-formed operands.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .field import FieldElement, PrimeField


def _canonical_values(field: PrimeField, values, expect_ndim: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != expect_ndim:
        raise ValueError(f"expected {expect_ndim}-dimensional values, got shape {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() >= field.modulus):
        raise ValueError(f"entries out of range for modulus {field.modulus}")
    return arr.copy()


class FpVector:
    """A fixed-length vector of field residues."""

    __slots__ = ("field", "values")

    def __init__(self, field: PrimeField, values):
        self.field = field
        self.values = _canonical_values(field, values, 1)

    @classmethod
    def _trusted(cls, field: PrimeField, values: np.ndarray) -> "FpVector":
        # internal fast path: caller guarantees int64 residues it owns
        self = cls.__new__(cls)
        self.field = field
        self.values = values
        return self

    @classmethod
    def from_elements(cls, elements: Iterable[FieldElement]) -> "FpVector":
        elems = list(elements)
        if not elems:
            raise ValueError("vector needs at least one entry")
        field = elems[0].field
        for e in elems:
            if e.field != field:
                raise ValueError("mixed fields in vector entries")
        return cls(field, [e.value for e in elems])

    @classmethod
    def zeros(cls, field: PrimeField, n: int) -> "FpVector":
        if n <= 0:
            raise ValueError(f"vector length must be positive, got {n}")
        return cls(field, np.zeros(n, dtype=np.int64))

    @property
    def length(self) -> int:
        return self.values.shape[0]

    def entry(self, i: int) -> FieldElement:
        if not 0 <= i < self.length:
            raise IndexError(f"index {i} out of range for length {self.length}")
        return FieldElement(int(self.values[i]), self.field)

    def to_list(self) -> list[int]:
        return [int(x) for x in self.values]

    def _check_same_shape(self, other: "FpVector"):
        if not isinstance(other, FpVector):
            raise TypeError(f"expected FpVector, got {type(other).__name__}")
        if other.field != self.field:
            raise ValueError("field mismatch between vectors")
        if other.length != self.length:
            raise ValueError(f"length mismatch: {self.length} vs {other.length}")

    def __add__(self, other: "FpVector") -> "FpVector":
        self._check_same_shape(other)
        return FpVector(self.field, (self.values + other.values) % self.field.modulus)

    def __sub__(self, other: "FpVector") -> "FpVector":
        self._check_same_shape(other)
        return FpVector(self.field, (self.values - other.values) % self.field.modulus)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FpVector)
            and other.field == self.field
            and other.length == self.length
            and bool(np.array_equal(other.values, self.values))
        )

    def __hash__(self):
        return hash((self.field.modulus, self.values.tobytes()))

    def __repr__(self) -> str:
        return f"FpVector(mod {self.field.modulus}, {self.to_list()})"


class FpMatrix:
    """A dense rows-by-cols matrix of field residues."""

    __slots__ = ("field", "values")

    def __init__(self, field: PrimeField, values):
        self.field = field
        self.values = _canonical_values(field, values, 2)
        if self.values.shape[0] == 0 or self.values.shape[1] == 0:
            raise ValueError("matrix dimensions must be positive")

    @classmethod
    def _trusted(cls, field: PrimeField, values: np.ndarray) -> "FpMatrix":
        # internal fast path: caller guarantees int64 residues it owns
        self = cls.__new__(cls)
        self.field = field
        self.values = values
        return self

    @classmethod
    def from_rows(cls, field: PrimeField, rows: Iterable[Iterable[int]]) -> "FpMatrix":
        data = [[int(x) % field.modulus for x in row] for row in rows]
        return cls(field, data)

    @classmethod
    def zeros(cls, field: PrimeField, rows: int, cols: int) -> "FpMatrix":
        if rows <= 0 or cols <= 0:
            raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
        return cls(field, np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, field: PrimeField, n: int) -> "FpMatrix":
        if n <= 0:
            raise ValueError(f"matrix dimension must be positive, got {n}")
        return cls(field, np.eye(n, dtype=np.int64) % field.modulus)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def entry(self, i: int, j: int) -> FieldElement:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"index ({i},{j}) out of range for shape {self.rows}x{self.cols}")
        return FieldElement(int(self.values[i, j]), self.field)

    def to_lists(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self.values]

    def _check_same_shape(self, other: "FpMatrix"):
        if not isinstance(other, FpMatrix):
            raise TypeError(f"expected FpMatrix, got {type(other).__name__}")
        if other.field != self.field:
            raise ValueError("field mismatch between matrices")
        if (other.rows, other.cols) != (self.rows, self.cols):
            raise ValueError("shape mismatch between matrices")

    def __add__(self, other: "FpMatrix") -> "FpMatrix":
        self._check_same_shape(other)
        return FpMatrix(self.field, (self.values + other.values) % self.field.modulus)

    def __sub__(self, other: "FpMatrix") -> "FpMatrix":
        self._check_same_shape(other)
        return FpMatrix(self.field, (self.values - other.values) % self.field.modulus)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FpMatrix)
            and other.field == self.field
            and other.values.shape == self.values.shape
            and bool(np.array_equal(other.values, self.values))
        )

    def __hash__(self):
        return hash((self.field.modulus, self.values.shape, self.values.tobytes()))

    def __repr__(self) -> str:
        return f"FpMatrix(mod {self.field.modulus}, shape {self.rows}x{self.cols})"


# ---------------------------------------------------------------------------
# arithmetic on raw value arrays
# ---------------------------------------------------------------------------

# int64 products stay exact while terms * (p-1)^2 < 2^63; beyond that fall
# back to Python big ints.
_INT64_LIMIT = 2**63


def _fits_int64(n_terms: int, modulus: int) -> bool:
    return n_terms * (modulus - 1) ** 2 < _INT64_LIMIT


def matvec_values(m_vals: np.ndarray, v_vals: np.ndarray, modulus: int) -> np.ndarray:
    """Exact (M @ v) mod p on raw int64 arrays."""
    rows, cols = m_vals.shape
    if _fits_int64(cols, modulus):
        return (m_vals @ v_vals) % modulus
    out = np.empty(rows, dtype=np.int64)
    vv = [int(x) for x in v_vals]
    for i in range(rows):
        out[i] = sum(int(a) * b for a, b in zip(m_vals[i], vv)) % modulus
    return out


def vecmat_values(r_vals: np.ndarray, m_vals: np.ndarray, modulus: int) -> np.ndarray:
    """Exact (r @ M) mod p on raw int64 arrays."""
    rows, cols = m_vals.shape
    if _fits_int64(rows, modulus):
        return (r_vals @ m_vals) % modulus
    rr = [int(x) for x in r_vals]
    out = np.empty(cols, dtype=np.int64)
    for j in range(cols):
        out[j] = sum(a * int(b) for a, b in zip(rr, m_vals[:, j])) % modulus
    return out


def dot_values(a_vals: np.ndarray, b_vals: np.ndarray, modulus: int) -> int:
    """Exact (a . b) mod p on raw int64 arrays."""
    if _fits_int64(a_vals.shape[0], modulus):
        return int((a_vals @ b_vals) % modulus)
    return sum(int(a) * int(b) for a, b in zip(a_vals, b_vals)) % modulus


def matvec(matrix: FpMatrix, vector: FpVector) -> FpVector:
    """Compute the product M v over the common field."""
    if matrix.field != vector.field:
        raise ValueError("field mismatch between matrix and vector")
    if matrix.cols != vector.length:
        raise ValueError(
            f"dimension mismatch: matrix is {matrix.rows}x{matrix.cols}, "
            f"vector has length {vector.length}"
        )
    return FpVector(matrix.field, matvec_values(matrix.values, vector.values, matrix.field.modulus))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def random_matrix(rows: int, cols: int, field: PrimeField, rng: np.random.Generator) -> FpMatrix:
    if rows <= 0 or cols <= 0:
        raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
    return FpMatrix(field, rng.integers(0, field.modulus, size=(rows, cols), dtype=np.int64))


def random_vector(n: int, field: PrimeField, rng: np.random.Generator) -> FpVector:
    if n <= 0:
        raise ValueError(f"vector length must be positive, got {n}")
    return FpVector(field, rng.integers(0, field.modulus, size=n, dtype=np.int64))


# ---------------------------------------------------------------------------
# block structure
# ---------------------------------------------------------------------------


def block(matrix: FpMatrix, i: int, j: int, d: int) -> FpMatrix:
    """Return the (i, j)-th d-by-d block of a matrix tiled into d-blocks."""
    if d <= 0:
        raise ValueError(f"block size must be positive, got {d}")
    if matrix.rows % d != 0 or matrix.cols % d != 0:
        raise ValueError(
            f"block size {d} does not divide matrix shape {matrix.rows}x{matrix.cols}"
        )
    if not (0 <= i < matrix.rows // d and 0 <= j < matrix.cols // d):
        raise IndexError(f"block index ({i},{j}) out of range")
    return FpMatrix(matrix.field, matrix.values[i * d : (i + 1) * d, j * d : (j + 1) * d])


def pad_to_multiple(matrix: FpMatrix, vector: FpVector, k: int) -> tuple[FpMatrix, FpVector, int]:
    """Embed a square system into the next size divisible by k.

    The matrix lands in the top-left corner; padded diagonal entries are 1
    and everything else in the border is 0, so the padded product agrees
    with the original on the first n coordinates and is 0 beyond them.
    Returns (padded matrix, padded vector, original n).
    """
    if k <= 0:
        raise ValueError(f"divisor must be positive, got {k}")
    if matrix.rows != matrix.cols:
        raise ValueError(f"padding expects a square matrix, got {matrix.rows}x{matrix.cols}")
    if vector.length != matrix.cols:
        raise ValueError("vector length does not match matrix dimension")
    if matrix.field != vector.field:
        raise ValueError("field mismatch between matrix and vector")
    n = matrix.rows
    n_padded = ((n + k - 1) // k) * k
    if n_padded == n:
        return matrix, vector, n
    field = matrix.field
    m_vals = np.zeros((n_padded, n_padded), dtype=np.int64)
    m_vals[:n, :n] = matrix.values
    for t in range(n, n_padded):
        m_vals[t, t] = 1 % field.modulus
    v_vals = np.zeros(n_padded, dtype=np.int64)
    v_vals[:n] = vector.values
    return FpMatrix(field, m_vals), FpVector(field, v_vals), n


# ---------------------------------------------------------------------------
# exhaustive enumeration (small domains only)
# ---------------------------------------------------------------------------


def count_vectors(field: PrimeField, n: int) -> int:
    return field.modulus**n


def count_matrices(field: PrimeField, rows: int, cols: int) -> int:
    return field.modulus ** (rows * cols)


def vector_by_index(field: PrimeField, n: int, index: int) -> FpVector:
    """Decode the index-th vector in lexicographic order (entry 0 most significant)."""
    p = field.modulus
    if not 0 <= index < p**n:
        raise IndexError(f"vector index {index} out of range")
    vals = np.empty(n, dtype=np.int64)
    for t in range(n - 1, -1, -1):
        vals[t] = index % p
        index //= p
    return FpVector(field, vals)


def matrix_by_index(field: PrimeField, rows: int, cols: int, index: int) -> FpMatrix:
    """Decode the index-th rows-by-cols matrix in row-major lexicographic order."""
    p = field.modulus
    if not 0 <= index < p ** (rows * cols):
        raise IndexError(f"matrix index {index} out of range")
    vals = np.empty(rows * cols, dtype=np.int64)
    for t in range(rows * cols - 1, -1, -1):
        vals[t] = index % p
        index //= p
    return FpMatrix(field, vals.reshape(rows, cols))


def enumerate_vectors(field: PrimeField, n: int):
    for idx in range(count_vectors(field, n)):
        yield vector_by_index(field, n, idx)


def enumerate_matrices(field: PrimeField, rows: int, cols: int):
    for idx in range(count_matrices(field, rows, cols)):
        yield matrix_by_index(field, rows, cols, idx)
