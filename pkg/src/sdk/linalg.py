"""Exact rational linear algebra shared by every engine module.

Dense work goes through `sympy.Matrix` with rational entries; elimination is delegated to
`DomainMatrix` over `QQ` (fraction-free internally). Sparse vectors are plain dicts from a
basis key to a `sympy.Rational`.
"""

from typing import Union, TypeVar
from fractions import Fraction
from collections.abc import Hashable, Mapping, Iterable, Sequence

from sympy import S, Matrix, Rational
from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

K = TypeVar("K", bound=Hashable)
Scalar = Union[int, Fraction, Rational]
Sparse = dict

ZERO = S.Zero
ONE = S.One


def rat(value: Union[Scalar, str]) -> Rational:
    """Parses an exact rational.

    Examples:
        >>> rat("3/6")
        1/2
        >>> rat(-2)
        -2
    """
    if isinstance(value, str):
        value = value.strip()
        if not value:
            raise ValueError("empty rational")
        if "." in value or "e" in value.lower():
            raise ValueError(f"rationals must be written as p/q, got {value!r}")
        return Rational(value)
    if isinstance(value, Fraction):
        return Rational(value.numerator, value.denominator)
    return Rational(value)


def fmt(value: Scalar) -> str:
    """Canonical text form: reduced fraction with a positive denominator.

    Examples:
        >>> fmt(rat("-4/6"))
        '-2/3'
        >>> fmt(rat(5))
        '5'
    """
    q = Rational(value)
    if q.q == 1:
        return str(q.p)
    return f"{q.p}/{q.q}"


def add_into(acc: dict, vec: Mapping, coeff: Scalar = 1) -> dict:
    """acc += coeff * vec, dropping cancelled entries."""
    if coeff == 0:
        return acc
    for key, value in vec.items():
        total = acc.get(key, ZERO) + coeff * value
        if total == 0:
            acc.pop(key, None)
        else:
            acc[key] = total
    return acc


def scaled(vec: Mapping, coeff: Scalar) -> dict:
    if coeff == 0:
        return {}
    return {key: coeff * value for key, value in vec.items() if value != 0}


def combine(*terms: tuple[Scalar, Mapping]) -> dict:
    out: dict = {}
    for coeff, vec in terms:
        add_into(out, vec, coeff)
    return out


def clean(vec: Mapping) -> dict:
    return {key: value for key, value in vec.items() if value != 0}


def zeros(rows: int, cols: int) -> Matrix:
    return Matrix.zeros(rows, cols)


def column(vec: Mapping[int, Scalar], dim: int) -> Matrix:
    out = zeros(dim, 1)
    for index, value in vec.items():
        out[index, 0] = value
    return out


def sparse_column(mat: Matrix, col: int = 0) -> dict[int, Rational]:
    return {row: mat[row, col] for row in range(mat.rows) if mat[row, col] != 0}


def from_columns(columns: Sequence[Mapping[int, Scalar]], dim: int) -> Matrix:
    out = zeros(dim, len(columns))
    for j, vec in enumerate(columns):
        for i, value in vec.items():
            out[i, j] = value
    return out


def hstack(*mats: Matrix, rows: int) -> Matrix:
    parts = [m for m in mats if m.cols > 0]
    if not parts:
        return zeros(rows, 0)
    return Matrix.hstack(*parts)


def is_zero(mat: Matrix) -> bool:
    return all(entry == 0 for entry in mat)


def rref(mat: Matrix) -> tuple[Matrix, tuple[int, ...]]:
    if mat.rows == 0 or mat.cols == 0:
        return mat.copy(), ()
    reduced, pivots = DomainMatrix.from_Matrix(mat).convert_to(QQ).rref()
    return reduced.to_Matrix(), tuple(pivots)


def rank(mat: Matrix) -> int:
    return len(rref(mat)[1])


def nullspace(mat: Matrix) -> Matrix:
    """Basis of the kernel as columns, read off the reduced row echelon form."""
    cols = mat.cols
    if mat.rows == 0:
        return Matrix.eye(cols)
    reduced, pivots = rref(mat)
    free = [j for j in range(cols) if j not in set(pivots)]
    basis = zeros(cols, len(free))
    for k, f in enumerate(free):
        basis[f, k] = 1
        for row, p in enumerate(pivots):
            basis[p, k] = -reduced[row, f]
    return basis


def column_basis(mat: Matrix) -> Matrix:
    """Linearly independent columns of `mat` spanning its column space (pivot columns)."""
    if mat.cols == 0:
        return mat.copy()
    _, pivots = rref(mat)
    return mat.extract(list(range(mat.rows)), list(pivots))


def extend_basis(sub: Matrix, candidates: Matrix) -> list[int]:
    """Indices of candidate columns completing the independent columns of `sub`."""
    joined = hstack(sub, candidates, rows=max(sub.rows, candidates.rows))
    _, pivots = rref(joined)
    return [p - sub.cols for p in pivots if p >= sub.cols]


def complement(sub: Matrix, dim: int) -> list[int]:
    """Standard basis indices spanning a complement of the column span of `sub`."""
    return extend_basis(column_basis(sub) if sub.cols else zeros(dim, 0), Matrix.eye(dim))


def solve(mat: Matrix, rhs: Matrix) -> Union[Matrix, None]:
    """A particular solution of mat * x = rhs, or None if inconsistent."""
    if mat.cols == 0:
        return zeros(0, rhs.cols) if is_zero(rhs) else None
    if rhs.cols != 1:
        parts = [solve(mat, rhs[:, j]) for j in range(rhs.cols)]
        if any(p is None for p in parts):
            return None
        return Matrix.hstack(*parts)
    reduced, pivots = rref(Matrix.hstack(mat, rhs))
    if mat.cols in pivots:
        return None
    x = zeros(mat.cols, 1)
    for row, p in enumerate(pivots):
        x[p, 0] = reduced[row, mat.cols]
    return x


def same_span(a: Matrix, b: Matrix) -> bool:
    ra, rb = rank(a), rank(b)
    if ra != rb:
        return False
    return rank(hstack(a, b, rows=max(a.rows, b.rows))) == ra


def contains(big: Matrix, small: Matrix) -> bool:
    if small.cols == 0:
        return True
    return rank(hstack(big, small, rows=small.rows)) == rank(big)


def sparse_matrix(
    rows: Sequence[K], cols: Sequence[K], image: Mapping[K, Mapping[K, Scalar]]
) -> Matrix:
    """Matrix of a sparse linear map given column-by-column on basis keys."""
    row_index = {key: i for i, key in enumerate(rows)}
    out = zeros(len(rows), len(cols))
    for j, key in enumerate(cols):
        for target, value in image.get(key, {}).items():
            out[row_index[target], j] += value
    return out


def keyed(vec: Matrix, keys: Sequence[K]) -> dict[K, Rational]:
    return {keys[i]: vec[i, 0] for i in range(vec.rows) if vec[i, 0] != 0}


def dense(vec: Mapping[K, Scalar], keys: Sequence[K]) -> Matrix:
    index = {key: i for i, key in enumerate(keys)}
    return column({index[k]: v for k, v in vec.items()}, len(keys))


def first_nonzero(items: Iterable[tuple[K, Mapping]]) -> Union[tuple[K, dict], None]:
    for key, vec in items:
        residue = clean(vec)
        if residue:
            return key, residue
    return None
