"""
Dense linear algebra for point tuples: determinants, wedge products,
orthogonal complements and uniform sampling on sub-spheres.

A tuple ``(x_1, …, x_d)`` is an array of shape ``(d, d)`` whose row ``i`` is
``x_i``. The determinant of the rows equals that of the columns, so the
column convention of the underlying identities carries over unchanged.
"""
from __future__ import annotations

from typing import TYPE_CHECKING, Union

import numpy as np

from ._errors import ContractViolation, DegenerateInputError
from ._random import RngState, as_generator
from ._validate import as_float_array

if TYPE_CHECKING:
    from . import Frame

__all__ = [
    "MAX_DIM",
    "det",
    "batch_det",
    "wedge",
    "batch_wedge",
    "signed_wedge_excluding",
    "batch_signed_wedge_excluding",
    "complement_basis",
    "sample_subsphere",
    "sample_subsphere_batch",
    "uniform_directions",
    "rotate_minus_quarter",
]

MAX_DIM = 8


def _check_dim(d: int) -> None:
    if not 2 <= d <= MAX_DIM:
        raise ContractViolation(f"Dimension must be between 2 and {MAX_DIM}, got {d}")


def _as_tuples(x: object, name: str = "tuple") -> np.ndarray:
    array = as_float_array(x, name)
    if array.ndim < 2 or array.shape[-1] != array.shape[-2]:
        raise ContractViolation(
            f"Expected {name} of d points in R^d, got shape {array.shape}"
        )
    _check_dim(array.shape[-1])
    return array


def det(columns: object) -> float:
    """
    Determinant of ``d`` points in R^d, by LU with partial pivoting.

    >>> det([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    1.0
    >>> det([[0, 1, 0], [1, 0, 0], [0, 0, 1]])
    -1.0
    """
    return float(np.linalg.det(_as_tuples(columns)))


def batch_det(tuples: object) -> np.ndarray:
    """
    Determinants of an ``(n, d, d)`` batch.
    """
    array = _as_tuples(tuples, "tuples")
    if array.shape[0] == 0:
        return np.zeros(0)
    return np.linalg.det(array)


def _wedge_signs(d: int) -> np.ndarray:
    # cofactor signs along the free last slot
    return (-1.0) ** (d - 1 + np.arange(d))


def batch_wedge(vectors: object) -> np.ndarray:
    """
    Wedge products of an ``(n, d-1, d)`` batch of vector families.
    """
    array = as_float_array(vectors, "vectors", ndim=3)
    n, k, d = array.shape
    _check_dim(d)
    if k != d - 1:
        raise ContractViolation(f"The wedge in R^{d} takes {d - 1} vectors, got {k}")
    if n == 0:
        return np.zeros((0, d))
    minors = np.stack([np.delete(array, j, axis=2) for j in range(d)], axis=1)
    return np.linalg.det(minors) * _wedge_signs(d)


def wedge(vectors: object) -> np.ndarray:
    """
    The vector ``w`` with ``det(v_1, …, v_{d-1}, x) = ⟨x, w⟩`` for every ``x``.

    >>> float(wedge([[1, 0, 0], [0, 1, 0]])[2])
    1.0
    """
    array = as_float_array(vectors, "vectors", ndim=2)
    return batch_wedge(array[None])[0]


def batch_signed_wedge_excluding(tuples: object, i: int) -> np.ndarray:
    array = _as_tuples(tuples, "tuples")
    if array.ndim != 3:
        raise ContractViolation(f"Expected a batch of tuples, got shape {array.shape}")
    d = array.shape[-1]
    if not 0 <= i < d:
        raise ContractViolation(f"Index must be in [0, {d}), got {i}")
    # moving x_i to the last slot takes d-1-i transpositions
    sign = (-1.0) ** (d - 1 - i)
    return sign * batch_wedge(np.delete(array, i, axis=1))


def signed_wedge_excluding(x: object, i: int) -> np.ndarray:
    """
    The signed wedge of all points but ``x_i``, in increasing order, with the
    sign chosen so that ``⟨x_i, result⟩ = det(x)``. ``i`` is 0-based.

    >>> float(signed_wedge_excluding(np.eye(3), 0)[0])
    1.0
    """
    array = _as_tuples(x)
    if array.ndim != 2:
        raise ContractViolation(f"Expected one tuple, got shape {array.shape}")
    return batch_signed_wedge_excluding(array[None], i)[0]


def _orthonormalize(vectors: np.ndarray) -> np.ndarray:
    """
    Gram–Schmidt with a second pass, raising on rank deficiency.
    """
    basis: list = []
    for v in vectors:
        scale = np.linalg.norm(v)
        u = v.copy()
        for _ in range(2):
            for b in basis:
                u -= np.dot(u, b) * b
        norm = np.linalg.norm(u)
        if scale == 0 or norm <= 1e-10 * scale:
            raise DegenerateInputError("Frame vectors are linearly dependent")
        basis.append(u / norm)
    return np.array(basis).reshape(len(basis), vectors.shape[1])


def complement_basis(frame: Frame) -> Frame:
    """
    Orthonormal basis of the orthogonal complement of ``frame``.

    The frame is orthonormalized first, then standard basis vectors are added
    greedily, each time the one with the largest residual after projection.
    """
    from . import Frame

    vectors = np.asarray(frame.vectors, dtype=float)
    k, d = vectors.shape
    basis = list(_orthonormalize(vectors))
    complement = []
    candidates = np.eye(d)
    for _ in range(d - k):
        residuals = candidates.copy()
        for _ in range(2):
            for b in basis:
                residuals -= np.outer(residuals @ b, b)
        norms = np.linalg.norm(residuals, axis=1)
        best = int(np.argmax(norms))
        u = residuals[best] / norms[best]
        basis.append(u)
        complement.append(u)
    return Frame(np.array(complement).reshape(d - k, d))


def sample_subsphere(
    frame: Frame, radius: float, rng: Union[np.random.Generator, RngState]
) -> np.ndarray:
    """
    A uniform point on the sphere of ``radius`` inside the orthogonal
    complement of ``frame``.
    """
    if not radius > 0:
        raise ContractViolation(f"Radius must be positive, got {radius}")
    complement = complement_basis(frame).vectors
    if complement.shape[0] == 0:
        raise DegenerateInputError("The frame spans the space, its complement is {0}")
    gen = as_generator(rng)
    while True:
        coefficients = gen.standard_normal(complement.shape[0])
        norm = np.linalg.norm(coefficients)
        if norm > 0:
            return radius * (coefficients / norm) @ complement


def sample_subsphere_batch(
    frames: np.ndarray, radii: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """
    One point per row on ``radii[j]·S^{d-1} ∩ frames[j]^⊥``.

    ``frames`` has shape ``(n, k, d)`` with orthonormal rows, ``k < d``.
    """
    n, k, d = frames.shape
    if k >= d:
        raise DegenerateInputError("The frames span the space, their complement is {0}")
    points = rng.standard_normal((n, d))
    for _ in range(2):
        points -= np.einsum("nk,nkd->nd", np.einsum("nkd,nd->nk", frames, points), frames)
    norms = np.linalg.norm(points, axis=1)
    # a Gaussian lands in the span of the frame with probability zero
    norms[norms == 0] = 1
    return points * (np.asarray(radii, dtype=float) / norms)[:, None]


def uniform_directions(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """
    ``n`` independent uniform unit vectors in R^d.
    """
    points = rng.standard_normal((n, d))
    norms = np.linalg.norm(points, axis=1)
    norms[norms == 0] = 1
    return points / norms[:, None]


def rotate_minus_quarter(y: np.ndarray) -> np.ndarray:
    """
    The rotation by ``-π/2`` in the plane, so that ``det(x, y) = ⟨x, R y⟩``.
    Works on the last axis.
    """
    y = np.asarray(y, dtype=float)
    return np.stack([y[..., 1], -y[..., 0]], axis=-1)
