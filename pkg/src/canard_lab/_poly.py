"""Exact rational-function form of expressions: coefficient arrays for the fast kernels.

Every expression over {numbers, x, +, -, *, /, ^int} is a ratio of two
polynomials. Coefficients are stored ascending (c[0] + c[1] x + ...), which is
what the numba kernels consume.
"""

from __future__ import annotations

import numpy as np

from ._expr import RealExpr, _Add, _Div, _Mul, _Neg, _Num, _Pow, _Sub, _Var
from .errors import EvaluationError

__all__ = [
    "as_rational",
    "rational_derivative",
    "rational_multiply",
    "order_at_zero",
]


def _trim(c: np.ndarray) -> np.ndarray:
    nz = np.nonzero(c)[0]
    if len(nz) == 0:
        return np.zeros(1)
    return np.array(c[: nz[-1] + 1], dtype=float)


def _padd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = max(len(a), len(b))
    out = np.zeros(n)
    out[: len(a)] += a
    out[: len(b)] += b
    return _trim(out)


def _pmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _trim(np.convolve(a, b))


def _is_zero(c: np.ndarray) -> bool:
    return bool(np.all(c == 0.0))


def _as_rational_node(node) -> tuple[np.ndarray, np.ndarray]:
    one = np.array([1.0])
    if isinstance(node, _Num):
        return np.array([node.value]), one
    if isinstance(node, _Var):
        return np.array([0.0, 1.0]), one
    if isinstance(node, _Add):
        n1, d1 = _as_rational_node(node.left)
        n2, d2 = _as_rational_node(node.right)
        return _padd(_pmul(n1, d2), _pmul(n2, d1)), _pmul(d1, d2)
    if isinstance(node, _Sub):
        n1, d1 = _as_rational_node(node.left)
        n2, d2 = _as_rational_node(node.right)
        return _padd(_pmul(n1, d2), -_pmul(n2, d1)), _pmul(d1, d2)
    if isinstance(node, _Mul):
        n1, d1 = _as_rational_node(node.left)
        n2, d2 = _as_rational_node(node.right)
        return _pmul(n1, n2), _pmul(d1, d2)
    if isinstance(node, _Div):
        n1, d1 = _as_rational_node(node.left)
        n2, d2 = _as_rational_node(node.right)
        if _is_zero(n2):
            raise EvaluationError("division by an identically zero expression")
        return _pmul(n1, d2), _pmul(d1, n2)
    if isinstance(node, _Pow):
        n1, d1 = _as_rational_node(node.base)
        num, den = np.array([1.0]), np.array([1.0])
        for _ in range(node.exponent):
            num, den = _pmul(num, n1), _pmul(den, d1)
        return num, den
    if isinstance(node, _Neg):
        n1, d1 = _as_rational_node(node.operand)
        return -n1, d1
    raise TypeError(f"unknown node {node!r}")


def as_rational(expr: RealExpr) -> tuple[np.ndarray, np.ndarray]:
    """Return (numerator, denominator) ascending coefficient arrays for *expr*."""
    num, den = _as_rational_node(expr.root)
    # Normalize so the lowest-order nonzero denominator coefficient is 1.
    nz = np.nonzero(den)[0]
    scale = den[nz[0]]
    return _trim(num / scale), _trim(den / scale)


def _pderiv(c: np.ndarray) -> np.ndarray:
    if len(c) == 1:
        return np.zeros(1)
    return _trim(c[1:] * np.arange(1, len(c)))


def rational_derivative(rat: tuple[np.ndarray, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """(n/d)' = (n'd - nd') / d^2, as coefficient arrays."""
    num, den = rat
    return _padd(_pmul(_pderiv(num), den), -_pmul(num, _pderiv(den))), _pmul(den, den)


def rational_multiply(
    a: tuple[np.ndarray, np.ndarray], b: tuple[np.ndarray, np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    return _pmul(a[0], b[0]), _pmul(a[1], b[1])


def order_at_zero(rat: tuple[np.ndarray, np.ndarray], rel_tol: float = 1e-12) -> int | None:
    """Vanishing order at x = 0 of a rational function.

    Coefficients below ``rel_tol`` times the largest magnitude are treated as
    zero. Returns ``None`` for the identically zero function.
    """

    def first_nonzero(c: np.ndarray) -> int | None:
        scale = np.max(np.abs(c))
        if scale == 0.0:
            return None
        idx = np.nonzero(np.abs(c) > rel_tol * scale)[0]
        return int(idx[0]) if len(idx) else None

    num, den = rat
    on = first_nonzero(num)
    od = first_nonzero(den)
    if od is None:
        raise EvaluationError("denominator is identically zero")
    if on is None:
        return None
    return on - od
