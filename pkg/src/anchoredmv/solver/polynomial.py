"""Dense multivariate polynomials over the complex numbers.

A polynomial in ``n`` variables is an n-dimensional coefficient array with
``coef[i, j, k]`` multiplying ``x**i * y**j * z**k``.  Only the small
systems arising from critical equations (n <= 4, degree <= ~12) are in
scope, so dense storage and direct convolution are adequate.
"""
from __future__ import annotations

import numpy as np
from scipy.signal import convolve


def _pad_to(a: np.ndarray, shape) -> np.ndarray:
    if a.shape == tuple(shape):
        return a
    out = np.zeros(shape, dtype=np.result_type(a, complex))
    out[tuple(slice(0, s) for s in a.shape)] = a
    return out


class Poly:
    __slots__ = ("coef",)

    def __init__(self, coef):
        coef = np.asarray(coef, dtype=complex)
        if coef.ndim == 0:
            raise ValueError("use Poly.constant for scalars")
        self.coef = coef

    # construction ------------------------------------------------------
    @classmethod
    def constant(cls, c, nvars: int) -> "Poly":
        return cls(np.full((1,) * nvars, c, dtype=complex))

    @classmethod
    def variable(cls, i: int, nvars: int) -> "Poly":
        shape = [1] * nvars
        shape[i] = 2
        coef = np.zeros(shape, dtype=complex)
        idx = [0] * nvars
        idx[i] = 1
        coef[tuple(idx)] = 1.0
        return cls(coef)

    @classmethod
    def affine(cls, const, linear) -> "Poly":
        """``const + sum_i linear[i] * x_i``."""
        linear = np.asarray(linear)
        n = linear.size
        coef = np.zeros((2,) * n, dtype=complex)
        coef[(0,) * n] = const
        for i, a in enumerate(linear):
            idx = [0] * n
            idx[i] = 1
            coef[tuple(idx)] = a
        return cls(coef)

    @classmethod
    def from_terms(cls, exps, coeffs, nvars: int) -> "Poly":
        exps = np.asarray(exps, dtype=int).reshape(-1, nvars)
        shape = tuple(exps.max(axis=0) + 1) if len(exps) else (1,) * nvars
        coef = np.zeros(shape, dtype=complex)
        for e, c in zip(exps, coeffs):
            coef[tuple(e)] += c
        return cls(coef)

    # structure ---------------------------------------------------------
    @property
    def nvars(self) -> int:
        return self.coef.ndim

    def terms(self):
        """Exponent matrix and coefficient vector of the nonzero terms."""
        idx = np.argwhere(self.coef != 0)
        return idx, self.coef[tuple(idx.T)]

    @property
    def degree(self) -> int:
        exps, _ = self.terms()
        return int(exps.sum(axis=1).max()) if len(exps) else -1

    def is_zero(self) -> bool:
        return not np.any(self.coef)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coef))

    def trimmed(self) -> "Poly":
        exps, _ = self.terms()
        if not len(exps):
            return Poly.constant(0.0, self.nvars)
        hi = exps.max(axis=0) + 1
        return Poly(self.coef[tuple(slice(0, h) for h in hi)].copy())

    # arithmetic --------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            return other
        return Poly.constant(other, self.nvars)

    def __add__(self, other):
        other = self._coerce(other)
        shape = np.maximum(self.coef.shape, other.coef.shape)
        return Poly(_pad_to(self.coef, shape) + _pad_to(other.coef, shape))

    __radd__ = __add__

    def __neg__(self):
        return Poly(-self.coef)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(self.coef * other)
        if self.nvars == 1:
            return Poly(np.convolve(self.coef, other.coef))
        return Poly(convolve(self.coef, other.coef, method="direct"))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Poly.constant(1.0, self.nvars)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def diff(self, i: int) -> "Poly":
        c = self.coef
        if c.shape[i] == 1:
            return Poly(np.zeros_like(c))
        k = np.arange(1, c.shape[i])
        shape = [1] * c.ndim
        shape[i] = -1
        d = np.take(c, range(1, c.shape[i]), axis=i) * k.reshape(shape)
        return Poly(d)

    # evaluation --------------------------------------------------------
    def __call__(self, x):
        """Evaluate at points ``x`` of shape ``(..., nvars)``."""
        exps, coeffs = self.terms()
        x = np.asarray(x, dtype=complex)
        if not len(exps):
            return np.zeros(x.shape[:-1], dtype=complex)
        mons = np.prod(x[..., None, :] ** exps, axis=-1)
        return mons @ coeffs

    def magnitude(self, x):
        """Sum of absolute term values at ``x``; the natural residual scale."""
        exps, coeffs = self.terms()
        x = np.abs(np.asarray(x, dtype=complex))
        if not len(exps):
            return np.zeros(x.shape[:-1])
        return np.prod(x[..., None, :] ** exps, axis=-1) @ np.abs(coeffs)

    def __repr__(self):
        return f"Poly(nvars={self.nvars}, degree={self.degree})"


def substitute_projective(p: Poly, M) -> Poly:
    """Affine form of ``p`` after the projective change of variables ``z = M y``.

    ``p`` is homogenized to its total degree with ``z0`` as the extra
    variable, ``(z0, z1, ..., zn) = M (1, y1, ..., yn)`` is substituted and
    the result is dehomogenized at ``y0 = 1``.
    """
    M = np.asarray(M, dtype=complex)
    n = p.nvars
    d = p.degree
    z = [Poly.affine(M[k, 0], M[k, 1:]) for k in range(n + 1)]
    cache = [[Poly.constant(1.0, n)] for _ in range(n + 1)]

    def power(k, e):
        while len(cache[k]) <= e:
            cache[k].append(cache[k][-1] * z[k])
        return cache[k][e]

    out = Poly.constant(0.0, n)
    exps, coeffs = p.terms()
    for e, c in zip(exps, coeffs):
        term = power(0, d - int(e.sum())) * c
        for k, ek in enumerate(e, start=1):
            if ek:
                term = term * power(k, int(ek))
        out = out + term
    return out


class CompiledSystem:
    """Batched evaluation of a square system and its Jacobian.

    Supports affine evaluation at ``x`` (shape ``(P, n)``) and homogeneous
    evaluation at ``z = (z0, z1..zn)`` where each equation is homogenized
    to its own total degree with ``z0`` as the extra variable.
    """

    def __init__(self, polys: list[Poly]):
        self.n = polys[0].nvars
        self.degrees = [p.degree for p in polys]
        self.polys = polys
        self._terms = []
        for p, d in zip(polys, self.degrees):
            exps, coeffs = p.terms()
            hom = np.column_stack([d - exps.sum(axis=1), exps]) if len(exps) else np.zeros((0, self.n + 1), int)
            self._terms.append((hom, coeffs))
        self.dmax = max(self.degrees + [1])

    def _powers(self, z):
        # table[p, v, k] = z[p, v] ** k
        return z[:, :, None] ** np.arange(self.dmax + 1)

    def eval_hom(self, z, jac: bool = True):
        z = np.asarray(z, dtype=complex)
        P = z.shape[0]
        nv = self.n + 1
        tab = self._powers(z)
        vals = np.zeros((P, self.n), dtype=complex)
        J = np.zeros((P, self.n, nv), dtype=complex) if jac else None
        vidx = np.arange(nv)
        for i, (E, c) in enumerate(self._terms):
            if not len(E):
                continue
            # factors[p, t, v] = z[p, v] ** E[t, v]
            factors = tab[:, vidx[None, :], E]
            vals[:, i] = np.prod(factors, axis=2) @ c
            if jac:
                for v in range(nv):
                    ev = E[:, v]
                    mask = ev > 0
                    if not mask.any():
                        continue
                    Ed = E[mask].copy()
                    Ed[:, v] -= 1
                    fd = tab[:, vidx[None, :], Ed]
                    J[:, i, v] = np.prod(fd, axis=2) @ (c[mask] * ev[mask])
        return vals, J

    def eval_affine(self, x, jac: bool = True):
        x = np.asarray(x, dtype=complex)
        z = np.column_stack([np.ones(x.shape[0], dtype=complex), x])
        vals, J = self.eval_hom(z, jac)
        return vals, (J[:, :, 1:] if jac else None)

    def magnitude_affine(self, x):
        """Per-equation sum of absolute term values (residual scale)."""
        x = np.atleast_2d(np.asarray(x, dtype=complex))
        return np.column_stack([p.magnitude(x) for p in self.polys])
