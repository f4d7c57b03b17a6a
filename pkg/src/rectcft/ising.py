"""Critical open Ising chain: free-fermion diagonalization and overlaps of
its eigenstates with the fixed (all-spins-aligned) rectangle boundary state.

The chain H = -1/2 (sum sigma^z_i + sum sigma^x_i sigma^x_{i+1}) maps to free
fermions; the boundary state |B> = |-> ... ->| is the uniform superposition
in the sigma^z basis, i.e. 2^(-L/2) prod_i (1 + c^dag_i)|0> after the
Jordan-Wigner transformation.  Its even and odd parts are Gaussian, so every
overlap with an excited eigenstate reduces to a Pfaffian of pairwise
contractions between two quadratic exponentials.  A dense 2^L route provides
the independent oracle at small sizes.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh

Q = Fraction


# ---------------------------------------------------------------------------
# single-particle problem
# ---------------------------------------------------------------------------

@dataclass
class FermionSpectrum:
    L: int
    energies: np.ndarray          # ascending positive single-particle energies
    u: np.ndarray                 # gamma^dag_q = sum_i u[q,i] c^dag_i + v[q,i] c_i
    v: np.ndarray
    ground_energy: float


def quadratic_form(L: int):
    """Hopping and pairing matrices of the chain in fermion language."""
    A = np.eye(L)
    B = np.zeros((L, L))
    for i in range(L - 1):
        A[i, i + 1] = A[i + 1, i] = -0.5
        B[i, i + 1] = -0.5
        B[i + 1, i] = +0.5
    return A, B


def diagonalize_chain(L: int) -> FermionSpectrum:
    """Bogoliubov modes of the open critical chain."""
    if L < 1:
        raise ValueError("need at least one site")
    A, B = quadratic_form(L)
    # [H, u.c^dag + v.c] = eps (u.c^dag + v.c) in block form
    bdg = np.block([[A, -B], [-B, -A]])
    vals, vecs = eigh(bdg)
    pos = vals > 0
    energies = vals[pos]
    w = vecs[:, pos]
    order = np.argsort(energies)
    energies = energies[order]
    w = w[:, order]
    u = w[:L, :].T
    v = w[L:, :].T
    # normalize rows to unit BdG norm (eigh already orthonormal)
    return FermionSpectrum(L, energies, u, v, -0.5 * float(energies.sum()))


def lowest_states(spectrum: FermionSpectrum, count: int):
    """Occupation subsets of the `count` lowest many-body eigenstates."""
    eps = spectrum.energies
    L = len(eps)
    heap = [(0.0, ())]
    seen = []
    push_idx = {(): 0}
    while heap and len(seen) < count:
        energy, subset = heapq.heappop(heap)
        seen.append((energy + spectrum.ground_energy, subset))
        start = push_idx.pop(subset)
        for j in range(start, L):
            new = subset + (j,)
            heapq.heappush(heap, (energy + eps[j], new))
            push_idx[new] = j + 1
    return seen


# ---------------------------------------------------------------------------
# Pfaffian and Gaussian contractions
# ---------------------------------------------------------------------------

def pfaffian(mat: np.ndarray) -> float:
    """Pfaffian of an even-dimensional antisymmetric matrix by skew
    elimination with partial pivoting."""
    a = np.array(mat, dtype=complex if np.iscomplexobj(mat) else float)
    n = a.shape[0]
    if n % 2:
        return 0.0
    val = 1.0
    for k in range(0, n - 1, 2):
        piv = k + 1 + int(np.argmax(np.abs(a[k + 1:, k])))
        if abs(a[piv, k]) == 0.0:
            return 0.0
        if piv != k + 1:
            a[[k + 1, piv]] = a[[piv, k + 1]]
            a[:, [k + 1, piv]] = a[:, [piv, k + 1]]
            val = -val
        p = -a[k + 1, k]  # = a[k, k+1]
        val *= p          # Pf factorizes over the 2x2 pivot block
        if k + 2 < n:
            tail = slice(k + 2, n)
            # skew Schur complement: a_ij += (a_{k+1,i} a_{k,j}
            #                                 - a_{k,i} a_{k+1,j}) / a_{k,k+1}
            row_k = np.array(a[k, tail])
            row_k1 = np.array(a[k + 1, tail])
            a[np.ix_(range(k + 2, n), range(k + 2, n))] += \
                (np.outer(row_k1, row_k) - np.outer(row_k, row_k1)) / p
            a[k, tail] = 0
            a[k + 1, tail] = 0
            a[tail, k] = 0
            a[tail, k + 1] = 0
    return val.real if abs(getattr(val, "imag", 0.0)) < 1e-30 else val


@dataclass
class GaussianBracket:
    """<0| exp(c A c / 2) ... exp(c^dag B c^dag / 2)|0> with its contraction
    blocks; insertions are linear forms alpha.c + beta.c^dag."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        L = self.A.shape[0]
        eye = np.eye(L)
        self.T = np.linalg.inv(eye + self.B @ self.A)      # <c c^dag>
        self.S = -self.T @ self.B                          # <c c>
        self.U = -self.A @ self.T                          # <c^dag c^dag>
        self.V = self.A @ self.T @ self.B                  # <c^dag c>
        sign = -1.0 if (L * (L + 1) // 2) % 2 else 1.0
        big = np.block([[self.A, -eye], [eye, self.B]])
        self.norm = sign * pfaffian(big)

    def contraction(self, x, y) -> float:
        ax, bx = x
        ay, by = y
        return float(ax @ self.S @ ay + ax @ self.T @ by
                     + bx @ self.V @ ay + bx @ self.U @ by)

    def bracket(self, insertions) -> float:
        """Full expectation value with the ordered linear insertions."""
        r = len(insertions)
        if r % 2:
            return 0.0
        if r == 0:
            return self.norm
        C = np.zeros((r, r))
        for s in range(r):
            for t in range(s + 1, r):
                C[s, t] = self.contraction(insertions[s], insertions[t])
                C[t, s] = -C[s, t]
        return self.norm * pfaffian(C)


# ---------------------------------------------------------------------------
# boundary-state overlaps
# ---------------------------------------------------------------------------

def _pairing_matrix(spectrum: FermionSpectrum) -> np.ndarray:
    """BCS kernel Z of the ground state, gamma_q e^{Z/2}|0> = 0 => Z = -U^{-1}V."""
    Z = -np.linalg.solve(spectrum.u, spectrum.v)
    return 0.5 * (Z - Z.T)


def _ones_kernel(L: int) -> np.ndarray:
    M = np.triu(np.ones((L, L)), 1)
    return M - M.T


class FixedBoundaryOverlaps:
    """Overlaps of |-> ...-> with the chain eigenstates, by Pfaffians."""

    def __init__(self, L: int):
        self.L = L
        self.spectrum = diagonalize_chain(L)
        Z = _pairing_matrix(self.spectrum)
        M = _ones_kernel(L)
        self.bracket = GaussianBracket(-M, Z)
        n2 = GaussianBracket(-Z, Z).norm
        self.gs_norm = 1.0 / math.sqrt(n2)
        self.scale = 2.0 ** (-L / 2) * self.gs_norm

    def overlap(self, subset) -> float:
        """<B| prod_{q in subset} gamma^dag_q |gs>, modes 0-indexed ascending."""
        ins = []
        if len(subset) % 2:
            ins.append((np.ones(self.L), np.zeros(self.L)))  # odd part of <B|
        for q in subset:
            ins.append((self.spectrum.v[q], self.spectrum.u[q]))
        return self.scale * self.bracket.bracket(ins)


def fixed_boundary_overlaps(L: int, count: int):
    """Energies, occupation subsets and boundary overlaps of the lowest
    `count` eigenstates."""
    ov = FixedBoundaryOverlaps(L)
    states = lowest_states(ov.spectrum, count)
    return [(energy, subset, ov.overlap(subset)) for energy, subset in states]


# ---------------------------------------------------------------------------
# dense oracle
# ---------------------------------------------------------------------------

def dense_hamiltonian(L: int) -> np.ndarray:
    sz = sp.csr_matrix(np.diag([1.0, -1.0]))
    sx = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    eye = sp.identity(2, format="csr")

    def site_op(op, i):
        mats = [eye] * L
        mats[i] = op
        out = mats[0]
        for m in mats[1:]:
            out = sp.kron(out, m, format="csr")
        return out

    H = sp.csr_matrix((2 ** L, 2 ** L))
    for i in range(L):
        H = H - 0.5 * site_op(sz, i)
    for i in range(L - 1):
        H = H - 0.5 * (site_op(sx, i) @ site_op(sx, i + 1))
    return H.toarray()


def dense_overlaps(L: int, count: int):
    """Energies and |<B|k>| from full diagonalization (L <= 14)."""
    if L > 14:
        raise ValueError("dense oracle limited to small chains")
    H = dense_hamiltonian(L)
    vals, vecs = eigh(H)
    b = np.full(2 ** L, 2.0 ** (-L / 2))
    return vals[:count], np.abs(b @ vecs[:, :count])


# ---------------------------------------------------------------------------
# coherent-state kernels
# ---------------------------------------------------------------------------

class _BiSeries:
    """Truncated bivariate series over Fraction, total degree <= order."""

    def __init__(self, coeffs, order):
        self.order = order
        self.c = {k: v for k, v in coeffs.items() if v != 0 and k[0] + k[1] <= order}

    @staticmethod
    def const(val, order):
        return _BiSeries({(0, 0): Q(val)}, order)

    @staticmethod
    def var(which, order):
        return _BiSeries({(1, 0) if which == "u" else (0, 1): Q(1)}, order)

    def __add__(self, other):
        out = dict(self.c)
        for k, v in other.c.items():
            out[k] = out.get(k, Q(0)) + v
        return _BiSeries(out, min(self.order, other.order))

    def __sub__(self, other):
        return self + other * Q(-1)

    def __mul__(self, other):
        if isinstance(other, _BiSeries):
            order = min(self.order, other.order)
            out = {}
            for (a, b), v in self.c.items():
                for (cc, d), w in other.c.items():
                    if a + cc + b + d <= order:
                        key = (a + cc, b + d)
                        out[key] = out.get(key, Q(0)) + v * w
            return _BiSeries(out, order)
        return _BiSeries({k: v * Q(other) for k, v in self.c.items()}, self.order)

    __rmul__ = __mul__

    def shift_pow(self, du, dv):
        return _BiSeries({(a + du, b + dv): v for (a, b), v in self.c.items()},
                         self.order)

    def coeff(self, a, b):
        return self.c.get((a, b), Q(0))

    def pow_binomial(self, e: Fraction):
        """(1 + w)**e for a series with zero constant term offset by 1."""
        w = _BiSeries({k: v for k, v in self.c.items() if k != (0, 0)}, self.order)
        assert self.coeff(0, 0) == 1
        out = _BiSeries.const(1, self.order)
        term = _BiSeries.const(1, self.order)
        for k in range(1, self.order + 1):
            term = term * w * ((e - k + 1) / k)
            if not term.c:
                break
            out = out + term
        return out

    def inverse(self):
        return self.pow_binomial(Q(-1))

    def divide_linear_difference(self):
        """Divide an antisymmetric-on-diagonal series by (u - v) exactly."""
        q = {}
        max_b = max((b for (_, b) in self.c), default=0)
        for a in range(self.order, -1, -1):
            for b in range(self.order + 1):
                # S_{a+1, b} = q_{a, b} - q_{a+1, b-1}
                val = self.coeff(a + 1, b) + q.get((a + 1, b - 1), Q(0))
                if val:
                    q[(a, b)] = val
        res = _BiSeries(q, self.order - 1)
        # exactness: (u - v) * q must reproduce the series
        back = (res.shift_pow(1, 0) - res.shift_pow(0, 1))
        for k, v in self.c.items():
            if k[0] + k[1] <= self.order - 1 and back.coeff(*k) != v:
                raise ArithmeticError("series not divisible by (u - v)")
        return res


def _univariate(which, coeffs, order):
    out = {}
    for n, v in enumerate(coeffs):
        key = (n, 0) if which == "u" else (0, n)
        out[key] = Q(v)
    return _BiSeries(out, order)


def _sqrt_one_minus_sq(which, order):
    # sqrt(1 - x^2) as a series in x
    half = Q(1, 2)
    coeffs = [Q(0)] * (order + 1)
    coeffs[0] = Q(1)
    term = Q(1)
    for k in range(1, order // 2 + 1):
        term = term * (half - k + 1) / k
        coeffs[2 * k] = term * (-1) ** k
    return _univariate(which, coeffs, order)


def _geom(which, sign, order):
    # 1/(1 -+ x)
    return _univariate(which, [Q(1) if sign > 0 else Q((-1) ** n)
                               for n in range(order + 1)], order)


@dataclass
class CoherentKernel:
    even: dict      # (m, n), m < n -> Fraction
    odd: dict
    max_index: int


def coherent_coefficients(max_index: int = 8) -> CoherentKernel:
    """Series coefficients of the closed-form pair kernels of the fixed
    boundary state, even (identity) and odd (energy) sectors."""
    if max_index > 64:
        raise ValueError("kernel expansion capped at index 64")
    order = 2 * max_index + 4
    u = _BiSeries.var("u", order)
    v = _BiSeries.var("v", order)
    one = _BiSeries.const(1, order)
    su = _sqrt_one_minus_sq("u", order)
    sv = _sqrt_one_minus_sq("v", order)
    inv_uv = (one - u * v).pow_binomial(Q(-1))
    ratio_u = (one + u) * _geom("u", +1, order)   # (1+u)/(1-u)
    ratio_v = (one + v) * _geom("v", +1, order)
    core = su * sv * inv_uv

    # even sector: the two chiralities of the squeezed kernel; the overall
    # 1/(z2 - z1) = uv/(u - v), so G = (uv/2) sum G_mn u^m v^n means
    # G_mn = 2 [u^(m+1) v^(n+1)] (uv * bracket / (u - v))
    g1_num = core * ratio_u * ratio_v.inverse() - one
    g2_num = core * ratio_u.inverse() * ratio_v - one
    bracket = (g1_num + g2_num) * Q(1, 4)
    even_series = (bracket * u * v).divide_linear_difference()
    even = {}
    for m in range(max_index + 1):
        for n in range(m + 1, max_index + 1):
            c = 2 * even_series.coeff(m + 1, n + 1)
            if c:
                even[(m, n)] = c

    # odd sector: the diagonal singularities of the squeezed part and the
    # subtracted four-point function cancel; combine before dividing
    t1 = (v - u) * (one - u * v) * (su * sv).inverse()
    n_term = (su * sv) * (v * v * (one - u * u) * (one - v * v).inverse()
                          + u * u * (one - v * v) * (one - u * u).inverse())
    four_point = u * u + v * v - u * v
    bracket_odd = n_term * inv_uv * Q(1, 2) - four_point
    regular = bracket_odd.divide_linear_difference() * Q(-1)  # divide by (v - u)
    g_odd = t1 * Q(1, 2) + regular
    # the odd exponent pairs psi_{-m+1/2} psi_{-n+1/2}: mode labels sit one
    # unit lower than the even sector, G_mn = -[u^m v^n] of the combination
    odd = {}
    for m in range(max_index + 1):
        for n in range(m + 1, max_index + 1):
            c = -g_odd.coeff(m, n)
            if c:
                odd[(m, n)] = c
    return CoherentKernel(even, odd, max_index)


# ---------------------------------------------------------------------------
# CFT targets and finite-size extraction
# ---------------------------------------------------------------------------

def table_rows(max_count: int = 11):
    """The low-lying eigenstates as mode subsets with their weights and the
    kernel-predicted boundary overlaps (relative normalization: the primary
    of each fermion-parity sector has overlap 1)."""
    kern = coherent_coefficients(6)
    rows = []
    subsets = [(), (0,), (1,), (0, 1), (2,), (0, 2), (3,), (0, 3), (1, 2),
               (4,), (0, 1, 2)]
    for sub in subsets[:max_count]:
        h = sum(q + Q(1, 2) for q in sub)
        if len(sub) % 2 == 0:
            if not sub:
                val = Q(1)
            elif len(sub) == 2:
                val = abs(kern.even.get((sub[0], sub[1]), Q(0)))
            else:
                raise NotImplementedError
        else:
            if sub == (0,):
                val = Q(1)
            elif len(sub) == 1:
                # single mode psi_{-(q+1/2)}: contraction of psi_{1/2} in the
                # (0, q+1) exponent pair against the sector primary
                val = abs(kern.odd.get((0, sub[0] + 1), Q(0)))
            elif len(sub) == 3 and sub[0] == 0:
                # psi_{-1/2} plus the (q1+1, q2+1) pair
                val = abs(kern.odd.get((sub[1] + 1, sub[2] + 1), Q(0)))
            else:
                val = Q(0)
        rows.append((sub, h, val))
    return rows


def ctilde_theory() -> float:
    """Relative weight of the energy-sector part of the fixed boundary state
    (after the basis-state normalizations cancel)."""
    return math.sqrt(2.0)


def ctilde_theory_raw(h_psi=Q(1, 2)) -> float:
    """The boundary-OPE combination before normalization cancellation."""
    return 4.0 ** (-float(h_psi)) * math.sqrt(2.0)


def ratio_fit(sizes, ratios, powers=("1", "1/L", "1/L^2", "1/L^3")):
    """Fit -log(ratio) = a2 + a3/L + ... and return exp(-a2)."""
    from .tl_lattice import overlap_scaling
    vals = [-math.log(r) for r in ratios]
    fit = overlap_scaling(sizes, vals, powers=powers)
    return math.exp(-fit.coefficients["1"]), fit


def sector_prefactor_extraction(sizes=None):
    """Fitted relative weight of the first energy-sector state against the
    ground state, compared with sqrt(2)."""
    sizes = sizes or list(range(10, 31, 2))
    ratios = []
    for L in sizes:
        ov = FixedBoundaryOverlaps(L)
        b0 = ov.overlap(())
        b1 = ov.overlap((0,))
        ratios.append(abs(b1 / b0))
    value, fit = ratio_fit(sizes, ratios)
    return value, fit
