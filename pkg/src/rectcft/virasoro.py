"""Exact Verma-module arithmetic for rectangle boundary states.

Everything here is exact: coefficients are Fractions at fixed rational p,
sympy expressions in symbolic mode, or univariate rational functions when a
degenerate channel forces a regularized solve.  No floating point touches
the core path.

The boundary states of an L x L' rectangle live in Virasoro modules attached
to the corner fields.  A state for corner labels (i, j) in channel s is

    4**(h_s - h_i - h_j) * G_corner . exp(-2 L_{-1}) . [descent cloud]

where the descent cloud is the operator-product expansion of the two corner
fields (separation 4, expanded about the right field) projected onto the
channel, and G_corner is the corner map exp(-L_{-2}/2^0) exp(-L_{-4}/2) ...
acting right factor first.  The irrational prefactor 4**(...) is carried as
an exact power-of-two exponent alongside the rational coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
import json

Q = Fraction


class DegenerateModuleError(ArithmeticError):
    """The channel module is degenerate at this level and the quantity has no
    finite regularized value (a genuinely logarithmic point)."""


class FusionError(ValueError):
    """Channel label outside the fusion product of the corner labels."""


# ---------------------------------------------------------------------------
# coefficient fields
# ---------------------------------------------------------------------------

def _is_zero(x) -> bool:
    if isinstance(x, _RatFunc):
        return x.num.is_zero()
    if isinstance(x, _Jet):
        return x.a == 0 and x.b == 0
    if isinstance(x, (int, Fraction)):
        return x == 0
    # sympy expression
    import sympy
    return sympy.cancel(x) == 0


class _Jet:
    """First-order jet a + b*t (t^2 = 0) over Fraction: exact one-shot
    derivatives of Gram matrices and descent data in the regulator."""

    __slots__ = ("a", "b")

    def __init__(self, a, b=0):
        self.a = Q(a)
        self.b = Q(b)

    @staticmethod
    def coerce(x):
        return x if isinstance(x, _Jet) else _Jet(x)

    def __add__(self, other):
        o = _Jet.coerce(other)
        return _Jet(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return _Jet(-self.a, -self.b)

    def __sub__(self, other):
        return self + (-_Jet.coerce(other))

    def __rsub__(self, other):
        return _Jet.coerce(other) + (-self)

    def __mul__(self, other):
        o = _Jet.coerce(other)
        return _Jet(self.a * o.a, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _Jet.coerce(other)
        if o.a == 0:
            raise ZeroDivisionError("jet division by infinitesimal")
        return _Jet(self.a / o.a, (self.b * o.a - self.a * o.b) / (o.a * o.a))

    def __rtruediv__(self, other):
        return _Jet.coerce(other) / self


def _normalize(x):
    if isinstance(x, (int, Fraction, _RatFunc, _Jet)):
        return x
    import sympy
    return sympy.cancel(sympy.together(x))


class _Poly:
    """Univariate polynomial over Fraction, ascending coefficients."""

    __slots__ = ("c",)

    def __init__(self, c):
        c = [Q(v) for v in c]
        while c and c[-1] == 0:
            c.pop()
        self.c = tuple(c)

    def is_zero(self):
        return not self.c

    def degree(self):
        return len(self.c) - 1

    def __add__(self, other):
        n = max(len(self.c), len(other.c))
        return _Poly([ (self.c[i] if i < len(self.c) else 0)
                     + (other.c[i] if i < len(other.c) else 0) for i in range(n)])

    def __neg__(self):
        return _Poly([-v for v in self.c])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return _Poly([v * other for v in self.c])
        if self.is_zero() or other.is_zero():
            return _Poly([])
        out = [Q(0)] * (len(self.c) + len(other.c) - 1)
        for i, a in enumerate(self.c):
            if a:
                for j, b in enumerate(other.c):
                    if b:
                        out[i + j] += a * b
        return _Poly(out)

    def divmod(self, other):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.c)
        quo = [Q(0)] * max(0, len(rem) - len(other.c) + 1)
        d = other.c[-1]
        while len(rem) >= len(other.c):
            k = len(rem) - len(other.c)
            f = rem[-1] / d
            quo[k] = f
            for i, b in enumerate(other.c):
                rem[k + i] -= f * b
            while rem and rem[-1] == 0:
                rem.pop()
            if not rem:
                break
        return _Poly(quo), _Poly(rem)

    def gcd(self, other):
        a, b = self, other
        while not b.is_zero():
            a, b = b, a.divmod(b)[1]
        if a.is_zero():
            return a
        return a * (1 / a.c[-1])  # monic

    def eval0(self):
        return self.c[0] if self.c else Q(0)

    def shift_down(self, k):
        return _Poly(self.c[k:])

    def order_at_zero(self):
        for i, v in enumerate(self.c):
            if v != 0:
                return i
        return None


_P_ONE = _Poly([1])


class _RatFunc:
    """Rational function num/den over Fraction, gcd-reduced, monic den."""

    __slots__ = ("num", "den")

    def __init__(self, num: _Poly, den: _Poly = _P_ONE, reduce=True):
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if reduce and not num.is_zero():
            g = num.gcd(den)
            if g.degree() > 0:
                num = num.divmod(g)[0]
                den = den.divmod(g)[0]
        if num.is_zero():
            den = _P_ONE
        lead = den.c[-1]
        if lead != 1:
            num = num * (1 / lead)
            den = den * (1 / lead)
        self.num, self.den = num, den

    @staticmethod
    def coerce(x):
        if isinstance(x, _RatFunc):
            return x
        if isinstance(x, (int, Fraction)):
            return _RatFunc(_Poly([x]), _P_ONE, reduce=False)
        raise TypeError(f"cannot coerce {type(x)} to rational function")

    @staticmethod
    def variable(offset=0):
        return _RatFunc(_Poly([offset, 1]), _P_ONE, reduce=False)

    def __add__(self, other):
        o = _RatFunc.coerce(other)
        return _RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return _RatFunc(-self.num, self.den, reduce=False)

    def __sub__(self, other):
        return self + (-_RatFunc.coerce(other))

    def __rsub__(self, other):
        return _RatFunc.coerce(other) + (-self)

    def __mul__(self, other):
        o = _RatFunc.coerce(other)
        return _RatFunc(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _RatFunc.coerce(other)
        if o.num.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return _RatFunc(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        return _RatFunc.coerce(other) / self

    def __eq__(self, other):
        o = _RatFunc.coerce(other)
        return (self.num * o.den - o.num * self.den).is_zero()

    def limit_at_zero(self):
        """Value at the regulator's origin; raises if there is a pole."""
        if self.num.is_zero():
            return Q(0)
        on = self.num.order_at_zero()
        od = self.den.order_at_zero() or 0
        if on < od:
            raise DegenerateModuleError("pole at the degenerate point")
        if on > od:
            return Q(0)
        return self.num.c[on] / self.den.c[od]


# ---------------------------------------------------------------------------
# central charge parametrization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CentralChargeParam:
    """Loop-weight parametrization c = 1 - 6/(p(p+1)), beta = 2 cos(pi/(p+1)).

    p is an exact Fraction (or a sympy symbol in symbolic mode).
    """

    p: object

    @staticmethod
    def from_p(p) -> "CentralChargeParam":
        if isinstance(p, (int, str)):
            p = Q(p)
        return CentralChargeParam(p)

    @staticmethod
    def symbolic() -> "CentralChargeParam":
        import sympy
        return CentralChargeParam(sympy.symbols("p", positive=True))

    @property
    def c(self):
        p = self.p
        return 1 - Q(6, 1) / (p * (p + 1)) if isinstance(p, Fraction) else 1 - 6 / (p * (p + 1))

    def kac_weight(self, j: int):
        """h_{1,1+j} = j(jp-2)/(4(p+1)), the weight of the j-line boundary field."""
        return (j * (j * self.p - 2)) / (4 * (self.p + 1))

    def weight_rs(self, r: int, s: int):
        """General Kac weight h_{r,s} = ((r(p+1) - s p)^2 - 1) / (4 p (p+1))."""
        p = self.p
        return ((r * (p + 1) - s * p) ** 2 - 1) / (4 * p * (p + 1))

    def beta_loop(self) -> float:
        import math
        return 2.0 * math.cos(math.pi / (float(self.p) + 1.0))


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def partitions(n: int, min_part: int = 1) -> tuple:
    """Weakly decreasing partitions of n with parts >= min_part."""
    if n == 0:
        return ((),)
    out = []
    for first in range(n, min_part - 1, -1):
        for rest in partitions(n - first, min_part):
            if not rest or rest[0] <= first:
                out.append((first,) + rest)
    return tuple(out)


# ---------------------------------------------------------------------------
# the module
# ---------------------------------------------------------------------------

class VermaModule:
    """Highest-weight Virasoro module over an exact coefficient field.

    vacuum=True works in the quotient by L_{-1}|0>, i.e. drops every basis
    monomial containing a part equal to 1 (the h=0 identity module).
    """

    def __init__(self, h, c, vacuum: bool = False):
        self.h = h
        self.c = c
        self.vacuum = vacuum
        self._apply_cache = {}
        self._prepend_cache = {}
        self._gram_cache = {}

    def basis(self, level: int) -> tuple:
        return partitions(level, 2 if self.vacuum else 1)

    # -- elementary actions --------------------------------------------------

    def _prepend(self, k: int, gamma: tuple) -> dict:
        key = (k, gamma)
        hit = self._prepend_cache.get(key)
        if hit is not None:
            return hit
        if not gamma or k >= gamma[0]:
            newg = (k,) + gamma
            res = {} if (self.vacuum and newg[-1] == 1) else {newg: Q(1)}
        else:
            g0, rest = gamma[0], gamma[1:]
            res = {}
            for gam, co in self._prepend(k, rest).items():
                for gam2, co2 in self._prepend(g0, gam).items():
                    _acc(res, gam2, co * co2)
            fac = Q(g0 - k)
            for gam, co in self._prepend(k + g0, rest).items():
                _acc(res, gam, fac * co)
        self._prepend_cache[key] = res
        return res

    def _apply_part(self, n: int, gamma: tuple) -> dict:
        if n == 0:
            return {gamma: self.h + sum(gamma)}
        if n < 0:
            return self._prepend(-n, gamma)
        key = (n, gamma)
        hit = self._apply_cache.get(key)
        if hit is not None:
            return hit
        if not gamma:
            res = {}
        else:
            g0, rest = gamma[0], gamma[1:]
            res = {}
            fac = Q(n + g0)
            for gam, co in self._apply_part(n - g0, rest).items():
                _acc(res, gam, fac * co)
            if n == g0:
                central = Q(n * (n * n - 1), 12) * self.c
                _acc(res, rest, central)
            for gam, co in self._apply_part(n, rest).items():
                for gam2, co2 in self._prepend(g0, gam).items():
                    _acc(res, gam2, co * co2)
        res = {g: v for g, v in res.items() if not _is_zero(v)}
        self._apply_cache[key] = res
        return res

    def apply(self, n: int, vec: dict, max_level=None) -> dict:
        out = {}
        for gamma, co in vec.items():
            if _is_zero(co):
                continue
            for gam, co2 in self._apply_part(n, gamma).items():
                if max_level is not None and sum(gam) > max_level:
                    continue
                _acc(out, gam, co * co2)
        return {g: _normalize(v) for g, v in out.items() if not _is_zero(v)}

    def inner(self, gamma_bra: tuple, vec: dict):
        """<L_{-gamma_bra} h | vec> via the adjoint word (largest mode first)."""
        for k in gamma_bra:
            vec = self.apply(k, vec)
            if not vec:
                return Q(0)
        return vec.get((), Q(0))

    def gram_level(self, level: int):
        hit = self._gram_cache.get(level)
        if hit is not None:
            return hit
        basis = self.basis(level)
        mat = [[None] * len(basis) for _ in basis]
        for j, gj in enumerate(basis):
            vec = {gj: Q(1)}
            for i, gi in enumerate(basis):
                if i < j:
                    mat[i][j] = mat[j][i]  # symmetric, computed in column i
                else:
                    mat[i][j] = self.inner(gi, vec)
        res = (basis, mat)
        self._gram_cache[level] = res
        return res


def _acc(d: dict, g: tuple, v):
    if g in d:
        d[g] = d[g] + v
    else:
        d[g] = v


_MODULE_CACHE: dict = {}


def _module_for(h, c, vacuum):
    try:
        key = (h, c, vacuum)
        hash(key)
    except TypeError:
        return VermaModule(h, c, vacuum)
    mod = _MODULE_CACHE.get(key)
    if mod is None:
        mod = _MODULE_CACHE[key] = VermaModule(h, c, vacuum)
    return mod


# ---------------------------------------------------------------------------
# vectors
# ---------------------------------------------------------------------------

@dataclass
class VermaVector:
    """Finite descendant combination sum_gamma coeffs[gamma] L_{-gamma}|h>,
    times an exact prefactor 2**log2_prefactor."""

    h: object
    param: CentralChargeParam
    coeffs: dict
    max_level: int
    log2_prefactor: object = Q(0)
    vacuum: bool = False

    def module(self) -> VermaModule:
        return _module_for(self.h, self.param.c, self.vacuum)

    def level_slice(self, n: int) -> dict:
        return {g: v for g, v in self.coeffs.items() if sum(g) == n}

    def scaled(self, factor) -> "VermaVector":
        return replace(self, coeffs={g: v * factor for g, v in self.coeffs.items()})

    def mirror(self) -> "VermaVector":
        """Spatial reflection: level-n coefficients pick up (-1)**n."""
        return replace(self, coeffs={g: (v if sum(g) % 2 == 0 else -v)
                                     for g, v in self.coeffs.items()})

    def to_json_dict(self) -> dict:
        terms = []
        for g in sorted(self.coeffs, key=lambda t: (sum(t), t)):
            v = self.coeffs[g]
            if not isinstance(v, Fraction):
                v = Q(v)
            terms.append({"partition": list(g), "numerator": v.numerator,
                          "denominator": v.denominator})
        return {"h": str(Q(self.h)), "p": str(Q(self.param.p)),
                "level": self.max_level,
                "log2_prefactor": str(Q(self.log2_prefactor)),
                "vacuum": self.vacuum, "terms": terms}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def from_json(text: str) -> "VermaVector":
        d = json.loads(text)
        param = CentralChargeParam.from_p(Q(d["p"]))
        coeffs = {tuple(t["partition"]): Q(t["numerator"], t["denominator"])
                  for t in d["terms"]}
        return VermaVector(Q(d["h"]), param, coeffs, d["level"],
                           Q(d.get("log2_prefactor", 0)), d.get("vacuum", False))


def primary_state(h, param, max_level, vacuum=False) -> VermaVector:
    return VermaVector(h, param, {(): Q(1)}, max_level, Q(0), vacuum)


def apply_generator(n: int, v: VermaVector, param: CentralChargeParam = None) -> VermaVector:
    """L_n acting on v, truncated at v.max_level for lowering operators."""
    mod = v.module()
    out = mod.apply(n, v.coeffs, max_level=v.max_level)
    return replace(v, coeffs=out)


def _apply_exp_lower(k: int, a, v: VermaVector) -> VermaVector:
    """exp(a * L_{-k}) v, truncated at v.max_level."""
    mod = v.module()
    total = dict(v.coeffs)
    term = v.coeffs
    j = 1
    while j * k <= v.max_level:
        term = mod.apply(-k, term, max_level=v.max_level)
        if not term:
            break
        fac = (a ** j) * Q(1, _factorial(j))
        for g, co in term.items():
            _acc(total, g, fac * co)
        j += 1
    total = {g: _normalize(co) for g, co in total.items() if not _is_zero(co)}
    return replace(v, coeffs=total)


@lru_cache(maxsize=None)
def _factorial(n: int) -> int:
    return 1 if n <= 1 else n * _factorial(n - 1)


def gd_apply(v: VermaVector, param: CentralChargeParam = None) -> VermaVector:
    """Corner map: exp(-L_{-2}) then exp(-L_{-4}/2) then exp(-L_{-8}/4) ...

    Factors whose mode exceeds the truncation level act as the identity.
    """
    m, coeff = 2, Q(-1)
    while m <= v.max_level:
        v = _apply_exp_lower(m, coeff, v)
        m, coeff = 2 * m, coeff / 2
    return v


def translate_exp(x, s_weight, param: CentralChargeParam, level: int,
                  vacuum=False) -> VermaVector:
    """exp(x L_{-1}) |phi_s>, truncated at the given level."""
    v = primary_state(s_weight, param, level, vacuum=vacuum)
    return _apply_exp_lower(1, Q(x) if isinstance(x, int) else x, v)


def gram_matrix(h, param: CentralChargeParam, level: int, vacuum=False):
    """Level Gram matrix (basis partitions, exact entries)."""
    mod = _module_for(h, param.c, vacuum)
    return mod.gram_level(level)


# ---------------------------------------------------------------------------
# OPE descent
# ---------------------------------------------------------------------------

@dataclass
class OpeBetaTable:
    """Descent coefficients of the channel cloud of two primaries at unit
    separation, expanded about the second field."""

    h_first: object
    h_second: object
    h_channel: object
    beta: dict          # partition -> coefficient
    max_level: int


def _ope_rhs(h_first, h_second, h_channel, gamma: tuple):
    # <h_s| L_{g_m}...L_{g_1} phi(x) |h_2> peels the adjoint word from the
    # largest mode inward, so the running exponent accumulates small parts
    # first: a factor (a + (k+1) h_first) at exponent a, then a -> a + k.
    a = h_channel - h_first - h_second
    val = 1
    for k in reversed(gamma):
        val = val * (a + (k + 1) * h_first)
        a = a + k
    return val


def _solve_exact(basis, mat, rhs, mode: str):
    """Exact Gaussian elimination.  mode 'strict' raises on a singular pivot,
    'radical0' sets the free (null-direction) coordinates to zero."""
    n = len(basis)
    aug = [list(row) + [r] for row, r in zip(mat, rhs)]
    piv_cols = []
    r = 0
    for col in range(n):
        piv = None
        for i in range(r, n):
            if not _is_zero(aug[i][col]):
                piv = i
                break
        if piv is None:
            if mode == "strict":
                raise DegenerateModuleError("singular descent system (degenerate channel)")
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        pv = aug[r][col]
        aug[r] = [_normalize(x / pv) for x in aug[r]]
        for i in range(n):
            if i != r and not _is_zero(aug[i][col]):
                f = aug[i][col]
                aug[i] = [_normalize(a - f * b) for a, b in zip(aug[i], aug[r])]
        piv_cols.append(col)
        r += 1
        if r == n:
            break
    x = [Q(0)] * n
    for row_idx, col in enumerate(piv_cols):
        x[col] = aug[row_idx][n]
    # consistency: rows below the rank must have zero rhs
    for i in range(r, n):
        if not _is_zero(aug[i][n]):
            raise DegenerateModuleError("inconsistent descent system")
    return x


def ope_beta(h_i, h_j, h_s, param: CentralChargeParam, level: int,
             mode: str = "auto") -> OpeBetaTable:
    """Descent coefficients beta of the s-channel cloud of phi_i(x) phi_j(0).

    beta at level 0 is 1.  Modes:

    * 'strict'   -- raise DegenerateModuleError whenever the level Gram matrix
                    is singular (the spec default for the bare operation);
    * 'radical0' -- pick the representative with zero component along the
                    Gram radical (null directions drop out of every inner
                    product, so amplitudes are unaffected);
    * 'continued' -- analytic continuation in the channel weight: solve over
                    rational functions of a regulator t with h_s -> h_s + t
                    and take t -> 0; raises only at a true pole;
    * 'auto'     -- 'strict' fast path, falling back to 'continued'.
    """
    ident = _identity_fusion(h_i, h_j, h_s, level)
    if ident is not None:
        return ident
    # strict mode is the bare textbook solve in the full Verma basis; the
    # other modes treat the identity channel in the quotient by L_{-1}|0>
    vacuum = _is_zero(h_s) and mode != "strict"
    if mode == "continued":
        return _ope_beta_continued(h_i, h_j, h_s, param, level)
    c = param.c
    mod = _module_for(h_s, c, vacuum)
    beta = {(): Q(1)}
    try:
        for n in range(1, level + 1):
            basis, mat = mod.gram_level(n)
            if not basis:
                continue
            rhs = [_normalize(_ope_rhs(h_i, h_j, h_s, g)) for g in basis]
            sol = _solve_exact(basis, mat, rhs, "strict" if mode in ("strict", "auto") else mode)
            for g, x in zip(basis, sol):
                if not _is_zero(x):
                    beta[g] = _normalize(x)
    except DegenerateModuleError:
        if mode == "auto":
            return _ope_beta_continued(h_i, h_j, h_s, param, level)
        raise
    return OpeBetaTable(h_i, h_j, h_s, beta, level)


def _identity_fusion(h_i, h_j, h_s, level):
    """Exact clouds when one insertion is the identity: a pure translation of
    the surviving field (or nothing at all when the moving field is trivial)."""
    if _is_zero(h_i) and _is_zero(h_s - h_j):
        # identity moving past phi_j at the origin: no descendants
        return OpeBetaTable(h_i, h_j, h_s, {(): Q(1)}, level)
    if _is_zero(h_j) and _is_zero(h_s - h_i):
        # phi_i(x) * identity: Taylor series of the translated field
        beta = {(1,) * n: Q(1, _factorial(n)) for n in range(level + 1)}
        return OpeBetaTable(h_i, h_j, h_s, beta, level)
    return None


def _kernel_basis(mat, n):
    """Kernel basis of an exact symmetric matrix via Gauss-Jordan."""
    aug = [list(row) for row in mat]
    piv_cols, r = [], 0
    for col in range(n):
        piv = next((i for i in range(r, n) if not _is_zero(aug[i][col])), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        pv = aug[r][col]
        aug[r] = [x / pv for x in aug[r]]
        for i in range(n):
            if i != r and not _is_zero(aug[i][col]):
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
        piv_cols.append(col)
        r += 1
    free = [c for c in range(n) if c not in piv_cols]
    kernel = []
    for fc in free:
        vec = [Q(0)] * n
        vec[fc] = Q(1)
        for row_idx, col in enumerate(piv_cols):
            vec[col] = -aug[row_idx][fc]
        kernel.append(vec)
    return kernel


def _ope_beta_continued(h_i, h_j, h_s, param: CentralChargeParam, level: int):
    """Analytic continuation in the channel weight: the limit h_s + t, t -> 0
    of the generic descent solution.

    Solved by first-order perturbation theory with exact jets: a particular
    solution at t=0 plus the kernel component fixed by projecting the O(t)
    equation onto the Gram radical.  Falls back to an exact rational-function
    solve if the first-order system degenerates.  For the identity channel
    the L_{-1}-descendant directions are projected out of the limit (they
    are null at h=0)."""
    vacuum = _is_zero(h_s)
    c = param.c
    mod0 = _module_for(h_s, c, False)
    jet_mod = VermaModule(_Jet(h_s, 1), c, vacuum=False)
    beta = {(): Q(1)}
    for n in range(1, level + 1):
        basis = mod0.basis(n)
        dim = len(basis)
        _, mat0 = mod0.gram_level(n)
        rhs0 = [_ope_rhs(h_i, h_j, h_s, g) for g in basis]
        x0 = _solve_exact(basis, mat0, rhs0, "radical0")
        kernel = _kernel_basis(mat0, dim)
        if kernel:
            _, jmat = jet_mod.gram_level(n)
            jrhs = [_ope_rhs(h_i, h_j, _Jet(h_s, 1), g) for g in basis]
            g1 = [[_Jet.coerce(v).b for v in row] for row in jmat]
            f1 = [_Jet.coerce(v).b for v in jrhs]
            m = len(kernel)
            g1x0 = [sum(g1[i][j] * x0[j] for j in range(dim)) for i in range(dim)]
            mm = [[sum(kb[i] * g1[i][j] * ka[j] for i in range(dim) for j in range(dim))
                   for ka in kernel] for kb in kernel]
            rr = [sum(kb[i] * (f1[i] - g1x0[i]) for i in range(dim)) for kb in kernel]
            try:
                lam = _solve_exact(list(range(m)), mm, rr, "strict")
            except DegenerateModuleError:
                return _ope_beta_continued_exact(h_i, h_j, h_s, param, level)
            for a in range(m):
                for j in range(dim):
                    x0[j] = x0[j] + lam[a] * kernel[a][j]
        for g, x in zip(basis, x0):
            if vacuum and g[-1] == 1:
                continue
            if not _is_zero(x):
                beta[g] = x
    return OpeBetaTable(h_i, h_j, h_s, beta, level)


def _ope_beta_continued_exact(h_i, h_j, h_s, param: CentralChargeParam, level: int):
    """Rational-function regularization (slow, fully general)."""
    h_reg = _RatFunc.variable(offset=h_s)
    vacuum = _is_zero(h_s)
    mod = VermaModule(h_reg, param.c, vacuum=False)
    beta = {(): Q(1)}
    for n in range(1, level + 1):
        basis = mod.basis(n)
        _, mat = mod.gram_level(n)
        rhs = [_ope_rhs(h_i, h_j, h_reg, g) for g in basis]
        sol = _solve_exact(basis, mat, [_RatFunc.coerce(r) for r in rhs], "strict")
        for g, x in zip(basis, sol):
            if vacuum and g[-1] == 1:
                continue
            val = _RatFunc.coerce(x).limit_at_zero()
            if val != 0:
                beta[g] = val
    return OpeBetaTable(h_i, h_j, h_s, beta, level)


# ---------------------------------------------------------------------------
# boundary basis states
# ---------------------------------------------------------------------------

def fusion_channels(i: int, j: int) -> range:
    return range(abs(i - j), i + j + 1, 2)


def basis_state(i: int, j: int, s: int, param: CentralChargeParam, level: int,
                mode: str = "auto") -> VermaVector:
    """Channel-s boundary basis state for line insertions i (left corner) and
    j (right corner), truncated at the given descendant level.

    Normalized so the overall prefactor is 4**(h_s - h_i - h_j) (carried as
    log2_prefactor) with unit coefficient on |phi_s>.
    """
    if s not in fusion_channels(i, j):
        raise FusionError(f"channel {s} not in the fusion of {i} and {j}")
    h_i, h_j, h_s = (param.kac_weight(n) for n in (i, j, s))
    v = corner_state(h_i, h_j, h_s, param, level, mode=mode)
    return v


def corner_state(h_left, h_right, h_channel, param: CentralChargeParam,
                 level: int, mode: str = "auto") -> VermaVector:
    """Same construction for raw weights: the channel cloud of the two corner
    fields at separation 4 about the left insertion point, translated back to
    the midpoint and mapped by the corner operator."""
    vacuum = _is_zero(h_channel)
    # cloud of phi_right(4) phi_left(0), moving field = the right one
    cloud = ope_beta(h_right, h_left, h_channel, param, level, mode=mode)
    coeffs = {g: co * Q(4) ** sum(g) for g, co in cloud.beta.items()}
    v = VermaVector(h_channel, param, coeffs, level, Q(0), vacuum)
    v = _apply_exp_lower(1, Q(-2), v)
    v = gd_apply(v)
    return replace(v, log2_prefactor=2 * (h_channel - h_left - h_right))


def gluing_residual(v: VermaVector, h_l, h_r, param: CentralChargeParam,
                    n: int) -> VermaVector:
    """(L_n - L_{-n} - 2n(ht_l + (-1)^n ht_r)) v on the valid truncation
    window (levels <= max_level - |n|), with ht = 2h - c/16."""
    c = v.param.c
    ht_l = 2 * h_l - c / 16
    ht_r = 2 * h_r - c / 16
    shift = 2 * n * (ht_l + ((-1) ** n) * ht_r)
    mod = v.module()
    window = v.max_level - abs(n)
    res = {}
    plus = mod.apply(n, v.coeffs, max_level=window)
    minus = mod.apply(-n, v.coeffs, max_level=window)
    for g, co in plus.items():
        _acc(res, g, co)
    for g, co in minus.items():
        _acc(res, g, -co)
    for g, co in v.coeffs.items():
        if sum(g) <= window:
            _acc(res, g, -shift * co)
    res = {g: _normalize(co) for g, co in res.items()
           if sum(g) <= window and not _is_zero(co)}
    return replace(v, coeffs=res, max_level=max(window, 0))


def graded_overlap(bra: VermaVector, ket: VermaVector, max_order: int) -> list:
    """Level-graded Shapovalov contraction <bra level n | G | ket level n>.

    Returns the list of exact level coefficients n = 0..max_order (the bra is
    the transpose of the given vector; coefficients are real/exact).
    """
    if not _is_zero(bra.h - ket.h) or bra.vacuum != ket.vacuum:
        raise ValueError("bra and ket must live in the same module")
    mod = ket.module()
    out = []
    for n in range(max_order + 1):
        basis, mat = mod.gram_level(n)
        idx = {g: k for k, g in enumerate(basis)}
        bl = bra.level_slice(n)
        kl = ket.level_slice(n)
        total = Q(0)
        if bl and kl:
            for gb, cb in bl.items():
                row = mat[idx[gb]]
                for gk, ck in kl.items():
                    total = total + cb * row[idx[gk]] * ck
        out.append(_normalize(total))
    return out
