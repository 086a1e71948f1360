"""Holder/Lipschitz seminorms over node pairs and the blow-up rescaling.

The seminorm L = max_{x != y} |f(x)-f(y)| / |x-y|^alpha is computed *exactly*
over all node pairs.  A quadtree of per-block minima/maxima prunes the O(n^2)
pair space: a block pair cannot beat the incumbent when

    osc(A, B) / gapdist(A, B)^alpha  <  incumbent,

so only near-extremal regions are ever enumerated.  Both the pruned search
and the brute-force oracle compute every quotient through one shared kernel
( |df| * table[|di|,|dj|] with a precomputed inverse-distance-power table ),
which is what makes the two paths bitwise comparable.  Ties are broken by
the lexicographically smallest flat-index pair.

The blow-up frame around the achieving pair (x_b, y_b) with r_b = |x_b - y_b|
is sampled on a source-lattice-aligned window (rescaled spacing h/r_b), so

    ubar(x) = u(x_b + r_b x) / (L r_b^alpha)

is a pure windowed rescale of node values: the rescaled Holder seminorm is
exactly 1 (the achieving pair maps to nodes 0 and (y_b-x_b)/r_b, which the
window always retains), and the discrete residual of the rescaled system is
the exactly transformed residual of the source system.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import Field, Grid, GridError, l2_norm_nodes, laplacian_array
from .solver import SolutionPair


@dataclass
class HolderReport:
    alpha: float
    L: float
    x_pair: tuple[float, ...]
    y_pair: tuple[float, ...]
    r_beta: float
    component: str
    spacing: float  # discrete max under-estimates the continuum sup by a mesh modulus


@dataclass
class BlowupFrame:
    u_bar: Field
    v_bar: Field
    M_beta: float
    beta_M_beta: float
    window_lo: tuple[float, ...]
    window_hi: tuple[float, ...]
    alpha: float
    L: float
    r_beta: float
    center: tuple[float, ...]
    rescaled_holder: float
    half_space_like: bool


# ----------------------------------------------------------------------------
# pair search
# ----------------------------------------------------------------------------

_LEAF = 8


def _pow_table(shape: tuple[int, int], h: float, alpha: float) -> np.ndarray:
    """table[di, dj] = ((di*h)^2 + (dj*h)^2)^(-alpha/2); shared by the pruned
    and brute paths so quotients agree bitwise."""
    di = np.arange(shape[0], dtype=float)[:, None] * h
    dj = np.arange(shape[1], dtype=float)[None, :] * h
    d2 = di * di + dj * dj
    with np.errstate(divide="ignore"):
        table = d2 ** (-0.5 * alpha)
    table[0, 0] = np.inf
    return table


def holder_seminorm_brute(f: Field, alpha: float) -> tuple[float, tuple[int, int]]:
    """O(n^2) reference maximum; returns (L, (flat_a, flat_b)) with the
    lexicographically first achieving pair."""
    v = f.values
    if v.ndim != 2:
        raise GridError("pair search implemented for 2D fields")
    n1, n2 = v.shape
    table = _pow_table(v.shape, f.grid.spacing, alpha)
    flat = v.ravel()
    i_of = (np.arange(n1 * n2) // n2).astype(np.int32)
    j_of = (np.arange(n1 * n2) % n2).astype(np.int32)
    n = n1 * n2
    chunk = max(1, min(n, (1 << 24) // n))
    best = -1.0
    best_pair = (0, 0)
    cols = np.arange(n)
    for a0 in range(0, n, chunk):
        a1 = min(a0 + chunk, n)
        df = np.abs(flat[a0:a1, None] - flat[None, :])
        di = np.abs(i_of[a0:a1, None] - i_of[None, :])
        dj = np.abs(j_of[a0:a1, None] - j_of[None, :])
        q = df * table[di, dj]
        mask = cols[None, :] > np.arange(a0, a1)[:, None]
        q = np.where(mask, q, -1.0)
        m = float(q.max())
        if m > best:
            arg = int(np.argmax(q))
            best = m
            best_pair = (a0 + arg // n, arg % n)
    return best, best_pair


class _BlockTree:
    """Per-level block min/max pyramid over a 2D array (leaf blocks _LEAF^2)."""

    def __init__(self, v: np.ndarray):
        self.shape = v.shape
        nb1 = (v.shape[0] + _LEAF - 1) // _LEAF
        nb2 = (v.shape[1] + _LEAF - 1) // _LEAF
        pad1, pad2 = nb1 * _LEAF, nb2 * _LEAF
        vmin = np.full((pad1, pad2), np.inf)
        vmax = np.full((pad1, pad2), -np.inf)
        vmin[: v.shape[0], : v.shape[1]] = v
        vmax[: v.shape[0], : v.shape[1]] = v
        mins = vmin.reshape(nb1, _LEAF, nb2, _LEAF).min(axis=(1, 3))
        maxs = vmax.reshape(nb1, _LEAF, nb2, _LEAF).max(axis=(1, 3))
        self.mins = [mins]
        self.maxs = [maxs]
        while self.mins[-1].shape[0] > 1 or self.mins[-1].shape[1] > 1:
            m = self.mins[-1]
            M = self.maxs[-1]
            p1 = (m.shape[0] + 1) // 2 * 2
            p2 = (m.shape[1] + 1) // 2 * 2
            mp = np.full((p1, p2), np.inf)
            Mp = np.full((p1, p2), -np.inf)
            mp[: m.shape[0], : m.shape[1]] = m
            Mp[: M.shape[0], : M.shape[1]] = M
            self.mins.append(mp.reshape(p1 // 2, 2, p2 // 2, 2).min(axis=(1, 3)))
            self.maxs.append(Mp.reshape(p1 // 2, 2, p2 // 2, 2).max(axis=(1, 3)))
        self.top = len(self.mins) - 1

    def block_range(self, level: int, b: tuple[int, int]):
        size = _LEAF * (1 << level)
        i0, j0 = b[0] * size, b[1] * size
        return (i0, min(i0 + size, self.shape[0]), j0, min(j0 + size, self.shape[1]))

    def children(self, level: int, b: tuple[int, int]):
        out = []
        nb = self.mins[level - 1].shape
        for di in (0, 1):
            for dj in (0, 1):
                c = (2 * b[0] + di, 2 * b[1] + dj)
                if c[0] < nb[0] and c[1] < nb[1]:
                    i0, i1, j0, j1 = self.block_range(level - 1, c)
                    if i0 < i1 and j0 < j1:
                        out.append(c)
        return out

    def empty(self, level: int, b: tuple[int, int]) -> bool:
        i0, i1, j0, j1 = self.block_range(level, b)
        return i0 >= i1 or j0 >= j1


def _gap(level_a, a, level_b, b, tree: _BlockTree):
    ai0, ai1, aj0, aj1 = tree.block_range(level_a, a)
    bi0, bi1, bj0, bj1 = tree.block_range(level_b, b)
    gi = max(0, bi0 - (ai1 - 1), ai0 - (bi1 - 1))
    gj = max(0, bj0 - (aj1 - 1), aj0 - (bj1 - 1))
    return gi, gj


def _leaf_pairs_eval(v, table, tree, a, b):
    """All cross quotients between two leaf blocks (vectorized)."""
    ai0, ai1, aj0, aj1 = tree.block_range(0, a)
    bi0, bi1, bj0, bj1 = tree.block_range(0, b)
    ia, ja = np.mgrid[ai0:ai1, aj0:aj1]
    ib, jb = np.mgrid[bi0:bi1, bj0:bj1]
    ia, ja = ia.ravel(), ja.ravel()
    ib, jb = ib.ravel(), jb.ravel()
    fa = v[ia, ja]
    fb = v[ib, jb]
    df = np.abs(fa[:, None] - fb[None, :])
    q = df * table[np.abs(ia[:, None] - ib[None, :]), np.abs(ja[:, None] - jb[None, :])]
    n2 = v.shape[1]
    flat_a = (ia * n2 + ja)[:, None]
    flat_b = (ib * n2 + jb)[None, :]
    valid = flat_b > flat_a
    q = np.where(valid, q, -1.0)
    return q, flat_a, flat_b


def _seminorm_pruned(v: np.ndarray, h: float, alpha: float) -> tuple[float, tuple[int, int]]:
    n1, n2 = v.shape
    table = _pow_table(v.shape, h, alpha)
    tree = _BlockTree(v)
    flat = v.ravel()

    # incumbent: near-neighbor offsets plus the global extremes pair
    best = -1.0
    for di, dj in ((0, 1), (1, 0), (1, 1), (1, -1), (0, 2), (2, 0)):
        if di >= n1 or abs(dj) >= n2:
            continue
        if dj >= 0:
            A = v[: n1 - di, : n2 - dj]
            B = v[di:, dj:]
        else:
            A = v[: n1 - di, -dj:]
            B = v[di:, : n2 + dj]
        m = float(np.max(np.abs(A - B))) * table[di, abs(dj)]
        if m > best:
            best = m
    amax = int(np.argmax(flat))
    amin = int(np.argmin(flat))
    if amax != amin:
        dii = abs(amax // n2 - amin // n2)
        djj = abs(amax % n2 - amin % n2)
        m = float(abs(flat[amax] - flat[amin]) * table[dii, djj])
        if m > best:
            best = m

    top = tree.top
    stack = [(top, (0, 0), top, (0, 0))]
    while stack:
        la, a, lb, b = stack.pop()
        osc = max(
            float(tree.maxs[la][a] - tree.mins[lb][b]),
            float(tree.maxs[lb][b] - tree.mins[la][a]),
            0.0,
        )
        gi, gj = _gap(la, a, lb, b, tree)
        bound = osc * table[gi, gj] if (gi or gj) else (np.inf if osc > 0 else 0.0)
        if bound <= best:
            continue
        if la == 0 and lb == 0:
            q, _, _ = _leaf_pairs_eval(v, table, tree, a, b)
            m = float(q.max())
            if m > best:
                best = m
            continue
        if la >= lb:
            kids = [(lc, c, lb, b) for lc, c in ((la - 1, c) for c in tree.children(la, a))]
        else:
            kids = [(la, a, lc, c) for lc, c in ((lb - 1, c) for c in tree.children(lb, b))]
        if la == lb and a == b:
            kids = []
            ch = tree.children(la, a)
            for x in range(len(ch)):
                for y in range(x, len(ch)):
                    kids.append((la - 1, ch[x], la - 1, ch[y]))
        stack.extend(kids)

    # lexicographically first achieving pair at the found value
    L = best
    best_pair = None
    stack = [(top, (0, 0), top, (0, 0))]
    while stack:
        la, a, lb, b = stack.pop()
        osc = max(
            float(tree.maxs[la][a] - tree.mins[lb][b]),
            float(tree.maxs[lb][b] - tree.mins[la][a]),
            0.0,
        )
        gi, gj = _gap(la, a, lb, b, tree)
        bound = osc * table[gi, gj] if (gi or gj) else (np.inf if osc > 0 else 0.0)
        if bound < L:
            continue
        if la == 0 and lb == 0:
            q, flat_a, flat_b = _leaf_pairs_eval(v, table, tree, a, b)
            hits = np.argwhere(q == L)
            for ha, hb in hits:
                pair = (int(flat_a[ha, 0]), int(flat_b[0, hb]))
                if best_pair is None or pair < best_pair:
                    best_pair = pair
            continue
        if la >= lb:
            kids = [(la - 1, c, lb, b) for c in tree.children(la, a)]
        else:
            kids = [(la, a, lb - 1, c) for c in tree.children(lb, b)]
        if la == lb and a == b:
            kids = []
            ch = tree.children(la, a)
            for x in range(len(ch)):
                for y in range(x, len(ch)):
                    kids.append((la - 1, ch[x], la - 1, ch[y]))
        stack.extend(kids)
    if best_pair is None:
        best_pair = (0, 0)
        L = 0.0
    return L, best_pair


def seminorm_single(f: Field, alpha: float, method: str = "pruned") -> tuple[float, tuple[int, int]]:
    """Exact node-pair seminorm of one field; returns (L, (flat_a, flat_b))."""
    if not (0.0 < alpha <= 1.0):
        raise GridError("alpha must lie in (0, 1]")
    if method == "brute":
        return holder_seminorm_brute(f, alpha)
    return _seminorm_pruned(f.values, f.grid.spacing, alpha)


def _flat_to_coords(grid: Grid, flat: int) -> tuple[float, ...]:
    n2 = grid.shape[1]
    i, j = flat // n2, flat % n2
    return (grid.origin[0] + i * grid.spacing, grid.origin[1] + j * grid.spacing)


def holder_seminorm(f: Field, g: Field | None = None, alpha: float = 0.5,
                    method: str = "pruned") -> HolderReport:
    """Exact max of |w(x)-w(y)|/|x-y|^alpha over node pairs and components
    w in {f, g}; ties between components resolve to the first field."""
    Lf, pf = seminorm_single(f, alpha, method=method)
    comp, L, pair, grid = "u", Lf, pf, f.grid
    if g is not None:
        if g.grid != f.grid:
            raise GridError("component grid mismatch")
        Lg, pg = seminorm_single(g, alpha, method=method)
        if Lg > Lf:
            comp, L, pair = "v", Lg, pg
    x = _flat_to_coords(grid, pair[0])
    y = _flat_to_coords(grid, pair[1])
    r = float(np.sqrt(sum((a - b) ** 2 for a, b in zip(x, y))))
    return HolderReport(alpha=float(alpha), L=float(L), x_pair=x, y_pair=y,
                        r_beta=r, component=comp, spacing=grid.spacing)


def lipschitz_seminorm(f: Field) -> float:
    """Exact node-pair Lipschitz constant (alpha = 1, single field)."""
    L, _ = seminorm_single(f, 1.0)
    return float(L)


# ----------------------------------------------------------------------------
# blow-up
# ----------------------------------------------------------------------------

def blowup_rescale(sol: SolutionPair, report: HolderReport,
                   window_halfwidth_in_r: float = 2.0) -> BlowupFrame:
    """Zoom into the achieving pair at scale r_beta with the amplitude
    normalization 1/(L r_beta^alpha).

    The window grid reuses the source lattice (rescaled spacing h/r_beta), is
    clipped at the domain boundary per side, and always keeps the image of
    the achieving pair, so the recomputed frame seminorm equals 1 exactly.
    """
    u, v = sol.u, sol.v
    grid = u.grid
    if grid.dim != 2:
        raise GridError("blow-up frames implemented for 2D solves")
    if report.L <= 0.0:
        raise GridError("degenerate (constant) field: no blow-up scale")
    h = grid.spacing
    r_b = report.r_beta
    alpha = report.alpha
    ix = np.array([int(round((c - o) / h)) for c, o in zip(report.x_pair, grid.origin)])
    iy = np.array([int(round((c - o) / h)) for c, o in zip(report.y_pair, grid.origin)])
    n = np.array(grid.shape)
    K = int(np.floor(window_halfwidth_in_r * r_b / h + 1e-9))
    lo = np.minimum(K, ix)
    hi = np.minimum(K, n - 1 - ix)
    clipped = bool(np.any(lo < K) or np.any(hi < K))
    off = iy - ix
    lo = np.maximum(lo, np.maximum(-off, 0))
    hi = np.maximum(hi, np.maximum(off, 0))
    if clipped:
        warnings.warn("blow-up window clipped at the domain boundary (half-space-like frame)")

    scale = report.L * r_b**alpha
    sl = tuple(slice(ix[k] - lo[k], ix[k] + hi[k] + 1) for k in range(2))
    new_grid = Grid(tuple(int(lo[k] + hi[k] + 1) for k in range(2)), h / r_b,
                    tuple(-float(lo[k]) * h / r_b for k in range(2)))
    u_bar = Field(new_grid, u.values[sl] / scale, dirichlet=False, copy=False)
    v_bar = Field(new_grid, v.values[sl] / scale, dirichlet=False, copy=False)
    M_beta = report.L**2 * r_b ** (2.0 * alpha + 2.0)
    rescaled = holder_seminorm(u_bar, v_bar, alpha).L
    return BlowupFrame(
        u_bar=u_bar,
        v_bar=v_bar,
        M_beta=float(M_beta),
        beta_M_beta=float(sol.params.beta * M_beta),
        window_lo=tuple(float(grid.origin[k] + (ix[k] - lo[k]) * h) for k in range(2)),
        window_hi=tuple(float(grid.origin[k] + (ix[k] + hi[k]) * h) for k in range(2)),
        alpha=alpha,
        L=report.L,
        r_beta=r_b,
        center=report.x_pair,
        rescaled_holder=float(rescaled),
        half_space_like=clipped,
    )


def rescaled_residual(frame: BlowupFrame, sol: SolutionPair) -> dict:
    """L2 residuals of the rescaled system on the window interior plus the
    sup/L2 sizes of its formally vanishing terms.

    Rescaled system (realized-multiplier convention, the exact transform of
    the source-grid stationary system):

        -Lap ubar = lam r_b^2 ubar + omega1 M_b ubar^3 - beta M_b ubar vbar^2
                    + hbar,     hbar = r_b^(2-alpha)/L * (source in window).

    Because the window grid is source-lattice aligned, the discrete residual
    here equals the solver residual times r_b^2/(L r_b^alpha) node for node.
    """
    p = sol.params
    r_b, alpha, L = frame.r_beta, frame.alpha, frame.L
    M_b = frame.M_beta
    bM = frame.beta_M_beta
    g = frame.u_bar.grid
    hnew = g.spacing
    ub, vb = frame.u_bar.values, frame.v_bar.values
    lam_eff = p.lam * r_b**2
    mu_eff = p.mu * r_b**2

    def window_source(src: Field | None):
        if src is None:
            return None
        h = sol.u.grid.spacing
        ix = np.array([int(round((c - o) / h)) for c, o in zip(frame.center, sol.u.grid.origin)])
        lo = np.array([int(round(-g.origin[k] / g.spacing)) for k in range(2)])
        hi = np.array(g.shape) - 1 - lo
        sl = tuple(slice(ix[k] - lo[k], ix[k] + hi[k] + 1) for k in range(2))
        return src.values[sl] * (r_b ** (2.0 - alpha) / L)

    hbar = window_source(sol.h_src)
    kbar = window_source(sol.k_src)
    inner = (slice(1, -1), slice(1, -1))
    res_u = -laplacian_array(ub, hnew) - lam_eff * ub - p.omega1 * M_b * ub**3 + bM * ub * vb**2
    res_v = -laplacian_array(vb, hnew) - mu_eff * vb - p.omega2 * M_b * vb**3 + bM * ub**2 * vb
    if hbar is not None:
        res_u = res_u - hbar
    if kbar is not None:
        res_v = res_v - kbar
    out = {
        "res_u": l2_norm_nodes(res_u[inner], hnew),
        "res_v": l2_norm_nodes(res_v[inner], hnew),
        "sup_lam_term": float(np.max(np.abs(lam_eff * ub))),
        "sup_mu_term": float(np.max(np.abs(mu_eff * vb))),
        "sup_cubic_u": float(np.max(np.abs(p.omega1 * M_b * ub**3))),
        "sup_cubic_v": float(np.max(np.abs(p.omega2 * M_b * vb**3))),
        "l2_hbar": l2_norm_nodes(hbar, hnew) if hbar is not None else 0.0,
        "l2_kbar": l2_norm_nodes(kbar, hnew) if kbar is not None else 0.0,
        "beta_M_beta": bM,
        "M_beta": M_b,
    }
    return out
