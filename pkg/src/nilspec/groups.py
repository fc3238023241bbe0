"""2-step nilpotent group structure: brackets, skew maps, block spectral data.

A group is stored as its first-layer bracket tensor c[a][b][m] together
with an inner product (gram) on the first layer. All spectral work runs
in gram-orthonormal coordinates, fixed once per group by a Cholesky
change of basis, so orthogonal projections are literal symmetric
idempotents. The central object is the skew map J_eta defined by

    <J_eta x, y>_gram = eta([x, y])

for eta in the dual of the center, together with block decompositions
of the first layer on which -J_eta^2 has constant rank 2 r_j and a
single nonzero eigenvalue (b_j^eta)^2 for every eta != 0. Checking that
condition over the eta-continuum is done by deterministic axis and
bisector samples plus seeded sphere sampling.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StratifiedGroup2",
    "LayerDecomposition",
    "SpectralData",
    "AssumptionAReport",
    "build_heisenberg_reiter",
    "build_n32",
    "complexify",
    "glue_centers",
    "direct_product",
    "juxtapose_decompositions",
    "j_map",
    "spectral_data",
    "check_assumption_a",
    "dimensions",
    "homogeneous_norm",
    "spectral_bound_constant",
    "group_to_json_dict",
    "group_from_json_dict",
    "load_group",
    "builtin_group",
    "BUILTIN_GROUPS",
]

# Relative eigenvalue-clustering threshold: structure constants of all
# shipped groups are small exact integers, so clusters are sharp.
CLUSTER_RTOL = 1e-8


@dataclass(frozen=True)
class StratifiedGroup2:
    """2-step nilpotent Lie algebra data: first layer v, center z.

    bracket[a, b, m] is the m-th center component of [e_a, e_b] for the
    chosen basis of v; gram is the inner product on v. Immutable and
    safe to share across threads.
    """

    dim_v: int
    dim_z: int
    bracket: np.ndarray  # (dim_v, dim_v, dim_z), antisymmetric in (a, b)
    gram: np.ndarray  # (dim_v, dim_v) symmetric positive definite
    label: str = ""
    # filled in __post_init__: Cholesky factor and orthonormal-frame skew generators
    _chol: np.ndarray = field(init=False, repr=False, compare=False)
    _j_gen: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bracket = np.asarray(self.bracket, dtype=float)
        gram = np.asarray(self.gram, dtype=float)
        if bracket.shape != (self.dim_v, self.dim_v, self.dim_z):
            raise ValueError("bracket tensor has wrong shape")
        if not np.allclose(bracket, -np.swapaxes(bracket, 0, 1), atol=1e-12):
            raise ValueError("bracket tensor must be antisymmetric in its first two indices")
        if gram.shape != (self.dim_v, self.dim_v) or not np.allclose(gram, gram.T, atol=1e-12):
            raise ValueError("gram must be a symmetric dim_v x dim_v matrix")
        eigs = np.linalg.eigvalsh(gram)
        if eigs.min() <= 0:
            raise ValueError("gram must be positive definite")
        # stratification: the brackets must span the whole center
        pairs = [bracket[a, b] for a in range(self.dim_v) for b in range(a + 1, self.dim_v)]
        if self.dim_z > 0:
            rank = np.linalg.matrix_rank(np.array(pairs).T, tol=1e-10) if pairs else 0
            if rank < self.dim_z:
                raise ValueError("bracket does not span the center (not a stratification)")
        object.__setattr__(self, "bracket", bracket)
        object.__setattr__(self, "gram", gram)
        chol = np.linalg.cholesky(gram)  # gram = chol @ chol.T
        object.__setattr__(self, "_chol", chol)
        # J in original coords is G^-1 C_eta^T; in orthonormal coords x' = chol^T x
        # it becomes chol^-1 C_eta^T chol^-T, assembled per center generator.
        inv = np.linalg.inv(chol)
        gens = np.empty((self.dim_z, self.dim_v, self.dim_v))
        for m in range(self.dim_z):
            gens[m] = inv @ bracket[:, :, m].T @ inv.T
        object.__setattr__(self, "_j_gen", gens)

    # coordinate changes between the user basis and the orthonormal frame
    def to_orthonormal(self, x: np.ndarray) -> np.ndarray:
        return self._chol.T @ np.asarray(x, dtype=float)

    def from_orthonormal(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self._chol.T, np.asarray(x, dtype=float))

    def j_orthonormal(self, eta) -> np.ndarray:
        """Skew-symmetric matrix of J_eta in the orthonormal frame."""
        eta = np.asarray(eta, dtype=float)
        return np.tensordot(eta, self._j_gen, axes=(0, 0))

    def bracket_of(self, x, y) -> np.ndarray:
        """[x, y] in center coordinates, x and y in the user basis."""
        return np.einsum("a,b,abm->m", np.asarray(x, float), np.asarray(y, float), self.bracket)


@dataclass(frozen=True)
class LayerDecomposition:
    """Orthogonal splitting of the first layer into blocks v_1..v_{d1}.

    projections are symmetric idempotents in the orthonormal frame;
    ranks[j] = r_j is half the rank of J_eta restricted to block j;
    tdone counts the blocks with dim v_j > 2 r_j, which must be listed
    first.
    """

    projections: tuple
    ranks: tuple
    tdone: int

    def __post_init__(self):
        object.__setattr__(self, "projections", tuple(np.asarray(p, float) for p in self.projections))
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if len(self.projections) != len(self.ranks):
            raise ValueError("projections and ranks must have equal length")
        if any(r <= 0 for r in self.ranks):
            raise ValueError("all ranks must be positive")

    @property
    def n_blocks(self) -> int:
        return len(self.ranks)

    def block_dims(self) -> list[int]:
        return [int(round(np.trace(p))) for p in self.projections]

    def validate(self, dim_v: int, tol: float = 1e-10):
        total = np.zeros((dim_v, dim_v))
        for i, p in enumerate(self.projections):
            if p.shape != (dim_v, dim_v):
                raise ValueError("projection has wrong shape")
            if np.abs(p - p.T).max() > tol or np.abs(p @ p - p).max() > tol:
                raise ValueError(f"block {i} is not an orthogonal projection")
            for q in self.projections[i + 1 :]:
                if np.abs(p @ q).max() > tol:
                    raise ValueError("blocks are not mutually orthogonal")
            total += p
        if np.abs(total - np.eye(dim_v)).max() > tol:
            raise ValueError("blocks do not sum to the identity on the first layer")
        dims = self.block_dims()
        for i, (d, r) in enumerate(zip(dims, self.ranks)):
            if d < 2 * r:
                raise ValueError(f"block {i} has dim {d} < 2 r_j = {2 * r}")
            if (d > 2 * r) != (i < self.tdone):
                raise ValueError("blocks with dim v_j > 2 r_j must be exactly the first tdone ones")


@dataclass(frozen=True)
class SpectralData:
    """Per-eta block frequencies and projections.

    b[j] > 0 is the unique frequency of block j (homogeneous of degree 1
    in eta); p_eta[j] projects onto the 2 r_j-dimensional moving part,
    p_bar[j] onto the fixed part inside block j. symplectic[j] is a
    (dim_v, 2 r_j) matrix whose columns alternate E_1, Ebar_1, ... with
    J E_l = b Ebar_l and J Ebar_l = -b E_l. All in the orthonormal frame.
    """

    eta: np.ndarray
    b: tuple
    p_eta: tuple
    p_bar: tuple
    symplectic: tuple

    def pbar_total(self) -> np.ndarray:
        # projection onto ker J_eta
        out = np.zeros_like(self.p_bar[0]) if self.p_bar else None
        if out is None:
            raise ValueError("empty decomposition")
        for p in self.p_bar:
            out = out + p
        return out


class AssumptionViolated(ValueError):
    """Raised when per-eta spectral structure fails the block contract."""

    def __init__(self, message: str, spread: float = np.nan):
        super().__init__(message)
        self.spread = spread


@dataclass
class AssumptionAReport:
    holds: bool
    samples_tested: int
    max_residual: float
    failure_witness: np.ndarray | None
    per_block: list  # dicts: j, r_j, spread range over samples
    tol: float


def j_map(g: StratifiedGroup2, eta) -> np.ndarray:
    """Matrix of J_eta in the user basis: J = gram^-1 (sum eta_m C^m)^T.

    Satisfies <J_eta x, y>_gram = eta([x, y]); eta = 0 gives the zero map.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (g.dim_z,):
        raise ValueError("eta must be a center-dual vector")
    c_eta = np.tensordot(eta, np.moveaxis(g.bracket, 2, 0), axes=(0, 0))
    return np.linalg.solve(g.gram, c_eta.T)


def _symplectic_pairs(j_orth: np.ndarray, basis: np.ndarray, b: float) -> np.ndarray:
    """Orthonormal symplectic frame of a 2r-dim J-invariant subspace.

    basis: (dim_v, 2r) orthonormal columns spanning the subspace, on
    which J^2 = -b^2. Returns (dim_v, 2r) with columns E_1, Ebar_1, ...
    """
    cols = []
    work = basis.copy()
    r2 = basis.shape[1]
    while len(cols) < r2:
        # first basis direction not yet captured
        resid = work
        for c in cols:
            resid = resid - np.outer(c, c @ resid)
        norms = np.linalg.norm(resid, axis=0)
        i = int(np.argmax(norms))
        if norms[i] < 1e-10:
            raise AssumptionViolated("could not complete symplectic frame")
        e = resid[:, i] / norms[i]
        ebar = (j_orth @ e) / b
        # J-invariance keeps ebar inside the subspace and orthogonal to e
        for c in cols:
            ebar = ebar - c * (c @ ebar)
        ebar = ebar / np.linalg.norm(ebar)
        cols.extend([e, ebar])
    return np.stack(cols, axis=1)


def spectral_data(
    g: StratifiedGroup2,
    dec: LayerDecomposition,
    eta,
    tol: float = CLUSTER_RTOL,
) -> SpectralData:
    """Frequencies b_j^eta and moving/fixed projections at one eta != 0.

    The moving projection is the spectral projection of -J_eta^2
    restricted to block j onto its nonzero eigenspace; the block
    contract (rank 2 r_j, single eigenvalue up to tol relative spread)
    is enforced and AssumptionViolated carries the observed spread.
    """
    eta = np.asarray(eta, dtype=float)
    if np.linalg.norm(eta) == 0:
        raise ValueError("eta must be nonzero")
    j_orth = g.j_orthonormal(eta)
    neg_j2 = -(j_orth @ j_orth)
    scale = np.linalg.norm(neg_j2, 2)
    b_list, p_eta_list, p_bar_list, sympl = [], [], [], []
    for j, (p, r) in enumerate(zip(dec.projections, dec.ranks)):
        comm = j_orth @ p - p @ j_orth
        if np.abs(comm).max() > 1e-8 * max(np.abs(j_orth).max(), 1e-300):
            raise AssumptionViolated(f"J_eta does not commute with block {j}")
        # orthonormal basis of the block range
        evals, evecs = np.linalg.eigh(p)
        cols = evecs[:, evals > 0.5]
        m = cols.T @ neg_j2 @ cols
        lam, u = np.linalg.eigh(m)
        nonzero = lam > CLUSTER_RTOL * max(scale, 1e-300)
        if int(nonzero.sum()) != 2 * r:
            raise AssumptionViolated(
                f"block {j}: rank of -J_eta^2 is {int(nonzero.sum())}, expected {2 * r}",
                spread=np.inf,
            )
        lam_nz = lam[nonzero]
        spread = (lam_nz.max() - lam_nz.min()) / lam_nz.max()
        if spread > tol:
            raise AssumptionViolated(
                f"block {j}: eigenvalue spread {spread:.3e} exceeds tol", spread=spread
            )
        b = float(np.sqrt(np.trace(m) / (2 * r)))
        w = cols @ u[:, nonzero]  # orthonormal basis of the moving part
        p_mov = w @ w.T
        b_list.append(b)
        p_eta_list.append(p_mov)
        p_bar_list.append(p - p_mov)
        sympl.append(_symplectic_pairs(j_orth, w, b))
    return SpectralData(
        eta=eta,
        b=tuple(b_list),
        p_eta=tuple(p_eta_list),
        p_bar=tuple(p_bar_list),
        symplectic=tuple(sympl),
    )


def _eta_residual(g: StratifiedGroup2, dec: LayerDecomposition, eta: np.ndarray):
    """Residual of the block contract at one eta: 0 when it holds exactly.

    Returns (residual, per-block spreads); structural failures (rank
    mismatch) report residual 1.0 so they dominate any tolerance.
    """
    j_orth = g.j_orthonormal(eta)
    neg_j2 = -(j_orth @ j_orth)
    scale = max(np.linalg.norm(neg_j2, 2), 1e-300)
    worst = 0.0
    spreads = []
    for p, r in zip(dec.projections, dec.ranks):
        comm = np.abs(j_orth @ p - p @ j_orth).max() / max(np.abs(j_orth).max(), 1e-300)
        worst = max(worst, comm)
        evals, evecs = np.linalg.eigh(p)
        cols = evecs[:, evals > 0.5]
        lam = np.linalg.eigvalsh(cols.T @ neg_j2 @ cols)
        nonzero = lam > CLUSTER_RTOL * scale
        if int(nonzero.sum()) != 2 * r:
            spreads.append(np.inf)
            worst = max(worst, 1.0)
            continue
        lam_nz = lam[nonzero]
        spread = float((lam_nz.max() - lam_nz.min()) / lam_nz.max())
        spreads.append(spread)
        worst = max(worst, spread)
    return worst, spreads


def _sample_etas(dim_z: int, n_samples: int, seed: int) -> list[np.ndarray]:
    """Mandatory axes and pairwise bisectors, then seeded sphere points."""
    etas = [np.eye(dim_z)[m] for m in range(dim_z)]
    for a in range(dim_z):
        for b in range(a + 1, dim_z):
            for sgn in (1.0, -1.0):
                v = np.zeros(dim_z)
                v[a], v[b] = 1.0, sgn
                etas.append(v / np.sqrt(2.0))
    rng = np.random.default_rng(seed)
    while len(etas) < n_samples:
        v = rng.standard_normal(dim_z)
        nrm = np.linalg.norm(v)
        if nrm > 1e-9:
            etas.append(v / nrm)
    return etas[: max(n_samples, len(etas))]


def check_assumption_a(
    g: StratifiedGroup2,
    dec: LayerDecomposition,
    n_samples: int = 200,
    tol: float = 1e-10,
    seed: int = 0,
    threads: int = 1,
) -> AssumptionAReport:
    """Sample the unit eta-sphere and test the constant-rank block contract.

    Homogeneity (b scales linearly, projections are scale-invariant)
    makes sphere sampling sufficient; coordinate axes and bisectors are
    always included since products of groups fail exactly there.
    Failures are reported, not raised.
    """
    dec.validate(g.dim_v)
    etas = _sample_etas(g.dim_z, n_samples, seed)

    def work(eta):
        return _eta_residual(g, dec, eta)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, etas))
    else:
        results = [work(eta) for eta in etas]

    max_residual = 0.0
    witness = None
    n_blocks = dec.n_blocks
    lo = [np.inf] * n_blocks
    hi = [-np.inf] * n_blocks
    for eta, (res, spreads) in zip(etas, results):
        if res > max_residual:
            max_residual = res
            if res > tol:
                witness = eta
        for j, s in enumerate(spreads):
            lo[j] = min(lo[j], s)
            hi[j] = max(hi[j], s)
    per_block = [
        {"j": j, "r_j": dec.ranks[j], "spread_min": lo[j], "spread_max": hi[j]}
        for j in range(n_blocks)
    ]
    return AssumptionAReport(
        holds=bool(max_residual <= tol),
        samples_tested=len(etas),
        max_residual=float(max_residual),
        failure_witness=witness,
        per_block=per_block,
        tol=tol,
    )


def dimensions(g: StratifiedGroup2) -> tuple[int, int]:
    """(topological dimension, homogeneous dimension)."""
    return g.dim_v + g.dim_z, g.dim_v + 2 * g.dim_z


def homogeneous_norm(g: StratifiedGroup2, z, u) -> float:
    """|(z, u)| = |z|_gram + |u|^(1/2), homogeneous under (t z, t^2 u)."""
    z = np.asarray(z, dtype=float)
    u = np.asarray(u, dtype=float)
    return float(np.sqrt(z @ g.gram @ z) + np.sqrt(np.linalg.norm(u)))


def spectral_bound_constant(
    g: StratifiedGroup2, dec: LayerDecomposition, n_samples: int = 64, seed: int = 0
) -> float:
    """C with sum_j b_j^eta (2 n_j + r_j) + |mu| >= |eta| / C on the spectrum.

    Equals 1 / min over the unit sphere of sum_j r_j b_j^eta, estimated
    on the deterministic-plus-seeded sample set.
    """
    best = np.inf
    for eta in _sample_etas(g.dim_z, n_samples, seed):
        try:
            sd = spectral_data(g, dec, eta)
        except AssumptionViolated:
            # a measure-zero degenerate direction (e.g. product-group axes);
            # the infimum is over almost every eta
            continue
        best = min(best, sum(r * b for r, b in zip(dec.ranks, sd.b)))
    if not np.isfinite(best) or best <= 0:
        raise AssumptionViolated("no sampled eta admits the block decomposition")
    return 1.0 / best


# ---------------------------------------------------------------------------
# constructors


def _indicator_projections(blocks: list[list[int]], dim_v: int) -> list[np.ndarray]:
    projs = []
    for idx in blocks:
        p = np.zeros((dim_v, dim_v))
        for i in idx:
            p[i, i] = 1.0
        projs.append(p)
    return projs


def _order_blocks(blocks, ranks):
    """Blocks with slack dimension (dim > 2r) first; returns tdone too."""
    slack = [(b, r) for b, r in zip(blocks, ranks) if len(b) > 2 * r]
    tight = [(b, r) for b, r in zip(blocks, ranks) if len(b) == 2 * r]
    ordered = slack + tight
    return [b for b, _ in ordered], [r for _, r in ordered], len(slack)


def build_heisenberg_reiter(
    d1: int, d2: int, metric: list | None = None
) -> tuple[StratifiedGroup2, LayerDecomposition]:
    """Matrix Heisenberg group on R^{d2 x d1} x R^{d1} x R^{d2}.

    Block j of the first layer is (X_{1,j}, ..., X_{d2,j}, Y_j) with
    brackets [X_{k,j}, Y_j] = U_k; every block has r_j = 1 for any
    positive-definite per-block metric. metric, if given, is a list of
    d1 positive matrices a^j indexed against the block basis order; the
    inner product on block j is (a^j)^{-1}.
    """
    if d1 < 1 or d2 < 1:
        raise ValueError("need d1 >= 1 and d2 >= 1")
    dim_v = d1 * (d2 + 1)
    dim_z = d2
    bracket = np.zeros((dim_v, dim_v, dim_z))
    for j in range(d1):
        base = j * (d2 + 1)
        y = base + d2
        for k in range(d2):
            bracket[base + k, y, k] = 1.0
            bracket[y, base + k, k] = -1.0
    gram = np.eye(dim_v)
    if metric is not None:
        if len(metric) != d1:
            raise ValueError("metric must list one matrix per block")
        for j, a in enumerate(metric):
            a = np.asarray(a, dtype=float)
            if a.shape != (d2 + 1, d2 + 1) or not np.allclose(a, a.T, atol=1e-12):
                raise ValueError("metric blocks must be symmetric (d2+1) x (d2+1)")
            if np.linalg.eigvalsh(a).min() <= 0:
                raise ValueError("metric blocks must be positive definite")
            sl = slice(j * (d2 + 1), (j + 1) * (d2 + 1))
            gram[sl, sl] = np.linalg.inv(a)
    label = f"H_{{{d1},{d2}}}"
    g = StratifiedGroup2(dim_v=dim_v, dim_z=dim_z, bracket=bracket, gram=gram, label=label)
    blocks = [list(range(j * (d2 + 1), (j + 1) * (d2 + 1))) for j in range(d1)]
    ranks = [1] * d1
    blocks, ranks, tdone = _order_blocks(blocks, ranks)
    dec = LayerDecomposition(
        projections=_indicator_projections(blocks, dim_v), ranks=ranks, tdone=tdone
    )
    return g, dec


def build_n32() -> tuple[StratifiedGroup2, LayerDecomposition]:
    """Free 2-step group on 3 generators: [e_a, e_b] = z_{ab} for a < b."""
    bracket = np.zeros((3, 3, 3))
    for m, (a, b) in enumerate([(0, 1), (0, 2), (1, 2)]):
        bracket[a, b, m] = 1.0
        bracket[b, a, m] = -1.0
    g = StratifiedGroup2(dim_v=3, dim_z=3, bracket=bracket, gram=np.eye(3), label="N_{3,2}")
    dec = LayerDecomposition(projections=[np.eye(3)], ranks=[1], tdone=1)
    return g, dec


def _rank_everywhere_two(g: StratifiedGroup2, n_samples: int = 200, seed: int = 0) -> bool:
    for eta in _sample_etas(g.dim_z, n_samples, seed):
        j = g.j_orthonormal(eta)
        if np.linalg.matrix_rank(j, tol=1e-10) != 2:
            return False
    return True


def complexify(
    g: StratifiedGroup2, n_samples: int = 200, seed: int = 0
) -> tuple[StratifiedGroup2, LayerDecomposition | None]:
    """Real form of the complexified algebra: dimensions double.

    Bracket is the real bilinear extension ([xR,yR] - [xI,yI] in the
    real center slot, [xR,yI] + [xI,yR] in the imaginary slot). When
    J_eta of the input has rank 2 at every sampled eta (seeded sphere
    plus axes and bisectors), the whole doubled layer forms a single
    block of rank 2 and that candidate decomposition is returned.
    """
    nv, nz = g.dim_v, g.dim_z
    bracket = np.zeros((2 * nv, 2 * nv, 2 * nz))
    c = g.bracket
    # indices: a and nv+a are the real and imaginary copies of e_a
    bracket[:nv, :nv, :nz] = c
    bracket[nv:, nv:, :nz] = -c
    bracket[:nv, nv:, nz:] = c
    bracket[nv:, :nv, nz:] = c
    gram = np.zeros((2 * nv, 2 * nv))
    gram[:nv, :nv] = g.gram
    gram[nv:, nv:] = g.gram
    gc = StratifiedGroup2(
        dim_v=2 * nv, dim_z=2 * nz, bracket=bracket, gram=gram, label=g.label + "^C"
    )
    dec = None
    if _rank_everywhere_two(g, n_samples=n_samples, seed=seed):
        tdone = 1 if 2 * nv > 4 else 0
        dec = LayerDecomposition(projections=[np.eye(2 * nv)], ranks=[2], tdone=tdone)
    return gc, dec


def juxtapose_decompositions(
    dec1: LayerDecomposition, dim_v1: int, dec2: LayerDecomposition, dim_v2: int
) -> LayerDecomposition:
    """Embed two block splittings side by side (slack blocks first)."""
    entries = []
    for p, r in zip(dec1.projections, dec1.ranks):
        big = np.zeros((dim_v1 + dim_v2, dim_v1 + dim_v2))
        big[:dim_v1, :dim_v1] = p
        entries.append((big, r))
    for p, r in zip(dec2.projections, dec2.ranks):
        big = np.zeros((dim_v1 + dim_v2, dim_v1 + dim_v2))
        big[dim_v1:, dim_v1:] = p
        entries.append((big, r))
    slack = [(p, r) for p, r in entries if round(np.trace(p)) > 2 * r]
    tight = [(p, r) for p, r in entries if round(np.trace(p)) == 2 * r]
    ordered = slack + tight
    return LayerDecomposition(
        projections=[p for p, _ in ordered],
        ranks=[r for _, r in ordered],
        tdone=len(slack),
    )


def glue_centers(
    g1: StratifiedGroup2,
    g2: StratifiedGroup2,
    phi: np.ndarray,
    dec1: LayerDecomposition,
    dec2: LayerDecomposition,
) -> tuple[StratifiedGroup2, LayerDecomposition]:
    """Quotient identifying the two centers through the isomorphism phi.

    First layer v1 x v2, center that of g2; bracket of the v1 part is
    pushed through phi: [x1, y1] -> phi([x1, y1]_1). The returned
    decomposition juxtaposes the two input splittings. The skew map
    splits as J_eta = J^{(1)}_{phi^T eta} x J^{(2)}_eta.
    """
    if g1.dim_z != g2.dim_z:
        raise ValueError("center dimensions must match to glue")
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (g2.dim_z, g2.dim_z):
        raise ValueError("phi must be a square center-sized matrix")
    if abs(np.linalg.det(phi)) < 1e-12:
        raise ValueError("phi must be invertible (a linear identification of centers)")
    nv1, nv2, nz = g1.dim_v, g2.dim_v, g2.dim_z
    bracket = np.zeros((nv1 + nv2, nv1 + nv2, nz))
    bracket[:nv1, :nv1] = np.einsum("abm,nm->abn", g1.bracket, phi)
    bracket[nv1:, nv1:] = g2.bracket
    gram = np.zeros((nv1 + nv2, nv1 + nv2))
    gram[:nv1, :nv1] = g1.gram
    gram[nv1:, nv1:] = g2.gram
    g = StratifiedGroup2(
        dim_v=nv1 + nv2,
        dim_z=nz,
        bracket=bracket,
        gram=gram,
        label=f"({g1.label}+{g2.label})/center",
    )
    return g, juxtapose_decompositions(dec1, nv1, dec2, nv2)


def direct_product(g1: StratifiedGroup2, g2: StratifiedGroup2) -> StratifiedGroup2:
    """Direct product: block bracket into z1 + z2.

    The juxtaposed block splitting fails the constant-rank contract on
    the center-dual axes (J vanishes on one factor there); used as the
    checker's negative control and as the substrate for tensor
    factorization experiments, where quadrature never hits the axes.
    """
    nv1, nv2 = g1.dim_v, g2.dim_v
    nz1, nz2 = g1.dim_z, g2.dim_z
    bracket = np.zeros((nv1 + nv2, nv1 + nv2, nz1 + nz2))
    bracket[:nv1, :nv1, :nz1] = g1.bracket
    bracket[nv1:, nv1:, nz1:] = g2.bracket
    gram = np.zeros((nv1 + nv2, nv1 + nv2))
    gram[:nv1, :nv1] = g1.gram
    gram[nv1:, nv1:] = g2.gram
    return StratifiedGroup2(
        dim_v=nv1 + nv2,
        dim_z=nz1 + nz2,
        bracket=bracket,
        gram=gram,
        label=f"{g1.label}x{g2.label}",
    )


# ---------------------------------------------------------------------------
# JSON interchange


def group_to_json_dict(g: StratifiedGroup2, dec: LayerDecomposition | None = None) -> dict:
    """Sparse-triple JSON form (a < b only); decomposition by index blocks."""
    triples = []
    for a in range(g.dim_v):
        for b in range(a + 1, g.dim_v):
            for m in range(g.dim_z):
                val = g.bracket[a, b, m]
                if val != 0.0:
                    triples.append([a, b, m, float(val)])
    out = {
        "label": g.label,
        "dim_v": g.dim_v,
        "dim_z": g.dim_z,
        "bracket": triples,
        "gram": "identity" if np.allclose(g.gram, np.eye(g.dim_v)) else g.gram.tolist(),
    }
    if dec is not None:
        blocks = []
        for p in dec.projections:
            idx = [i for i in range(g.dim_v) if p[i, i] > 0.5]
            blocks.append(idx)
        out["decomposition"] = {"blocks": blocks, "ranks": list(dec.ranks)}
    return out


def group_from_json_dict(d: dict) -> tuple[StratifiedGroup2, LayerDecomposition | None]:
    dim_v, dim_z = int(d["dim_v"]), int(d["dim_z"])
    bracket = np.zeros((dim_v, dim_v, dim_z))
    for a, b, m, val in d["bracket"]:
        a, b, m = int(a), int(b), int(m)
        if not (0 <= a < b < dim_v):
            raise ValueError(
                f"bracket triple ({a}, {b}, {m}) violates the antisymmetry "
                "convention: store only 0 <= a < b < dim_v, the (b, a) "
                "entries are filled by antisymmetry"
            )
        bracket[a, b, m] += float(val)
        bracket[b, a, m] -= float(val)
    gram = np.eye(dim_v) if d.get("gram", "identity") == "identity" else np.asarray(d["gram"], float)
    g = StratifiedGroup2(
        dim_v=dim_v, dim_z=dim_z, bracket=bracket, gram=gram, label=d.get("label", "")
    )
    dec = None
    if "decomposition" in d:
        blocks = [list(map(int, b)) for b in d["decomposition"]["blocks"]]
        ranks = list(map(int, d["decomposition"]["ranks"]))
        seen = sorted(i for b in blocks for i in b)
        if seen != list(range(dim_v)):
            raise ValueError("decomposition blocks must partition the first-layer basis")
        # off-diagonal gram couplings across blocks would break orthogonality
        for i, bi in enumerate(blocks):
            for bj in blocks[i + 1 :]:
                if np.abs(gram[np.ix_(bi, bj)]).max() > 1e-12:
                    raise ValueError("gram couples distinct decomposition blocks")
        tdone = sum(1 for b, r in zip(blocks, ranks) if len(b) > 2 * r)
        for i, (b, r) in enumerate(zip(blocks, ranks)):
            if (len(b) > 2 * r) != (i < tdone):
                raise ValueError("blocks with dim > 2r must be listed first")
        dec = LayerDecomposition(
            projections=_indicator_projections(blocks, dim_v), ranks=ranks, tdone=tdone
        )
    return g, dec


def load_group(path: str) -> tuple[StratifiedGroup2, LayerDecomposition | None]:
    with open(path) as f:
        return group_from_json_dict(json.load(f))


def _builtin(name: str):
    if name == "h1":
        return build_heisenberg_reiter(1, 1)
    if name == "h12":
        return build_heisenberg_reiter(1, 2)
    if name == "h21":
        return build_heisenberg_reiter(2, 1)
    if name == "h23":
        return build_heisenberg_reiter(2, 3)
    if name == "n32":
        return build_n32()
    if name == "n32c":
        g, dec = build_n32()
        return complexify(g)
    if name == "glued_h13_n32":
        g1, d1 = build_heisenberg_reiter(1, 3)
        g2, d2 = build_n32()
        return glue_centers(g1, g2, np.eye(3), d1, d2)
    if name == "glued_h1_h1":
        g1, d1 = build_heisenberg_reiter(1, 1)
        g2, d2 = build_heisenberg_reiter(1, 1)
        return glue_centers(g1, g2, np.eye(1), d1, d2)
    if name == "h1xh1_product":
        g1, d1 = build_heisenberg_reiter(1, 1)
        g2, d2 = build_heisenberg_reiter(1, 1)
        g = direct_product(g1, g2)
        return g, juxtapose_decompositions(d1, g1.dim_v, d2, g2.dim_v)
    raise KeyError(f"unknown builtin group {name!r}")


BUILTIN_GROUPS = (
    "h1",
    "h12",
    "h21",
    "h23",
    "n32",
    "n32c",
    "glued_h13_n32",
    "glued_h1_h1",
    "h1xh1_product",
)


def builtin_group(name: str) -> tuple[StratifiedGroup2, LayerDecomposition | None]:
    """Construct one of the shipped example groups by short name."""
    return _builtin(name)
