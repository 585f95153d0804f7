"""Symplectic structure on balances of Hamiltonian systems.

For an almost weighted homogeneous Hamiltonian (k_i + l_i = d - 1), the
Kowalevskian matrix has the form J*Hess + Gamma, which forces resonance
eigenvectors with eigenvalue sums different from d - 1 to be J-orthogonal.
The resonance matrix can then be rescaled into a symplectic matrix S, and
the triangular construction run in the order q_1, ..., q_n, p_n, ..., p_1
(after "canonical exchanges" that keep S symplectic and the system
Hamiltonian) produces a canonical change of variable.  Substituting it into
an autonomous Hamiltonian gives the new Hamiltonian directly; in the
non-autonomous case the regular part is the new Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebra import MultiPoly, Q, RatMatrix
from .core import (
    Balance,
    FailureAtResonance,
    ResonanceStructure,
    Rejected,
    basic_resonance_vector,
    expand_balance,
    kowalevskian,
    resonance_structure,
    verify_dominant_balance,
)
from .model import HamiltonianSystem, ODESystem, hamiltonian_to_system
from .regularize import (
    ChangeOfVariable,
    Regularization,
    regularize,
)
from .series import EXACT, TruncatedSeries, substitute_poly


def J_matrix(n: int) -> RatMatrix:
    rows = []
    for i in range(n):
        rows.append([Q(0)] * n + [Q(1) if j == i else Q(0) for j in range(n)])
    for i in range(n):
        rows.append([-Q(1) if j == i else Q(0) for j in range(n)] + [Q(0)] * n)
    return RatMatrix(rows)


def T_matrix(n: int) -> RatMatrix:
    return RatMatrix([[1 if j == n - 1 - i else 0 for j in range(n)] for i in range(n)])


def symplectic_product(v, w, J: RatMatrix) -> Fraction:
    return sum((a * b for a, b in zip(v, J.matvec(list(w)))), Q(0))


@dataclass(frozen=True)
class HamiltonianRejected:
    reason: str
    detail: object = None


def check_almost_weighted_homogeneous(
    hs: HamiltonianSystem, k: tuple[int, ...], l: tuple[int, ...]
) -> int | HamiltonianRejected:
    """Weighted degree d of H with k_i + l_i = d - 1 for every pair."""
    if not any(x > 0 for x in tuple(k) + tuple(l)):
        return HamiltonianRejected("degenerate", "no positive leading exponent")
    weights = {**dict(zip(hs.q_symbols, k)), **dict(zip(hs.p_symbols, l))}
    d = hs.H.weighted_degree(weights)
    if d is None:
        return HamiltonianRejected("degenerate", "zero Hamiltonian")
    for i, (ki, li) in enumerate(zip(k, l)):
        if ki + li != d - 1:
            return HamiltonianRejected("not_almost_weighted_homogeneous", i)
    return d


def symplectic_pairing(
    rs: ResonanceStructure, d: int
) -> list[tuple[int, int]] | HamiltonianRejected:
    """Pair resonances lambda <-> d-1-lambda with matching multiplicities and
    verify <v, Jw> = 0 exactly whenever the eigenvalue sum differs from d-1."""
    counts = dict(zip(rs.resonances, rs.multiplicities))
    for lam, m in counts.items():
        mu = d - 1 - lam
        if counts.get(mu, 0) != m:
            return HamiltonianRejected("unpaired_resonance", lam)
    n2 = rs.K.rows
    J = J_matrix(n2 // 2)
    for lam in rs.resonances:
        for mu in rs.resonances:
            if lam + mu == d - 1:
                continue
            for v in rs.eigenbases[lam]:
                for w in rs.eigenbases[mu]:
                    prod = symplectic_product(v, w, J)
                    if prod != 0:
                        return HamiltonianRejected(
                            "nonzero_pairing", {"lambda": lam, "mu": mu, "value": prod}
                        )
    pairs = []
    for lam in rs.resonances:
        mu = d - 1 - lam
        if lam <= mu:
            pairs.append((lam, mu))
    return pairs


@dataclass(frozen=True)
class SymplecticData:
    d: int
    pairing: tuple[tuple[int, int], ...]
    column_resonances: tuple[int, ...]  # per S column, after the T_n reversal
    S: RatMatrix
    exchange_set: tuple[int, ...] = ()  # dof indices with q <-> p exchanged
    row_swaps: tuple[tuple[int, int], ...] = ()  # paired dof relabelings applied

    @property
    def n_dof(self) -> int:
        return self.S.rows // 2


def resonance_columns(balance: Balance) -> list[tuple[int, tuple[Fraction, ...]]]:
    """(resonance, column) pairs in resonance order: the basic vector at -1,
    d c/d r columns at 0, eigenbasis columns at positive resonances."""
    columns: list[tuple[int, tuple[Fraction, ...]]] = []
    basic = []
    for p in basic_resonance_vector(balance.dominant):
        if not p.is_constant:
            raise ValueError("parameterized leading data: basic vector not rational")
        basic.append(p.constant_value())
    columns.append((-1, tuple(basic)))
    for name, r in balance.parameters:
        if r == 0:
            col = [c.partial(name) for c in balance.dominant.leading]
            if not all(x.is_constant for x in col):
                raise ValueError("leading data is not affine in its parameters")
            columns.append((0, tuple(x.constant_value() for x in col)))
    for r in balance.structure.resonances:
        if r >= 1:
            for v in balance.structure.eigenbases[r]:
                columns.append((r, tuple(v)))
    return columns


def _split_merged_block(
    vectors: list[tuple[Fraction, ...]], J: RatMatrix
) -> tuple[list[tuple[Fraction, ...]], list[tuple[Fraction, ...]]] | None:
    """Symplectic Gram-Schmidt inside an eigenspace paired with itself:
    returns (first-half vectors, second-half partners) or None if the form
    degenerates on the block."""
    pool = [list(v) for v in vectors]
    firsts, seconds = [], []
    while pool:
        v = pool.pop(0)
        w = None
        for idx, cand in enumerate(pool):
            if symplectic_product(v, cand, J) != 0:
                w = pool.pop(idx)
                break
        if w is None:
            return None
        scale = symplectic_product(v, w, J)
        w = [x / scale for x in w]
        reduced = []
        for x in pool:
            a = symplectic_product(x, w, J)  # <x, Jw>
            b = symplectic_product(x, v, J)  # <x, Jv> = -<v, Jx>
            x2 = [xi - a * vi + b * wi for xi, vi, wi in zip(x, v, w)]
            reduced.append(x2)
        pool = reduced
        firsts.append(tuple(v))
        seconds.append(tuple(w))
    return firsts, seconds


def symplectic_normalize(
    columns: list[tuple[int, tuple[Fraction, ...]]],
    d: int,
    pairing: list[tuple[int, int]],
) -> SymplecticData | HamiltonianRejected:
    """Reverse the last n columns and rescale them so that S^T J S = J.

    The Gram matrix of the reversed columns is block anti-diagonal by the
    pairing orthogonality, so the rescaling is the exact inverse of the
    top-right Gram block applied to the second half (a per-column division
    in the simple-eigenvalue case).  A merged self-paired block is split by
    symplectic Gram-Schmidt first.
    """
    n2 = len(columns[0][1])
    n = n2 // 2
    if len(columns) != n2:
        return HamiltonianRejected("wrong_column_count", len(columns))
    J = J_matrix(n)

    self_paired = None
    if (d - 1) % 2 == 0 and any(lam == d - 1 - lam for lam, _ in columns):
        self_paired = (d - 1) // 2
        merged = [vec for lam, vec in columns if lam == self_paired]
        split = _split_merged_block(merged, J)
        if split is None:
            return HamiltonianRejected("degenerate_merged_block", self_paired)
        firsts, seconds = split
        rebuilt = [item for item in columns if item[0] < self_paired]
        rebuilt += [(self_paired, v) for v in firsts]
        rebuilt += [(self_paired, w) for w in seconds]
        rebuilt += [item for item in columns if item[0] > self_paired]
        columns = rebuilt

    first = columns[:n]
    second = list(reversed(columns[n:]))
    col_resonances = tuple(lam for lam, _ in first) + tuple(lam for lam, _ in second)
    S0 = RatMatrix.from_columns([list(v) for _, v in first] + [list(v) for _, v in second])
    G = S0.transpose() * J * S0
    # structural zeros double as the orthogonality verification
    for a in range(n2):
        for b in range(n2):
            if col_resonances[a] + col_resonances[b] != d - 1 and G.entry(a, b) != 0:
                return HamiltonianRejected(
                    "nonzero_pairing",
                    {"cols": (a, b), "value": G.entry(a, b)},
                )
    phi = RatMatrix([[G.entry(i, n + j) for j in range(n)] for i in range(n)])
    if phi.det() == 0:
        return HamiltonianRejected("singular_gram_block", phi)
    phi_inv = phi.inverse()
    W = RatMatrix([[S0.entry(i, n + j) for j in range(n)] for i in range(n2)])
    W2 = W * phi_inv
    S = RatMatrix(
        [
            [S0.entry(i, j) for j in range(n)] + [W2.entry(i, j) for j in range(n)]
            for i in range(n2)
        ]
    )
    if S.transpose() * J * S != J:
        return HamiltonianRejected("not_symplectic", S)
    return SymplecticData(
        d=d,
        pairing=tuple(pairing),
        column_resonances=col_resonances,
        S=S,
    )


# ----------------------------------------------------------------------
# canonical exchanges


def _transversal_rows(block: list[list[Fraction]], n: int) -> list[int] | None:
    """Pick one of rows {i, n+i} per dof so the picked rows are independent.

    Backtracking, preferring the q-row; the Lagrangian-frame property of a
    symplectic matrix guarantees a solution exists.
    """
    from .algebra import rref

    def rank_of(rows: list[list[Fraction]]) -> int:
        if not rows:
            return 0
        _, pivots = rref(RatMatrix(rows))
        return len(pivots)

    choice: list[int] = []

    def backtrack(i: int, picked: list[list[Fraction]]) -> bool:
        if i == n:
            return True
        for pick in (i, n + i):
            trial = picked + [block[pick]]
            if rank_of(trial) == len(trial):
                choice.append(pick)
                if backtrack(i + 1, trial):
                    return True
                choice.pop()
        return False

    if not backtrack(0, []):
        return None
    return choice


def canonical_exchanges(sd: SymplecticData) -> SymplecticData:
    """Make the top-left n x n block of S invertible and LU-decomposable.

    First q_i <-> p_i exchanges (substituting (q_i, p_i) -> (p_i, -q_i))
    choose a transversal of the Lagrangian frame; then paired row swaps
    (q_i <-> q_j together with p_i <-> p_j) order the pivots.  Both keep S
    symplectic and the system Hamiltonian.
    """
    n = sd.n_dof
    S = [list(row) for row in S_rows(sd.S)]
    first_cols = [[S[i][j] for j in range(n)] for i in range(2 * n)]
    picks = _transversal_rows(first_cols, n)
    if picks is None:
        raise AssertionError("no Lagrangian transversal; S is not symplectic")
    exchange_set = tuple(i for i in range(n) if picks[i] == n + i)
    for i in exchange_set:
        # (q_i, p_i) -> (p_i, -q_i): new q-row = -old p-row, new p-row = old q-row
        old_q = S[i][:]
        old_p = S[n + i][:]
        S[i] = [-x for x in old_p]
        S[n + i] = old_q

    # paired relabelings so that A has an LU decomposition without pivoting
    swaps: list[tuple[int, int]] = []
    A = [row[:n] for row in S[:n]]
    perm = list(range(n))
    work = [row[:] for row in A]
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r][col] != 0), None)
        if pivot is None:
            raise AssertionError("A is singular after exchanges")
        if pivot != col:
            swaps.append((perm[col], perm[pivot]))
            work[col], work[pivot] = work[pivot], work[col]
            perm[col], perm[pivot] = perm[pivot], perm[col]
        for r in range(col + 1, n):
            if work[r][col] != 0:
                f = work[r][col] / work[col][col]
                work[r] = [x - f * y for x, y in zip(work[r], work[col])]
    for i, j in swaps:
        S[i], S[j] = S[j], S[i]
        S[n + i], S[n + j] = S[n + j], S[n + i]
    return SymplecticData(
        d=sd.d,
        pairing=sd.pairing,
        column_resonances=sd.column_resonances,
        S=RatMatrix(S),
        exchange_set=exchange_set,
        row_swaps=tuple(swaps),
    )


def S_rows(S: RatMatrix) -> list[list[Fraction]]:
    return [list(row) for row in S.data]


def apply_exchanges(
    hs: HamiltonianSystem,
    k: tuple[int, ...],
    l: tuple[int, ...],
    c: tuple[Fraction, ...],
    sd: SymplecticData,
) -> tuple[HamiltonianSystem, tuple[int, ...], tuple[int, ...], tuple[Fraction, ...]]:
    """Rewrite H and the balance leading data in the exchanged coordinates.

    For an exchanged dof, new q_i = -old p_i and new p_i = old q_i, i.e. the
    substitution (q_i, p_i) -> (p_i, -q_i) inside H.  Row swaps relabel dofs
    pairwise.  `c` is ordered (q..., p...) like the induced system.
    """
    n = hs.n_dof
    k = list(k)
    l = list(l)
    cq = list(c[:n])
    cp = list(c[n:])
    q_syms = list(hs.q_symbols)
    p_syms = list(hs.p_symbols)
    H = hs.H
    if sd.exchange_set:
        temp = {}
        for i in sd.exchange_set:
            temp[q_syms[i]] = MultiPoly.var(p_syms[i])
            temp[p_syms[i]] = -MultiPoly.var(q_syms[i])
        H = H.replace(temp)
        for i in sd.exchange_set:
            k[i], l[i] = l[i], k[i]
            cq[i], cp[i] = -cp[i], cq[i]
    for i, j in sd.row_swaps:
        swap = {
            q_syms[i]: MultiPoly.var(q_syms[j]),
            q_syms[j]: MultiPoly.var(q_syms[i]),
            p_syms[i]: MultiPoly.var(p_syms[j]),
            p_syms[j]: MultiPoly.var(p_syms[i]),
        }
        H = H.replace(swap)
        k[i], k[j] = k[j], k[i]
        l[i], l[j] = l[j], l[i]
        cq[i], cq[j] = cq[j], cq[i]
        cp[i], cp[j] = cp[j], cp[i]
    new_hs = HamiltonianSystem(
        q_symbols=tuple(q_syms),
        p_symbols=tuple(p_syms),
        H=H,
        t_symbol=hs.t_symbol,
        param_symbols=hs.param_symbols,
    )
    return new_hs, tuple(k), tuple(l), tuple(cq + cp)


# ----------------------------------------------------------------------
# canonical change of variable


@dataclass(frozen=True)
class CanonicalPipeline:
    hamiltonian: HamiltonianSystem  # exchanged coordinates
    system: ODESystem
    balance: Balance
    symplectic: SymplecticData
    regularization: Regularization

    @property
    def change(self) -> ChangeOfVariable:
        return self.regularization.change


def canonical_variable_names(n: int) -> tuple[str, tuple[str, ...]]:
    """tau name and rho names in construction order q_1..q_n, p_n..p_1."""
    tau = "Q1"
    rho = [f"Q{i}" for i in range(2, n + 1)] + [f"P{i}" for i in range(n, 0, -1)]
    return tau, tuple(rho)


def build_canonical_change(
    hs: HamiltonianSystem,
    k: tuple[int, ...],
    l: tuple[int, ...],
    c: tuple[Fraction, ...],
    sd: SymplecticData,
    order: int,
) -> CanonicalPipeline:
    """Run the triangular construction in the symplectic order.

    The variables go q_1, ..., q_n, p_n, ..., p_1 (after exchanges) and the
    last variable's coefficient carries the -1/k_1 factor that makes the
    2-form bookkeeping close up."""
    exchanged = apply_exchanges(hs, k, l, c, sd)
    ehs, ek, el, ec = exchanged
    esys = hamiltonian_to_system(ehs)
    n = ehs.n_dof
    k_full = tuple(ek) + tuple(el)
    dd = verify_dominant_balance(esys, k_full, ec)
    if isinstance(dd, Rejected):
        raise AssertionError(f"exchanged leading data rejected: {dd}")
    K = kowalevskian(esys, dd)
    rs = resonance_structure(K)
    if not isinstance(rs, ResonanceStructure):
        raise AssertionError(f"exchanged system lost its resonance structure: {rs}")
    balance = expand_balance(esys, dd, rs, order)
    if isinstance(balance, FailureAtResonance):
        raise AssertionError(f"exchanged recursion inconsistent: {balance}")
    tau_name, rho_names = canonical_variable_names(n)
    # construction order: q_2..q_n then p_n..p_1 (indices into the 2n system)
    var_order = tuple(range(1, n)) + tuple(range(2 * n - 1, n - 1, -1))
    reg = regularize(
        balance,
        pivot=0,
        var_order=var_order,
        rho_names=rho_names,
        tau_name=tau_name,
        last_factor=Q(-1, k_full[0]),
    )
    return CanonicalPipeline(
        hamiltonian=ehs,
        system=esys,
        balance=balance,
        symplectic=sd,
        regularization=reg,
    )


# ----------------------------------------------------------------------
# canonicity and the new Hamiltonian


@dataclass(frozen=True)
class Canonical:
    pass


@dataclass(frozen=True)
class CanonicalWitness:
    var_a: str
    var_b: str
    order: int
    coefficient: MultiPoly


def verify_canonical(
    cov: ChangeOfVariable, n_dof: int
) -> Canonical | CanonicalWitness:
    """Expand sum dq_i ^ dp_i under the substitution and compare with
    sum dQ_i ^ dP_i, coefficient by coefficient, exactly."""
    names = cov.new_names()
    subs = cov.substitution()
    n2 = 2 * n_dof
    partials: list[list[TruncatedSeries]] = []
    for i in range(n2):
        phi = subs[i]
        row = [phi.var_derivative()]
        for name in names[1:]:
            row.append(phi.map_coeffs(lambda p, nm=name: p.partial(nm)))
        partials.append(row)
    pos = {name: a for a, name in enumerate(names)}
    for a in range(n2):
        for b in range(a + 1, n2):
            total = TruncatedSeries.zero(cov.tau_name, trunc=EXACT)
            for i in range(n_dof):
                qi, pi = i, n_dof + i
                total = total + partials[qi][a] * partials[pi][b]
                total = total - partials[qi][b] * partials[pi][a]
            expected = Q(0)
            for i in range(1, n_dof + 1):
                qa, pa = pos[f"Q{i}"], pos[f"P{i}"]
                if (a, b) == (min(qa, pa), max(qa, pa)):
                    expected = Q(1) if qa < pa else Q(-1)
            residual = total - TruncatedSeries.constant(cov.tau_name, expected, trunc=EXACT)
            if not residual.is_zero:
                o = residual.min_exp
                return CanonicalWitness(
                    var_a=names[a],
                    var_b=names[b],
                    order=o,
                    coefficient=residual.coeffs[o],
                )
    return Canonical()


@dataclass(frozen=True)
class NewHamiltonian:
    regular: MultiPoly  # polynomial in (t, Q..., P...)
    dropped: tuple[tuple[int, MultiPoly], ...]  # singular coefficients (order, poly)


def new_hamiltonian(
    H: MultiPoly,
    cov: ChangeOfVariable,
    u_symbols: tuple[str, ...],
    autonomous: bool,
) -> NewHamiltonian:
    """Substitute the change of variable into H and split off the regular part.

    Autonomous systems must come out with an identically zero singular part;
    anything else is an implementation fault and raises.
    """
    subs = cov.substitution()
    bindings = {u_symbols[i]: s for i, s in subs.items()}
    expanded = substitute_poly(H, bindings, order=EXACT)
    tau_poly = MultiPoly.var(cov.tau_name)
    regular = MultiPoly.zero()
    dropped = []
    for o in expanded.orders():
        coeff = expanded.coeffs[o]
        if o >= 0:
            regular = regular + coeff * tau_poly**o
        else:
            dropped.append((o, coeff))
    if autonomous and dropped:
        raise AssertionError(
            f"autonomous Hamiltonian produced singular terms: {dropped}"
        )
    return NewHamiltonian(regular=regular, dropped=tuple(dropped))


def hamilton_equations_match(
    nh: NewHamiltonian, pipeline: CanonicalPipeline
) -> bool:
    """Hamilton's equations of the regular part equal the transformed right
    sides exactly (autonomous finite check)."""
    n = pipeline.hamiltonian.n_dof
    ts = pipeline.regularization.transformed
    h0 = nh.regular
    for m, name in enumerate(ts.names):
        g_poly = MultiPoly.zero()
        for o in ts.g[m].orders():
            if o < 0:
                return False
            g_poly = g_poly + ts.g[m].coeffs[o] * MultiPoly.var(ts.tau_name) ** o
        if name.startswith("Q"):
            expected = h0.partial("P" + name[1:])
        else:
            expected = -h0.partial("Q" + name[1:])
        if g_poly != expected:
            return False
    return True
