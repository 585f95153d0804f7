import random
from fractions import Fraction as Q

import pytest

from painleve.algebra import MultiPoly, RatMatrix
from painleve.core import analyze_system, resonance_structure
from painleve.hamiltonian import (
    Canonical,
    CanonicalWitness,
    HamiltonianRejected,
    J_matrix,
    T_matrix,
    apply_exchanges,
    build_canonical_change,
    canonical_exchanges,
    check_almost_weighted_homogeneous,
    hamilton_equations_match,
    new_hamiltonian,
    resonance_columns,
    symplectic_normalize,
    symplectic_pairing,
    symplectic_product,
    verify_canonical,
)
from painleve.model import HamiltonianSystem, hamiltonian_to_system, parse_hamiltonian
from painleve.regularize import ChangeOfVariable, Regular, VariableRow, regularize
from painleve.series import EXACT, TruncatedSeries

GD_K = (2, 4)
GD_L = (5, 3)
GD_C = (Q(1), Q(0), Q(-1), Q(1))

REF_R = RatMatrix(
    [[2, 1, -4, -2], [0, 3, -6, 9], [-5, 2, 1, -22], [3, 0, 6, 6]]
)
REF_S = RatMatrix(
    [
        [2, Q(1, 3), Q(2, 81), Q(-4, 9)],
        [0, 1, Q(-1, 9), Q(-2, 3)],
        [-5, Q(2, 3), Q(22, 81), Q(1, 9)],
        [3, 0, Q(-2, 27), Q(2, 3)],
    ]
)


@pytest.fixture(scope="module")
def one_dof():
    # H = p^2/2 - 2 q^3 is the pole2 system in Hamiltonian form
    hs = parse_hamiltonian("hamiltonian\nvars: q; p\nH = 1/2*p^2 - 2*q^3\n")
    sys = hamiltonian_to_system(hs)
    cand = analyze_system(sys, bound=5, order=12).principal_candidates()[0]
    return hs, sys, cand


def test_structure_matrices():
    J = J_matrix(2)
    assert J.transpose() == J.scale(-1)
    assert J * J == RatMatrix.identity(4).scale(-1)
    T = T_matrix(3)
    assert T * T == RatMatrix.identity(3)


def test_weighted_homogeneous_gd(gd_hamiltonian):
    assert check_almost_weighted_homogeneous(gd_hamiltonian, GD_K, GD_L) == 8


def test_weighted_homogeneous_one_dof():
    hs = parse_hamiltonian("hamiltonian\nvars: q; p\nH = 1/2*p^2 + q^3\n")
    assert check_almost_weighted_homogeneous(hs, (2,), (3,)) == 6


def test_weighted_homogeneous_degenerate_gate():
    hs = parse_hamiltonian("hamiltonian\nvars: q; p\nH = q*p\n")
    out = check_almost_weighted_homogeneous(hs, (0,), (0,))
    assert isinstance(out, HamiltonianRejected) and out.reason == "degenerate"


def test_weighted_homogeneous_rejects_bad_pair():
    hs = parse_hamiltonian("hamiltonian\nvars: q1,q2; p1,p2\nH = q1*p1 + q2^2*p2\n")
    out = check_almost_weighted_homogeneous(hs, (1, 1), (1, 2))
    assert isinstance(out, HamiltonianRejected)
    assert out.reason == "not_almost_weighted_homogeneous"


def test_pairing_gd(gd_candidate):
    pairing = symplectic_pairing(gd_candidate.balance.structure, 8)
    assert pairing == [(-1, 8), (2, 5)]


def test_pairing_orthogonality_gd_reference_columns():
    J = J_matrix(2)
    cols = [REF_R.column(j) for j in range(4)]
    resonances = (-1, 2, 5, 8)
    for a in range(4):
        for b in range(4):
            if resonances[a] + resonances[b] != 7:
                assert symplectic_product(cols[a], cols[b], J) == 0


def test_pairing_rejects_unpaired_spectrum():
    rs = resonance_structure(RatMatrix([[-1, 0], [0, 3]]))
    out = symplectic_pairing(rs, 8)
    assert isinstance(out, HamiltonianRejected) and out.reason == "unpaired_resonance"


def test_symplectic_normalize_default_columns(gd_candidate):
    pairing = symplectic_pairing(gd_candidate.balance.structure, 8)
    sd = symplectic_normalize(resonance_columns(gd_candidate.balance), 8, pairing)
    J = J_matrix(2)
    assert sd.S.transpose() * J * sd.S == J
    assert sd.column_resonances == (-1, 2, 8, 5)


def test_symplectic_normalize_reference_columns():
    # the published normalization choice: R's columns with the second scaled
    # by 1/3; the conjugate half then comes out entrywise equal to the
    # reference symplectic matrix
    columns = [
        (-1, REF_R.column(0)),
        (2, tuple(x * Q(1, 3) for x in REF_R.column(1))),
        (5, REF_R.column(2)),
        (8, REF_R.column(3)),
    ]
    sd = symplectic_normalize(columns, 8, [(-1, 8), (2, 5)])
    assert sd.S == REF_S


def test_symplectic_normalize_fixes_signs():
    # identity-like resonance basis with J-incompatible signs: one rescale
    columns = [(-1, (Q(0), Q(1))), (2, (Q(1), Q(0)))]
    sd = symplectic_normalize(columns, 2, [(-1, 2)])
    J = J_matrix(1)
    assert sd.S.transpose() * J * sd.S == J
    assert sd.S == RatMatrix([[0, -1], [1, 0]])


def test_symplectic_normalize_merged_block():
    # synthetic self-paired block at lambda = (d-1)/2 = 2 with d = 5
    e = lambda i: tuple(Q(1) if j == i else Q(0) for j in range(4))
    columns = [(-1, e(0)), (2, e(1)), (2, e(3)), (5, e(2))]
    sd = symplectic_normalize(columns, 5, [(-1, 5), (2, 2)])
    J = J_matrix(2)
    assert sd.S.transpose() * J * sd.S == J


def test_symplectic_normalize_rejects_nonzero_pairing():
    # break orthogonality: resonances say the columns must be J-orthogonal
    columns = [(-1, (Q(1), Q(1))), (2, (Q(0), Q(1)))]
    out = symplectic_normalize(columns, 9, [(-1, 9)])  # -1 + 2 != 8
    assert isinstance(out, HamiltonianRejected)


def test_canonical_exchanges_identity_case():
    sd_like = symplectic_normalize([(-1, (Q(1), Q(0))), (2, (Q(0), Q(1)))], 2, [(-1, 2)])
    out = canonical_exchanges(sd_like)
    assert out.exchange_set == ()
    assert out.row_swaps == ()


def test_canonical_exchanges_forced_swap():
    sd = symplectic_normalize([(-1, (Q(0), Q(1))), (2, (Q(1), Q(0)))], 2, [(-1, 2)])
    out = canonical_exchanges(sd)
    assert out.exchange_set == (0,)
    J = J_matrix(1)
    assert out.S.transpose() * J * out.S == J
    assert out.S.entry(0, 0) != 0


def test_canonical_exchanges_gd(gd_candidate):
    pairing = symplectic_pairing(gd_candidate.balance.structure, 8)
    sd = symplectic_normalize(resonance_columns(gd_candidate.balance), 8, pairing)
    out = canonical_exchanges(sd)
    assert out.exchange_set == () and out.row_swaps == ()
    # leading principal minors of the top-left block are nonzero
    A = [[out.S.entry(i, j) for j in range(2)] for i in range(2)]
    assert A[0][0] != 0
    assert A[0][0] * A[1][1] - A[0][1] * A[1][0] != 0


def test_apply_exchanges_preserves_hamiltonian_form():
    rng = random.Random(41)
    names = ("q1", "q2", "p1", "p2")
    for _ in range(6):
        H = MultiPoly.zero()
        for _ in range(5):
            exps = tuple(rng.randrange(3) for _ in names)
            H = H + MultiPoly(names, {exps: rng.randint(-2, 2)})
        hs = HamiltonianSystem(q_symbols=("q1", "q2"), p_symbols=("p1", "p2"), H=H)
        from painleve.hamiltonian import SymplecticData

        # force an exchange on dof 0 and a relabeling swap
        sd = SymplecticData(
            d=0,
            pairing=(),
            column_resonances=(),
            S=RatMatrix.identity(4),
            exchange_set=(0,),
            row_swaps=((0, 1),),
        )
        new_hs, _, _, _ = apply_exchanges(hs, (1, 1), (1, 1), (Q(1),) * 4, sd)
        # the exchanged H generates the transformed equations: check that the
        # new system is the old one conjugated by the linear canonical map
        old = hamiltonian_to_system(hs)
        new = hamiltonian_to_system(new_hs)
        # forward map x_new = E x_old: new q1 = old q2, new q2 = -old p1,
        # new p1 = old p2, new p2 = old q1  (exchange dof 0, then swap dofs)
        new_exprs = {
            "q1": MultiPoly.var("q2"),
            "q2": -MultiPoly.var("p1"),
            "p1": MultiPoly.var("p2"),
            "p2": MultiPoly.var("q1"),
        }
        for new_name, expr_in_old in new_exprs.items():
            i = new.u_symbols.index(new_name)
            # rewrite f_new (a polynomial in new symbols) in old variables
            lhs = new.rhs[i].replace(new_exprs)
            # d/dt of expr_in_old along the old system
            rhs = MultiPoly.zero()
            for j, old_name in enumerate(old.u_symbols):
                rhs = rhs + expr_in_old.partial(old_name) * old.rhs[j]
            assert lhs == rhs, new_name


def test_build_canonical_change_gd(gd_hamiltonian, gd_candidate):
    pairing = symplectic_pairing(gd_candidate.balance.structure, 8)
    sd = canonical_exchanges(
        symplectic_normalize(resonance_columns(gd_candidate.balance), 8, pairing)
    )
    pipe = build_canonical_change(gd_hamiltonian, GD_K, GD_L, GD_C, sd, order=13)
    cov = pipe.change
    names = [pipe.system.u_symbols[i] for i in cov.order]
    assert names == ["q1", "q2", "p2", "p1"]
    rows = {pipe.system.u_symbols[r.index]: r for r in cov.rows}
    assert rows["q2"].exponent(cov.k) == 2 - 4
    assert rows["p2"].exponent(cov.k) == 5 - 3
    assert rows["p1"].exponent(cov.k) == 8 - 5
    assert rows["p1"].rho_factor == Q(-1, 2)
    assert isinstance(pipe.regularization.regularity, Regular)


def test_verify_canonical_gd(gd_hamiltonian, gd_candidate):
    pairing = symplectic_pairing(gd_candidate.balance.structure, 8)
    sd = canonical_exchanges(
        symplectic_normalize(resonance_columns(gd_candidate.balance), 8, pairing)
    )
    pipe = build_canonical_change(gd_hamiltonian, GD_K, GD_L, GD_C, sd, order=13)
    assert isinstance(verify_canonical(pipe.change, 2), Canonical)


def test_plain_triangular_change_is_not_canonical(gd_hamiltonian, gd_candidate):
    # same construction without the -1/k1 factor: the 2-form check must fail
    pairing = symplectic_pairing(gd_candidate.balance.structure, 8)
    sd = canonical_exchanges(
        symplectic_normalize(resonance_columns(gd_candidate.balance), 8, pairing)
    )
    pipe = build_canonical_change(gd_hamiltonian, GD_K, GD_L, GD_C, sd, order=13)
    cov = pipe.change
    last = cov.rows[-1]
    plain_last = VariableRow(
        index=last.index,
        rho_name=last.rho_name,
        rho_factor=Q(1),
        resonance=last.resonance,
        head=last.head,
    )
    import dataclasses

    plain = dataclasses.replace(cov, rows=cov.rows[:-1] + (plain_last,))
    out = verify_canonical(plain, 2)
    assert isinstance(out, CanonicalWitness)


def test_one_dof_canonical(one_dof):
    hs, sys, cand = one_dof
    d = check_almost_weighted_homogeneous(hs, (2,), (3,))
    assert d == 6
    pairing = symplectic_pairing(cand.balance.structure, d)
    assert pairing == [(-1, 6)]
    sd = canonical_exchanges(
        symplectic_normalize(resonance_columns(cand.balance), d, pairing)
    )
    pipe = build_canonical_change(hs, (2,), (3,), (Q(1), Q(-2)), sd, order=12)
    cov = pipe.change
    # the momentum variable carries the -1/k factor at tau^(mu0 - l1) = tau^3
    row = cov.rows[0]
    assert row.rho_factor == Q(-1, 2)
    assert row.exponent(cov.k) == 6 - 3
    assert isinstance(verify_canonical(cov, 1), Canonical)
    nh = new_hamiltonian(pipe.hamiltonian.H, cov, pipe.system.u_symbols, True)
    assert nh.dropped == ()
    assert hamilton_equations_match(nh, pipe)


def test_new_hamiltonian_gd(gd_hamiltonian, gd_candidate):
    pairing = symplectic_pairing(gd_candidate.balance.structure, 8)
    sd = canonical_exchanges(
        symplectic_normalize(resonance_columns(gd_candidate.balance), 8, pairing)
    )
    pipe = build_canonical_change(gd_hamiltonian, GD_K, GD_L, GD_C, sd, order=13)
    nh = new_hamiltonian(pipe.hamiltonian.H, pipe.change, pipe.system.u_symbols, True)
    assert nh.dropped == ()
    assert not nh.regular.is_zero
    assert hamilton_equations_match(nh, pipe)


def test_new_hamiltonian_substitution_mechanics():
    # synthetic monomial change of variable: H = q p pulls back to P1
    cov = ChangeOfVariable(
        tau_name="Q1",
        pivot=0,
        k=(1, 0),
        beta=Q(1),
        order=(0, 1),
        rows=(
            VariableRow(index=1, rho_name="P1", rho_factor=Q(1), resonance=1, head=()),
        ),
        variable_names=("q", "p"),
    )
    H = MultiPoly.var("q") * MultiPoly.var("p")
    nh = new_hamiltonian(H, cov, ("q", "p"), True)
    assert nh.regular == MultiPoly.var("P1")


def test_non_autonomous_hamiltonian_drops_singular_terms():
    hs = parse_hamiltonian("hamiltonian\nvars: q; p\nH = 1/2*p^2 - 2*q^3 + t*q\n")
    sys = hamiltonian_to_system(hs)
    result = analyze_system(sys, bound=5, order=12)
    assert result.verdict == "principal"
    cand = result.principal_candidates()[0]
    d = check_almost_weighted_homogeneous(hs, (2,), (3,))
    assert d == 6
    pairing = symplectic_pairing(cand.balance.structure, d)
    sd = canonical_exchanges(
        symplectic_normalize(resonance_columns(cand.balance), d, pairing)
    )
    c = tuple(x.constant_value() for x in cand.leading)
    pipe = build_canonical_change(hs, (2,), (3,), c, sd, order=12)
    assert isinstance(pipe.regularization.regularity, Regular)
    assert isinstance(verify_canonical(pipe.change, 1), Canonical)
    nh = new_hamiltonian(pipe.hamiltonian.H, pipe.change, pipe.system.u_symbols, False)
    assert nh.dropped != ()  # t q pulls back to singular orders
    # Hamilton's equations of the regular part give the transformed system
    assert hamilton_equations_match(nh, pipe)


def test_henon_heiles_symplectic_structure():
    # integrable cubic two-dof system: the balance with the pole in the
    # second pair has resonances (-1, 1, 4, 6) pairing to d - 1 = 5
    hs = parse_hamiltonian(
        "hamiltonian\nvars: q1,q2; p1,p2\nH = 1/2*p1^2 + 1/2*p2^2 + q1^2*q2 + 2*q2^3\n"
    )
    sys = hamiltonian_to_system(hs)
    result = analyze_system(sys, bound=6)
    assert result.verdict == "principal"
    cand = [c for c in result.principal_candidates() if c.exponents == (2, 2, 3, 3)][0]
    assert cand.structure.resonances == (-1, 1, 4, 6)
    d = check_almost_weighted_homogeneous(hs, (2, 2), (3, 3))
    assert d == 6
    pairing = symplectic_pairing(cand.balance.structure, d)
    assert pairing == [(-1, 6), (1, 4)]
    sd = symplectic_normalize(resonance_columns(cand.balance), d, pairing)
    J = J_matrix(2)
    assert sd.S.transpose() * J * sd.S == J
    # the indicial root here is imaginary (leading coefficient -1 at an even
    # exponent), which is outside the rational-arithmetic scope
    from painleve.regularize import NoRationalRootPivot, regularize

    with pytest.raises(NoRationalRootPivot):
        regularize(cand.balance)


def test_new_hamiltonian_autonomous_singular_part_is_fault():
    cov = ChangeOfVariable(
        tau_name="Q1",
        pivot=0,
        k=(2, 0),
        beta=Q(1),
        order=(0, 1),
        rows=(
            VariableRow(index=1, rho_name="P1", rho_factor=Q(1), resonance=1, head=()),
        ),
        variable_names=("q", "p"),
    )
    H = MultiPoly.var("q")  # pulls back to Q1^-2: singular
    with pytest.raises(AssertionError):
        new_hamiltonian(H, cov, ("q", "p"), True)
