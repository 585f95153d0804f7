"""Command-line front end.

    painleve test FILE        [--bound N] [--order M] [--exponents ...] [--leading ...] [--json]
    painleve regularize FILE  [--balance-index I] [--order M] [--json]
    painleve hamiltonian FILE [--balance-index I] [--order M] [--json]

Exit codes: 0 = at least one principal balance (and, for the deeper
commands, the construction succeeded), 1 = no principal balance or a
structural rejection, 2 = usage or parse error.  Reports go to stdout,
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys

from .algebra import MultiPoly
from .core import (
    AnalysisResult,
    CandidateReport,
    analyze_system,
)
from .hamiltonian import (
    Canonical,
    HamiltonianRejected,
    build_canonical_change,
    canonical_exchanges,
    check_almost_weighted_homogeneous,
    hamilton_equations_match,
    new_hamiltonian,
    resonance_columns,
    symplectic_normalize,
    symplectic_pairing,
    verify_canonical,
)
from .model import (
    BalanceSpec,
    HamiltonianSystem,
    ODESystem,
    ParseError,
    hamiltonian_to_system,
    jsonable,
    parse_input,
    serialize_report,
)
from .regularize import (
    NoRationalRootPivot,
    Regular,
    Regularization,
    regularize,
)

DT_DISPLAY = "(t-t0)"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="painleve",
        description="Painleve test and singularity regularization for polynomial ODE systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("test", "regularize", "hamiltonian"):
        p = sub.add_parser(name)
        p.add_argument("file", help="input file (system or hamiltonian grammar)")
        p.add_argument("--bound", type=int, default=10, help="exponent search bound (default 10)")
        p.add_argument("--order", type=int, default=None, help="series truncation order")
        p.add_argument("--exponents", default=None, help="comma-separated leading exponents")
        p.add_argument("--leading", default=None, help="comma-separated leading coefficients")
        p.add_argument("--json", action="store_true", help="emit a JSON report")
        if name in ("regularize", "hamiltonian"):
            p.add_argument(
                "--balance-index",
                type=int,
                default=0,
                help="which principal balance to use (default 0)",
            )
    return parser


class UsageError(ValueError):
    pass


def _parse_spec(args, system: ODESystem) -> BalanceSpec | None:
    from .model import _parse_expr

    exponents = None
    leading = None
    if args.exponents is not None:
        try:
            exponents = tuple(int(x) for x in args.exponents.split(","))
        except ValueError as err:
            raise UsageError(f"bad --exponents: {err}")
        if len(exponents) != system.n:
            raise UsageError(f"--exponents needs {system.n} entries")
    if args.leading is not None:
        # each entry is a rational or a polynomial in the declared parameters
        try:
            leading = tuple(
                _parse_expr(chunk, 0, set(system.param_symbols))
                for chunk in args.leading.split(",")
            )
        except ParseError as err:
            raise UsageError(f"bad --leading: {err}")
        if len(leading) != system.n:
            raise UsageError(f"--leading needs {system.n} entries")
    if exponents is None and leading is None and not system.param_symbols:
        return None
    if leading is not None and exponents is None:
        raise UsageError("--leading requires --exponents")
    return BalanceSpec(
        exponents=exponents,
        leading=leading,
        order=args.order,
        parameter_names=system.param_symbols,
    )


def _validate(args) -> None:
    if args.bound < 1:
        raise UsageError("--bound must be at least 1")
    if args.order is not None and args.order < 2:
        raise UsageError("--order must be at least 2")


# ----------------------------------------------------------------------
# report builders


def candidate_report(sys: ODESystem, cand: CandidateReport) -> dict:
    report: dict = {"verdict": cand.verdict, "exponents": list(cand.exponents)}
    if cand.leading is not None:
        report["leading"] = [str(c) for c in cand.leading]
    if cand.K is not None:
        report["kowalevskian"] = cand.K
    if cand.structure is not None:
        report["resonances"] = list(cand.structure.resonances)
    if cand.principal is not None:
        report["resonance_matrix"] = [
            [str(entry) for entry in row] for row in cand.principal.resonance_matrix
        ]
        report["resonance_matrix_det"] = str(cand.principal.det)
    if cand.balance is not None:
        report["balance_coefficients"] = {
            name: cand.balance.series(i).rename_var(DT_DISPLAY)
            for i, name in enumerate(sys.u_symbols)
        }
        report["parameters"] = [
            {"name": nm, "resonance": r} for nm, r in cand.balance.parameters
        ]
    if cand.detail is not None:
        report["detail"] = _detail_json(cand.detail)
    return report


def _detail_json(detail) -> object:
    from dataclasses import asdict, is_dataclass

    if is_dataclass(detail) and not isinstance(detail, type):
        return jsonable(
            {"kind": type(detail).__name__, **{k: v for k, v in asdict(detail).items()}}
        )
    return jsonable(str(detail))


def change_of_variable_report(reg: Regularization, sys: ODESystem) -> dict:
    cov = reg.change
    rows = {
        sys.u_symbols[cov.pivot]: [[-cov.k[cov.pivot], "1"]],
    }
    for row in cov.rows:
        entries = [[o, str(p)] for o, p in row.head]
        rho = MultiPoly.var(row.rho_name) * row.rho_factor
        entries.append([row.exponent(cov.k), str(rho)])
        rows[sys.u_symbols[row.index]] = entries
    return {
        "pivot_order": [sys.u_symbols[i] for i in cov.order],
        "root_beta": str(cov.beta),
        "tau": cov.tau_name,
        "new_variables": list(cov.new_names()),
        "rows": rows,
    }


def transformed_system_report(reg: Regularization) -> dict:
    ts = reg.transformed
    return {
        "variables": list(ts.names),
        "right_sides": {
            f"{name}'": g for name, g in zip(ts.names, ts.g)
        },
        "min_exponents": list(ts.min_exponents),
        "regular": isinstance(reg.regularity, Regular),
    }


def transformed_balance_report(reg: Regularization) -> dict:
    tb = reg.transformed_balance
    return {
        "tau_series": tb.tau.rename_var(DT_DISPLAY),
        "rho_series": {nm: s.rename_var(DT_DISPLAY) for nm, s in tb.rho.items()},
        "initial_values": {nm: str(p) for nm, p in tb.initial_values.items()},
        "tau_derivative_at_t0": str(reg.normalized.beta),
    }


# ----------------------------------------------------------------------
# pretty printing


def _print_candidate(sys: ODESystem, cand: CandidateReport, out) -> None:
    c_text = (
        "(" + ", ".join(str(x) for x in cand.leading) + ")" if cand.leading else "?"
    )
    print(f"candidate k={tuple(cand.exponents)} c={c_text}", file=out)
    print(f"  verdict: {cand.verdict}", file=out)
    if cand.structure is not None:
        print(f"  resonances: {list(cand.structure.resonances)}", file=out)
    if cand.balance is not None:
        for i, name in enumerate(sys.u_symbols):
            series = cand.balance.series(i).rename_var(DT_DISPLAY)
            print(f"  {name} = {series}", file=out)
    if cand.detail is not None:
        print(f"  detail: {_detail_json(cand.detail)}", file=out)


def _print_regularization(sys: ODESystem, reg: Regularization, out) -> None:
    cov = reg.change
    print(f"pivot order: {[sys.u_symbols[i] for i in cov.order]}", file=out)
    print(f"tau'({cov.tau_name}) at t0: {cov.beta}", file=out)
    print("change of variable:", file=out)
    print(f"  {sys.u_symbols[cov.pivot]} = {cov.tau_name}^{-cov.k[cov.pivot]}", file=out)
    for row in cov.rows:
        parts = []
        for o, p in row.head:
            body = str(p) if p.is_constant else f"({p})"
            parts.append(f"{body}*{cov.tau_name}^{o}")
        rho = MultiPoly.var(row.rho_name) * row.rho_factor
        parts.append(f"({rho})*{cov.tau_name}^{row.exponent(cov.k)}")
        print(f"  {sys.u_symbols[row.index]} = " + " + ".join(parts), file=out)
    print("transformed system:", file=out)
    for name, g in zip(reg.transformed.names, reg.transformed.g):
        print(f"  {name}' = {g}", file=out)
    regular = isinstance(reg.regularity, Regular)
    print(f"regular: {regular}", file=out)


# ----------------------------------------------------------------------
# commands


def _analyze(args) -> tuple[ODESystem, HamiltonianSystem | None, AnalysisResult]:
    with open(args.file, "r", encoding="utf-8") as fh:
        text = fh.read()
    parsed = parse_input(text)
    if isinstance(parsed, HamiltonianSystem):
        hs = parsed
        system = hamiltonian_to_system(parsed)
    else:
        hs = None
        system = parsed
    spec = _parse_spec(args, system)
    result = analyze_system(system, bound=args.bound, order=args.order, spec=spec)
    return system, hs, result


def _pick_principal(result: AnalysisResult, index: int) -> CandidateReport:
    principal = result.principal_candidates()
    if not principal:
        raise LookupError("no principal balance found")
    if not 0 <= index < len(principal):
        raise UsageError(
            f"--balance-index {index} out of range (found {len(principal)} principal balances)"
        )
    return principal[index]


def cmd_test(args) -> int:
    system, _, result = _analyze(args)
    reports = [candidate_report(system, cand) for cand in result.candidates]
    top: dict = {"verdict": result.verdict}
    principal = result.principal_candidates()
    if principal:
        top.update(candidate_report(system, principal[0]))
        top["verdict"] = result.verdict
    top["balances"] = reports
    if args.json:
        print(serialize_report(top))
    else:
        print(f"verdict: {result.verdict}")
        for cand in result.candidates:
            _print_candidate(system, cand, sys.stdout)
    return 0 if principal else 1


def cmd_regularize(args) -> int:
    system, _, result = _analyze(args)
    try:
        cand = _pick_principal(result, args.balance_index)
    except LookupError as err:
        print(f"error: {err} (verdict {result.verdict})", file=sys.stderr)
        return 1
    assert cand.balance is not None
    try:
        reg = regularize(cand.balance)
    except NoRationalRootPivot as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    report = candidate_report(system, cand)
    report["change_of_variable"] = change_of_variable_report(reg, system)
    report["transformed_system"] = transformed_system_report(reg)
    report["transformed_balance"] = transformed_balance_report(reg)
    regular = isinstance(reg.regularity, Regular)
    if args.json:
        print(serialize_report(report))
    else:
        _print_candidate(system, cand, sys.stdout)
        _print_regularization(system, reg, sys.stdout)
    return 0 if regular else 1


def cmd_hamiltonian(args) -> int:
    system, hs, result = _analyze(args)
    if hs is None:
        print("error: hamiltonian command requires a hamiltonian input file", file=sys.stderr)
        return 2
    try:
        cand = _pick_principal(result, args.balance_index)
    except LookupError as err:
        print(f"error: {err} (verdict {result.verdict})", file=sys.stderr)
        return 1
    assert cand.balance is not None and cand.leading is not None
    n = hs.n_dof
    k = tuple(cand.exponents[:n])
    l = tuple(cand.exponents[n:])
    if not all(c.is_constant for c in cand.leading):
        print("error: canonical construction needs rational leading data", file=sys.stderr)
        return 1
    c = tuple(x.constant_value() for x in cand.leading)

    report = candidate_report(system, cand)
    d = check_almost_weighted_homogeneous(hs, k, l)
    if isinstance(d, HamiltonianRejected):
        report["hamiltonian"] = {"rejected": jsonable({"reason": d.reason, "detail": str(d.detail)})}
        _emit(args, report, f"rejected: {d.reason} ({d.detail})")
        return 1
    pairing = symplectic_pairing(cand.balance.structure, d)
    if isinstance(pairing, HamiltonianRejected):
        report["hamiltonian"] = {
            "d": d,
            "rejected": jsonable({"reason": pairing.reason, "detail": str(pairing.detail)}),
        }
        _emit(args, report, f"rejected: {pairing.reason} ({pairing.detail})")
        return 1
    sd = symplectic_normalize(resonance_columns(cand.balance), d, pairing)
    if isinstance(sd, HamiltonianRejected):
        report["hamiltonian"] = {
            "d": d,
            "pairing": [list(p) for p in pairing],
            "rejected": jsonable({"reason": sd.reason, "detail": str(sd.detail)}),
        }
        _emit(args, report, f"rejected: {sd.reason}")
        return 1
    sd = canonical_exchanges(sd)
    try:
        pipe = build_canonical_change(hs, k, l, c, sd, order=cand.balance.order)
    except NoRationalRootPivot as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    reg = pipe.regularization
    canonical = verify_canonical(pipe.change, n)
    nh = new_hamiltonian(pipe.hamiltonian.H, pipe.change, pipe.system.u_symbols, hs.autonomous)
    sub = {
        "d": d,
        "pairing": [list(p) for p in pairing],
        "S": sd.S,
        "exchange_set": list(sd.exchange_set),
        "row_swaps": [list(s) for s in sd.row_swaps],
        "canonical": isinstance(canonical, Canonical),
        "new_hamiltonian": str(nh.regular),
        "dropped_singular": [[o, str(p)] for o, p in nh.dropped],
    }
    if hs.autonomous:
        sub["hamilton_equations_match"] = hamilton_equations_match(nh, pipe)
    report["change_of_variable"] = change_of_variable_report(reg, pipe.system)
    report["transformed_system"] = transformed_system_report(reg)
    report["transformed_balance"] = transformed_balance_report(reg)
    report["hamiltonian"] = sub
    regular = isinstance(reg.regularity, Regular)
    ok = regular and isinstance(canonical, Canonical)
    if args.json:
        print(serialize_report(report))
    else:
        _print_candidate(pipe.system, cand, sys.stdout)
        print(f"d = {d}; pairing {pairing}; exchanges {list(sd.exchange_set)}", file=sys.stdout)
        print(f"symplectic S = {sd.S}", file=sys.stdout)
        _print_regularization(pipe.system, reg, sys.stdout)
        print(f"canonical: {isinstance(canonical, Canonical)}", file=sys.stdout)
        print(f"new hamiltonian: {nh.regular}", file=sys.stdout)
        if nh.dropped:
            print(f"dropped singular terms: {[[o, str(p)] for o, p in nh.dropped]}")
    return 0 if ok else 1


def _emit(args, report: dict, message: str) -> None:
    if args.json:
        print(serialize_report(report))
    else:
        print(message)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return 2 if err.code not in (0, None) else 0
    try:
        _validate(args)
        if args.command == "test":
            return cmd_test(args)
        if args.command == "regularize":
            return cmd_regularize(args)
        if args.command == "hamiltonian":
            return cmd_hamiltonian(args)
        raise UsageError(f"unknown command {args.command}")
    except (UsageError, ParseError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
