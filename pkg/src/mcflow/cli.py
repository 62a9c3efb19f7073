"""Command line: ``mcflow validate|solve|sweep``.

Exit codes: 0 success, 1 validation failure, 2 solver failure, 3 parse or
usage error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from pathlib import Path

import numpy as np

from .documents import UNITS, DocumentError, Scenario, display_value, read_scenario, to_si, _slot_dimension
from .equations import DomainError
from .model import build_network
from .report import build_report, fmt
from .solver import IllPosedError, SolverConfig, solve_network
from .wellposedness import check_square, count_dofs, jacobian_rank_probe

OK, INVALID, SOLVER_FAILED, PARSE_ERROR = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _load(source: str) -> Scenario:
    return read_scenario(source)


def _validation_text(scenario: Scenario) -> tuple[bool, str]:
    net, bcs = scenario.network, scenario.bcs
    n_eq, n_unk = count_dofs(net, bcs)
    square = check_square(net, bcs)
    head = f"{n_eq} equations, {n_unk} unknowns after {len(bcs)} fixed"
    if not square.ok:
        return False, f"{head}: {square}"
    try:
        probe = jacobian_rank_probe(net, bcs, scenario.guess, scenario.config.min_pivot)
    except DomainError as exc:
        return False, f"{head}: probe state rejected ({exc})"
    if not probe.ok:
        return False, f"{head}: {probe} at probe"
    return True, f"{head}: square, nonsingular at probe (condition ~{probe.condition:.3g})"


def cmd_validate(source: str, drop: list[str] | None = None) -> tuple[int, str]:
    try:
        scenario = _load(source)
        bcs = scenario.bcs
        for label in drop or []:
            idx = scenario.network.registry.index(label)
            if idx not in bcs:
                raise DocumentError(f"{label} is not a boundary condition")
            bcs = bcs.without(idx)
    except (DocumentError, KeyError) as exc:
        return PARSE_ERROR, f"error: {exc}"
    ok, text = _validation_text(scenario._replace(bcs=bcs))
    return (OK if ok else INVALID), text


def _read_guess(path: str, scenario: Scenario) -> dict[str, float]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DocumentError(f"guess file {path}: {exc}") from None
    doc = doc.get("initial_guess", doc)
    out = {}
    for label, q in doc.items():
        if label not in scenario.network.registry:
            raise DocumentError(f"guess file {path}: no slot {label!r}")
        out[label] = to_si(q, _slot_dimension(label), f"guess.{label}")
    return out


def cmd_solve(source: str, *, tol=None, max_iter=None, damping=None, guess: str | None = None,
              fmt_: str = "table") -> tuple[int, str]:
    try:
        scenario = _load(source)
        overrides = {k: v for k, v in (("tol", tol), ("max_iter", max_iter), ("damping", damping)) if v is not None}
        config = dataclasses.replace(scenario.config, **overrides)
        user_guess = dict(scenario.guess or {})
        if guess:
            user_guess.update(_read_guess(guess, scenario))
    except (DocumentError, ValueError) as exc:
        return PARSE_ERROR, f"error: {exc}"
    try:
        result = solve_network(scenario.network, scenario.bcs, config, user_guess or None)
    except IllPosedError as exc:
        return INVALID, f"error: {exc}"
    report = build_report(result)
    text = {"table": report.to_table, "csv": report.to_csv, "json": report.to_json}[fmt_]()
    return (OK if result.converged else SOLVER_FAILED), text


# --- sweeps --------------------------------------------------------------------


def _with_eta_h(scenario: Scenario, coupling_id: str, eta_h: float) -> Scenario:
    net = scenario.network
    nodes = []
    for n in net.nodes.values():
        if n.id == coupling_id:
            params = dataclasses.replace(n.coupling.params, eta_h=eta_h)
            n = dataclasses.replace(n, coupling=dataclasses.replace(n.coupling, params=params))
        nodes.append(n)
    new = build_network(nodes, list(net.links.values()), net.params)
    return scenario._replace(network=new)


def _sweep_target(scenario: Scenario, param: str):
    """Return (setter(value) -> Scenario, dimension) for a sweep parameter."""
    net = scenario.network
    if param == "eta_h" or param.startswith("eta_h["):
        if param == "eta_h":
            cands = [n.id for n in net.couplings() if n.coupling.kind.value == "electrolyser"]
            if len(cands) != 1:
                raise UsageError("eta_h is ambiguous; name the coupling as eta_h[<id>]")
            cid = cands[0]
        else:
            cid = param[len("eta_h["):-1]
        node = net.nodes.get(cid)
        if node is None or node.coupling is None or node.coupling.kind.value != "electrolyser":
            raise UsageError(f"{param}: no electrolyser {cid!r}")
        if node.coupling.params.free:
            raise UsageError(f"{param} is solved for in this network, not a parameter")
        return (lambda v: _with_eta_h(scenario, cid, v)), "dimensionless"
    if param not in net.registry:
        raise UsageError(f"{param}: not a slot of this network")
    idx = net.registry.index(param)
    if idx not in scenario.bcs:
        raise UsageError(f"{param} is not a boundary condition")
    return (lambda v: scenario._replace(bcs=scenario.bcs.with_value(idx, v))), _slot_dimension(param)


def sweep_rows(scenario: Scenario, param: str, values, columns: list[str] | None = None,
               config: SolverConfig | None = None, unit: str | None = None):
    """Header and rows of a sweep; ``values`` are in ``unit`` (SI if None)."""
    setter, dim = _sweep_target(scenario, param)
    factor = 1.0
    if unit is not None:
        if unit not in UNITS:
            raise UsageError(f"unknown unit {unit!r}")
        if UNITS[unit][0] != dim:
            raise UsageError(f"unit {unit!r} does not measure {dim}")
        factor = UNITS[unit][1]
    reg = scenario.network.registry
    if columns is None:
        columns = [s.label for i, s in enumerate(reg) if i not in scenario.bcs]
    for c in columns:
        if c not in reg:
            raise UsageError(f"column {c}: not a slot of this network")
    units = [display_value(c.split("[", 1)[0], 0.0)[1] for c in columns]
    header = [f"{param} ({unit})" if unit else param, "status", "iterations"] + [f"{c} ({u})" for c, u in zip(columns, units)]
    rows = []
    for v in values:
        try:
            sc = setter(float(v) * factor)
            result = solve_network(sc.network, sc.bcs, config or sc.config, sc.guess)
            status, its = result.status.value, result.iterations
            vals = [fmt(display_value(c.split("[", 1)[0], result.value(c))[0]) if result.converged else ""
                    for c in columns]
        except (IllPosedError, ValueError) as exc:
            status, its, vals = f"Error: {exc}", 0, [""] * len(columns)
        rows.append([fmt(float(v)), status, its] + vals)
    return header, rows


def cmd_sweep(source: str, param: str, values=None, value_range=None, unit: str | None = None,
              columns: list[str] | None = None) -> tuple[int, str]:
    try:
        scenario = _load(source)
    except DocumentError as exc:
        return PARSE_ERROR, f"error: {exc}"
    if values is None and value_range is None:
        return PARSE_ERROR, "error: give --values or --range"
    if value_range is not None:
        start, stop, num = value_range
        values = list(np.linspace(float(start), float(stop), int(num))) if int(num) > 0 else []
    try:
        header, rows = sweep_rows(scenario, param, values, columns, unit=unit)
    except (UsageError, KeyError) as exc:
        return INVALID, f"error: {exc}"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return OK, buf.getvalue()


# --- argument parsing ------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(PARSE_ERROR, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mcflow", description="Load flow for coupled electricity, gas and heat networks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="count equations and unknowns, probe the Jacobian")
    v.add_argument("file", help="document path or shipped fixture name")
    v.add_argument("--drop", action="append", metavar="SLOT", help="remove a boundary condition first")

    s = sub.add_parser("solve", help="solve and print a report")
    s.add_argument("file")
    s.add_argument("--tol", type=float)
    s.add_argument("--max-iter", type=int)
    s.add_argument("--damping", type=float)
    s.add_argument("--guess", metavar="FILE", help="JSON object of slot label -> value")
    s.add_argument("--format", choices=["table", "csv", "json"], default="table")

    w = sub.add_parser("sweep", help="solve once per parameter value, print CSV")
    w.add_argument("file")
    w.add_argument("--param", required=True, help="boundary slot label, or eta_h / eta_h[<coupling>]")
    g = w.add_mutually_exclusive_group(required=True)
    g.add_argument("--values", type=_floats, help="comma-separated values")
    g.add_argument("--range", nargs=3, metavar=("START", "STOP", "NUM"), type=float)
    w.add_argument("--unit", help="unit of the given values")
    w.add_argument("--columns", type=lambda t: [c for c in t.split(",") if c], help="comma-separated slot labels")
    return p


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "validate":
        code, text = cmd_validate(args.file, args.drop)
    elif args.command == "solve":
        code, text = cmd_solve(args.file, tol=args.tol, max_iter=args.max_iter, damping=args.damping,
                               guess=args.guess, fmt_=args.format)
    else:
        code, text = cmd_sweep(args.file, args.param, args.values, args.range, args.unit, args.columns)
    stream = sys.stdout if code == OK or args.command == "solve" and code == SOLVER_FAILED else sys.stderr
    stream.write(text if text.endswith("\n") else text + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
