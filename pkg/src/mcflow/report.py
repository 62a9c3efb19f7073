"""Solution reports: slot table, derived quantities and solver diagnostics."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .documents import UNITS, display_value
from .equations import heat_pipe_temperature_out, line_power_flows
from .model import GasPipe, HeatPipe, TransmissionLine
from .solver import SolveResult

SIG_DIGITS = 12


@dataclass(frozen=True)
class Row:
    symbol: str
    location: str
    value: float
    unit: str
    boundary: bool = False

    @property
    def label(self) -> str:
        return f"{self.symbol}[{self.location}]"


@dataclass
class SolutionReport:
    slots: list[Row]
    derived: list[Row]
    diagnostics: dict
    residual_history: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        def rows(rs):
            return [{"symbol": r.symbol, "location": r.location, "value": r.value, "unit": r.unit,
                     "boundary": r.boundary} for r in rs]
        return {"slots": rows(self.slots), "derived": rows(self.derived),
                "diagnostics": self.diagnostics, "residual_history": self.residual_history}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, allow_nan=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["section", "symbol", "location", "value", "unit", "boundary"])
        for section, rows in (("slot", self.slots), ("derived", self.derived)):
            for r in rows:
                w.writerow([section, r.symbol, r.location, fmt(r.value), r.unit, int(r.boundary)])
        return buf.getvalue()

    def to_table(self) -> str:
        lines = []
        d = self.diagnostics
        lines.append(f"status: {d['status']}  iterations: {d['iterations']}  |F|: {d['residual_norm']:.3e}")
        if d.get("message"):
            lines.append(f"message: {d['message']}")
        lines.append("")
        lines.append(_aligned(["slot", "value", "unit", ""],
                              [[r.label, fmt(r.value, 8), r.unit, "*" if r.boundary else ""] for r in self.slots]))
        if self.derived:
            lines.append("")
            lines.append(_aligned(["derived", "where", "value", "unit"],
                                  [[r.symbol, r.location, fmt(r.value, 8), r.unit] for r in self.derived]))
        lines.append("")
        lines.append("* boundary condition")
        return "\n".join(lines) + "\n"


def fmt(v: float, digits: int = SIG_DIGITS) -> str:
    return f"{v:.{digits}g}"


def _aligned(header, rows) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    out = ["  ".join(str(c).ljust(w) for c, w in zip(header, widths)).rstrip()]
    out.append("  ".join("-" * w for w in widths))
    out += ["  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    return "\n".join(out)


def _derived(result: SolveResult) -> list[Row]:
    net = result.system.network
    get = result.value
    rows: list[Row] = []

    def add(name, where, value, kind):
        v, unit = display_value(kind, value)
        rows.append(Row(name, where, v, unit))

    for lid, link in net.links.items():
        k = link.kind
        if isinstance(k, TransmissionLine):
            i, j = link.start, link.end
            ps, qs, pr, qr = line_power_flows(get(f"V[{i}]"), get(f"delta[{i}]"), get(f"V[{j}]"), get(f"delta[{j}]"), k.g, k.b)
            add("P send", lid, ps, "P")
            add("Q send", lid, qs, "Q")
            add("P receive", lid, pr, "P")
            add("Q receive", lid, qr, "Q")
            add("line loss", lid, ps + pr, "P")
        elif isinstance(k, GasPipe):
            add("gas dp", lid, get(f"p[{link.start}]") - get(f"p[{link.end}]"), "p")
        elif isinstance(k, HeatPipe):
            hp = net.params.heat
            add("heat dp", lid, get(f"p[{link.start}]") - get(f"p[{link.end}]"), "p")
            m = get(f"m[{lid}]")
            if m < 0:
                continue
            t_s, t_r = get(f"T_s[{lid}]"), get(f"T_r[{lid}]")
            s_out = heat_pipe_temperature_out(t_s, m, k.lam, k.length, hp.c_p, hp.T_a)
            r_out = heat_pipe_temperature_out(t_r, m, k.lam, k.length, hp.c_p, hp.T_a)
            add("supply end T", lid, s_out, "T_s")
            add("supply dT", lid, t_s - s_out, "T_s")
            add("return end T", lid, r_out, "T_r")
            add("return dT", lid, t_r - r_out, "T_r")
    return rows


def build_report(result: SolveResult) -> SolutionReport:
    """Every registry slot once, in registry order, in display units."""
    fixed = result.system.fixed
    slots = []
    for i, slot in enumerate(result.system.registry):
        v, unit = display_value(slot.kind, float(result.state[i]))
        slots.append(Row(slot.kind, slot.location, v, unit, i in fixed))
    derived = _derived(result) if result.converged else []
    diag = {
        "status": result.status.value,
        "iterations": result.iterations,
        "residual_norm": result.residual_norm,
        "message": result.message,
        "equations": result.system.shape[0],
        "unknowns": result.system.shape[1],
    }
    diag.update({k: str(v) for k, v in result.verdicts.items()})
    return SolutionReport(slots, derived, diag, list(result.residual_history))


def parse_csv_report(text: str) -> dict[str, float]:
    """Slot values (SI) from :meth:`SolutionReport.to_csv` output."""
    out = {}
    for row in csv.DictReader(io.StringIO(text)):
        if row["section"] == "slot":
            out[f"{row['symbol']}[{row['location']}]"] = float(row["value"]) * UNITS[row["unit"]][1]
    return out


def parse_json_report(text: str) -> dict[str, float]:
    doc = json.loads(text)
    return {f"{r['symbol']}[{r['location']}]": r["value"] * UNITS[r["unit"]][1] for r in doc["slots"]}
