from typing import List, Optional

from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from reports.models import (
    AnalysisReport,
    ApproximationBatch,
    CmDriverRecord,
    SearchRecord,
    SelftestRecord,
    StructureRecord,
    SuitabilityRecord,
    VerificationRecord,
)


def _mark(ok: bool) -> str:
    return "[green]pass[/green]" if ok else "[red]fail[/red]"


def banner(console: Console, title: str) -> None:
    console.print(Panel(Text(title, style="bold blue"), expand=False))


def _structure_rows(table: Table, structure: Optional[StructureRecord]) -> None:
    if structure is None:
        return
    evidence = structure.evidence
    table.add_row("Status", structure.status)
    table.add_row("E(Q_p)", f"Z_{structure.prime} x Z/{structure.finite_part}Z" if structure.procyclic else "-")
    table.add_row("|E/E1|", str(structure.quotient_order))
    table.add_row("Working model", f"{evidence.get('working_model')} (scaled by p^{evidence.get('scaling_exponent')})")
    if structure.generator is not None:
        table.add_row("Generator", f"({', '.join(structure.generator)})")
    sample = evidence.get("quotient_sample")
    if sample:
        table.add_row("Quotient sample", f"{sample['cosets_found']} cosets from {sample['swept_abscissae']} abscissae"
                                         f"{'' if sample['exact'] else ' (lower bound)'}")
    for key in ("reason", "witness", "p_torsion", "generator_search"):
        if key in structure.evidence:
            table.add_row(key.replace("_", " ").capitalize(), str(structure.evidence[key]))


def print_analysis(console: Console, report: AnalysisReport) -> None:
    banner(console, f"{report.curve} at p = {report.config.p}")
    table = Table(show_header=False, box=box.SIMPLE)
    table.add_column("Field", style="cyan")
    table.add_column("Value")
    reduction = report.reduction
    table.add_row("Reduction", reduction.kind)
    table.add_row("Kodaira", reduction.kodaira)
    table.add_row("Component order m", str(reduction.component_order))
    table.add_row("|Ẽ_ns(F_p)|", str(reduction.residue_count))
    table.add_row("v(Δ)", str(report.discriminant_valuation))
    _structure_rows(table, report.structure)
    console.print(table)

    if report.classes:
        classes = Table(title="Twist classes", box=box.ROUNDED)
        classes.add_column("d", justify="right")
        classes.add_column("Status")
        classes.add_column("M", justify="right")
        classes.add_column("|E/E1|", justify="right")
        classes.add_column("Generator")
        for entry in report.classes:
            if entry.structure is None:
                classes.add_row(str(entry.representative), f"[red]{entry.error}[/red]", "", "", "")
                continue
            s = entry.structure
            generator = f"({', '.join(s.generator)})" if s.generator else "-"
            classes.add_row(str(entry.representative), s.status, str(s.finite_part), str(s.quotient_order), generator)
        console.print(classes)


def print_suitability(console: Console, record: SuitabilityRecord) -> None:
    banner(console, f"Suitable twists of {record.curve} at p = {record.config.p}")
    table = Table(box=box.ROUNDED)
    table.add_column("Class d0", justify="right")
    table.add_column("c")
    table.add_column("Generator on c y^2 = f(x)")
    table.add_column("j", justify="right")
    table.add_column("Verified")
    for entry in record.classes:
        if entry.error:
            table.add_row(str(entry.d0), "-", f"[red]{entry.error}[/red]", "-", _mark(False))
        else:
            table.add_row(str(entry.d0), entry.c, f"({', '.join(entry.generator)})", str(entry.j),
                          _mark(entry.verified))
    console.print(table)
    console.print(f"Suitable: {_mark(record.suitable)}")


def print_search(console: Console, record: SearchRecord) -> None:
    banner(console, f"Curves with procyclic twists at p = {record.config.p}")
    table = Table(box=box.ROUNDED)
    table.add_column("Curve")
    table.add_column("Kodaira")
    table.add_column("j-invariant")
    table.add_column("Classes")
    for hit in record.curves:
        table.add_row(hit.curve, hit.kodaira, hit.j_invariant, ", ".join(hit.classes))
    console.print(table)


def print_approximations(console: Console, batch: ApproximationBatch) -> None:
    banner(console, f"Approximations on Y at p = {batch.config.p}, k = {batch.config.k}")
    table = Table(box=box.ROUNDED)
    table.add_column("Target")
    table.add_column("c")
    table.add_column("n1", justify="right")
    table.add_column("n2", justify="right")
    table.add_column("Distance")
    for result in batch.results:
        target = result.target[0] if result.seed is None else f"seed:{result.seed}"
        table.add_row(target, result.c, str(result.n1), str(result.n2), f"p^-{result.achieved}")
    console.print(table)
    for failure in batch.failures:
        console.print(failure, style="red")


def print_verification(console: Console, record: VerificationRecord) -> None:
    table = Table(show_header=False, box=box.SIMPLE)
    table.add_column("Check", style="cyan")
    table.add_column("Result")
    for name, ok in record.checks.items():
        table.add_row(name.replace("_", " "), _mark(ok))
    if record.achieved is not None:
        table.add_row("distance", f"p^-{record.achieved}")
    console.print(table)
    if record.detail:
        console.print(record.detail, style="yellow")
    console.print(f"Certificate: {_mark(record.passed)}")


def print_checks(console: Console, title: str, rows: List[SelftestRecord]) -> None:
    banner(console, title)
    table = Table(box=box.ROUNDED)
    table.add_column("Check")
    table.add_column("Result")
    table.add_column("Detail")
    table.add_column("Seconds", justify="right")
    for row in rows:
        table.add_row(row.name, _mark(row.passed), row.detail, f"{row.seconds:.2f}")
    console.print(table)


def print_cm_driver(console: Console, record: CmDriverRecord) -> None:
    banner(console, f"y^2 = x^3 + x at p = {record.prime}")
    table = Table(box=box.ROUNDED)
    table.add_column("Check")
    table.add_column("Result")
    table.add_column("Detail")
    for check in record.checks:
        table.add_row(check.name, _mark(check.passed), check.detail)
    console.print(table)
    for rep, label in record.kodaira.items():
        console.print(f"Kodaira type of the twist by {rep}: {label}", style="dim")
