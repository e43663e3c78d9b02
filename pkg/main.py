#!/usr/bin/env python3

import functools
import logging
import sys

import click
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler

from elliptic import CurveError, parse_curve
from kummer_surface import ApproximationError, SurfaceError, cm_driver, sample_y_point
from localdata import ReductionError
from padic_core import PadicError
from qp_structure import StructureError, find_topological_generator, qp_group_structure
from reports import render
from reports.models import (
    CmDriverRecord,
    GeneratorRecord,
    RunConfig,
    SearchHitRecord,
    SearchRecord,
    SuitabilityRecord,
)
from reports.selftest import run_selftest
from reports.services import (
    analyze_curve,
    approximate_targets,
    config_curve,
    emit_json,
    environment_defaults,
    export_csv,
    load_certificate,
    run_tasks,
    verify_record,
)
from suitability import SuitabilityError, check_suitable_twists, search_procyclic_curves

console = Console()
err_console = Console(stderr=True)

EXIT_INVALID = 2
EXIT_VERIFY_FAILED = 5
DOMAIN_ERRORS = (PadicError, CurveError, ReductionError, StructureError, SuitabilityError,
                 SurfaceError, ApproximationError)


def setup_logging(verbose: bool, level: str) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else getattr(logging, level, logging.WARNING),
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def guarded(command):
    """Map domain exceptions to exit codes."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        verbose = ctx.obj.get("verbose", False) if ctx.obj else False
        try:
            return command(*args, **kwargs)
        except ApproximationError as e:
            err_console.print(f"Approximation failed at stage '{e.stage}': {e.message}", style="red bold")
            sys.exit(e.exit_code)
        except DOMAIN_ERRORS as e:
            err_console.print(f"Error: {e.message}", style="red bold")
            sys.exit(e.exit_code)
        except ValidationError as e:
            err_console.print(f"Invalid input: {e}", style="red bold")
            sys.exit(EXIT_INVALID)
        except click.ClickException:
            raise
        except KeyboardInterrupt:
            err_console.print("\nOperation cancelled by user.", style="yellow")
            sys.exit(1)
        except Exception as e:
            err_console.print(f"Unexpected error: {e}", style="red bold")
            if verbose:
                import traceback
                err_console.print(traceback.format_exc(), style="red dim")
            sys.exit(1)
    return wrapper


def make_config(command: str, curve_words=()) -> RunConfig:
    """RunConfig from the global options and an optional 'a=<rat> b=<rat>' curve."""
    options = click.get_current_context().obj
    a = b = None
    if curve_words:
        curve = parse_curve(" ".join(curve_words))
        a, b = str(curve.a), str(curve.b)
    p = options["p"]
    if p is None:
        raise click.UsageError("a prime is required: pass --p")
    return RunConfig(command=command, a=a, b=b, p=p, precision=options["precision"], k=options["k"],
                     seed=options["seed"], json_output=options["json"], jobs=options["jobs"])


def emit(record, printer) -> None:
    options = click.get_current_context().obj
    if options["json"]:
        click.echo(emit_json(record))
    else:
        printer(console, record)


@click.group()
@click.option('--p', 'prime', type=int, help='The prime p')
@click.option('--prec', type=int, help='Working p-adic precision N (or set KUMMER_PRECISION)')
@click.option('--k', 'k', type=int, default=3, show_default=True, help='Target exponent k')
@click.option('--seed', type=int, help='Seed for sampled data (or set KUMMER_SEED)')
@click.option('--json', 'json_output', is_flag=True, help='Emit JSON instead of tables')
@click.option('--jobs', type=int, help='Worker threads for independent tasks (or set KUMMER_JOBS)')
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose output')
@click.pass_context
def cli(ctx, prime, prec, k, seed, json_output, jobs, verbose):
    """
    Procyclicity, suitable twists and rational approximation on the Kummer
    surface z^2 = f(x) f(y) of y^2 = x^3 + ax + b.

    Examples:
    \b
        # Structure of E(Q_11) and of its twists
        python main.py --p 11 analyze a=1 b=0 --all-classes

        # Approximate a sampled point of Y to p^-3 and check the certificate
        python main.py --p 11 --json approximate a=1 b=0 --target seed:7 > cert.json
        python main.py verify cert.json
    """
    defaults = environment_defaults()
    setup_logging(verbose, defaults["log_level"])
    ctx.obj = {
        "p": prime,
        "precision": prec or defaults["precision"],
        "k": k,
        "seed": seed if seed is not None else defaults["seed"],
        "json": json_output,
        "jobs": jobs or defaults["jobs"],
        "verbose": verbose,
        "slack": defaults["slack"],
        "height_budget": defaults["height_budget"],
    }


@cli.command()
@click.argument('curve', nargs=-1, required=True)
@click.option('--all-classes', is_flag=True, help='Also analyze the twist by every square class')
@guarded
def analyze(curve, all_classes):
    """Reduction data and E(Q_p) structure of a curve."""
    config = make_config("analyze", curve)
    emit(analyze_curve(config, all_classes), render.print_analysis)


@cli.command()
@click.argument('curve', nargs=-1, required=True)
@guarded
def generator(curve):
    """Certified topological generator of E(Q_p), on the working model."""
    config = make_config("generator", curve)
    structure = qp_group_structure(config_curve(config))
    record = GeneratorRecord.from_certificate(find_topological_generator(structure.working_model, structure))
    if config.json_output:
        click.echo(emit_json(record))
    else:
        console.print(f"G = ({', '.join(record.point)}) on {structure.working_model.literal()}")
        console.print(f"|E/E1| = {record.quotient_order}, v(log(Q·G)) = {record.log_valuation}", style="dim")


@cli.command()
@click.argument('curve', nargs=-1, required=True)
@click.option('--output', help='Output CSV file path')
@guarded
def suitable(curve, output):
    """Suitable-twist certificates for every square class."""
    config = make_config("suitable", curve)
    report = check_suitable_twists(config_curve(config), config.p, config.k, config.precision)
    record = SuitabilityRecord.from_report(config, report)
    emit(record, render.print_suitability)
    if output:
        export_csv([entry.model_dump(by_alias=True) for entry in record.classes], output)
    if not record.suitable:
        sys.exit(SuitabilityError.exit_code)


@cli.command()
@click.option('--count', type=int, default=3, show_default=True, help='Number of curves to find')
@click.option('--output', help='Output CSV file path')
@guarded
def search(count, output):
    """Small curves whose twists are all procyclic at p."""
    config = make_config("search")
    hits = search_procyclic_curves(config.p, count, config.precision)
    record = SearchRecord(config=config, count=count, curves=[SearchHitRecord.from_hit(hit) for hit in hits])
    emit(record, render.print_search)
    if output:
        export_csv([hit.model_dump() for hit in record.curves], output)


@cli.command()
@click.argument('curve', nargs=-1, required=True)
@click.option('--target', 'targets', multiple=True, required=True,
              help="Target on Y: '(xi, eta, zeta)' with p-adic literals, or 'seed:<n>'")
@guarded
def approximate(curve, targets):
    """Rational points of Y within p^-k of the targets, with certificates."""
    config = make_config("approximate", curve)
    options = click.get_current_context().obj
    batch = approximate_targets(config, list(targets), options["slack"], options["height_budget"])
    if config.json_output and len(batch.results) == 1 and not batch.failures:
        click.echo(emit_json(batch.results[0]))
    else:
        emit(batch, render.print_approximations)
    if batch.failures or any(result.achieved < config.k for result in batch.results):
        sys.exit(ApproximationError.exit_code)


@cli.command()
@click.argument('curve', nargs=-1, required=True)
@click.option('--count', type=int, default=1, show_default=True, help='Number of points')
@guarded
def sample(curve, count):
    """Seeded points of Y(Q_p)."""
    config = make_config("sample", curve)
    padic_curve = config_curve(config)
    for i in range(count):
        point = sample_y_point(padic_curve, config.seed + i)
        click.echo(f"({point.xi}, {point.eta}, {point.zeta})")


@cli.command()
@click.argument('path', type=click.Path())
@guarded
def verify(path):
    """Recompute an approximation certificate from scratch."""
    try:
        record = load_certificate(path)
    except (OSError, ValueError) as e:
        err_console.print(f"Cannot read certificate {path}: {e}", style="red bold")
        sys.exit(EXIT_INVALID)
    result = verify_record(record)
    if click.get_current_context().obj["json"]:
        click.echo(emit_json(result))
    else:
        render.print_verification(console, result)
    if not result.passed:
        sys.exit(EXIT_VERIFY_FAILED)


@cli.command()
@guarded
def selftest():
    """Fast oracle checks of the arithmetic core."""
    options = click.get_current_context().obj
    rows = run_selftest(options["seed"])
    if options["json"]:
        click.echo("[" + ",\n".join(emit_json(row) for row in rows) + "]")
    else:
        render.print_checks(console, "Self test", rows)
    if not all(row.passed for row in rows):
        sys.exit(1)


@cli.command(name="cm-demo")
@click.option('--primes', default="11,19,23", show_default=True, help='Comma-separated primes p = 3 mod 4')
@click.option('--samples', type=int, default=3, show_default=True, help='Approximations per prime')
@click.option('--output', help='Output CSV file path')
@guarded
def cm_demo(primes, samples, output):
    """Density checks for y^2 = x^3 + x at primes p = 3 mod 4, p > 7."""
    options = click.get_current_context().obj
    prime_list = [int(p) for p in primes.split(",") if p.strip()]
    if options["p"] is not None:
        prime_list = [options["p"]]

    def make_config_for(p):
        return RunConfig(command="cm-demo", a="1", b="0", p=p, precision=options["precision"], k=options["k"],
                         seed=options["seed"], json_output=options["json"], jobs=options["jobs"])

    def run(p):
        report = cm_driver(p, options["k"], samples, options["seed"], options["precision"])
        config = make_config_for(p)
        return CmDriverRecord.from_report(config, report, options["precision"])

    records = run_tasks(run, prime_list, options["jobs"])
    for record in records:
        emit(record, render.print_cm_driver)
    if output:
        export_csv([check.model_dump() for record in records for check in record.checks], output)
    if not all(record.passed for record in records):
        sys.exit(1)


if __name__ == '__main__':
    cli()
