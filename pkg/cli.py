#!/usr/bin/env python3
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

import click
from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

import config
from algebra import make_rng
from errors import InvariantViolation, MalformedEncoding, ProSwapError, ProtocolAbort
from experiments import RunConfig, bench, microbench, montecarlo, run_scenario, swap_once, write_csv
from ledger import export_log, parse_log
from proofs import MAX_OR_ELL
from swap import Scenario

console = Console()

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ABORT = 2
EXIT_INVARIANT = 3

SCENARIOS = [s.value for s in Scenario]


def _fraction(ctx, param, value):
    if value is None:
        return None
    try:
        nu = Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"{value!r} is not a number")
    if nu <= 0:
        raise click.BadParameter("must be positive")
    return nu


def swap_options(f):
    """Flags shared by every command that runs swaps."""
    options = [
        click.option("--ell", type=click.IntRange(0, MAX_OR_ELL), default=None, help="Guess length in bits"),
        click.option("--lambda", "lam", type=int, default=None, help="Cut-and-choose instances (even)"),
        click.option("--nu", callback=_fraction, default=None, help="Coins the dealer locks"),
        click.option("--t-p", "t_p", type=click.IntRange(0), default=None, help="Party refund height"),
        click.option("--t-d", "t_d", type=click.IntRange(0), default=None, help="Dealer refund height"),
        click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None, help="64-bit seed"),
        click.option("--cross-chain", is_flag=True, help="Put the two boxes on different ledgers"),
        click.option("--batched", is_flag=True, help="Batched cut-and-choose layout"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _run_config(ctx: click.Context, **opts) -> RunConfig:
    settings = ctx.obj["settings"]
    pick = lambda key, var: settings[var] if opts.get(key) is None else opts[key]  # noqa: E731
    try:
        return RunConfig(
            ell=pick("ell", "PROSWAP_ELL"),
            lam=pick("lam", "PROSWAP_LAMBDA"),
            nu=Fraction(pick("nu", "PROSWAP_NU")),
            t_p=pick("t_p", "PROSWAP_T_P"),
            t_d=pick("t_d", "PROSWAP_T_D"),
            seed=pick("seed", "PROSWAP_SEED"),
            trials=opts.get("trials") or 1,
            scenario=opts.get("scenario") or Scenario.HONEST.value,
            cross_chain=bool(opts.get("cross_chain")),
            output=opts.get("out"),
            batched=bool(opts.get("batched")),
        )
    except ValueError as e:
        raise click.UsageError(str(e))


@click.group()
@click.option("--log-level", type=click.Choice(config.LOG_LEVELS, case_sensitive=False), default=None,
              help="Logging verbosity")
@click.option("--init-env", is_flag=True, help="Copy .env.example to .env when .env is missing")
@click.pass_context
def cli(ctx, log_level, init_env):
    """ProSwap - probabilistic atomic swaps on a simulated ledger"""
    try:
        settings = config.setup_config(create_env=init_env)
    except ValueError as e:
        raise click.UsageError(str(e))
    config.setup_logging(log_level or settings["PROSWAP_LOG_LEVEL"])
    ctx.ensure_object(dict)
    ctx.obj["settings"] = settings


@cli.command()
@swap_options
@click.option("--scenario", type=click.Choice(SCENARIOS), default=Scenario.HONEST.value)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the outcome record here")
@click.option("--ledger-out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Export the ledger log here")
@click.pass_context
def run(ctx, ledger_out, **opts):
    """Run one swap end to end and print what happened"""
    cfg = _run_config(ctx, **opts)
    outcome, ledgers = swap_once(cfg, seed=cfg.seed)

    style = "green" if outcome.party_won else ("yellow" if outcome.aborted is None else "red")
    result = "party won" if outcome.party_won else ("party lost" if outcome.dealer_paid else "no claim")
    console.print(Panel.fit(
        f"[bold]{result}[/]\n"
        f"scenario {outcome.scenario.value}, ell={cfg.ell} (p = 1/{2 ** cfg.ell}), "
        f"target {outcome.y_tgt}, guess {outcome.y_gss}"
        + (f"\n[red]aborted: {outcome.aborted}[/]" if outcome.aborted else ""),
        border_style=style,
        box=box.ROUNDED,
    ))

    table = Table(show_header=True, header_style="bold blue", box=box.ROUNDED)
    table.add_column("Role", style="cyan")
    table.add_column("Initial", justify="right")
    table.add_column("Final", justify="right", style="green")
    for role, initial in outcome.initial_balances.items():
        table.add_row(role, str(initial), str(outcome.final_balances[role]))
    console.print(table)
    for name, txid in outcome.tx_ids.items():
        console.print(f"[blue]{name}[/] {txid}")
    for name, reason in outcome.rejections.items():
        console.print(f"[yellow]{name} rejected: {reason}[/]")

    if cfg.output:
        cfg.output.write_text(outcome.to_lines())
        console.print(f"[green]Outcome written to {cfg.output}[/]")
    if ledger_out:
        ledger_out.parent.mkdir(parents=True, exist_ok=True)
        if ledgers.cross_chain:
            for ledger in ledgers.distinct():
                path = ledger_out.with_name(f"{ledger_out.stem}.{ledger.chain}{ledger_out.suffix}")
                path.write_text(export_log(ledger))
        else:
            ledger_out.write_text(export_log(ledgers.dealer_chain))
        console.print(f"[green]Ledger log written to {ledger_out}[/]")
    ctx.exit(EXIT_ABORT if outcome.aborted else EXIT_OK)


@cli.command("montecarlo")
@swap_options
@click.option("--trials", type=click.IntRange(1), default=100, help="Number of honest swaps")
@click.option("--workers", type=click.IntRange(1), default=None, help="Worker processes")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Per-trial CSV")
@click.pass_context
def montecarlo_cmd(ctx, workers, **opts):
    """Estimate the party's win probability over many seeded swaps"""
    cfg = _run_config(ctx, **opts)
    if cfg.trials < 100:
        console.print(f"[yellow]Only {cfg.trials} trials; the 3-sigma band is loose below 100[/]")
    result = montecarlo(cfg, workers or ctx.obj["settings"]["PROSWAP_WORKERS"])

    table = Table(show_header=True, header_style="bold blue", box=box.ROUNDED)
    for column in ("ell", "trials", "wins", "p", "p_hat", "3-sigma band", "within"):
        table.add_column(column, justify="right")
    table.add_row(
        str(result.ell), str(result.trials), str(result.wins), f"{result.p:.4f}", f"{result.p_hat:.4f}",
        f"[{result.ci_low:.4f}, {result.ci_high:.4f}]",
        "[green]yes[/]" if result.within_bound else "[red]no[/]",
    )
    console.print(table)
    if cfg.output:
        write_csv(cfg.output, result.rows)
        console.print(f"[green]CSV written to {cfg.output}[/]")
    ctx.exit(EXIT_OK)


@cli.command()
@swap_options
@click.option("--scenario", type=click.Choice(SCENARIOS), required=True)
@click.option("--trials", type=click.IntRange(1), default=1, help="Seeded runs of the scenario")
@click.pass_context
def adversary(ctx, **opts):
    """Run a scripted misbehaviour and check the honest side stays safe"""
    cfg = _run_config(ctx, **opts)
    verdict = run_scenario(cfg)
    if verdict.passed:
        console.print(f"[green]✓ {verdict.scenario.value}: pass ({verdict.runs} runs)[/]")
        ctx.exit(EXIT_OK)
    console.print(f"[red]✗ {verdict.scenario.value}: FAIL[/]")
    for failure in verdict.failures:
        console.print(f"  [red]{failure}[/]")
    ctx.exit(EXIT_INVARIANT)


@cli.command("bench")
@click.option("--ell-min", type=int, default=1, help="Smallest ell")
@click.option("--ell-max", type=int, default=8, help="Largest ell")
@click.option("--lambda", "lam", type=int, default=80, help="Cut-and-choose instances")
@click.option("--batched/--per-index", default=True, help="Proof layout")
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="CSV output")
@click.pass_context
def bench_cmd(ctx, ell_min, ell_max, lam, batched, seed, out):
    """Time and size the Y_win well-formedness proof for a range of ell"""
    if not 0 <= ell_min <= ell_max:
        raise click.UsageError("need 0 <= --ell-min <= --ell-max")
    if ell_max > MAX_OR_ELL:
        raise click.UsageError(f"ell {ell_max} is beyond the supported cap of {MAX_OR_ELL}")
    if lam < 2 or lam % 2:
        raise click.UsageError("--lambda must be even and at least 2")
    rows = bench(range(ell_min, ell_max + 1), lam, batched, make_rng(seed))
    table = Table(show_header=True, header_style="bold blue", box=box.ROUNDED,
                  title=f"lambda={lam}, {'batched' if batched else 'per-index'}")
    for column in ("ell", "Prove (s)", "Verify (s)", "bytes", "Size (KB)"):
        table.add_column(column, justify="right")
    for row in rows:
        table.add_row(str(row.ell), f"{row.prove_s:.3f}", f"{row.verify_s:.3f}", str(row.proof_bytes),
                      f"{row.size_kb:.1f}")
    console.print(table)
    if out:
        write_csv(out, rows)
    ctx.exit(EXIT_OK)


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_context
def inspect(ctx, path):
    """Pretty-print an exported ledger log"""
    try:
        entries = parse_log(path.read_text())
    except MalformedEncoding as e:
        console.print(f"[red]{path}:{e.line}: {e}[/]")
        ctx.exit(EXIT_USAGE)

    table = Table(show_header=True, header_style="bold blue", box=box.ROUNDED, title=str(path))
    table.add_column("Height", justify="right")
    table.add_column("Tx", style="cyan")
    table.add_column("Inputs")
    table.add_column("Outputs")
    for entry in entries:
        tx = entry.tx
        outputs = ", ".join(f"{o.value} -> {type(o.condition).__name__}" for o in tx.outputs)
        inputs = ", ".join(f"{i.txid[:8]}:{i.index}" for i in tx.inputs)
        table.add_row(str(entry.height), tx.txid[:16], inputs, outputs)
    console.print(table)
    console.print(f"{len(entries)} transactions")
    ctx.exit(EXIT_OK)


@cli.command("microbench")
@click.option("--repeat", type=click.IntRange(1), default=10, help="Repetitions per operation")
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None)
@click.pass_context
def microbench_cmd(ctx, repeat, seed):
    """Time the individual building blocks"""
    table = Table(show_header=True, header_style="bold blue", box=box.ROUNDED)
    table.add_column("Operation", style="cyan")
    table.add_column("Mean (ms)", justify="right")
    for row in microbench(repeat, make_rng(seed)):
        table.add_row(row.operation, f"{row.mean_ms:.3f}")
    console.print(table)
    ctx.exit(EXIT_OK)


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point with the documented exit codes."""
    args = sys.argv[1:] if argv is None else list(argv)
    try:
        rv = cli.main(args, prog_name="proswap", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        console.print("[yellow]Cancelled[/]")
        return EXIT_USAGE
    except ProtocolAbort as e:
        console.print(f"[red]Protocol aborted: {e.reason}[/]")
        return EXIT_ABORT
    except InvariantViolation as e:
        console.print(f"[bold red]Invariant violated: {e}[/]")
        return EXIT_INVARIANT
    except (ProSwapError, ValueError) as e:
        console.print(f"[red]{e}[/]")
        return EXIT_USAGE
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
