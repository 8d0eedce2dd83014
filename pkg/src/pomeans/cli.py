"""Command-line front end: estimate, simulate, wtp.

CSV contract: a header row is required; the reserved column names are
``group``, ``y`` and ``trials``, and every other column is a covariate
unless ``--covariates`` narrows the list. Exit codes: 0 success,
2 usage, 3 data validation, 4 numerical failure. Errors print one
machine-parsable line ``error: <code>: <message>`` on stderr.

Confidence intervals are reported as mu_hat +/- 1.96 se and labeled
"normal 95%"; that is a convention of this tool, not a result.
"""

from __future__ import annotations

import functools
import json
import sys

import click
import pandas as pd

from .data import validate_dataset
from .errors import DataError, PomeansError
from .families import FAMILIES
from .inference import contrast_estimate
from .linear import estimate_pra, estimate_sm, estimate_sra
from .qmle import estimate_npra, estimate_nsra
from .results import Contrast
from .simlab import (
    default_family,
    generate_population,
    get_model,
    run_replications,
)
from .wtp import WtpSpec, wtp_lower_bound

Z95 = 1.96

EXIT_DATA = 3
EXIT_NUMERIC = 4


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DataError as exc:
            click.echo(f"error: {exc.code}: {exc}", err=True)
            sys.exit(EXIT_DATA)
        except PomeansError as exc:
            click.echo(f"error: {exc.code}: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)

    return wrapper


@click.group()
def main():
    """Arm-mean estimation under random assignment, with a simulation lab."""


def _parse_floats(text, flag):
    try:
        return [float(x) for x in str(text).split(",") if x.strip() != ""]
    except ValueError:
        raise click.UsageError(f"{flag} expects a comma-separated list of numbers")


def _estimate(ds, estimator, family):
    if estimator in ("nsra", "npra") and family is None:
        raise click.UsageError(f"--family is required for estimator {estimator!r}")
    if estimator == "sm":
        return estimate_sm(ds)
    if estimator == "pra":
        return estimate_pra(ds)
    if estimator == "sra":
        return estimate_sra(ds)
    if estimator == "nsra":
        return estimate_nsra(ds, family)
    return estimate_npra(ds, family)


def _build_contrast(name, res, weights, bids):
    G = res.n_arms
    if name == "ate":
        if G < 2:
            raise click.UsageError("the ate contrast needs at least two arms")
        return Contrast.ate(G=G)
    if name == "did":
        if G != 4:
            raise click.UsageError("the did contrast needs exactly four arms (CB, CA, TB, TA)")
        return Contrast.did()
    if name == "ratio":
        if G < 2:
            raise click.UsageError("the ratio contrast needs at least two arms")
        return Contrast.ratio(numerator=2, denominator=1, G=G)
    if name == "custom":
        if weights is None:
            raise click.UsageError("--weights is required with --contrast custom")
        return Contrast.linear("custom", _parse_floats(weights, "--weights"))
    if name == "wtp":
        if bids is None:
            raise click.UsageError("--bids is required with --contrast wtp")
        return None  # handled by wtp_lower_bound for alignment checks
    raise click.UsageError(f"unknown contrast {name!r}")


def _bid_arm_order(df, group_col, bids):
    """Arm labels (as stored in the CSV) matching the given bids, in order."""
    if group_col not in df.columns:
        raise DataError(f"missing required column {group_col!r}")
    by_value = {}
    for lab in pd.unique(df[group_col]):
        try:
            by_value[float(lab)] = lab
        except (TypeError, ValueError):
            pass
    try:
        return [by_value[float(b)] for b in bids]
    except KeyError:
        raise DataError("every bid must appear as an arm label in the group column")


def _fmt(x):
    return f"{x:.6g}"


def _emit_estimate(res, contrasts, show_vcov, as_json):
    if as_json:
        payload = {
            "schema": 1,
            "estimator": res.estimator_id,
            "family": res.family,
            "labels": [str(lab) for lab in res.labels],
            "group_sizes": [int(x) for x in res.group_sizes],
            "mu_hat": [float(x) for x in res.mu_hat],
            "se": [float(x) for x in res.se()],
            "vcov": [[float(x) for x in row] for row in res.vcov],
            "contrasts": [
                {
                    "name": c.contrast.name,
                    "tau_hat": c.tau_hat,
                    "se": c.se,
                    "ci95_normal": [c.tau_hat - Z95 * c.se, c.tau_hat + Z95 * c.se],
                }
                for c in contrasts
            ],
        }
        click.echo(json.dumps(payload))
        return
    fam = f" family={res.family}" if res.family else ""
    click.echo(f"estimator {res.estimator_id}{fam}")
    click.echo(f"{'arm':>12} {'n':>7} {'mu_hat':>12} {'se':>12}")
    se = res.se()
    for g in range(res.n_arms):
        click.echo(
            f"{str(res.labels[g]):>12} {res.group_sizes[g]:>7d} "
            f"{_fmt(res.mu_hat[g]):>12} {_fmt(se[g]):>12}"
        )
    if show_vcov:
        click.echo("vcov:")
        for row in res.vcov:
            click.echo("  " + " ".join(f"{_fmt(v):>12}" for v in row))
    for c in contrasts:
        lo, hi = c.tau_hat - Z95 * c.se, c.tau_hat + Z95 * c.se
        click.echo(
            f"contrast {c.contrast.name}: tau_hat={_fmt(c.tau_hat)} se={_fmt(c.se)} "
            f"normal 95% [{_fmt(lo)}, {_fmt(hi)}]"
        )


@main.command()
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--group-col", default="group", show_default=True)
@click.option("--outcome-col", default="y", show_default=True)
@click.option("--trials-col", default=None)
@click.option("--covariates", default=None, help="Comma-separated covariate columns.")
@click.option(
    "--estimator",
    type=click.Choice(["sm", "pra", "sra", "npra", "nsra"]),
    default="sm",
    show_default=True,
)
@click.option("--family", type=click.Choice(sorted(FAMILIES)), default=None)
@click.option(
    "--contrast",
    "contrast_name",
    type=click.Choice(["ate", "did", "ratio", "wtp", "custom"]),
    default=None,
)
@click.option("--weights", default=None, help="Comma-separated weights for --contrast custom.")
@click.option("--bids", default=None, help="Comma-separated ascending bids for --contrast wtp.")
@click.option("--vcov", "show_vcov", is_flag=True, help="Print the covariance matrix.")
@click.option("--json", "as_json", is_flag=True, help="Emit machine-readable JSON.")
@_handle_errors
def estimate(
    csv_path,
    group_col,
    outcome_col,
    trials_col,
    covariates,
    estimator,
    family,
    contrast_name,
    weights,
    bids,
    show_vcov,
    as_json,
):
    """Estimate arm means (and optional contrasts) from a CSV dataset."""
    cov_list = [c.strip() for c in covariates.split(",")] if covariates else None
    df = pd.read_csv(csv_path)
    arm_order = None
    bid_values = None
    if contrast_name == "wtp":
        if bids is None:
            raise click.UsageError("--bids is required with --contrast wtp")
        bid_values = _parse_floats(bids, "--bids")
        spec = WtpSpec(bids=tuple(bid_values), estimator=estimator)  # validates ordering
        arm_order = _bid_arm_order(df, group_col, spec.bids)
    ds = validate_dataset(
        df,
        group_col=group_col,
        outcome_col=outcome_col,
        trials_col=trials_col,
        covariates=cov_list,
        arm_order=arm_order,
    )
    res, _ = _estimate(ds, estimator, family)
    contrasts = []
    if contrast_name == "wtp":
        contrasts.append(wtp_lower_bound(res, spec))
    elif contrast_name is not None:
        c = _build_contrast(contrast_name, res, weights, bids)
        contrasts.append(contrast_estimate(res, c))
    _emit_estimate(res, contrasts, show_vcov, as_json)


@main.command()
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--bids", required=True, help="Comma-separated ascending bids, one arm each.")
@click.option("--group-col", default="group", show_default=True)
@click.option("--outcome-col", default="y", show_default=True)
@click.option("--covariates", default=None)
@click.option(
    "--estimator",
    type=click.Choice(["sm", "pra", "sra", "npra", "nsra"]),
    default="sm",
    show_default=True,
)
@click.option("--family", type=click.Choice(sorted(FAMILIES)), default=None)
@click.option("--json", "as_json", is_flag=True)
@_handle_errors
def wtp(csv_path, bids, group_col, outcome_col, covariates, estimator, family, as_json):
    """Lower-bound mean willingness to pay from a bid-response CSV.

    Arms are the bid amounts; the unordered bid list is refused rather
    than sorted silently. With --estimator sm this is the raw
    acceptance-share lower bound.
    """
    bid_values = _parse_floats(bids, "--bids")
    spec = WtpSpec(bids=tuple(bid_values), estimator=estimator)  # validates ordering
    cov_list = [c.strip() for c in covariates.split(",")] if covariates else None
    df = pd.read_csv(csv_path)
    arm_order = _bid_arm_order(df, group_col, spec.bids)
    ds = validate_dataset(
        df,
        group_col=group_col,
        outcome_col=outcome_col,
        covariates=cov_list,
        arm_order=arm_order,
    )
    res, _ = _estimate(ds, estimator, family)
    result = wtp_lower_bound(res, spec)
    _emit_estimate(res, [result], show_vcov=False, as_json=as_json)


@main.command()
@click.option("--model", type=click.Choice(["pop1", "pop2", "pop3"]), required=True)
@click.option("--regime", type=click.Choice(["low", "high"]), required=True)
@click.option("--n", "n_list", default="5000", show_default=True, help="Comma-separated sample sizes.")
@click.option("--reps", default=1000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--estimators", default=None, help="Comma-separated subset of sm,pra,sra,npra,nsra.")
@click.option("--family", type=click.Choice(sorted(FAMILIES)), default=None)
@click.option("--pop-size", default=1_000_000, show_default=True, type=int)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
@_handle_errors
def simulate(model, regime, n_list, reps, seed, estimators, family, pop_size, out_path):
    """Replicated estimation on a synthetic population; Bias/Sd table out."""
    sizes = [int(x) for x in _parse_floats(n_list, "--n")]
    if estimators is None:
        estimators = "sm,pra,sra" if model == "pop1" else "sm,pra,sra,npra,nsra"
    names = [e.strip().lower() for e in estimators.split(",")]
    fam = family if family is not None else (
        default_family(model) if any(x in ("npra", "nsra") for x in names) else None
    )
    pop = generate_population(get_model(model, regime), size=pop_size, seed=seed)
    chunks = []
    for N in sizes:
        summary = run_replications(pop, N, reps, names, seed=seed, family=fam)
        click.echo(summary.to_text())
        csv_text = summary.to_csv_text()
        chunks.append(csv_text if not chunks else csv_text.split("\n", 1)[1])
    if out_path:
        with open(out_path, "w") as fh:
            fh.write("".join(chunks))
        click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
