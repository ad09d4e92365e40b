"""Command line entry points: `dcpp` and `dcpp-sim`."""
from __future__ import annotations

import json
import logging
import os
import sys
from dataclasses import replace

import click

from .errors import DcppError
from .gateway import SessionBroker
from .map_core import load_map
from .odd import CostWeights


def _setup_logging():
    level = os.environ.get("DCPP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _apply_overrides(scenario, k, w1, w2):
    weights = CostWeights(
        w1=scenario.weights.w1 if w1 is None else w1,
        w2=scenario.weights.w2 if w2 is None else w2)
    if k is not None:
        scenario = replace(scenario, k=k)
    return replace(scenario, weights=weights)


@click.group()
def dcpp():
    """Remote assistance planning engine."""
    _setup_logging()


@dcpp.command()
@click.option("--scenario", "scenario_file", required=True,
              type=click.Path(exists=True), help="Scenario document.")
@click.option("--listen", default="127.0.0.1:8700", show_default=True,
              help="Bind address as host:port.")
@click.option("--k", type=int, default=None, help="Number of route candidates.")
@click.option("--w1", type=float, default=None, help="Distance weight.")
@click.option("--w2", type=float, default=None, help="Preference weight.")
@click.option("--seed", type=int, default=42, show_default=True)
def serve(scenario_file, listen, k, w1, w2, seed):
    """Open an assistance session for a scenario and serve operators."""
    import uvicorn

    from .server import create_app
    from .sim import load_scenario, open_session_from_scenario
    scenario = _apply_overrides(load_scenario(scenario_file), k, w1, w2)
    try:
        session = open_session_from_scenario(scenario, seed=seed)
    except DcppError as exc:
        raise click.ClickException(str(exc))
    broker = SessionBroker()
    broker.open_session(session)
    click.echo(f"session '{session.session_id}' awaiting operator "
               f"({len(session.candidates)} candidates)")
    host, _, port = listen.partition(":")
    uvicorn.run(create_app(broker), host=host or "127.0.0.1",
                port=int(port or 8700))


@dcpp.command()
@click.option("--scenario", "scenario_file", required=True,
              type=click.Path(exists=True), help="Scenario document.")
@click.option("--out", "out_file", type=click.Path(), default=None,
              help="Write candidates to this file instead of stdout.")
@click.option("--k", type=int, default=None, help="Number of route candidates.")
@click.option("--w1", type=float, default=None, help="Distance weight.")
@click.option("--w2", type=float, default=None, help="Preference weight.")
@click.option("--seed", type=int, default=42, show_default=True)
def plan(scenario_file, out_file, k, w1, w2, seed):
    """One-shot candidate generation, no server."""
    from .gateway import publish_request
    from .sim import load_scenario, open_session_from_scenario
    scenario = _apply_overrides(load_scenario(scenario_file), k, w1, w2)
    try:
        session = open_session_from_scenario(scenario, seed=seed)
    except DcppError as exc:
        raise click.ClickException(str(exc))
    message = publish_request(session)
    doc = json.dumps(message.payload, indent=1)
    if out_file:
        with open(out_file, "w") as handle:
            handle.write(doc + "\n")
        click.echo(f"wrote {len(session.candidates)} candidates to {out_file}")
    else:
        click.echo(doc)


@dcpp.command("validate-map")
@click.option("--map", "map_file", required=True, type=click.Path(exists=True),
              help="Map document to check.")
def validate_map(map_file):
    """Validate a map document against the schema and invariants."""
    try:
        lanelet_map = load_map(map_file)
    except DcppError as exc:
        click.echo(f"invalid: {exc}", err=True)
        sys.exit(1)
    click.echo(f"ok: {len(lanelet_map.lanelets)} lanelets")


@click.group()
def dcpp_sim():
    """Scenario simulation harness."""
    _setup_logging()


@dcpp_sim.command()
@click.option("--scenario", "scenario_file", required=True,
              type=click.Path(exists=True), help="Scenario document.")
@click.option("--policy", default="accept_preferred", show_default=True,
              help="Scripted operator policy.")
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--report", "report_file", type=click.Path(), default=None,
              help="Write the episode report to this file.")
def run(scenario_file, policy, seed, report_file):
    """Run a full assistance episode with a scripted operator."""
    from .sim import load_scenario, run_scenario
    scenario = load_scenario(scenario_file)
    try:
        report = run_scenario(scenario, policy, seed=seed)
    except DcppError as exc:
        raise click.ClickException(str(exc))
    doc = json.dumps(report, indent=1)
    if report_file:
        with open(report_file, "w") as handle:
            handle.write(doc + "\n")
    click.echo(f"result={report['result']} rounds={report['rounds']} "
               f"cross_track={report['max_cross_track_m']} "
               f"collisions={report['collisions']}")
    if not report_file:
        click.echo(doc)
    if report["result"] == "failed":
        sys.exit(1)


if __name__ == "__main__":
    dcpp()
