import logging
import math
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import click
import numpy as np
import typer
from typer.core import TyperGroup

from .builtins import ModelOptions, get_model, model_names
from .report import Report, decoherence_section, probability_table
from .scenario import Scenario, dump_scenario, load_events, load_igus_group, parse_scenario
from dhq import errors
from dhq.config import DEFAULT_TOLERANCES, Tolerances
from dhq.decoherence import check_sum_rules, decoherence_functional, probabilities
from dhq.enums import OutputFormat, RealmKind, RunCommand, Separation, SurfaceSide
from dhq.histories import HistoryIndex, Reference
from dhq.realms import Realm, check_compatibility, coarse_grain, conditional_probability, predict, retrodict
from dhq.spacetime import (
    Boost, Event, PresentThresholds, boost_event, classify, common_present_check, happened_relative_to_surface,
    interval, ordering_boosts,
)

ORDERS = {SurfaceSide.FUTURE: 'a_before_b', SurfaceSide.ON: 'simultaneous', SurfaceSide.PAST: 'b_before_a'}
SWEEP_SPEED = 0.99
USAGE_EXIT_CODE = 1


class CLIError(Exception):
    pass


@dataclass(frozen=True)
class Settings:
    tolerances: Tolerances = DEFAULT_TOLERANCES
    fmt: OutputFormat = OutputFormat.TEXT
    seed: int = 0


class HistoriesCLI:

    def __init__(self, settings: Settings):
        self._settings = settings
        self._tolerances = settings.tolerances

    @property
    def tolerances(self) -> Tolerances:
        return self._tolerances

    def execute(self, command: str, *args, **kwargs) -> Report:
        """Run a command; a set that fails to decohere yields its report with exit code 2"""
        try:
            return getattr(self, command)(*args, **kwargs)
        except errors.NotDecoherent as err:
            report = self._report(command).add('decoherence', decoherence_section(err.report, self._tolerances))
            report.exit_code = 2
            return report
        except errors.DHQError as err:
            raise CLIError(err) from err

    def load(self, path: Path) -> Scenario:
        try:
            return parse_scenario(path, tolerances=self._tolerances)
        except errors.ScenarioError as err:
            raise CLIError(err) from err

    def _report(self, command: str, *, with_tolerances: bool = True) -> Report:
        return Report(command, self._tolerances if with_tolerances else None)

    @staticmethod
    def _grid_section(scenario: Scenario) -> dict:
        grid = scenario.grid
        return {
            'label': grid.label,
            'dimension': grid.dim,
            'times': [float(t) for t in grid.times],
            'sets': [s.label for s in grid.sets],
            'shape': list(grid.shape),
            'fine_grained': grid.is_fine_grained,
            'data': str(scenario.data) if scenario.data else None,
        }

    def check(self, scenario: Scenario) -> Report:
        report = decoherence_functional(scenario.grid, tolerances=self._tolerances)
        return (self._report('check')
                .add('grid', self._grid_section(scenario))
                .add('decoherence', decoherence_section(report, self._tolerances)))

    def prob(self, scenario: Scenario) -> Report:
        grid = scenario.grid
        table = probabilities(grid, tolerances=self._tolerances)
        labels = [grid.label_of(h) for h, _ in table]
        values = [p for _, p in table]
        return (self._report('prob')
                .add('grid', self._grid_section(scenario))
                .add('probabilities', probability_table(labels, values))
                .add('total', sum(values)))

    @staticmethod
    def _matching(scenario: Scenario, references: Iterable[str]) -> set[HistoryIndex]:
        grid = scenario.grid
        positions = [grid.find(Reference.parse(r)) for r in references]
        return {h for h in grid.histories() if all(h[k] == alpha for k, alpha in positions)}

    def condition(self, scenario: Scenario, given: list[str], target: list[str]) -> Report:
        if not target:
            raise CLIError('at least one --target is required')
        p = conditional_probability(
            scenario.grid,
            self._matching(scenario, target),
            self._matching(scenario, given),
            tolerances=self._tolerances,
        )
        return (self._report('condition')
                .add('target', list(target))
                .add('given', list(given))
                .add('probability', p))

    def _data(self, scenario: Scenario, data: str | None) -> Reference:
        if data is not None:
            return Reference.parse(data)
        if scenario.data is None:
            raise CLIError('no --data given and the scenario names no data')
        return scenario.data

    def _conditional(self, command: str, scenario: Scenario, data: str | None) -> Report:
        action = retrodict if command == 'retrodict' else predict
        table = action(scenario.grid, self._data(scenario, data), tolerances=self._tolerances)
        return (self._report(command)
                .add('grid', self._grid_section(scenario))
                .add('data', str(table.data))
                .add('data_probability', table.data_probability)
                .add('probabilities', probability_table(table.labels, table.probabilities))
                .add('total', table.total))

    def retrodict(self, scenario: Scenario, data: str | None = None) -> Report:
        return self._conditional('retrodict', scenario, data)

    def predict(self, scenario: Scenario, data: str | None = None) -> Report:
        return self._conditional('predict', scenario, data)

    def coarse(self, scenario: Scenario, partition: str) -> Report:
        if partition not in scenario.partitions:
            known = ', '.join(scenario.partitions) or 'none'
            raise CLIError(f'no partition {partition!r} in the scenario (known: {known})')
        chosen = scenario.partitions[partition]
        coarse = coarse_grain(scenario.grid, chosen, tolerances=self._tolerances)
        report = (self._report('coarse')
                  .add('partition', partition)
                  .add('decoherence', decoherence_section(coarse.report, self._tolerances))
                  .add('sum_rule_violation', check_sum_rules(scenario.grid, chosen)))
        if coarse.report.decoherent:
            report.add('probabilities', probability_table(chosen.labels, coarse.report.probabilities))
        return report

    def compat(self, a: Scenario, b: Scenario) -> Report:
        verdict = check_compatibility(
            Realm.of(a.grid, tolerances=self._tolerances),
            Realm.of(b.grid, tolerances=self._tolerances),
            tolerances=self._tolerances,
        )
        report = (self._report('compat')
                  .add('realms', [a.grid.label, b.grid.label])
                  .add('status', verdict.status))
        if verdict.commutator_norm is not None:
            report.add('commutator_norm', verdict.commutator_norm)
        if verdict.joint is not None:
            report.add('joint', {'label': verdict.joint.label, 'shape': list(verdict.joint.shape)})
            report.add('decoherence', decoherence_section(verdict.report, self._tolerances))
        return report

    def model(
        self,
        name: str,
        options: ModelOptions,
        dump: Path | None = None,
        run: RunCommand | None = None,
    ) -> Report:
        builtin = get_model(name, options)
        scenario = builtin.build()
        if run is not None:
            return self.execute(str(run), scenario)
        report = self._report('model').add('grid', self._grid_section(scenario))
        for key, value in builtin.extras().items():
            report.add(key, value)
        if dump is not None:
            report.add('dumped', str(dump_scenario(scenario, dump)))
        report.add('decoherence', decoherence_section(
            decoherence_functional(scenario.grid, tolerances=self._tolerances), self._tolerances))
        return report

    @staticmethod
    def _event(text: str, named: dict[str, Event]) -> Event:
        if text in named:
            return named[text]
        return Event.parse(text)

    @staticmethod
    def _boost(text: str) -> Boost:
        try:
            values = [float(v) for v in text.split(',')]
        except ValueError:
            raise CLIError(f'expected a speed or vx,vy,vz, got {text!r}') from None
        if len(values) == 1:
            return Boost.along(values[0])
        if len(values) != 3:
            raise CLIError(f'expected a speed or vx,vy,vz, got {text!r}')
        return Boost(tuple(values))

    def classify(self, a: str, b: str, events: Path | None = None) -> Report:
        named = load_events(events) if events else {}
        ea, eb = self._event(a, named), self._event(b, named)
        return (self._report('spacetime classify', with_tolerances=False)
                .add('interval', interval(ea, eb))
                .add('separation', classify(ea, eb)))

    def order(self, a: str, b: str, v: str | None = None, samples: int = 1000, events: Path | None = None) -> Report:
        named = load_events(events) if events else {}
        ea, eb = self._event(a, named), self._event(b, named)
        separation = classify(ea, eb)
        report = self._report('spacetime order', with_tolerances=False).add('separation', separation)
        if v is not None:
            boost = self._boost(v)
            report.add('velocity', list(boost.velocity))
            report.add('t_a', boost_event(ea, boost).t)
            report.add('t_b', boost_event(eb, boost).t)
            report.add('order', ORDERS[happened_relative_to_surface(ea, eb, boost)])
            return report
        rng = np.random.default_rng(self._settings.seed)
        counts = dict.fromkeys(ORDERS.values(), 0)
        for _ in range(samples):
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            speed = SWEEP_SPEED * rng.random() ** (1 / 3)
            counts[ORDERS[happened_relative_to_surface(ea, eb, Boost(tuple(speed * direction)))]] += 1
        report.add('seed', self._settings.seed).add('samples', samples).add('counts', counts)
        report.add('both_orders_sampled', counts['a_before_b'] > 0 and counts['b_before_a'] > 0)
        if separation is Separation.SPACELIKE:
            constructed = ordering_boosts(ea, eb)
            report.add('constructed', {
                name: {'velocity': list(boost.velocity), 'order': ORDERS[happened_relative_to_surface(ea, eb, boost)]}
                for name, boost in (('before', constructed.before), ('simultaneous', constructed.simultaneous),
                                    ('after', constructed.after))
            })
        return report

    def present(self, group: Path, v_max: float, ratio: float) -> Report:
        check = common_present_check(load_igus_group(group), PresentThresholds(v_max=v_max, ratio=ratio))
        return (self._report('spacetime present', with_tolerances=False)
                .add('thresholds', {'v_max': check.thresholds.v_max, 'ratio': check.thresholds.ratio})
                .add('contingencies', {
                    c.name: {'value': c.value, 'limit': c.limit, 'passed': c.passed} for c in check.contingencies
                })
                .add('common_present', check.common_present))


@contextmanager
def _usage_exit_code():
    try:
        yield
    except click.UsageError as err:
        err.exit_code = USAGE_EXIT_CODE
        raise


class HistoriesGroup(TyperGroup):
    """Command group whose usage errors exit with 1, leaving 2 to sets that do not decohere"""

    def make_context(self, *args, **kwargs) -> click.Context:
        with _usage_exit_code():
            return super().make_context(*args, **kwargs)

    def invoke(self, ctx: click.Context):
        with _usage_exit_code():
            return super().invoke(ctx)


app = typer.Typer(
    cls=HistoriesGroup, help='Decoherent histories of finite closed quantum systems.', no_args_is_help=True,
)
spacetime_app = typer.Typer(help='Causal structure of flat spacetime.', no_args_is_help=True)
app.add_typer(spacetime_app, name='spacetime')


def _emit(ctx: typer.Context, action: Callable[[HistoriesCLI], Report]):
    settings: Settings = ctx.find_root().obj or Settings()
    cli = HistoriesCLI(settings)
    try:
        report = action(cli)
    except CLIError as err:
        typer.echo(f'Error: {err}', err=True)
        raise typer.Exit(1)
    typer.echo(report.render(settings.fmt))
    if report.exit_code:
        raise typer.Exit(report.exit_code)


@app.callback()
def main(
    ctx: typer.Context,
    tol_dec: float = typer.Option(DEFAULT_TOLERANCES.tol_dec, help='Decoherence threshold.'),
    fmt: OutputFormat = typer.Option(OutputFormat.TEXT, '--format', help='Report format.'),
    seed: int = typer.Option(0, help='Seed of random sweeps.'),
    workers: int = typer.Option(1, min=1, help='Threads filling the gram matrix.'),
    verbose: bool = typer.Option(False, '--verbose', '-v', help='Log to standard error.'),
):
    logging.basicConfig(stream=sys.stderr, level=logging.DEBUG if verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s', force=True)
    ctx.obj = Settings(DEFAULT_TOLERANCES.replace(tol_dec=tol_dec, workers=workers), fmt, seed)


SCENARIO = typer.Argument(..., dir_okay=False, help='Scenario file.')


@app.command()
def check(ctx: typer.Context, scenario: Path = SCENARIO):
    """Decoherence verdict of the scenario's set of histories."""
    _emit(ctx, lambda cli: cli.execute('check', cli.load(scenario)))


@app.command()
def prob(ctx: typer.Context, scenario: Path = SCENARIO):
    """Probabilities of a decoherent set of histories."""
    _emit(ctx, lambda cli: cli.execute('prob', cli.load(scenario)))


@app.command()
def condition(
    ctx: typer.Context,
    scenario: Path = SCENARIO,
    given: list[str] = typer.Option([], help='Condition NAME@T; repeat for a conjunction.'),
    target: list[str] = typer.Option([], help='Target NAME@T; repeat for a conjunction.'),
):
    """Conditional probability p(target | given)."""
    _emit(ctx, lambda cli: cli.execute('condition', cli.load(scenario), given, target))


@app.command(name='retrodict')
def retrodict_command(
    ctx: typer.Context,
    scenario: Path = SCENARIO,
    data: str = typer.Option(None, help='Present data NAME@T, the latest set.'),
):
    """Probabilities of past alternatives given present data."""
    _emit(ctx, lambda cli: cli.execute('retrodict', cli.load(scenario), data))


@app.command(name='predict')
def predict_command(
    ctx: typer.Context,
    scenario: Path = SCENARIO,
    data: str = typer.Option(None, help='Present data NAME@T, the earliest set.'),
):
    """Probabilities of future alternatives given present data."""
    _emit(ctx, lambda cli: cli.execute('predict', cli.load(scenario), data))


@app.command()
def coarse(
    ctx: typer.Context,
    scenario: Path = SCENARIO,
    partition: str = typer.Option(..., help='Name of a partition in the scenario file.'),
):
    """Coarse-grain by a named partition and check sum rules."""
    _emit(ctx, lambda cli: cli.execute('coarse', cli.load(scenario), partition))


@app.command()
def compat(
    ctx: typer.Context,
    scenario_a: Path = typer.Argument(..., dir_okay=False),
    scenario_b: Path = typer.Argument(..., dir_okay=False),
):
    """Compatibility of two realms through their commuting refinement."""
    _emit(ctx, lambda cli: cli.execute('compat', cli.load(scenario_a), cli.load(scenario_b)))


@app.command()
def model(
    ctx: typer.Context,
    name: str = typer.Argument(..., help=f'One of: {", ".join(model_names())}.'),
    realm: RealmKind = typer.Option(RealmKind.PAST_A, help='Three-box realm.'),
    bins: int = typer.Option(8, min=2, help='Two-slit screen bins.'),
    environment: bool = typer.Option(False, help='Two-slit which-slit record.'),
    n_env: int = typer.Option(10, help='Spin-environment size.'),
    theta: float = typer.Option(math.pi / 2, help='Spin-environment rotation angle.'),
    dump: Path = typer.Option(None, help='Write the scenario file here.'),
    run: RunCommand = typer.Option(None, help='Run a command on the built-in scenario.'),
):
    """Built-in scenarios: three-box, two-slit, spin-env."""
    def action(cli: HistoriesCLI) -> Report:
        options = ModelOptions(realm, bins, environment, n_env, theta, cli.tolerances)
        return cli.execute('model', name, options, dump, run)

    _emit(ctx, action)


EVENTS = typer.Option(None, dir_okay=False, help='JSON file of named events.')


@spacetime_app.command(name='classify')
def classify_command(
    ctx: typer.Context,
    a: str = typer.Option(..., help='Event t,x,y,z or a name from --events.'),
    b: str = typer.Option(..., help='Event t,x,y,z or a name from --events.'),
    events: Path = EVENTS,
):
    """Where b lies relative to the light cone of a."""
    _emit(ctx, lambda cli: cli.execute('classify', a, b, events))


@spacetime_app.command(name='order')
def order_command(
    ctx: typer.Context,
    a: str = typer.Option(..., help='Event t,x,y,z or a name from --events.'),
    b: str = typer.Option(..., help='Event t,x,y,z or a name from --events.'),
    v: str = typer.Option(None, help='Boost speed along x, or vx,vy,vz. Omit to sweep.'),
    samples: int = typer.Option(1000, min=1, help='Random boosts in a sweep.'),
    events: Path = EVENTS,
):
    """Temporal order of a and b in a boosted frame."""
    _emit(ctx, lambda cli: cli.execute('order', a, b, v, samples, events))


@spacetime_app.command(name='present')
def present_command(
    ctx: typer.Context,
    group: Path = typer.Argument(..., dir_okay=False, help='IGUS group file.'),
    v_max: float = typer.Option(PresentThresholds.v_max, help='Largest relative speed, fraction of c.'),
    ratio: float = typer.Option(PresentThresholds.ratio, help='Factor for "small compared to".'),
):
    """Whether a group of IGUSes shares a common present."""
    _emit(ctx, lambda cli: cli.execute('present', group, v_max, ratio))
