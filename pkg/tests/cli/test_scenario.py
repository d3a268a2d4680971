import copy
import math

import pytest

from tests.conftest import assert_close
from dhq import errors
from dhq.cli.builtins import ModelOptions, get_model
from dhq.cli.scenario import (
    SCHEMA, load_events, load_igus_group, load_scenario, parse_scenario, scenario_document,
)
from dhq.histories import Reference
from dhq.spacetime import Event

QUBIT = {
    'schema': SCHEMA,
    'label': 'qubit',
    'dimension': 2,
    'hamiltonian': {'matrix': [[0, 1], [1, 0]]},
    'initial_state': [1, 0],
    'alternative_sets': [
        {'time': 0, 'label': 'z0', 'projectors': [
            {'name': 'up', 'matrix': [[1, 0], [0, 0]]},
            {'name': 'down', 'complement': 'up'},
        ]},
        {'time': 1, 'label': 'z1', 'projectors': [
            {'name': 'up', 'span': [[1, 0]]},
            {'name': 'down', 'complement': 'up'},
        ]},
    ],
    'partitions': {
        'first': {'up': ['up,up', 'down,up'], 'down': ['up,down', 'down,down']},
    },
    'data': 'up@1',
}


def qubit(**changes) -> dict:
    document = copy.deepcopy(QUBIT)
    document.update(changes)
    return document


class TestLoadScenario:

    def test_load(self):
        scenario = load_scenario(qubit())
        grid = scenario.grid
        assert grid.label == 'qubit'
        assert grid.shape == (2, 2)
        assert grid.sets[1].names == ('up', 'down')
        assert scenario.data == Reference('up', 1)
        assert scenario.partitions['first'].labels == ('up', 'down')

    def test_dynamics(self):
        grid = load_scenario(qubit()).grid
        # |0> precesses under sigma_x; p(up at t=1) = cos^2(1)
        branch = grid.branch_vector((0, 0))
        assert branch.norm_squared == pytest.approx(math.cos(1) ** 2)

    def test_complex_pairs(self):
        scenario = load_scenario(qubit(initial_state=[[0, 1], 0]))
        assert_close(scenario.grid.initial_state.amplitudes, [1j, 0])

    def test_defaults(self):
        document = qubit()
        for key in ('label', 'hamiltonian', 'partitions', 'data'):
            del document[key]
        scenario = load_scenario(document)
        assert scenario.grid.hamiltonian.is_zero
        assert scenario.partitions == {}
        assert scenario.data is None

    @pytest.mark.parametrize(['changes', 'invariant', 'location'], (
        ({'schema': 'dhq-scenario/2'}, 'schema', '$.schema'),
        ({'colour': 'blue'}, 'schema', '$.colour'),
        ({'dimension': 0}, 'schema', '$.dimension'),
        ({'initial_state': [1, 1]}, 'normalization', '$.initial_state'),
        ({'initial_state': [1, 0, 0]}, 'dimension', '$.initial_state'),
        ({'hamiltonian': {'matrix': [[0, 1], [0, 0]]}}, 'hermiticity', '$.hamiltonian.matrix'),
        ({'layout': [3]}, 'dimension', '$.layout'),
        ({'data': 'up@5'}, 'reference', '$.data'),
        ({'data': 'sideways@1'}, 'reference', '$.data'),
    ))
    def test_invalid(self, changes, invariant, location):
        with pytest.raises(errors.ValidationError) as err:
            load_scenario(qubit(**changes))
        assert err.value.invariant == invariant
        assert err.value.location == location

    def test_not_exhaustive(self):
        document = qubit()
        document['alternative_sets'][0]['projectors'] = [{'name': 'up', 'matrix': [[1, 0], [0, 0]]}]
        with pytest.raises(errors.ValidationError) as err:
            load_scenario(document)
        assert err.value.invariant == 'completeness'
        assert err.value.location == '$.alternative_sets[0]'

    def test_times_must_increase(self):
        document = qubit()
        document['alternative_sets'][1]['time'] = 0
        with pytest.raises(errors.ValidationError) as err:
            load_scenario(document)
        assert err.value.invariant == 'strictly increasing times'

    def test_not_a_projector(self):
        document = qubit()
        document['alternative_sets'][0]['projectors'][0]['matrix'] = [[1, 0], [0, 0.5]]
        with pytest.raises(errors.ValidationError) as err:
            load_scenario(document)
        assert err.value.invariant == 'projector'
        assert err.value.location == '$.alternative_sets[0].projectors[0]'

    def test_forward_complement(self):
        document = qubit()
        document['alternative_sets'][0]['projectors'].reverse()
        with pytest.raises(errors.ValidationError) as err:
            load_scenario(document)
        assert err.value.invariant == 'reference'
        assert err.value.location == '$.alternative_sets[0].projectors[0].complement'

    def test_repeated_name(self):
        document = qubit()
        document['alternative_sets'][0]['projectors'][1]['name'] = 'up'
        with pytest.raises(errors.ValidationError) as err:
            load_scenario(document)
        assert err.value.invariant == 'unique names'

    def test_projector_source(self):
        document = qubit()
        document['alternative_sets'][0]['projectors'][1] = {'name': 'down'}
        with pytest.raises(errors.ValidationError) as err:
            load_scenario(document)
        assert err.value.invariant == 'schema'
        assert err.value.location.startswith('$.alternative_sets[0].projectors[1]')

    def test_degenerate_span(self):
        document = qubit()
        document['alternative_sets'][1]['projectors'][0]['span'] = [[1, 0], [2, 0]]
        with pytest.raises(errors.ValidationError) as err:
            load_scenario(document)
        assert err.value.invariant == 'span'

    @pytest.mark.parametrize(['classes', 'invariant'], (
        ({'up': ['up,up', 'down,up'], 'down': ['up,down']}, 'exhaustive and exclusive classes'),
        ({'up': ['up,up', 'down,up'], 'down': ['up,down', 'down,down', 'up,up']}, 'exhaustive and exclusive classes'),
        ({'all': ['up,up', 'down,up', 'up,down', 'sideways']}, 'history labels'),
    ))
    def test_invalid_partition(self, classes, invariant):
        with pytest.raises(errors.ValidationError) as err:
            load_scenario(qubit(partitions={'bad': classes}))
        assert err.value.invariant == invariant
        assert err.value.location.startswith('$.partitions.bad')


class TestParseScenario:

    def test_file(self, json_file):
        scenario = parse_scenario(json_file(qubit()))
        assert scenario.grid.label == 'qubit'

    def test_not_json(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"schema": \n', encoding='utf-8')
        with pytest.raises(errors.ParseError) as err:
            parse_scenario(path)
        assert err.value.location.startswith('line 2 column')

    def test_missing_file(self, tmp_path):
        with pytest.raises(errors.ParseError):
            parse_scenario(tmp_path / 'missing.json')


class TestRoundTrip:

    @pytest.mark.parametrize(['name', 'options'], (
        ('three-box', ModelOptions()),
        ('two-slit', ModelOptions(bins=4, environment=True)),
        ('spin-env', ModelOptions(n_env=3, theta=1.0)),
    ))
    def test_builtins(self, scenario_file, name, options):
        original = get_model(name, options).build()
        loaded = parse_scenario(scenario_file(original))
        assert loaded.grid.label == original.grid.label
        assert loaded.grid.times == original.grid.times
        assert loaded.data == original.data
        assert set(loaded.partitions) == set(original.partitions)
        for history in original.grid.histories():
            assert_close(loaded.grid.branch_vector(history).amplitudes,
                         original.grid.branch_vector(history).amplitudes, 1e-14)

    def test_document_is_stable(self):
        scenario = load_scenario(qubit())
        document = scenario_document(scenario)
        assert scenario_document(load_scenario(document)) == document


class TestEventFiles:

    def test_events(self, json_file):
        events = load_events(json_file({'events': {'here': [0], 'there': [0, 1, 0, 0]}}))
        assert events == {'here': Event(0), 'there': Event(0, 1)}

    @pytest.mark.parametrize('coordinates', ([], [0, 1, 2, 3, 4]))
    def test_bad_event(self, json_file, coordinates):
        with pytest.raises(errors.ValidationError) as err:
            load_events(json_file({'events': {'here': coordinates}}))
        assert err.value.location == '$.events.here'

    def test_igus_group(self, json_file):
        group = load_igus_group(json_file({
            'igus': [{'name': 'alice', 'position': [0, 0, 0]},
                     {'name': 'bob', 'position': [0.004, 0, 0], 'velocity': [0, 1e-6, 0]}],
            'tau_star': 0.1,
            'env_timescale': 10,
        }))
        assert [m.name for m in group.members] == ['alice', 'bob']
        assert group.members[1].velocity == (0, 1e-6, 0)

    def test_superluminal_igus(self, json_file):
        with pytest.raises(errors.ValidationError) as err:
            load_igus_group(json_file({
                'igus': [{'name': 'tachyon', 'position': [0, 0, 0], 'velocity': [2, 0, 0]}],
                'tau_star': 0.1,
                'env_timescale': 10,
            }))
        assert err.value.invariant == 'subluminal velocity'
        assert err.value.location == '$.igus[0]'

    @pytest.mark.parametrize('document', (
        {'igus': [], 'tau_star': 0.1, 'env_timescale': 10},
        {'igus': [{'name': 'a', 'position': [0, 0, 0]}], 'tau_star': 0, 'env_timescale': 10},
        {'igus': [{'name': 'a', 'position': [0, 0]}], 'tau_star': 0.1, 'env_timescale': 10},
    ))
    def test_invalid_igus_group(self, json_file, document):
        with pytest.raises(errors.ValidationError) as err:
            load_igus_group(json_file(document))
        assert err.value.invariant == 'schema'
