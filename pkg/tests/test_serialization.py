import json
import math
import os

import numpy as np
import pandas as pd
import pytest

from sata.core import Instance
from sata.serialization import (InstanceFormatError, dump_instance, instance_from_dict, instance_to_dict, load_instance,
                                to_json, write_csv_atomically, write_json_atomically)

FIXTURE = os.path.join(os.path.dirname(__file__), '..', 'fixtures', 'appendix_c.json')


def test_fixture_loads_with_extra_keys_ignored():
    inst = load_instance(FIXTURE)
    assert inst.robot_count == 2
    assert inst.primitives_per_robot == (2, 2)
    assert inst.target_count == 2
    assert inst.weights == {(1, 1, 1): 1.0, (2, 2, 2): 1.0}


def test_dumped_instance_loads_back(tmp_path):
    inst = Instance(2, (1, 3), 3, {(1, 1, 2): 0.25, (2, 3, 1): 1.0})
    path = str(tmp_path / 'instance.json')
    dump_instance(inst, path)
    assert load_instance(path) == inst
    assert not [name for name in os.listdir(tmp_path) if name.startswith('.tmp-')]


def test_explicit_primitive_count_allows_silent_primitives():
    data = {'robots': [{'id': 1, 'primitive_count': 3, 'primitives': [{'id': 1, 'targets': []}]}], 'target_count': 1}
    assert instance_from_dict(data).primitives_per_robot == (3,)


def test_primitives_without_edges_are_written():
    data = instance_to_dict(Instance(1, (2,), 1, {}))
    assert data['robots'][0]['primitives'] == [{'id': 1, 'targets': []}, {'id': 2, 'targets': []}]


@pytest.mark.parametrize('data', [
    {'robots': [{'id': 2, 'primitives': []}], 'target_count': 1},
    {'robots': [{'id': 1, 'primitives': [{'id': 1, 'targets': [{'target': 1}]}]}], 'target_count': 1},
    {'robots': [], 'target_count': 'many'},
    {'target_count': 1},
])
def test_malformed_instances_raise(data):
    with pytest.raises(InstanceFormatError):
        instance_from_dict(data)


def test_invalid_json_raises_format_error(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"robots": [')
    with pytest.raises(InstanceFormatError):
        load_instance(str(path))


def test_write_csv_atomically_creates_directories(tmp_path):
    path = str(tmp_path / 'nested' / 'frame.csv')
    write_csv_atomically(pd.DataFrame({'a': [1, 2], 'b': ['x', 'y']}), path)
    with open(path) as f:
        assert f.read() == "a,b\n1,x\n2,y\n"


def test_non_finite_numbers_become_null(tmp_path):
    payload = {'value': math.inf, 'ratio': math.nan, 'nested': [1.5, -math.inf, np.float64('nan')], 'array': np.array([0.0, np.inf])}
    expected = {'value': None, 'ratio': None, 'nested': [1.5, None, None], 'array': [0.0, None]}
    text = to_json(payload)
    assert 'Infinity' not in text and 'NaN' not in text
    assert json.loads(text) == expected
    path = tmp_path / 'payload.json'
    write_json_atomically(payload, str(path))
    assert json.loads(path.read_text()) == expected
