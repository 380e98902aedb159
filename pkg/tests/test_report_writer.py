import json

import pandas as pd
import pytest

from custom_exceptions import ParameterError
from report_writer import ExperimentRecord, read_csv, record_path_for, write_csv, write_json, write_record
from version import get_version

def test_csv_carries_its_config(tmp_path):
    path = write_csv(pd.DataFrame({"value": [1, 2], "count": [3, 4]}), tmp_path / "h.csv", {"n": 7, "seed": 1})
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == '# config: {"n": 7, "seed": 1}'
    assert lines[1] == "value,count"
    df, config = read_csv(path)
    assert config == {"n": 7, "seed": 1}
    assert df["count"].tolist() == [3, 4]

def test_json_is_sorted_and_embeds_config(tmp_path):
    path = write_json({"b": 1, "a": float("nan")}, tmp_path / "r.json", config={"n": 7})
    data = json.loads(path.read_text(encoding="utf-8"))
    assert list(data) == ["a", "b", "config"]
    assert data["a"] == "nan"

def test_record_sits_next_to_output(tmp_path):
    out = tmp_path / "hist.csv"
    assert record_path_for(out) == tmp_path / "hist.record.json"
    record = ExperimentRecord(command="sample", config={"n": 7}, summary={"mean": 1.5}, outputs=[str(out)])
    path = write_record(record, out)
    loaded = ExperimentRecord.from_file(path)
    assert loaded.command == "sample"
    assert loaded.version == get_version()
    assert loaded.summary == {"mean": 1.5}

@pytest.mark.parametrize("text", ['{"unexpected": 1}', '{"command": "sample", "config": [1]}', "[1, 2]", "{'command': 'sample'"])
def test_from_file_rejects_foreign_json(tmp_path, text):
    path = tmp_path / "x.json"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ParameterError):
        ExperimentRecord.from_file(path)
