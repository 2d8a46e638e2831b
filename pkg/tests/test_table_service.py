import pytest

from chg_twin.core.tables import Column, Table
from chg_twin.exceptions import EmptyFile, RaggedRow, TableLookupError, TypeInferenceConflict
from chg_twin.services.table_service import (
    generate_synthetic_building_load,
    generate_synthetic_solar,
    infer_column_type,
    load_csv_table,
    write_csv_table,
)


def test_infer_column_type():
    assert infer_column_type(["1", "2"]) == "integer"
    assert infer_column_type(["1", "2.5"]) == "real"
    assert infer_column_type(["true", "False"]) == "boolean"
    assert infer_column_type(["a", "1"]) == "text"
    assert infer_column_type([]) == "text"


def test_load_csv(tmp_path):
    path = tmp_path / "load.csv"
    path.write_text("hour,kw,on\n1,2.5,true\n2,3,false\n", encoding="utf-8")
    table = load_csv_table(str(path))
    assert table.name == "load"
    assert table.columns == (Column("hour", "integer"), Column("kw", "real"), Column("on", "boolean"))
    assert table.lookup("hour", 2, "kw") == 3.0


def test_type_inference_window(tmp_path):
    path = tmp_path / "late.csv"
    path.write_text("v\n1\n2\nx\n", encoding="utf-8")
    with pytest.raises(TypeInferenceConflict):
        load_csv_table(str(path), inference_rows=2)


def test_malformed_files(tmp_path):
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("a,b\n1\n", encoding="utf-8")
    with pytest.raises(RaggedRow):
        load_csv_table(str(ragged))
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(EmptyFile):
        load_csv_table(str(empty))


def test_write_then_read(tmp_path):
    table = Table("t", (Column("k", "integer"), Column("v", "real")), ((1, 0.1), (2, 1e-9)))
    path = tmp_path / "t.csv"
    write_csv_table(table, str(path))
    assert path.read_text(encoding="utf-8") == "k,v\n1,0.1\n2,1e-09\n"
    assert load_csv_table(str(path), "t") == table


def test_lookup_is_kind_exact():
    table = Table("t", (Column("k", "integer"), Column("v", "text")), ((1, "one"),))
    assert table.lookup("k", 1, "v") == table.scan("k", 1, "v") == "one"
    with pytest.raises(TableLookupError):
        table.lookup("k", 1.0, "v")
    with pytest.raises(TableLookupError):
        table.lookup("missing", 1, "v")


def test_synthetic_solar_shape():
    table = generate_synthetic_solar(48, seed=1)
    assert len(table) == 48
    assert table.column("hour_index")[:3] == [1, 2, 3]
    ghi = table.column("ghi")
    assert ghi[0] == 0.0 and ghi[23] == 0.0
    assert ghi[12] > 400.0
    assert generate_synthetic_solar(48, seed=1) == table


def test_synthetic_building_load():
    table = generate_synthetic_building_load(24 * 7, seed=2, base_kw=10.0, noise_fraction=0.0)
    normal = table.column("normal_kw")
    assert normal[9] == pytest.approx(10.0)
    assert normal[3] == pytest.approx(3.0)
    assert normal[24 * 5 + 12] == pytest.approx(3.0)
    for n, lights, equipment in zip(normal, table.column("lights_kw"), table.column("equipment_kw")):
        assert lights + equipment <= n


def test_header_only_file_has_no_rows(tmp_path):
    path = tmp_path / "empty_rows.csv"
    path.write_text("hour,kw\n", encoding="utf-8")
    table = load_csv_table(str(path))
    assert len(table) == 0
    assert [c.name for c in table.columns] == ["hour", "kw"]


def test_solar_peaks_at_midsummer_noon():
    table = generate_synthetic_solar(172 * 24, noise_fraction=0.0)
    assert table.column("ghi")[171 * 24 + 12] == pytest.approx(1000.0)
