import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delamina.constructions import flat, laminate
from delamina.fields import Grid, ScalarField, SymTensorField, VectorField2
from delamina.io import (
    FieldFormatError,
    atomic_write_bytes,
    field_from_bytes,
    field_to_bytes,
    load_field,
    save_field,
    save_state,
)


@settings(max_examples=20, deadline=None)
@given(st.integers(4, 12), st.integers(4, 12), st.integers(0, 2**32 - 1))
def test_roundtrip_all_kinds(nx, ny, seed):
    g = Grid(nx, ny, 1.5, 0.5)
    rng = np.random.default_rng(seed)
    r = lambda: rng.standard_normal(g.shape)  # noqa: E731
    for f in (ScalarField(g, r()), VectorField2(g, r(), r()), SymTensorField(g, r(), r(), r())):
        back = field_from_bytes(field_to_bytes(f))
        assert type(back) is type(f) and back.grid == g
        for name in ("values", "x", "y", "xx", "xy", "yy"):
            if hasattr(f, name):
                assert np.array_equal(getattr(back, name), getattr(f, name))


def test_serialization_is_deterministic():
    g = Grid(8, 8)
    f = ScalarField(g, np.arange(81.0).reshape(9, 9))
    assert field_to_bytes(f) == field_to_bytes(ScalarField(g, f.values.copy()))


def test_malformed_files():
    g = Grid(4, 4)
    data = field_to_bytes(ScalarField(g, np.zeros(g.shape)))
    with pytest.raises(FieldFormatError):
        field_from_bytes(b"no header")
    with pytest.raises(FieldFormatError):
        field_from_bytes(data[:-8])
    header, _, payload = data.partition(b"\n")
    doc = json.loads(header)
    doc["version"] = 99
    with pytest.raises(FieldFormatError):
        field_from_bytes(json.dumps(doc).encode() + b"\n" + payload)


def test_atomic_write_replaces_and_leaves_no_temp(tmp_path):
    p = tmp_path / "sub" / "a.bin"
    atomic_write_bytes(p, b"one")
    atomic_write_bytes(p, b"two")
    assert p.read_bytes() == b"two"
    assert sorted(x.name for x in p.parent.iterdir()) == ["a.bin"]


def test_save_and_load_field(tmp_path):
    g = Grid(6, 6)
    f = VectorField2(g, np.ones(g.shape), np.zeros(g.shape))
    save_field(tmp_path / "u.field", f)
    back = load_field(tmp_path / "u.field")
    assert np.array_equal(back.x, f.x)


def test_save_state_sidecar(tmp_path):
    save_state(tmp_path / "flat", flat(Grid(8, 8)))
    meta = json.loads((tmp_path / "flat" / "state.json").read_text())
    assert meta["name"] == "flat" and meta["params_used"] is None
    st_ = laminate(Grid(32, 512), 1e-2, 20.0)
    save_state(tmp_path / "lam", st_)
    meta = json.loads((tmp_path / "lam" / "state.json").read_text())
    assert meta["params_type"] == "LaminateParams"
    assert meta["boundary"] == {"left": True, "right": False, "bottom": False, "top": False}
