# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import logging
import os
import pathlib

import numpy as np
import pandas as pd
import pytest

from pyfcaging.database import (
    AgingDatabase,
    read_database,
    read_json,
    write_database,
    write_json,
    write_text,
)
from pyfcaging.exceptions import DataValidationError


@pytest.fixture
def small_db(synth_db):
    return AgingDatabase(curves=synth_db.curves[:3], voltage=synth_db.voltage[:1_001])


def test_database_round_trip(fs_no_root, caplog, small_db):
    write_database(small_db, "/db")

    with caplog.at_level(logging.INFO, logger="pyfcaging"):
        loaded = read_database("/db")

    np.testing.assert_allclose(loaded.voltage, small_db.voltage, rtol=1e-15)
    assert [curve.t for curve in loaded.curves] == [0.0, 500.0, 1000.0]
    for found, expected in zip(loaded.curves, small_db.curves):
        np.testing.assert_allclose(found.j, expected.j, rtol=1e-15)
        np.testing.assert_allclose(found.u, expected.u, rtol=1e-15)
        np.testing.assert_allclose(found.profile_r, expected.profile_r, rtol=1e-15)

    message = "Loaded 3 characterizations and 1001 hourly voltages from /db"
    assert message in caplog.text


def test_database_file_format(fs_no_root, small_db):
    write_database(small_db, "/db")

    content = pathlib.Path("/db/voltage.csv").read_bytes()
    assert content.startswith(b"t_h,u_V\n0,")
    assert b"\r\n" not in content

    header = pathlib.Path("/db/r_ohm.csv").read_text().splitlines()[0]
    assert header == "t_h,j_A_cm2,r_ohm_cm2"


def test_read_database_without_files(fs_no_root):
    os.makedirs("/db")

    with pytest.raises(OSError):
        read_database("/db")


def test_read_database_with_wrong_columns(fs_no_root, small_db):
    write_database(small_db, "/db")
    pathlib.Path("/db/polarization.csv").write_text("t,j,u\n0,0.1,0.9\n")

    with pytest.raises(DataValidationError) as err:
        read_database("/db")

    message = "File polarization.csv must have the columns t_h, j_A_cm2, u_V."
    assert message in str(err.value)


def test_read_database_with_hour_gaps(fs_no_root, caplog, small_db):
    write_database(small_db, "/db")
    pathlib.Path("/db/voltage.csv").write_text("t_h,u_V\n0,0.62\n2,0.61\n")

    with caplog.at_level(logging.ERROR, logger="pyfcaging"):
        with pytest.raises(DataValidationError) as err:
            read_database("/db")

    message = "Hourly voltage must start at 0 h without gaps."
    assert message in caplog.text

    message = "The voltage file must list hours 0, 1, 2, ..."
    assert message in str(err.value)


def test_read_database_without_profile(fs_no_root, small_db):
    write_database(small_db, "/db")
    profiles = pd.read_csv("/db/r_ohm.csv")
    profiles[profiles["t_h"] != 500.0].to_csv("/db/r_ohm.csv", index=False)

    with pytest.raises(DataValidationError) as err:
        read_database("/db")

    message = "Missing r_ohm profile at t=500.0 h."
    assert message in str(err.value)


def test_write_text_leaves_no_temporary_files(fs_no_root):
    write_text("first\n", "/out/report.txt")
    write_text("second\n", "/out/report.txt")

    assert os.listdir("/out") == ["report.txt"]
    assert pathlib.Path("/out/report.txt").read_text() == "second\n"


def test_json_round_trip(fs_no_root):
    write_json({"b": 1, "a": [1.5, None]}, "/out/data.json")

    assert pathlib.Path("/out/data.json").read_text().startswith('{\n  "a"')
    assert read_json("/out/data.json") == {"a": [1.5, None], "b": 1}


def test_read_json_with_error(fs_no_root, caplog):
    fs_no_root.create_file("/config.json", contents="{")

    with caplog.at_level(logging.ERROR, logger="pyfcaging"):
        with pytest.raises(DataValidationError) as err:
            read_json("/config.json")

    message = "Unable to decode a JSON document: /config.json"
    assert message in caplog.text

    message = "Malformed JSON document: /config.json"
    assert message in str(err.value)


def test_restrict(synth_db):
    window = synth_db.restrict(10_250)

    assert window.horizon == 10_250
    assert window.curves[-1].t == 10_000.0
    assert len(window.curves) == 21


def test_restrict_with_error(caplog, synth_db):
    with caplog.at_level(logging.ERROR, logger="pyfcaging"):
        with pytest.raises(DataValidationError) as err:
            synth_db.restrict(40_000)

    message = "t_n=40000 is outside of the recorded [0, 38072] h."
    assert message in caplog.text

    message = "The database covers [0, 38072] h, not t_n=40000."
    assert message in str(err.value)
