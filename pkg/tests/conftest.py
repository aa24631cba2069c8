# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

import numpy as np
import pytest
from pyfakefs import fake_filesystem_unittest

from pyfcaging.electrochem import PhysicalConstants, QuasiStaticParams
from pyfcaging.synthdata import SynthSettings, generate_database


@pytest.fixture
def fs_no_root():
    with fake_filesystem_unittest.Patcher(allow_root_user=False) as patcher:
        yield patcher.fs


@pytest.fixture(scope="session")
def constants():
    return PhysicalConstants()


@pytest.fixture
def params():
    return QuasiStaticParams(j0=1e-6, jn=1e-3, beta=0.2, jlim=1.8, r_ohm=0.08)


@pytest.fixture(scope="session")
def truth(constants):
    return SynthSettings().build(constants)


@pytest.fixture(scope="session")
def synth_db(truth):
    return generate_database(truth, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(20250101)
