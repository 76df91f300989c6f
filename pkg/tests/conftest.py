import numpy as np
import pytest

from reachcast import synth
from reachcast.core import RECORDED, SpeedTrace, Trial


@pytest.fixture(scope="session")
def small_cohort():
    """12 control + 12 stroke, P2, deterministic."""
    return synth.gen_cohort(12, 12, "P2", seed=11, label="small")


@pytest.fixture(scope="session")
def tiny_cohort():
    return synth.gen_cohort(3, 3, "P2", seed=23, label="tiny")


def make_trace(samples=None, duration_ms=1300.0, target_on_ms=200.0, provenance=RECORDED):
    if samples is None:
        samples = np.zeros(64)
    return SpeedTrace(
        samples=np.asarray(samples, dtype=np.float64),
        duration_ms=duration_ms,
        target_on_offset_ms=target_on_ms,
        provenance=provenance,
    )


def make_trial(samples=None, direction=0, sequence_index=0, is_catch=False, **kw):
    return Trial(
        trace=make_trace(samples, **{k: v for k, v in kw.items() if k in
                                     ("duration_ms", "target_on_ms", "provenance")}),
        direction=direction,
        sequence_index=sequence_index,
        is_catch=is_catch,
        metadata_rt_ms=kw.get("metadata_rt_ms"),
        metadata_mt_ms=kw.get("metadata_mt_ms"),
    )
