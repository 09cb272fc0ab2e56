"""Batched execution: agreement with the scalar loop, schedule independence,
budget edge cases, packing validation, histograms, and workload assembly."""

import pytest

from raspvisor.errors import CapacityError
from raspvisor.hypervisor import (BatchConfig, HISTOGRAM_KEYS, VmStatus,
                                  build_workload, collect_histogram,
                                  run_batch, throughput_bench)
from raspvisor.machine import (Config, MachineParams, Program, init_config,
                               run_to_fixpoint)
from raspvisor.selftest import random_config_corpus


def _nop_cfg(p):
    return init_config(Program((0, 0)), [], p)


def _spin_cfg(p):
    # BNZ with a nonzero accumulator at a cold address: runs forever
    c = init_config(Program((1, 1, 5, 0)), [], p)
    return c


# --- agreement with the scalar loop -------------------------------------------

@pytest.mark.parametrize("tau_max,epoch", [(200, 64), (37, 5), (1, 1)])
def test_batch_matches_scalar(tau_max, epoch):
    cases = list(random_config_corpus(300, seed=21))
    by_params = {}
    for c, p in cases:
        by_params.setdefault(p, []).append(c)
    for p, configs in by_params.items():
        res = run_batch(configs, p, BatchConfig(tau_max=tau_max, epoch=epoch))
        for slot, c0 in zip(res.slots, configs):
            cf, tau = run_to_fixpoint(c0, tau_max, p)
            assert slot.config == cf
            if tau is None:
                assert slot.status is VmStatus.BUDGET_EXHAUSTED
                assert slot.tau_h is None and slot.steps_taken == tau_max
            else:
                assert slot.status is VmStatus.HALTED
                assert slot.tau_h == tau


def test_schedule_independence():
    cases = list(random_config_corpus(120, seed=22))
    p = cases[0][1]
    configs = [c for c, q in cases if q == p]
    baseline = None
    for workers in (1, 2, 5):
        for epoch in (1, 3, 64):
            res = run_batch(configs, p,
                            BatchConfig(tau_max=500, epoch=epoch,
                                        workers=workers))
            sig = [(s.status, s.steps_taken, s.tau_h, s.config)
                   for s in res.slots]
            if baseline is None:
                baseline = sig
            else:
                assert sig == baseline
    assert res.histogram == run_batch(
        configs, p, BatchConfig(tau_max=500)).histogram


# --- budget edges ----------------------------------------------------------------

def test_tau_max_zero_classifies_fixed_starts():
    p = MachineParams(w=8, n=8, ell=2, s=2, mu=1)
    res = run_batch([_nop_cfg(p), _spin_cfg(p)], p, BatchConfig(tau_max=0))
    halted, spinning = res.slots
    assert halted.status is VmStatus.HALTED and halted.tau_h == 0
    assert spinning.status is VmStatus.BUDGET_EXHAUSTED
    assert spinning.steps_taken == 0


def test_halt_exactly_at_budget():
    p = MachineParams(w=8, n=8, ell=2, s=2, mu=1)
    c0 = init_config(Program((1, 5, 4, 6)), [], p)  # fixed after 2 steps
    res = run_batch([c0], p, BatchConfig(tau_max=2))
    assert res.slots[0].status is VmStatus.HALTED and res.slots[0].tau_h == 2
    res = run_batch([c0], p, BatchConfig(tau_max=1))
    assert res.slots[0].status is VmStatus.BUDGET_EXHAUSTED


def test_budget_equal_to_rounds_times_epoch():
    # tau_max a multiple of the epoch: the final sweep must still classify
    p = MachineParams(w=8, n=8, ell=2, s=2, mu=1)
    c0 = init_config(Program((1, 5, 4, 6)), [], p)
    for tau_max, epoch in ((2, 2), (4, 2), (6, 3)):
        res = run_batch([c0, _spin_cfg(p)], p,
                        BatchConfig(tau_max=tau_max, epoch=epoch))
        assert res.slots[0].status is VmStatus.HALTED
        assert res.slots[0].tau_h == 2
        assert res.slots[1].status is VmStatus.BUDGET_EXHAUSTED


def test_empty_batch():
    p = MachineParams(w=8, n=8, ell=2, s=2, mu=1)
    res = run_batch([], p, BatchConfig(tau_max=10))
    assert len(res.slots) == 0
    assert res.histogram == {}


# --- validation -------------------------------------------------------------------

def test_batch_config_validation():
    with pytest.raises(ValueError):
        BatchConfig(tau_max=-1)
    with pytest.raises(ValueError):
        BatchConfig(tau_max=1, epoch=0)
    with pytest.raises(ValueError):
        BatchConfig(tau_max=1, workers=-1)


def test_memory_budget_enforced():
    p = MachineParams(w=8, n=8, ell=2, s=2, mu=1)
    cfgs = [_nop_cfg(p)] * 10
    with pytest.raises(CapacityError, match="budget"):
        run_batch(cfgs, p, BatchConfig(tau_max=1, memory_budget_words=10))


def test_out_of_range_words_rejected():
    p = MachineParams(w=8, n=8, ell=2, s=2, mu=1)
    good = _nop_cfg(p)
    bad = Config(i=0, a=0, M=(0, 300, 0, 0, 0, 0, 0, 0),
                 u=good.u, y=good.y)
    with pytest.raises(ValueError, match="2\\^w"):
        run_batch([good, bad], p, BatchConfig(tau_max=1))


def test_mismatched_config_shape_rejected():
    p = MachineParams(w=8, n=8, ell=2, s=2, mu=1)
    short = Config(i=0, a=0, M=(0,) * 7, u=(0, 0, 0), y=(0, 0, 0))
    with pytest.raises(ValueError):
        run_batch([short], p, BatchConfig(tau_max=1))


# --- histograms and slot views ------------------------------------------------------

def test_histogram_keys_complete():
    assert len(HISTOGRAM_KEYS) == 102
    assert HISTOGRAM_KEYS[0] == "0" and HISTOGRAM_KEYS[99] == "99"
    assert HISTOGRAM_KEYS[100:] == ("100+", "nonhalt")


def test_collect_histogram_paths_agree():
    cases = list(random_config_corpus(200, seed=23))
    p = cases[0][1]
    configs = [c for c, q in cases if q == p]
    res = run_batch(configs, p, BatchConfig(tau_max=300))
    fast = collect_histogram(res.slots)
    generic = collect_histogram(list(res.slots))
    assert fast == generic
    assert set(fast) == set(HISTOGRAM_KEYS)
    assert sum(fast.values()) == len(configs)
    halted = sum(1 for s in res.slots if s.status is VmStatus.HALTED)
    assert fast["nonhalt"] == len(configs) - halted


def test_slot_view_sequence_protocol():
    p = MachineParams(w=8, n=8, ell=2, s=2, mu=1)
    res = run_batch([_nop_cfg(p), _spin_cfg(p), _nop_cfg(p)], p,
                    BatchConfig(tau_max=5))
    view = res.slots
    assert len(view) == 3
    assert view[-1].status is VmStatus.HALTED
    assert [s.status for s in view[0:2]] == [VmStatus.HALTED,
                                             VmStatus.BUDGET_EXHAUSTED]
    with pytest.raises(IndexError):
        view[3]


# --- workload assembly ----------------------------------------------------------------

def test_build_workload_deterministic(p32):
    a = build_workload(23, 40, 3, p32)
    b = build_workload(23, 40, 3, p32)
    assert a.configs == b.configs and a.aborted == b.aborted
    assert len(a.configs) == 40 and a.aborted == []
    assert a.asts is None


def test_build_workload_zero_inputs(p32):
    wl = build_workload(23, 10, 3, p32, zero_inputs=True, keep_asts=True)
    assert len(wl.asts) == 10
    for c in wl.configs:
        assert all(v == 0 for v in c.u[1:])


def test_build_workload_aborts_on_tight_memory():
    # worst 16-token draw: 9 inputs and 9 outputs, m = 9 + 2*(9+1) = 29
    # pairs, so 58 + 5 + 18 region cells = 81 words suffice for every draw
    roomy = MachineParams(w=32, n=100, ell=9, s=2, mu=7)
    wl = build_workload(16, 5, 0, roomy)
    assert wl.aborted == [] and len(wl.configs) == 5
    # a three-cell region span cannot hold any 16-token draw's arities
    cramped = MachineParams(w=32, n=16, ell=1, s=1, mu=1)
    wl = build_workload(16, 5, 0, cramped)
    assert len(wl.aborted) == 5 and wl.configs == []
    for k, reason in wl.aborted:
        assert isinstance(reason, str) and reason


def test_default_geometry_fits_moderate_lengths(p32):
    # abort-free through L = 60 at the default geometry; only very long,
    # halt-dense draws (observed from L = 100 up) can outgrow 250 words
    for length in (16, 23, 30, 60):
        wl = build_workload(length, 800, 0, p32)
        assert wl.aborted == []


def test_first_index_offsets_the_stream(p32):
    head = build_workload(23, 6, 9, p32)
    tail = build_workload(23, 3, 9, p32, first_index=3)
    assert head.configs[3:] == tail.configs


def test_throughput_bench_rows(p32):
    rows = throughput_bench(23, 50, 100, [1, 1], seed=1, params=p32)
    assert [r["workers"] for r in rows] == [1, 1]
    assert all(r["vms"] == 50 for r in rows)
    assert rows[0]["speedup"] == 1.0
    assert rows[1]["speedup"] > 0
