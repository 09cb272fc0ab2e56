"""The differential suites must pass when honest and catch planted faults."""

from raspvisor.machine import StepOutcome, step_branchless
from raspvisor.lowering import lower
from raspvisor.selftest import (random_config_corpus,
                                suite_compiler_vs_oracle,
                                suite_sampler_vs_enumerator,
                                suite_schedule_independence,
                                suite_step_equivalence)


def test_corpus_is_deterministic():
    a = list(random_config_corpus(50, seed=9))
    b = list(random_config_corpus(50, seed=9))
    assert a == b
    assert any(x != y for x, y in zip(a, list(random_config_corpus(50, seed=10))))


def test_suites_pass_at_reduced_scale():
    ok_flags = []
    for name, ok, detail in (
            suite_step_equivalence(cases=1500, seed=31),
            suite_compiler_vs_oracle(count=40, seed=32, lengths=(16, 23)),
            suite_sampler_vs_enumerator(lengths=(16, 21), draws=100, seed=33),
            suite_schedule_independence(d=60, length=23, seed=34, tau_max=300)):
        ok_flags.append((name, ok, detail))
        assert ok, (name, detail)
    assert len({name for name, _, _ in ok_flags}) == 4


def test_step_suite_catches_opcode_table_typo():
    # dispatch ADD through the MUL handler, as an opcode-table typo would
    def typo_step(c, p):
        if c.M[c.i % p.n] == 2:
            M2 = list(c.M)
            M2[c.i % p.n] = 3
            out = step_branchless(c._replace(M=tuple(M2)), p)
            nM = list(out.next.M)
            nM[c.i % p.n] = 2
            nxt = out.next._replace(M=tuple(nM))
            return StepOutcome(nxt, nxt == c)
        return step_branchless(c, p)

    name, ok, detail = suite_step_equivalence(cases=1500, seed=31,
                                              step_b=typo_step)
    assert not ok and detail.startswith("case ")


def test_compiler_suite_catches_layout_off_by_one():
    # shift every output flush one cell too far
    def skewed_lower(fd, p):
        prog, layout = lower(fd, p)
        words = list(prog.words)
        for k in range(0, len(words), 2):
            if words[k] == 7:  # PRI
                words[k + 1] += 1
        return type(prog)(tuple(words)), layout

    name, ok, detail = suite_compiler_vs_oracle(count=60, seed=32,
                                                lengths=(23, 30),
                                                lower_fn=skewed_lower)
    assert not ok and "vm y=" in detail
