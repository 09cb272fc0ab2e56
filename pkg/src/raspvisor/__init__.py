"""Batch virtual-machine suite for a finite word-addressed register machine.

Modules: machine (scalar semantics), lang (array language front end),
lowering (compiler), oracle (big-step reference evaluator), sampler
(exact-uniform program generation), hypervisor (batched execution),
cli (command-line entry points), selftest (differential suites).
"""

__version__ = "0.1.0"

from .errors import (CapacityError, EmptyLanguageError, EnumerationLimitError,
                     LangError, RaspError)
from .machine import (Config, MachineParams, Opcode, Program, init_config,
                      run_to_fixpoint, step_branchless, step_reference)
from .lang import parse_source, pretty_print, token_length, tokenize
from .lowering import LayoutInfo, addr_of, disassemble, lower
from .oracle import OracleResult, OracleStatus, evaluate
from .sampler import (DeterministicStream, count_programs, enumerate_all,
                      sample_inputs, sample_program, unrank_program)
from .hypervisor import (BatchConfig, BatchResult, VmSlot, VmStatus,
                         build_workload, collect_histogram, run_batch)

__all__ = [
    "BatchConfig", "BatchResult", "CapacityError", "Config",
    "DeterministicStream", "EmptyLanguageError", "EnumerationLimitError",
    "LangError", "LayoutInfo", "MachineParams", "Opcode", "OracleResult",
    "OracleStatus", "Program", "RaspError", "VmSlot", "VmStatus", "addr_of",
    "build_workload", "collect_histogram", "count_programs", "disassemble",
    "enumerate_all", "evaluate", "init_config", "lower", "parse_source",
    "pretty_print", "run_batch", "run_to_fixpoint", "sample_inputs",
    "sample_program", "step_branchless", "step_reference", "token_length",
    "tokenize", "unrank_program", "__version__",
]
