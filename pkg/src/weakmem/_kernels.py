"""JIT-compiled stress kernels: atomic slot accesses, barrier, interpreter.

All litmus tests execute through one generic worker kernel that interprets
the lowered ``(n, 6)`` opcode tables from :mod:`weakmem.builder` against a
flat ``int64`` state array.  Shared-location accesses are genuine machine
atomics: the intrinsics below emit LLVM ``load atomic`` / ``store atomic`` /
``atomicrmw`` instructions with the requested ordering, so the compiled loop
really does race the way the test declares.  Because the interpreter is
generic, the kernels compile once and are reused (and disk-cached) across
every test and process.

Thread coordination uses a sense-reversing counting barrier laid out in a
3-slot ``int64`` array: arrivals counter, global sense, and an abort flag
the orchestrator can raise to unblock spinning workers when a peer failed.
``sched_yield`` is declared as an external symbol rather than called through
ctypes so the kernels stay disk-cacheable.
"""

from __future__ import annotations

import numpy as np
from llvmlite import ir
from numba import njit, types
from numba.core import cgutils
from numba.extending import intrinsic
from numba.typed import Dict

from .builder import (
    N_COLS,
    OP_CLOAD,
    OP_LOAD,
    OP_LOCK,
    OP_STORE_CONST,
    OP_STORE_REG,
    OP_UNLOCK,
)

I64 = types.int64

#: Histogram key type: outcome tuples padded to 4 elements with zeros.
KEY_TYPE = types.UniTuple(types.int64, 4)

#: Barrier array layout.
BAR_COUNT, BAR_SENSE, BAR_ABORT = 0, 1, 2
BAR_SLOTS = 3

#: Spins before falling back to sched_yield in barrier/lock waits.
_SPIN_LIMIT = 512

_MODE_ACQUIRE = 2
_MODE_RELEASE = 3
_MODE_SEQ_CST = 4


def _elem_ptr(context, builder, aryty, arrv, idxv):
    ary = context.make_array(aryty)(context, builder, value=arrv)
    return builder.gep(ary.data, [idxv])


@intrinsic
def sched_yield(typingctx):
    """Yield the OS scheduler (external libc symbol; keeps caching valid)."""
    sig = types.int32()

    def codegen(context, builder, sig, args):
        fnty = ir.FunctionType(ir.IntType(32), [])
        fn = cgutils.get_or_insert_function(builder.module, fnty, "sched_yield")
        return builder.call(fn, [])

    return sig, codegen


@intrinsic
def rmw_add(typingctx, arr, idx, val):
    sig = I64(arr, types.intp, I64)

    def codegen(context, builder, sig, args):
        arrv, idxv, valv = args
        ptr = _elem_ptr(context, builder, sig.args[0], arrv, idxv)
        return builder.atomic_rmw("add", ptr, valv, ordering="acq_rel")

    return sig, codegen


@intrinsic
def rmw_xchg_acq(typingctx, arr, idx, val):
    sig = I64(arr, types.intp, I64)

    def codegen(context, builder, sig, args):
        arrv, idxv, valv = args
        ptr = _elem_ptr(context, builder, sig.args[0], arrv, idxv)
        return builder.atomic_rmw("xchg", ptr, valv, ordering="acquire")

    return sig, codegen


def _make_load(ordering):
    @intrinsic
    def _load(typingctx, arr, idx):
        sig = I64(arr, types.intp)

        def codegen(context, builder, sig, args):
            arrv, idxv = args
            ptr = _elem_ptr(context, builder, sig.args[0], arrv, idxv)
            return builder.load_atomic(ptr, ordering=ordering, align=8)

        return sig, codegen

    return _load


def _make_store(ordering):
    @intrinsic
    def _store(typingctx, arr, idx, val):
        sig = types.void(arr, types.intp, I64)

        def codegen(context, builder, sig, args):
            arrv, idxv, valv = args
            ptr = _elem_ptr(context, builder, sig.args[0], arrv, idxv)
            builder.store_atomic(valv, ptr, ordering=ordering, align=8)
            return context.get_dummy_value()

        return sig, codegen

    return _store


load_mono = _make_load("monotonic")
load_acq = _make_load("acquire")
load_sc = _make_load("seq_cst")
store_mono = _make_store("monotonic")
store_rel = _make_store("release")
store_sc = _make_store("seq_cst")


@njit(nogil=True, cache=True)
def barrier_wait(bar, n_threads, sense):
    """One sense-reversing barrier round; returns the next sense, or -1.

    The last arriver resets the counter and releases the flipped sense;
    everyone else spins (bounded, then yields).  A raised abort flag makes
    waiters give up so the orchestrator can join them.
    """
    pos = rmw_add(bar, BAR_COUNT, 1)
    if pos == n_threads - 1:
        store_mono(bar, BAR_COUNT, 0)
        store_rel(bar, BAR_SENSE, sense)
    else:
        spins = 0
        while load_acq(bar, BAR_SENSE) != sense:
            spins += 1
            if spins > _SPIN_LIMIT:
                sched_yield()
                if load_mono(bar, BAR_ABORT) != 0:
                    return -1
    return 1 - sense


@njit(nogil=True, cache=True)
def lock_spin(buf, idx):
    """Acquire the spinlock at ``buf[idx]`` (0 = free, 1 = held)."""
    spins = 0
    while rmw_xchg_acq(buf, idx, 1) != 0:
        spins += 1
        if spins > _SPIN_LIMIT:
            sched_yield()


@njit(nogil=True, cache=True)
def signal_abort(bar):
    store_mono(bar, BAR_ABORT, 1)


@njit(nogil=True, cache=True)
def run_worker(buf, n_cells, stride, instrs, sync_every, bar, n_threads):
    """Interpret one thread's opcode table over cells 0..n_cells-1.

    All participating threads walk the cells in the same ascending order,
    rejoining at the barrier every ``sync_every`` cells.  Returns 0 on
    completion, -1 if the run was aborted at a barrier.
    """
    sense = 1
    n_instr = instrs.shape[0]
    i = 0
    while i < n_cells:
        stop = min(i + sync_every, n_cells)
        for c in range(i, stop):
            off = c * stride
            for k in range(n_instr):
                op = instrs[k, 0]
                a = off + instrs[k, 1]
                b = instrs[k, 2]
                mode = instrs[k, 3]
                if op == OP_STORE_CONST:
                    if mode == _MODE_SEQ_CST:
                        store_sc(buf, a, b)
                    elif mode == _MODE_RELEASE:
                        store_rel(buf, a, b)
                    else:
                        store_mono(buf, a, b)
                elif op == OP_STORE_REG:
                    v = buf[off + b]
                    if mode == _MODE_SEQ_CST:
                        store_sc(buf, a, v)
                    elif mode == _MODE_RELEASE:
                        store_rel(buf, a, v)
                    else:
                        store_mono(buf, a, v)
                elif op == OP_LOAD:
                    if mode == _MODE_SEQ_CST:
                        v = load_sc(buf, a)
                    elif mode == _MODE_ACQUIRE:
                        v = load_acq(buf, a)
                    else:
                        v = load_mono(buf, a)
                    buf[off + b] = v
                elif op == OP_CLOAD:
                    if buf[off + instrs[k, 4]] != 0:
                        if mode == _MODE_SEQ_CST:
                            v = load_sc(buf, a)
                        elif mode == _MODE_ACQUIRE:
                            v = load_acq(buf, a)
                        else:
                            v = load_mono(buf, a)
                    else:
                        v = instrs[k, 5]
                    buf[off + b] = v
                elif op == OP_LOCK:
                    lock_spin(buf, a)
                else:
                    store_rel(buf, a, 0)
        sense = barrier_wait(bar, n_threads, sense)
        if sense < 0:
            return -1
        i = stop
    return 0


@njit(cache=True)
def run_collector(buf, n_cells, stride, out_slots, n_out, hist):
    """Accumulate every cell's outcome registers into ``hist``.

    Keys are outcome tuples zero-padded to 4 elements; ``out_slots`` must
    likewise be padded to length 4.  Runs after all workers have joined, so
    plain loads suffice.
    """
    for c in range(n_cells):
        off = c * stride
        v0 = buf[off + out_slots[0]] if n_out >= 1 else 0
        v1 = buf[off + out_slots[1]] if n_out >= 2 else 0
        v2 = buf[off + out_slots[2]] if n_out >= 3 else 0
        v3 = buf[off + out_slots[3]] if n_out >= 4 else 0
        key = (v0, v1, v2, v3)
        hist[key] = hist.get(key, 0) + 1


def new_histogram() -> Dict:
    """Fresh typed dict for :func:`run_collector`."""
    return Dict.empty(key_type=KEY_TYPE, value_type=I64)


def ensure_compiled() -> None:
    """Force (cached) compilation of every kernel before timing matters."""
    buf = np.zeros(8, dtype=np.int64)
    bar = np.zeros(BAR_SLOTS, dtype=np.int64)
    instrs = np.zeros((0, N_COLS), dtype=np.int64)
    run_worker(buf, 1, 8, instrs, 1, bar, 1)
    signal_abort(bar)
    out_slots = np.zeros(4, dtype=np.int64)
    run_collector(buf, 1, 8, out_slots, 1, new_histogram())
