# cython: boundscheck=False, wraparound=False
"""Compiled co-occurrence kernel.

Drop-in replacement for mremix._kernels.pure.CoocTable. Ids must fit in
32 bits (word-level lexicons are far below that); the canonical symmetric
key is (min << 32) | max packed into one uint64.
"""

from cython.operator cimport dereference, preincrement
from libc.stdint cimport int64_t, uint32_t, uint64_t
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector

ctypedef unordered_map[uint64_t, int64_t] pair_map
ctypedef unordered_map[uint32_t, int64_t] word_map


cdef inline uint64_t pack_key(uint64_t a, uint64_t b) nogil:
    if a <= b:
        return (a << 32) | b
    return (b << 32) | a


cdef class CoocTable:
    cdef pair_map _pairs
    cdef word_map _globals

    def observe(self, ids):
        cdef vector[uint32_t] buf
        cdef Py_ssize_t i, j, n
        cdef uint32_t a
        for value in ids:
            buf.push_back(<uint32_t> value)
        n = buf.size()
        with nogil:
            for i in range(n):
                self._globals[buf[i]] += 1
            for i in range(n):
                a = buf[i]
                for j in range(i + 1, n):
                    self._pairs[pack_key(a, buf[j])] += 1

    def pair_count(self, a, b):
        cdef pair_map.iterator it = self._pairs.find(pack_key(<uint64_t> a, <uint64_t> b))
        if it == self._pairs.end():
            return 0
        return dereference(it).second

    def set_pair(self, a, b, count):
        self._pairs[pack_key(<uint64_t> a, <uint64_t> b)] = <int64_t> count

    def global_count(self, w):
        cdef word_map.iterator it = self._globals.find(<uint32_t> w)
        if it == self._globals.end():
            return 0
        return dereference(it).second

    def set_global(self, w, count):
        self._globals[<uint32_t> w] = <int64_t> count

    def context_sums(self, context_ids, query_ids):
        cdef vector[uint32_t] ctx
        cdef vector[uint32_t] qry
        cdef vector[int64_t] sums
        cdef Py_ssize_t i, j
        cdef int64_t total
        cdef pair_map.iterator it
        for value in context_ids:
            ctx.push_back(<uint32_t> value)
        for value in query_ids:
            qry.push_back(<uint32_t> value)
        sums.resize(qry.size())
        with nogil:
            for i in range(<Py_ssize_t> qry.size()):
                total = 0
                for j in range(<Py_ssize_t> ctx.size()):
                    it = self._pairs.find(pack_key(ctx[j], qry[i]))
                    if it != self._pairs.end():
                        total += dereference(it).second
                sums[i] = total
        return [sums[i] for i in range(<Py_ssize_t> sums.size())]

    def pair_items(self):
        out = []
        cdef pair_map.iterator it = self._pairs.begin()
        cdef uint64_t key
        while it != self._pairs.end():
            key = dereference(it).first
            out.append((int(key >> 32), int(key & 0xFFFFFFFF), int(dereference(it).second)))
            preincrement(it)
        return out

    def global_items(self):
        out = []
        cdef word_map.iterator it = self._globals.begin()
        while it != self._globals.end():
            out.append((int(dereference(it).first), int(dereference(it).second)))
            preincrement(it)
        return out

    def num_pairs(self):
        return self._pairs.size()

    def num_words(self):
        return self._globals.size()
