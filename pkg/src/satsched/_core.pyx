# cython: boundscheck=False, wraparound=False, initializedcheck=False
# cython: cdivision=True, nonecheck=False
"""Compiled tree search engine.

Line-for-line transliteration of ``_engine_py``; the two must stay
bit-identical for the same seed.  The invariants that matter: one random
draw per expansion, one per rollout step, one per selection only when two
or more children tie exactly; resource updates as two separate statements
(collection cost, then slew); left-associative products in the objective
update; exact float comparisons throughout.  The extension is compiled
with -ffp-contract=off so none of these expressions fuse into FMAs.
"""

from time import perf_counter

import numpy as np

from libc.math cimport HUGE_VAL, INFINITY, log, sqrt
from libc.stdlib cimport free, malloc, realloc

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t satsched_mulhi64(uint64_t a, uint64_t b) {
        return (uint64_t)(((__uint128_t)a * (__uint128_t)b) >> 64);
    }
    """
    unsigned long long satsched_mulhi64(unsigned long long a, unsigned long long b) nogil


cdef unsigned long long _MASK64 = 0xFFFFFFFFFFFFFFFFULL


cdef inline unsigned long long _rotl(unsigned long long x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef inline unsigned long long _splitmix_next(unsigned long long *state) nogil:
    state[0] = state[0] + 0x9E3779B97F4A7C15ULL
    cdef unsigned long long z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef class CoreRng:
    """Compiled mirror of ``rng.Xoshiro256pp``, exposed for the tests that
    pin the two streams together."""

    cdef unsigned long long s0, s1, s2, s3

    def __cinit__(self, seed):
        if seed < 0:
            raise ValueError(f"seed must be nonnegative, got {seed}")
        cdef unsigned long long state = <unsigned long long> (seed & 0xFFFFFFFFFFFFFFFF)
        self.s0 = _splitmix_next(&state)
        self.s1 = _splitmix_next(&state)
        self.s2 = _splitmix_next(&state)
        self.s3 = _splitmix_next(&state)

    cdef inline unsigned long long _next(self) nogil:
        cdef unsigned long long s0 = self.s0
        cdef unsigned long long s1 = self.s1
        cdef unsigned long long s2 = self.s2
        cdef unsigned long long s3 = self.s3
        cdef unsigned long long result = _rotl(s0 + s3, 23) + s0
        cdef unsigned long long t = s1 << 17
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s0 = s0
        self.s1 = s1
        self.s2 = s2
        self.s3 = s3
        return result

    def next_u64(self):
        return self._next()

    def next_double(self):
        return <double> (self._next() >> 11) * (2.0 ** -53)

    def randbelow(self, n):
        if n <= 0:
            raise ValueError(f"randbelow needs n >= 1, got {n}")
        return satsched_mulhi64(self._next(), <unsigned long long> n)

    def state(self):
        return (self.s0, self.s1, self.s2, self.s3)


cdef class _Engine:
    cdef double[::1] profit, m_rate, e_rate, mem_cap, e_cap
    cdef double[:, ::1] dur, prob
    cdef double[:, :, ::1] slew
    cdef int[::1] succ_data, succ_indptr
    cdef long long[::1] ids
    cdef int n, m, variant
    cdef double c
    cdef unsigned long long s0, s1, s2, s3
    cdef double best_rollout

    cdef int *nd_task
    cdef int *nd_orbit
    cdef int *nd_first
    cdef int *nd_nchild
    cdef int *nd_visits
    cdef int *nd_endpoint
    cdef double *nd_value
    cdef size_t used, cap

    cdef double *fail
    cdef long long *visited
    cdef int *undo_i
    cdef double *undo_f
    cdef int *feas
    cdef int *ties
    cdef int *path

    def __cinit__(self, graph, int variant, double c, seed):
        inst = graph.instance
        self.n = inst.num_tasks
        self.m = inst.num_orbits
        self.variant = variant
        self.c = c
        self.profit = np.array(graph.profit, dtype=np.float64)
        self.dur = np.array(inst.duration, dtype=np.float64)
        self.prob = np.array(inst.probability, dtype=np.float64)
        self.slew = np.array(inst.slew_energy, dtype=np.float64)
        self.m_rate = np.array(graph.memory_rate, dtype=np.float64)
        self.e_rate = np.array(graph.energy_rate, dtype=np.float64)
        self.mem_cap = np.array(graph.memory_capacity, dtype=np.float64)
        self.e_cap = np.array(graph.energy_capacity, dtype=np.float64)
        self.succ_data = np.array(graph.succ_data, dtype=np.int32)
        self.succ_indptr = np.array(graph.succ_indptr, dtype=np.int32)
        self.ids = np.array(graph.task_ids, dtype=np.longlong)

        cdef unsigned long long state = <unsigned long long> (seed & 0xFFFFFFFFFFFFFFFF)
        self.s0 = _splitmix_next(&state)
        self.s1 = _splitmix_next(&state)
        self.s2 = _splitmix_next(&state)
        self.s3 = _splitmix_next(&state)
        self.best_rollout = -INFINITY

        cdef int n = self.n, m = self.m
        self.cap = 4096
        self.used = 0
        self.nd_task = <int *> malloc(self.cap * sizeof(int))
        self.nd_orbit = <int *> malloc(self.cap * sizeof(int))
        self.nd_first = <int *> malloc(self.cap * sizeof(int))
        self.nd_nchild = <int *> malloc(self.cap * sizeof(int))
        self.nd_visits = <int *> malloc(self.cap * sizeof(int))
        self.nd_endpoint = <int *> malloc(self.cap * sizeof(int))
        self.nd_value = <double *> malloc(self.cap * sizeof(double))
        cdef size_t walk = <size_t> m * (n + 1) + 2
        self.fail = <double *> malloc((n + 1) * sizeof(double))
        self.visited = <long long *> malloc((n + 1) * sizeof(long long))
        self.undo_i = <int *> malloc(walk * sizeof(int))
        self.undo_f = <double *> malloc(walk * sizeof(double))
        self.feas = <int *> malloc((n + 1) * sizeof(int))
        self.ties = <int *> malloc((n + 1) * sizeof(int))
        self.path = <int *> malloc(walk * sizeof(int))
        if (self.nd_task == NULL or self.nd_orbit == NULL or self.nd_first == NULL
                or self.nd_nchild == NULL or self.nd_visits == NULL
                or self.nd_endpoint == NULL or self.nd_value == NULL
                or self.fail == NULL or self.visited == NULL
                or self.undo_i == NULL or self.undo_f == NULL
                or self.feas == NULL or self.ties == NULL or self.path == NULL):
            raise MemoryError("engine allocation failed")
        cdef int i
        for i in range(n):
            self.fail[i] = 1.0
            self.visited[i] = 0
        self._new_node(-1, 0)

    def __dealloc__(self):
        free(self.nd_task)
        free(self.nd_orbit)
        free(self.nd_first)
        free(self.nd_nchild)
        free(self.nd_visits)
        free(self.nd_endpoint)
        free(self.nd_value)
        free(self.fail)
        free(self.visited)
        free(self.undo_i)
        free(self.undo_f)
        free(self.feas)
        free(self.ties)
        free(self.path)

    cdef inline unsigned long long _next(self) nogil:
        cdef unsigned long long s0 = self.s0
        cdef unsigned long long s1 = self.s1
        cdef unsigned long long s2 = self.s2
        cdef unsigned long long s3 = self.s3
        cdef unsigned long long result = _rotl(s0 + s3, 23) + s0
        cdef unsigned long long t = s1 << 17
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s0 = s0
        self.s1 = s1
        self.s2 = s2
        self.s3 = s3
        return result

    cdef inline int _randbelow(self, int count) nogil:
        return <int> satsched_mulhi64(self._next(), <unsigned long long> count)

    cdef int _grow(self, size_t need) except -1:
        cdef size_t cap = self.cap
        while self.used + need > cap:
            cap <<= 1
        if cap == self.cap:
            return 0
        self.nd_task = <int *> realloc(self.nd_task, cap * sizeof(int))
        self.nd_orbit = <int *> realloc(self.nd_orbit, cap * sizeof(int))
        self.nd_first = <int *> realloc(self.nd_first, cap * sizeof(int))
        self.nd_nchild = <int *> realloc(self.nd_nchild, cap * sizeof(int))
        self.nd_visits = <int *> realloc(self.nd_visits, cap * sizeof(int))
        self.nd_endpoint = <int *> realloc(self.nd_endpoint, cap * sizeof(int))
        self.nd_value = <double *> realloc(self.nd_value, cap * sizeof(double))
        if (self.nd_task == NULL or self.nd_orbit == NULL or self.nd_first == NULL
                or self.nd_nchild == NULL or self.nd_visits == NULL
                or self.nd_endpoint == NULL or self.nd_value == NULL):
            raise MemoryError("tree growth failed")
        self.cap = cap
        return 0

    cdef inline int _new_node(self, int task, int orbit) nogil:
        cdef size_t i = self.used
        self.nd_task[i] = task
        self.nd_orbit[i] = orbit
        self.nd_first[i] = -1
        self.nd_nchild[i] = 0
        self.nd_visits[i] = 0
        self.nd_endpoint[i] = 0
        self.nd_value[i] = 0.0
        self.used = i + 1
        return <int> i

    cdef inline int _candidates(self, int t, int orb, double mem, double en,
                                int last, long long tag) nogil:
        cdef int n = self.n
        cdef int q = orb
        cdef int row = q * (n + 1) + (n if t == -1 else t)
        cdef int lo = self.succ_indptr[row]
        cdef int hi = self.succ_indptr[row + 1]
        cdef int cnt = 0
        cdef int idx, j
        cdef double mem2, en2
        for idx in range(lo, hi):
            j = self.succ_data[idx]
            if self.visited[j] == tag:
                continue
            mem2 = mem + self.dur[q, j] * self.m_rate[q]
            if mem2 > self.mem_cap[q]:
                continue
            en2 = en + self.dur[q, j] * self.e_rate[q]
            if last >= 0:
                en2 = en2 + self.slew[q, last, j]
            if en2 > self.e_cap[q]:
                continue
            self.feas[cnt] = j
            cnt += 1
        return cnt

    cdef int _iterate(self, long long it) except -1:
        cdef int n = self.n, m = self.m
        cdef int variant = self.variant
        cdef double c = self.c
        cdef double mem = 0.0, en = 0.0, val = 0.0, value = 0.0
        cdef int last = -1
        cdef long long tag_base = it * (m + 1)
        cdef long long tag = tag_base + 1
        cdef int n_undo = 0
        cdef int path_len = 1
        cdef int node = 0
        cdef int t, orb, q, g2, cnt, k, ii, ci, child, ct, corb, nv
        cdef int first, cnum, tie_cnt, pos_t, pos_o, idx
        cdef double old, p, logpv, best, s, mem2, en2
        self.path[0] = 0

        while True:
            t = self.nd_task[node]
            orb = self.nd_orbit[node]
            if t == -1 and orb == m:
                value = val
                break
            if self.nd_first[node] < 0:
                cnt = self._candidates(t, orb, mem, en, last, tag)
                g2 = orb + 1
                self._grow(<size_t> cnt + 2)
                first = <int> self.used
                q = orb
                for ii in range(cnt):
                    self._new_node(self.feas[ii], q)
                self._new_node(-1, g2)
                self.nd_first[node] = first
                self.nd_nchild[node] = cnt + 1
                k = self._randbelow(cnt + 1)
                child = first + k
                ct = self.nd_task[child]
                corb = self.nd_orbit[child]
                if ct == -1:
                    mem = 0.0
                    en = 0.0
                    last = -1
                    tag = tag_base + corb + 1
                else:
                    mem = mem + self.dur[corb, ct] * self.m_rate[corb]
                    en = en + self.dur[corb, ct] * self.e_rate[corb]
                    if last >= 0:
                        en = en + self.slew[corb, last, ct]
                    old = self.fail[ct]
                    self.undo_i[n_undo] = ct
                    self.undo_f[n_undo] = old
                    n_undo += 1
                    p = self.prob[corb, ct]
                    val = val + self.profit[ct] * old * p
                    self.fail[ct] = old * (1.0 - p)
                    self.visited[ct] = tag
                    last = ct
                self.path[path_len] = child
                path_len += 1
                pos_t = ct
                pos_o = corb
                while not (pos_t == -1 and pos_o == m):
                    cnt = self._candidates(pos_t, pos_o, mem, en, last, tag)
                    k = self._randbelow(cnt + 1)
                    if k == cnt:
                        ct = -1
                        corb = pos_o + 1
                    else:
                        ct = self.feas[k]
                        corb = pos_o
                    if ct == -1:
                        mem = 0.0
                        en = 0.0
                        last = -1
                        tag = tag_base + corb + 1
                    else:
                        mem = mem + self.dur[corb, ct] * self.m_rate[corb]
                        en = en + self.dur[corb, ct] * self.e_rate[corb]
                        if last >= 0:
                            en = en + self.slew[corb, last, ct]
                        old = self.fail[ct]
                        self.undo_i[n_undo] = ct
                        self.undo_f[n_undo] = old
                        n_undo += 1
                        p = self.prob[corb, ct]
                        val = val + self.profit[ct] * old * p
                        self.fail[ct] = old * (1.0 - p)
                        self.visited[ct] = tag
                        last = ct
                    pos_t = ct
                    pos_o = corb
                value = val
                break
            first = self.nd_first[node]
            cnum = self.nd_nchild[node]
            logpv = log(<double> self.nd_visits[node])
            best = -HUGE_VAL
            tie_cnt = 0
            for ii in range(cnum):
                ci = first + ii
                nv = self.nd_visits[ci]
                if nv == 0:
                    s = INFINITY
                elif variant == 0:
                    s = self.nd_value[ci] / (<double> nv) + c * sqrt(logpv / (<double> nv))
                else:
                    s = self.nd_value[ci] + c * sqrt(logpv / (<double> nv))
                if s > best:
                    best = s
                    self.ties[0] = ci
                    tie_cnt = 1
                elif s == best:
                    self.ties[tie_cnt] = ci
                    tie_cnt += 1
            if tie_cnt > 1:
                child = self.ties[self._randbelow(tie_cnt)]
            else:
                child = self.ties[0]
            ct = self.nd_task[child]
            corb = self.nd_orbit[child]
            if ct == -1:
                mem = 0.0
                en = 0.0
                last = -1
                tag = tag_base + corb + 1
            else:
                mem = mem + self.dur[corb, ct] * self.m_rate[corb]
                en = en + self.dur[corb, ct] * self.e_rate[corb]
                if last >= 0:
                    en = en + self.slew[corb, last, ct]
                old = self.fail[ct]
                self.undo_i[n_undo] = ct
                self.undo_f[n_undo] = old
                n_undo += 1
                p = self.prob[corb, ct]
                val = val + self.profit[ct] * old * p
                self.fail[ct] = old * (1.0 - p)
                self.visited[ct] = tag
                last = ct
            self.path[path_len] = child
            path_len += 1
            node = child

        if variant == 0:
            for ii in range(path_len):
                idx = self.path[ii]
                self.nd_visits[idx] += 1
                self.nd_value[idx] += value
        else:
            for ii in range(path_len):
                idx = self.path[ii]
                self.nd_visits[idx] += 1
                if value > self.nd_value[idx]:
                    self.nd_value[idx] = value
        self.nd_endpoint[self.path[path_len - 1]] += 1
        if value > self.best_rollout:
            self.best_rollout = value
        for ii in range(n_undo - 1, -1, -1):
            self.fail[self.undo_i[ii]] = self.undo_f[ii]
        return 0

    cdef inline bint _tie_less(self, int a, int b) nogil:
        cdef int ka0 = 1 if self.nd_task[a] == -1 else 0
        cdef int kb0 = 1 if self.nd_task[b] == -1 else 0
        cdef long long ka1 = self.ids[self.nd_task[a]] if ka0 == 0 else 0
        cdef long long kb1 = self.ids[self.nd_task[b]] if kb0 == 0 else 0
        if ka0 != kb0:
            return ka0 < kb0
        return ka1 < kb1

    def _extract(self, long long it):
        cdef int n = self.n, m = self.m
        cdef int variant = self.variant
        cdef double mem = 0.0, en = 0.0
        cdef int last = -1
        cdef long long tag_base = it * (m + 1)
        cdef long long tag = tag_base + 1
        cdef int node = 0
        cdef int pos_t = -1, pos_o = 0
        cdef bint completed = False
        cdef int first, cnum, ii, ci, best, cnt, k, ct, corb, q
        cdef bint better, tied
        sched = [[] for _ in range(m)]

        while not (pos_t == -1 and pos_o == m):
            if node < 0 or self.nd_first[node] < 0:
                completed = True
                while not (pos_t == -1 and pos_o == m):
                    cnt = self._candidates(pos_t, pos_o, mem, en, last, tag)
                    k = self._randbelow(cnt + 1)
                    if k == cnt:
                        ct = -1
                        corb = pos_o + 1
                    else:
                        ct = self.feas[k]
                        corb = pos_o
                    if ct == -1:
                        mem = 0.0
                        en = 0.0
                        last = -1
                        tag = tag_base + corb + 1
                    else:
                        mem = mem + self.dur[corb, ct] * self.m_rate[corb]
                        en = en + self.dur[corb, ct] * self.e_rate[corb]
                        if last >= 0:
                            en = en + self.slew[corb, last, ct]
                        self.visited[ct] = tag
                        last = ct
                        sched[corb].append(self.ids[ct])
                    pos_t = ct
                    pos_o = corb
                break
            first = self.nd_first[node]
            cnum = self.nd_nchild[node]
            # Unvisited children carry no statistic and must not win a
            # tie; an expanded node always has at least one visited child.
            best = -1
            for ii in range(cnum):
                ci = first + ii
                if self.nd_visits[ci] == 0:
                    continue
                if best < 0:
                    best = ci
                    continue
                if variant == 0:
                    better = self.nd_visits[ci] > self.nd_visits[best]
                    tied = self.nd_visits[ci] == self.nd_visits[best]
                else:
                    better = self.nd_value[ci] > self.nd_value[best]
                    tied = self.nd_value[ci] == self.nd_value[best]
                if better:
                    best = ci
                elif tied and self._tie_less(ci, best):
                    best = ci
            if best < 0:
                node = -1
                continue
            ct = self.nd_task[best]
            corb = self.nd_orbit[best]
            if ct == -1:
                mem = 0.0
                en = 0.0
                last = -1
                tag = tag_base + corb + 1
            else:
                mem = mem + self.dur[corb, ct] * self.m_rate[corb]
                en = en + self.dur[corb, ct] * self.e_rate[corb]
                if last >= 0:
                    en = en + self.slew[corb, last, ct]
                self.visited[ct] = tag
                last = ct
                sched[corb].append(self.ids[ct])
            if ct == -1:
                pos_t = -1
                pos_o = corb
            else:
                pos_t = ct
                pos_o = corb
            node = best
        return sched, completed

    def run(self, long long num_simulations, time_limit, bint want_tree):
        cdef double limit = 0.0
        cdef bint has_limit = time_limit is not None
        if has_limit:
            limit = time_limit
        t0 = perf_counter()
        cdef long long sims = 0
        cdef long long it
        for it in range(1, num_simulations + 1):
            if has_limit and sims > 0 and perf_counter() - t0 >= limit:
                break
            self._iterate(it)
            sims += 1
        per_orbit, completed = self._extract(sims + 1)
        out = {
            "per_orbit": [[int(t) for t in orbit] for orbit in per_orbit],
            "best_rollout_value": self.best_rollout,
            "simulations_run": sims,
            "completed_randomly": completed,
            "node_count": self.used,
        }
        if want_tree:
            out["tree"] = self._tree_arrays()
        return out

    def _tree_arrays(self):
        cdef size_t count = self.used
        task = np.empty(count, dtype=np.int32)
        orbit = np.empty(count, dtype=np.int32)
        visits = np.empty(count, dtype=np.longlong)
        value = np.empty(count, dtype=np.float64)
        endpoint = np.empty(count, dtype=np.longlong)
        first_child = np.empty(count, dtype=np.longlong)
        n_children = np.empty(count, dtype=np.longlong)
        cdef int[::1] task_v = task
        cdef int[::1] orbit_v = orbit
        cdef long long[::1] visits_v = visits
        cdef double[::1] value_v = value
        cdef long long[::1] endpoint_v = endpoint
        cdef long long[::1] first_v = first_child
        cdef long long[::1] nch_v = n_children
        cdef size_t i
        for i in range(count):
            task_v[i] = self.nd_task[i]
            orbit_v[i] = self.nd_orbit[i]
            visits_v[i] = self.nd_visits[i]
            value_v[i] = self.nd_value[i]
            endpoint_v[i] = self.nd_endpoint[i]
            first_v[i] = self.nd_first[i]
            nch_v[i] = self.nd_nchild[i] if self.nd_first[i] >= 0 else 0
        return {
            "task": task,
            "orbit": orbit,
            "visits": visits,
            "value": value,
            "endpoint_count": endpoint,
            "first_child": first_child,
            "n_children": n_children,
        }


def run_search(graph, variant, c, num_simulations, seed,
               time_limit=None, want_tree=False):
    engine = _Engine(graph, int(variant), float(c), seed)
    return engine.run(num_simulations, time_limit, want_tree)
