#cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled occupancy kernels. Draw-for-draw identical to _occupancy_py."""

from libc.math cimport expm1, floor, sqrt

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (binomial_t, random_binomial,
                                           random_standard_normal)

cnp.import_array()

cdef long EXACT_TRIALS = 100_000


cdef inline long _binom(bitgen_t *rng, binomial_t *scratch, long n,
                        double p) noexcept nogil:
    cdef double mu, sd, k
    if n <= 0 or p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    if n >= EXACT_TRIALS:
        mu = n * p
        sd = sqrt(mu * (1.0 - p))
        k = floor(mu + sd * random_standard_normal(rng) + 0.5)
        if k < 0.0:
            return 0
        if k > <double> n:
            return n
        return <long> k
    return <long> random_binomial(rng, p, n, scratch)


cdef bitgen_t *_get_bitgen(object rng):
    capsule = rng.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline double _symbol_loop(bitgen_t *bg, binomial_t *scratch,
                                const double *conc, Py_ssize_t n_steps,
                                Py_ssize_t w_steps, double kon_dt,
                                double p_off, long n_apt,
                                long *nb_io) noexcept nogil:
    cdef Py_ssize_t j, first_win = n_steps - w_steps
    cdef long nb = nb_io[0]
    cdef double total = 0.0
    cdef double p_on
    for j in range(n_steps):
        if j >= first_win:
            total += nb
        p_on = -expm1(-kon_dt * conc[j])
        nb = nb + _binom(bg, scratch, n_apt - nb, p_on) \
                - _binom(bg, scratch, nb, p_off)
        if nb < 0:
            nb = 0
        elif nb > n_apt:
            nb = n_apt
    nb_io[0] = nb
    return total


def occupancy_symbol(const double[::1] conc, Py_ssize_t w_steps,
                     double kon_dt, double p_off, long n_apt, long nb0,
                     object rng):
    cdef bitgen_t *bg = _get_bitgen(rng)
    cdef binomial_t scratch
    cdef long nb = nb0
    cdef double total
    scratch.has_binomial = 0
    with rng.bit_generator.lock:
        total = _symbol_loop(bg, &scratch, &conc[0], conc.shape[0], w_steps,
                             kon_dt, p_off, n_apt, &nb)
    return total, nb


def occupancy_window_sums(const double[::1] curve, const double[::1] counts,
                          Py_ssize_t n_steps, Py_ssize_t w_steps,
                          double kon_dt, double p_off, long n_apt,
                          object rng):
    cdef Py_ssize_t i, j, first_win = n_steps - w_steps
    cdef Py_ssize_t n_symbols = counts.shape[0]
    cdef bitgen_t *bg = _get_bitgen(rng)
    cdef binomial_t scratch
    cdef long nb
    cdef double total, p_on, scale
    sums = np.empty(n_symbols)
    cdef double[::1] sums_v = sums
    scratch.has_binomial = 0
    with rng.bit_generator.lock:
        with nogil:
            for i in range(n_symbols):
                scale = counts[i]
                nb = 0
                total = 0.0
                for j in range(n_steps):
                    if j >= first_win:
                        total += nb
                    p_on = -expm1(-kon_dt * scale * curve[j])
                    nb = nb + _binom(bg, &scratch, n_apt - nb, p_on) \
                            - _binom(bg, &scratch, nb, p_off)
                    if nb < 0:
                        nb = 0
                    elif nb > n_apt:
                        nb = n_apt
                sums_v[i] = total
    return sums


def occupancy_trajectory(const double[::1] conc, double kon_dt, double p_off,
                         long n_apt, long nb0, object rng):
    cdef Py_ssize_t j, n_steps = conc.shape[0]
    cdef bitgen_t *bg = _get_bitgen(rng)
    cdef binomial_t scratch
    cdef long nb = nb0
    cdef double p_on
    out = np.empty(n_steps, dtype=np.int64)
    cdef cnp.int64_t[::1] out_v = out
    scratch.has_binomial = 0
    with rng.bit_generator.lock:
        with nogil:
            for j in range(n_steps):
                p_on = -expm1(-kon_dt * conc[j])
                nb = nb + _binom(bg, &scratch, n_apt - nb, p_on) \
                        - _binom(bg, &scratch, nb, p_off)
                if nb < 0:
                    nb = 0
                elif nb > n_apt:
                    nb = n_apt
                out_v[j] = nb
    return out


def mean_occupancy_symbol(const double[::1] conc, Py_ssize_t w_steps,
                          double kon_dt, double koff_dt, double n_apt,
                          double nb0):
    cdef Py_ssize_t j, n_steps = conc.shape[0]
    cdef Py_ssize_t first_win = n_steps - w_steps
    cdef double nb = nb0, total = 0.0
    for j in range(n_steps):
        if j >= first_win:
            total += nb
        nb += kon_dt * conc[j] * (n_apt - nb) - koff_dt * nb
        if nb < 0.0:
            nb = 0.0
        elif nb > n_apt:
            nb = n_apt
    return total, nb


def mean_occupancy_window_sums(const double[::1] curve,
                               const double[::1] counts, Py_ssize_t n_steps,
                               Py_ssize_t w_steps, double kon_dt,
                               double koff_dt, double n_apt):
    cdef Py_ssize_t i, j, first_win = n_steps - w_steps
    cdef Py_ssize_t n_symbols = counts.shape[0]
    cdef double nb, total, scale
    sums = np.empty(n_symbols)
    cdef double[::1] sums_v = sums
    for i in range(n_symbols):
        scale = counts[i]
        nb = 0.0
        total = 0.0
        for j in range(n_steps):
            if j >= first_win:
                total += nb
            nb += kon_dt * scale * curve[j] * (n_apt - nb) - koff_dt * nb
            if nb < 0.0:
                nb = 0.0
            elif nb > n_apt:
                nb = n_apt
        sums_v[i] = total
    return sums
