"""Polynomial candidate library.

Builds every monomial of total degree <= d over the state and input
variables (states first), evaluates them column-wise over a sampled
trajectory, and keeps a printable descriptor per term so fitted models
stay readable.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TermDescriptor:
    """One monomial: per-variable exponents plus a display name."""

    exponents: tuple
    name: str

    @property
    def degree(self):
        return sum(self.exponents)


@dataclass(frozen=True)
class CandidateLibrary:
    """Evaluated library: descriptors plus the m x l design matrix."""

    descriptors: tuple
    theta: np.ndarray

    @property
    def n_terms(self):
        return len(self.descriptors)


def _graded_exponents(n_vars, degree):
    """Exponent tuples of total degree <= degree, graded lexicographic.

    Within a degree class, terms with higher powers on earlier variables
    come first, so states (listed before inputs) lead.
    """

    def fixed_degree(n_left, deg):
        if n_left == 1:
            yield (deg,)
            return
        for head in range(deg, -1, -1):
            for tail in fixed_degree(n_left - 1, deg - head):
                yield (head,) + tail

    out = []
    for deg in range(degree + 1):
        out.extend(fixed_degree(n_vars, deg))
    return out


def _term_name(exponents, var_names):
    parts = []
    for exp, name in zip(exponents, var_names):
        if exp == 0:
            continue
        parts.append(name if exp == 1 else f"{name}^{exp}")
    return "*".join(parts) if parts else "1"


def build_library(n_states, n_inputs, degree, state_names=None, input_names=None):
    """Descriptors for all monomials of total degree <= degree.

    The variable order is states then inputs; the constant term comes
    first. Term count is C(n_states + n_inputs + degree, degree).
    """
    if n_states < 1:
        raise ValueError("need at least one state variable")
    if n_inputs < 0 or degree < 0:
        raise ValueError("n_inputs and degree must be non-negative")
    if state_names is None:
        state_names = [f"x{i + 1}" for i in range(n_states)]
    if input_names is None:
        input_names = [f"u{i + 1}" for i in range(n_inputs)]
    if len(state_names) != n_states or len(input_names) != n_inputs:
        raise ValueError("variable name lists do not match counts")
    var_names = list(state_names) + list(input_names)
    return [
        TermDescriptor(exponents=exps, name=_term_name(exps, var_names))
        for exps in _graded_exponents(n_states + n_inputs, degree)
    ]


def evaluate_term(descriptor, values):
    """Evaluate one monomial on rows of variable values (m x v or v,)."""
    values = np.asarray(values, dtype=float)
    single = values.ndim == 1
    rows = np.atleast_2d(values)
    if rows.shape[1] != len(descriptor.exponents):
        raise ValueError("value row length does not match descriptor")
    out = np.ones(rows.shape[0])
    for j, exp in enumerate(descriptor.exponents):
        if exp:
            out = out * rows[:, j] ** exp
    return out[0] if single else out


def evaluate_library(descriptors, states, inputs=None):
    """Evaluate all terms over a trajectory, returning a CandidateLibrary.

    states is m x n, inputs m x q (omitted when the library has no input
    variables). Columns follow the descriptor order.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if inputs is None or np.size(inputs) == 0:
        rows = states
    else:
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        if inputs.shape[0] != states.shape[0]:
            raise ValueError("states and inputs disagree on sample count")
        rows = np.hstack([states, inputs])
    n_vars = rows.shape[1]
    for d in descriptors:
        if len(d.exponents) != n_vars:
            raise ValueError("descriptor arity does not match data columns")
    with np.errstate(over="ignore"):
        theta = np.column_stack([evaluate_term(d, rows) for d in descriptors])
    return CandidateLibrary(descriptors=tuple(descriptors), theta=theta)


def library_to_json(descriptors):
    return [{"exponents": list(d.exponents), "name": d.name} for d in descriptors]


def library_from_json(payload):
    return [TermDescriptor(exponents=tuple(t["exponents"]), name=t["name"]) for t in payload]
