"""
Student layer 3: monomial dictionary and lifting.

Terms are ordered by total degree (constant first); inside one degree they
follow lexicographic order of the variable-index tuples, which for D=2, d=2
gives 1, z1, z2, z1^2, z1*z2, z2^2.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from koopman_distill.error_handler import DictionaryOverflowError, ShapeError

logger = logging.getLogger(__name__)

DEFAULT_MAX_TERMS = 1_000_000


def dictionary_size(
    input_dim: int,
    max_degree: int,
    diagonal_only: bool = False,
    max_terms: Optional[int] = None,
) -> int:
    """
    Number of monomials of total degree <= d in D variables, C(D+d, d).

    With ``diagonal_only`` only pure powers count: 1 + D*d.

    Raises:
        ValueError: If D < 1 or d < 0
        DictionaryOverflowError: If max_terms is given and exceeded
    """
    if input_dim < 1 or max_degree < 0:
        raise ValueError(f'Need D >= 1 and d >= 0, got D={input_dim}, d={max_degree}')
    if diagonal_only:
        size = 1 + input_dim * max_degree
    else:
        size = math.comb(input_dim + max_degree, max_degree)
    if max_terms is not None and size > max_terms:
        raise DictionaryOverflowError(size, max_terms)
    return size


@dataclass(frozen=True, eq=False)
class Dictionary:
    """
    Enumerated monomial dictionary.

    Attributes:
        input_dim: Number of variables D
        max_degree: Maximum total degree d
        terms: M x D integer matrix of exponent vectors, graded-lex ordered
        diagonal_only: True when cross terms are excluded
    """

    input_dim: int
    max_degree: int
    terms: NDArray[np.int64]
    diagonal_only: bool = False
    _grades: Tuple[Tuple[NDArray[np.int64], NDArray[np.int64]], ...] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        terms = np.asarray(self.terms, dtype=np.int64)
        if terms.ndim != 2 or terms.shape[1] != self.input_dim:
            raise ShapeError(f'terms must be M x {self.input_dim}, got shape {terms.shape}')
        object.__setattr__(self, 'terms', terms)

        # (term rows, variable-index matrix) per nonzero degree
        degrees = terms.sum(axis=1)
        variables = np.arange(self.input_dim)
        grades = []
        for degree in np.unique(degrees[degrees > 0]):
            rows = np.flatnonzero(degrees == degree)
            index = np.stack([np.repeat(variables, terms[r]) for r in rows])
            grades.append((rows, index))
        object.__setattr__(self, '_grades', tuple(grades))

    @property
    def size(self) -> int:
        return int(self.terms.shape[0])

    def term_names(self) -> List[str]:
        """Readable term labels: '1', 'z1', 'z1^2', 'z1*z2'."""
        names = []
        for exponents in self.terms:
            factors = []
            for i, power in enumerate(exponents):
                if power == 1:
                    factors.append(f'z{i + 1}')
                elif power > 1:
                    factors.append(f'z{i + 1}^{power}')
            names.append('*'.join(factors) if factors else '1')
        return names

    def to_dict(self) -> Dict[str, Any]:
        return {
            'input_dim': self.input_dim,
            'max_degree': self.max_degree,
            'diagonal_only': self.diagonal_only,
            'size': self.size,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Dictionary':
        dictionary = build_dictionary(
            int(data['input_dim']),
            int(data['max_degree']),
            diagonal_only=bool(data.get('diagonal_only', False)),
        )
        if 'size' in data and int(data['size']) != dictionary.size:
            raise ShapeError(f"Dictionary size {data['size']} does not match rebuilt {dictionary.size}")
        return dictionary


def _variable_tuples(input_dim: int, degree: int, diagonal_only: bool) -> List[Tuple[int, ...]]:
    if diagonal_only:
        return [(i,) * degree for i in range(input_dim)]
    return list(combinations_with_replacement(range(input_dim), degree))


def build_dictionary(
    input_dim: int,
    max_degree: int,
    diagonal_only: bool = False,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> Dictionary:
    """
    Enumerate all monomials of total degree <= max_degree.

    Args:
        input_dim: Number of variables D (>= 1)
        max_degree: Maximum total degree d (>= 0)
        diagonal_only: Keep only pure powers z_i^k
        max_terms: Cap on the number of terms

    Returns:
        Dictionary with M = C(D+d, d) terms (1 + D*d when diagonal_only)

    Raises:
        DictionaryOverflowError: If M exceeds max_terms
    """
    size = dictionary_size(input_dim, max_degree, diagonal_only, max_terms)

    terms = np.zeros((size, input_dim), dtype=np.int64)
    row = 1
    for degree in range(1, max_degree + 1):
        tuples = _variable_tuples(input_dim, degree, diagonal_only)
        for offset, variables in enumerate(tuples):
            for var in variables:
                terms[row + offset, var] += 1
        row += len(tuples)

    logger.debug(f"Dictionary: D={input_dim}, d={max_degree}, M={size}")
    return Dictionary(
        input_dim=input_dim,
        max_degree=max_degree,
        terms=terms,
        diagonal_only=diagonal_only,
    )


def lift(dictionary: Dictionary, z: ArrayLike) -> NDArray[np.float64]:
    """
    Evaluate every dictionary term on z.

    Args:
        dictionary: Dictionary to evaluate
        z: Length-D vector or N x D batch

    Returns:
        Length-M vector or N x M matrix; column 0 is always 1

    Raises:
        ShapeError: If the trailing dimension is not D
    """
    arr = np.asarray(z, dtype=np.float64)
    if arr.shape[-1] != dictionary.input_dim:
        raise ShapeError(
            f'Dictionary expects {dictionary.input_dim} inputs, got {arr.shape[-1]}'
        )

    batch = np.atleast_2d(arr)
    lifted = np.ones((batch.shape[0], dictionary.size))
    for rows, index in dictionary._grades:
        lifted[:, rows] = np.prod(batch[:, index], axis=2)
    return lifted[0] if arr.ndim == 1 else lifted
