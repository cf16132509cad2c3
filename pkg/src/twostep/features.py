"""Second-order polynomial feature expansion.

Main effects pass through unchanged; continuous columns additionally
contribute their squares and all pairwise products among themselves.
Binary columns get no second-order terms (a 0/1 square is the column
itself).  For the classic 12-continuous + 1-binary housing layout this
yields 13 + 12 + 66 = 91 predictors.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import SpecMismatchError


@dataclass(frozen=True)
class FeatureExpansionSpec:
    """Disjoint lists of continuous and binary column names, jointly
    covering every input column."""

    continuous: tuple
    binary: tuple


def expansion_spec_from_dict(raw: dict) -> FeatureExpansionSpec:
    try:
        return FeatureExpansionSpec(
            tuple(raw["continuous"]), tuple(raw.get("binary", ()))
        )
    except (KeyError, TypeError) as exc:
        raise SpecMismatchError(f"malformed expansion spec: {exc}") from exc


def expand_features(
    x, names: list, spec: FeatureExpansionSpec
) -> tuple[np.ndarray, list]:
    """Expand a design matrix to second order per the spec.

    Returns the expanded matrix and its column names; squares are named
    "c^2" and products "c1*c2".
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    names = list(names)
    declared = list(spec.continuous) + list(spec.binary)
    if len(set(declared)) != len(declared):
        raise SpecMismatchError("continuous and binary lists must be disjoint")
    if sorted(map(str, declared)) != sorted(map(str, names)):
        raise SpecMismatchError(
            "expansion spec must cover exactly the input columns"
        )
    if x.shape[1] != len(names):
        raise SpecMismatchError("design width does not match the header")

    index = {str(name): j for j, name in enumerate(names)}
    cont = [str(c) for c in spec.continuous]

    blocks = [x]
    out_names = [str(n) for n in names]
    for c in cont:
        blocks.append((x[:, index[c]] ** 2)[:, None])
        out_names.append(f"{c}^2")
    for c1, c2 in combinations(cont, 2):
        blocks.append((x[:, index[c1]] * x[:, index[c2]])[:, None])
        out_names.append(f"{c1}*{c2}")
    return np.hstack(blocks), out_names
