from typing import Iterable, List, Optional

import numpy as np

from src.exceptions import EmptyGroup, GroupOutOfRange, InvalidConfig


def as_group(group: Optional[Iterable[int]], p: int, allow_empty: bool = False) -> np.ndarray:
    """Validated, sorted, duplicate-free 0-based index array; ``None`` means all of ``range(p)``."""
    if group is None:
        return np.arange(p)
    indices = np.unique(np.asarray(list(group), dtype=np.intp))
    if indices.size == 0:
        if allow_empty:
            return indices
        raise EmptyGroup("Group of coefficients is empty")
    if indices[0] < 0 or indices[-1] >= p:
        raise GroupOutOfRange(f"Group indices must lie in [0, {p}), got range "
                              f"[{int(indices[0])}, {int(indices[-1])}]", p=p)
    return indices


def complement(group: Iterable[int], p: int) -> np.ndarray:
    mask = np.ones(p, dtype=bool)
    mask[np.asarray(list(group), dtype=np.intp)] = False
    return np.flatnonzero(mask)


def _parse_indices(text: str, p: int) -> List[int]:
    indices: List[int] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            if "-" in item:
                low, high = (int(part) for part in item.split("-", 1))
                indices.extend(range(low, high + 1))
            else:
                indices.append(int(item))
        except ValueError:
            raise InvalidConfig(f"Cannot parse index {item!r} in group {text!r}")
    for index in indices:
        if not 1 <= index <= p:
            raise GroupOutOfRange(f"Index {index} outside 1..{p}", index=index, p=p)
    return [index - 1 for index in indices]


def parse_group_spec(spec: str, p: int, support: Optional[Iterable[int]] = None,
                     allow_empty: bool = False) -> np.ndarray:
    """
    Parse a 1-based group description into a 0-based index array.

    Terms are joined with ``+`` (union). A term is ``all``, an index list such
    as ``1,4,7-9``, ``complement:<list>``, or, when ``support`` is given,
    ``S0`` / ``S0c`` for the true support and its complement.

    Args:
        spec: Group description, e.g. ``3+S0c`` or ``complement:1-15``
        p: Model dimension
        support: 0-based true support for the ``S0`` terms
        allow_empty: Return an empty array instead of raising EmptyGroup

    Returns:
        np.ndarray: Sorted unique 0-based indices

    Raises:
        InvalidConfig: On a malformed description
        GroupOutOfRange: If an index lies outside ``1..p``
        EmptyGroup: If the union is empty and ``allow_empty`` is False
    """
    members: List[int] = []
    for term in spec.split("+"):
        term = term.strip()
        if term == "all":
            members.extend(range(p))
        elif term in ("S0", "S0c"):
            if support is None:
                raise InvalidConfig(f"Group term {term!r} needs a known support")
            chosen = as_group(support, p, allow_empty=True)
            members.extend((chosen if term == "S0" else complement(chosen, p)).tolist())
        elif term.startswith("complement:"):
            excluded = _parse_indices(term[len("complement:"):], p)
            members.extend(complement(excluded, p).tolist())
        elif term:
            members.extend(_parse_indices(term, p))
        else:
            raise InvalidConfig(f"Empty term in group {spec!r}")
    return as_group(members, p, allow_empty=allow_empty)
