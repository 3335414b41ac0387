"""Sign conventions, pinned in one place.

- Shift: the differential of C[n] is (-1)^n d_C.
- Koszul rule: moving a past b costs (-1)^(|a||b|).
- Symmetric words commute letters with the Koszul sign of their parity; exterior words use the
  sign-twisted rule -(-1)^(|a||b|).
"""

from collections.abc import Callable, Sequence

SwapSign = Callable[[int, int], int]
Vanishes = Callable[[int], bool]


def shift_sign(n: int) -> int:
    """Sign multiplying the differential of C[n].

    Examples:
        >>> shift_sign(1), shift_sign(2)
        (-1, 1)
    """
    return -1 if n % 2 else 1


def koszul(p: int, q: int) -> int:
    return -1 if (p * q) % 2 else 1


def symmetric_rule(parity: Callable[[int], int]) -> tuple[SwapSign, Vanishes]:
    return (lambda a, b: koszul(parity(a), parity(b))), (lambda a: parity(a) % 2 == 1)


def exterior_rule(degree: Callable[[int], int]) -> tuple[SwapSign, Vanishes]:
    return (lambda a, b: -koszul(degree(a), degree(b))), (lambda a: degree(a) % 2 == 0)


def sort_word(
    word: Sequence[int], swap: SwapSign, vanishes: Vanishes
) -> tuple[int, tuple[int, ...]] | None:
    """Brings a word of letters into non-decreasing order.

    Returns the accumulated sign and the sorted word, or None when two equal letters that
    square to zero meet.

    Examples:
        >>> swap, vanishes = symmetric_rule(lambda a: 1)
        >>> sort_word((2, 1), swap, vanishes)
        (-1, (1, 2))
        >>> sort_word((1, 1), swap, vanishes) is None
        True
    """
    letters = list(word)
    sign = 1
    for end in range(len(letters) - 1, 0, -1):
        for i in range(end):
            a, b = letters[i], letters[i + 1]
            if a > b:
                sign *= swap(a, b)
                letters[i], letters[i + 1] = b, a
    for i in range(len(letters) - 1):
        if letters[i] == letters[i + 1] and vanishes(letters[i]):
            return None
    return sign, tuple(letters)


def extraction_sign(parities: Sequence[int], chosen: Sequence[int]) -> int:
    """Koszul sign of moving the letters at positions `chosen` (in order) to the front."""
    sign = 1
    picked = set(chosen)
    for position in chosen:
        passed = sum(parities[j] for j in range(position) if j not in picked)
        if (parities[position] * passed) % 2:
            sign = -sign
    return sign


def decalage_sign(degrees: Sequence[int]) -> int:
    """(-1)^(sum_i (n - i) p_i) for the unshifted degrees p_1..p_n.

    Examples:
        >>> decalage_sign([1, 0])
        -1
        >>> decalage_sign([0, 0])
        1
    """
    n = len(degrees)
    exponent = sum((n - i) * p for i, p in enumerate(degrees, start=1))
    return -1 if exponent % 2 else 1


def permutation_sign(parities: Sequence[int], order: Sequence[int]) -> int:
    """Koszul sign of rearranging letters into `order` (a list of original positions).

    Examples:
        >>> permutation_sign([1, 1, 0], [1, 0, 2])
        -1
        >>> permutation_sign([1, 1, 1], [2, 0, 1])
        1
    """
    sign = 1
    for a in range(len(order)):
        for b in range(a + 1, len(order)):
            if order[a] > order[b] and (parities[order[a]] * parities[order[b]]) % 2:
                sign = -sign
    return sign
