from math import factorial
from typing import Union
import numpy as np

from inverse_erm.ext.error import ParityError, DomainViolationError, PreconditionError

ArrayLike = Union[float, np.ndarray]


def chebyshev_U(m: int, u: ArrayLike) -> ArrayLike:
    """
    Chebyshev polynomial of the second kind by the three-term recurrence
    U_0 = 1, U_1 = 2u, U_{m+1} = 2u U_m - U_{m-1}.
    """
    if m < 0:
        raise PreconditionError(f"Chebyshev degree must be nonnegative, got {m}")
    u_arr = np.asarray(u, dtype=float)
    if np.any(np.abs(u_arr) > 1.0):
        raise DomainViolationError("Chebyshev argument must lie in [-1, 1]")

    prev = np.ones_like(u_arr)
    if m == 0:
        return prev if u_arr.ndim else float(prev)
    curr = 2.0 * u_arr
    for _ in range(1, m):
        prev, curr = curr, 2.0 * u_arr * curr - prev
    return curr if u_arr.ndim else float(curr)


def zernike_radial(a: int, b: int, r: ArrayLike) -> ArrayLike:
    """
    Zernike radial polynomial R_a^b of degree a and order b:

        R_a^b(r) = sum_l (-1)^l (a-l)! / [l! ((a+b)/2 - l)! ((a-b)/2 - l)!] r^(a-2l)
    """
    if b < 0 or b > a:
        raise PreconditionError(f"Zernike order must satisfy 0 <= b <= a, got a={a}, b={b}")
    if (a - b) % 2:
        raise ParityError(f"Zernike degree and order must have equal parity, got a={a}, b={b}")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.0) or np.any(r_arr > 1.0):
        raise DomainViolationError("Zernike radius must lie in [0, 1]")

    total = np.zeros_like(r_arr)
    for l in range((a - b) // 2 + 1):
        coef = (-1) ** l * factorial(a - l) / (
            factorial(l) * factorial((a + b) // 2 - l) * factorial((a - b) // 2 - l)
        )
        total = total + coef * r_arr ** (a - 2 * l)
    return total if r_arr.ndim else float(total)
