"""Potentials, radial problems and basis layouts."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

COULOMB_GAMMA_LIMIT = math.sqrt(3.0) / 2.0


class Variant(str, Enum):
    FREE = "free"
    COULOMB = "coulomb"
    SUBCOULOMB = "subcoulomb"
    INVERSE_HARMONIC = "invharm"


@dataclass(frozen=True)
class PotentialSpec:
    """Purely electric radial potential ``phi_el``.

    ``phi_sc`` and ``phi_am`` are carried only so that a potential can be printed
    in full; they are fixed at zero and nothing reads them.
    """

    variant: Variant
    gamma: float = 0.0
    beta: float = 1.0
    phi_sc: float = 0.0
    phi_am: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.phi_sc != 0.0 or self.phi_am != 0.0:
            raise ValueError("scalar and magnetic potentials are not supported")
        if not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite")
        v = self.variant
        if v is Variant.FREE and self.gamma != 0.0:
            raise ValueError("free potential has gamma = 0")
        if v is Variant.COULOMB and not abs(self.gamma) < COULOMB_GAMMA_LIMIT:
            raise ValueError(f"Coulomb coupling needs |gamma| < sqrt(3)/2, got {self.gamma}")
        if v is Variant.SUBCOULOMB:
            if not abs(self.gamma) < 1.0:
                raise ValueError(f"sub-Coulomb coupling needs |gamma| < 1, got {self.gamma}")
            # beta = 1 is admitted: it reproduces the Coulomb case through the sub-Coulomb kernels
            if not 0.0 < self.beta <= 1.0:
                raise ValueError(f"sub-Coulomb exponent needs 0 < beta <= 1, got {self.beta}")

    @classmethod
    def free(cls) -> PotentialSpec:
        return cls(Variant.FREE)

    @classmethod
    def coulomb(cls, gamma: float) -> PotentialSpec:
        return cls(Variant.COULOMB, gamma=gamma)

    @classmethod
    def subcoulomb(cls, gamma: float, beta: float) -> PotentialSpec:
        return cls(Variant.SUBCOULOMB, gamma=gamma, beta=beta)

    @classmethod
    def inverse_harmonic(cls, gamma: float) -> PotentialSpec:
        return cls(Variant.INVERSE_HARMONIC, gamma=gamma)

    @property
    def is_free(self) -> bool:
        return self.variant is Variant.FREE or self.gamma == 0.0

    def __call__(self, r: ArrayLike) -> NDArray[np.float64]:
        r = np.asarray(r, dtype=float)
        v = self.variant
        if v is Variant.FREE:
            return np.zeros_like(r)
        if v is Variant.COULOMB:
            return self.gamma / r
        if v is Variant.SUBCOULOMB:
            return self.gamma / r**self.beta
        return self.gamma / (1.0 + r * r)

    def label(self) -> str:
        v = self.variant
        if v is Variant.FREE:
            return "free"
        if v is Variant.SUBCOULOMB:
            return f"subcoulomb(gamma={self.gamma!r},beta={self.beta!r})"
        return f"{v.value}(gamma={self.gamma!r})"

    @classmethod
    def parse(cls, text: str) -> PotentialSpec:
        """Inverse of :meth:`label`."""
        text = text.strip()
        if text == "free":
            return cls.free()
        m = re.fullmatch(r"(\w+)\((.*)\)", text)
        if not m:
            raise ValueError(f"cannot parse potential {text!r}")
        args = {}
        for part in m.group(2).split(","):
            key, _, val = part.partition("=")
            args[key.strip()] = float(val)
        variant = Variant(m.group(1))
        return cls(variant, **args)


@dataclass(frozen=True)
class RadialProblem:
    kappa: int
    potential: PotentialSpec

    def __post_init__(self) -> None:
        if int(self.kappa) != self.kappa or self.kappa == 0:
            raise ValueError(f"kappa must be a non-zero integer, got {self.kappa}")
        object.__setattr__(self, "kappa", int(self.kappa))


@dataclass(frozen=True)
class BasisSpec:
    """``n_upper`` odd Hermite functions in the upper slot, then ``n_lower`` in the lower.

    Global index ``i < n_upper`` is ``(Phi_i, 0)``; ``i = n_upper + j`` is ``(0, Phi_j)``.
    """

    n_upper: int
    n_lower: int

    def __post_init__(self) -> None:
        if self.n_upper < 1 or self.n_lower < 1:
            raise ValueError("both spinor components need at least one basis function")

    @property
    def dim(self) -> int:
        return self.n_upper + self.n_lower

    @property
    def max_index(self) -> int:
        return max(self.n_upper, self.n_lower) - 1

    @classmethod
    def balanced(cls, n: int) -> BasisSpec:
        return cls(n, n)

    @classmethod
    def split(cls, dim: int, n_upper: int) -> BasisSpec:
        return cls(n_upper, dim - n_upper)
