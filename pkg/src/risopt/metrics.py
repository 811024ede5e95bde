"""Complex-multiplication accounting and closed-form complexity estimates.

Kernel accounting convention (fixed so counts are comparable across runs):

* LU factorization of an N x N matrix: ``N**3 // 3``
* one triangular solve: ``N**2 // 2`` (a full LU solve is two of them)
* inner product or elementwise product of length-N vectors: ``N``
* scalar complex multiplication: 1
"""

from __future__ import annotations

from dataclasses import dataclass, field

PHASES = ("factorization", "solves", "gradient", "objective")


@dataclass
class MultCounter:
    phases: dict[str, int] = field(default_factory=lambda: dict.fromkeys(PHASES, 0))

    def add(self, phase: str, count: int) -> None:
        self.phases[phase] += int(count)

    @property
    def total(self) -> int:
        return sum(self.phases.values())

    # kernel helpers
    def factorization(self, n: int) -> None:
        self.add("factorization", n**3 // 3)

    def lu_solve(self, n: int, nrhs: int = 1) -> None:
        self.add("solves", 2 * (n * n // 2) * nrhs)


def complexity_proposed(n: int, iterations: int, inner_loops: float) -> float:
    """Estimated complex multiplications of the projected-gradient method.

    ``inner_loops`` is the number of extra objective evaluations per
    iteration, i.e. the mean trial count of a trace minus one: the first
    trial is part of the ``3 N^3`` term.
    """
    if n < 1 or iterations < 1 or inner_loops < 0:
        raise ValueError("need n >= 1, iterations >= 1, inner_loops >= 0")
    n3 = float(n) ** 3
    return iterations * (3 * n3 + inner_loops * (n3 + float(n) ** 2))


def complexity_benchmark(n: int, iterations: int) -> float:
    if n < 1 or iterations < 1:
        raise ValueError("need n >= 1 and iterations >= 1")
    return iterations * (float(n) ** 3 + float(n) ** 2)


def counted_run(iset, init, cfg):
    """Run :func:`risopt.optimizer.optimize` and return ``(result, counter)``.

    ``result`` is the ``(load, trace)`` pair returned by ``optimize``.
    """
    from .optimizer import optimize

    counter = MultCounter()
    if cfg.max_outer_iters == 0:
        return (init, []), counter
    result = optimize(iset, init, cfg, counter=counter)
    return result, counter
