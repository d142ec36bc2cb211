"""Random expression text for parser and derivative tests.

Every generated expression is defined and smooth on ``[0.1, 2]^N``: divisors
and log arguments are of the form ``1 + (..)^2`` and exp arguments are
squashed to stay bounded.
"""
import numpy as np


def random_expression(rng, num_vars, depth=4):
    """Random expression text in ``u1 .. uN``."""
    if depth <= 0 or rng.random() < 0.2:
        if rng.random() < 0.55:
            return f"u{rng.integers(1, num_vars + 1)}"
        c = round(float(rng.uniform(-3, 3)), int(rng.integers(0, 4)))
        return f"({c})" if c < 0 else repr(c)
    sub = lambda: random_expression(rng, num_vars, depth - 1)
    kind = rng.integers(0, 9)
    if kind == 0:
        return f"{sub()} + {sub()}"
    if kind == 1:
        return f"{sub()} - ({sub()})"
    if kind == 2:
        return f"({sub()}) * ({sub()})"
    if kind == 3:
        return f"({sub()}) / (1 + ({sub()})^2)"
    if kind == 4:
        return f"({sub()})^{rng.integers(0, 4)}"
    if kind == 5:
        s = sub()
        return f"exp(({s}) / (1 + ({s})^2))"
    if kind == 6:
        return f"log(1 + ({sub()})^2)"
    if kind == 7:
        return f"-({sub()})"
    return f"(1 + ({sub()})^2)^(-1)"


def random_point(rng, num_vars):
    return tuple(float(v) for v in rng.uniform(0.1, 2.0, size=num_vars))


def central_difference(fn, point, var, rel_step=1e-5):
    """Fourth-order central difference of ``fn`` in coordinate ``var``."""
    h = rel_step * (1.0 + abs(point[var]))

    def at(t):
        p = list(point)
        p[var] += t
        return float(fn(*p))

    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h)


def derivative_agrees(sym, fd, rel=1e-6):
    """``|sym - fd| <= rel * max(1, |sym|)``."""
    return abs(sym - fd) <= rel * max(1.0, abs(sym))


def check_random_ast(rng, num_vars, depth=4):
    """One randomized trial: returns ``(text, worst_derivative_error, roundtrip_ok)``."""
    from competition.expr import differentiate, parse, to_text

    text = random_expression(rng, num_vars, depth)
    e = parse(text, num_vars)
    pts = [random_point(rng, num_vars) for _ in range(3)]
    worst = 0.0
    for p in pts:
        for var in range(num_vars):
            sym = float(differentiate(e, var)(*p))
            fd = central_difference(e, p, var)
            worst = max(worst, abs(sym - fd) / max(1.0, abs(sym)))
    again = parse(to_text(e), num_vars)
    arr = tuple(np.array([p[k] for p in pts]) for k in range(num_vars))
    roundtrip = bool(np.array_equal(e(*arr), again(*arr)))
    return text, worst, roundtrip
