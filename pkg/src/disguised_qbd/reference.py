"""Printed reference values for the worked example and the parameter tables.

The worked example (lambda_c=1, mu=2, lambda_s=3, mu_s=4) comes with printed
blocks, a printed ``R`` and printed stationary values.  The printed blocks
do not all follow the transition rules (some rows do not sum to zero), and
the printed ``R`` is diagonal, equal to ``-lambda_c * diag(A2^-1)``: the
first step of the fixed-point iteration with elementwise instead of matrix
products.  It is not a fixed point.

:func:`deviation_report` puts the printed numbers next to the correct ones
and next to a reconstruction that feeds the printed blocks and printed
``R`` through the same boundary solve and closed forms; the reconstruction
reproduces the printed values, which pins every gap on those inputs.
"""

import numpy as np

from . import metrics as _metrics
from .linalg import inverse, solve_linear
from .model import ModelParams, build_blocks
from .qbd import solve
from .stability import ergodicity

EXAMPLE = ModelParams.constant(lambda_c=1.0, mu=2.0, lambda_s=3.0, mu_s=4.0)
UNSTABLE_EXAMPLE = ModelParams.constant(lambda_c=2.0, mu=1.0, lambda_s=1.0, mu_s=2.0)

PRINTED_THRESHOLD = 1.149
PRINTED_UNSTABLE_THRESHOLD = 11 / 15
PRINTED_PI_A = (0.366, 0.274, 0.206, 0.154)

PRINTED = {
    "pi0": (0.6557041, 0.1519753),
    "pi1": (0.052086275, 0.052086275, 0.005271742),
    "pi2": (0.030662973, 0.017641404, 0.006589678, 0.004503371),
    "expected_total_length": 0.576480174113887,
    "expected_wait": 0.576480174113887,
    "expected_customers_waiting": 0.206882719667415,
    "delay_probability": 0.182545493796219,
}

PRINTED_R = np.diag([0.3771186, 0.1694915, 0.1087571, 0.1016949])

PRINTED_BLOCKS = {
    "B00": np.array([[-1.0, 1], [4, -5]]),
    "B01": np.array([[0.0, 0, 0], [0, 1, 0]]),
    "B10": np.array([[1.0, 0], [0, 2], [0, 0]]),
    "B11": np.array([[-4.0, 3, 0], [4, -7, 0], [0, 4, -5]]),
    "B12": np.eye(3, 4),
    "B21": np.array([[0.0, 0, 0], [0, 2, 0], [0, 0, 4], [0, 0, 0]]),
    "B22": np.array([[-4.0, 3, 0, 0], [4, -10, 3, 0], [0, 4, -12, 3], [0, 0, 4, -5]]),
    "A0": np.diag([0.0, 2, 4, 6]),
    "A1": np.eye(4),
    "A2": np.array([[-4.0, 3, 0, 0], [4, -10, 3, 0], [0, 4, -12, 3], [0, 0, 4, -11]]),
}

# (lambda_c, lambda_s, mu, mu_s, E(L), E(Ln), E(W), Pi_w)
TABLE = (
    (1, 2, 1, 1, 2.609, 0.287, 2.609, 0.399),
    (1, 2, 1, 2, 1.533, 0.426, 1.533, 0.375),
    (1, 2, 1, 3, 1.166, 0.498, 1.166, 0.339),
    (1, 2, 2, 1, 1.478, 0.204, 1.478, 0.282),
    (1, 2, 2, 2, 0.894, 0.270, 0.894, 0.250),
    (1, 2, 2, 3, 0.710, 0.302, 0.710, 0.225),
    (1, 2, 3, 1, 1.042, 0.150, 1.042, 0.213),
    (1, 2, 3, 2, 0.669, 0.193, 0.669, 0.186),
    (1, 2, 3, 3, 0.543, 0.214, 0.543, 0.168),
    (2, 1, 1, 1, 4.474, 0.756, 0.378, 0.557),
    (2, 1, 1, 2, 4.055, 1.627, 0.813, 0.657),
    (2, 1, 1, 3, 4.152, 2.450, 1.250, 0.713),
    (2, 1, 2, 1, 3.559, 0.764, 0.382, 0.490),
    (2, 1, 2, 2, 3.211, 1.493, 0.747, 0.579),
    (2, 1, 2, 3, 3.282, 2.096, 1.048, 0.621),
    (2, 1, 3, 1, 2.934, 0.732, 0.366, 0.440),
    (2, 1, 3, 2, 2.658, 1.311, 0.655, 0.509),
    (2, 1, 3, 3, 2.709, 1.757, 0.879, 0.543),
)

TABLE_COLUMNS = ("lambda_c", "lambda_s", "mu", "mu_s", "E_L", "E_Ln", "E_W", "Pi_w")


def table_rows(lambda_c=None):
    rows = [dict(zip(TABLE_COLUMNS, r)) for r in TABLE]
    if lambda_c is not None:
        rows = [r for r in rows if r["lambda_c"] == lambda_c]
    return rows


def elementwise_first_iterate(A1, A2):
    """``-(A1 * A2^-1)`` with an elementwise product: what the printed ``R`` equals."""
    return -(A1 * inverse(A2))


def _run_pipeline(blocks, R, lambda_c):
    """Boundary solve, normalisation and closed forms on arbitrary (K=3) inputs."""
    z = np.zeros
    M = np.block([
        [blocks["B00"], blocks["B01"], z((2, 4))],
        [blocks["B10"], blocks["B11"], blocks["B12"]],
        [z((4, 2)), blocks["B21"], blocks["B22"] + R @ blocks["A0"]],
    ])
    Mt = M.T
    x = solve_linear(Mt[1:, 1:], -Mt[1:, 0])
    pi = np.concatenate([[1.0], x])
    parts = (pi[:2], pi[2:5], pi[5:])
    N = inverse(np.eye(4) - R)
    alpha = parts[0].sum() + parts[1].sum() + parts[2] @ N @ np.ones(4)
    parts = tuple(p / alpha for p in parts)

    class _SS:  # duck-typed stand-in for SteadyState
        boundary = parts
        last = parts[2]
        K = 3

        def level(self, n):
            return parts[n] if n < 3 else parts[2] @ np.linalg.matrix_power(R, n - 2)

    ss = _SS()
    ss.R = R
    waiting = _metrics.expected_customers_waiting(ss)
    return {
        "pi0": parts[0],
        "pi1": parts[1],
        "pi2": parts[2],
        "expected_total_length": _metrics.expected_total_length(ss),
        "expected_customers_waiting": waiting,
        "expected_wait": waiting / lambda_c,
        "delay_probability": _metrics.delay_probability(ss),
    }


def reconstruct_printed():
    """Values obtained from the printed blocks and the printed ``R``."""
    return _run_pipeline(PRINTED_BLOCKS, PRINTED_R, EXAMPLE.lambda_c)


def block_discrepancies(params=EXAMPLE):
    """Entries where the printed blocks differ from the rule-based ones."""
    blocks = build_blocks(params)
    out = []
    for name, printed in PRINTED_BLOCKS.items():
        ours = getattr(blocks, name)
        for i, j in zip(*np.nonzero(np.abs(ours - printed) > 1e-12)):
            out.append((name, int(i), int(j), float(printed[i, j]), float(ours[i, j])))
    return out


def printed_row_sums():
    """Row sums of the generator assembled from the printed blocks (levels 0-3)."""
    b = PRINTED_BLOCKS
    z = np.zeros
    rows = np.block([
        [b["B00"], b["B01"], z((2, 4)), z((2, 4))],
        [b["B10"], b["B11"], b["B12"], z((3, 4))],
        [z((4, 2)), b["B21"], b["B22"], b["A1"]],
        [z((4, 2)), z((4, 3)), b["A0"], b["A2"]],
    ]).sum(axis=1)
    # the level-3 rows also have an A1 block to level 4
    rows[9:] += 1.0
    return rows


def deviation_report(tol=2e-2):
    """Compare printed, computed and reconstructed values for the worked example."""
    ss = solve(EXAMPLE)
    m = _metrics.compute(ss, EXAMPLE)
    computed = {
        "pi0": ss.pi0,
        "pi1": ss.pi1,
        "pi2": ss.pi2,
        "expected_total_length": m.expected_total_length,
        "expected_customers_waiting": m.expected_customers_waiting,
        "expected_wait": m.expected_wait,
        "delay_probability": m.delay_probability,
    }
    recon = reconstruct_printed()
    rows = []
    for key, printed in PRINTED.items():
        p = np.atleast_1d(np.asarray(printed, dtype=float))
        c = np.atleast_1d(computed[key])
        r = np.atleast_1d(recon[key])
        for i in range(p.size):
            label = key if p.size == 1 else f"{key}[{i}]"
            gap = abs(c[i] - p[i])
            rows.append({
                "quantity": label,
                "printed": float(p[i]),
                "computed": float(c[i]),
                "gap": float(gap),
                "within_tol": bool(gap <= tol),
                "reconstructed": float(r[i]),
                "reconstruction_gap": float(abs(r[i] - p[i])),
            })

    blocks = build_blocks(EXAMPLE)
    first = elementwise_first_iterate(blocks.A1, PRINTED_BLOCKS["A2"])
    R_res = PRINTED_R @ PRINTED_R @ blocks.A0 + PRINTED_R @ blocks.A_repeat + blocks.A1
    return {
        "tolerance": tol,
        "rows": rows,
        "block_discrepancies": block_discrepancies(),
        "printed_row_sums": printed_row_sums().tolist(),
        "printed_R_vs_elementwise_first_iterate": float(np.max(np.abs(first - PRINTED_R))),
        "printed_R_fixed_point_residual": float(np.max(np.abs(R_res).sum(axis=1))),
        "computed_R": ss.R.tolist(),
        "computed_R_residual": ss.r_residual,
        "stability": ergodicity(EXAMPLE).as_dict(),
    }


def render_markdown(report):
    lines = [
        "# Worked example (lambda_c=1, mu=2, lambda_s=3, mu_s=4): deviations",
        "",
        f"Soft tolerance: {report['tolerance']:g} absolute.",
        "",
        "| quantity | printed | computed | gap | within tol | reconstructed | recon gap |",
        "|---|---|---|---|---|---|---|",
    ]
    for r in report["rows"]:
        lines.append(
            f"| {r['quantity']} | {r['printed']:.9g} | {r['computed']:.9g} | {r['gap']:.3g} | "
            f"{'yes' if r['within_tol'] else 'NO'} | {r['reconstructed']:.9g} | {r['reconstruction_gap']:.2g} |"
        )
    lines += [
        "",
        "## Where the gaps come from",
        "",
        "The reconstruction column feeds the printed blocks and the printed R through the",
        "same boundary solve, normalisation and closed-form metrics used by the solver.",
        "It reproduces the printed values, so every gap traces to those two inputs:",
        "",
        "1. Printed blocks that disagree with the transition rules "
        "(printed value -> rule-based value):",
    ]
    for name, i, j, p, o in report["block_discrepancies"]:
        lines.append(f"   - {name}[{i},{j}]: {p:g} -> {o:g}")
    sums = ", ".join(f"{s:g}" for s in report["printed_row_sums"])
    lines += [
        f"   - row sums of the generator built from the printed blocks (levels 0-3): {sums}",
        "     (a generator needs all zeros).",
        "2. The printed R is diagonal and equals -lambda_c * diag(A2^-1), the first step of",
        "   the iteration done with elementwise products "
        f"(max difference {report['printed_R_vs_elementwise_first_iterate']:.2g}).",
        "   It does not solve R^2 A0 + R A2 + A1 = 0: residual "
        f"{report['printed_R_fixed_point_residual']:.3g} (converged R: {report['computed_R_residual']:.2g}).",
        "3. The printed E(W) equals the printed E(L); E(W) here is E(Ln) / lambda_c.",
        "",
        "The computed column is cross-checked against the truncated direct solve to 1e-8.",
        "",
    ]
    return "\n".join(lines)
