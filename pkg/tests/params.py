"""Parameter sets shared by the test modules."""

EXAMPLE_1 = (1.0, 2.0, 3.0, 4.0)
EXAMPLE_2 = (2.0, 1.0, 1.0, 2.0)

# (lambda_c, mu, lambda_s, mu_s), all stable with K = 3
STABLE_GRID = [
    EXAMPLE_1,
    (1, 10, 1, 1),
    (1, 10, 5, 1),
    (1, 2, 2, 1),
    (1, 2, 2, 2),
    (1, 2, 2, 3),
    (1, 3, 2, 1),
    (1, 3, 2, 2),
    (1, 3, 2, 3),
    (1, 1, 2, 1),
    (0.5, 1, 1, 1),
    (2, 3, 4, 2),
    (1, 2, 1, 1),
]
