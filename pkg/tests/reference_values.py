"""Published reference values, transcribed for regression checks."""

# nominal component vector: loss1, loss3, lossx, p_tank (bar), hmt (m), debit (m^3/h)
NOMINAL = (4.5, 1.17, 10.35, 3.0, 229.0, 15.3)

# residual thresholds: p1..p4 (bar), flow (m^3/h)
DETECTION = (0.02, 0.02, 0.02, 0.02, 1.0)
VALIDATION = (0.01, 0.01, 0.01, 0.01, 1.0)

CLASS_LABELS = ("theta1", "theta2", "theta3", "theta4", "theta5&6")

# localization counts as printed: row labels classification, column labels truth
CONFUSION = (
    (5139, 2, 115, 0, 564),
    (0, 5702, 141, 0, 157),
    (9, 25, 5639, 0, 327),
    (0, 0, 0, 5699, 0),
    (17, 0, 379, 0, 11304),
)
THETA4_COLUMN = (0, 0, 0, 5699, 0)

# percentage matrix as printed alongside the counts
ACCURACY = (
    (88.30, 0.03, 1.98, 0.00, 9.69),
    (0.00, 95.03, 2.35, 0.00, 2.62),
    (0.15, 0.42, 93.98, 0.00, 5.45),
    (0.00, 0.00, 0.00, 100.00, 0.00),
    (0.15, 0.00, 3.24, 0.00, 96.62),
)
OVERALL_ACCURACY = 0.9514
